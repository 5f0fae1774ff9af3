#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "mbnf/simd.hpp"

namespace mbnf::simd {

void TermTable::push(int a, int b, int c, int d, double value) {
  if (std::min({a, b, c, d}) < 0 || std::max({a, b, c, d}) > 255)
    throw std::invalid_argument("term exponent out of range");
  e0.push_back(std::uint8_t(a));
  e1.push_back(std::uint8_t(b));
  e2.push_back(std::uint8_t(c));
  e3.push_back(std::uint8_t(d));
  coeff.push_back(value);
  max_exponent = std::max({max_exponent, a, b, c, d});
}

std::string_view isa_name(Isa isa) noexcept { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) noexcept {
  if (isa == Isa::scalar) return true;
#if defined(MBNF_HAVE_AVX2)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active_isa() noexcept {
  static const Isa chosen = [] {
    const char* env = std::getenv("MBNF_SIMD");
    if (env && std::string(env) == "scalar") return Isa::scalar;
    return isa_available(Isa::avx2) ? Isa::avx2 : Isa::scalar;
  }();
  return chosen;
}

void eval_batch(const TermTable& table, const PointBatch& points, std::span<double> out, Isa isa) {
  const std::size_t n = points.size();
  if (points.x1.size() != n || points.x2.size() != n || points.x3.size() != n || out.size() != n)
    throw std::invalid_argument("eval_batch: mismatched batch lengths");
#if defined(MBNF_HAVE_AVX2)
  if (isa == Isa::avx2 && isa_available(Isa::avx2)) {
    detail::eval_batch_avx2(table, points, out);
    return;
  }
#endif
  (void)isa;
  detail::eval_batch_scalar(table, points, out);
}

}  // namespace mbnf::simd
