#pragma once

// Batch evaluation of real polynomials in four variables over many points.
// A scalar reference kernel and an AVX2 kernel share one contract; the
// active variant is picked at runtime from the CPU features (override with
// MBNF_SIMD=scalar).

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace mbnf::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;
bool isa_available(Isa isa) noexcept;
Isa active_isa() noexcept;

/// Terms sum_j coeff_j * x0^e0_j * x1^e1_j * x2^e2_j * x3^e3_j, stored SoA.
struct TermTable {
  std::vector<std::uint8_t> e0, e1, e2, e3;
  std::vector<double> coeff;
  int max_exponent = 0;

  std::size_t size() const noexcept { return coeff.size(); }
  void push(int a, int b, int c, int d, double value);
};

/// Structure-of-arrays point batch; all four spans share one length.
struct PointBatch {
  std::span<const double> x0, x1, x2, x3;
  std::size_t size() const noexcept { return x0.size(); }
};

void eval_batch(const TermTable& table, const PointBatch& points, std::span<double> out,
                Isa isa = active_isa());

namespace detail {
void eval_batch_scalar(const TermTable& table, const PointBatch& points, std::span<double> out);
#if defined(MBNF_HAVE_AVX2)
void eval_batch_avx2(const TermTable& table, const PointBatch& points, std::span<double> out);
#endif
}  // namespace detail

}  // namespace mbnf::simd
