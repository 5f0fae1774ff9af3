// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <vector>

#include "mbnf/simd.hpp"

namespace mbnf::simd::detail {

namespace {

constexpr std::size_t kLanes = 4;

}  // namespace

void eval_batch_avx2(const TermTable& table, const PointBatch& points, std::span<double> out) {
  const std::size_t width = table.max_exponent + 1;
  // Power table laid out [var][exponent][lane] so each term reads four
  // contiguous lanes per variable.
  std::vector<double> pw(4 * width * kLanes + kLanes);
  double* base = pw.data();
  const std::span<const double> xs[4] = {points.x0, points.x1, points.x2, points.x3};
  const std::size_t n = points.size();
  const std::size_t full = n - n % kLanes;

  for (std::size_t i = 0; i < full; i += kLanes) {
    for (int v = 0; v < 4; ++v) {
      double* row = base + v * width * kLanes;
      const __m256d x = _mm256_loadu_pd(xs[v].data() + i);
      __m256d p = _mm256_set1_pd(1.0);
      _mm256_storeu_pd(row, p);
      for (std::size_t e = 1; e < width; ++e) {
        p = _mm256_mul_pd(p, x);
        _mm256_storeu_pd(row + e * kLanes, p);
      }
    }
    const double* p0 = base;
    const double* p1 = p0 + width * kLanes;
    const double* p2 = p1 + width * kLanes;
    const double* p3 = p2 + width * kLanes;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < table.size(); ++j) {
      __m256d t = _mm256_mul_pd(_mm256_set1_pd(table.coeff[j]), _mm256_loadu_pd(p0 + table.e0[j] * kLanes));
      t = _mm256_mul_pd(t, _mm256_loadu_pd(p1 + table.e1[j] * kLanes));
      t = _mm256_mul_pd(t, _mm256_loadu_pd(p2 + table.e2[j] * kLanes));
      acc = _mm256_fmadd_pd(t, _mm256_loadu_pd(p3 + table.e3[j] * kLanes), acc);
    }
    _mm256_storeu_pd(out.data() + i, acc);
  }

  if (full < n) {
    const PointBatch tail{points.x0.subspan(full), points.x1.subspan(full), points.x2.subspan(full),
                          points.x3.subspan(full)};
    eval_batch_scalar(table, tail, out.subspan(full));
  }
}

}  // namespace mbnf::simd::detail
