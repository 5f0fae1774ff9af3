#include <vector>

#include "mbnf/simd.hpp"

namespace mbnf::simd::detail {

void eval_batch_scalar(const TermTable& table, const PointBatch& points, std::span<double> out) {
  const int width = table.max_exponent + 1;
  std::vector<double> pw(4 * static_cast<std::size_t>(width));
  const std::span<const double> xs[4] = {points.x0, points.x1, points.x2, points.x3};
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int v = 0; v < 4; ++v) {
      double* row = pw.data() + v * width;
      row[0] = 1.0;
      for (int e = 1; e < width; ++e) row[e] = row[e - 1] * xs[v][i];
    }
    const double* p0 = pw.data();
    const double* p1 = p0 + width;
    const double* p2 = p1 + width;
    const double* p3 = p2 + width;
    double acc = 0.0;
    for (std::size_t j = 0; j < table.size(); ++j)
      acc += table.coeff[j] * p0[table.e0[j]] * p1[table.e1[j]] * p2[table.e2[j]] * p3[table.e3[j]];
    out[i] = acc;
  }
}

}  // namespace mbnf::simd::detail
