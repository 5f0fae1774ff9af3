#include <cmath>
#include <map>

#include "doctest.h"
#include "mbnf/analysis.hpp"
#include "mbnf/errors.hpp"

using namespace mbnf;

namespace {
const PotentialSpec& model() {
  static const PotentialSpec v = build_builtin_model();
  return v;
}

const NormalizationState& nonres(int r, int trunc) {
  static std::map<std::pair<int, int>, NormalizationState> cache;
  auto key = std::make_pair(r, trunc);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, normalize(complexify_nonresonant(model(), trunc), r, trunc)).first;
  return it->second;
}

// Direct term-by-term sum of the weighted remainder coefficients up to order N.
double direct_norm(const NormalizationState& s, int N, double I, double beta, double Y) {
  double sum = 0;
  s.remainder().for_each([&](const GradedTerm& t) {
    if (t.bk > N) return;
    sum += std::abs(t.coeff) * std::pow(I, (t.key.k1 + t.key.l1) / 2.0) * std::pow(std::abs(beta), t.key.k2) *
           std::pow(Y, (t.key.k2 + t.key.l2) / 2.0);
  });
  return sum;
}
}  // namespace

TEST_CASE("power series helpers") {
  const std::vector<double> c{1.0, -2.0, 0.5};
  CHECK(eval_series(c, 2.0) == doctest::Approx(1 - 4 + 2));
  CHECK(eval_series_derivative(c, 2.0) == doctest::Approx(-2 + 2));
  CHECK(eval_series({}, 3.0) == 0.0);
}

TEST_CASE("least squares") {
  const std::vector<double> x{0, 1, 2, 3, 4};
  std::vector<double> y;
  for (double v : x) y.push_back(1.5 - 0.25 * v);
  auto f = least_squares(x, y);
  CHECK(f.slope == doctest::Approx(-0.25).epsilon(1e-14));
  CHECK(f.intercept == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(f.rms_residual < 1e-14);
  CHECK(f.points == 5);
  y[2] += 0.1;
  f = least_squares(x, y);
  CHECK(f.rms_residual > 0.01);
}

TEST_CASE("log grid") {
  const auto g = log_grid(1e-5, 1e-2, 5);
  CHECK(g.size() == 16);
  CHECK(g.front() == doctest::Approx(1e-5));
  CHECK(g.back() == doctest::Approx(1e-2));
  CHECK(g[5] == doctest::Approx(1e-4));
  CHECK_THROWS_AS(log_grid(0.0, 1.0, 5), RangeError);
}

TEST_CASE("remainder norm") {
  const auto& s = nonres(4, 10);
  const auto w2 = extract_omega2_squared(s);
  const double E = 0.2;

  SUBCASE("direct sum oracle") {
    for (double beta : {0.0, 0.7})
      for (double dE : {0.0, 1e-4, 1e-2}) {
        const double I = E - dE;
        const double Y = 2 * dE / (1 + beta * beta * eval_series(w2, I));
        for (int N : {5, 7, 10})
          CHECK(remainder_norm(s, 4, N, {E, dE, beta}) == doctest::Approx(direct_norm(s, N, I, beta, Y)).epsilon(1e-12));
      }
  }
  SUBCASE("delta E = 0 keeps only the pure-action terms") {
    double pure = 0;
    s.remainder().for_each([&](const GradedTerm& t) {
      if (t.key.k2 + t.key.l2 == 0) pure += std::abs(t.coeff) * std::pow(E, (t.key.k1 + t.key.l1) / 2.0);
    });
    CHECK(remainder_norm(s, 4, 10, {E, 0.0, 0.0}) == doctest::Approx(pure).epsilon(1e-13));
  }
  SUBCASE("nondecreasing in N and consistent with the pointwise call") {
    const std::vector<double> dE{1e-5, 1e-3, 1e-1};
    const auto rows = remainder_norm_rows(s, E, 0.3, dE);
    std::map<double, double> last;
    for (const auto& row : rows) {
      CHECK(row.norm >= 0);
      CHECK(row.norm >= last[row.delta_E]);
      last[row.delta_E] = row.norm;
      CHECK(row.norm == doctest::Approx(remainder_norm(s, 4, row.N, {E, row.delta_E, 0.3})).epsilon(1e-14));
    }
    CHECK(rows.size() == 6 * dE.size());
  }
  SUBCASE("argument checks") {
    CHECK_THROWS_AS(remainder_norm(s, 4, 4, {E, 1e-3, 0}), RangeError);
    CHECK_THROWS_AS(remainder_norm(s, 4, 11, {E, 1e-3, 0}), RangeError);
    CHECK_THROWS_AS(remainder_norm(s, 3, 6, {E, 1e-3, 0}), RangeError);
    CHECK_THROWS_AS(remainder_norm(s, 4, 6, {E, E, 0}), RangeError);
    CHECK_THROWS_AS(remainder_norm(s, 4, 6, {E, -1e-3, 0}), RangeError);
  }
}

TEST_CASE("asymptotic fits on synthetic curves") {
  // norm(r) = exp(-(dE0/dE)^d) (1 + (r - r*)^2) with r* = round(c dE^-alpha).
  const double alpha = 0.15, d = 0.12, dE0 = 1e-3, c = 1.0;
  const auto grid = log_grid(1e-8, 1e-3, 4);
  std::vector<NormRow> rows;
  for (double dE : grid) {
    const int rs = int(std::lround(c * std::pow(dE, -alpha)));
    for (int r = 1; r <= 30; ++r)
      rows.push_back({r, 40, dE, std::exp(-std::pow(dE0 / dE, d)) * (1 + (r - rs) * (r - rs))});
  }
  const auto fit = fit_asymptotics(rows, 40, grid, 30, {});
  REQUIRE(fit.alpha);
  REQUIRE(fit.d);
  REQUIRE(fit.delta_E0);
  CHECK(*fit.alpha == doctest::Approx(alpha).epsilon(0.1));
  CHECK(*fit.d == doctest::Approx(d).epsilon(1e-10));
  CHECK(*fit.delta_E0 == doctest::Approx(dE0).epsilon(1e-8));
  CHECK(fit.exponential.rms_residual < 1e-10);
  CHECK(fit.warnings.empty());
  for (std::size_t i = 1; i < fit.r_opt.size(); ++i) CHECK(fit.r_opt[i] <= fit.r_opt[i - 1]);

  // A minimum at the boundary of the scanned orders is flagged.
  std::vector<NormRow> edge;
  for (int r = 1; r <= 5; ++r) edge.push_back({r, 6, 1e-3, 1.0 / r});
  const auto flat = fit_asymptotics(edge, 6, {1e-3}, 5, {});
  REQUIRE(flat.warnings.size() == 1);
  CHECK(flat.warnings[0].name == "FlatMinimumWarning");
}

TEST_CASE("normal-form bifurcation energies at r = 8") {
  const auto& s = nonres(8, 8);
  const double ec = critical_energy(model());
  const auto b13 = bifurcation_energy(s, 3, 1, ec);
  const auto b12 = bifurcation_energy(s, 2, 1, ec);
  const auto b14 = bifurcation_energy(s, 4, 1, ec);
  const auto b11 = bifurcation_energy(s, 1, 1, ec);
  CHECK(std::abs(b13.energy - 0.097279) < 2e-5);
  CHECK(std::abs(b12.energy - 0.188036) < 2e-5);
  CHECK(b14.energy < b13.energy);
  CHECK(b12.energy < b11.energy);
  // At the root the frequency ratio is the resonance and E = Z(I*).
  CHECK(b12.omega2_star / b12.omega1_star == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(b13.omega2_star / b13.omega1_star == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(b12.I1_star < action_bound(s, ec));
  CHECK(b12.resonance().m1 == 2);

  CHECK_THROWS_AS(bifurcation_energy(s, 1, 100, ec), NoRootError);
  CHECK_THROWS_AS(bifurcation_energy(s, 0, 1, ec), RangeError);
  CHECK_THROWS_AS(bifurcation_energy(nonres(1, 1), 2, 1, ec), RangeError);
}

TEST_CASE("chaos threshold estimate at r = 10") {
  const double numeric = 0.36688;
  const auto rows = chaos_threshold_convergence(complexify_nonresonant(model(), 10), 8, 10, critical_energy(model()), numeric);
  REQUIRE(rows.size() == 3);
  CHECK(rows.back().r == 10);
  CHECK(std::abs(rows.back().energy - 0.39550) < 5e-4);
  CHECK(rows.back().error == doctest::Approx(rows.back().energy - numeric));
  CHECK_THROWS_AS(chaos_threshold_convergence(complexify_nonresonant(model(), 4), 1, 4, 0.5, numeric), RangeError);
}

TEST_CASE("optimal order scan") {
  const auto grid = log_grid(1e-4, 1e-2, 2);
  const auto scan = optimal_order_scan(complexify_nonresonant(model(), 12), 11, 12, 0.2, 0.0, grid);
  CHECK(scan.rows.size() == 66 * grid.size());  // N = r+1..12 for r = 1..11
  CHECK(scan.fit.r_opt.size() == grid.size());
  for (std::size_t i = 1; i < scan.fit.r_opt.size(); ++i) CHECK(scan.fit.r_opt[i] <= scan.fit.r_opt[i - 1]);
  CHECK_THROWS_AS(optimal_order_scan(complexify_nonresonant(model(), 5), 5, 5, 0.2, 0.0, grid), RangeError);
  CHECK_THROWS_AS(optimal_order_scan(complexify_nonresonant(model(), 5), 3, 5, 0.2, 0.0, {0.3}), RangeError);
}
