#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "doctest.h"
#include "mbnf/analysis.hpp"
#include "mbnf/dynamics.hpp"
#include "mbnf/errors.hpp"
#include "mbnf/invariants.hpp"

using namespace mbnf;

namespace {
const PotentialSpec& model() {
  static const PotentialSpec v = build_builtin_model();
  return v;
}

const NormalizationState& nonres(int r) {
  static std::map<int, NormalizationState> cache;
  auto it = cache.find(r);
  if (it == cache.end()) it = cache.emplace(r, normalize(complexify_nonresonant(model(), r), r, r)).first;
  return it->second;
}

ResonanceSpec resonance(int m1, int m2) {
  return bifurcation_energy(nonres(8), m1, m2, critical_energy(model())).resonance();
}

NormalizationState resonant(int m1, int m2, int r) {
  return normalize(prepare_resonant(model(), resonance(m1, m2), r), r, r);
}

// Largest angular gap (radians) of the crossings in the scaled (z, p_z) plane.
double largest_angular_gap(const SectionSet& s, double pz_scale) {
  std::vector<double> a;
  for (const auto& c : s.crossings) a.push_back(std::atan2(c.p_z * pz_scale, c.z));
  std::sort(a.begin(), a.end());
  double gap = a.front() + 2 * std::numbers::pi - a.back();
  for (std::size_t i = 1; i < a.size(); ++i) gap = std::max(gap, a[i] - a[i - 1]);
  return gap;
}

std::size_t islands_at(const FormalIntegral& phi, double E, std::array<double, 2> seed) {
  SectionFunction f(phi, model(), E);
  return count_islands(section_levels(f, GridSpec{}, {seed})).size();
}
}  // namespace

TEST_CASE("leading term of the nonresonant integral") {
  const auto phi = back_transform(nonres(1));
  CHECK(phi.order == 1);
  CHECK(phi.mode == Mode::nonresonant);
  CHECK(phi.phi.coeff_any_order(make_key(2, 0, 0, 0)).real() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(phi.phi.coeff_any_order(make_key(0, 2, 0, 0)).real() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(phi.phi.coeff_any_order(make_key(1, 1, 0, 0))) < 1e-14);
  phi.phi.for_each([](const GradedTerm& t) {
    if (t.key.degree() == 2) CHECK(t.key.k2 + t.key.l2 == 0);
  });
  // On the equatorial plane the quadratic part dominates near the origin.
  const double rho = 1e-3, prho = 2e-3;
  CHECK(phi(rho, prho, 0, 0) == doctest::Approx((rho * rho + prho * prho) / 2).epsilon(1e-5));
}

TEST_CASE("resonant integral starts at the resonant combination") {
  const auto res = resonance(2, 1);
  const auto phi = back_transform(resonant(2, 1, 1));
  CHECK(phi.m1 == 2);
  CHECK(phi.m2 == 1);
  // i(m1 q1p1 + m2 q2p2) = m1 (rho^2 + p_rho^2)/2 + m2 (w2 z^2 + p_z^2/w2)/2
  const double w2 = res.omega2_star;
  const auto base = phi.phi.slice(0, 0);
  CHECK(base.size() == 4);
  CHECK(base.coeff(make_key(2, 0, 0, 0), 0).real() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(base.coeff(make_key(0, 2, 0, 0), 0).real() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(base.coeff(make_key(0, 0, 2, 0), 0).real() == doctest::Approx(w2 / 2).epsilon(1e-13));
  CHECK(base.coeff(make_key(0, 0, 0, 2), 0).real() == doctest::Approx(0.5 / w2).epsilon(1e-13));
}

TEST_CASE("integral is even under the full sign flip") {
  for (int r : {2, 5}) {
    const auto phi = back_transform(nonres(r));
    phi.phi.for_each([](const GradedTerm& t) { CHECK(t.key.degree() % 2 == 0); });
    CHECK(phi(0.3, -0.2, 0.4, 0.1) == doctest::Approx(phi(-0.3, 0.2, -0.4, -0.1)).epsilon(1e-14));
  }
}

TEST_CASE("canonical integral commutes with the prepared Hamiltonian to its order") {
  for (int r : {3, 6}) {
    const auto prepared = complexify_nonresonant(model(), r);
    const auto state = normalize(prepared, r, r);
    const auto phi = formal_integral_canonical(state);
    CHECK(max_abs_coeff(poisson_bracket(prepared.H, phi).slice(0, r)) < 1e-11 * max_abs_coeff(phi));
    // The neglected orders do not vanish, so the check is not vacuous.
    const auto longer = complexify_nonresonant(model(), r + 1);
    CHECK(max_abs_coeff(poisson_bracket(longer.H, phi.with_trunc(r + 1)).slice(r + 1, r + 1)) > 1e-6);
  }
  const auto state = resonant(2, 1, 4);
  const auto prepared = prepare_resonant(model(), *state.resonance, 4);
  const auto phi = formal_integral_canonical(state);
  CHECK(max_abs_coeff(poisson_bracket(prepared.H, phi).slice(0, 4)) < 1e-11 * max_abs_coeff(phi));
}

TEST_CASE("section function") {
  const auto phi = back_transform(nonres(5));
  const double E = 0.1;
  SectionFunction f(phi, model(), E);

  SUBCASE("even in p_z") {
    for (double z : {-0.4, 0.0, 0.25})
      for (double pz : {0.05, 0.2}) CHECK(f(z, pz) == doctest::Approx(f(z, -pz)).epsilon(1e-13));
  }
  SUBCASE("center value") {
    CHECK(f(0, 0) == doctest::Approx(phi(0, std::sqrt(2 * E), 0, 0)).epsilon(1e-15));
  }
  SUBCASE("allowed region") {
    CHECK_FALSE(f.p_rho(0.0, 0.5).has_value());
    CHECK_THROWS_AS(f(0.0, 0.5), SeedOutsideCZVError);
  }
  SUBCASE("gradient against central differences") {
    const double z = 0.3, pz = 0.1, h = 1e-6;
    const auto g = f.gradient(z, pz);
    CHECK(g[0] == doctest::Approx((f(z + h, pz) - f(z - h, pz)) / (2 * h)).epsilon(1e-6));
    CHECK(g[1] == doctest::Approx((f(z, pz + h) - f(z, pz - h)) / (2 * h)).epsilon(1e-6));
  }
  SUBCASE("batched evaluation matches pointwise") {
    std::vector<double> z{-0.5, 0.0, 0.2, 0.7, 0.1}, pz{0.1, 0.0, -0.3, 0.05, 0.9}, out(5);
    f.evaluate(z, pz, out);
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (f.p_rho(z[i], pz[i]))
        CHECK(out[i] == doctest::Approx(f(z[i], pz[i])).epsilon(1e-12));
      else
        CHECK(std::isnan(out[i]));
    }
  }
}

TEST_CASE("section levels") {
  const auto phi = back_transform(nonres(5));
  SectionFunction f(phi, model(), 0.1);
  GridSpec spec;
  spec.nz = 41;
  spec.npz = 31;
  const auto one = section_levels(f, spec, {{0.0, 0.0}, {0.2, 0.05}}, 1);
  const auto many = section_levels(f, spec, {{0.0, 0.0}, {0.2, 0.05}}, 4);
  CHECK(one.grid.phi.size() == std::size_t(41 * 31));
  CHECK(one.seeds[0].level == doctest::Approx(f(0, 0)).epsilon(1e-15));
  CHECK(one.seeds[1].level == doctest::Approx(f(0.2, 0.05)).epsilon(1e-15));
  CHECK(one.grid.valid == many.grid.valid);
  for (std::size_t k = 0; k < one.grid.phi.size(); ++k)
    if (one.grid.valid[k]) CHECK(one.grid.phi[k] == many.grid.phi[k]);
  // The default p_z band is the allowed one at z = 0 (V(0, z) = 0).
  CHECK(one.grid.p_z.back() == doctest::Approx(std::sqrt(0.2)).epsilon(1e-14));
  for (int j = 0; j < one.grid.npz; ++j)
    for (int i = 0; i < one.grid.nz; ++i)
      CHECK(bool(one.grid.is_valid(i, j)) ==
            (2 * (0.1 - model()(0.0, one.grid.z[i])) - one.grid.p_z[j] * one.grid.p_z[j] >= 0));
  CHECK_THROWS_AS(section_levels(f, spec, {{0.0, 0.6}}), SeedOutsideCZVError);
}

TEST_CASE("variation along an orbit shrinks with the order") {
  const double E = 0.1;
  const auto start = section_point(model(), E, 0.2, 0.03);
  const auto orbit = integrate(model(), start, 200.0);
  double previous = INFINITY;
  for (int r = 1; r <= 5; ++r) {
    const auto phi = back_transform(nonres(r));
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& s : orbit) {
      const double v = phi(s.rho, s.p_rho, s.z, s.p_z);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double variation = (hi - lo) / std::abs(phi(start.rho, start.p_rho, start.z, start.p_z));
    MESSAGE("r=" << r << " variation " << variation);
    CHECK(variation < previous);
    previous = variation;
  }
}

TEST_CASE("island counts") {
  // Seeds are checked to lie in numerical islands: their crossings leave a wide angular gap.
  IntegratorConfig cfg;
  cfg.tol = 1e-10;

  SUBCASE("2:1 at E = 0.2") {
    const double E = 0.2;
    const std::array<double, 2> seed{0.2, 0.0};
    CHECK(largest_angular_gap(poincare_section(model(), {seed}, E, 60, cfg), 2.0) > 0.5);
    CHECK(islands_at(back_transform(resonant(2, 1, 5)), E, seed) == 4);
    CHECK(islands_at(back_transform(nonres(5)), E, seed) == 0);

    // A seed in the other chain finds the same four islands.
    const auto phi = back_transform(resonant(2, 1, 5));
    SectionFunction f(phi, model(), E);
    CHECK(count_islands(section_levels(f, GridSpec{}, {seed, {0.0, 0.12}})).size() == 4);
  }
  SUBCASE("3:1 at E = 0.115") {
    const double E = 0.115;
    const std::array<double, 2> seed{0.0, 0.135};
    CHECK(largest_angular_gap(poincare_section(model(), {seed}, E, 60, cfg), 2.5) > 0.5);
    CHECK(islands_at(back_transform(resonant(3, 1, 5)), E, seed) == 6);
    CHECK(islands_at(back_transform(nonres(5)), E, seed) == 0);
  }
  SUBCASE("a circulating seed has no islands") {
    const double E = 0.2;
    CHECK(largest_angular_gap(poincare_section(model(), {{0.4, 0.0}}, E, 60, cfg), 2.0) < 0.5);
    CHECK(islands_at(back_transform(resonant(2, 1, 5)), E, {0.4, 0.0}) == 0);
  }
}

TEST_CASE("imaginary residue check") {
  // Resonant coefficients carry powers of 1/sqrt(w2*); the check scales with them.
  CHECK_NOTHROW(back_transform(resonant(3, 1, 8)));
  NormalizationState broken = nonres(2);
  broken.generators[0].accumulate(make_key(1, 0, 1, 0), 1, Complex(0.0, 0.3));
  CHECK_THROWS_AS(back_transform(broken), NonRealIntegralError);
  NormalizationState empty = nonres(2);
  empty.step = 0;
  CHECK_THROWS_AS(back_transform(empty), RangeError);
}
