#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mbnf/dynamics.hpp"
#include "mbnf/errors.hpp"

using namespace mbnf;

namespace {
const PotentialSpec& model() {
  static const PotentialSpec v = build_builtin_model();
  return v;
}

// Fixed-step RK4 on the equatorial orbit and its (dz, dp_z) variational flow,
// started at the outer turning point and stopped when p_rho turns positive.
struct HalfOrbit {
  double t;
  double m[2][2];
};

HalfOrbit rk4_half_orbit(double E, double h = 2e-3) {
  auto V = [](double r) { return r * r / 2 * std::pow(1 - r * r / 8, 2); };
  double lo = 0, hi = std::sqrt(8.0 / 3);
  for (int i = 0; i < 200; ++i) ((V(0.5 * (lo + hi)) < E) ? lo : hi) = 0.5 * (lo + hi);

  using S = std::array<double, 6>;  // rho, p_rho, a, b (column 1), c, d (column 2)
  auto rhs = [](const S& s) {
    const double r = s[0];
    const double dv = r - r * r * r / 2 + 3 * std::pow(r, 5) / 64;  // dV/drho on z = 0
    const double vzz = r * r - r * r * r * r / 8;                   // d2V/dz2 on z = 0
    return S{s[1], -dv, s[3], -vzz * s[2], s[5], -vzz * s[4]};
  };
  auto step = [&](const S& s, double dt) {
    auto add = [](const S& a, const S& b, double f) {
      S o;
      for (int i = 0; i < 6; ++i) o[i] = a[i] + f * b[i];
      return o;
    };
    const S k1 = rhs(s), k2 = rhs(add(s, k1, dt / 2)), k3 = rhs(add(s, k2, dt / 2)), k4 = rhs(add(s, k3, dt));
    S o;
    for (int i = 0; i < 6; ++i) o[i] = s[i] + dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    return o;
  };
  S s{0.5 * (lo + hi), 0, 1, 0, 0, 1};
  double t = 0;
  bool went_negative = false;
  for (;;) {
    const S n = step(s, h);
    if (n[1] < 0) went_negative = true;
    if (went_negative && n[1] >= 0) break;
    s = n;
    t += h;
  }
  double a = 0, b = h;
  for (int i = 0; i < 60; ++i) {
    const double m = 0.5 * (a + b);
    (step(s, m)[1] < 0 ? a : b) = m;
  }
  const S e = step(s, 0.5 * (a + b));
  return {t + 0.5 * (a + b), {{e[2], e[4]}, {e[3], e[5]}}};
}
}  // namespace

TEST_CASE("equatorial plane is invariant") {
  const auto traj = integrate(model(), {0.3, 0.0, 0.1, 0.0, 0.0}, 50.0);
  for (const auto& s : traj) {
    CHECK(s.z == 0.0);
    CHECK(s.p_z == 0.0);
  }
  CHECK(traj.back().t == doctest::Approx(50.0).epsilon(1e-15));
}

TEST_CASE("energy drift over 10^4 time units") {
  IntegratorConfig cfg;
  cfg.tol = 1e-12;
  const auto start = section_point(model(), 0.2, 0.3, 0.1);
  const double e0 = energy(model(), start);
  CHECK(e0 == doctest::Approx(0.2).epsilon(1e-15));
  const auto traj = integrate(model(), start, 1e4, cfg);
  double drift = 0;
  for (const auto& s : traj) drift = std::max(drift, std::abs(energy(model(), s) - e0) / e0);
  MESSAGE("relative drift " << drift);
  CHECK(drift < 1e-10);
}

TEST_CASE("time reversal") {
  IntegratorConfig cfg;
  const OrbitState start = section_point(model(), 0.1, 0.2, 0.05);
  const auto fwd = integrate(model(), start, 20.0, cfg).back();
  const auto back = integrate(model(), {fwd.rho, fwd.z, -fwd.p_rho, -fwd.p_z, 0.0}, 20.0, cfg).back();
  const double err = std::max({std::abs(back.rho - start.rho), std::abs(back.z - start.z),
                               std::abs(back.p_rho + start.p_rho), std::abs(back.p_z + start.p_z)});
  MESSAGE("reversal error " << err);
  CHECK(err < 10 * cfg.tol);
}

TEST_CASE("escape is reported") {
  IntegratorConfig cfg;
  cfg.escape_bound = 3.0;
  CHECK_THROWS_AS(integrate(model(), {2.0, 0.0, 3.0, 0.0, 0.0}, 100.0, cfg), EscapeDetected);
}

TEST_CASE("section crossings") {
  SUBCASE("central orbit is a fixed point") {
    const auto s = poincare_section(model(), {{0.0, 0.0}}, 0.1, 10);
    REQUIRE(s.crossings.size() == 10);
    for (const auto& c : s.crossings) {
      CHECK(std::abs(c.z) < 1e-12);
      CHECK(std::abs(c.p_z) < 1e-12);
    }
  }
  SUBCASE("crossings lie on the section with p_rho > 0 and energy kept") {
    const double E = 0.1;
    const auto s = poincare_section(model(), {{0.2, 0.0}, {0.1, 0.05}}, E, 40, {}, 2);
    CHECK(s.crossings.size() == 80);
    for (const auto& c : s.crossings) {
      const auto p = section_point(model(), E, c.z, c.p_z);
      CHECK(p.p_rho > 0);
      CHECK(energy(model(), p) == doctest::Approx(E).epsilon(1e-10));
    }
    // Results keep seed order independent of the thread count.
    const auto serial = poincare_section(model(), {{0.2, 0.0}, {0.1, 0.05}}, E, 40, {}, 1);
    for (std::size_t i = 0; i < s.crossings.size(); ++i) {
      CHECK(s.crossings[i].seed_id == serial.crossings[i].seed_id);
      CHECK(s.crossings[i].z == serial.crossings[i].z);
    }
  }
  SUBCASE("refined crossings have rho near zero") {
    // Integrate the first return from a section point and compare with the stored crossing.
    const double E = 0.1;
    const auto s = poincare_section(model(), {{0.2, 0.0}}, E, 1);
    const auto start = section_point(model(), E, 0.2, 0.0);
    const auto traj = integrate(model(), start, 12.0);
    double best = INFINITY;
    for (std::size_t i = 1; i < traj.size(); ++i)
      if (traj[i - 1].rho < 0 && traj[i].rho >= 0) best = std::min(best, std::abs(traj[i].z - s.crossings[0].z));
    CHECK(best < 0.05);
  }
  SUBCASE("outside the allowed region") {
    CHECK_THROWS_AS(section_point(model(), 0.1, 0.0, 0.5), SeedOutsideCZVError);
  }
}

TEST_CASE("regular orbit crossings turn monotonically") {
  const double E = 0.1;
  for (const auto& seed : std::vector<std::array<double, 2>>{{0.15, 0.0}, {0.3, 0.0}, {0.45, 0.0}}) {
    const auto s = poincare_section(model(), {seed}, E, 100);
    double cz = 0, cp = 0;
    for (const auto& c : s.crossings) {
      cz += c.z / s.crossings.size();
      cp += c.p_z / s.crossings.size();
    }
    int positive = 0, negative = 0;
    for (std::size_t i = 1; i < s.crossings.size(); ++i) {
      const double a0 = std::atan2(s.crossings[i - 1].p_z - cp, s.crossings[i - 1].z - cz);
      const double a1 = std::atan2(s.crossings[i].p_z - cp, s.crossings[i].z - cz);
      const double d = std::remainder(a1 - a0, 2 * std::numbers::pi);
      (d > 0 ? positive : negative)++;
    }
    CHECK((positive == 0 || negative == 0));
  }
}

TEST_CASE("monodromy of the central orbit") {
  SUBCASE("determinant and independent RK4 oracle") {
    for (double E : {0.05, 0.2, 0.36}) {
      const auto m = central_orbit_monodromy(model(), E);
      const double det = m.M[0][0] * m.M[1][1] - m.M[0][1] * m.M[1][0];
      const double det_half = m.M_half[0][0] * m.M_half[1][1] - m.M_half[0][1] * m.M_half[1][0];
      CHECK(std::abs(det - 1) < 1e-8);
      CHECK(std::abs(det_half - 1) < 1e-8);
      const auto oracle = rk4_half_orbit(E);
      CHECK(m.period == doctest::Approx(2 * oracle.t).epsilon(1e-8));
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(std::abs(m.M_half[i][j] - oracle.m[i][j]) < 1e-7);
      CHECK(m.trace_half == doctest::Approx(oracle.m[0][0] + oracle.m[1][1]).epsilon(1e-7));
      CHECK(m.stable == (std::abs(m.trace) < 2));
    }
  }
  SUBCASE("harmonic limit") {
    // omega_2 grows like sqrt(E), so 2 - Tr(M) falls roughly tenfold per decade of E.
    double previous = 2.0;
    for (double E : {1e-3, 1e-4, 1e-5, 1e-6}) {
      const auto m = central_orbit_monodromy(model(), E);
      CHECK(2 - m.trace < previous / 5);
      CHECK(2 - m.trace > 0);
      previous = 2 - m.trace;
      CHECK(m.period == doctest::Approx(2 * std::numbers::pi).epsilon(10 * E));
    }
    CHECK(previous < 1e-4);
  }
  SUBCASE("rotation number at E = 0.2") {
    const auto m = central_orbit_monodromy(model(), 0.2);
    CHECK(m.rotation_number == doctest::Approx(std::acos(m.trace_half / 2) / std::numbers::pi));
    CHECK(m.rotation_number > 0.5);
    CHECK(m.rotation_number < 0.55);
  }
  SUBCASE("turning point") {
    const double r = equatorial_turning_point(model(), 0.2);
    CHECK(model()(r, 0.0) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(r < std::sqrt(8.0 / 3));
  }
}

TEST_CASE("stability threshold and bifurcations") {
  const double et = numerical_chaos_threshold(model());
  MESSAGE("E_t = " << et);
  // The oracle half-trace crosses -2 between E_t -+ 1e-6.
  const auto below = rk4_half_orbit(et - 1e-6), above = rk4_half_orbit(et + 1e-6);
  CHECK(below.m[0][0] + below.m[1][1] > -2);
  CHECK(above.m[0][0] + above.m[1][1] < -2);
  CHECK(central_orbit_monodromy(model(), et - 1e-4).stable);
  CHECK_FALSE(central_orbit_monodromy(model(), et + 1e-4).stable);

  const double e13 = numerical_bifurcation_energy(model(), 3, 1);
  const double e12 = numerical_bifurcation_energy(model(), 2, 1);
  const double e11 = numerical_bifurcation_energy(model(), 1, 1);
  CHECK(e13 == doctest::Approx(0.097253).epsilon(1e-3));
  CHECK(std::abs(e12 - 0.188015) < 1e-4);
  CHECK(e11 == doctest::Approx(et).epsilon(1e-6));
  CHECK(e13 < e12);
  CHECK(central_orbit_monodromy(model(), e12).rotation_number == doctest::Approx(0.5).epsilon(1e-7));
  CHECK_THROWS_AS(numerical_bifurcation_energy(model(), 1, 2), NoBifurcationInRange);
}
