#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "mbnf/potential.hpp"

namespace mbnf {

/// Phase-space point of the meridian-plane motion.
struct OrbitState {
  double rho = 0.0, z = 0.0, p_rho = 0.0, p_z = 0.0;
  double t = 0.0;
};

/// Local error per step is held at step_tol_factor * tol, which keeps the
/// relative energy drift over 10^4 time units below tol.
struct IntegratorConfig {
  double tol = 1e-12;
  double step_tol_factor = 1e-2;
  double escape_bound = 20.0;  // |rho| or |z| beyond this raises EscapeDetected
  double initial_step = 1e-2;
  double crossing_tol = 1e-12;
};

double energy(const PotentialSpec& v, const OrbitState& s);

/// Accepted steps from t0 to t0 + T (first and last sample included).
std::vector<OrbitState> integrate(const PotentialSpec& v, const OrbitState& initial, double T,
                                  const IntegratorConfig& cfg = {});

/// Point on the section rho = 0, p_rho > 0 at energy E; throws
/// SeedOutsideCZVError when (z, p_z) is not energetically allowed.
OrbitState section_point(const PotentialSpec& v, double E, double z, double p_z);

struct Crossing {
  double z = 0.0, p_z = 0.0;
  std::size_t seed_id = 0;
};

struct SectionSet {
  double E = 0.0;
  std::vector<Crossing> crossings;
};

/// n_crossings returns of every seed (z, p_z) to rho = 0 with p_rho > 0.
/// Seeds run concurrently on up to `threads` threads; results keep seed order.
SectionSet poincare_section(const PotentialSpec& v, const std::vector<std::array<double, 2>>& seeds, double E,
                            int n_crossings, const IntegratorConfig& cfg = {}, int threads = 1);

struct MonodromyResult {
  double E = 0.0;
  double period = 0.0;
  /// (delta z, delta p_z) flow over the full period and over half of it.
  std::array<std::array<double, 2>, 2> M{};
  std::array<std::array<double, 2>, 2> M_half{};
  double trace = 0.0;
  double trace_half = 0.0;
  bool stable = false;
  /// omega_2 / omega_1 from the half-period eigenphase; NaN once unstable.
  double rotation_number = 0.0;
};

/// Turning point of the equatorial orbit: V(rho_max, 0) = E on the inner branch.
double equatorial_turning_point(const PotentialSpec& v, double E);

MonodromyResult central_orbit_monodromy(const PotentialSpec& v, double E, const IntegratorConfig& cfg = {});

/// Lowest energy where the central orbit turns unstable (trace_half = -2).
double numerical_chaos_threshold(const PotentialSpec& v, const IntegratorConfig& cfg = {}, double e_tol = 1e-9);

/// Energy where omega_2/omega_1 of the central orbit equals m2/m1.
double numerical_bifurcation_energy(const PotentialSpec& v, int m1, int m2, const IntegratorConfig& cfg = {},
                                    double e_tol = 1e-9);

}  // namespace mbnf
