#pragma once

#include <array>
#include <optional>

#include "mbnf/polynomial.hpp"
#include "mbnf/potential.hpp"

namespace mbnf {

enum class Mode { nonresonant, resonant };

/// Resonance m2/m1 (omega2/omega1 = m2/m1) prepared at the action I1*.
struct ResonanceSpec {
  int m1 = 1;
  int m2 = 1;
  double I1_star = 0.0;
  double omega1_star = 1.0;
  double omega2_star = 0.0;
};

struct PreparedHamiltonian {
  Polynomial H;
  Mode mode = Mode::nonresonant;
  std::optional<ResonanceSpec> resonance;
  double omega10 = 1.0;
};

/// omega_{1,0} = sqrt(2c) for the rho^2 coefficient c.
double omega10_of(const PotentialSpec& v);

/// (p_rho^2 + p_z^2)/2 + V in the slots (rho, p_rho, z, p_z), all at order 0.
Polynomial real_hamiltonian(const PotentialSpec& v, int trunc_order = kDefaultTruncOrder);

/// Images of (rho, p_rho) in terms of (q1, p1) for the gyration frequency omega:
/// rho = (q1 + i p1)/sqrt(2 omega), p_rho = sqrt(omega) (i q1 + p1)/sqrt(2).
/// Slots 2, 3 map to themselves.
std::array<Polynomial, 4> complex_images(double omega, int trunc_order = kDefaultTruncOrder);

/// Inverse of complex_images for the first pair:
/// q1 = (sqrt(omega) rho - i p_rho/sqrt(omega))/sqrt(2),
/// p1 = (p_rho/sqrt(omega) - i sqrt(omega) rho)/sqrt(2).
std::array<Polynomial, 4> real_images(double omega, int trunc_order = kDefaultTruncOrder);

/// Same two maps acting on the second pair (q2, p2) <-> (z, p_z).
std::array<Polynomial, 4> complex_images_second(double omega, int trunc_order = kDefaultTruncOrder);
std::array<Polynomial, 4> real_images_second(double omega, int trunc_order = kDefaultTruncOrder);

/// H = i omega10 q1 p1 + p2^2/2 + H4 + H6 + ..., degree 2s+2 at book-keeping order s.
PreparedHamiltonian complexify_nonresonant(const PotentialSpec& v, int trunc_order = kDefaultTruncOrder);

/// Detuned Hamiltonian: order 0 is i w1* q1p1 + i w2* q2p2; the detuning terms
/// -i(w1* - w10) q1p1 - (w2*)^2 z^2/2 and H4 are at order 1, H_{2s+2} at order s.
PreparedHamiltonian prepare_resonant(const PotentialSpec& v, const ResonanceSpec& res,
                                     int trunc_order = kDefaultTruncOrder);

/// Complex canonical point (q1, p1, q2, p2) of a real phase-space point.
/// For nonresonant series omega2 <= 0 leaves (z, p_z) unchanged.
std::array<Complex, 4> to_canonical(double rho, double p_rho, double z, double p_z, double omega1,
                                    double omega2 = 0.0);

}  // namespace mbnf
