#pragma once

#include <functional>
#include <vector>

#include "mbnf/model.hpp"
#include "mbnf/polynomial.hpp"

namespace mbnf {

inline constexpr double kSmallDivisorFloor = 1e-9;
inline constexpr double kBlockConsistencyTol = 1e-12;
inline constexpr int kDefaultNormalizationOrder = 15;

/// Monomials kept in the normal form.
class KernelSet {
 public:
  static KernelSet nonresonant() { return KernelSet(0, 0); }
  static KernelSet resonant(int m1, int m2) { return KernelSet(m1, m2); }

  bool is_resonant() const noexcept { return m1_ != 0 || m2_ != 0; }
  int m1() const noexcept { return m1_; }
  int m2() const noexcept { return m2_; }

  bool contains(ExponentKey k) const noexcept {
    if (is_resonant()) return (int(k.k1) - int(k.l1)) * m1_ + (int(k.k2) - int(k.l2)) * m2_ == 0;
    if (k.k1 != k.l1) return false;
    if (k.k1 == 0) return k.k2 == 0 && k.l2 == 2;
    return k.l2 == 0;
  }

 private:
  KernelSet(int m1, int m2) : m1_(m1), m2_(m2) {}
  int m1_, m2_;
};

/// chi with {i w10 q1 p1 + p2^2/2, chi} = -h_tilde, solved block by block in
/// (k1, l1). Blocks with k1 = l1 take b_0 = 0.
Polynomial solve_homological_nonresonant(const Polynomial& h_tilde, double omega10);

/// chi with {i w1 q1 p1 + i w2 q2 p2, chi} = -h_tilde.
Polynomial solve_homological_resonant(const Polynomial& h_tilde, double omega1, double omega2,
                                      double divisor_floor = kSmallDivisorFloor);

/// Zero-order Hamiltonian the homological operator is built on.
Polynomial zero_order_hamiltonian(const PreparedHamiltonian& prepared);

struct NormalizationState {
  int step = 0;
  int trunc_order = kDefaultTruncOrder;
  Mode mode = Mode::nonresonant;
  double omega10 = 1.0;
  std::optional<ResonanceSpec> resonance;
  KernelSet kernel = KernelSet::nonresonant();
  /// H^(r): orders 0..r are the normal form, the rest is the remainder.
  Polynomial hamiltonian;
  /// chi_1 .. chi_r.
  std::vector<Polynomial> generators;
  /// Coefficient-wise max of {Z_0, chi_s} + h_tilde_s for each step s >= 1,
  /// divided by max(1, largest |coefficient| of H at order s before the step).
  std::vector<double> homological_residuals;
  /// Largest non-kernel coefficient left at order s by the transform of step s,
  /// same scaling.
  std::vector<double> kernel_leaks;

  Polynomial normal_form() const { return hamiltonian.slice(0, step); }
  Polynomial normal_form_order(int s) const { return hamiltonian.slice(s, s); }
  Polynomial remainder() const { return hamiltonian.slice(step + 1, trunc_order); }
};

struct NormalizeOptions {
  double divisor_floor = kSmallDivisorFloor;
  /// Called with the state after every completed step (and once for r = 0).
  std::function<void(const NormalizationState&)> observer;
};

/// Runs r_max normalization steps on prepared.H truncated at r_trunc.
NormalizationState normalize(const PreparedHamiltonian& prepared, int r_max, int r_trunc,
                             const NormalizeOptions& options = {});

/// Coefficients c_n of omega_2^2(I1) = sum_n c_n I1^n read off the I1^n q2^2
/// terms of Z, for n = 0..r.
std::vector<double> extract_omega2_squared(const NormalizationState& state);

/// Coefficients of Z(I1, q2 = 0, p2 = 0) in powers of I1 (nonresonant state).
std::vector<double> action_series(const NormalizationState& state);

}  // namespace mbnf
