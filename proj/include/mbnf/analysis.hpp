#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mbnf/model.hpp"
#include "mbnf/normform.hpp"

namespace mbnf {

/// Non-fatal diagnostic (FlatMinimumWarning, MultipleRootsWarning, ...).
struct Warning {
  std::string name;
  std::string message;
};

struct BifurcationResult {
  int m1 = 0, m2 = 0;
  double I1_star = 0.0;
  double omega1_star = 0.0;
  double omega2_star = 0.0;
  double energy = 0.0;
  std::vector<Warning> warnings;

  ResonanceSpec resonance() const { return {m1, m2, I1_star, omega1_star, omega2_star}; }
};

/// Power series sum c_n x^n and its derivative.
double eval_series(const std::vector<double>& c, double x);
double eval_series_derivative(const std::vector<double>& c, double x);

/// Largest action for which Z(I1, 0, 0) stays increasing and below e_crit.
double action_bound(const NormalizationState& state, double e_crit);

/// Solves m2 w1eq(I1) = m1 w2(I1) on (0, action_bound] and returns E = Z(I1*).
BifurcationResult bifurcation_energy(const NormalizationState& state, int m1, int m2, double e_crit);

/// Evaluation point of the remainder norm.
struct NormPoint {
  double E = 0.2;
  double delta_E = 1e-3;
  double beta = 0.0;
};

/// ||R^(r,N)|| of the state's remainder (r = state.step). The mirror frequency
/// entering the beta direction comes from omega2_sq (series in I1) in
/// nonresonant mode and from omega2* in resonant mode.
double remainder_norm(const NormalizationState& state, int r, int N, const NormPoint& p,
                      const std::vector<double>& omega2_sq = {});

struct NormRow {
  int r = 0;
  int N = 0;
  double delta_E = 0.0;
  double norm = 0.0;
};

/// All ||R^(r,N)|| for N = r+1..trunc and every delta_E, evaluated as one
/// batched polynomial evaluation per book-keeping order.
std::vector<NormRow> remainder_norm_rows(const NormalizationState& state, double E, double beta,
                                         const std::vector<double>& delta_E,
                                         const std::vector<double>& omega2_sq = {});

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
  int points = 0;
};

/// Ordinary least squares y = intercept + slope x.
LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

struct FitConfig {
  double power_law_max_dE = 1e-3;
  double exponential_max_dE = 1e-3;
};

struct AsymptoticFit {
  std::vector<double> delta_E;
  std::vector<int> r_opt;
  std::vector<double> optimal_norm;
  /// r_opt ~ dE^(-alpha)
  std::optional<double> alpha;
  LinearFit power_law;
  /// ||R_opt|| ~ exp(-(dE0/dE)^d)
  std::optional<double> d;
  std::optional<double> delta_E0;
  LinearFit exponential;
  FitConfig config;
  std::vector<Warning> warnings;
};

struct ScanResult {
  Mode mode = Mode::nonresonant;
  double E = 0.0;
  double beta = 0.0;
  int N = 0;
  std::vector<NormRow> rows;
  AsymptoticFit fit;
};

/// Log-spaced grid with `per_decade` points per decade, both ends included.
std::vector<double> log_grid(double lo, double hi, int per_decade);

/// Normalizes to r_max, records ||R^(r,N)|| for every step and derives r_opt
/// (argmin over r of ||R^(r, r_trunc)||) and the two fits.
ScanResult optimal_order_scan(const PreparedHamiltonian& prepared, int r_max, int r_trunc, double E,
                              double beta, const std::vector<double>& delta_E, const FitConfig& cfg = {});

/// r_opt table and fits from precomputed rows.
AsymptoticFit fit_asymptotics(const std::vector<NormRow>& rows, int N, const std::vector<double>& delta_E,
                              int r_max, const FitConfig& cfg);

struct ThresholdRow {
  int r = 0;
  double energy = 0.0;
  double error = 0.0;
};

/// E_{1/1}(r) for r = r_lo..r_hi from a single normalization.
std::vector<ThresholdRow> chaos_threshold_convergence(const PreparedHamiltonian& prepared, int r_lo, int r_hi,
                                                      double e_crit, double numeric_threshold);

}  // namespace mbnf
