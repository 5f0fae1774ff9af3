#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>

namespace mbnf {

/// Polynomial potential V(rho, z) with real coefficients, keyed by the
/// exponent pair (a, b) of rho^a z^b.
struct PotentialSpec {
  enum class Source { builtin, parsed };

  std::map<std::pair<int, int>, double> terms;
  Source source = Source::parsed;

  double operator()(double rho, double z) const;
  double d_rho(double rho, double z) const;
  double d_z(double rho, double z) const;
  double d_zz(double rho, double z) const;
  double d_rho_z(double rho, double z) const;

  /// Coefficient of rho^a z^b (0 when absent).
  double coeff(int a, int b) const;
  bool even_in(bool rho_exponent) const;
  int max_degree() const;
};

/// V = rho^2/2 + rho^2 z^2/2 - rho^4/8 + rho^2 z^4/8 - rho^4 z^2/16 + rho^6/128
/// (A_phi^2/2 with B0 = 2, beta1 = 1).
PotentialSpec build_builtin_model();

/// Infix grammar over the symbols `rho` and `z`:
///   expr   := term (('+'|'-') term)*
///   term   := unary (('*'|'/') unary)*
///   unary  := ('+'|'-') unary | power
///   power  := primary ('^' integer)?
///   primary:= number | 'rho' | 'z' | '(' expr ')'
/// Division is allowed by constants only. '#' starts a comment.
PotentialSpec parse_potential(std::string_view text);

/// Inverse of parse_potential, printing coefficients with full precision.
std::string print_potential(const PotentialSpec& v);

/// Largest rho on the equatorial line where V(rho, 0) stops increasing
/// (the saddle of the curves of zero velocity); E_crit = V(rho_crit, 0).
double critical_radius(const PotentialSpec& v);
double critical_energy(const PotentialSpec& v);

}  // namespace mbnf
