#include <cmath>

#include "mbnf/errors.hpp"
#include "mbnf/model.hpp"

namespace mbnf {

namespace {

const Complex I{0.0, 1.0};

Polynomial var(Var v, int trunc) { return Polynomial::variable(v, trunc); }

void validate(const PotentialSpec& v) {
  if (v.coeff(2, 0) <= 0.0) throw MissingQuadraticError("potential has no positive rho^2 term");
  if (!v.even_in(true)) throw OddPotentialError("potential is odd in rho; only even powers are graded");
  for (const auto& [k, c] : v.terms) {
    if (k.first == 0)
      throw UnsupportedPotentialError("term z^" + std::to_string(k.second) +
                                      " without a rho factor breaks the nilpotent structure");
    if ((k.first + k.second) % 2 != 0)
      throw OddPotentialError("term rho^" + std::to_string(k.first) + " z^" + std::to_string(k.second) +
                              " has odd total degree");
  }
}

}  // namespace

double omega10_of(const PotentialSpec& v) {
  const double c = v.coeff(2, 0);
  if (c <= 0.0) throw MissingQuadraticError("potential has no positive rho^2 term");
  return std::sqrt(2.0 * c);
}

Polynomial real_hamiltonian(const PotentialSpec& v, int trunc) {
  const int work = std::max(trunc, v.max_degree());
  Polynomial h(work);
  h.accumulate(make_key(0, 2, 0, 0), 0, 0.5);
  h.accumulate(make_key(0, 0, 0, 2), 0, 0.5);
  for (const auto& [k, c] : v.terms) h.accumulate(make_key(k.first, 0, k.second, 0), 0, c);
  h.prune();
  return h;
}

std::array<Polynomial, 4> complex_images(double omega, int trunc) {
  const double s = std::sqrt(omega);
  return {(1.0 / std::sqrt(2.0 * omega)) * (var(Var::q1, trunc) + I * var(Var::p1, trunc)),
          (s / std::sqrt(2.0)) * (I * var(Var::q1, trunc) + var(Var::p1, trunc)), var(Var::q2, trunc),
          var(Var::p2, trunc)};
}

std::array<Polynomial, 4> real_images(double omega, int trunc) {
  const double s = std::sqrt(omega);
  const double r2 = std::sqrt(2.0);
  return {(1.0 / r2) * (s * var(Var::q1, trunc) - (I / s) * var(Var::p1, trunc)),
          (1.0 / r2) * ((1.0 / s) * var(Var::p1, trunc) - (I * s) * var(Var::q1, trunc)),
          var(Var::q2, trunc), var(Var::p2, trunc)};
}

std::array<Polynomial, 4> complex_images_second(double omega, int trunc) {
  const double s = std::sqrt(omega);
  return {var(Var::q1, trunc), var(Var::p1, trunc),
          (1.0 / std::sqrt(2.0 * omega)) * (var(Var::q2, trunc) + I * var(Var::p2, trunc)),
          (s / std::sqrt(2.0)) * (I * var(Var::q2, trunc) + var(Var::p2, trunc))};
}

std::array<Polynomial, 4> real_images_second(double omega, int trunc) {
  const double s = std::sqrt(omega);
  const double r2 = std::sqrt(2.0);
  return {var(Var::q1, trunc), var(Var::p1, trunc),
          (1.0 / r2) * (s * var(Var::q2, trunc) - (I / s) * var(Var::p2, trunc)),
          (1.0 / r2) * ((1.0 / s) * var(Var::p2, trunc) - (I * s) * var(Var::q2, trunc))};
}

PreparedHamiltonian complexify_nonresonant(const PotentialSpec& v, int trunc) {
  validate(v);
  const double omega = omega10_of(v);
  const int work = std::max(trunc, v.max_degree());
  Polynomial h = substitute(real_hamiltonian(v, work), complex_images(omega, work));
  h = h.regraded([](ExponentKey k) { return (k.degree() - 2) / 2; }).with_trunc(trunc).slice(1, trunc);
  h.accumulate(make_key(1, 1, 0, 0), 0, I * omega);
  h.accumulate(make_key(0, 0, 0, 2), 0, 0.5);
  return {std::move(h), Mode::nonresonant, std::nullopt, omega};
}

PreparedHamiltonian prepare_resonant(const PotentialSpec& v, const ResonanceSpec& res, int trunc) {
  if (!(res.omega2_star > 0.0)) throw InvalidFrequencyError("omega2* must be positive");
  if (res.m1 <= 0 || res.m2 <= 0) throw InvalidFrequencyError("resonance integers must be positive");
  const PreparedHamiltonian base = complexify_nonresonant(v, trunc);
  const double w10 = base.omega10;
  const double w1 = res.omega1_star;
  const double w2sq = res.omega2_star * res.omega2_star;

  // Still in (q1, p1, z, p_z): split the order-0 part and add/subtract the detuning.
  Polynomial h = base.H.slice(1, trunc);
  if (trunc >= 1) {
    h.accumulate(make_key(1, 1, 0, 0), 1, -I * (w1 - w10));
    h.accumulate(make_key(0, 0, 2, 0), 1, -0.5 * w2sq);
  }
  h.prune();
  // Order 0 is i w1 q1p1 + p_z^2/2 + w2^2 z^2/2 before the second substitution.
  h = substitute(h, complex_images_second(res.omega2_star, trunc));
  h.accumulate(make_key(1, 1, 0, 0), 0, I * w1);
  h.accumulate(make_key(0, 0, 1, 1), 0, I * res.omega2_star);
  return {std::move(h), Mode::resonant, res, w10};
}

std::array<Complex, 4> to_canonical(double rho, double p_rho, double z, double p_z, double omega1,
                                    double omega2) {
  const double r2 = std::sqrt(2.0);
  const double s1 = std::sqrt(omega1);
  std::array<Complex, 4> out{Complex(s1 * rho, -p_rho / s1) / r2, Complex(p_rho / s1, -s1 * rho) / r2, z, p_z};
  if (omega2 > 0.0) {
    const double s2 = std::sqrt(omega2);
    out[2] = Complex(s2 * z, -p_z / s2) / r2;
    out[3] = Complex(p_z / s2, -s2 * z) / r2;
  }
  return out;
}

}  // namespace mbnf
