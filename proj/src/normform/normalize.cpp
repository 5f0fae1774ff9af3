#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "mbnf/errors.hpp"
#include "mbnf/normform.hpp"

namespace mbnf {

namespace {

const Complex kI{0.0, 1.0};

std::string describe(ExponentKey k) {
  std::ostringstream os;
  os << "(" << int(k.k1) << "," << int(k.l1) << "," << int(k.k2) << "," << int(k.l2) << ")";
  return os.str();
}

Complex i_pow(int n) {
  switch (n & 3) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

// Key of a (k1, l1) block together with the total degree and book-keeping order
// of its members; members are indexed by n = k2.
struct BlockId {
  int k, l, degree, bk;
  auto operator<=>(const BlockId&) const = default;
};

}  // namespace

Polynomial solve_homological_nonresonant(const Polynomial& h_tilde, double omega10) {
  Polynomial chi(h_tilde.trunc_order());
  std::map<BlockId, std::vector<Complex>> blocks;
  h_tilde.for_each([&](const GradedTerm& t) {
    const BlockId id{t.key.k1, t.key.l1, t.key.degree(), t.bk};
    auto& a = blocks[id];
    a.resize(id.degree - id.k - id.l + 1);
    a[t.key.k2] = -t.coeff;
  });

  for (const auto& [id, a] : blocks) {
    const int dp = int(a.size()) - 1;
    std::vector<Complex> b(a.size());
    if (id.k != id.l) {
      const Complex c = kI * double(id.l - id.k) * omega10;
      b[dp] = a[dp] / c;
      for (int n = dp - 1; n >= 0; --n) b[n] = (a[n] + double(n + 1) * b[n + 1]) / c;
    } else {
      if (std::abs(a[dp]) > kBlockConsistencyTol)
        throw InconsistentBlockError("block (" + std::to_string(id.k) + "," + std::to_string(id.l) +
                                     ") of degree " + std::to_string(id.degree) +
                                     " has a nonzero last equation");
      b[0] = 0.0;
      for (int n = 0; n < dp; ++n) b[n + 1] = -a[n] / double(n + 1);
    }
    for (int n = 0; n <= dp; ++n)
      if (b[n] != Complex(0.0)) chi.accumulate(make_key(id.k, id.l, n, dp - n), id.bk, b[n]);
  }
  chi.prune(0.0);
  return chi;
}

Polynomial solve_homological_resonant(const Polynomial& h_tilde, double omega1, double omega2,
                                      double divisor_floor) {
  Polynomial chi(h_tilde.trunc_order());
  h_tilde.for_each([&](const GradedTerm& t) {
    const double d = (int(t.key.k1) - int(t.key.l1)) * omega1 + (int(t.key.k2) - int(t.key.l2)) * omega2;
    if (std::abs(d) < divisor_floor)
      throw SmallDivisorError("divisor " + std::to_string(d) + " for exponents " + describe(t.key));
    chi.accumulate(t.key, t.bk, t.coeff / (kI * d));
  });
  return chi;
}

Polynomial zero_order_hamiltonian(const PreparedHamiltonian& prepared) {
  const int trunc = prepared.H.trunc_order();
  if (prepared.mode == Mode::resonant) {
    const auto& res = prepared.resonance.value();
    Polynomial h0(trunc);
    h0.accumulate(make_key(1, 1, 0, 0), 0, kI * res.omega1_star);
    h0.accumulate(make_key(0, 0, 1, 1), 0, kI * res.omega2_star);
    return h0;
  }
  Polynomial h0(trunc);
  h0.accumulate(make_key(1, 1, 0, 0), 0, kI * prepared.omega10);
  h0.accumulate(make_key(0, 0, 0, 2), 0, 0.5);
  return h0;
}

NormalizationState normalize(const PreparedHamiltonian& prepared, int r_max, int r_trunc,
                             const NormalizeOptions& options) {
  if (r_max < 0 || r_trunc < 0) throw OrderOverflowError("orders must be nonnegative");
  if (r_max > r_trunc)
    throw OrderOverflowError("normalization order " + std::to_string(r_max) +
                             " exceeds truncation order " + std::to_string(r_trunc));
  if (r_trunc > prepared.H.trunc_order())
    throw OrderOverflowError("truncation order " + std::to_string(r_trunc) +
                             " exceeds the prepared Hamiltonian's order " +
                             std::to_string(prepared.H.trunc_order()));

  NormalizationState state;
  state.trunc_order = r_trunc;
  state.mode = prepared.mode;
  state.omega10 = prepared.omega10;
  state.resonance = prepared.resonance;
  if (prepared.mode == Mode::resonant) {
    const auto& res = prepared.resonance.value();
    state.kernel = KernelSet::resonant(res.m1, res.m2);
  }
  state.hamiltonian = prepared.H.with_trunc(r_trunc);
  if (options.observer) options.observer(state);

  const Polynomial z0 = zero_order_hamiltonian(prepared).with_trunc(r_trunc);
  for (int r = 1; r <= r_max; ++r) {
    const Polynomial h_r = state.hamiltonian.slice(r, r);
    const Polynomial h_tilde = h_r.filter([&](const GradedTerm& t) { return !state.kernel.contains(t.key); });
    const double scale = std::max(1.0, max_abs_coeff(h_r));

    Polynomial chi = prepared.mode == Mode::resonant
                         ? solve_homological_resonant(h_tilde, state.resonance->omega1_star,
                                                      state.resonance->omega2_star, options.divisor_floor)
                         : solve_homological_nonresonant(h_tilde, prepared.omega10);

    Polynomial check = poisson_bracket(z0, chi);
    check += h_tilde;
    state.homological_residuals.push_back(max_abs_coeff(check) / scale);

    state.hamiltonian = lie_transform(state.hamiltonian, chi);
    // Outside the kernel the order-r part cancels up to round-off, which is
    // recorded and then removed.
    double leak = 0.0;
    Polynomial cleaned = state.hamiltonian.filter([&](const GradedTerm& t) {
      if (t.bk != r || state.kernel.contains(t.key)) return true;
      leak = std::max(leak, std::abs(t.coeff));
      return false;
    });
    state.hamiltonian = std::move(cleaned);
    state.kernel_leaks.push_back(leak / scale);
    state.generators.push_back(std::move(chi));
    state.step = r;
    if (options.observer) options.observer(state);
  }
  return state;
}

std::vector<double> extract_omega2_squared(const NormalizationState& state) {
  if (state.mode != Mode::nonresonant) throw ModeError("omega_2^2(I1) is defined for nonresonant states");
  std::vector<double> c(state.step + 1, 0.0);
  for (int n = 0; n <= state.step; ++n) {
    const Complex v = state.hamiltonian.coeff_any_order(make_key(n, n, 2, 0));
    c[n] = 2.0 * (v / i_pow(n)).real();
  }
  return c;
}

std::vector<double> action_series(const NormalizationState& state) {
  if (state.mode != Mode::nonresonant) throw ModeError("action series is defined for nonresonant states");
  std::vector<double> a(state.step + 2, 0.0);
  for (int n = 0; n <= state.step + 1; ++n) {
    const Complex v = state.normal_form().coeff_any_order(make_key(n, n, 0, 0));
    a[n] = (v / i_pow(n)).real();
  }
  return a;
}

}  // namespace mbnf
