#include "mbnf/analysis.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <map>
#include <sstream>

#include "mbnf/errors.hpp"
#include "mbnf/simd.hpp"

namespace mbnf {

double eval_series(const std::vector<double>& c, double x) {
  double s = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * x + *it;
  return s;
}

double eval_series_derivative(const std::vector<double>& c, double x) {
  double s = 0.0;
  for (std::size_t n = c.size(); n-- > 1;) s = s * x + double(n) * c[n];
  return s;
}

double action_bound(const NormalizationState& state, double e_crit) {
  const auto z = action_series(state);
  auto outside = [&](double I) { return eval_series(z, I) >= e_crit || eval_series_derivative(z, I) <= 0.0; };
  const double h = 1e-3;
  double lo = 0.0, hi = h;
  while (!outside(hi)) {
    lo = hi;
    hi += h;
    if (hi > 100.0) return hi;
  }
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (outside(mid) ? hi : lo) = mid;
  }
  return lo;
}

BifurcationResult bifurcation_energy(const NormalizationState& state, int m1, int m2, double e_crit) {
  if (state.mode != Mode::nonresonant) throw ModeError("bifurcation energies need a nonresonant normal form");
  if (state.step < 2) throw RangeError("bifurcation energies need a normal form of order >= 2");
  if (m1 <= 0 || m2 <= 0) throw RangeError("resonance integers must be positive");

  const auto z = action_series(state);
  const auto w2sq = extract_omega2_squared(state);
  auto f = [&](double I) {
    return m2 * eval_series_derivative(z, I) - m1 * std::sqrt(std::max(0.0, eval_series(w2sq, I)));
  };

  const double i_max = action_bound(state, e_crit);
  const int n = 4000;
  std::vector<std::pair<double, double>> brackets;
  double prev_x = 0.0, prev_f = f(0.0);
  for (int k = 1; k <= n; ++k) {
    const double x = i_max * k / n;
    const double fx = f(x);
    if ((prev_f > 0.0) != (fx > 0.0)) brackets.emplace_back(prev_x, x);
    prev_x = x;
    prev_f = fx;
  }
  if (brackets.empty()) {
    std::ostringstream os;
    os << "no sign change of m2 w1 - m1 w2 for (m1,m2)=(" << m1 << "," << m2 << ") on [0, " << i_max << "]";
    throw NoRootError(os.str());
  }

  BifurcationResult out;
  out.m1 = m1;
  out.m2 = m2;
  if (brackets.size() > 1)
    out.warnings.push_back({"MultipleRootsWarning", std::to_string(brackets.size()) +
                                                        " roots in range; the smallest is returned"});
  boost::uintmax_t iters = 200;
  auto [a, b] = boost::math::tools::toms748_solve(f, brackets[0].first, brackets[0].second,
                                                  boost::math::tools::eps_tolerance<double>(50), iters);
  const double I = 0.5 * (a + b);
  out.I1_star = I;
  out.omega1_star = eval_series_derivative(z, I);
  out.omega2_star = std::sqrt(eval_series(w2sq, I));
  out.energy = eval_series(z, I);
  return out;
}

namespace {

struct NormGeometry {
  double action;   // (E - dE) / omega_1
  double y;        // 2 dE / (1 + beta^2 omega_2^2)
};

NormGeometry geometry(const NormalizationState& state, const NormPoint& p, const std::vector<double>& omega2_sq) {
  if (!(p.delta_E >= 0.0 && p.delta_E < p.E)) throw RangeError("need 0 <= delta_E < E");
  NormGeometry g{};
  double w2sq;
  if (state.mode == Mode::resonant) {
    g.action = (p.E - p.delta_E) / state.resonance->omega1_star;
    w2sq = state.resonance->omega2_star * state.resonance->omega2_star;
  } else {
    g.action = (p.E - p.delta_E) / state.omega10;
    w2sq = eval_series(omega2_sq, g.action);
  }
  g.y = 2.0 * p.delta_E / (1.0 + p.beta * p.beta * w2sq);
  return g;
}

// One table per book-keeping order; exponents (k1+l1, k2, k2+l2) act on
// (sqrt(action), |beta|, sqrt(y)).
std::map<int, simd::TermTable> norm_tables(const NormalizationState& state) {
  std::map<int, simd::TermTable> tables;
  state.remainder().for_each([&](const GradedTerm& t) {
    tables[t.bk].push(t.key.k1 + t.key.l1, t.key.k2, t.key.k2 + t.key.l2, 0, std::abs(t.coeff));
  });
  return tables;
}

std::vector<double> own_omega2(const NormalizationState& state, const std::vector<double>& given) {
  if (!given.empty() || state.mode != Mode::nonresonant || state.step < 1) return given;
  return extract_omega2_squared(state);
}

}  // namespace

std::vector<NormRow> remainder_norm_rows(const NormalizationState& state, double E, double beta,
                                         const std::vector<double>& delta_E,
                                         const std::vector<double>& omega2_sq) {
  const auto w2 = own_omega2(state, omega2_sq);
  const std::size_t n = delta_E.size();
  std::vector<double> x0(n), x1(n, std::abs(beta)), x2(n), x3(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = geometry(state, {E, delta_E[i], beta}, w2);
    x0[i] = std::sqrt(g.action);
    x2[i] = std::sqrt(g.y);
  }
  const simd::PointBatch pts{x0, x1, x2, x3};
  const auto tables = norm_tables(state);

  std::vector<NormRow> rows;
  std::vector<double> partial(n, 0.0), level(n);
  for (int N = state.step + 1; N <= state.trunc_order; ++N) {
    if (auto it = tables.find(N); it != tables.end()) {
      simd::eval_batch(it->second, pts, level);
      for (std::size_t i = 0; i < n; ++i) partial[i] += level[i];
    }
    for (std::size_t i = 0; i < n; ++i) rows.push_back({state.step, N, delta_E[i], partial[i]});
  }
  return rows;
}

double remainder_norm(const NormalizationState& state, int r, int N, const NormPoint& p,
                      const std::vector<double>& omega2_sq) {
  if (r != state.step) throw RangeError("state is at order " + std::to_string(state.step) + ", not " + std::to_string(r));
  if (N <= r || N > state.trunc_order)
    throw RangeError("need r < N <= trunc, got N=" + std::to_string(N));
  for (const auto& row : remainder_norm_rows(state, p.E, p.beta, {p.delta_E}, omega2_sq))
    if (row.N == N) return row.norm;
  return 0.0;
}

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  LinearFit f;
  f.points = int(x.size());
  if (x.size() < 2) return f;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= double(x.size());
  my /= double(x.size());
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    ss += e * e;
  }
  f.rms_residual = std::sqrt(ss / double(x.size()));
  return f;
}

std::vector<double> log_grid(double lo, double hi, int per_decade) {
  if (!(lo > 0 && hi >= lo && per_decade > 0)) throw RangeError("invalid log grid");
  const int n = int(std::lround(std::log10(hi / lo) * per_decade));
  std::vector<double> g;
  for (int i = 0; i <= n; ++i) g.push_back(lo * std::pow(10.0, double(i) / per_decade));
  if (n == 0) g = {lo};
  return g;
}

AsymptoticFit fit_asymptotics(const std::vector<NormRow>& rows, int N, const std::vector<double>& delta_E,
                              int r_max, const FitConfig& cfg) {
  AsymptoticFit fit;
  fit.config = cfg;
  int r_min = r_max;
  for (const auto& row : rows) r_min = std::min(r_min, row.r);
  for (double dE : delta_E) {
    int best_r = -1;
    double best = 0.0;
    for (const auto& row : rows)
      if (row.N == N && row.delta_E == dE && (best_r < 0 || row.norm < best)) best_r = row.r, best = row.norm;
    if (best_r < 0) continue;
    fit.delta_E.push_back(dE);
    fit.r_opt.push_back(best_r);
    fit.optimal_norm.push_back(best);
    if (best_r == r_max || best_r == r_min) {
      std::ostringstream os;
      os << "minimum over r at the scan boundary r=" << best_r << " for delta_E=" << dE;
      fit.warnings.push_back({"FlatMinimumWarning", os.str()});
    }
  }

  std::vector<double> px, py, ex, ey;
  for (std::size_t i = 0; i < fit.delta_E.size(); ++i) {
    const double dE = fit.delta_E[i];
    if (dE <= cfg.power_law_max_dE && fit.r_opt[i] > 0) {
      px.push_back(std::log(dE));
      py.push_back(std::log(double(fit.r_opt[i])));
    }
    const double R = fit.optimal_norm[i];
    if (dE <= cfg.exponential_max_dE && R > 0.0 && R < 1.0) {
      ex.push_back(std::log(dE));
      ey.push_back(std::log(std::abs(std::log(R))));
    }
  }
  if (px.size() >= 2) {
    fit.power_law = least_squares(px, py);
    fit.alpha = -fit.power_law.slope;
  }
  if (ex.size() >= 2) {
    fit.exponential = least_squares(ex, ey);
    fit.d = -fit.exponential.slope;
    if (*fit.d > 0) fit.delta_E0 = std::exp(fit.exponential.intercept / *fit.d);
  }
  return fit;
}

ScanResult optimal_order_scan(const PreparedHamiltonian& prepared, int r_max, int r_trunc, double E,
                              double beta, const std::vector<double>& delta_E, const FitConfig& cfg) {
  if (r_max >= r_trunc) throw RangeError("the scan needs r_max < r_trunc");
  for (double dE : delta_E)
    if (!(dE >= 0.0 && dE < E)) throw RangeError("need 0 <= delta_E < E");
  ScanResult out;
  out.mode = prepared.mode;
  out.E = E;
  out.beta = beta;
  out.N = r_trunc;
  NormalizeOptions opt;
  opt.observer = [&](const NormalizationState& st) {
    if (st.step < 1) return;
    auto rows = remainder_norm_rows(st, E, beta, delta_E);
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  };
  normalize(prepared, r_max, r_trunc, opt);
  out.fit = fit_asymptotics(out.rows, r_trunc, delta_E, r_max, cfg);
  return out;
}

std::vector<ThresholdRow> chaos_threshold_convergence(const PreparedHamiltonian& prepared, int r_lo, int r_hi,
                                                      double e_crit, double numeric_threshold) {
  if (r_lo < 2 || r_hi < r_lo) throw RangeError("need 2 <= r_lo <= r_hi");
  std::vector<ThresholdRow> table;
  NormalizeOptions opt;
  opt.observer = [&](const NormalizationState& st) {
    if (st.step < r_lo) return;
    const auto b = bifurcation_energy(st, 1, 1, e_crit);
    table.push_back({st.step, b.energy, b.energy - numeric_threshold});
  };
  normalize(prepared, r_hi, r_hi, opt);
  return table;
}

}  // namespace mbnf
