#include "mbnf/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "mbnf/errors.hpp"

namespace mbnf {

namespace odeint = boost::numeric::odeint;

namespace {

// V and its derivatives with the exponents unpacked once.
class ForceField {
 public:
  explicit ForceField(const PotentialSpec& v) {
    for (const auto& [k, c] : v.terms) terms_.push_back({k.first, k.second, c});
  }

  double value(double rho, double z) const {
    double s = 0.0;
    for (const auto& t : terms_) s += t.c * ipow(rho, t.a) * ipow(z, t.b);
    return s;
  }
  void gradient(double rho, double z, double& v_rho, double& v_z) const {
    v_rho = v_z = 0.0;
    for (const auto& t : terms_) {
      if (t.a > 0) v_rho += t.c * t.a * ipow(rho, t.a - 1) * ipow(z, t.b);
      if (t.b > 0) v_z += t.c * t.b * ipow(rho, t.a) * ipow(z, t.b - 1);
    }
  }
  // V_zz and V_rho at z = 0.
  void equatorial(double rho, double& v_rho, double& v_zz) const {
    v_rho = v_zz = 0.0;
    for (const auto& t : terms_) {
      if (t.b == 0 && t.a > 0) v_rho += t.c * t.a * ipow(rho, t.a - 1);
      if (t.b == 2) v_zz += 2.0 * t.c * ipow(rho, t.a);
    }
  }

 private:
  struct Term {
    int a, b;
    double c;
  };
  static double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
  }
  std::vector<Term> terms_;
};

// Controlled RKF78 stepping that keeps the last step so states inside it can
// be recomputed with a single explicit step from its start.
template <std::size_t N>
class Stepper {
 public:
  using State = std::array<double, N>;
  using Rhs = std::function<void(const State&, State&, double)>;

  Stepper(Rhs rhs, const State& x0, double t0, const IntegratorConfig& cfg)
      : rhs_(std::move(rhs)),
        controlled_(odeint::make_controlled(cfg.tol * cfg.step_tol_factor, cfg.tol * cfg.step_tol_factor,
                                          odeint::runge_kutta_fehlberg78<State>())),
        x_(x0),
        prev_(x0),
        t_(t0),
        t_prev_(t0),
        dt_(cfg.initial_step) {}

  void step(double t_limit = std::numeric_limits<double>::infinity()) {
    prev_ = x_;
    t_prev_ = t_;
    double dt = std::min(dt_, t_limit - t_);
    const bool clipped = dt < dt_;
    for (int attempt = 0;; ++attempt) {
      if (controlled_.try_step(rhs_, x_, t_, dt) == odeint::success) break;
      if (attempt > 500) throw Error("step size control failed");
    }
    if (!clipped) dt_ = dt;
  }

  State at(double t) const {
    if (t == t_prev_) return prev_;
    State out;
    odeint::runge_kutta_fehlberg78<State> rk;
    rk.do_step(rhs_, prev_, t_prev_, out, t - t_prev_);
    return out;
  }

  // Root of g inside the last step; g(prev) and g(x) must differ in sign.
  std::pair<double, State> locate(const std::function<double(const State&)>& g) const {
    auto f = [&](double t) { return g(at(t)); };
    boost::uintmax_t iters = 200;
    double lo = t_prev_, hi = t_;
    double flo = g(prev_), fhi = g(x_);
    if (flo == 0.0) return {lo, prev_};
    if (fhi == 0.0) return {hi, x_};
    auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi,
                                                    boost::math::tools::eps_tolerance<double>(52), iters);
    const double t = std::abs(f(a)) <= std::abs(f(b)) ? a : b;
    return {t, at(t)};
  }

  const State& x() const { return x_; }
  const State& prev() const { return prev_; }
  double t() const { return t_; }

 private:
  Rhs rhs_;
  decltype(odeint::make_controlled(1.0, 1.0, odeint::runge_kutta_fehlberg78<State>())) controlled_;
  State x_, prev_;
  double t_, t_prev_, dt_;
};

using Orbit4 = std::array<double, 4>;  // rho, z, p_rho, p_z

Stepper<4>::Rhs orbit_rhs(const ForceField& f) {
  return [&f](const Orbit4& x, Orbit4& dx, double) {
    double vr, vz;
    f.gradient(x[0], x[1], vr, vz);
    dx[0] = x[2];
    dx[1] = x[3];
    dx[2] = -vr;
    dx[3] = -vz;
  };
}

void check_escape(const Orbit4& x, double t, const IntegratorConfig& cfg) {
  if (std::abs(x[0]) > cfg.escape_bound || std::abs(x[1]) > cfg.escape_bound) {
    std::ostringstream os;
    os << "orbit left |rho|,|z| <= " << cfg.escape_bound << " at t=" << t;
    throw EscapeDetected(os.str());
  }
}

}  // namespace

double energy(const PotentialSpec& v, const OrbitState& s) {
  return 0.5 * (s.p_rho * s.p_rho + s.p_z * s.p_z) + v(s.rho, s.z);
}

std::vector<OrbitState> integrate(const PotentialSpec& v, const OrbitState& initial, double T,
                                  const IntegratorConfig& cfg) {
  const ForceField f(v);
  Stepper<4> st(orbit_rhs(f), {initial.rho, initial.z, initial.p_rho, initial.p_z}, initial.t, cfg);
  const double t_end = initial.t + T;
  std::vector<OrbitState> out{initial};
  while (st.t() < t_end) {
    st.step(t_end);
    const auto& x = st.x();
    check_escape(x, st.t(), cfg);
    out.push_back({x[0], x[1], x[2], x[3], st.t()});
  }
  return out;
}

OrbitState section_point(const PotentialSpec& v, double E, double z, double p_z) {
  const double p2 = 2.0 * (E - v(0.0, z)) - p_z * p_z;
  if (!(p2 > 0.0)) {
    std::ostringstream os;
    os << "seed (" << z << ", " << p_z << ") is outside the allowed region at E=" << E;
    throw SeedOutsideCZVError(os.str());
  }
  return {0.0, z, std::sqrt(p2), p_z, 0.0};
}

namespace {

std::vector<Crossing> section_of_seed(const ForceField& f, const OrbitState& s0, std::size_t id, int n,
                                      const IntegratorConfig& cfg) {
  Stepper<4> st(orbit_rhs(f), {s0.rho, s0.z, s0.p_rho, s0.p_z}, 0.0, cfg);
  std::vector<Crossing> out;
  out.reserve(n);
  const auto rho = [](const Orbit4& x) { return x[0]; };
  while (int(out.size()) < n) {
    st.step();
    check_escape(st.x(), st.t(), cfg);
    if (st.prev()[0] < 0.0 && st.x()[0] >= 0.0) {
      const auto [t, x] = st.locate(rho);
      if (x[2] > 0.0) out.push_back({x[1], x[3], id});
    }
  }
  return out;
}

}  // namespace

SectionSet poincare_section(const PotentialSpec& v, const std::vector<std::array<double, 2>>& seeds, double E,
                            int n_crossings, const IntegratorConfig& cfg, int threads) {
  const ForceField f(v);
  std::vector<OrbitState> starts;
  for (const auto& s : seeds) starts.push_back(section_point(v, E, s[0], s[1]));

  std::vector<std::vector<Crossing>> per_seed(seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < starts.size();) {
      try {
        per_seed[i] = section_of_seed(f, starts[i], i, n_crossings, cfg);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(threads, int(starts.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  SectionSet out;
  out.E = E;
  for (auto& c : per_seed) out.crossings.insert(out.crossings.end(), c.begin(), c.end());
  return out;
}

double equatorial_turning_point(const PotentialSpec& v, double E) {
  const double rc = critical_radius(v);
  const double ec = v(rc, 0.0);
  if (!(E > 0.0 && E < ec)) {
    std::ostringstream os;
    os << "energy " << E << " outside (0, " << ec << ")";
    throw RangeError(os.str());
  }
  auto g = [&](double r) { return v(r, 0.0) - E; };
  boost::uintmax_t iters = 200;
  auto [a, b] = boost::math::tools::toms748_solve(g, 0.0, rc, boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (a + b);
}

MonodromyResult central_orbit_monodromy(const PotentialSpec& v, double E, const IntegratorConfig& cfg) {
  using State = std::array<double, 6>;  // rho, p_rho, (dz, dpz) for two initial vectors
  const ForceField f(v);
  auto rhs = [&f](const State& x, State& dx, double) {
    double vr, vzz;
    f.equatorial(x[0], vr, vzz);
    dx[0] = x[1];
    dx[1] = -vr;
    dx[2] = x[3];
    dx[3] = -vzz * x[2];
    dx[4] = x[5];
    dx[5] = -vzz * x[4];
  };
  const double rho_max = equatorial_turning_point(v, E);
  Stepper<6> st(rhs, {rho_max, 0.0, 1.0, 0.0, 0.0, 1.0}, 0.0, cfg);
  const auto p_rho = [](const State& x) { return x[1]; };

  MonodromyResult out;
  out.E = E;
  bool have_half = false;
  for (int guard = 0; guard < 10'000'000; ++guard) {
    st.step();
    const double a = st.prev()[1], b = st.x()[1];
    if (!have_half && a < 0.0 && b >= 0.0) {
      const auto [t, x] = st.locate(p_rho);
      out.M_half = {{{x[2], x[4]}, {x[3], x[5]}}};
      have_half = true;
    } else if (have_half && a > 0.0 && b <= 0.0) {
      const auto [t, x] = st.locate(p_rho);
      out.period = t;
      out.M = {{{x[2], x[4]}, {x[3], x[5]}}};
      break;
    }
  }
  out.trace = out.M[0][0] + out.M[1][1];
  out.trace_half = out.M_half[0][0] + out.M_half[1][1];
  out.stable = std::abs(out.trace) < 2.0;
  out.rotation_number = std::abs(out.trace_half) <= 2.0 ? std::acos(out.trace_half / 2.0) / M_PI
                                                        : std::numeric_limits<double>::quiet_NaN();
  return out;
}

namespace {

// First sign change of g on a uniform scan of (0, E_crit), refined to e_tol.
double first_root(const PotentialSpec& v, const std::function<double(double)>& g, double e_tol, const char* what) {
  const double ec = critical_energy(v);
  const int n = 60;
  double lo = ec * 0.5 / n, glo = g(lo);
  for (int i = 1; i < n; ++i) {
    const double hi = ec * (i + 0.5) / n;
    const double ghi = g(hi);
    if ((glo > 0.0) != (ghi > 0.0)) {
      boost::uintmax_t iters = 200;
      auto tol = [e_tol](double a, double b) { return std::abs(b - a) < e_tol; };
      auto [a, b] = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, tol, iters);
      return 0.5 * (a + b);
    }
    lo = hi;
    glo = ghi;
  }
  throw NoBifurcationInRange(std::string("no ") + what + " below E_crit");
}

}  // namespace

double numerical_chaos_threshold(const PotentialSpec& v, const IntegratorConfig& cfg, double e_tol) {
  return first_root(v, [&](double E) { return central_orbit_monodromy(v, E, cfg).trace_half + 2.0; }, e_tol,
                    "stability transition");
}

double numerical_bifurcation_energy(const PotentialSpec& v, int m1, int m2, const IntegratorConfig& cfg,
                                    double e_tol) {
  if (m1 <= 0 || m2 <= 0) throw RangeError("resonance integers must be positive");
  if (m2 > m1) throw NoBifurcationInRange("omega2/omega1 stays below 1 up to the stability transition");
  if (m1 == m2) return numerical_chaos_threshold(v, cfg, e_tol);
  const double target = double(m2) / m1;
  // cos(pi nu) is monotone in nu on [0, 1]; compare traces to avoid acos at the edges.
  const double trace_target = 2.0 * std::cos(M_PI * target);
  return first_root(v, [&](double E) { return trace_target - central_orbit_monodromy(v, E, cfg).trace_half; },
                    e_tol, "resonance crossing");
}

}  // namespace mbnf
