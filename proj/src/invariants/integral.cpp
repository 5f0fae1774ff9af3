#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <thread>

#include "mbnf/errors.hpp"
#include "mbnf/invariants.hpp"
#include "mbnf/model.hpp"

namespace mbnf {

double FormalIntegral::operator()(double rho, double p_rho, double z, double p_z) const {
  return evaluate(phi, {Complex(rho), Complex(p_rho), Complex(z), Complex(p_z)}).real();
}

Polynomial formal_integral_canonical(const NormalizationState& state) {
  const int r = state.step;
  Polynomial phi(r);
  const Complex i{0.0, 1.0};
  if (state.mode == Mode::resonant) {
    phi.accumulate(make_key(1, 1, 0, 0), 0, i * double(state.kernel.m1()));
    phi.accumulate(make_key(0, 0, 1, 1), 0, i * double(state.kernel.m2()));
  } else {
    phi.accumulate(make_key(1, 1, 0, 0), 0, i);
  }
  for (int k = r - 1; k >= 0; --k) phi = lie_transform(phi, state.generators[k], LieDirection::inverse);
  return phi;
}

FormalIntegral back_transform(const NormalizationState& state) {
  if (state.step < 1) throw RangeError("back_transform needs at least one normalization step");
  const Polynomial canonical = formal_integral_canonical(state);
  const int trunc = canonical.trunc_order();

  auto images = real_images(state.omega10, trunc);
  if (state.mode == Mode::resonant) {
    const auto second = real_images_second(state.resonance->omega2_star, trunc);
    images[2] = second[2];
    images[3] = second[3];
  }
  const Polynomial mapped = substitute(canonical, images);

  FormalIntegral out;
  out.mode = state.mode;
  out.order = state.step;
  if (state.mode == Mode::resonant) {
    out.m1 = state.kernel.m1();
    out.m2 = state.kernel.m2();
  }
  out.phi = Polynomial(trunc);
  const double tol = kImaginaryResidueTol * std::max(1.0, max_abs_coeff(mapped));
  mapped.for_each([&](const GradedTerm& t) {
    if (std::abs(t.coeff.imag()) >= tol) {
      std::ostringstream os;
      os << "coefficient of rho^" << int(t.key.k1) << " p_rho^" << int(t.key.l1) << " z^" << int(t.key.k2)
         << " p_z^" << int(t.key.l2) << " has imaginary part " << t.coeff.imag();
      throw NonRealIntegralError(os.str());
    }
    out.phi.accumulate(t.key, t.bk, t.coeff.real());
  });
  out.phi.prune(0.0);
  return out;
}

SectionFunction::SectionFunction(const FormalIntegral& phi, const PotentialSpec& v, double E)
    : E_(E), v_(v), phi_(phi), d_prho_(phi), d_z_(phi), d_pz_(phi) {
  phi.phi.for_each([&](const GradedTerm& t) {
    if (t.key.k1 == 0) table_.push(t.key.l1, t.key.k2, t.key.l2, 0, t.coeff.real());
  });
  d_prho_.phi = derivative(phi.phi, Var::p1);
  d_z_.phi = derivative(phi.phi, Var::q2);
  d_pz_.phi = derivative(phi.phi, Var::p2);
}

std::optional<double> SectionFunction::p_rho(double z, double p_z) const {
  const double p2 = 2.0 * (E_ - v_(0.0, z)) - p_z * p_z;
  if (!(p2 >= 0.0)) return std::nullopt;
  return std::sqrt(p2);
}

double SectionFunction::operator()(double z, double p_z) const {
  const auto pr = p_rho(z, p_z);
  if (!pr) throw SeedOutsideCZVError("point outside the allowed region of the section");
  return phi_(0.0, *pr, z, p_z);
}

std::array<double, 2> SectionFunction::gradient(double z, double p_z) const {
  const auto pr = p_rho(z, p_z);
  if (!pr || *pr == 0.0) throw SeedOutsideCZVError("gradient needs an interior point of the section");
  const double fp = d_prho_(0.0, *pr, z, p_z);
  const double dpr_dz = -v_.d_z(0.0, z) / *pr;
  const double dpr_dpz = -p_z / *pr;
  return {d_z_(0.0, *pr, z, p_z) + fp * dpr_dz, d_pz_(0.0, *pr, z, p_z) + fp * dpr_dpz};
}

void SectionFunction::evaluate(std::span<const double> z, std::span<const double> p_z, std::span<double> out) const {
  const std::size_t n = z.size();
  std::vector<double> pr(n), ones(n, 1.0);
  std::vector<std::uint8_t> ok(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = p_rho(z[i], p_z[i]);
    ok[i] = p.has_value();
    pr[i] = p.value_or(0.0);
  }
  simd::eval_batch(table_, {pr, z, p_z, ones}, out);
  for (std::size_t i = 0; i < n; ++i)
    if (!ok[i]) out[i] = std::numeric_limits<double>::quiet_NaN();
}

SectionLevels section_levels(const SectionFunction& f, const GridSpec& spec,
                             const std::vector<std::array<double, 2>>& seeds, int threads) {
  if (spec.nz < 2 || spec.npz < 2) throw ConfigError("section grid needs at least 2x2 points");
  SectionLevels out;
  auto& g = out.grid;
  g.E = f.E();
  g.nz = spec.nz;
  g.npz = spec.npz;
  for (int i = 0; i < g.nz; ++i) g.z.push_back(spec.z_min + (spec.z_max - spec.z_min) * i / (g.nz - 1));

  double band = 0.0;
  for (double z : g.z) band = std::max(band, f.p_rho(z, 0.0).value_or(0.0));
  const double lo = spec.pz_min.value_or(-band), hi = spec.pz_max.value_or(band);
  for (int j = 0; j < g.npz; ++j) g.p_z.push_back(lo + (hi - lo) * j / (g.npz - 1));

  g.phi.assign(std::size_t(g.nz) * g.npz, 0.0);
  g.valid.assign(g.phi.size(), 0);
  auto rows = [&](int j0, int j1) {
    std::vector<double> pz(g.nz);
    for (int j = j0; j < j1; ++j) {
      std::fill(pz.begin(), pz.end(), g.p_z[j]);
      std::span<double> row(g.phi.data() + std::size_t(j) * g.nz, g.nz);
      f.evaluate(g.z, pz, row);
      for (int i = 0; i < g.nz; ++i) g.valid[std::size_t(j) * g.nz + i] = !std::isnan(row[i]);
    }
  };
  const int n_threads = std::max(1, std::min(threads, g.npz));
  std::vector<std::thread> pool;
  const int chunk = (g.npz + n_threads - 1) / n_threads;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(rows, t * chunk, std::min(g.npz, (t + 1) * chunk));
  rows(0, std::min(g.npz, chunk));
  for (auto& t : pool) t.join();

  for (const auto& s : seeds) {
    if (!f.p_rho(s[0], s[1])) {
      std::ostringstream os;
      os << "seed (" << s[0] << ", " << s[1] << ") is outside the allowed region at E=" << f.E();
      throw SeedOutsideCZVError(os.str());
    }
    out.seeds.push_back({s[0], s[1], f(s[0], s[1])});
  }
  return out;
}

std::vector<Island> count_islands(const SectionLevels& levels, std::size_t min_cells) {
  const auto& g = levels.grid;
  const int nz = g.nz, npz = g.npz;
  auto idx = [nz](int i, int j) { return std::size_t(j) * nz + i; };

  int oi = 0, oj = 0;
  for (int i = 1; i < nz; ++i)
    if (std::abs(g.z[i]) < std::abs(g.z[oi])) oi = i;
  for (int j = 1; j < npz; ++j)
    if (std::abs(g.p_z[j]) < std::abs(g.p_z[oj])) oj = j;
  const std::size_t origin = idx(oi, oj);

  std::vector<Island> found;
  std::vector<int> owner(g.phi.size(), -1);  // island index of every accepted cell
  std::vector<std::size_t> members;
  std::vector<int> label(g.phi.size());
  std::vector<std::pair<int, int>> stack;

  // True when the cells labelled `id` separate the origin from the grid edge.
  std::vector<std::uint8_t> seen;
  auto encloses_origin = [&](int id) {
    seen.assign(g.phi.size(), 0);
    std::vector<std::pair<int, int>> todo{{oi, oj}};
    seen[origin] = 1;
    while (!todo.empty()) {
      auto [i, j] = todo.back();
      todo.pop_back();
      if (i == 0 || j == 0 || i == nz - 1 || j == npz - 1) return false;
      const int nb[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
      for (const auto& [a, b] : nb) {
        const std::size_t c = idx(a, b);
        if (seen[c] || label[c] == id) continue;
        seen[c] = 1;
        todo.push_back({a, b});
      }
    }
    return true;
  };
  for (const auto& seed : levels.seeds) {
    for (int side : {+1, -1}) {
      auto inside = [&](int i, int j) { return g.is_valid(i, j) && side * (g.at(i, j) - seed.level) > 0.0; };
      std::fill(label.begin(), label.end(), 0);
      int next = 0;
      for (int j0 = 0; j0 < npz; ++j0)
        for (int i0 = 0; i0 < nz; ++i0) {
          if (label[idx(i0, j0)] || !inside(i0, j0)) continue;
          label[idx(i0, j0)] = ++next;
          stack.assign(1, {i0, j0});
          members.clear();
          bool compact = true, has_origin = false;
          std::size_t cells = 0, best = idx(i0, j0);
          while (!stack.empty()) {
            auto [i, j] = stack.back();
            stack.pop_back();
            ++cells;
            const std::size_t c = idx(i, j);
            members.push_back(c);
            if (c == origin) has_origin = true;
            if (side * g.phi[c] > side * g.phi[best]) best = c;
            if (i == 0 || j == 0 || i == nz - 1 || j == npz - 1) compact = false;
            const int nb[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
            for (const auto& [a, b] : nb) {
              if (a < 0 || b < 0 || a >= nz || b >= npz) continue;
              if (!g.is_valid(a, b)) {
                compact = false;
                continue;
              }
              if (!label[idx(a, b)] && inside(a, b)) {
                label[idx(a, b)] = next;
                stack.push_back({a, b});
              }
            }
          }
          if (!compact || has_origin || cells < min_cells || encloses_origin(next)) continue;
          // Components of different levels that share a cell belong to the same island.
          int same = -1;
          for (std::size_t c : members)
            if (owner[c] >= 0) same = owner[c];
          const Island island{g.z[best % nz], g.p_z[best / nz], cells};
          if (same < 0) {
            same = int(found.size());
            found.push_back(island);
          } else if (cells > found[same].cells) {
            found[same] = island;
          }
          for (std::size_t c : members) owner[c] = same;
        }
    }
  }
  return found;
}

}  // namespace mbnf
