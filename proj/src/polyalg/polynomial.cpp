#include "mbnf/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mbnf/errors.hpp"

namespace mbnf {

namespace {

struct FlatTerm {
  std::uint8_t e[4];
  int bk;
  Complex c;
  std::uint64_t packed;
};

std::vector<FlatTerm> flatten(const Polynomial& p) {
  std::vector<FlatTerm> out;
  out.reserve(p.size());
  p.for_each([&](const GradedTerm& t) {
    out.push_back({{t.key.k1, t.key.l1, t.key.k2, t.key.l2}, t.bk, t.coeff, Polynomial::pack(t.key, t.bk)});
  });
  // bk-major key order: products are accumulated in the same sequence on every run,
  // independent of hash-table layout.
  std::sort(out.begin(), out.end(), [](const FlatTerm& a, const FlatTerm& b) { return a.packed < b.packed; });
  return out;
}

void check_trunc(int trunc_order) {
  if (trunc_order < 0 || trunc_order > 120)
    throw DegreeCapError("truncation order out of range: " + std::to_string(trunc_order));
}

}  // namespace

ExponentKey make_key(int k1, int l1, int k2, int l2) {
  for (int e : {k1, l1, k2, l2})
    if (e < 0 || e > 255) throw DegreeCapError("exponent out of range: " + std::to_string(e));
  return {std::uint8_t(k1), std::uint8_t(l1), std::uint8_t(k2), std::uint8_t(l2)};
}

Polynomial::Polynomial(int trunc_order) : trunc_(trunc_order) { check_trunc(trunc_order); }

Polynomial Polynomial::constant(Complex c, int trunc_order) {
  return monomial({}, c, 0, trunc_order);
}

Polynomial Polynomial::monomial(ExponentKey key, Complex c, int bk, int trunc_order) {
  Polynomial p(trunc_order);
  p.accumulate(key, bk, c);
  p.prune();
  return p;
}

Polynomial Polynomial::variable(Var v, int trunc_order) {
  ExponentKey key;
  switch (v) {
    case Var::q1: key.k1 = 1; break;
    case Var::p1: key.l1 = 1; break;
    case Var::q2: key.k2 = 1; break;
    case Var::p2: key.l2 = 1; break;
  }
  return monomial(key, 1.0, 0, trunc_order);
}

Polynomial Polynomial::from_terms(std::span<const GradedTerm> terms, int trunc_order) {
  Polynomial p(trunc_order);
  for (const auto& t : terms) p.accumulate(t.key, t.bk, t.coeff);
  p.prune();
  return p;
}

void Polynomial::accumulate(ExponentKey key, int bk, Complex c) {
  if (bk < 0) throw DegreeCapError("negative book-keeping order");
  if (bk > trunc_) return;
  if (key.degree() > degree_cap())
    throw DegreeCapError("term degree " + std::to_string(key.degree()) + " exceeds cap " +
                         std::to_string(degree_cap()));
  terms_[pack(key, bk)] += c;
}

void Polynomial::prune(double threshold) {
  absl::erase_if(terms_, [threshold](const auto& kv) { return std::abs(kv.second) < threshold; });
}

Complex Polynomial::coeff(ExponentKey key, int bk) const {
  auto it = terms_.find(pack(key, bk));
  return it == terms_.end() ? Complex{} : it->second;
}

Complex Polynomial::coeff_any_order(ExponentKey key) const {
  Complex sum{};
  for (int bk = 0; bk <= trunc_; ++bk) sum += coeff(key, bk);
  return sum;
}

std::vector<GradedTerm> Polynomial::terms() const {
  std::vector<GradedTerm> out;
  out.reserve(terms_.size());
  for_each([&](const GradedTerm& t) { out.push_back(t); });
  std::sort(out.begin(), out.end(), [](const GradedTerm& a, const GradedTerm& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.bk < b.bk;
  });
  return out;
}

int Polynomial::min_bk() const {
  int m = -1;
  for (const auto& [packed, c] : terms_) {
    int bk = unpack_bk(packed);
    if (m < 0 || bk < m) m = bk;
  }
  return m;
}

int Polynomial::max_bk() const {
  int m = -1;
  for (const auto& [packed, c] : terms_) m = std::max(m, unpack_bk(packed));
  return m;
}

int Polynomial::max_degree() const {
  int m = -1;
  for (const auto& [packed, c] : terms_) m = std::max(m, unpack_key(packed).degree());
  return m;
}

Polynomial Polynomial::slice(int bk_lo, int bk_hi) const {
  return filter([=](const GradedTerm& t) { return t.bk >= bk_lo && t.bk <= bk_hi; });
}

Polynomial Polynomial::filter(const std::function<bool(const GradedTerm&)>& keep) const {
  Polynomial out(trunc_);
  for (const auto& [packed, c] : terms_)
    if (keep(GradedTerm{unpack_key(packed), unpack_bk(packed), c})) out.terms_.emplace(packed, c);
  return out;
}

Polynomial Polynomial::with_trunc(int trunc_order) const {
  Polynomial out(trunc_order);
  for (const auto& [packed, c] : terms_) out.accumulate(unpack_key(packed), unpack_bk(packed), c);
  return out;
}

Polynomial Polynomial::regraded(const std::function<int(ExponentKey)>& rule) const {
  Polynomial out(trunc_);
  for (const auto& [packed, c] : terms_) out.accumulate(unpack_key(packed), rule(unpack_key(packed)), c);
  out.prune();
  return out;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  if (other.trunc_ < trunc_) *this = with_trunc(other.trunc_);
  for (const auto& [packed, c] : other.terms_)
    if (unpack_bk(packed) <= trunc_) terms_[packed] += c;
  prune();
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  if (other.trunc_ < trunc_) *this = with_trunc(other.trunc_);
  for (const auto& [packed, c] : other.terms_)
    if (unpack_bk(packed) <= trunc_) terms_[packed] -= c;
  prune();
  return *this;
}

Polynomial& Polynomial::operator*=(Complex s) {
  for (auto& [packed, c] : terms_) c *= s;
  prune();
  return *this;
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  Polynomial r = a;
  r += b;
  return r;
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) {
  Polynomial r = a;
  r -= b;
  return r;
}

Polynomial operator-(const Polynomial& a) { return Complex(-1.0) * a; }

Polynomial operator*(Complex s, const Polynomial& a) {
  Polynomial r = a;
  r *= s;
  return r;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) { return multiply(a, b); }

Polynomial multiply(const Polynomial& a, const Polynomial& b) {
  const int trunc = std::min(a.trunc_order(), b.trunc_order());
  Polynomial out(trunc);
  const auto fa = flatten(a);
  const auto fb = flatten(b);
  for (const auto& x : fa) {
    for (const auto& y : fb) {
      const int bk = x.bk + y.bk;
      if (bk > trunc) break;  // fb is sorted by bk
      out.accumulate({std::uint8_t(x.e[0] + y.e[0]), std::uint8_t(x.e[1] + y.e[1]),
                      std::uint8_t(x.e[2] + y.e[2]), std::uint8_t(x.e[3] + y.e[3])},
                     bk, x.c * y.c);
    }
  }
  out.prune();
  return out;
}

Polynomial poisson_bracket(const Polynomial& f, const Polynomial& g) {
  const int trunc = std::min(f.trunc_order(), g.trunc_order());
  Polynomial out(trunc);
  const auto ff = flatten(f);
  const auto fg = flatten(g);
  for (const auto& x : ff) {
    for (const auto& y : fg) {
      const int bk = x.bk + y.bk;
      if (bk > trunc) break;
      const Complex c = x.c * y.c;
      // Pair (q1,p1): both derivative products land on the same monomial.
      const int w1 = int(x.e[0]) * y.e[1] - int(x.e[1]) * y.e[0];
      if (w1 != 0) {
        out.accumulate({std::uint8_t(x.e[0] + y.e[0] - 1), std::uint8_t(x.e[1] + y.e[1] - 1),
                        std::uint8_t(x.e[2] + y.e[2]), std::uint8_t(x.e[3] + y.e[3])},
                       bk, double(w1) * c);
      }
      const int w2 = int(x.e[2]) * y.e[3] - int(x.e[3]) * y.e[2];
      if (w2 != 0) {
        out.accumulate({std::uint8_t(x.e[0] + y.e[0]), std::uint8_t(x.e[1] + y.e[1]),
                        std::uint8_t(x.e[2] + y.e[2] - 1), std::uint8_t(x.e[3] + y.e[3] - 1)},
                       bk, double(w2) * c);
      }
    }
  }
  out.prune();
  return out;
}

Polynomial derivative(const Polynomial& f, Var v) {
  Polynomial out(f.trunc_order());
  const int slot = static_cast<int>(v);
  f.for_each([&](const GradedTerm& t) {
    std::uint8_t e[4] = {t.key.k1, t.key.l1, t.key.k2, t.key.l2};
    if (e[slot] == 0) return;
    const double n = e[slot];
    --e[slot];
    out.accumulate({e[0], e[1], e[2], e[3]}, t.bk, n * t.coeff);
  });
  out.prune();
  return out;
}

Polynomial lie_transform(const Polynomial& f, const Polynomial& chi, LieDirection direction) {
  if (chi.empty()) return f;
  if (chi.min_bk() < 1)
    throw NonNilpotentGenerator("generator has terms of book-keeping order 0");
  const double sign = direction == LieDirection::forward ? 1.0 : -1.0;
  Polynomial result = f.with_trunc(std::min(f.trunc_order(), chi.trunc_order()));
  Polynomial term = result;
  for (int k = 1; !term.empty(); ++k) {
    term = poisson_bracket(term, chi);
    term *= sign / k;
    result += term;
  }
  return result;
}

Complex evaluate(const Polynomial& f, const std::array<Complex, 4>& point) {
  if (f.empty()) return {};
  const int dmax = f.max_degree();
  std::array<std::vector<Complex>, 4> pow;
  for (int v = 0; v < 4; ++v) {
    pow[v].resize(dmax + 1);
    pow[v][0] = 1.0;
    for (int e = 1; e <= dmax; ++e) pow[v][e] = pow[v][e - 1] * point[v];
  }
  Complex sum{};
  for (const auto& t : f.terms())
    sum += t.coeff * pow[0][t.key.k1] * pow[1][t.key.l1] * pow[2][t.key.k2] * pow[3][t.key.l2];
  return sum;
}

Polynomial substitute(const Polynomial& f, const std::array<Polynomial, 4>& images) {
  const int trunc = f.trunc_order();
  const int work_trunc = trunc;
  std::array<std::vector<Polynomial>, 4> pow;
  auto power = [&](int v, int e) -> const Polynomial& {
    auto& cache = pow[v];
    if (cache.empty()) cache.push_back(Polynomial::constant(1.0, work_trunc));
    while (int(cache.size()) <= e) cache.push_back(multiply(cache.back(), images[v].with_trunc(work_trunc)));
    return cache[e];
  };
  std::map<std::pair<int, int>, Polynomial> first_pair, second_pair;
  auto pair_product = [&](auto& memo, int va, int ea, int vb, int eb) -> const Polynomial& {
    auto it = memo.find({ea, eb});
    if (it != memo.end()) return it->second;
    return memo.emplace(std::pair{ea, eb}, multiply(power(va, ea), power(vb, eb))).first->second;
  };

  Polynomial out(trunc);
  for (const auto& t : f.terms()) {
    const Polynomial& a = pair_product(first_pair, 0, t.key.k1, 1, t.key.l1);
    const Polynomial& b = pair_product(second_pair, 2, t.key.k2, 3, t.key.l2);
    const Polynomial ab = multiply(a, b);
    ab.for_each([&](const GradedTerm& u) { out.accumulate(u.key, u.bk + t.bk, u.coeff * t.coeff); });
  }
  out.prune();
  return out;
}

double max_coeff_distance(const Polynomial& a, const Polynomial& b) {
  double d = 0.0;
  a.for_each([&](const GradedTerm& t) { d = std::max(d, std::abs(t.coeff - b.coeff(t.key, t.bk))); });
  b.for_each([&](const GradedTerm& t) { d = std::max(d, std::abs(t.coeff - a.coeff(t.key, t.bk))); });
  return d;
}

double max_abs_coeff(const Polynomial& f) {
  double m = 0.0;
  f.for_each([&](const GradedTerm& t) { m = std::max(m, std::abs(t.coeff)); });
  return m;
}

}  // namespace mbnf
