#pragma once

// Sparse graded polynomials in the canonical variables (q1, p1, q2, p2)
// with complex coefficients. Every term carries its own book-keeping
// order (the power of the formal parameter lambda).

#include <absl/container/flat_hash_map.h>

#include <array>
#include <compare>
#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace mbnf {

using Complex = std::complex<double>;

inline constexpr double kPruneThreshold = 1e-14;
inline constexpr int kDefaultTruncOrder = 20;

/// Slot index of a canonical variable. The same slots are reused for the
/// original variables (rho, p_rho, z, p_z) once a series is mapped back.
enum class Var : int { q1 = 0, p1 = 1, q2 = 2, p2 = 3 };

/// Exponents of q1^k1 p1^l1 q2^k2 p2^l2.
struct ExponentKey {
  std::uint8_t k1 = 0, l1 = 0, k2 = 0, l2 = 0;

  constexpr int degree() const noexcept { return k1 + l1 + k2 + l2; }
  constexpr int operator[](Var v) const noexcept {
    switch (v) {
      case Var::q1: return k1;
      case Var::p1: return l1;
      case Var::q2: return k2;
      default: return l2;
    }
  }
  constexpr auto operator<=>(const ExponentKey&) const = default;
};

/// Builds a key from plain ints; throws DegreeCapError on negative or
/// out-of-range exponents.
ExponentKey make_key(int k1, int l1, int k2, int l2);

struct GradedTerm {
  ExponentKey key;
  int bk = 0;
  Complex coeff;
};

/// Immutable-by-convention value type. Terms are keyed by (exponents, book-keeping
/// order); terms with bk_order above the truncation order are dropped on insert.
class Polynomial {
 public:
  Polynomial() : Polynomial(kDefaultTruncOrder) {}
  explicit Polynomial(int trunc_order);

  static Polynomial constant(Complex c, int trunc_order = kDefaultTruncOrder);
  static Polynomial monomial(ExponentKey key, Complex c, int bk = 0,
                             int trunc_order = kDefaultTruncOrder);
  static Polynomial variable(Var v, int trunc_order = kDefaultTruncOrder);
  static Polynomial from_terms(std::span<const GradedTerm> terms,
                               int trunc_order = kDefaultTruncOrder);

  int trunc_order() const noexcept { return trunc_; }
  int degree_cap() const noexcept { return 2 * trunc_ + 2; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }

  /// Adds c to the coefficient of (key, bk). No pruning; callers finish
  /// with prune().
  void accumulate(ExponentKey key, int bk, Complex c);
  void prune(double threshold = kPruneThreshold);

  Complex coeff(ExponentKey key, int bk) const;
  /// Sum of the coefficients of `key` over all book-keeping orders.
  Complex coeff_any_order(ExponentKey key) const;

  /// Terms sorted lexicographically by exponent key, then by bk_order.
  std::vector<GradedTerm> terms() const;

  int min_bk() const;  // -1 when empty
  int max_bk() const;  // -1 when empty
  int max_degree() const;

  Polynomial slice(int bk_lo, int bk_hi) const;
  Polynomial filter(const std::function<bool(const GradedTerm&)>& keep) const;
  Polynomial with_trunc(int trunc_order) const;
  /// Returns the same terms with the book-keeping order of each term
  /// replaced by `rule(key)`.
  Polynomial regraded(const std::function<int(ExponentKey)>& rule) const;

  template <class F>
  void for_each(F&& fn) const {
    for (const auto& [packed, c] : terms_) fn(GradedTerm{unpack_key(packed), unpack_bk(packed), c});
  }

  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(Complex s);

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.trunc_ == b.trunc_ && a.terms_ == b.terms_;
  }

  static constexpr std::uint64_t pack(ExponentKey k, int bk) noexcept {
    return (std::uint64_t(bk) << 32) | (std::uint64_t(k.k1) << 24) |
           (std::uint64_t(k.l1) << 16) | (std::uint64_t(k.k2) << 8) |
           std::uint64_t(k.l2);
  }
  static constexpr ExponentKey unpack_key(std::uint64_t p) noexcept {
    return {std::uint8_t(p >> 24), std::uint8_t(p >> 16), std::uint8_t(p >> 8),
            std::uint8_t(p)};
  }
  static constexpr int unpack_bk(std::uint64_t p) noexcept { return int(p >> 32); }

 private:
  int trunc_;
  absl::flat_hash_map<std::uint64_t, Complex> terms_;
};

Polynomial operator+(const Polynomial& a, const Polynomial& b);
Polynomial operator-(const Polynomial& a, const Polynomial& b);
Polynomial operator-(const Polynomial& a);
Polynomial operator*(Complex s, const Polynomial& a);
Polynomial operator*(const Polynomial& a, const Polynomial& b);

/// Distributive product; bk orders add, terms above min(trunc) dropped.
Polynomial multiply(const Polynomial& a, const Polynomial& b);

/// {f,g} = f_q1 g_p1 - f_p1 g_q1 + f_q2 g_p2 - f_p2 g_q2.
Polynomial poisson_bracket(const Polynomial& f, const Polynomial& g);

Polynomial derivative(const Polynomial& f, Var v);

enum class LieDirection { forward = +1, inverse = -1 };

/// exp(+-L_chi) f = sum_k (+-1)^k/k! L_chi^k f with L_chi = {., chi}.
/// Throws NonNilpotentGenerator when chi has terms of book-keeping order 0.
Polynomial lie_transform(const Polynomial& f, const Polynomial& chi,
                         LieDirection direction = LieDirection::forward);

/// Evaluates with lambda = 1 at (q1, p1, q2, p2).
Complex evaluate(const Polynomial& f, const std::array<Complex, 4>& point);

/// Composes f with the variable images: slot v of f is replaced by images[v].
/// Each term keeps its own book-keeping order; images are taken at order 0.
Polynomial substitute(const Polynomial& f, const std::array<Polynomial, 4>& images);

/// Largest |coefficient| difference between two series over the union of terms.
double max_coeff_distance(const Polynomial& a, const Polynomial& b);
double max_abs_coeff(const Polynomial& f);

}  // namespace mbnf
