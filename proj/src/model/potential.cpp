#include "mbnf/potential.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "mbnf/errors.hpp"

namespace mbnf {

namespace {

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

using TermMap = std::map<std::pair<int, int>, double>;

TermMap prune(TermMap m) {
  std::erase_if(m, [](const auto& kv) { return kv.second == 0.0; });
  return m;
}

TermMap add(const TermMap& a, const TermMap& b, double sign) {
  TermMap r = a;
  for (const auto& [k, c] : b) r[k] += sign * c;
  return prune(std::move(r));
}

TermMap mul(const TermMap& a, const TermMap& b) {
  TermMap r;
  for (const auto& [ka, ca] : a)
    for (const auto& [kb, cb] : b) r[{ka.first + kb.first, ka.second + kb.second}] += ca * cb;
  return prune(std::move(r));
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  TermMap parse() {
    TermMap v = expr();
    skip_space();
    if (pos_ < text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return v;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;

  std::pair<int, int> location() const {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < pos_ && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    return {line, col};
  }

  [[noreturn]] void fail(const std::string& what) const {
    const auto [line, col] = location();
    throw ParseError(what, line, col);
  }

  [[noreturn]] void non_polynomial(const std::string& what) const {
    const auto [line, col] = location();
    throw NonPolynomialError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what);
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      } else if (text_[pos_] == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  TermMap expr() {
    TermMap v = term();
    for (;;) {
      if (accept('+')) {
        v = add(v, term(), 1.0);
      } else if (accept('-')) {
        v = add(v, term(), -1.0);
      } else {
        return v;
      }
    }
  }

  TermMap term() {
    TermMap v = unary();
    for (;;) {
      if (accept('*')) {
        v = mul(v, unary());
      } else if (accept('/')) {
        const std::size_t at = pos_;
        TermMap d = unary();
        if (d.empty()) {
          pos_ = at;
          fail("division by zero");
        }
        if (d.size() != 1 || d.begin()->first != std::pair{0, 0}) {
          pos_ = at;
          non_polynomial("division by a non-constant expression");
        }
        const double c = d.begin()->second;
        for (auto& [k, x] : v) x /= c;
      } else {
        return v;
      }
    }
  }

  TermMap unary() {
    if (accept('-')) return add({}, unary(), -1.0);
    if (accept('+')) return unary();
    return power();
  }

  TermMap power() {
    TermMap base = primary();
    if (!accept('^')) return base;
    skip_space();
    const std::size_t start = pos_;
    bool negative = false;
    if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) {
      negative = text_[pos_] == '-';
      ++pos_;
    }
    std::size_t end = pos_;
    while (end < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[end])) || text_[end] == '.'))
      ++end;
    if (end == pos_) fail("expected an integer exponent");
    const std::string digits(text_.substr(pos_, end - pos_));
    if (negative || digits.find('.') != std::string::npos) {
      pos_ = start;
      non_polynomial("exponent '" + std::string(text_.substr(start, end - start)) +
                     "' is not a non-negative integer");
    }
    pos_ = end;
    const int n = std::stoi(digits);
    TermMap r{{{0, 0}, 1.0}};
    for (int i = 0; i < n; ++i) r = mul(r, base);
    return r;
  }

  TermMap primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      TermMap v = expr();
      if (!accept(')')) fail("expected ')'");
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (text_.substr(pos_, 3) == "rho") {
      pos_ += 3;
      return {{{1, 0}, 1.0}};
    }
    if (c == 'z') {
      ++pos_;
      return {{{0, 1}, 1.0}};
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  TermMap number() {
    char* end = nullptr;
    const std::string buf(text_.substr(pos_, 64));
    const double value = std::strtod(buf.c_str(), &end);
    const std::size_t used = static_cast<std::size_t>(end - buf.c_str());
    if (used == 0) fail("malformed number");
    pos_ += used;
    if (value == 0.0) return {};
    return {{{0, 0}, value}};
  }
};

}  // namespace

double PotentialSpec::operator()(double rho, double z) const {
  double s = 0.0;
  for (const auto& [k, c] : terms) s += c * ipow(rho, k.first) * ipow(z, k.second);
  return s;
}

double PotentialSpec::d_rho(double rho, double z) const {
  double s = 0.0;
  for (const auto& [k, c] : terms)
    if (k.first > 0) s += c * k.first * ipow(rho, k.first - 1) * ipow(z, k.second);
  return s;
}

double PotentialSpec::d_z(double rho, double z) const {
  double s = 0.0;
  for (const auto& [k, c] : terms)
    if (k.second > 0) s += c * k.second * ipow(rho, k.first) * ipow(z, k.second - 1);
  return s;
}

double PotentialSpec::d_zz(double rho, double z) const {
  double s = 0.0;
  for (const auto& [k, c] : terms)
    if (k.second > 1) s += c * k.second * (k.second - 1) * ipow(rho, k.first) * ipow(z, k.second - 2);
  return s;
}

double PotentialSpec::d_rho_z(double rho, double z) const {
  double s = 0.0;
  for (const auto& [k, c] : terms)
    if (k.first > 0 && k.second > 0)
      s += c * k.first * k.second * ipow(rho, k.first - 1) * ipow(z, k.second - 1);
  return s;
}

double PotentialSpec::coeff(int a, int b) const {
  auto it = terms.find({a, b});
  return it == terms.end() ? 0.0 : it->second;
}

bool PotentialSpec::even_in(bool rho_exponent) const {
  for (const auto& [k, c] : terms)
    if ((rho_exponent ? k.first : k.second) % 2 != 0) return false;
  return true;
}

int PotentialSpec::max_degree() const {
  int d = 0;
  for (const auto& [k, c] : terms) d = std::max(d, k.first + k.second);
  return d;
}

PotentialSpec build_builtin_model() {
  PotentialSpec v;
  v.source = PotentialSpec::Source::builtin;
  v.terms = {{{2, 0}, 1.0 / 2.0},  {{2, 2}, 1.0 / 2.0},   {{4, 0}, -1.0 / 8.0},
             {{2, 4}, 1.0 / 8.0},  {{4, 2}, -1.0 / 16.0}, {{6, 0}, 1.0 / 128.0}};
  return v;
}

PotentialSpec parse_potential(std::string_view text) {
  PotentialSpec v;
  v.source = PotentialSpec::Source::parsed;
  v.terms = Parser(text).parse();
  return v;
}

std::string print_potential(const PotentialSpec& v) {
  std::ostringstream out;
  bool first = true;
  for (const auto& [k, c] : v.terms) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", std::abs(c));
    if (first) {
      out << (c < 0 ? "-" : "");
    } else {
      out << (c < 0 ? " - " : " + ");
    }
    first = false;
    out << buf;
    if (k.first > 0) out << "*rho^" << k.first;
    if (k.second > 0) out << "*z^" << k.second;
  }
  if (first) out << "0";
  return out.str();
}

double critical_radius(const PotentialSpec& v) {
  // Scan outward for the first local maximum of V(rho, 0).
  const double step = 1e-3;
  double prev = v.d_rho(step, 0.0);
  for (double rho = 2 * step; rho < 50.0; rho += step) {
    const double d = v.d_rho(rho, 0.0);
    if (prev > 0.0 && d <= 0.0) {
      double lo = rho - step, hi = rho;
      for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        (v.d_rho(mid, 0.0) > 0.0 ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
    prev = d;
  }
  return std::numeric_limits<double>::infinity();
}

double critical_energy(const PotentialSpec& v) {
  const double r = critical_radius(v);
  return std::isfinite(r) ? v(r, 0.0) : std::numeric_limits<double>::infinity();
}

}  // namespace mbnf
