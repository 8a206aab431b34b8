#pragma once

// Closed symbolic class: finite sums of generalized power products
//   c * prod_i (x_i - a_i)^{p_i}
// with real coefficients and real exponents. The initial points a_i belong
// to a Context, never to individual terms.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "special_functions.hpp"

namespace fracforms {

/// Two exponents closer than this are the same exponent.
inline constexpr double kExponentTolerance = 1e-9;
/// Terms whose |coefficient| falls below this are dropped.
inline constexpr double kCoefficientDropThreshold = 1e-12;

using Index = std::size_t;

/// Coordinate names plus one initial point per coordinate.
class Context {
 public:
  Context() = default;
  explicit Context(std::vector<std::string> names, std::vector<double> origin = {})
      : names_(std::move(names)), origin_(std::move(origin)) {
    if (names_.empty()) throw std::invalid_argument("Context: at least one coordinate required");
    if (origin_.empty()) origin_.assign(names_.size(), 0.0);
    if (origin_.size() != names_.size())
      throw std::invalid_argument("Context: origin has " + std::to_string(origin_.size()) +
                                  " entries for " + std::to_string(names_.size()) + " coordinates");
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (!valid_identifier(names_[i]))
        throw std::invalid_argument("Context: invalid coordinate name '" + names_[i] + "'");
      for (std::size_t j = 0; j < i; ++j)
        if (names_[i] == names_[j])
          throw std::invalid_argument("Context: duplicate coordinate '" + names_[i] + "'");
    }
  }

  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::string& name(Index i) const { return names_.at(i); }
  const std::vector<double>& origin() const noexcept { return origin_; }
  double origin(Index i) const { return origin_.at(i); }

  bool origin_is_zero() const {
    return std::all_of(origin_.begin(), origin_.end(), [](double a) { return a == 0.0; });
  }

  std::optional<Index> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return i;
    return std::nullopt;
  }

  Index require(std::string_view name) const {
    if (auto i = index_of(name)) return *i;
    throw std::invalid_argument("unknown coordinate '" + std::string(name) + "'");
  }

  static bool valid_identifier(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    return std::all_of(s.begin(), s.end(),
                       [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
  }

  friend bool operator==(const Context&, const Context&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<double> origin_;
};

/// Sparse exponent map: coordinate -> exponent. A missing key means exponent 0.
using Exponents = std::map<Index, double>;

struct PowerTerm {
  double coeff = 0.0;
  Exponents exps;

  double exponent(Index i) const {
    auto it = exps.find(i);
    return it == exps.end() ? 0.0 : it->second;
  }
};

namespace detail {

inline double snap_exponent(double p) {
  const double r = std::round(p);
  return std::abs(p - r) <= kExponentTolerance ? r : p;
}

inline Exponents normalized(const Exponents& e) {
  Exponents out;
  for (auto [i, p] : e) {
    const double s = snap_exponent(p);
    if (s != 0.0) out.emplace(i, s);
  }
  return out;
}

inline bool same_exponents(const Exponents& a, const Exponents& b) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      if (std::abs(ia->second) > kExponentTolerance) return false;
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      if (std::abs(ib->second) > kExponentTolerance) return false;
      ++ib;
    } else {
      if (std::abs(ia->second - ib->second) > kExponentTolerance) return false;
      ++ia;
      ++ib;
    }
  }
  return true;
}

/// Lexicographic over coordinate index, larger exponent first.
inline bool term_precedes(const Exponents& a, const Exponents& b) {
  Index hi = 0;
  if (!a.empty()) hi = std::max(hi, a.rbegin()->first);
  if (!b.empty()) hi = std::max(hi, b.rbegin()->first);
  for (Index i = 0; i <= hi; ++i) {
    auto fa = a.find(i);
    auto fb = b.find(i);
    const double pa = fa == a.end() ? 0.0 : fa->second;
    const double pb = fb == b.end() ? 0.0 : fb->second;
    if (pa != pb) return pa > pb;
  }
  return false;
}

}  // namespace detail

class Expr;
Expr canonicalize(std::vector<PowerTerm> terms);

/// Immutable, always-canonical sum of power terms. The empty sum is zero.
class Expr {
 public:
  Expr() = default;

  static Expr constant(double c) { return canonicalize({PowerTerm{c, {}}}); }
  static Expr monomial(double c, Exponents exps) { return canonicalize({PowerTerm{c, std::move(exps)}}); }
  /// (x_i - a_i)^p
  static Expr coordinate(Index i, double p = 1.0) { return monomial(1.0, {{i, p}}); }

  const std::vector<PowerTerm>& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }
  std::size_t size() const noexcept { return terms_.size(); }

  /// Largest coefficient magnitude, 0 for the zero expression.
  double scale() const {
    double s = 0.0;
    for (const auto& t : terms_) s = std::max(s, std::abs(t.coeff));
    return s;
  }

  /// Highest exponent index referenced, plus one.
  std::size_t arity() const {
    std::size_t n = 0;
    for (const auto& t : terms_)
      if (!t.exps.empty()) n = std::max(n, t.exps.rbegin()->first + 1);
    return n;
  }

  friend Expr operator+(const Expr& a, const Expr& b) {
    std::vector<PowerTerm> t = a.terms_;
    t.insert(t.end(), b.terms_.begin(), b.terms_.end());
    return canonicalize(std::move(t));
  }
  friend Expr operator-(const Expr& a) { return a * -1.0; }
  friend Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }
  friend Expr operator*(const Expr& a, double s) {
    std::vector<PowerTerm> t = a.terms_;
    for (auto& term : t) term.coeff *= s;
    return canonicalize(std::move(t));
  }
  friend Expr operator*(double s, const Expr& a) { return a * s; }
  friend Expr operator*(const Expr& a, const Expr& b) {
    std::vector<PowerTerm> t;
    t.reserve(a.size() * b.size());
    for (const auto& x : a.terms_)
      for (const auto& y : b.terms_) {
        PowerTerm p{x.coeff * y.coeff, x.exps};
        for (auto [i, e] : y.exps) p.exps[i] += e;
        t.push_back(std::move(p));
      }
    return canonicalize(std::move(t));
  }
  Expr& operator+=(const Expr& o) { return *this = *this + o; }
  Expr& operator-=(const Expr& o) { return *this = *this - o; }

  /// Structural equality of canonical forms: same term count, exponents
  /// equal within tolerance, coefficients bit-equal.
  friend bool operator==(const Expr& a, const Expr& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k)
      if (a.terms_[k].coeff != b.terms_[k].coeff ||
          !detail::same_exponents(a.terms_[k].exps, b.terms_[k].exps))
        return false;
    return true;
  }

 private:
  friend Expr canonicalize(std::vector<PowerTerm> terms);
  std::vector<PowerTerm> terms_;
};

/// Merge like terms (exponents equal within 1e-9), drop coefficients below
/// 1e-12, and sort.
inline Expr canonicalize(std::vector<PowerTerm> terms) {
  std::vector<PowerTerm> merged;
  for (auto& t : terms) {
    if (!std::isfinite(t.coeff)) throw DomainError("non-finite coefficient");
    Exponents e = detail::normalized(t.exps);
    auto it = std::find_if(merged.begin(), merged.end(),
                           [&](const PowerTerm& m) { return detail::same_exponents(m.exps, e); });
    if (it == merged.end())
      merged.push_back(PowerTerm{t.coeff, std::move(e)});
    else
      it->coeff += t.coeff;
  }
  std::erase_if(merged, [](const PowerTerm& t) { return std::abs(t.coeff) < kCoefficientDropThreshold; });
  std::stable_sort(merged.begin(), merged.end(),
                   [](const PowerTerm& a, const PowerTerm& b) { return detail::term_precedes(a.exps, b.exps); });
  Expr out;
  out.terms_ = std::move(merged);
  return out;
}

inline Expr canonicalize(const Expr& e) { return e; }

inline bool is_zero(const Expr& e) { return e.is_zero(); }

/// Canonical equality up to a coefficient tolerance relative to the larger
/// operand (absolute below scale 1).
inline bool approx_equal(const Expr& a, const Expr& b, double tol) {
  const Expr d = a - b;
  const double scale = std::max({1.0, a.scale(), b.scale()});
  return std::all_of(d.terms().begin(), d.terms().end(),
                     [&](const PowerTerm& t) { return std::abs(t.coeff) <= tol * scale; });
}

/// Numeric value at `point` (absolute coordinates; bases are point[i] - a_i).
inline double eval(const Expr& e, const Context& ctx, std::span<const double> point) {
  if (point.size() != ctx.size())
    throw std::invalid_argument("eval: point has " + std::to_string(point.size()) + " coordinates, context has " +
                                std::to_string(ctx.size()));
  double sum = 0.0;
  for (const auto& t : e.terms()) {
    double v = t.coeff;
    for (auto [i, p] : t.exps) {
      if (i >= ctx.size()) throw std::invalid_argument("eval: coordinate index out of range");
      const double base = point[i] - ctx.origin(i);
      if (base <= 0.0 && !is_whole(p, 0.0))
        throw DomainError("eval: non-positive base " + std::to_string(base) + " for '" + ctx.name(i) +
                          "' under fractional exponent " + std::to_string(p));
      if (base == 0.0 && p < 0.0)
        throw DomainError("eval: zero base for '" + ctx.name(i) + "' under negative exponent");
      v *= std::pow(base, p);
    }
    sum += v;
  }
  return sum;
}

/// Ordinary partial derivative of whole order, term by term.
inline Expr classical_derivative(const Expr& e, Index coord, unsigned order) {
  std::vector<PowerTerm> out;
  for (const auto& t : e.terms()) {
    PowerTerm d = t;
    double p = t.exponent(coord);
    for (unsigned k = 0; k < order && d.coeff != 0.0; ++k) {
      d.coeff *= p;
      p -= 1.0;
    }
    d.exps[coord] = p;
    out.push_back(std::move(d));
  }
  return canonicalize(std::move(out));
}

/// Polynomial degree in `coord` if every exponent on it is a whole number
/// >= 0, otherwise nullopt. The zero expression has degree 0.
inline std::optional<unsigned> polynomial_degree(const Expr& e, Index coord) {
  unsigned deg = 0;
  for (const auto& t : e.terms()) {
    const double p = t.exponent(coord);
    if (p < 0.0 || !is_whole(p, 0.0)) return std::nullopt;
    deg = std::max(deg, static_cast<unsigned>(p));
  }
  return deg;
}

// ---------------------------------------------------------------- printing

/// precision == 0 prints the shortest representation that reads back
/// bit-exactly; otherwise printf %.{precision}g.
inline std::string format_number(double v, int precision = 0) {
  if (v == 0.0) v = 0.0;  // no "-0"
  if (precision > 0) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    return buf;
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct PrintOptions {
  int precision = 0;
};

namespace detail {

inline std::string format_factors(const PowerTerm& t, const Context& ctx, const PrintOptions& opt) {
  std::string s;
  for (auto [i, p] : t.exps) {
    if (!s.empty()) s += '*';
    s += i < ctx.size() ? ctx.name(i) : ("#" + std::to_string(i));
    if (p != 1.0) s += '^' + format_number(p, opt.precision);
  }
  return s;
}

}  // namespace detail

inline std::string to_string(const Expr& e, const Context& ctx, PrintOptions opt = {}) {
  if (e.is_zero()) return "0";
  std::string s;
  bool first = true;
  for (const auto& t : e.terms()) {
    const bool negative = t.coeff < 0.0;
    const double mag = std::abs(t.coeff);
    const std::string factors = detail::format_factors(t, ctx, opt);
    std::string body;
    const std::string num = format_number(mag, opt.precision);
    if (factors.empty())
      body = num;
    else if (num == "1")
      body = factors;
    else
      body = num + "*" + factors;
    if (first) {
      // A leading negative term must start with a signed number.
      if (negative) body = factors.empty() ? "-" + body : "-" + num + "*" + factors;
      s = body;
      first = false;
    } else {
      s += negative ? " - " : " + ";
      s += body;
    }
  }
  return s;
}

// ----------------------------------------------------------------- parsing

namespace detail {

/// Recursive-descent cursor over expression text. Shared with the form
/// literal parser, which needs to stop at differential markers `d(`.
class ExprCursor {
 public:
  ExprCursor(std::string_view text, const Context& ctx) : text_(text), ctx_(ctx) {}

  std::size_t pos() const { return pos_; }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }
  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }
  bool accept(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what + " in \"" + std::string(text_) + "\"", pos_);
  }

  /// True when the next token is the differential marker `d(`.
  bool at_differential() {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != 'd') return false;
    std::size_t p = pos_ + 1;
    if (p < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[p])) || text_[p] == '_')) return false;
    while (p < text_.size() && std::isspace(static_cast<unsigned char>(text_[p]))) ++p;
    return p < text_.size() && text_[p] == '(';
  }

  bool at_number() {
    skip_ws();
    std::size_t p = pos_;
    if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
    return p < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[p])) || text_[p] == '.');
  }

  double number() {
    skip_ws();
    const std::size_t start = pos_;
    std::size_t p = pos_;
    if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
    const bool negative = p > pos_ && text_[pos_] == '-';
    const std::size_t digits_start = p;
    while (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) ++p;
    if (p < text_.size() && text_[p] == '.') {
      ++p;
      while (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) ++p;
    }
    if (p == digits_start || (p == digits_start + 1 && text_[digits_start] == '.')) fail("expected number");
    if (p < text_.size() && (text_[p] == 'e' || text_[p] == 'E')) {
      std::size_t q = p + 1;
      if (q < text_.size() && (text_[q] == '+' || text_[q] == '-')) ++q;
      if (q < text_.size() && std::isdigit(static_cast<unsigned char>(text_[q]))) {
        while (q < text_.size() && std::isdigit(static_cast<unsigned char>(text_[q]))) ++q;
        p = q;
      }
    }
    double v = 0.0;
    const char* first = text_.data() + digits_start;
    if (*first == '.') {
      // from_chars needs a leading digit
      std::string tmp = "0" + std::string(text_.substr(digits_start, p - digits_start));
      auto r = std::from_chars(tmp.data(), tmp.data() + tmp.size(), v);
      if (r.ec != std::errc()) fail("invalid number");
    } else {
      auto r = std::from_chars(first, text_.data() + p, v);
      if (r.ec != std::errc() || r.ptr != text_.data() + p) {
        pos_ = start;
        fail("invalid number");
      }
    }
    pos_ = p;
    return negative ? -v : v;
  }

  std::string identifier() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ >= text_.size() || !(std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      fail("expected identifier");
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  Index coordinate() {
    skip_ws();
    const std::size_t start = pos_;
    const std::string name = identifier();
    auto i = ctx_.index_of(name);
    if (!i) {
      pos_ = start;
      fail("unknown coordinate '" + name + "'");
    }
    return *i;
  }

  /// term := [sign] item ('*' item)*, item := number | coord ['^' exponent].
  /// Returns nullopt when no term starts here (end of input or `d(`).
  std::optional<PowerTerm> term(double sign = 1.0) {
    skip_ws();
    PowerTerm t{sign, {}};
    if (!at_number() && (peek() == '-' || peek() == '+')) {
      if (text_[pos_] == '-') t.coeff = -t.coeff;
      ++pos_;
    }
    bool any = false;
    for (;;) {
      if (at_number()) {
        t.coeff *= number();
      } else if (!at_end() && !at_differential() &&
                 (std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_')) {
        const Index i = coordinate();
        double p = 1.0;
        if (accept('^')) {
          if (accept('(')) {
            p = number();
            expect(')');
          } else {
            p = number();
          }
        }
        t.exps[i] += p;
      } else {
        if (any) fail("expected number or coordinate after '*'");
        return std::nullopt;
      }
      any = true;
      if (!accept('*')) break;
      if (at_differential()) break;
    }
    return t;
  }

  /// sum := term (('+'|'-') term)*, stopping before `d(` or any other
  /// character that cannot continue an expression.
  std::vector<PowerTerm> sum(double first_sign = 1.0) {
    std::vector<PowerTerm> terms;
    auto first = term(first_sign);
    if (!first) return terms;
    terms.push_back(std::move(*first));
    for (;;) {
      const std::size_t save = pos_;
      const char c = peek();
      if (c != '+' && c != '-') break;
      ++pos_;
      if (at_differential() || at_end()) {
        pos_ = save;
        break;
      }
      auto next = term(c == '-' ? -1.0 : 1.0);
      if (!next) {
        pos_ = save;
        break;
      }
      terms.push_back(std::move(*next));
    }
    return terms;
  }

  std::string_view text() const { return text_; }
  void set_pos(std::size_t p) { pos_ = p; }

 private:
  std::string_view text_;
  const Context& ctx_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parse the expression grammar
///   expr := term (('+'|'-') term)*
///   term := signed_number ('*' factor)* | factor ('*' factor)*
///   factor := coord ('^' signed_number)?
/// Numbers may also appear between factors, and a leading unary sign is accepted.
inline Expr parse_expr(std::string_view text, const Context& ctx) {
  detail::ExprCursor cur(text, ctx);
  auto terms = cur.sum();
  if (terms.empty()) cur.fail("expected expression");
  if (!cur.at_end()) cur.fail(std::string("unexpected '") + cur.peek() + "'");
  return canonicalize(std::move(terms));
}

}  // namespace fracforms
