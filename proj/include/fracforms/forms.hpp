#pragma once

// Fractional differential forms: finitely supported linear combinations of
// wedge words dx_{i1}^{mu1} ^ ... ^ dx_{ik}^{muk} with Expr coefficients.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "expr.hpp"
#include "rl.hpp"

namespace fracforms {

/// Two differential orders closer than this are the same order.
inline constexpr double kOrderTolerance = 1e-9;

/// dx_coord^order, order > 0.
struct DiffFactor {
  Index coord = 0;
  double order = 1.0;

  friend bool operator==(const DiffFactor& a, const DiffFactor& b) {
    return a.coord == b.coord && std::abs(a.order - b.order) <= kOrderTolerance;
  }
};

namespace detail {
inline bool factor_less(const DiffFactor& a, const DiffFactor& b) {
  if (a.coord != b.coord) return a.coord < b.coord;
  return a.order < b.order - kOrderTolerance;
}
}  // namespace detail

struct SignedWord;

/// Canonically ordered wedge word: factors ascending by (coord, order), no repeats.
class WedgeWord {
 public:
  WedgeWord() = default;

  const std::vector<DiffFactor>& factors() const noexcept { return factors_; }
  std::size_t grade() const noexcept { return factors_.size(); }
  double total_order() const {
    double s = 0.0;
    for (const auto& f : factors_) s += f.order;
    return s;
  }

  friend bool operator==(const WedgeWord& a, const WedgeWord& b) { return a.factors_ == b.factors_; }
  friend bool operator<(const WedgeWord& a, const WedgeWord& b) {
    return std::lexicographical_compare(a.factors_.begin(), a.factors_.end(), b.factors_.begin(), b.factors_.end(),
                                        detail::factor_less);
  }

 private:
  friend std::optional<SignedWord> canonical_word(std::vector<DiffFactor> factors);
  std::vector<DiffFactor> factors_;
};

struct SignedWord {
  int sign = 1;
  WedgeWord word;
};

/// Sort the factors, tracking the parity of the permutation. Order-0 factors
/// are scalars and drop out. Returns nullopt (the zero word) when two factors
/// share both coordinate and order; same coordinate with different orders is
/// a legitimate nonzero word.
inline std::optional<SignedWord> canonical_word(std::vector<DiffFactor> factors) {
  std::erase_if(factors, [](const DiffFactor& f) {
    if (f.order < -kOrderTolerance) throw DomainError("differential order must be non-negative");
    return std::abs(f.order) <= kOrderTolerance;
  });
  int sign = 1;
  // insertion sort, one sign flip per adjacent transposition
  for (std::size_t i = 1; i < factors.size(); ++i)
    for (std::size_t j = i; j > 0 && detail::factor_less(factors[j], factors[j - 1]); --j) {
      std::swap(factors[j], factors[j - 1]);
      sign = -sign;
    }
  for (std::size_t i = 1; i < factors.size(); ++i)
    if (factors[i] == factors[i - 1]) return std::nullopt;
  SignedWord out;
  out.sign = sign;
  out.word.factors_ = std::move(factors);
  return out;
}

/// Element of F(total_order, grade, n): map from canonical words to coefficients.
class Form {
 public:
  struct Term {
    WedgeWord word;
    Expr coeff;
  };

  Form() = default;
  Form(std::size_t grade, double total_order) : grade_(grade), total_order_(total_order) {}

  static Form scalar(const Expr& e) {
    Form f(0, 0.0);
    f.add({}, e);
    return f;
  }

  std::size_t grade() const noexcept { return grade_; }
  double total_order() const noexcept { return total_order_; }
  const std::vector<Term>& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }

  /// Coefficient of a canonical word (zero when absent).
  Expr coefficient(const WedgeWord& w) const {
    for (const auto& t : terms_)
      if (t.word == w) return t.coeff;
    return {};
  }

  /// Accumulate coeff * (f_1 ^ ... ^ f_k).
  void add(std::vector<DiffFactor> factors, const Expr& coeff) {
    auto sw = canonical_word(std::move(factors));
    if (!sw || coeff.is_zero()) return;
    add_canonical(sw->word, sw->sign == 1 ? coeff : -coeff);
  }

  void add_canonical(const WedgeWord& w, const Expr& coeff) {
    if (w.grade() != grade_)
      throw std::invalid_argument("form: word of grade " + std::to_string(w.grade()) + " added to grade " +
                                  std::to_string(grade_) + " form");
    if (std::abs(w.total_order() - total_order_) > kOrderTolerance)
      throw std::invalid_argument("form: word of total order " + format_number(w.total_order()) +
                                  " added to form of total order " + format_number(total_order_));
    auto it = std::lower_bound(terms_.begin(), terms_.end(), w,
                               [](const Term& t, const WedgeWord& key) { return t.word < key; });
    if (it != terms_.end() && it->word == w) {
      it->coeff += coeff;
      if (it->coeff.is_zero()) terms_.erase(it);
    } else if (!coeff.is_zero()) {
      terms_.insert(it, Term{w, coeff});
    }
  }

  /// Coefficient of the empty word for grade-0 forms.
  Expr scalar_part() const { return coefficient(WedgeWord{}); }

  friend Form operator+(const Form& a, const Form& b) {
    if (a.is_zero() && (a.grade_ != b.grade_ || a.total_order_ != b.total_order_)) return b;
    if (b.is_zero()) return a;
    Form r = a;
    for (const auto& t : b.terms_) r.add_canonical(t.word, t.coeff);
    return r;
  }
  friend Form operator*(const Expr& s, const Form& a) {
    Form r(a.grade_, a.total_order_);
    for (const auto& t : a.terms_) r.add_canonical(t.word, s * t.coeff);
    return r;
  }
  friend Form operator*(double s, const Form& a) { return Expr::constant(s) * a; }
  friend Form operator-(const Form& a) { return -1.0 * a; }
  friend Form operator-(const Form& a, const Form& b) { return a + (-b); }

  friend bool operator==(const Form& a, const Form& b) {
    if (a.terms_.size() != b.terms_.size()) return false;
    if (a.is_zero()) return true;
    if (a.grade_ != b.grade_) return false;
    for (std::size_t i = 0; i < a.terms_.size(); ++i)
      if (!(a.terms_[i].word == b.terms_[i].word) || !(a.terms_[i].coeff == b.terms_[i].coeff)) return false;
    return true;
  }

 private:
  std::size_t grade_ = 0;
  double total_order_ = 0.0;
  std::vector<Term> terms_;
};

/// Word-by-word coefficient comparison up to `tol` (relative to scale 1).
inline bool approx_equal(const Form& a, const Form& b, double tol) {
  const Form d = a - b;
  double scale = 1.0;
  for (const auto& t : a.terms()) scale = std::max(scale, t.coeff.scale());
  for (const auto& t : b.terms()) scale = std::max(scale, t.coeff.scale());
  for (const auto& t : d.terms())
    for (const auto& pt : t.coeff.terms())
      if (std::abs(pt.coeff) > tol * scale) return false;
  return true;
}

/// Exterior product. Grades and orders add; the product is not forced to
/// vanish when the grade exceeds the number of coordinates.
inline Form wedge(const Form& a, const Form& b) {
  Form r(a.grade() + b.grade(), a.total_order() + b.total_order());
  for (const auto& x : a.terms())
    for (const auto& y : b.terms()) {
      std::vector<DiffFactor> f = x.word.factors();
      f.insert(f.end(), y.word.factors().begin(), y.word.factors().end());
      r.add(std::move(f), x.coeff * y.coeff);
    }
  return r;
}

/// d^nu = sum_j dx_j^nu D_j^nu applied to every coefficient, with the new
/// differential placed leftmost. Differentials are constants under the
/// partials, so only coefficients are differentiated. At nu = 0 the new
/// factor is the scalar 1 and the result is n * A at the same grade.
inline Form frac_exterior_deriv(const Form& a, double nu, const Context& ctx) {
  if (nu < -kOrderTolerance) throw DomainError("d^nu: order must be non-negative");
  if (std::abs(nu) <= kOrderTolerance) return static_cast<double>(ctx.size()) * a;
  Form r(a.grade() + 1, a.total_order() + nu);
  for (const auto& t : a.terms())
    for (Index j = 0; j < ctx.size(); ++j) {
      const Expr d = rl_deriv(t.coeff, j, nu);
      if (d.is_zero()) continue;
      std::vector<DiffFactor> f{DiffFactor{j, nu}};
      f.insert(f.end(), t.word.factors().begin(), t.word.factors().end());
      r.add(std::move(f), d);
    }
  return r;
}

inline Form frac_exterior_deriv(const Expr& scalar, double nu, const Context& ctx) {
  return frac_exterior_deriv(Form::scalar(scalar), nu, ctx);
}

// --------------------------------------------------------- grade-1 helpers

/// Components alpha_i of a grade-1 form with a single differential order.
struct OneForm {
  double order = 1.0;
  std::vector<Expr> coeffs;  ///< alpha_i multiplies dx_i^order
};

inline OneForm as_one_form(const Form& f, const Context& ctx) {
  if (f.grade() != 1 && !f.is_zero()) throw std::invalid_argument("expected a grade-1 form");
  OneForm out{f.total_order(), std::vector<Expr>(ctx.size())};
  for (const auto& t : f.terms()) {
    const DiffFactor& d = t.word.factors().front();
    if (d.coord >= ctx.size()) throw std::invalid_argument("form references a coordinate outside the context");
    out.coeffs[d.coord] = t.coeff;
  }
  return out;
}

inline Form make_one_form(std::span<const Expr> coeffs, double nu) {
  Form f(1, nu);
  for (Index i = 0; i < coeffs.size(); ++i) f.add({DiffFactor{i, nu}}, coeffs[i]);
  return f;
}

// ---------------------------------------------------- literal syntax, JSON

inline std::string to_string(const Form& f, const Context& ctx, PrintOptions opt = {}) {
  if (f.grade() == 0) return to_string(f.scalar_part(), ctx, opt);
  if (f.is_zero()) return "0";
  std::string s;
  bool first = true;
  for (const auto& t : f.terms()) {
    std::string coeff;
    bool negative = false;
    if (t.coeff.size() == 1) {
      const PowerTerm& pt = t.coeff.terms().front();
      negative = pt.coeff < 0.0;
      const Expr mag = negative ? -t.coeff : t.coeff;
      coeff = to_string(mag, ctx, opt);
      if (coeff == "1") coeff.clear();
    } else {
      coeff = "(" + to_string(t.coeff, ctx, opt) + ")";
    }
    if (first)
      s += negative ? "-" : "";
    else
      s += negative ? " - " : " + ";
    first = false;
    if (!coeff.empty()) s += coeff + " ";
    bool first_factor = true;
    for (const auto& d : t.word.factors()) {
      if (!first_factor) s += " & ";
      first_factor = false;
      s += "d(" + ctx.name(d.coord) + "," + format_number(d.order, opt.precision) + ")";
    }
  }
  return s;
}

/// Parse `<expr> d(<coord>,<order>) [& d(<coord>,<order>)]* [+ ...]`.
/// A coefficient is everything before its first `d(`; it may be
/// parenthesized, and may be omitted (coefficient 1). Text without any
/// differential is a grade-0 form.
inline Form parse_form(std::string_view text, const Context& ctx) {
  detail::ExprCursor cur(text, ctx);
  std::vector<std::pair<std::vector<DiffFactor>, Expr>> parsed;
  bool first = true;
  while (!cur.at_end()) {
    if (!first && cur.peek() != '+' && cur.peek() != '-') cur.fail(std::string("unexpected '") + cur.peek() + "'");
    first = false;
    double sign = 1.0;
    if ((cur.peek() == '+' || cur.peek() == '-') && !cur.at_number()) {
      sign = cur.peek() == '-' ? -1.0 : 1.0;
      cur.accept(cur.peek());
    }
    Expr coeff;
    if (cur.accept('(')) {
      auto terms = cur.sum();
      if (terms.empty()) cur.fail("expected expression");
      cur.expect(')');
      coeff = sign * canonicalize(std::move(terms));
      cur.accept('*');
    } else if (cur.at_differential()) {
      coeff = Expr::constant(sign);
    } else {
      auto terms = cur.sum(sign);
      if (terms.empty()) cur.fail("expected expression or differential");
      coeff = canonicalize(std::move(terms));
    }
    std::vector<DiffFactor> factors;
    if (cur.at_differential()) {
      do {
        if (!cur.at_differential()) cur.fail("expected differential d(<coord>,<order>)");
        cur.identifier();
        cur.expect('(');
        const Index c = cur.coordinate();
        cur.expect(',');
        const std::size_t at = cur.pos();
        const double order = cur.number();
        if (!(order >= 0.0)) throw ParseError("differential order must be non-negative", at);
        cur.expect(')');
        factors.push_back(DiffFactor{c, order});
      } while (cur.accept('&'));
    }
    parsed.emplace_back(std::move(factors), std::move(coeff));
  }
  if (parsed.empty()) cur.fail("expected form");
  // grade and order come from the first term that survives canonicalization
  std::optional<Form> out;
  for (auto& [factors, coeff] : parsed) {
    auto sw = canonical_word(factors);
    if (!out && sw) out.emplace(sw->word.grade(), sw->word.total_order());
    if (!out) continue;
    if (sw) {
      if (sw->word.grade() != out->grade() ||
          std::abs(sw->word.total_order() - out->total_order()) > kOrderTolerance)
        throw ParseError("form mixes grades or total orders", 0);
      out->add_canonical(sw->word, sw->sign == 1 ? coeff : -coeff);
    }
  }
  if (!out) {
    // every word was zero; keep the grade and order of the written word
    double order = 0.0;
    for (const auto& d : parsed.front().first) order += d.order;
    return Form(parsed.front().first.size(), order);
  }
  return *out;
}

inline nlohmann::json to_json(const Form& f, const Context& ctx) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : f.terms()) {
    nlohmann::json factors = nlohmann::json::array();
    for (const auto& d : t.word.factors()) factors.push_back({{"coord", ctx.name(d.coord)}, {"order", d.order}});
    terms.push_back({{"sign", 1}, {"factors", factors}, {"coeff", to_string(t.coeff, ctx)}});
  }
  return {{"grade", f.grade()}, {"total_order", f.total_order()}, {"terms", terms}};
}

inline Form form_from_json(const nlohmann::json& j, const Context& ctx) {
  Form f(j.at("grade").get<std::size_t>(), j.at("total_order").get<double>());
  for (const auto& t : j.at("terms")) {
    std::vector<DiffFactor> factors;
    for (const auto& d : t.at("factors")) {
      const auto& c = d.at("coord");
      const Index idx = c.is_string() ? ctx.require(c.get<std::string>()) : c.get<Index>();
      factors.push_back(DiffFactor{idx, d.at("order").get<double>()});
    }
    const double sign = t.value("sign", 1);
    f.add(std::move(factors), sign * parse_expr(t.at("coeff").get<std::string>(), ctx));
  }
  return f;
}

}  // namespace fracforms
