#pragma once

// Riemann-Liouville differintegrals on the power-product class.
//
// For a factor (x - a)^p with p > -1 the operator of real order q (derivative
// for q > 0, integral for q < 0) acts as
//   (x - a)^p  ->  Gamma(p + 1) / Gamma(p - q + 1) * (x - a)^(p - q),
// and the term vanishes when p - q + 1 is a non-positive integer.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "expr.hpp"
#include "special_functions.hpp"

namespace fracforms {

/// Order of a differintegral together with m = ceil(q).
struct FracOrder {
  double q = 0.0;
  int m = 0;

  explicit FracOrder(double order) : q(order), m(order > 0 ? whole_ceiling(order) : 0) {}
  bool whole() const { return is_whole(q); }
};

/// Riemann-Liouville differintegral of order q along `coord`, lower terminal
/// at the context's initial point for that coordinate.
inline Expr rl_deriv(const Expr& e, Index coord, double q) {
  if (!std::isfinite(q)) throw DomainError("rl_deriv: non-finite order");
  std::vector<PowerTerm> out;
  out.reserve(e.size());
  for (const auto& t : e.terms()) {
    const double p = t.exponent(coord);
    if (p <= -1.0 + kExponentTolerance)
      throw DomainError("rl_deriv: exponent " + format_number(p) + " <= -1 is outside the power rule domain");
    PowerTerm r = t;
    r.coeff *= gamma_ratio(p + 1.0, p - q + 1.0);
    r.exps[coord] = p - q;
    out.push_back(std::move(r));
  }
  return canonicalize(std::move(out));
}

/// Context-checked overload.
inline Expr rl_deriv(const Expr& e, Index coord, double q, const Context& ctx) {
  if (coord >= ctx.size()) throw std::invalid_argument("rl_deriv: coordinate index out of range");
  return rl_deriv(e, coord, q);
}

/// Riemann-Liouville integral of order q >= 0 (derivative of order -q).
inline Expr rl_integ(const Expr& e, Index coord, double q) {
  if (q < 0.0) throw DomainError("rl_integ: integration order must be non-negative");
  return rl_deriv(e, coord, -q);
}

inline Expr rl_integ(const Expr& e, Index coord, double q, const Context& ctx) {
  if (coord >= ctx.size()) throw std::invalid_argument("rl_integ: coordinate index out of range");
  return rl_integ(e, coord, q);
}

/// Restrict `e` to x_coord = a_coord. Terms with a positive exponent vanish,
/// exponent-0 terms survive, negative exponents are a non-removable singularity.
inline Expr at_initial_point(const Expr& e, Index coord) {
  std::vector<PowerTerm> out;
  for (const auto& t : e.terms()) {
    const double p = t.exponent(coord);
    if (p < -kExponentTolerance)
      throw DomainError("boundary value: non-removable singularity (exponent " + format_number(p) +
                        ") at the initial point");
    if (p > kExponentTolerance) continue;
    PowerTerm r = t;
    r.exps.erase(coord);
    out.push_back(std::move(r));
  }
  return canonicalize(std::move(out));
}

/// Boundary correction of the fractional composition law:
///   sum_{j=1..k} [D^{q-j} e](x=a) * (x-a)^{-p-j} / Gamma(1-p-j)
/// with k the whole number satisfying k-1 <= q <= k (k >= 1).
inline Expr composition_correction(const Expr& e, Index coord, double p, double q) {
  if (p < 0.0) throw DomainError("composition: outer order p must be >= 0");
  if (q < 0.0) throw DomainError("composition: inner order q must be >= 0");
  const int k = std::max(1, whole_ceiling(q));
  Expr sum;
  for (int j = 1; j <= k; ++j) {
    const Expr boundary = at_initial_point(rl_deriv(e, coord, q - j), coord);
    if (boundary.is_zero()) continue;
    sum += boundary * Expr::monomial(rgamma(1.0 - p - j), {{coord, -p - j}});
  }
  return sum;
}

/// Defect of the composition law: D^p D^q e - D^{p+q} e + correction.
/// Zero whenever the law holds for e.
inline Expr compose_residual(const Expr& e, Index coord, double p, double q) {
  const Expr lhs = rl_deriv(rl_deriv(e, coord, q), coord, p);
  const Expr direct = rl_deriv(e, coord, p + q);
  return lhs - direct + composition_correction(e, coord, p, q);
}

struct SeriesResult {
  Expr value;
  std::size_t terms_used = 0;
  /// The series was cut at K while g was not polynomial in the coordinate.
  bool truncated = false;
  /// |next term| at the probe point when truncated, else 0.
  double next_term_magnitude = 0.0;
  /// truncated and next_term_magnitude above 1e-9.
  bool warning = false;
};

inline constexpr double kSeriesWarningThreshold = 1e-9;

/// Fractional Leibniz series
///   D^q (f g) = sum_j binom(q, j) D^{q-j} f * d^j g / dx^j
/// summed to j = deg_coord(g) when g is polynomial in `coord`, else to K.
/// `probe` is the absolute point used to size the first omitted term; it
/// defaults to a_i + 1 in every coordinate.
inline SeriesResult product_rule_series(const Expr& f, const Expr& g, Index coord, double q, unsigned K,
                                        const Context& ctx, std::span<const double> probe = {}) {
  if (coord >= ctx.size()) throw std::invalid_argument("product_rule_series: coordinate index out of range");
  const auto degree = polynomial_degree(g, coord);
  const unsigned J = degree ? std::min(K, *degree) : K;
  SeriesResult res;
  auto term = [&](unsigned j) {
    return gen_binomial(q, j) * (rl_deriv(f, coord, q - j) * classical_derivative(g, coord, j));
  };
  for (unsigned j = 0; j <= J; ++j) res.value += term(j);
  res.terms_used = J + 1;
  if (!degree || J < *degree) {
    res.truncated = true;
    std::vector<double> pt(probe.begin(), probe.end());
    if (pt.empty())
      for (std::size_t i = 0; i < ctx.size(); ++i) pt.push_back(ctx.origin(i) + 1.0);
    res.next_term_magnitude = std::abs(eval(term(J + 1), ctx, pt));
    res.warning = res.next_term_magnitude > kSeriesWarningThreshold;
  }
  return res;
}

}  // namespace fracforms
