#pragma once

// Kernels of fractional partials, closedness and exactness of grade-1
// fractional forms. All initial points are taken at the origin.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "expr.hpp"
#include "forms.hpp"
#include "rl.hpp"

namespace fracforms {

namespace detail {
inline void require_zero_origin(const Context& ctx, const char* op) {
  if (!ctx.origin_is_zero())
    throw UnsupportedError(std::string(op) + ": initial points other than the origin are not supported");
}
inline void require_positive_order(double nu, const char* op) {
  if (!(nu > kOrderTolerance)) throw DomainError(std::string(op) + ": order must be positive");
}
}  // namespace detail

/// Basis of Ker(D_coord^nu): { x^(nu - m + k) : k = 0..m-1 }, m = ceil(nu).
inline std::vector<Expr> kernel_basis_1d(double nu, Index coord) {
  detail::require_positive_order(nu, "kernel_basis_1d");
  const int m = whole_ceiling(nu);
  std::vector<Expr> basis;
  for (int k = 0; k < m; ++k) basis.push_back(Expr::coordinate(coord, nu - m + k));
  return basis;
}

/// Basis of the kernel of d^nu on scalars:
/// { prod_i x_i^(nu - m + k_i) : k_i in 0..m-1 }.
inline std::vector<Expr> kernel_basis_dv(double nu, const Context& ctx) {
  detail::require_positive_order(nu, "kernel_basis_dv");
  detail::require_zero_origin(ctx, "kernel_basis_dv");
  const int m = whole_ceiling(nu);
  const std::size_t n = ctx.size();
  std::vector<int> k(n, 0);
  std::vector<Expr> basis;
  for (;;) {
    Exponents e;
    for (Index i = 0; i < n; ++i) e[i] = nu - m + k[i];
    basis.push_back(Expr::monomial(1.0, std::move(e)));
    std::size_t pos = 0;
    while (pos < n && ++k[pos] == m) k[pos++] = 0;
    if (pos == n) break;
  }
  return basis;
}

struct ClosureWitness {
  Index i = 0;
  Index j = 0;
  Expr residual;
};

struct ClosureReport {
  bool closed = true;
  std::vector<ClosureWitness> witnesses;
};

/// Is d^mu alpha = 0 for alpha in F(nu, 1, n)?
///
/// mu != nu: every word dx_j^mu ^ dx_i^nu is independent, so each
/// D_j^mu alpha_i must vanish. mu == nu: words pair up antisymmetrically and
/// the condition is D_i^nu alpha_j - D_j^nu alpha_i = 0 for i < j; the
/// coincident words dx_i^nu ^ dx_i^nu are zero and impose nothing.
inline ClosureReport is_closed(const Form& alpha, double mu, const Context& ctx) {
  detail::require_positive_order(mu, "is_closed");
  const OneForm a = as_one_form(alpha, ctx);
  const std::size_t n = ctx.size();
  ClosureReport rep;
  auto record = [&](Index i, Index j, Expr r) {
    if (!r.is_zero()) rep.witnesses.push_back({i, j, std::move(r)});
  };
  if (alpha.is_zero()) return rep;
  if (std::abs(mu - a.order) > kOrderTolerance) {
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) record(i, j, rl_deriv(a.coeffs[i], j, mu));
  } else {
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j)
        record(i, j, rl_deriv(a.coeffs[j], i, mu) - rl_deriv(a.coeffs[i], j, mu));
  }
  rep.closed = rep.witnesses.empty();
  return rep;
}

/// D^m/dx_i^m [ (alpha_j - D_j^nu D_i^{-nu} alpha_i) / x_i^(nu - m) ],
/// m = ceil(nu). Vanishes for every (i, j) when alpha is nu-exact.
inline Expr integrability_residual(const Form& alpha, Index i, Index j, const Context& ctx) {
  detail::require_zero_origin(ctx, "integrability_residual");
  if (i >= ctx.size() || j >= ctx.size()) throw std::invalid_argument("integrability_residual: index out of range");
  const OneForm a = as_one_form(alpha, ctx);
  if (alpha.is_zero()) return {};
  const double nu = a.order;
  detail::require_positive_order(nu, "integrability_residual");
  const int m = whole_ceiling(nu);
  const Expr inner = a.coeffs[j] - rl_deriv(rl_integ(a.coeffs[i], i, nu), j, nu);
  return classical_derivative(inner * Expr::coordinate(i, m - nu), i, static_cast<unsigned>(m));
}

struct ExactnessResult {
  enum class Status { Exact, NotIntegrable, Unsupported };
  Status status = Status::Unsupported;
  Expr potential;  ///< Exact
  Expr residual;   ///< NotIntegrable
  Index i = 0;     ///< NotIntegrable
  Index j = 0;     ///< NotIntegrable
  std::string reason;  ///< Unsupported

  bool exact() const { return status == Status::Exact; }
};

/// Coefficient tolerance of the round-trip check d^nu f = alpha.
inline constexpr double kRoundTripTolerance = 1e-9;

namespace detail {

/// Solve D_c^nu f = rhs[c] for c in coords (0 < nu <= 1). Peels off the
/// first coordinate: f = D_i^{-nu} rhs_i + c0 * x_i^(nu-1), where c0 solves
/// the same problem over the remaining coordinates.
inline ExactnessResult reconstruct_potential(const std::vector<Expr>& rhs, const std::vector<Index>& coords,
                                             double nu) {
  ExactnessResult res;
  if (coords.empty()) {
    res.status = ExactnessResult::Status::Exact;
    return res;
  }
  const Index i = coords.front();
  const Expr particular = rl_integ(rhs[i], i, nu);
  std::vector<Expr> reduced(rhs.size());
  std::vector<Index> rest(coords.begin() + 1, coords.end());
  for (Index j : rest) {
    const Expr r = (rhs[j] - rl_deriv(particular, j, nu)) * Expr::coordinate(i, 1.0 - nu);
    const Expr dependence = classical_derivative(r, i, 1);
    if (!dependence.is_zero()) {
      res.status = ExactnessResult::Status::NotIntegrable;
      res.residual = dependence;
      res.i = i;
      res.j = j;
      return res;
    }
    reduced[j] = r;
  }
  ExactnessResult sub = reconstruct_potential(reduced, rest, nu);
  if (!sub.exact()) return sub;
  res.status = ExactnessResult::Status::Exact;
  res.potential = particular + sub.potential * Expr::coordinate(i, nu - 1.0);
  return res;
}

}  // namespace detail

/// Find f with d^nu f = alpha for alpha in F(nu, 1, n), 0 < nu <= 1.
/// Returns NotIntegrable with the first nonzero integrability residual, and
/// Unsupported for nu > 1 or non-origin initial points. An Exact result has
/// always passed the round-trip check; failing it throws VerificationError.
inline ExactnessResult solve_exact(const Form& alpha, double nu, const Context& ctx) {
  ExactnessResult res;
  if (!ctx.origin_is_zero()) {
    res.reason = "initial points other than the origin are not supported";
    return res;
  }
  detail::require_positive_order(nu, "solve_exact");
  if (nu > 1.0 + kOrderTolerance) {
    res.reason = "potential reconstruction is only available for 0 < nu <= 1";
    return res;
  }
  if (!alpha.is_zero() && (alpha.grade() != 1 || std::abs(alpha.total_order() - nu) > kOrderTolerance))
    throw std::invalid_argument("solve_exact: form is not in F(" + format_number(nu) + ", 1, n)");
  const OneForm a = as_one_form(alpha, ctx);
  const std::size_t n = ctx.size();

  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      Expr r = integrability_residual(alpha, i, j, ctx);
      if (!r.is_zero()) {
        res.status = ExactnessResult::Status::NotIntegrable;
        res.residual = std::move(r);
        res.i = i;
        res.j = j;
        return res;
      }
    }

  std::vector<Index> coords(n);
  for (Index i = 0; i < n; ++i) coords[i] = i;
  res = detail::reconstruct_potential(a.coeffs, coords, nu);
  if (!res.exact()) return res;

  const Form back = frac_exterior_deriv(res.potential, nu, ctx);
  if (!approx_equal(back, alpha, kRoundTripTolerance))
    throw VerificationError("solve_exact: reconstructed potential fails d^nu f = alpha");
  return res;
}

}  // namespace fracforms
