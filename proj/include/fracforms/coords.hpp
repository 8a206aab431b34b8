#pragma once

// Coordinate transformations of fractional differentials.
//
// A chart maps curvilinear coordinates y (the "source", initial points ã)
// to Cartesian coordinates x (the "target", initial points a). The fractional
// Jacobian is
//   J_i^k = 1/Gamma(nu+1) * D^nu_{y_i - ã_i} [ prod_{j != k} (x_j - a_j)^(nu-m) * (x_k - a_k)^nu ]
// stored as matrix(k, i), so that at nu = 1 it is the classical dx_k/dy_i.

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "expr.hpp"
#include "forms.hpp"
#include "matrix.hpp"
#include "oracle.hpp"
#include "rl.hpp"
#include "special_functions.hpp"

namespace fracforms {

/// One component of a coordinate map. `symbolic` is over the source context.
struct CoordinateMap {
  std::optional<Expr> symbolic;
  MultiFunction numeric;
};

class Chart {
 public:
  Chart(std::string name, Context target, Context source, std::vector<CoordinateMap> forward,
        std::vector<CoordinateMap> inverse)
      : name_(std::move(name)),
        target_(std::move(target)),
        source_(std::move(source)),
        forward_(std::move(forward)),
        inverse_(std::move(inverse)) {
    const std::size_t n = target_.size();
    if (source_.size() != n || forward_.size() != n || inverse_.size() != n)
      throw std::invalid_argument("chart: dimension mismatch");
    fill_numeric(forward_, source_);
    fill_numeric(inverse_, target_);
  }

  const std::string& name() const noexcept { return name_; }
  std::size_t dim() const noexcept { return target_.size(); }
  /// Cartesian side (x, initial points a).
  const Context& target() const noexcept { return target_; }
  /// Curvilinear side (y, initial points ã).
  const Context& source() const noexcept { return source_; }
  const std::vector<CoordinateMap>& forward() const noexcept { return forward_; }
  const std::vector<CoordinateMap>& inverse() const noexcept { return inverse_; }

  bool symbolic_forward() const {
    return std::all_of(forward_.begin(), forward_.end(), [](const auto& c) { return c.symbolic.has_value(); });
  }
  bool symbolic_inverse() const {
    return std::all_of(inverse_.begin(), inverse_.end(), [](const auto& c) { return c.symbolic.has_value(); });
  }

  std::vector<double> to_target(std::span<const double> y) const { return apply(forward_, y); }
  std::vector<double> to_source(std::span<const double> x) const { return apply(inverse_, x); }

  /// The same chart read in the opposite direction.
  Chart reversed() const { return Chart(name_ + "^-1", source_, target_, inverse_, forward_); }

  /// max |y - inverse(forward(y))|.
  double roundtrip_error(std::span<const double> y) const {
    const auto back = to_source(to_target(y));
    double err = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) err = std::max(err, std::abs(back[i] - y[i]));
    return err;
  }

 private:
  static void fill_numeric(std::vector<CoordinateMap>& maps, const Context& ctx) {
    for (auto& m : maps) {
      if (m.numeric) continue;
      if (!m.symbolic) throw std::invalid_argument("chart: coordinate map has neither form");
      m.numeric = [e = *m.symbolic, ctx](std::span<const double> p) { return eval(e, ctx, p); };
    }
  }
  std::vector<double> apply(const std::vector<CoordinateMap>& maps, std::span<const double> p) const {
    if (p.size() != dim()) throw std::invalid_argument("chart: point has wrong dimension");
    std::vector<double> out;
    out.reserve(maps.size());
    for (const auto& m : maps) out.push_back(m.numeric(p));
    return out;
  }

  std::string name_;
  Context target_;
  Context source_;
  std::vector<CoordinateMap> forward_;
  std::vector<CoordinateMap> inverse_;
};

// ------------------------------------------------------------ chart catalog

inline Chart identity_chart(std::size_t n) {
  std::vector<std::string> xs, ys;
  std::vector<CoordinateMap> fwd, inv;
  for (std::size_t i = 0; i < n; ++i) {
    xs.push_back("x" + std::to_string(i + 1));
    ys.push_back("y" + std::to_string(i + 1));
    fwd.push_back({Expr::coordinate(i), {}});
    inv.push_back({Expr::coordinate(i), {}});
  }
  return Chart("identity", Context(xs), Context(ys), fwd, inv);
}

/// x_i = c_i * y_i, initial points at the origin on both sides.
inline Chart scale_chart(std::vector<double> c) {
  std::vector<std::string> xs, ys;
  std::vector<CoordinateMap> fwd, inv;
  std::string name = "scale:";
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 0.0) throw DomainError("scale chart: factor must be nonzero");
    xs.push_back("x" + std::to_string(i + 1));
    ys.push_back("y" + std::to_string(i + 1));
    fwd.push_back({Expr::monomial(c[i], {{i, 1.0}}), {}});
    inv.push_back({Expr::monomial(1.0 / c[i], {{i, 1.0}}), {}});
    name += (i ? "," : "") + format_number(c[i]);
  }
  return Chart(name, Context(xs), Context(ys), fwd, inv);
}

/// x = A y + b with Cartesian initial points a = 0; the curvilinear initial
/// point is its preimage ã = A^{-1}(a - b).
inline Chart affine_chart(const Matrix<double>& A, std::vector<double> b = {}) {
  const std::size_t n = A.rows();
  if (A.cols() != n || n == 0) throw std::invalid_argument("affine chart: matrix must be square");
  if (b.empty()) b.assign(n, 0.0);
  if (b.size() != n) throw std::invalid_argument("affine chart: offset has wrong dimension");
  // Gauss-Jordan inverse with partial pivoting
  Matrix<double> work = A;
  Matrix<double> inv = Matrix<double>::identity(n, 0.0, 1.0);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(work(r, c)) > std::abs(work(piv, c))) piv = r;
    if (std::abs(work(piv, c)) < 1e-14) throw DomainError("affine chart: matrix is singular");
    for (std::size_t k = 0; k < n; ++k) {
      std::swap(work(c, k), work(piv, k));
      std::swap(inv(c, k), inv(piv, k));
    }
    const double d = work(c, c);
    for (std::size_t k = 0; k < n; ++k) {
      work(c, k) /= d;
      inv(c, k) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = work(r, c);
      for (std::size_t k = 0; k < n; ++k) {
        work(r, k) -= f * work(c, k);
        inv(r, k) -= f * inv(c, k);
      }
    }
  }
  std::vector<double> a(n, 0.0), at(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) at[i] += inv(i, j) * (a[j] - b[j]);

  std::vector<std::string> xs, ys;
  std::vector<CoordinateMap> fwd, inv_maps;
  std::string name = "affine:";
  for (std::size_t k = 0; k < n; ++k) {
    xs.push_back("x" + std::to_string(k + 1));
    ys.push_back("y" + std::to_string(k + 1));
    // bases are (y_i - ã_i) and (x_j - a_j)
    Expr f = Expr::constant(a[k]);
    Expr g = Expr::constant(at[k]);
    for (std::size_t i = 0; i < n; ++i) {
      f += Expr::monomial(A(k, i), {{i, 1.0}});
      g += Expr::monomial(inv(k, i), {{i, 1.0}});
      name += format_number(A(k, i)) + (i + 1 < n ? "," : "");
    }
    name += k + 1 < n ? ";" : "";
    fwd.push_back({f, {}});
    inv_maps.push_back({g, {}});
  }
  if (std::any_of(b.begin(), b.end(), [](double v) { return v != 0.0; })) {
    name += "@";
    for (std::size_t k = 0; k < n; ++k) name += format_number(b[k]) + (k + 1 < n ? "," : "");
  }
  return Chart(name, Context(xs), Context(ys, at), fwd, inv_maps);
}

/// x1 = r cos(theta), x2 = r sin(theta); initial points at the origin
/// (r = 0, theta = 0). Trigonometric, so numeric maps only.
inline Chart polar_chart() {
  std::vector<CoordinateMap> fwd{
      {std::nullopt, [](std::span<const double> y) { return y[0] * std::cos(y[1]); }},
      {std::nullopt, [](std::span<const double> y) { return y[0] * std::sin(y[1]); }},
  };
  std::vector<CoordinateMap> inv{
      {std::nullopt, [](std::span<const double> x) { return std::hypot(x[0], x[1]); }},
      {std::nullopt, [](std::span<const double> x) { return std::atan2(x[1], x[0]); }},
  };
  return Chart("polar", Context({"x1", "x2"}), Context({"r", "theta"}), fwd, inv);
}

namespace detail {
inline std::vector<double> parse_number_list(std::string_view s, char sep = ',') {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = std::min(s.find(sep, start), s.size());
    std::string item(s.substr(start, end - start));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ParseError("invalid number '" + item + "'", start);
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (used != item.size()) throw ParseError("invalid number '" + item + "'", start);
    out.push_back(v);
    start = end + 1;
  }
  return out;
}
}  // namespace detail

/// Chart registry: `polar`, `identity[:n]`, `scale:c1,...,cn`,
/// `affine:a11,a12;a21,a22[@b1,b2]` (rows separated by ';' or '/').
/// `identity` takes its dimension from `n_hint` when not given.
inline Chart make_chart(std::string_view spec, std::size_t n_hint = 0) {
  auto colon = spec.find(':');
  const std::string_view kind = spec.substr(0, colon);
  const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
  if (kind == "polar") return polar_chart();
  if (kind == "identity") {
    std::size_t n = n_hint;
    if (!arg.empty()) n = static_cast<std::size_t>(detail::parse_number_list(arg).at(0));
    if (n == 0) throw std::invalid_argument("identity chart: dimension unknown");
    return identity_chart(n);
  }
  if (kind == "scale") {
    if (arg.empty()) throw ParseError("scale chart needs factors", spec.size());
    return scale_chart(detail::parse_number_list(arg));
  }
  if (kind == "affine") {
    if (arg.empty()) throw ParseError("affine chart needs a matrix", spec.size());
    const auto at = arg.find('@');
    std::string rows(arg.substr(0, at));
    std::replace(rows.begin(), rows.end(), '/', ';');
    std::vector<std::vector<double>> parsed;
    std::size_t start = 0;
    while (start <= rows.size()) {
      const std::size_t end = std::min(rows.find(';', start), rows.size());
      parsed.push_back(detail::parse_number_list(std::string_view(rows).substr(start, end - start)));
      start = end + 1;
    }
    const std::size_t n = parsed.size();
    Matrix<double> A(n, n);
    for (std::size_t r = 0; r < n; ++r) {
      if (parsed[r].size() != n) throw ParseError("affine chart: matrix must be square", 0);
      for (std::size_t c = 0; c < n; ++c) A(r, c) = parsed[r][c];
    }
    std::vector<double> b;
    if (at != std::string_view::npos) b = detail::parse_number_list(arg.substr(at + 1));
    return affine_chart(A, b);
  }
  throw std::invalid_argument("unknown chart '" + std::string(spec) + "'");
}

// ------------------------------------------------------ symbolic helpers

namespace detail {

/// u^s inside the power-product class: single terms take any real power
/// (positive coefficient required for fractional s), sums only whole s >= 0.
inline Expr expr_power(const Expr& u, double s) {
  if (std::abs(s) <= kExponentTolerance) return Expr::constant(1.0);
  if (u.is_zero()) {
    if (s > 0.0) return {};
    throw DomainError("zero base under a negative power");
  }
  if (u.size() == 1) {
    const PowerTerm& t = u.terms().front();
    if (t.coeff < 0.0 && !is_whole(s)) throw DomainError("negative coefficient under a fractional power");
    PowerTerm r{std::pow(t.coeff, is_whole(s) ? std::round(s) : s), {}};
    for (auto [i, p] : t.exps) r.exps[i] = p * s;
    return canonicalize({r});
  }
  if (is_whole(s) && s > 0.0) {
    Expr r = Expr::constant(1.0);
    for (long k = 0; k < std::lround(s); ++k) r = r * u;
    return r;
  }
  throw UnsupportedError("fractional power of a multi-term expression is outside the power-product class");
}

/// Symbolic bracket prod_{j != k} (x_j - a_j)^(nu-m) * (x_k - a_k)^nu over the source.
inline Expr symbolic_bracket(const Chart& chart, Index k, double nu) {
  const int m = whole_ceiling(nu);
  Expr b = Expr::constant(1.0);
  for (Index j = 0; j < chart.dim(); ++j) {
    const Expr u = *chart.forward()[j].symbolic - Expr::constant(chart.target().origin(j));
    b = b * expr_power(u, j == k ? nu : nu - m);
  }
  return b;
}

inline double bracket_value(const Chart& chart, Index k, double nu, std::span<const double> y) {
  const int m = whole_ceiling(nu);
  double v = 1.0;
  for (Index j = 0; j < chart.dim(); ++j) {
    const double base = chart.forward()[j].numeric(y) - chart.target().origin(j);
    const double s = j == k ? nu : nu - m;
    if (s == 0.0) continue;
    v *= std::pow(base, s);
  }
  return v;
}

}  // namespace detail

/// Rewrite an expression over the chart's target coordinates in terms of its
/// source coordinates by substituting the forward maps.
inline Expr compose(const Expr& e, const Chart& chart) {
  if (!chart.symbolic_forward()) throw UnsupportedError("compose: chart has no symbolic forward maps");
  Expr out;
  for (const auto& t : e.terms()) {
    Expr term = Expr::constant(t.coeff);
    for (auto [j, p] : t.exps) {
      const Expr u = *chart.forward()[j].symbolic - Expr::constant(chart.target().origin(j));
      term = term * detail::expr_power(u, p);
    }
    out += term;
  }
  return out;
}

/// alpha_k = (1/Gamma(nu+1)) prod_{i != k} (x_i - a_i)^(nu-m) (x_k - a_k)^nu.
/// D_i^nu alpha_k = 0 for i != k; D_k^nu alpha_k = prod_{i != k} (x_i - a_i)^(nu-m).
inline Expr alpha_k(Index k, double nu, const Context& ctx) {
  if (!(nu > 0.0)) throw DomainError("alpha_k: order must be positive");
  if (k >= ctx.size()) throw std::invalid_argument("alpha_k: index out of range");
  const int m = whole_ceiling(nu);
  Exponents e;
  for (Index i = 0; i < ctx.size(); ++i) e[i] = i == k ? nu : nu - m;
  return Expr::monomial(rgamma(nu + 1.0), std::move(e));
}

// ------------------------------------------------------------- Jacobian

enum class JacobianMode { Symbolic, Numeric, Auto };

struct NumericOptions {
  double h = kDefaultStep;
  int levels = kDefaultLevels;
};

struct JacobianMatrix {
  double nu = 1.0;
  int m = 1;
  std::string chart;
  bool symbolic = false;
  std::vector<double> point;  ///< source point of `values`; empty if none
  Matrix<Expr> exprs;         ///< (k, i) over the source context, when symbolic
  Matrix<double> values;      ///< (k, i) at `point`
  Matrix<double> errors;      ///< numeric error estimates, zero when symbolic
};

inline Matrix<Expr> symbolic_jacobian(const Chart& chart, double nu) {
  if (!(nu > 0.0)) throw DomainError("jacobian: order must be positive");
  if (!chart.symbolic_forward()) throw UnsupportedError("jacobian: chart '" + chart.name() + "' has no symbolic maps");
  const std::size_t n = chart.dim();
  Matrix<Expr> J(n, n);
  for (Index k = 0; k < n; ++k) {
    const Expr b = detail::symbolic_bracket(chart, k, nu);
    for (Index i = 0; i < n; ++i) J(k, i) = rgamma(nu + 1.0) * rl_deriv(b, i, nu);
  }
  return J;
}

/// Grunwald-Letnikov Jacobian at a source point, Richardson-extrapolated.
/// Whole orders are local, so their stencil ignores the initial point.
inline JacobianMatrix numeric_jacobian(const Chart& chart, double nu, std::span<const double> y,
                                       NumericOptions opt = {}) {
  if (!(nu > 0.0)) throw DomainError("jacobian: order must be positive");
  const std::size_t n = chart.dim();
  if (y.size() != n) throw std::invalid_argument("jacobian: point has wrong dimension");
  if (is_whole(nu)) nu = std::round(nu);
  JacobianMatrix J;
  J.nu = nu;
  J.m = whole_ceiling(nu);
  J.chart = chart.name();
  J.point.assign(y.begin(), y.end());
  J.values = Matrix<double>(n, n);
  J.errors = Matrix<double>(n, n);
  const double scale = rgamma(nu + 1.0);
  for (Index k = 0; k < n; ++k) {
    auto bracket = [&](std::span<const double> p) { return detail::bracket_value(chart, k, nu, p); };
    for (Index i = 0; i < n; ++i) {
      double lower = chart.source().origin(i);
      if (is_whole(nu)) lower = y[i] - 1.0;
      if (!(y[i] > lower))
        throw DomainError("jacobian: point coordinate '" + chart.source().name(i) +
                          "' must exceed its initial point " + format_number(lower));
      const auto r = richardson_partial(bracket, i, nu, y, lower, opt.h, opt.levels);
      J.values(k, i) = scale * r.value;
      J.errors(k, i) = std::abs(scale) * r.error_estimate;
    }
  }
  return J;
}

inline Matrix<double> evaluate(const Matrix<Expr>& m, const Context& ctx, std::span<const double> point) {
  return m.map([&](const Expr& e) { return eval(e, ctx, point); });
}

/// Fractional Jacobian J(k, i) = J_i^k. Symbolic mode needs power-product
/// forward maps; numeric mode needs a point; Auto prefers symbolic.
inline JacobianMatrix jacobian(const Chart& chart, double nu, JacobianMode mode, std::span<const double> point = {},
                               NumericOptions opt = {}) {
  if (mode == JacobianMode::Auto) {
    if (chart.symbolic_forward()) {
      try {
        return jacobian(chart, nu, JacobianMode::Symbolic, point, opt);
      } catch (const UnsupportedError&) {
      }
    }
    mode = JacobianMode::Numeric;
  }
  if (mode == JacobianMode::Numeric) {
    if (point.empty()) throw std::invalid_argument("jacobian: numeric mode needs a point");
    return numeric_jacobian(chart, nu, point, opt);
  }
  JacobianMatrix J;
  J.nu = nu;
  J.m = whole_ceiling(nu);
  J.chart = chart.name();
  J.symbolic = true;
  J.exprs = symbolic_jacobian(chart, nu);
  if (!point.empty()) {
    J.point.assign(point.begin(), point.end());
    J.values = evaluate(J.exprs, chart.source(), point);
    J.errors = Matrix<double>(chart.dim(), chart.dim());
  }
  return J;
}

/// Closed form of the dr^nu coefficient of dx_{k+1}^nu for the polar chart:
///   Gamma(2nu-m+1) / (Gamma(nu+1) Gamma(nu-m+1)) * trig * r^(nu-m),
/// trig = cos^nu / sin^(m-nu) for k = 0 and sin^nu / cos^(m-nu) for k = 1.
inline double polar_dr_closed_form(Index k, double nu, double r, double theta) {
  const int m = whole_ceiling(nu);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double trig = k == 0 ? std::pow(c, nu) / std::pow(s, m - nu) : std::pow(s, nu) / std::pow(c, m - nu);
  return gamma_ratio(2.0 * nu - m + 1.0, nu - m + 1.0) * rgamma(nu + 1.0) * trig * std::pow(r, nu - m);
}

// ------------------------------------------------- transformation, metric

/// Rewrite A = sum_k A_k dx_k^nu as sum_i (sum_k A_k(x(y)) J_i^k) dy_i^nu.
/// A numeric Jacobian gives constant coefficients valid at its point.
inline Form transform_form(const Form& A, const JacobianMatrix& J, const Chart& chart) {
  const std::size_t n = chart.dim();
  if (!A.is_zero() && (A.grade() != 1 || std::abs(A.total_order() - J.nu) > kOrderTolerance))
    throw std::invalid_argument("transform_form: form order does not match the Jacobian");
  const OneForm a = as_one_form(A, chart.target());
  std::vector<Expr> out(n);
  if (J.symbolic) {
    for (Index k = 0; k < n; ++k) {
      if (a.coeffs[k].is_zero()) continue;
      const Expr ak = compose(a.coeffs[k], chart);
      for (Index i = 0; i < n; ++i) out[i] += ak * J.exprs(k, i);
    }
  } else {
    if (J.point.empty()) throw std::invalid_argument("transform_form: numeric Jacobian without a point");
    const auto x = chart.to_target(J.point);
    for (Index k = 0; k < n; ++k) {
      if (a.coeffs[k].is_zero()) continue;
      const double ak = eval(a.coeffs[k], chart.target(), x);
      for (Index i = 0; i < n; ++i) out[i] += Expr::constant(ak * J.values(k, i));
    }
  }
  return make_one_form(out, J.nu);
}

struct MetricMatrix {
  double nu = 1.0;
  std::string chart;
  bool symbolic = false;
  std::vector<double> point;
  Matrix<Expr> exprs;
  Matrix<double> values;
};

/// g_ij = sum_k J_i^k J_j^k, filled for i <= j and mirrored.
inline MetricMatrix metric_from_jacobian(const JacobianMatrix& J) {
  MetricMatrix g;
  g.nu = J.nu;
  g.chart = J.chart;
  g.symbolic = J.symbolic;
  g.point = J.point;
  const std::size_t n = J.symbolic ? J.exprs.rows() : J.values.rows();
  if (J.symbolic) {
    g.exprs = Matrix<Expr>(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = i; j < n; ++j) {
        Expr s;
        for (Index k = 0; k < n; ++k) s += J.exprs(k, i) * J.exprs(k, j);
        g.exprs(i, j) = s;
        g.exprs(j, i) = s;
      }
  }
  if (!J.point.empty()) {
    g.values = Matrix<double>(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = i; j < n; ++j) {
        double s = 0.0;
        for (Index k = 0; k < n; ++k) s += J.values(k, i) * J.values(k, j);
        g.values(i, j) = s;
        g.values(j, i) = s;
      }
  }
  return g;
}

inline MetricMatrix metric(const Chart& chart, double nu, JacobianMode mode, std::span<const double> point = {},
                           NumericOptions opt = {}) {
  return metric_from_jacobian(jacobian(chart, nu, mode, point, opt));
}

/// ds^nu = sqrt(sum_ij g_ij dy_i dy_j), the dy_i standing for the supplied
/// components of dy_i^nu.
inline double line_element(const Matrix<double>& g, std::span<const double> dy, double nu) {
  if (!(nu > 0.0)) throw DomainError("line_element: order must be positive");
  if (g.rows() != dy.size() || g.cols() != dy.size())
    throw std::invalid_argument("line_element: displacement has wrong dimension");
  double q = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < dy.size(); ++i)
    for (std::size_t j = 0; j < dy.size(); ++j) {
      q += g(i, j) * dy[i] * dy[j];
      scale += std::abs(g(i, j) * dy[i] * dy[j]);
    }
  if (q < -1e-12 * std::max(scale, 1.0)) throw DomainError("line_element: quadratic form is negative");
  return std::sqrt(std::max(q, 0.0));
}

// ----------------------------------------------------- inverse identity

/// J(y,x,nu) J(x,y,nu) - I over the source coordinates, symbolically. Needs
/// symbolic maps in both directions.
inline Matrix<Expr> inverse_residual_symbolic(const Chart& chart, double nu) {
  const std::size_t n = chart.dim();
  const Matrix<Expr> fwd = symbolic_jacobian(chart, nu);
  const Matrix<Expr> back = symbolic_jacobian(chart.reversed(), nu).map([&](const Expr& e) {
    return compose(e, chart);
  });
  Matrix<Expr> p = multiply(fwd, back, Expr{});
  for (Index i = 0; i < n; ++i) p(i, i) = p(i, i) - Expr::constant(1.0);
  return p;
}

/// J(y,x,nu) J(x,y,nu) - I at a source point. Row k, column j compare
/// dx_k^nu with dx_j^nu after a round trip through the curvilinear side.
inline Matrix<double> inverse_residual(const Chart& chart, double nu, std::span<const double> y,
                                       JacobianMode mode = JacobianMode::Auto, NumericOptions opt = {}) {
  const std::size_t n = chart.dim();
  if (mode != JacobianMode::Numeric && chart.symbolic_forward() && chart.symbolic_inverse()) {
    try {
      return evaluate(inverse_residual_symbolic(chart, nu), chart.source(), y);
    } catch (const UnsupportedError&) {
      if (mode == JacobianMode::Symbolic) throw;
    }
  } else if (mode == JacobianMode::Symbolic) {
    throw UnsupportedError("inverse_residual: chart has no symbolic maps in both directions");
  }
  const auto fwd = jacobian(chart, nu, JacobianMode::Numeric, y, opt);
  const auto x = chart.to_target(y);
  const auto back = jacobian(chart.reversed(), nu, JacobianMode::Numeric, x, opt);
  Matrix<double> p = multiply(fwd.values, back.values, 0.0);
  for (Index i = 0; i < n; ++i) p(i, i) -= 1.0;
  return p;
}

// ------------------------------------------------------------------ JSON

/// Serialized matrix with metadata; `symbolic` holds expression text when
/// the entries are known in closed form.
struct MatrixRecord {
  std::string kind;
  double nu = 1.0;
  int m = 1;
  std::string chart;
  std::vector<double> point;
  Matrix<double> values;
  std::optional<Matrix<std::string>> symbolic;

  friend bool operator==(const MatrixRecord&, const MatrixRecord&) = default;
};

inline nlohmann::json to_json(const MatrixRecord& r) {
  auto rows = [](const auto& mat) {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = 0; i < mat.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t j = 0; j < mat.cols(); ++j) row.push_back(mat(i, j));
      out.push_back(row);
    }
    return out;
  };
  nlohmann::json j{{"kind", r.kind}, {"nu", r.nu}, {"m", r.m}, {"chart", r.chart}, {"point", r.point}};
  j["entries"] = rows(r.values);
  if (r.symbolic) j["symbolic"] = rows(*r.symbolic);
  return j;
}

inline MatrixRecord matrix_record_from_json(const nlohmann::json& j) {
  MatrixRecord r;
  r.kind = j.value("kind", std::string{});
  r.nu = j.at("nu").get<double>();
  r.m = j.at("m").get<int>();
  r.chart = j.at("chart").get<std::string>();
  r.point = j.at("point").get<std::vector<double>>();
  auto read = [](const nlohmann::json& rows, auto sample) {
    using T = decltype(sample);
    const std::size_t nr = rows.size();
    const std::size_t nc = nr ? rows.at(0).size() : 0;
    Matrix<T> m(nr, nc);
    for (std::size_t a = 0; a < nr; ++a) {
      if (rows.at(a).size() != nc) throw std::invalid_argument("matrix JSON: ragged rows");
      for (std::size_t b = 0; b < nc; ++b) m(a, b) = rows.at(a).at(b).get<T>();
    }
    return m;
  };
  r.values = read(j.at("entries"), double{});
  if (j.contains("symbolic")) r.symbolic = read(j.at("symbolic"), std::string{});
  return r;
}

inline MatrixRecord record(const JacobianMatrix& J, const Chart& chart) {
  MatrixRecord r{"jacobian", J.nu, J.m, J.chart, J.point, J.values, std::nullopt};
  if (J.symbolic) r.symbolic = J.exprs.map([&](const Expr& e) { return to_string(e, chart.source()); });
  return r;
}

inline MatrixRecord record(const MetricMatrix& g, const Chart& chart) {
  MatrixRecord r{"metric", g.nu, whole_ceiling(g.nu), g.chart, g.point, g.values, std::nullopt};
  if (g.symbolic) r.symbolic = g.exprs.map([&](const Expr& e) { return to_string(e, chart.source()); });
  return r;
}

}  // namespace fracforms
