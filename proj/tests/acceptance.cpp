// Acceptance gate: one line per criterion, exit status 1 if any fails.
// Usage: acceptance <path-to-frac>

#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <fracforms/fracforms.hpp>

#include "generators.hpp"

using namespace fracforms;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(double v) { return format_number(v, 4); }

double max_abs(const Matrix<double>& m) {
  double r = 0.0;
  for (double v : m.data()) r = std::max(r, std::abs(v));
  return r;
}

Context coords(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
  return Context(names);
}

Verdict constant_rule() {
  const Context ctx({"x"});
  const std::vector<double> x{4.0};
  const double sym = eval(rl_deriv(Expr::constant(1.0), 0, 0.5), ctx, x);
  const double gl = gl_deriv([](double) { return 1.0; }, 0.5, 4.0, 0.0, 1e-4);
  const double rel = std::abs(gl - sym) / sym;
  return {std::abs(sym - 0.2820947918) <= 1e-9 && rel <= 1e-3,
          "symbolic " + format_number(sym, 10) + ", GL rel err " + fmt(rel)};
}

Verdict power_rule_vs_oracle() {
  std::mt19937_64 rng(20240601);
  const Context ctx({"x"});
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double p = gen::uniform(rng, 0.0, 4.0), q = gen::uniform(rng, 0.0, 2.0), x = gen::uniform(rng, 0.5, 3.0);
    const Expr e = Expr::coordinate(0, p);
    const std::vector<double> pt{x};
    const double sym = eval(rl_deriv(e, 0, q), ctx, pt);
    const auto num = richardson_partial([&](std::span<const double> s) { return eval(e, ctx, s); }, 0, q, pt, 0.0);
    worst = std::max(worst, std::abs(num.value - sym) / std::abs(sym));
  }
  return {worst <= 1e-4, "worst rel err " + fmt(worst) + " over 50 cases"};
}

Verdict dv_family() {
  const Context ctx({"x", "y"});
  const Expr x2 = parse_expr("x^2", ctx);
  bool ok = true;
  for (double nu : {0.3, 0.5, 0.7}) {
    Form want(1, nu);
    want.add({{0, nu}}, Expr::monomial(gamma_ratio(3.0, 3.0 - nu), {{0, 2.0 - nu}}));
    want.add({{1, nu}}, Expr::monomial(rgamma(1.0 - nu), {{0, 2.0}, {1, -nu}}));
    const Form got = frac_exterior_deriv(x2, nu, ctx);
    ok = ok && got.terms().size() == 2 && approx_equal(got, want, 1e-12);
    for (std::size_t t = 0; ok && t < 2; ++t)
      ok = got.terms()[t].word == want.terms()[t].word &&
           fracforms::detail::same_exponents(got.terms()[t].coeff.terms()[0].exps, want.terms()[t].coeff.terms()[0].exps);
  }
  const Form d0 = frac_exterior_deriv(x2, 0.0, ctx);
  ok = ok && d0.grade() == 0 && d0.scalar_part() == parse_expr("2*x^2", ctx);
  ok = ok && frac_exterior_deriv(x2, 1.0, ctx) == parse_form("2*x d(x,1)", ctx);
  ok = ok && frac_exterior_deriv(x2, 2.0, ctx) == parse_form("2 d(x,2)", ctx);
  return {ok, "nu=0.5: " + to_string(frac_exterior_deriv(x2, 0.5, ctx), ctx, {10})};
}

Verdict product_rule() {
  const Context ctx({"x"});
  const auto s = product_rule_series(parse_expr("x^2", ctx), parse_expr("x^3", ctx), 0, 0.5, 100, ctx);
  const Expr want = rl_deriv(parse_expr("x^5", ctx), 0, 0.5);
  return {!s.truncated && approx_equal(s.value, want, 1e-10),
          std::to_string(s.terms_used) + " terms: " + to_string(s.value, ctx, {10})};
}

Verdict composition() {
  const Context ctx({"x"});
  const Expr r = compose_residual(parse_expr("x", ctx), 0, 0.5, 0.5);
  const Expr e = parse_expr("x^-0.5", ctx);
  const Expr round = rl_integ(rl_deriv(e, 0, 0.5), 0, 0.5);
  return {approx_equal(r, Expr{}, 1e-10) && round.is_zero() && !(round == e),
          "residual " + to_string(r, ctx) + ", I^0.5 D^0.5 x^-0.5 = " + to_string(round, ctx)};
}

Verdict kernels() {
  int checked = 0;
  for (double nu : {0.3, 0.5, 1.0, 1.5, 2.7})
    for (std::size_t n = 1; n <= 3; ++n) {
      const Context ctx = coords(n);
      for (Index i = 0; i < n; ++i)
        for (const Expr& k : kernel_basis_1d(nu, i)) {
          ++checked;
          if (!approx_equal(rl_deriv(k, i, nu), Expr{}, 1e-10)) return {false, "D^" + fmt(nu) + " kernel element survives"};
        }
      for (const Expr& k : kernel_basis_dv(nu, ctx)) {
        ++checked;
        if (!approx_equal(frac_exterior_deriv(k, nu, ctx), Form(1, nu), 1e-10))
          return {false, "d^" + fmt(nu) + " kernel element survives: " + to_string(k, ctx)};
      }
    }
  return {true, std::to_string(checked) + " basis elements annihilated"};
}

Verdict classical_reduction() {
  std::mt19937_64 rng(20240607);
  int exact = 0;
  for (int n = 0; n < 100; ++n) {
    const std::size_t dim = n % 2 ? 3 : 2;
    const Context ctx = coords(dim);
    Form alpha;
    if (n % 3 == 0) {
      std::vector<Expr> c;
      for (std::size_t i = 0; i < dim; ++i) c.push_back(gen::polynomial(rng, dim, 3, 2));
      alpha = make_one_form(c, 1.0);
    } else {
      alpha = frac_exterior_deriv(gen::polynomial(rng, dim, 4, 3), 1.0, ctx);
      if (alpha.is_zero()) alpha = Form(1, 1.0);
    }
    const OneForm a = as_one_form(alpha, ctx);
    bool curl_free = true;
    for (Index i = 0; i < dim; ++i)
      for (Index j = i + 1; j < dim; ++j)
        if (!(classical_derivative(a.coeffs[j], i, 1) - classical_derivative(a.coeffs[i], j, 1)).is_zero())
          curl_free = false;
    if (is_closed(alpha, 1.0, ctx).closed != curl_free) return {false, "is_closed disagrees with the curl test"};
    bool residuals_vanish = true;
    for (Index i = 0; i < dim; ++i)
      for (Index j = 0; j < dim; ++j)
        if (i != j && !integrability_residual(alpha, i, j, ctx).is_zero()) residuals_vanish = false;
    if (residuals_vanish != curl_free) return {false, "integrability residuals disagree with the curl test"};
    const auto r = solve_exact(alpha, 1.0, ctx);
    if (r.exact() != curl_free) return {false, "solve_exact disagrees with the curl test"};
    if (r.exact()) {
      ++exact;
      if (!approx_equal(frac_exterior_deriv(r.potential, 1.0, ctx), alpha, 1e-9))
        return {false, "potential fails the round trip"};
    }
  }
  return {true, std::to_string(exact) + " exact, " + std::to_string(100 - exact) + " not exact"};
}

Verdict fractional_roundtrip() {
  std::mt19937_64 rng(20240608);
  const Context ctx = coords(2);
  int n = 0;
  for (double nu : {0.25, 0.5, 0.75})
    for (int k = 0; k < 20; ++k, ++n) {
      const Expr f = gen::polynomial(rng, 2, 4, 3);
      const Form alpha = frac_exterior_deriv(f, nu, ctx);
      const auto r = solve_exact(alpha, nu, ctx);
      if (!r.exact()) return {false, "not exact: d^" + fmt(nu) + " " + to_string(f, ctx)};
      if (!approx_equal(frac_exterior_deriv(r.potential, nu, ctx), alpha, 1e-9)) return {false, "round trip fails"};
    }
  return {true, std::to_string(n) + " potentials recovered"};
}

Verdict polar_reduction() {
  std::mt19937_64 rng(20240609);
  const Chart p = polar_chart();
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double r = gen::uniform(rng, 0.5, 3.0), th = gen::uniform(rng, 0.1, 3.0);
    const std::vector<double> y{r, th};
    const JacobianMatrix J = jacobian(p, 1.0, JacobianMode::Numeric, y);
    const MetricMatrix g = metric_from_jacobian(J);
    const std::array<double, 4> want_j{std::cos(th), -r * std::sin(th), std::sin(th), r * std::cos(th)};
    const std::array<double, 4> want_g{1.0, 0.0, 0.0, r * r};
    for (std::size_t e = 0; e < 4; ++e) {
      worst = std::max(worst, std::abs(J.values(e / 2, e % 2) - want_j[e]));
      worst = std::max(worst, std::abs(g.values(e / 2, e % 2) - want_g[e]));
    }
  }
  return {worst <= 1e-8, "max deviation " + fmt(worst)};
}

Verdict polar_fractional() {
  const double th = std::numbers::pi / 4;
  const std::vector<double> y{2.0, th};
  const JacobianMatrix J = jacobian(polar_chart(), 0.5, JacobianMode::Numeric, y);
  double worst = 0.0;
  for (Index k = 0; k < 2; ++k) {
    const double want = polar_dr_closed_form(k, 0.5, 2.0, th);
    worst = std::max(worst, std::abs(J.values(k, 0) - want) / std::abs(want));
  }
  return {worst <= 1e-3, "GL " + format_number(J.values(0, 0), 10) + " vs closed form " +
                             format_number(polar_dr_closed_form(0, 0.5, 2.0, th), 10) + ", rel err " + fmt(worst)};
}

Verdict inverse_identity() {
  const std::vector<double> y{1.7, 0.8};
  const double polar = max_abs(inverse_residual(polar_chart(), 1.0, y));
  const Matrix<Expr> scale = inverse_residual_symbolic(scale_chart({3.0}), 0.5);
  const double diag = max_abs(inverse_residual(scale_chart({2.0, 3.0}), 0.5, y));
  return {polar <= 1e-6 && scale(0, 0).is_zero(),
          "polar nu=1 " + fmt(polar) + ", scale n=1 nu=0.5 exact 0: " + (scale(0, 0).is_zero() ? "yes" : "no") +
              " (diagnostic: scale n=2 nu=0.5 residual " + fmt(diag) + ")"};
}

Verdict verify_through_cli(const std::string& frac) {
  if (frac.empty()) return {false, "path to frac not given"};
  const std::string cmd = "\"" + frac + "\" verify 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {false, "cannot run " + frac};
  std::string out;
  std::array<char, 512> buf;
  while (std::fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  const int status = pclose(pipe);
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::string missing;
  for (const char* name : {"eq12", "eq20", "eq21", "eq22", "eq23", "eq63", "eq64", "eq65_66"})
    if (out.find(std::string("[PASS] ") + name + ":") == std::string::npos) missing += std::string(" ") + name;
  const auto last = out.find_last_of('\n', out.size() - 2);
  const std::string summary = out.substr(last == std::string::npos ? 0 : last + 1);
  return {code == 0 && missing.empty(),
          "exit " + std::to_string(code) + (missing.empty() ? "" : ", missing:" + missing) + ", " +
              summary.substr(0, summary.find('\n'))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string frac = argc > 1 ? argv[1] : "";
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"constant rule at x=4", constant_rule},
      {"power rule vs Richardson GL", power_rule_vs_oracle},
      {"d^nu x^2 family, nu in {0.3,0.5,0.7,0,1,2}", dv_family},
      {"product rule terminates", product_rule},
      {"composition correction", composition},
      {"kernel soundness", kernels},
      {"closed/exact at order one", classical_reduction},
      {"fractional round-trip exactness", fractional_roundtrip},
      {"polar chart at order one", polar_reduction},
      {"polar dr entries at order 0.5", polar_fractional},
      {"inverse identity where provable", inverse_identity},
      {"frac verify", [&] { return verify_through_cli(frac); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << i + 1 << ". " << criteria[i].first << " -- " << v.detail << "\n";
  }
  std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria passed\n";
  return failed ? 1 : 0;
}
