#pragma once

// End-to-end reproduction checks behind `frac verify`.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <fracforms/fracforms.hpp>

namespace fracforms::cli {

struct CheckResult {
  std::string name;
  std::string description;
  std::string expected;
  std::string computed;
  bool passed = false;
};

struct Check {
  std::string name;
  std::string description;
  std::function<CheckResult()> run;
};

namespace detail {

inline std::string num(double v) { return format_number(v, 10); }

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline CheckResult make(std::string expected, std::string computed, bool ok) {
  CheckResult r;
  r.expected = std::move(expected);
  r.computed = std::move(computed);
  r.passed = ok;
  return r;
}

/// d^nu x^2 in two coordinates (x, y) for the integer-order rows of the family.
inline CheckResult dv_family_whole(double nu, const char* expected_text) {
  const Context ctx({"x", "y"});
  const Form got = frac_exterior_deriv(parse_expr("x^2", ctx), nu, ctx);
  const Form want = parse_form(expected_text, ctx);
  return make(expected_text, to_string(got, ctx, {10}), got == want);
}

}  // namespace detail

inline std::vector<Check> verification_checks() {
  using detail::make;
  using detail::num;
  std::vector<Check> checks;

  checks.push_back({"eq12", "constant rule: D^0.5 1 at x=4, symbolic and Grunwald-Letnikov", [] {
                      const Context ctx({"x"});
                      const Expr d = rl_deriv(Expr::constant(1.0), 0, 0.5);
                      const double x = 4.0;
                      const double sym = eval(d, ctx, std::vector<double>{x});
                      const double gl = gl_deriv([](double) { return 1.0; }, 0.5, x, 0.0, 1e-4);
                      const double want = 0.2820947918;
                      const bool ok = std::abs(sym - want) <= 1e-9 && detail::rel_err(gl, want) <= 1e-3;
                      return make(num(want) + " (GL within 1e-3)", num(sym) + " (GL " + num(gl) + ")", ok);
                    }});

  checks.push_back({"eq20", "d^nu x^2 in 2D matches the two-term closed form, nu in {0.3, 0.5, 0.7}", [] {
                      const Context ctx({"x", "y"});
                      bool ok = true;
                      std::string computed;
                      for (double nu : {0.3, 0.5, 0.7}) {
                        const Form got = frac_exterior_deriv(parse_expr("x^2", ctx), nu, ctx);
                        Form want(1, nu);
                        want.add({DiffFactor{0, nu}},
                                 Expr::monomial(std::tgamma(3.0) / std::tgamma(3.0 - nu), {{0, 2.0 - nu}}));
                        want.add({DiffFactor{1, nu}},
                                 Expr::monomial(1.0 / std::tgamma(1.0 - nu), {{0, 2.0}, {1, -nu}}));
                        bool same_words = got.terms().size() == want.terms().size();
                        for (std::size_t t = 0; same_words && t < got.terms().size(); ++t)
                          same_words = got.terms()[t].word == want.terms()[t].word &&
                                       got.terms()[t].coeff.size() == 1 &&
                                       fracforms::detail::same_exponents(got.terms()[t].coeff.terms()[0].exps,
                                                                         want.terms()[t].coeff.terms()[0].exps);
                        ok = ok && same_words && approx_equal(got, want, 1e-12);
                        if (nu == 0.5) computed = to_string(got, ctx, {10});
                      }
                      return make("Gamma(3)/Gamma(3-nu) x^(2-nu) d(x,nu) + x^2 y^-nu/Gamma(1-nu) d(y,nu)",
                                  computed + " (nu=0.5)", ok);
                    }});

  checks.push_back({"eq21", "d^0 x^2 = 2*x^2 (scalar)", [] { return detail::dv_family_whole(0.0, "2*x^2"); }});
  checks.push_back({"eq22", "d^1 x^2 = 2*x d(x,1)", [] { return detail::dv_family_whole(1.0, "2*x d(x,1)"); }});
  checks.push_back(
      {"eq23", "d^2 x^2 = 2 d(x,2), y-term annihilated", [] { return detail::dv_family_whole(2.0, "2 d(x,2)"); }});

  checks.push_back({"eq45", "nu = mu = 1: 2*x1*x2 d(x1,1) + x1^2 d(x2,1) is closed, x2 d(x1,1) is not", [] {
                      const Context ctx({"x1", "x2"});
                      const auto a = is_closed(parse_form("2*x1*x2 d(x1,1) + x1^2 d(x2,1)", ctx), 1.0, ctx);
                      const auto b = is_closed(parse_form("x2 d(x1,1)", ctx), 1.0, ctx);
                      const bool ok = a.closed && !b.closed && b.witnesses.size() == 1 &&
                                      b.witnesses[0].residual == Expr::constant(-1.0);
                      std::string got = std::string(a.closed ? "closed" : "not closed") + ", " +
                                        (b.closed ? "closed" : "not closed (residual " +
                                                                   to_string(b.witnesses.at(0).residual, ctx) + ")");
                      return make("closed, not closed (residual -1)", got, ok);
                    }});

  checks.push_back({"eq54", "n=1: D^nu alpha_1 = 1 for nu in {0.5, 1.6}", [] {
                      const Context ctx({"x"});
                      bool ok = true;
                      std::string got;
                      for (double nu : {0.5, 1.6}) {
                        const Expr d = rl_deriv(alpha_k(0, nu, ctx), 0, nu);
                        ok = ok && approx_equal(d, Expr::constant(1.0), 1e-12) && d.size() == 1;
                        got += (got.empty() ? "" : ", ") + to_string(d, ctx, {10});
                      }
                      return make("1, 1", got, ok);
                    }});

  auto polar_dr = [](Index k) {
    return [k] {
      const Chart polar = polar_chart();
      const double nu = 0.5;
      const std::vector<double> y{2.0, std::numbers::pi / 4};
      const auto J = jacobian(polar, nu, JacobianMode::Numeric, y);
      const double closed = polar_dr_closed_form(k, nu, y[0], y[1]);
      return make(num(closed), num(J.values(k, 0)), detail::rel_err(J.values(k, 0), closed) <= 1e-3);
    };
  };
  checks.push_back({"eq63", "polar dr^nu coefficient of dx1^nu at nu=0.5, (r,theta)=(2,pi/4): GL vs closed form",
                    polar_dr(0)});
  checks.push_back({"eq64", "polar dr^nu coefficient of dx2^nu at nu=0.5, (r,theta)=(2,pi/4): GL vs closed form",
                    polar_dr(1)});

  checks.push_back({"eq65_66", "polar chart at nu=1: classical Jacobian and metric diag(1, r^2) at 10 points", [] {
                      const Chart polar = polar_chart();
                      std::mt19937_64 rng(20240611);
                      std::uniform_real_distribution<double> R(0.5, 3.0), T(0.1, 3.0);
                      double worst = 0.0;
                      for (int s = 0; s < 10; ++s) {
                        const std::vector<double> y{R(rng), T(rng)};
                        const auto J = jacobian(polar, 1.0, JacobianMode::Numeric, y);
                        const auto g = metric_from_jacobian(J);
                        const double r = y[0], c = std::cos(y[1]), sn = std::sin(y[1]);
                        const double want_j[2][2] = {{c, -r * sn}, {sn, r * c}};
                        const double want_g[2][2] = {{1.0, 0.0}, {0.0, r * r}};
                        for (int a = 0; a < 2; ++a)
                          for (int b = 0; b < 2; ++b) {
                            worst = std::max(worst, std::abs(J.values(a, b) - want_j[a][b]));
                            worst = std::max(worst, std::abs(g.values(a, b) - want_g[a][b]));
                          }
                      }
                      return make("max deviation <= 1e-8", "max deviation " + num(worst), worst <= 1e-8);
                    }});
  return checks;
}

}  // namespace fracforms::cli
