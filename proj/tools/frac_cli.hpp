#pragma once

// Command-line front end. `run` is kept separate from main() so tests can
// drive the CLI in-process.
//
// Exit codes: 0 success, 1 verification failure or internal error,
// 2 parse/usage error, 3 domain error, 4 unsupported operation.

#include <algorithm>
#include <cctype>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fracforms/fracforms.hpp>

#include "verify_suite.hpp"

namespace fracforms::cli {

enum ExitCode : int { kOk = 0, kFailed = 1, kUsage = 2, kDomain = 3, kUnsupported = 4 };

inline constexpr int kDigits = 10;

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    out.push_back(item);
  }
  return out;
}

inline std::vector<double> numbers(const std::string& s, const char* flag) {
  std::vector<double> out;
  for (const auto& item : split(s)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty() || !std::isfinite(v))
      throw std::invalid_argument(std::string(flag) + ": invalid number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

/// a2 < a10: compare the alphabetic prefix, then the numeric suffix.
inline bool natural_less(const std::string& a, const std::string& b) {
  auto cut = [](const std::string& s) {
    std::size_t p = s.size();
    while (p > 0 && std::isdigit(static_cast<unsigned char>(s[p - 1]))) --p;
    return p;
  };
  const std::size_t pa = cut(a), pb = cut(b);
  const std::string ha = a.substr(0, pa), hb = b.substr(0, pb);
  if (ha != hb) return ha < hb;
  const std::string ta = a.substr(pa), tb = b.substr(pb);
  if (ta.size() != tb.size()) return ta.size() < tb.size();
  return ta < tb;
}

/// Identifiers used in expression or form text, minus differential markers.
inline std::vector<std::string> infer_coordinates(const std::string& text) {
  std::set<std::string> names;
  for (std::size_t i = 0; i < text.size();) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    const bool starts = std::isalpha(c) || c == '_';
    const bool inside_number = i > 0 && (std::isdigit(static_cast<unsigned char>(text[i - 1])) || text[i - 1] == '.');
    if (starts && !inside_number) {
      std::size_t j = i;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
      std::string id = text.substr(i, j - i);
      std::size_t k = j;
      while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
      if (!(id == "d" && k < text.size() && text[k] == '(')) names.insert(id);
      i = j;
    } else {
      ++i;
    }
  }
  std::vector<std::string> out(names.begin(), names.end());
  std::sort(out.begin(), out.end(), natural_less);
  return out;
}

inline Context make_context(const std::string& coords, const std::string& origin, const std::string& text) {
  std::vector<std::string> names = coords.empty() ? infer_coordinates(text) : split(coords);
  if (names.empty()) names.push_back("x");
  std::vector<double> a;
  if (!origin.empty()) a = numbers(origin, "--origin");
  return Context(names, a);
}

inline std::string format_matrix(const Matrix<double>& m, bool chop) {
  double scale = 1.0;
  for (double v : m.data()) scale = std::max(scale, std::abs(v));
  std::string s = "[";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    s += r ? ",[" : "[";
    for (std::size_t c = 0; c < m.cols(); ++c) {
      double v = m(r, c);
      // numeric Jacobians carry ~1e-10 absolute error
      if (chop && std::abs(v) < 1e-9 * scale) v = 0.0;
      s += (c ? "," : "") + format_number(v, kDigits);
    }
    s += "]";
  }
  return s + "]";
}

inline std::string format_matrix(const Matrix<Expr>& m, const Context& ctx) {
  std::string s = "[";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    s += r ? ",[" : "[";
    for (std::size_t c = 0; c < m.cols(); ++c) s += (c ? "," : "") + to_string(m(r, c), ctx, {kDigits});
    s += "]";
  }
  return s + "]";
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i], kDigits);
  return s;
}

inline JacobianMode parse_mode(const std::string& m) {
  if (m == "auto") return JacobianMode::Auto;
  if (m == "symbolic") return JacobianMode::Symbolic;
  if (m == "numeric") return JacobianMode::Numeric;
  throw std::invalid_argument("--mode must be auto, symbolic or numeric");
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace detail

/// Parsed flags shared by the verbs; each verb registers the ones it uses.
struct Options {
  std::string coords;
  std::string origin;
  std::string var;
  double order = 1.0;
  std::optional<double> mu;
  bool json = false;
  std::string input;
  std::string chart;
  std::string point;
  std::string dy;
  std::string mode = "auto";
  double h = kDefaultStep;
  int levels = kDefaultLevels;
  bool residual = false;
  std::string only;
};

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  using nlohmann::json;
  CLI::App app{"Symbolic-numeric fractional exterior calculus", "frac"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  Options o;

  auto coords_flags = [&](CLI::App* sub) {
    sub->add_option("--coords", o.coords, "Comma-separated coordinate names (inferred from the input if omitted)");
    sub->add_option("--origin", o.origin, "Comma-separated initial points (default 0)");
  };
  auto json_flag = [&](CLI::App* sub) { sub->add_flag("--json", o.json, "Emit JSON"); };
  auto numeric_flags = [&](CLI::App* sub) {
    sub->add_option("--h", o.h, "Grunwald-Letnikov step");
    sub->add_option("--levels", o.levels, "Richardson levels (1 = plain GL)");
  };

  auto* deriv = app.add_subcommand("deriv", "Riemann-Liouville derivative of an expression");
  auto* integ = app.add_subcommand("integ", "Riemann-Liouville integral of an expression");
  for (auto* sub : {deriv, integ}) {
    coords_flags(sub);
    json_flag(sub);
    sub->add_option("--var", o.var, "Coordinate to differentiate along")->required();
    sub->add_option("--order", o.order, "Order q")->required();
    sub->add_option("expr", o.input, "Expression")->required();
  }

  auto* dv = app.add_subcommand("dv", "Fractional exterior derivative of an expression or form");
  coords_flags(dv);
  json_flag(dv);
  dv->add_option("--order", o.order, "Order nu >= 0")->required();
  dv->add_option("form", o.input, "Expression or form literal")->required();

  auto* closed = app.add_subcommand("closed", "Test d^mu alpha = 0 for a grade-1 form");
  coords_flags(closed);
  json_flag(closed);
  closed->add_option("--order", o.order, "Differential order nu of the form")->required();
  closed->add_option("--mu", o.mu, "Order mu of the exterior derivative (default nu)");
  closed->add_option("form", o.input, "Form literal")->required();

  auto* exact = app.add_subcommand("exact", "Find f with d^nu f = alpha for a grade-1 form");
  coords_flags(exact);
  json_flag(exact);
  exact->add_option("--order", o.order, "Order nu")->required();
  exact->add_option("form", o.input, "Form literal")->required();

  auto* jac = app.add_subcommand("jacobian", "Fractional Jacobian of a chart");
  auto* met = app.add_subcommand("metric", "Fractional metric of a chart");
  auto* line = app.add_subcommand("lineelement", "Fractional line element of a chart");
  for (auto* sub : {jac, met, line}) {
    json_flag(sub);
    numeric_flags(sub);
    sub->add_option("--chart", o.chart, "polar | identity | scale:c1,... | affine:a11,a12;a21,a22[@b1,b2]")
        ->required();
    sub->add_option("--order", o.order, "Order nu > 0")->required();
    sub->add_option("--point", o.point, "Curvilinear point, comma-separated");
    sub->add_option("--mode", o.mode, "auto | symbolic | numeric");
  }
  for (auto* sub : {jac, met}) sub->add_flag("--residual", o.residual, "Also print the inverse-identity residual");
  line->add_option("--dy", o.dy, "Displacement components dy_i^nu")->required();
  line->get_option("--point")->required();

  auto* oracle = app.add_subcommand("oracle", "Grunwald-Letnikov differintegral of an expression at a point");
  coords_flags(oracle);
  json_flag(oracle);
  numeric_flags(oracle);
  oracle->add_option("--var", o.var, "Coordinate")->required();
  oracle->add_option("--order", o.order, "Order q")->required();
  oracle->add_option("--point", o.point, "Absolute evaluation point")->required();
  oracle->add_option("expr", o.input, "Expression")->required();

  auto* verify = app.add_subcommand("verify", "Run the reproduction suite");
  json_flag(verify);
  verify->add_option("--only", o.only, "Run a single named check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "frac: " << e.what() << "\n";
    return kUsage;
  }

  try {
    const PrintOptions print{kDigits};

    if (deriv->parsed() || integ->parsed()) {
      const Context ctx = detail::make_context(o.coords, o.origin, o.input);
      const Index var = ctx.require(o.var);
      detail::require(std::isfinite(o.order), "--order must be finite");
      if (integ->parsed()) detail::require(o.order >= 0.0, "--order must be >= 0 for integ");
      const Expr e = parse_expr(o.input, ctx);
      const Expr r = deriv->parsed() ? rl_deriv(e, var, o.order, ctx) : rl_integ(e, var, o.order, ctx);
      if (o.json)
        out << json{{"input", to_string(e, ctx)}, {"var", o.var}, {"order", o.order}, {"result", to_string(r, ctx)}}
                   .dump()
            << "\n";
      else
        out << to_string(r, ctx, print) << "\n";
      return kOk;
    }

    if (dv->parsed()) {
      detail::require(o.order >= 0.0 && std::isfinite(o.order), "--order must be >= 0");
      const Context ctx = detail::make_context(o.coords, o.origin, o.input);
      const Form r = frac_exterior_deriv(parse_form(o.input, ctx), o.order, ctx);
      if (o.json)
        out << to_json(r, ctx).dump() << "\n";
      else
        out << to_string(r, ctx, print) << "\n";
      return kOk;
    }

    if (closed->parsed() || exact->parsed()) {
      detail::require(o.order > 0.0 && std::isfinite(o.order), "--order must be > 0");
      const Context ctx = detail::make_context(o.coords, o.origin, o.input);
      const Form alpha = parse_form(o.input, ctx);
      if (!alpha.is_zero())
        detail::require(alpha.grade() == 1 && std::abs(alpha.total_order() - o.order) <= kOrderTolerance,
                        "form is not a grade-1 form of order " + format_number(o.order));
      if (closed->parsed()) {
        const double mu = o.mu.value_or(o.order);
        detail::require(mu > 0.0 && std::isfinite(mu), "--mu must be > 0");
        const ClosureReport rep = is_closed(alpha, mu, ctx);
        if (o.json) {
          json w = json::array();
          for (const auto& x : rep.witnesses)
            w.push_back({{"i", ctx.name(x.i)}, {"j", ctx.name(x.j)}, {"residual", to_string(x.residual, ctx)}});
          out << json{{"closed", rep.closed}, {"nu", o.order}, {"mu", mu}, {"witnesses", w}}.dump() << "\n";
        } else {
          out << (rep.closed ? "closed" : "not closed") << "\n";
          for (const auto& x : rep.witnesses)
            out << "  (" << ctx.name(x.i) << ", " << ctx.name(x.j) << "): " << to_string(x.residual, ctx, print)
                << "\n";
        }
        return kOk;
      }
      const ExactnessResult res = solve_exact(alpha, o.order, ctx);
      using S = ExactnessResult::Status;
      if (res.status == S::Unsupported) {
        err << "frac: unsupported: " << res.reason << "\n";
        return kUnsupported;
      }
      if (o.json) {
        json j{{"nu", o.order}};
        if (res.exact()) {
          j["status"] = "exact";
          j["potential"] = to_string(res.potential, ctx);
        } else {
          j["status"] = "not_integrable";
          j["residual"] = to_string(res.residual, ctx);
          j["i"] = ctx.name(res.i);
          j["j"] = ctx.name(res.j);
        }
        out << j.dump() << "\n";
      } else if (res.exact()) {
        out << "exact: " << to_string(res.potential, ctx, print) << "\n";
      } else {
        out << "not integrable: residual " << to_string(res.residual, ctx, print) << " at (" << ctx.name(res.i)
            << ", " << ctx.name(res.j) << ")\n";
      }
      return kOk;
    }

    if (jac->parsed() || met->parsed() || line->parsed()) {
      detail::require(o.order > 0.0 && std::isfinite(o.order), "--order must be > 0");
      detail::require(o.h > 0.0, "--h must be > 0");
      detail::require(o.levels >= 2 && o.levels <= 5, "--levels must be in [2, 5]");
      std::vector<double> point;
      if (!o.point.empty()) point = detail::numbers(o.point, "--point");
      const Chart chart = make_chart(o.chart, point.size());
      detail::require(point.empty() || point.size() == chart.dim(),
                      "--point needs " + std::to_string(chart.dim()) + " components");
      const JacobianMode mode = detail::parse_mode(o.mode);
      const NumericOptions nopt{o.h, o.levels};
      const JacobianMatrix J = jacobian(chart, o.order, mode, point, nopt);

      if (line->parsed()) {
        const auto dy = detail::numbers(o.dy, "--dy");
        detail::require(dy.size() == chart.dim(), "--dy needs " + std::to_string(chart.dim()) + " components");
        const double ds = line_element(metric_from_jacobian(J).values, dy, o.order);
        if (o.json)
          out << json{{"chart", chart.name()}, {"nu", o.order}, {"point", point}, {"dy", dy}, {"ds", ds}}.dump()
              << "\n";
        else
          out << format_number(ds, kDigits) << "\n";
        return kOk;
      }

      MatrixRecord rec;
      std::string text;
      if (jac->parsed()) {
        rec = record(J, chart);
        text = point.empty() ? detail::format_matrix(J.exprs, chart.source())
                             : detail::format_matrix(J.values, !J.symbolic);
      } else {
        const MetricMatrix g = metric_from_jacobian(J);
        rec = record(g, chart);
        text = point.empty() ? detail::format_matrix(g.exprs, chart.source())
                             : detail::format_matrix(g.values, !g.symbolic);
      }
      std::optional<Matrix<double>> residual;
      if (o.residual) {
        detail::require(!point.empty(), "--residual needs --point");
        residual = inverse_residual(chart, o.order, point, mode, nopt);
      }
      if (o.json) {
        json j = to_json(rec);
        if (residual) {
          json rows = json::array();
          for (std::size_t r = 0; r < residual->rows(); ++r) {
            json row = json::array();
            for (std::size_t c = 0; c < residual->cols(); ++c) row.push_back((*residual)(r, c));
            rows.push_back(row);
          }
          j["inverse_residual"] = rows;
        }
        out << j.dump() << "\n";
      } else {
        out << text << "\n";
        out << "# " << rec.kind << " chart=" << chart.name() << " nu=" << format_number(o.order, kDigits)
            << " m=" << whole_ceiling(o.order) << " mode=" << (J.symbolic ? "symbolic" : "numeric");
        if (!point.empty()) out << " point=" << detail::join(point);
        out << "\n";
        if (J.symbolic && !point.empty()) {
          out << "# closed form: "
              << (jac->parsed() ? detail::format_matrix(J.exprs, chart.source())
                                : detail::format_matrix(metric_from_jacobian(J).exprs, chart.source()))
              << "\n";
        }
        if (residual)
          out << "# inverse residual (diagnostic): " << detail::format_matrix(*residual, !J.symbolic) << "\n";
      }
      return kOk;
    }

    if (oracle->parsed()) {
      detail::require(o.h > 0.0, "--h must be > 0");
      detail::require(o.levels >= 1 && o.levels <= 5, "--levels must be in [1, 5]");
      detail::require(std::isfinite(o.order), "--order must be finite");
      const Context ctx = detail::make_context(o.coords, o.origin, o.input);
      const Index var = ctx.require(o.var);
      const auto point = detail::numbers(o.point, "--point");
      detail::require(point.size() == ctx.size(), "--point needs " + std::to_string(ctx.size()) + " components");
      const Expr e = parse_expr(o.input, ctx);
      const MultiFunction f = [&](std::span<const double> p) { return eval(e, ctx, p); };
      double value = 0.0;
      double estimate = 0.0;
      bool warning = false;
      if (o.levels == 1) {
        value = gl_partial(f, var, o.order, point, ctx.origin(var), o.h);
      } else {
        const auto r = richardson_partial(f, var, o.order, point, ctx.origin(var), o.h, o.levels);
        value = r.value;
        estimate = r.error_estimate;
        warning = r.warning;
      }
      std::optional<double> symbolic;
      try {
        symbolic = eval(rl_deriv(e, var, o.order), ctx, point);
      } catch (const DomainError&) {
      }
      if (o.json) {
        json j{{"value", value}, {"error_estimate", estimate}, {"warning", warning}, {"h", o.h}, {"levels", o.levels}};
        if (symbolic) j["symbolic"] = *symbolic;
        out << j.dump() << "\n";
      } else {
        out << "numeric:  " << format_number(value, kDigits);
        if (o.levels > 1) out << " +/- " << format_number(estimate, 3);
        out << (warning ? "  (warning: extrapolation not converging)" : "") << "\n";
        if (symbolic) out << "symbolic: " << format_number(*symbolic, kDigits) << "\n";
      }
      return kOk;
    }

    if (verify->parsed()) {
      auto checks = verification_checks();
      if (!o.only.empty()) {
        std::erase_if(checks, [&](const Check& c) { return c.name != o.only; });
        detail::require(!checks.empty(), "--only: no check named '" + o.only + "'");
      }
      std::vector<CheckResult> results;
      for (const auto& c : checks) {
        CheckResult r;
        try {
          r = c.run();
        } catch (const std::exception& e) {
          r.computed = std::string("error: ") + e.what();
          r.passed = false;
        }
        r.name = c.name;
        r.description = c.description;
        results.push_back(std::move(r));
      }
      const auto passed = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.passed; });
      const bool all = passed == static_cast<long>(results.size());
      if (o.json) {
        json arr = json::array();
        for (const auto& r : results)
          arr.push_back({{"name", r.name},
                         {"description", r.description},
                         {"expected", r.expected},
                         {"computed", r.computed},
                         {"passed", r.passed}});
        out << json{{"checks", arr}, {"passed", passed}, {"total", results.size()}, {"ok", all}}.dump() << "\n";
      } else {
        for (const auto& r : results) {
          out << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.description << "\n";
          out << "       expected " << r.expected << "\n";
          out << "       computed " << r.computed << "\n";
        }
        out << passed << "/" << results.size() << " checks passed\n";
        if (!all) {
          out << "\nfailed:\n";
          for (const auto& r : results)
            if (!r.passed) out << "  " << r.name << "  expected " << r.expected << "  computed " << r.computed << "\n";
        }
      }
      return all ? kOk : kFailed;
    }
  } catch (const ParseError& e) {
    err << "frac: parse error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    err << "frac: domain error: " << e.what() << "\n";
    return kDomain;
  } catch (const UnsupportedError& e) {
    err << "frac: unsupported: " << e.what() << "\n";
    return kUnsupported;
  } catch (const VerificationError& e) {
    err << "frac: internal verification failure: " << e.what() << "\n";
    return kFailed;
  } catch (const std::invalid_argument& e) {
    err << "frac: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "frac: error: " << e.what() << "\n";
    return kFailed;
  }
  return kUsage;
}

}  // namespace fracforms::cli
