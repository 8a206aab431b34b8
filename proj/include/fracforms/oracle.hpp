#pragma once

// Grunwald-Letnikov numeric differintegration of black-box functions. This
// path shares nothing with the symbolic power rule beyond gen_binomial's
// recurrence, so it serves as an independent oracle for it.

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "special_functions.hpp"

namespace fracforms {

using ScalarFunction = std::function<double(double)>;
using MultiFunction = std::function<double(std::span<const double>)>;

inline constexpr double kDefaultStep = 1e-4;
inline constexpr int kDefaultLevels = 3;

namespace detail {

/// Neumaier-compensated accumulator; the result depends only on summation order.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline long long gl_steps(double x, double a, double h) {
  if (!(h > 0.0)) throw DomainError("gl_deriv: step must be positive");
  if (!(x > a)) throw DomainError("gl_deriv: evaluation point must lie above the initial point");
  return std::llround((x - a) / h);
}

inline double gl_sum(const ScalarFunction& f, double q, double x, double a, long long n) {
  const double h = (x - a) / static_cast<double>(n);
  CompensatedSum acc;
  double w = 1.0;
  for (long long k = 0; k <= n; ++k) {
    if (k > 0) {
      w *= (static_cast<double>(k) - q - 1.0) / static_cast<double>(k);
      if (w == 0.0) break;  // whole q: the stencil has ended
    }
    const double t = k == n ? a : x - static_cast<double>(k) * h;
    double v;
    try {
      v = f(t);
    } catch (const DomainError&) {
      if (k == n) continue;  // integrable singularity at the initial point
      throw;
    }
    if (!std::isfinite(v)) {
      if (k == n) continue;
      throw DomainError("gl_deriv: function undefined at sample node t=" + std::to_string(t));
    }
    acc.add(w * v);
  }
  return acc.value() * std::pow(h, -q);
}

}  // namespace detail

/// Grunwald-Letnikov approximation
///   h^{-q} sum_{k=0..N} (-1)^k binom(q, k) f(x - k h),  N = (x - a)/h >= 10.
/// The step is adjusted so that N is an integer and the last node is a.
/// A non-finite value at the node t = a is dropped (integrable endpoint
/// singularity); anywhere else it is a DomainError.
inline double gl_deriv(const ScalarFunction& f, double q, double x, double a, double h = kDefaultStep) {
  const long long n = detail::gl_steps(x, a, h);
  if (n < 10) throw DomainError("gl_deriv: fewer than 10 steps between initial point and x");
  return detail::gl_sum(f, q, x, a, n);
}

struct RichardsonResult {
  double value = 0.0;
  double error_estimate = 0.0;
  /// Diagonal extrapolants disagree by more than 10x the error estimate.
  bool warning = false;
  std::vector<double> raw;  ///< GL values at h0, h0/2, ...
};

/// Richardson extrapolation of gl_deriv over h0, h0/2, ..., assuming an
/// error expansion in whole powers of h.
inline RichardsonResult richardson(const ScalarFunction& f, double q, double x, double a,
                                   double h0 = kDefaultStep, int levels = kDefaultLevels) {
  if (levels < 2 || levels > 5) throw std::invalid_argument("richardson: levels must be in [2, 5]");
  const long long n0 = detail::gl_steps(x, a, h0);
  if (n0 < 10) throw DomainError("richardson: fewer than 10 steps between initial point and x");
  RichardsonResult res;
  std::vector<std::vector<double>> table(levels);
  for (int i = 0; i < levels; ++i) {
    const double v = detail::gl_sum(f, q, x, a, n0 << i);
    res.raw.push_back(v);
    table[i].push_back(v);
    for (int j = 1; j <= i; ++j) {
      const double factor = std::ldexp(1.0, j) - 1.0;
      table[i].push_back(table[i][j - 1] + (table[i][j - 1] - table[i - 1][j - 1]) / factor);
    }
  }
  const int last = levels - 1;
  res.value = table[last][last];
  res.error_estimate = std::abs(table[last][last] - table[last][last - 1]);
  const double diag_gap = std::abs(table[last][last] - table[last - 1][last - 1]);
  res.warning = diag_gap > 10.0 * res.error_estimate && diag_gap > 1e-14 * std::abs(res.value);
  return res;
}

/// One partial differintegral along `coord` with the other coordinates frozen.
inline double gl_partial(const MultiFunction& f, std::size_t coord, double q, std::span<const double> point,
                         double a, double h = kDefaultStep) {
  if (coord >= point.size()) throw std::invalid_argument("gl_partial: coordinate index out of range");
  std::vector<double> p(point.begin(), point.end());
  auto line = [&](double t) {
    p[coord] = t;
    return f(p);
  };
  return gl_deriv(line, q, point[coord], a, h);
}

inline RichardsonResult richardson_partial(const MultiFunction& f, std::size_t coord, double q,
                                           std::span<const double> point, double a, double h0 = kDefaultStep,
                                           int levels = kDefaultLevels) {
  if (coord >= point.size()) throw std::invalid_argument("richardson_partial: coordinate index out of range");
  std::vector<double> p(point.begin(), point.end());
  auto line = [&](double t) {
    p[coord] = t;
    return f(p);
  };
  return richardson(line, q, point[coord], a, h0, levels);
}

}  // namespace fracforms
