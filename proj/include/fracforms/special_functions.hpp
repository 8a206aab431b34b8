#pragma once

#include <cmath>
#include <numbers>

#include "errors.hpp"

namespace fracforms {

/// Distance to the nearest non-positive integer below which rgamma is exactly zero.
inline constexpr double kPoleTolerance = 1e-9;
/// gamma() refuses arguments this close to a pole.
inline constexpr double kGammaPoleTolerance = 1e-12;

/// True when x lies within tol of an integer.
inline bool is_whole(double x, double tol = kPoleTolerance) {
  return std::abs(x - std::round(x)) <= tol;
}

/// True when x is within tol of 0, -1, -2, ...
inline bool is_gamma_pole(double x, double tol = kPoleTolerance) {
  return x < 0.5 && is_whole(x, tol);
}

/// Smallest whole number m with m >= q (for q > 0), snapping q to an
/// integer first when it is within kPoleTolerance of one.
inline int whole_ceiling(double q) {
  if (is_whole(q)) return static_cast<int>(std::round(q));
  return static_cast<int>(std::ceil(q));
}

/// Gamma function on the real line. Throws DomainError at the poles.
inline double gamma(double x) {
  if (is_gamma_pole(x, kGammaPoleTolerance))
    throw DomainError("gamma: pole at non-positive integer " + std::to_string(x));
  return std::tgamma(x);
}

/// Reciprocal gamma 1/Gamma(x); an entire function, exactly 0 at the poles.
inline double rgamma(double x) {
  if (is_gamma_pole(x)) return 0.0;
  const double g = std::tgamma(x);
  if (std::isfinite(g) && g != 0.0) return 1.0 / g;
  // Overflow for large positive x, underflow for large negative x.
  if (x > 0) return 0.0;
  // 1/Gamma(x) = Gamma(1-x) sin(pi x) / pi, evaluated in log space.
  const double s = std::sin(std::numbers::pi * x);
  const double mag = std::exp(std::lgamma(1.0 - x) - std::log(std::numbers::pi)) * std::abs(s);
  return std::copysign(mag, s);
}

/// Gamma(a) / Gamma(b), zero when b is a pole. Stays finite when both
/// gammas overflow on their own.
inline double gamma_ratio(double a, double b) {
  if (is_gamma_pole(b)) return 0.0;
  if (std::abs(a) < 150.0 && std::abs(b) < 150.0) return gamma(a) * rgamma(b);
  int sa = 0;
  int sb = 0;
  const double la = ::lgamma_r(a, &sa);
  const double lb = ::lgamma_r(b, &sb);
  return sa * sb * std::exp(la - lb);
}

/// Generalized binomial coefficient (q over j) = Gamma(q+1) / (j! Gamma(q-j+1)).
///
/// Evaluated as the falling factorial q(q-1)...(q-j+1)/j!, which agrees with
/// the gamma form wherever that is finite and also covers negative integer q.
/// Returns exactly 0 for whole q >= 0 and j > q.
inline double gen_binomial(double q, unsigned j) {
  if (is_whole(q) && q > -0.5 && static_cast<double>(j) > std::round(q)) return 0.0;
  double c = 1.0;
  for (unsigned i = 0; i < j; ++i) c *= (q - i) / (i + 1);
  return c;
}

}  // namespace fracforms
