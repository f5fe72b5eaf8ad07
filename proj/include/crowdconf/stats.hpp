#pragma once

// Normal quantiles and Wilson score intervals for binomial proportions.

#include <cmath>
#include <string>

#include "crowdconf/core.hpp"

namespace crowdconf {

// Inverse standard normal CDF, Acklam's rational approximation
// (relative error below 1.2e-9 over the whole open interval).
inline double inv_norm_quantile(double t) {
  if (!(t > 0.0 && t < 1.0)) throw DomainError("normal quantile needs 0 < t < 1, got " + std::to_string(t));

  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double low = 0.02425;
  constexpr double high = 1.0 - low;

  if (t < low) {
    double q = std::sqrt(-2.0 * std::log(t));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (t > high) {
    double q = std::sqrt(-2.0 * std::log1p(-t));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (t == 0.5) return 0.0;
  double q = t - 0.5;
  double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Quantile magnitude for a two-sided interval at confidence c.
inline double z_for_confidence(double c) {
  if (!(c > 0.0 && c < 1.0)) throw DomainError("confidence must lie in (0, 1), got " + std::to_string(c));
  return std::fabs(inv_norm_quantile((1.0 - c) / 2.0));
}

struct WilsonParams {
  double p_hat = 0.0;
  double c = 0.0;
  std::size_t n = 0;
  double z = 0.0;

  static WilsonParams make(double p_hat, double c, std::size_t n) {
    if (!(p_hat >= 0.0 && p_hat <= 1.0)) throw DomainError("proportion must lie in [0, 1]");
    if (n == 0) throw DomainError("interval needs at least one trial");
    return {p_hat, c, n, z_for_confidence(c)};
  }
};

// Wilson score interval. Endpoints stay inside [0, 1]; the estimate is the
// midpoint of the endpoints, not p_hat.
inline Interval wilson_interval(double p_hat, double c, std::size_t n) {
  const auto w = WilsonParams::make(p_hat, c, n);
  const double nn = static_cast<double>(n);
  const double z2n = w.z * w.z / nn;
  const double denom = 1.0 + z2n;
  const double center = (p_hat + z2n / 2.0) / denom;
  const double half = w.z * std::sqrt(p_hat * (1.0 - p_hat) / nn + z2n / (4.0 * nn)) / denom;
  double lo = std::max(0.0, center - half);
  double hi = std::min(1.0, center + half);
  if (p_hat == 0.0) lo = 0.0;
  if (p_hat == 1.0) hi = 1.0;
  return {(lo + hi) / 2.0, lo, hi, c};
}

// Large-n normal approximation: p_hat +- z sqrt(p_hat (1 - p_hat) / n).
// Endpoints are not clamped.
inline Interval wilson_interval_approx(double p_hat, double c, std::size_t n) {
  const auto w = WilsonParams::make(p_hat, c, n);
  const double half = w.z * std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(n));
  return {p_hat, p_hat - half, p_hat + half, c};
}

}  // namespace crowdconf
