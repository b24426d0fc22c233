#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "fracvolt/grid.hpp"

namespace fracvolt {

/// |z| up to which the power series is used on the negative axis.
inline constexpr double kMittagLefflerSeriesRadius = 5.0;

/// Largest ratio of peak series term to result accepted on the negative axis.
inline constexpr long double kMittagLefflerCancellation = 1e4L;

namespace detail {

// sum_m z^m / Gamma(alpha m + 1) in extended precision. Stops once the
// terms have started to decay and fall below 1e-17 of the partial sum.
// peak, if given, receives the largest term magnitude.
inline long double mittag_leffler_series(double alpha, double z, long double* peak = nullptr) {
  const long double zz = z;
  long double sum = 0.0L;
  long double previous = std::numeric_limits<long double>::infinity();
  for (int m = 0; m < 200000; ++m) {
    const long double term = std::pow(zz, m) / std::tgamma(static_cast<long double>(alpha) * m + 1.0L);
    if (std::isinf(term)) {
      throw std::overflow_error(detail::concat("mittag_leffler: series overflow at alpha=", alpha, ", z=", z));
    }
    sum += term;
    const long double mag = std::abs(term);
    if (peak != nullptr) *peak = std::max(*peak, mag);
    if (m > 2 && mag < previous && mag <= 1e-17L * std::abs(sum)) break;
    if (m > 2 && mag == 0.0L) break;
    previous = mag;
  }
  return sum;
}

// E_alpha(-x) for 0 < alpha < 1 and x > 0 from the completely monotone
// representation  E_alpha(-u^alpha) = int_0^inf e^{-r u} K(r) dr,
//   K(r) = sin(alpha pi) r^(alpha-1) / (pi (r^2alpha + 2 r^alpha cos(alpha pi) + 1)).
inline double mittag_leffler_negative_laplace(double alpha, double x) {
  const double u = std::pow(x, 1.0 / alpha);
  const double sn = std::sin(alpha * std::numbers::pi);
  const double cs = std::cos(alpha * std::numbers::pi);
  // Substitute r = v / u so the exponential decays on a unit scale.
  auto integrand = [&](double v) {
    if (v <= 0.0) return 0.0;
    const double r = v / u;
    const double ra = std::pow(r, alpha);
    return std::exp(-v) * sn * std::pow(r, alpha - 1.0) / (std::numbers::pi * (ra * ra + 2.0 * ra * cs + 1.0)) / u;
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate(integrand, 1e-14);
}

}  // namespace detail

/**
 * Mittag-Leffler function E_alpha(z) = sum_m z^m / Gamma(alpha m + 1), real z.
 *
 * - z > 0: power series in long double.
 * - -5 <= z <= 0: power series, unless its terms cancel by more than a
 *   factor 1e4 (small alpha); then alpha < 1 switches to the integral below.
 * - z < -5: alpha in (0, 1) uses the Laplace-type integral representation;
 *   alpha = 1 and alpha = 2 use exp(z) and cos(sqrt(-z)). Other alpha are
 *   rejected there.
 *
 * Throws std::overflow_error when the value exceeds the double range.
 */
inline double mittag_leffler(double alpha, double z) {
  if (!(alpha > 0.0)) throw std::domain_error("mittag_leffler: alpha must be > 0");
  if (!std::isfinite(z)) throw std::domain_error("mittag_leffler: z must be finite");

  if (z >= -kMittagLefflerSeriesRadius) {
    long double peak = 0.0L;
    const long double v = detail::mittag_leffler_series(alpha, z, &peak);
    if (std::abs(v) > static_cast<long double>(std::numeric_limits<double>::max())) {
      throw std::overflow_error(detail::concat("mittag_leffler: E_", alpha, "(", z, ") exceeds double range"));
    }
    if (z >= 0.0 || peak <= kMittagLefflerCancellation * std::abs(v)) return static_cast<double>(v);
  }
  if (alpha == 1.0) return std::exp(z);
  if (alpha == 2.0) return std::cos(std::sqrt(-z));
  if (alpha < 1.0) return detail::mittag_leffler_negative_laplace(alpha, -z);
  throw std::domain_error(detail::concat("mittag_leffler: alpha=", alpha, " unsupported at z=", z,
                                         " (series cancellation or z < -", kMittagLefflerSeriesRadius, ")"));
}

}  // namespace fracvolt
