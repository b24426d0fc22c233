#pragma once

#include <cmath>
#include <stdexcept>

#include "fracvolt/fbm.hpp"

namespace fracvolt {

/**
 * E[ int_0^t s^p db^H(s)  int_0^t s^q db^H(s) ], p, q >= 0.
 *
 * For H != 1/2:  H (2H - 1) [B(q + 1, 2H - 1) + B(p + 1, 2H - 1)] t^(p+q+2H) / (p + q + 2H),
 * with B continued through Gamma for 2H - 1 < 0. For H = 1/2: t^(p+q+1) / (p + q + 1).
 */
inline double monomial_covariance(double p, double q, HurstParameter hurst, double t) {
  if (p < 0.0 || q < 0.0) throw std::domain_error("monomial_covariance: exponents must be >= 0");
  const double H = hurst.value();
  const double total = p + q + 2.0 * H;
  if (hurst.is_brownian()) return std::pow(t, total) / total;
  const double e = 2.0 * H - 1.0;
  auto beta = [e](double x) { return std::tgamma(x) * std::tgamma(e) / std::tgamma(x + e); };
  return H * e * (beta(q + 1.0) + beta(p + 1.0)) * std::pow(t, total) / total;
}

/// Variance (1 - e^(2 mu t)) / (-2 mu) of the Brownian-driven scalar Ornstein-Uhlenbeck convolution, mu < 0.
inline double ou_variance(double mu, double t) {
  if (mu == 0.0) return t;
  return std::expm1(2.0 * mu * t) / (2.0 * mu);
}

}  // namespace fracvolt
