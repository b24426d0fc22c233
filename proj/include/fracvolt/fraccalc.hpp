#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fracvolt/fbm.hpp"
#include "fracvolt/grid.hpp"
#include "fracvolt/quadrature.hpp"

namespace fracvolt {

enum class Side { left, right };

/// Accuracy notes produced by the derivative operators.
struct FracDiagnostics {
  /// Endpoint values came from one-sided differences.
  bool one_sided_endpoints = false;
  /// The leading differences at an endpoint grow like a singular function;
  /// values near that endpoint should not be trusted.
  bool endpoint_singularity = false;
};

namespace detail {

inline std::vector<double> differentiate(const std::vector<double>& g, double h) {
  const std::size_t n = g.size();
  std::vector<double> d(n, 0.0);
  if (n == 2) {
    d[0] = d[1] = (g[1] - g[0]) / h;
    return d;
  }
  for (std::size_t j = 1; j + 1 < n; ++j) d[j] = (g[j + 1] - g[j - 1]) / (2.0 * h);
  d[0] = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h);
  d[n - 1] = (3.0 * g[n - 1] - 4.0 * g[n - 2] + g[n - 3]) / (2.0 * h);
  return d;
}

// Crude test for a singular derivative at the left end: successive
// differences of a smooth function are comparable, those of x^p (p < 1) are not.
inline bool looks_singular_at_start(const std::vector<double>& f) {
  if (f.size() < 3) return false;
  const double d1 = std::abs(f[1] - f[0]);
  const double d2 = std::abs(f[2] - f[1]);
  return d1 > 4.0 * d2 + 1e-14 * (std::abs(f[0]) + std::abs(f[1]));
}

inline std::vector<double> reversed(const std::vector<double>& v) { return {v.rbegin(), v.rend()}; }

}  // namespace detail

/// Left Riemann-Liouville integral of order alpha > 0 at every node (node 0 is 0).
inline SampledFunction frac_integral_left(const SampledFunction& f, double alpha) {
  if (!(alpha > 0.0)) throw std::domain_error("frac_integral_left: order must be > 0");
  quad::FractionalTrapezoid rule(alpha, f.grid.step(), f.grid.steps());
  return SampledFunction(f.grid, rule.apply(f.values));
}

/// Right Riemann-Liouville integral; node t_n is 0.
inline SampledFunction frac_integral_right(const SampledFunction& f, double alpha) {
  if (!(alpha > 0.0)) throw std::domain_error("frac_integral_right: order must be > 0");
  return frac_integral_left(f.reversed(), alpha).reversed();
}

/**
 * Left Riemann-Liouville derivative: integrate to order ceil(alpha) - alpha,
 * then take ceil(alpha) finite differences (central inside, second-order
 * one-sided at the ends).
 */
inline SampledFunction frac_derivative_left(const SampledFunction& f, double alpha, FracDiagnostics* diag = nullptr) {
  if (!(alpha > 0.0)) throw std::domain_error("frac_derivative_left: order must be > 0");
  const double order = std::ceil(alpha);
  const auto times = static_cast<int>(order);
  std::vector<double> g =
      order - alpha > 0.0 ? frac_integral_left(f, order - alpha).values : f.values;
  for (int i = 0; i < times; ++i) g = detail::differentiate(g, f.grid.step());
  if (diag) {
    diag->one_sided_endpoints = true;
    diag->endpoint_singularity = alpha < 1.0 && (detail::looks_singular_at_start(f.values) ||
                                                 detail::looks_singular_at_start(detail::reversed(f.values)));
  }
  return SampledFunction(f.grid, std::move(g));
}

/// Right derivative, (-d/dx)^m I_{b-}^{m - alpha}; the mirror image of the left one.
inline SampledFunction frac_derivative_right(const SampledFunction& f, double alpha, FracDiagnostics* diag = nullptr) {
  if (!(alpha > 0.0)) throw std::domain_error("frac_derivative_right: order must be > 0");
  return frac_derivative_left(f.reversed(), alpha, diag).reversed();
}

/// Signed-order dispatch: alpha > 0 differentiates, alpha < 0 integrates, 0 is the identity.
inline SampledFunction frac_op(const SampledFunction& f, Side side, double alpha, FracDiagnostics* diag = nullptr) {
  if (!std::isfinite(alpha)) throw std::domain_error("frac_op: order must be finite");
  if (alpha == 0.0) return f;
  if (alpha > 0.0) {
    return side == Side::left ? frac_derivative_left(f, alpha, diag) : frac_derivative_right(f, alpha, diag);
  }
  return side == Side::left ? frac_integral_left(f, -alpha) : frac_integral_right(f, -alpha);
}

/// Componentwise application to a vector-valued function (one SampledFunction per coordinate).
inline std::vector<SampledFunction> frac_op_vector(const std::vector<SampledFunction>& components, Side side,
                                                   double alpha) {
  std::vector<SampledFunction> out;
  out.reserve(components.size());
  for (const auto& c : components) {
    if (!components.empty()) require_same_grid(c.grid, components.front().grid, "frac_op_vector");
    out.push_back(frac_op(c, side, alpha));
  }
  return out;
}

/**
 * The map s -> (D_{t-}^{1/2-H} [u^{H-1/2} f(u)])(s) on [0, t].
 *
 * f is replaced by its piecewise-linear interpolant, but the weight
 * u^{H-1/2} and the Riemann-Liouville kernel are integrated exactly per
 * cell (Gauss-Jacobi on the cell touching s, Gauss-Legendre elsewhere).
 * For H < 1/2 the derivative is taken analytically after integrating by
 * parts, so no finite differences enter.
 *
 * values: the kernel at the nodes; NaN where it is unbounded (s = 0 and
 * s = t for H < 1/2).
 * regularized: the kernel divided by s^p (t - s)^(H - 1/2), with p = 0 for
 * H >= 1/2 and p = 2H - 1 for H < 1/2; finite everywhere, endpoint values
 * are the analytic limits.
 */
struct IsometryKernel {
  TimeGrid grid;
  HurstParameter hurst;
  std::vector<double> values;
  std::vector<double> regularized;

  /// Exponent of s in the factorisation (0 or 2H - 1).
  double start_exponent() const { return hurst.value() < 0.5 ? 2.0 * hurst.value() - 1.0 : 0.0; }
  /// Exponent of (t - s) in the factorisation.
  double end_exponent() const { return hurst.value() - 0.5; }
};

namespace detail {

inline constexpr std::size_t kKernelNodes = 6;

// Piecewise-linear interpolant of f at y = s_k + h x on cell k.
inline double cell_value(const std::vector<double>& f, std::size_t k, double x) {
  return f[k] + (f[k + 1] - f[k]) * x;
}

inline std::vector<double> kernel_above_half(const SampledFunction& f, double e) {
  const std::size_t n = f.grid.steps();
  const double h = f.grid.step();
  const auto& fv = f.values;
  const quad::Rule gl = quad::gauss_legendre(kKernelNodes);
  const quad::Rule adj = quad::gauss_jacobi(kKernelNodes, e - 1.0);
  const quad::Rule origin = quad::gauss_jacobi(kKernelNodes, 2.0 * e - 1.0);
  const std::size_t m = gl.size();

  // weighted[k*m + q] = w_q y^e f(y) at the Legendre points of cell k.
  std::vector<double> weighted(n * m);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t q = 0; q < m; ++q) {
      const double y = (static_cast<double>(k) + gl.nodes[q]) * h;
      weighted[k * m + q] = gl.weights[q] * std::pow(y, e) * cell_value(fv, k, gl.nodes[q]);
    }
  // lag[d*m + q] = ((d + x_q) h)^(e-1)
  std::vector<double> lag(n * m);
  for (std::size_t d = 1; d < n; ++d)
    for (std::size_t q = 0; q < m; ++q) lag[d * m + q] = std::pow((static_cast<double>(d) + gl.nodes[q]) * h, e - 1.0);

  const double inv_gamma = 1.0 / std::tgamma(e);
  std::vector<double> g(n + 1, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double near = 0.0;
    if (j == 0) {
      for (std::size_t q = 0; q < m; ++q) near += origin.weights[q] * cell_value(fv, 0, origin.nodes[q]);
      near *= std::pow(h, 2.0 * e);
    } else {
      for (std::size_t q = 0; q < m; ++q) {
        const double y = (static_cast<double>(j) + adj.nodes[q]) * h;
        near += adj.weights[q] * std::pow(y, e) * cell_value(fv, j, adj.nodes[q]);
      }
      near *= std::pow(h, e);
    }
    double far = 0.0;
    for (std::size_t k = j + 1; k < n; ++k) {
      const double* wk = &weighted[k * m];
      const double* lk = &lag[(k - j) * m];
      for (std::size_t q = 0; q < m; ++q) far += wk[q] * lk[q];
    }
    g[j] = inv_gamma * (near + h * far);
  }
  g[n] = 0.0;
  return g;
}

inline std::vector<double> kernel_below_half(const SampledFunction& f, double e) {
  const double gam = -e;
  const std::size_t n = f.grid.steps();
  const double h = f.grid.step();
  const double t = f.grid.horizon();
  const auto& fv = f.values;
  const quad::Rule gl = quad::gauss_legendre(kKernelNodes);
  const quad::Rule adj = quad::gauss_jacobi(kKernelNodes, -gam);
  const std::size_t m = gl.size();

  // d/dy [y^e f(y)] on cell k, k >= 1.
  auto weight_derivative = [&](std::size_t k, double x) {
    const double y = (static_cast<double>(k) + x) * h;
    const double slope = (fv[k + 1] - fv[k]) / h;
    return e * std::pow(y, e - 1.0) * cell_value(fv, k, x) + std::pow(y, e) * slope;
  };

  std::vector<double> deriv(n * m, 0.0);
  for (std::size_t k = 1; k < n; ++k)
    for (std::size_t q = 0; q < m; ++q) deriv[k * m + q] = gl.weights[q] * weight_derivative(k, gl.nodes[q]);
  std::vector<double> lag(n * m);
  for (std::size_t d = 1; d < n; ++d)
    for (std::size_t q = 0; q < m; ++q) lag[d * m + q] = std::pow((static_cast<double>(d) + gl.nodes[q]) * h, -gam);

  const double w_end = std::pow(t, e) * fv[n];
  const double inv_gamma = 1.0 / std::tgamma(1.0 - gam);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> g(n + 1, nan);
  for (std::size_t j = 1; j < n; ++j) {
    double near = 0.0;
    for (std::size_t q = 0; q < m; ++q) near += adj.weights[q] * weight_derivative(j, adj.nodes[q]);
    near *= std::pow(h, 1.0 - gam);
    double far = 0.0;
    for (std::size_t k = j + 1; k < n; ++k) {
      const double* dk = &deriv[k * m];
      const double* lk = &lag[(k - j) * m];
      for (std::size_t q = 0; q < m; ++q) far += dk[q] * lk[q];
    }
    const double s = f.grid.node(j);
    g[j] = inv_gamma * (w_end * std::pow(t - s, -gam) - (near + h * far));
  }
  return g;
}

}  // namespace detail

inline IsometryKernel isometry_kernel(const SampledFunction& f, HurstParameter hurst) {
  const double H = hurst.value();
  const double e = H - 0.5;
  const TimeGrid& grid = f.grid;
  const std::size_t n = grid.steps();
  const double t = grid.horizon();

  if (hurst.is_brownian()) return IsometryKernel{grid, hurst, f.values, f.values};

  IsometryKernel out{grid, hurst, {}, std::vector<double>(n + 1)};
  if (e > 0.0) {
    out.values = detail::kernel_above_half(f, e);
    for (std::size_t j = 0; j < n; ++j) out.regularized[j] = std::pow(t - grid.node(j), -e) * out.values[j];
    out.regularized[n] = std::pow(t, e) * f.values[n] / std::tgamma(1.0 + e);
  } else {
    const double gam = -e;
    out.values = detail::kernel_below_half(f, e);
    for (std::size_t j = 1; j < n; ++j) {
      const double s = grid.node(j);
      out.regularized[j] = std::pow(s, -2.0 * e) * std::pow(t - s, -e) * out.values[j];
    }
    out.regularized[0] = std::pow(t, -e) * f.values[0] * std::tgamma(2.0 * gam) / std::tgamma(gam);
    out.regularized[n] = std::pow(t, -e) * f.values[n] / std::tgamma(1.0 + e);
  }
  return out;
}

/// Kernel on [0, t] for a function sampled on a longer grid; t must be a node.
inline IsometryKernel isometry_kernel(const SampledFunction& f, HurstParameter hurst, double t) {
  const std::size_t m = f.grid.index_of(t);
  if (m == f.grid.steps()) return isometry_kernel(f, hurst);
  std::vector<double> head(f.values.begin(), f.values.begin() + static_cast<std::ptrdiff_t>(m + 1));
  return isometry_kernel(SampledFunction(f.grid.prefix(m), std::move(head)), hurst);
}

}  // namespace fracvolt
