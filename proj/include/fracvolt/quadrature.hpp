#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/beta.hpp>

#include "fracvolt/grid.hpp"

namespace fracvolt::quad {

/// Nodes and weights of an m-point rule on [0, 1].
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }
};

/**
 * Gauss-Jacobi rule on [0, 1] for the weight x^beta, beta > -1
 * (Golub-Welsch on the Jacobi matrix of P^(0, beta)).
 *
 * Exact for x^beta * p(x) with deg p <= 2m - 1.
 */
inline Rule gauss_jacobi(std::size_t m, double beta) {
  if (m < 1) throw std::invalid_argument("gauss_jacobi: need at least one node");
  if (!(beta > -1.0)) throw std::domain_error("gauss_jacobi: weight exponent must exceed -1");

  const double ab = beta;  // alpha = 0 on the (1 - x) side
  Eigen::VectorXd diag(m);
  Eigen::VectorXd sub(m > 1 ? m - 1 : 1);
  diag(0) = beta / (ab + 2.0);
  for (std::size_t k = 1; k < m; ++k) {
    const double kk = static_cast<double>(k);
    const double s = 2.0 * kk + ab;
    diag(static_cast<Eigen::Index>(k)) = (beta * beta) / (s * (s + 2.0));
    const double num = 4.0 * kk * kk * (kk + beta) * (kk + ab);
    const double den = s * s * (s + 1.0) * (s - 1.0);
    sub(static_cast<Eigen::Index>(k - 1)) = std::sqrt(num / den);
  }

  Rule rule;
  rule.nodes.resize(m);
  rule.weights.resize(m);
  // Total mass of (1 + x)^beta on [-1, 1] is 2^(beta+1)/(beta+1); mapped to [0, 1] it is 1/(beta+1).
  const double mass = 1.0 / (beta + 1.0);
  if (m == 1) {
    rule.nodes[0] = 0.5 * (diag(0) + 1.0);
    rule.weights[0] = mass;
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  for (std::size_t i = 0; i < m; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double v0 = solver.eigenvectors()(0, ii);
    rule.nodes[i] = 0.5 * (solver.eigenvalues()(ii) + 1.0);
    rule.weights[i] = mass * v0 * v0;
  }
  return rule;
}

inline Rule gauss_legendre(std::size_t m) { return gauss_jacobi(m, 0.0); }

/**
 * Product-integration ("fractional trapezoid") weights for
 *   (1/Gamma(alpha)) * int_0^{t_j} (t_j - y)^{alpha-1} f(y) dy
 * with f replaced by its piecewise-linear interpolant on a uniform grid.
 * The kernel moments against each hat function are exact.
 *
 * weight(j, k) multiplies f_k in the value at node j; all weights are >= 0.
 */
class FractionalTrapezoid {
 public:
  FractionalTrapezoid(double alpha, double step, std::size_t steps) : alpha_(alpha), steps_(steps) {
    if (!(alpha > 0.0)) throw std::domain_error("FractionalTrapezoid: order must be > 0");
    scale_ = std::pow(step, alpha) / std::tgamma(alpha + 2.0);
    pow_a1_.resize(steps + 2);
    pow_a_.resize(steps + 2);
    for (std::size_t m = 0; m < pow_a1_.size(); ++m) {
      const double mm = static_cast<double>(m);
      pow_a1_[m] = std::pow(mm, alpha + 1.0);
      pow_a_[m] = std::pow(mm, alpha);
    }
  }

  double weight(std::size_t j, std::size_t k) const {
    if (k > j || j == 0) return 0.0;
    if (k == j) return scale_;
    if (k == 0) {
      const double jj = static_cast<double>(j);
      return scale_ * (pow_a1_[j - 1] - (jj - alpha_ - 1.0) * pow_a_[j]);
    }
    const std::size_t d = j - k;
    return scale_ * (pow_a1_[d + 1] - 2.0 * pow_a1_[d] + pow_a1_[d - 1]);
  }

  /// Weight for lag d = j - k >= 1 with k >= 1 (depends on the lag only).
  double lag_weight(std::size_t d) const { return scale_ * (pow_a1_[d + 1] - 2.0 * pow_a1_[d] + pow_a1_[d - 1]); }

  double diagonal() const noexcept { return scale_; }
  double order() const noexcept { return alpha_; }
  std::size_t steps() const noexcept { return steps_; }

  /// Applies the rule at every node; node 0 is 0.
  std::vector<double> apply(std::span<const double> f) const {
    if (f.size() != steps_ + 1) throw std::invalid_argument("FractionalTrapezoid::apply: size mismatch");
    std::vector<double> out(f.size(), 0.0);
    for (std::size_t j = 1; j <= steps_; ++j) out[j] = apply_at(f, j);
    return out;
  }

  double apply_at(std::span<const double> f, std::size_t j) const {
    if (j == 0) return 0.0;
    double acc = weight(j, 0) * f[0] + scale_ * f[j];
    for (std::size_t k = 1; k < j; ++k) acc += lag_weight(j - k) * f[k];
    return acc;
  }

 private:
  double alpha_;
  std::size_t steps_;
  double scale_;
  std::vector<double> pow_a1_;
  std::vector<double> pow_a_;
};

/**
 * Node weights w_j such that sum_j w_j chi(s_j) integrates
 *   int_0^t s^(a-1) (t - s)^(b-1) chi(s) ds
 * exactly for piecewise-linear chi on the uniform grid of [0, t].
 * Cell moments come from the incomplete beta function; the upper tail is
 * used on the right half so that small cells near t keep full precision.
 */
inline std::vector<double> beta_weight_rule(const TimeGrid& grid, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("beta_weight_rule: exponents must exceed -1");
  const double t = grid.horizon();
  const double h = grid.step();
  const std::size_t n = grid.steps();
  const double scale0 = std::pow(t, a + b - 1.0);
  const double scale1 = std::pow(t, a + b);

  auto lower0 = [&](double x) { return scale0 * boost::math::beta(a, b, x); };
  auto lower1 = [&](double x) { return scale1 * boost::math::beta(a + 1.0, b, x); };
  auto upper0 = [&](double x) { return scale0 * boost::math::beta(b, a, 1.0 - x); };
  auto upper1 = [&](double x) { return scale1 * boost::math::beta(b, a + 1.0, 1.0 - x); };

  std::vector<double> w(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double x0 = static_cast<double>(k) / static_cast<double>(n);
    const double x1 = static_cast<double>(k + 1) / static_cast<double>(n);
    double m0;
    double m1;
    if (x1 <= 0.5) {
      m0 = lower0(x1) - lower0(x0);
      m1 = lower1(x1) - lower1(x0);
    } else {
      m0 = upper0(x0) - upper0(x1);
      m1 = upper1(x0) - upper1(x1);
    }
    // m1 currently holds int s rho; shift to int (s - s_k) rho.
    const double first = m1 - grid.node(k) * m0;
    w[k] += m0 - first / h;
    w[k + 1] += first / h;
  }
  return w;
}

/// Plain trapezoid on a uniform grid.
inline double trapezoid(std::span<const double> f, double step) {
  if (f.size() < 2) return 0.0;
  double acc = 0.5 * (f.front() + f.back());
  for (std::size_t j = 1; j + 1 < f.size(); ++j) acc += f[j];
  return acc * step;
}

}  // namespace fracvolt::quad
