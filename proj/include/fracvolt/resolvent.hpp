#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracvolt/grid.hpp"
#include "fracvolt/quadrature.hpp"

namespace fracvolt {

/**
 * Scalar Volterra kernel a(t).
 *
 *  power(alpha):  a(t) = t^(alpha-1) / Gamma(alpha), alpha > 0
 *  constant(c):   a(t) = c
 *  tabulated(f):  piecewise-linear through the samples of f
 */
class Kernel {
 public:
  enum class Kind { power, constant, tabulated };

  static Kernel power(double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw std::domain_error(detail::concat("power kernel needs alpha > 0, got ", alpha));
    }
    return Kernel(Kind::power, alpha, 1.0, std::nullopt);
  }
  static Kernel constant(double value = 1.0) {
    if (!std::isfinite(value)) throw std::domain_error("constant kernel must be finite");
    return Kernel(Kind::constant, 1.0, value, std::nullopt);
  }
  static Kernel tabulated(SampledFunction samples) {
    if (!samples.all_finite()) throw std::domain_error("tabulated kernel has non-finite samples");
    return Kernel(Kind::tabulated, 0.0, 1.0, std::move(samples));
  }

  Kind kind() const noexcept { return kind_; }
  double alpha() const noexcept { return alpha_; }
  double scale() const noexcept { return scale_; }
  const std::optional<SampledFunction>& samples() const noexcept { return samples_; }

  /// Power kernels with alpha >= 1 (and constants) are of locally bounded
  /// variation, so the resolvent is differentiable.
  bool differentiable() const noexcept {
    return kind_ == Kind::constant || (kind_ == Kind::power && alpha_ >= 1.0);
  }

  double operator()(double t) const {
    switch (kind_) {
      case Kind::power:
        return std::pow(t, alpha_ - 1.0) / std::tgamma(alpha_);
      case Kind::constant:
        return scale_;
      case Kind::tabulated:
        return samples_->at(t);
    }
    return 0.0;
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::power:
        return detail::concat("power(", alpha_, ")");
      case Kind::constant:
        return detail::concat("constant(", scale_, ")");
      case Kind::tabulated:
        return "tabulated";
    }
    return {};
  }

 private:
  Kernel(Kind kind, double alpha, double scale, std::optional<SampledFunction> samples)
      : kind_(kind), alpha_(alpha), scale_(scale), samples_(std::move(samples)) {}

  Kind kind_;
  double alpha_;
  double scale_;
  std::optional<SampledFunction> samples_;
};

/**
 * Kernel moments of the discrete convolution
 *   (a * x)(t_m) ~= sum_k weight(m, k) x_k,   x piecewise linear.
 *
 * For a power kernel with non-integer alpha the solution of the resolvent
 * equation carries terms t^(j alpha); on top of the product-integration
 * weights, starting weights on nodes 1..p make the rule exact for every
 * such exponent below 2 while keeping exactness for 1 and t. weight(m, k)
 * may then be nonzero for k up to max(m, starting_nodes()).
 */
class ConvolutionWeights {
 public:
  ConvolutionWeights(const Kernel& kernel, const TimeGrid& grid) : kernel_(kernel), grid_(grid) {
    switch (kernel.kind()) {
      case Kernel::Kind::power:
        fractional_.emplace(kernel.alpha(), grid.step(), grid.steps());
        setup_starting_weights();
        break;
      case Kernel::Kind::constant:
        fractional_.emplace(1.0, grid.step(), grid.steps());
        break;
      case Kernel::Kind::tabulated: {
        const auto& s = *kernel.samples();
        if (std::abs(s.grid.step() - grid.step()) > 1e-12 * grid.step() || s.grid.steps() < grid.steps()) {
          throw std::invalid_argument("tabulated kernel must share the solver step and cover the horizon");
        }
        lags_.assign(s.values.begin(), s.values.begin() + static_cast<std::ptrdiff_t>(grid.steps() + 1));
        break;
      }
    }
  }

  /// Largest node index carrying a correction weight (0 if none).
  std::size_t starting_nodes() const noexcept { return exponents_.empty() ? 0 : exponents_.size() - 1; }
  const std::vector<double>& starting_exponents() const noexcept { return exponents_; }

  /// Largest k with a possibly nonzero weight(m, k).
  std::size_t last_index(std::size_t m) const noexcept { return m == 0 ? 0 : std::max(m, starting_nodes()); }

  double weight(std::size_t m, std::size_t k) const {
    if (m == 0 || k > last_index(m)) return 0.0;
    double w = k <= m ? base_weight(m, k) : 0.0;
    if (!exponents_.empty() && k <= starting_nodes()) {
      w += correction_(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
    }
    return w;
  }

  /// sum_k weight(m, k) x_k
  double apply_at(std::span<const double> x, std::size_t m) const {
    double acc = 0.0;
    const std::size_t last = std::min(last_index(m), x.size() - 1);
    for (std::size_t k = 0; k <= last; ++k) acc += weight(m, k) * x[k];
    return acc;
  }

  const TimeGrid& grid() const noexcept { return grid_; }

 private:
  double base_weight(std::size_t m, std::size_t k) const {
    if (fractional_) {
      const double w = fractional_->weight(m, k);
      return kernel_.kind() == Kernel::Kind::constant ? kernel_.scale() * w : w;
    }
    // Product of two linear functions on each cell adjacent to node k.
    const double h = grid_.step();
    double w = 0.0;
    if (k < m) w += h * (lags_[m - k] / 3.0 + lags_[m - k - 1] / 6.0);
    if (k > 0) w += h * (lags_[m - k + 1] / 6.0 + lags_[m - k] / 3.0);
    return w;
  }

  void setup_starting_weights() {
    const double alpha = kernel_.alpha();
    // The base rule is exact for 0 and 1; keep it so.
    exponents_ = {0.0, 1.0};
    for (int j = 1; j * alpha < 2.0 - 1e-12; ++j) {
      const double sigma = j * alpha;
      if (std::abs(sigma - std::round(sigma)) > 1e-12) exponents_.push_back(sigma);
    }
    const std::size_t p = exponents_.size();
    const std::size_t n = grid_.steps();
    if (p == 2 || n < 2 * p) {
      exponents_.clear();
      return;
    }
    // Unit-step form: weights scale as h^alpha, nodes as k.
    const double ha = std::pow(grid_.step(), alpha);
    Eigen::MatrixXd V(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (std::size_t r = 0; r < p; ++r)
      for (std::size_t l = 0; l < p; ++l)
        V(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(l)) = std::pow(static_cast<double>(l), exponents_[r]);
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(V);

    std::vector<std::vector<double>> powers(p, std::vector<double>(n + 1));
    std::vector<double> ratio(p);
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t k = 0; k <= n; ++k) powers[r][k] = std::pow(static_cast<double>(k), exponents_[r]);  // 0^0 = 1
      ratio[r] = std::tgamma(exponents_[r] + 1.0) / std::tgamma(exponents_[r] + alpha + 1.0);
    }
    correction_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(p));
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(p));
    for (std::size_t m = 1; m <= n; ++m) {
      for (std::size_t r = 0; r < p; ++r) {
        double discrete = 0.0;
        for (std::size_t k = 0; k <= m; ++k) discrete += fractional_->weight(m, k) * powers[r][k];
        const double exact = ratio[r] * std::pow(static_cast<double>(m), exponents_[r] + alpha);
        rhs(static_cast<Eigen::Index>(r)) = exact - discrete / ha;
      }
      correction_.row(static_cast<Eigen::Index>(m)) = ha * lu.solve(rhs).transpose();
    }
  }

  Kernel kernel_;
  TimeGrid grid_;
  std::optional<quad::FractionalTrapezoid> fractional_;
  std::vector<double> lags_;
  std::vector<double> exponents_;
  Eigen::MatrixXd correction_;
};

inline SampledFunction solve_scalar_resolvent(const ConvolutionWeights& weights, double mu) {
  if (!std::isfinite(mu)) throw std::domain_error("solve_scalar_resolvent: eigenvalue must be finite");
  const TimeGrid& grid = weights.grid();
  const std::size_t n = grid.steps();
  std::vector<double> s(n + 1, 0.0);
  s[0] = 1.0;

  // Nodes 1..p are coupled through the starting weights; solve them together.
  const std::size_t p = weights.starting_nodes();
  if (p > 0) {
    const auto P = static_cast<Eigen::Index>(p);
    Eigen::MatrixXd A(P, P);
    Eigen::VectorXd b(P);
    for (std::size_t m = 1; m <= p; ++m) {
      b(static_cast<Eigen::Index>(m - 1)) = 1.0 + mu * weights.weight(m, 0);
      for (std::size_t k = 1; k <= p; ++k) {
        A(static_cast<Eigen::Index>(m - 1), static_cast<Eigen::Index>(k - 1)) = (m == k ? 1.0 : 0.0) - mu * weights.weight(m, k);
      }
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) throw numerical_error("resolvent starting block is singular");
    const Eigen::VectorXd x = lu.solve(b);
    for (std::size_t m = 1; m <= p; ++m) s[m] = x(static_cast<Eigen::Index>(m - 1));
  }

  for (std::size_t m = p + 1; m <= n; ++m) {
    double history = 0.0;
    for (std::size_t k = 0; k < m; ++k) history += weights.weight(m, k) * s[k];
    const double pivot = 1.0 - mu * weights.weight(m, m);
    if (std::abs(pivot) < 1e-14) {
      throw numerical_error(detail::concat("resolvent step singular at node ", m, " (t=", grid.node(m), ")"));
    }
    s[m] = (1.0 + mu * history) / pivot;
  }
  return SampledFunction(grid, std::move(s));
}

/**
 * s(t) = 1 + mu * int_0^t a(t - tau) s(tau) d tau on the grid.
 *
 * Product-integration stepping: s is piecewise linear and the kernel
 * moments are exact, so the unknown s_m enters its own equation through
 * weight(m, m); each step solves that scalar linear equation.
 */
inline SampledFunction solve_scalar_resolvent(const Kernel& kernel, double mu, const TimeGrid& grid) {
  return solve_scalar_resolvent(ConvolutionWeights(kernel, grid), mu);
}

/// Per-mode resolvent values s_k(t_j) for a diagonal operator with eigenvalues mu_k.
struct ResolventTable {
  TimeGrid grid;
  Kernel kernel;
  std::vector<double> eigenvalues;
  Eigen::MatrixXd modes;  // K x (n + 1)

  std::size_t mode_count() const noexcept { return eigenvalues.size(); }
  double operator()(std::size_t k, std::size_t j) const {
    return modes(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
  }
  SampledFunction row(std::size_t k) const {
    std::vector<double> v(grid.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = (*this)(k, j);
    return SampledFunction(grid, std::move(v));
  }
};

inline ResolventTable build_resolvent_table(std::span<const double> spectrum, const Kernel& kernel,
                                            const TimeGrid& grid) {
  ResolventTable table{grid, kernel, {spectrum.begin(), spectrum.end()},
                       Eigen::MatrixXd(static_cast<Eigen::Index>(spectrum.size()), static_cast<Eigen::Index>(grid.size()))};
  const ConvolutionWeights weights(kernel, grid);
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    try {
      const auto s = solve_scalar_resolvent(weights, spectrum[k]);
      for (std::size_t j = 0; j < s.size(); ++j)
        table.modes(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = s[j];
    } catch (const std::exception& ex) {
      throw numerical_error(detail::concat("mode ", k, " (mu=", spectrum[k], "): ", ex.what()));
    }
  }
  return table;
}

/// max_m |s_m - 1 - mu sum_k weight(m, k) s_k|: how well a row solves the discrete equation.
inline double discrete_resolvent_residual(const ResolventTable& table, std::size_t mode) {
  const ConvolutionWeights weights(table.kernel, table.grid);
  const auto row = table.row(mode);
  const double mu = table.eigenvalues.at(mode);
  double worst = std::abs(row[0] - 1.0);
  for (std::size_t m = 1; m < row.size(); ++m) {
    worst = std::max(worst, std::abs(row[m] - 1.0 - mu * weights.apply_at(row.values, m)));
  }
  return worst;
}

/**
 * sup over interior nodes of | s'(t) - (mu (a' * s)(t) + a(0) mu s(t)) |,
 * s' by central differences. Only defined for differentiable kernels.
 */
inline double resolvent_derivative_residual(const ResolventTable& table, std::size_t mode) {
  const Kernel& a = table.kernel;
  if (!a.differentiable()) {
    throw std::domain_error(
        "resolvent_derivative_residual: needs a kernel of bounded variation (power alpha >= 1 or constant); "
        "for alpha < 1 the resolvent is not differentiable at 0");
  }
  const auto s = table.row(mode);
  const double mu = table.eigenvalues.at(mode);
  const double h = table.grid.step();
  const std::size_t n = table.grid.steps();

  double a0 = 0.0;
  std::vector<double> conv(n + 1, 0.0);
  if (a.kind() == Kernel::Kind::constant) {
    a0 = a.scale();
  } else if (a.alpha() == 1.0) {
    a0 = 1.0;
  } else {
    // a'(t) = t^(alpha-2) / Gamma(alpha-1): again a power kernel.
    quad::FractionalTrapezoid rule(a.alpha() - 1.0, h, n);
    conv = rule.apply(s.values);
  }

  double worst = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    const double ds = (s[j + 1] - s[j - 1]) / (2.0 * h);
    worst = std::max(worst, std::abs(ds - (mu * conv[j] + a0 * mu * s[j])));
  }
  return worst;
}

}  // namespace fracvolt
