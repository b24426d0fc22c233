#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fracvolt/covariance.hpp"
#include "fracvolt/random.hpp"
#include "fracvolt/resolvent.hpp"
#include "fracvolt/spectral.hpp"

namespace fracvolt {

enum class SampleMethod { riemann, exact_gaussian };

inline std::string_view to_string(SampleMethod m) { return m == SampleMethod::riemann ? "riemann" : "exact_gaussian"; }

struct ConvolutionSample {
  HilbertPath path;
  SampleMethod method;
};

namespace detail {

inline void require_noise(const OperatorField& F, const HilbertPath& noise, const char* what) {
  require_same_grid(F.grid(), noise.grid, what);
  if (F.dim() != noise.dim()) {
    throw std::invalid_argument(detail::concat(what, ": operator field is ", F.dim(), "-dimensional, noise has ", noise.dim(),
                                               " modes"));
  }
}

// Column j holds F(t_j) (B(t_{j+1}) - B(t_j)), j = 0..n-1.
inline Eigen::MatrixXd driven_increments(const OperatorField& F, const HilbertPath& noise) {
  const auto n = static_cast<Eigen::Index>(noise.grid.steps());
  const auto K = static_cast<Eigen::Index>(noise.dim());
  Eigen::MatrixXd out(K, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::VectorXd d = noise.coords.col(j + 1) - noise.coords.col(j);
    const auto& Fj = F.at(static_cast<std::size_t>(j));
    if (F.is_diagonal()) {
      out.col(j) = Fj.diagonal().cwiseProduct(d);
    } else {
      out.col(j) = Fj * d;
    }
  }
  return out;
}

}  // namespace detail

/// Left-point sums  sum_{j < m} F(t_j) (B(t_{j+1}) - B(t_j))  at every node.
inline HilbertPath stochastic_integral(const OperatorField& F, const HilbertPath& noise) {
  detail::require_noise(F, noise, "stochastic_integral");
  const auto inc = detail::driven_increments(F, noise);
  HilbertPath out{noise.grid, Eigen::MatrixXd::Zero(noise.coords.rows(), noise.coords.cols()), noise.hurst, noise.seed};
  for (Eigen::Index j = 0; j < inc.cols(); ++j) out.coords.col(j + 1) = out.coords.col(j) + inc.col(j);
  return out;
}

/**
 * Left-point sums of int_0^t S(t - s) F(s) dB^H(s) at the requested nodes:
 *   X_i(t_m) = sum_{j < m} s_i(t_m - t_j) [F(t_j) dB_j]_i.
 * Returns a K x nodes.size() matrix.
 */
inline Eigen::MatrixXd convolution_at(const ResolventTable& table, const OperatorField& F, const HilbertPath& noise,
                                      std::span<const std::size_t> nodes) {
  detail::require_noise(F, noise, "simulate_convolution");
  require_same_grid(table.grid, noise.grid, "simulate_convolution");
  if (table.mode_count() != noise.dim()) throw std::invalid_argument("simulate_convolution: table/noise mode count mismatch");
  const auto inc = detail::driven_increments(F, noise);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(inc.rows(), static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t c = 0; c < nodes.size(); ++c) {
    const std::size_t m = nodes[c];
    if (m > noise.grid.steps()) throw std::out_of_range("simulate_convolution: node index out of range");
    auto col = out.col(static_cast<Eigen::Index>(c));
    for (std::size_t j = 0; j < m; ++j) {
      col += table.modes.col(static_cast<Eigen::Index>(m - j)).cwiseProduct(inc.col(static_cast<Eigen::Index>(j)));
    }
  }
  return out;
}

/// The convolution at every node; O(n^2 K) after an O(n K^2) pass over F.
inline ConvolutionSample simulate_convolution(const ResolventTable& table, const OperatorField& F,
                                              const HilbertPath& noise) {
  std::vector<std::size_t> all(noise.grid.size());
  for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
  HilbertPath path{noise.grid, convolution_at(table, F, noise, all), noise.hurst, noise.seed};
  return ConvolutionSample{std::move(path), SampleMethod::riemann};
}

/// X(t_m) = S(t_m) X0 + convolution.
inline HilbertPath simulate_weak_solution(std::span<const double> x0, const ResolventTable& table,
                                          const OperatorField& F, const HilbertPath& noise) {
  if (x0.size() != noise.dim()) {
    throw std::invalid_argument(detail::concat("simulate_weak_solution: initial state has ", x0.size(), " coordinates, model has ",
                                               noise.dim()));
  }
  auto sample = simulate_convolution(table, F, noise);
  auto& coords = sample.path.coords;
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    const double xi = x0[static_cast<std::size_t>(i)];
    if (xi == 0.0) continue;
    coords.row(i) += xi * table.modes.row(i);
  }
  return std::move(sample.path);
}

/**
 * Draws N(0, Q_m) independently at each node from precomputed symmetric
 * square roots. Marginals are exact; the joint law across nodes is not.
 */
class GaussianMarginalSampler {
 public:
  explicit GaussianMarginalSampler(const std::vector<CovarianceMatrix>& covariances) {
    if (covariances.empty()) throw std::invalid_argument("GaussianMarginalSampler: no covariance matrices");
    dim_ = covariances.front().entries.rows();
    for (const auto& q : covariances) {
      if (q.entries.rows() != dim_ || q.entries.cols() != dim_) {
        throw std::invalid_argument("GaussianMarginalSampler: covariance matrices differ in size");
      }
      factors_.push_back(square_root(q));
    }
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(dim_); }
  std::size_t nodes() const noexcept { return factors_.size(); }

  /// K x nodes matrix of draws, deterministic in seed.
  Eigen::MatrixXd draw(std::uint64_t seed) const {
    Philox4x32 rng(seed, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd out(dim_, static_cast<Eigen::Index>(factors_.size()));
    Eigen::VectorXd z(dim_);
    for (std::size_t c = 0; c < factors_.size(); ++c) {
      for (Eigen::Index i = 0; i < dim_; ++i) z(i) = normal(rng);
      out.col(static_cast<Eigen::Index>(c)) = factors_[c] * z;
    }
    return out;
  }

 private:
  static Eigen::MatrixXd square_root(const CovarianceMatrix& q) {
    const Eigen::MatrixXd sym = 0.5 * (q.entries + q.entries.transpose());
    if (sym.cwiseAbs().maxCoeff() == 0.0) return Eigen::MatrixXd::Zero(sym.rows(), sym.cols());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    const double radius = es.eigenvalues().cwiseAbs().maxCoeff();
    if (es.eigenvalues().minCoeff() < -1e-8 * radius) {
      throw numerical_error(detail::concat("exact_gaussian_convolution: covariance at t=", q.t,
                                           " cannot be repaired to PSD (min eigenvalue ", es.eigenvalues().minCoeff(),
                                           ", radius ", radius, ")"));
    }
    return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }

  Eigen::Index dim_ = 0;
  std::vector<Eigen::MatrixXd> factors_;
};

/// One exact marginal draw per covariance matrix; K x covariances.size().
inline Eigen::MatrixXd exact_gaussian_convolution(const std::vector<CovarianceMatrix>& covariances, std::uint64_t seed) {
  return GaussianMarginalSampler(covariances).draw(seed);
}

}  // namespace fracvolt
