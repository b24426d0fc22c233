#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "fracvolt/grid.hpp"
#include "fracvolt/random.hpp"

namespace fracvolt {

/// Hurst index H, strictly inside (0, 1).
class HurstParameter {
 public:
  explicit HurstParameter(double h) : value_(h) {
    if (!(h > 0.0 && h < 1.0)) {
      throw std::domain_error(detail::concat("Hurst parameter must lie in (0, 1), got ", h));
    }
  }
  double value() const noexcept { return value_; }
  bool is_brownian() const noexcept { return value_ == 0.5; }
  bool operator==(const HurstParameter&) const = default;

 private:
  double value_;
};

/// E[b(s) b(t)] = (s^2H + t^2H - |s - t|^2H) / 2.
inline double fbm_covariance(double s, double t, HurstParameter hurst) {
  if (s < 0.0 || t < 0.0) throw std::domain_error("fbm_covariance: times must be non-negative");
  const double e = 2.0 * hurst.value();
  return 0.5 * (std::pow(s, e) + std::pow(t, e) - std::pow(std::abs(s - t), e));
}

/// Mixed second derivative of the fBm covariance, H (2H - 1) |s - t|^(2H - 2), for H > 1/2.
inline double theta_H(double s, double t, HurstParameter hurst) {
  const double h = hurst.value();
  if (!(h > 0.5)) throw std::domain_error("theta_H: requires H > 1/2");
  if (s == t) throw std::domain_error("theta_H: singular on the diagonal s == t");
  return h * (2.0 * h - 1.0) * std::pow(std::abs(s - t), 2.0 * h - 2.0);
}

/// Autocovariance of fBm increments over a step dt at integer lag k.
inline double fgn_autocovariance(std::size_t k, double dt, HurstParameter hurst) {
  const double e = 2.0 * hurst.value();
  const double kk = static_cast<double>(k);
  const double core = std::pow(kk + 1.0, e) - 2.0 * std::pow(kk, e) + std::pow(std::abs(kk - 1.0), e);
  return 0.5 * std::pow(dt, e) * core;
}

enum class FbmMethod { circulant, cholesky };

inline std::string_view to_string(FbmMethod m) { return m == FbmMethod::circulant ? "circulant" : "cholesky"; }

struct FbmPath {
  TimeGrid grid;
  std::vector<double> values;  // values[0] == 0
  HurstParameter hurst;
  std::uint64_t seed;
  std::uint64_t stream;
  FbmMethod method;
};

/**
 * Exact fBm sampler for a fixed (grid, H).
 *
 * Default route: circulant embedding of the increment autocovariance
 * (size 2n) diagonalised by FFT. If the embedding has an eigenvalue below
 * -1e-10 * max, the sampler switches to a dense Cholesky factor of the
 * n x n increment covariance. method() reports which one is in use.
 *
 * Holds an FFT plan cache, so one instance must not be shared between
 * threads; construct one per worker.
 */
class FbmSampler {
 public:
  FbmSampler(const TimeGrid& grid, HurstParameter hurst, bool force_cholesky = false)
      : grid_(grid), hurst_(hurst) {
    const std::size_t n = grid.steps();
    const double dt = grid.step();
    std::vector<double> acov(n + 1);
    for (std::size_t k = 0; k <= n; ++k) acov[k] = fgn_autocovariance(k, dt, hurst);

    if (!force_cholesky && setup_circulant(acov)) {
      method_ = FbmMethod::circulant;
    } else {
      setup_cholesky(acov);
      method_ = FbmMethod::cholesky;
    }
  }

  FbmMethod method() const noexcept { return method_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  HurstParameter hurst() const noexcept { return hurst_; }

  /// Path values on the grid, values[0] = 0. Deterministic in (seed, stream).
  std::vector<double> sample_values(std::uint64_t seed, std::uint64_t stream = 0) {
    const std::size_t n = grid_.steps();
    Philox4x32 rng(seed, stream);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> inc(n);

    if (method_ == FbmMethod::circulant) {
      const std::size_t m = sqrt_eigen_.size();
      spectrum_.resize(m);
      for (std::size_t k = 0; k < m; ++k) {
        const double re = normal(rng);
        const double im = normal(rng);
        spectrum_[k] = sqrt_eigen_[k] * std::complex<double>(re, im);
      }
      fft_.fwd(physical_, spectrum_);
      for (std::size_t j = 0; j < n; ++j) inc[j] = physical_[j].real();
    } else {
      Eigen::VectorXd z(static_cast<Eigen::Index>(n));
      for (std::size_t j = 0; j < n; ++j) z(static_cast<Eigen::Index>(j)) = normal(rng);
      const Eigen::VectorXd x = factor_ * z;
      for (std::size_t j = 0; j < n; ++j) inc[j] = x(static_cast<Eigen::Index>(j));
    }

    std::vector<double> values(n + 1);
    values[0] = 0.0;
    for (std::size_t j = 0; j < n; ++j) values[j + 1] = values[j] + inc[j];
    return values;
  }

  FbmPath sample(std::uint64_t seed, std::uint64_t stream = 0) {
    return FbmPath{grid_, sample_values(seed, stream), hurst_, seed, stream, method_};
  }

 private:
  bool setup_circulant(const std::vector<double>& acov) {
    const std::size_t n = acov.size() - 1;
    const std::size_t m = 2 * n;
    std::vector<std::complex<double>> row(m);
    for (std::size_t k = 0; k <= n; ++k) row[k] = acov[k];
    for (std::size_t k = 1; k < n; ++k) row[m - k] = acov[k];
    std::vector<std::complex<double>> eig;
    fft_.fwd(eig, row);

    double largest = 0.0;
    double smallest = 0.0;
    for (const auto& e : eig) {
      largest = std::max(largest, e.real());
      smallest = std::min(smallest, e.real());
    }
    if (smallest < -1e-10 * largest) return false;

    sqrt_eigen_.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      sqrt_eigen_[k] = std::sqrt(std::max(eig[k].real(), 0.0) / static_cast<double>(m));
    }
    return true;
  }

  void setup_cholesky(const std::vector<double>& acov) {
    const auto n = static_cast<Eigen::Index>(acov.size() - 1);
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) cov(i, j) = acov[static_cast<std::size_t>(std::abs(i - j))];

    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success) {
      factor_ = llt.matrixL();
      return;
    }
    // Semi-definite up to roundoff: use the symmetric square root instead.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const double top = es.eigenvalues().maxCoeff();
    const double bottom = es.eigenvalues().minCoeff();
    if (bottom < -1e-10 * top) {
      throw numerical_error(detail::concat("fBm increment covariance is not PSD (min eigenvalue ", bottom,
                                           ", max ", top, ") for H=", hurst_.value(), ", n=", n));
    }
    factor_ = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }

  TimeGrid grid_;
  HurstParameter hurst_;
  FbmMethod method_ = FbmMethod::circulant;
  std::vector<double> sqrt_eigen_;
  Eigen::MatrixXd factor_;
  Eigen::FFT<double> fft_;
  std::vector<std::complex<double>> spectrum_;
  std::vector<std::complex<double>> physical_;
};

/// One exact fBm path; see FbmSampler.
inline FbmPath sample_fbm(const TimeGrid& grid, HurstParameter hurst, std::uint64_t seed, std::uint64_t stream = 0) {
  FbmSampler sampler(grid, hurst);
  return sampler.sample(seed, stream);
}

}  // namespace fracvolt
