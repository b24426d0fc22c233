#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracvolt/fbm.hpp"
#include "fracvolt/grid.hpp"

namespace fracvolt {

/// lambda_k = scale * k^(-p), k = 1, 2, ...
struct PowerFamily {
  double scale = 1.0;
  double p = 2.0;

  double operator()(std::size_t k) const { return scale * std::pow(static_cast<double>(k), -p); }
};

/// Integral-test bound on sum_{k > K} scale * k^(-p). Needs p > 1.
inline double tail_mass_report(const PowerFamily& family, std::size_t K) {
  if (!(family.p > 1.0)) {
    throw std::domain_error(detail::concat("tail_mass_report: power family needs p > 1 for a finite trace, got p=",
                                           family.p));
  }
  if (K == 0) throw std::invalid_argument("tail_mass_report: K must be >= 1");
  return family.scale * std::pow(static_cast<double>(K), 1.0 - family.p) / (family.p - 1.0);
}

/**
 * Truncated diagonal model: noise weights lambda_k and operator eigenvalues
 * mu_k in one shared orthonormal basis, k = 1..K (stored 0-based).
 */
struct SpectralModel {
  std::vector<double> lambda;
  std::vector<double> mu;
  std::optional<double> tail_mass;

  SpectralModel(std::vector<double> noise, std::vector<double> spectrum, std::optional<double> tail = std::nullopt)
      : lambda(std::move(noise)), mu(std::move(spectrum)), tail_mass(tail) {
    if (lambda.empty()) throw std::invalid_argument("SpectralModel: K must be >= 1");
    if (lambda.size() != mu.size()) {
      throw std::invalid_argument(detail::concat("SpectralModel: ", lambda.size(), " noise weights but ", mu.size(),
                                                 " eigenvalues"));
    }
    for (std::size_t k = 0; k < lambda.size(); ++k) {
      if (!(lambda[k] >= 0.0) || !std::isfinite(lambda[k])) {
        throw std::domain_error(detail::concat("SpectralModel: lambda[", k, "] = ", lambda[k], " must be finite and >= 0"));
      }
      if (!std::isfinite(mu[k])) throw std::domain_error(detail::concat("SpectralModel: mu[", k, "] is not finite"));
    }
  }

  /// lambda_k = family(k), mu_k = -mu_scale * k^2; tail mass from the integral test.
  static SpectralModel laplacian(std::size_t K, const PowerFamily& noise, double mu_scale = 1.0) {
    std::vector<double> lam(K);
    std::vector<double> mu(K);
    for (std::size_t k = 1; k <= K; ++k) {
      lam[k - 1] = noise(k);
      mu[k - 1] = -mu_scale * static_cast<double>(k * k);
    }
    return SpectralModel(std::move(lam), std::move(mu), tail_mass_report(noise, K));
  }

  std::size_t size() const noexcept { return lambda.size(); }
  double trace() const {
    double s = 0.0;
    for (double l : lambda) s += l;
    return s;
  }
};

/**
 * Samples of a K x K operator F(t_j) in the model basis.
 */
class OperatorField {
 public:
  enum class Structure { diagonal, dense };

  OperatorField(TimeGrid grid, std::vector<Eigen::MatrixXd> matrices, Structure structure)
      : grid_(grid), matrices_(std::move(matrices)), structure_(structure) {
    if (matrices_.size() != grid_.size()) {
      throw std::invalid_argument(detail::concat("OperatorField: ", matrices_.size(), " samples for ", grid_.size(), " nodes"));
    }
    const auto K = matrices_.front().rows();
    if (K < 1) throw std::invalid_argument("OperatorField: empty matrices");
    for (std::size_t j = 0; j < matrices_.size(); ++j) {
      const auto& m = matrices_[j];
      if (m.rows() != K || m.cols() != K) throw std::invalid_argument("OperatorField: all samples must be K x K");
      if (!m.allFinite()) throw std::domain_error(detail::concat("OperatorField: non-finite entry at node ", j));
      if (structure_ == Structure::diagonal) {
        for (Eigen::Index r = 0; r < K; ++r)
          for (Eigen::Index c = 0; c < K; ++c)
            if (r != c && m(r, c) != 0.0) {
              throw std::invalid_argument(detail::concat("OperatorField: diagonal flag but entry (", r, ",", c,
                                                         ") at node ", j, " is nonzero"));
            }
      }
    }
  }

  static OperatorField identity(const TimeGrid& grid, std::size_t K) {
    return constant_diagonal(grid, std::vector<double>(K, 1.0));
  }
  static OperatorField zero(const TimeGrid& grid, std::size_t K) {
    return constant_diagonal(grid, std::vector<double>(K, 0.0));
  }
  static OperatorField constant_diagonal(const TimeGrid& grid, const std::vector<double>& c) {
    Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
    Eigen::MatrixXd m = d.asDiagonal();
    return OperatorField(grid, std::vector<Eigen::MatrixXd>(grid.size(), m), Structure::diagonal);
  }
  static OperatorField constant(const TimeGrid& grid, const Eigen::MatrixXd& m) {
    return OperatorField(grid, std::vector<Eigen::MatrixXd>(grid.size(), m), Structure::dense);
  }
  /// f(t) must return a K x K matrix.
  template <typename F>
  static OperatorField from(const TimeGrid& grid, F&& f, Structure structure = Structure::dense) {
    std::vector<Eigen::MatrixXd> ms;
    ms.reserve(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) ms.emplace_back(f(grid.node(j)));
    return OperatorField(grid, std::move(ms), structure);
  }

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(matrices_.front().rows()); }
  Structure structure() const noexcept { return structure_; }
  bool is_diagonal() const noexcept { return structure_ == Structure::diagonal; }
  const Eigen::MatrixXd& at(std::size_t j) const { return matrices_.at(j); }

  /// The scalar function t -> F(t)_{row, col}.
  SampledFunction entry(std::size_t row, std::size_t col) const {
    std::vector<double> v(grid_.size());
    for (std::size_t j = 0; j < v.size(); ++j)
      v[j] = matrices_[j](static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
    return SampledFunction(grid_, std::move(v));
  }

  bool entry_is_zero(std::size_t row, std::size_t col) const {
    if (structure_ == Structure::diagonal && row != col) return true;
    for (const auto& m : matrices_)
      if (m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) != 0.0) return false;
    return true;
  }

  OperatorField scaled(double c) const {
    auto ms = matrices_;
    for (auto& m : ms) m *= c;
    return OperatorField(grid_, std::move(ms), structure_);
  }

  OperatorField plus(const OperatorField& other) const {
    require_same_grid(grid_, other.grid_, "OperatorField::plus");
    auto ms = matrices_;
    for (std::size_t j = 0; j < ms.size(); ++j) ms[j] += other.matrices_[j];
    const auto s = (is_diagonal() && other.is_diagonal()) ? Structure::diagonal : Structure::dense;
    return OperatorField(grid_, std::move(ms), s);
  }

 private:
  TimeGrid grid_;
  std::vector<Eigen::MatrixXd> matrices_;
  Structure structure_;
};

/// Coordinates of an H-valued path: coords(k, j) = <X(t_j), h_k>.
struct HilbertPath {
  TimeGrid grid;
  Eigen::MatrixXd coords;  // K x (n + 1)
  HurstParameter hurst;
  std::uint64_t seed;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(coords.rows()); }
};

/**
 * Truncated H-valued fBm: row k is sqrt(lambda_k) times an independent
 * scalar fBm drawn from stream k of the seed, so raising K leaves the
 * lower modes untouched.
 */
inline HilbertPath sample_hilbert_fbm(const SpectralModel& model, FbmSampler& sampler, std::uint64_t seed) {
  const TimeGrid& grid = sampler.grid();
  HilbertPath path{grid, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(model.size()), static_cast<Eigen::Index>(grid.size())),
                   sampler.hurst(), seed};
  for (std::size_t k = 0; k < model.size(); ++k) {
    if (model.lambda[k] == 0.0) continue;
    const double w = std::sqrt(model.lambda[k]);
    const auto values = sampler.sample_values(seed, k);
    for (std::size_t j = 0; j < values.size(); ++j)
      path.coords(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = w * values[j];
  }
  return path;
}

inline HilbertPath sample_hilbert_fbm(const SpectralModel& model, const TimeGrid& grid, HurstParameter hurst,
                                      std::uint64_t seed) {
  FbmSampler sampler(grid, hurst);
  return sample_hilbert_fbm(model, sampler, seed);
}

}  // namespace fracvolt
