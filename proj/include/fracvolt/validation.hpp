#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "fracvolt/covariance.hpp"
#include "fracvolt/random.hpp"
#include "fracvolt/resolvent.hpp"
#include "fracvolt/spectral.hpp"
#include "fracvolt/stochconv.hpp"

namespace fracvolt {

/**
 * Streaming mean and centred cross-moment of K-vectors (Welford update,
 * Chan et al. merge).
 */
class MomentAccumulator {
 public:
  explicit MomentAccumulator(std::size_t K = 0)
      : mean_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K))),
        comoment_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K))) {}

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }
  std::uint64_t count() const noexcept { return count_; }
  const Eigen::VectorXd& mean() const noexcept { return mean_; }

  void add(const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x.size() != mean_.size()) throw std::invalid_argument("MomentAccumulator::add: dimension mismatch");
    ++count_;
    const Eigen::VectorXd delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    comoment_.noalias() += delta * (x - mean_).transpose();
  }

  void merge(const MomentAccumulator& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    if (other.dim() != dim()) throw std::invalid_argument("MomentAccumulator::merge: dimension mismatch");
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(other.count_);
    const double n = na + nb;
    const Eigen::VectorXd delta = other.mean_ - mean_;
    mean_ += delta * (nb / n);
    comoment_ += other.comoment_ + delta * delta.transpose() * (na * nb / n);
    count_ += other.count_;
  }

  /// E[x x^T] estimate (moments about zero).
  Eigen::MatrixXd second_moment() const {
    if (count_ == 0) throw std::logic_error("MomentAccumulator: empty");
    return comoment_ / static_cast<double>(count_) + mean_ * mean_.transpose();
  }

  /// Unbiased covariance about the sample mean.
  Eigen::MatrixXd covariance() const {
    if (count_ < 2) throw std::logic_error("MomentAccumulator: need at least two samples");
    return comoment_ / static_cast<double>(count_ - 1);
  }

 private:
  std::uint64_t count_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd comoment_;
};

struct ValidationEntry {
  std::size_t node;
  double t;
  std::size_t row;
  std::size_t col;
  double empirical;
  double analytic;
  double standard_error;
  double z;
  bool pass;
};

struct ValidationReport {
  std::string config_echo;
  std::vector<std::string> methods;
  std::vector<ValidationEntry> entries;
  std::uint64_t replicas = 0;
  double gate = 4.0;
  double allowance = 0.01;

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const auto& e) { return !e.pass; }));
  }
  double failure_fraction() const {
    return entries.empty() ? 0.0 : static_cast<double>(failures()) / static_cast<double>(entries.size());
  }
  double max_abs_z() const {
    double z = 0.0;
    for (const auto& e : entries) z = std::max(z, std::abs(e.z));
    return z;
  }
  bool passed() const { return failure_fraction() <= allowance; }
};

/**
 * Entry-wise z-scores of the empirical second moment against Q, with the
 * Gaussian standard error sqrt((Q_ii Q_jj + Q_ij^2) / N). Upper triangle only.
 */
inline std::vector<ValidationEntry> compare(const MomentAccumulator& empirical, const CovarianceMatrix& analytic,
                                            std::size_t node, double gate = 4.0) {
  if (empirical.dim() != analytic.dim()) {
    throw std::invalid_argument(detail::concat("compare: accumulator has K=", empirical.dim(), ", covariance has K=",
                                               analytic.dim()));
  }
  const Eigen::MatrixXd emp = empirical.second_moment();
  const double N = static_cast<double>(empirical.count());
  std::vector<ValidationEntry> out;
  const std::size_t K = analytic.dim();
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = i; j < K; ++j) {
      const double q = analytic(i, j);
      const double e = emp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const double se = std::sqrt(std::max(analytic(i, i) * analytic(j, j) + q * q, 0.0) / N);
      double z;
      if (se > 0.0) {
        z = (e - q) / se;
      } else {
        z = e == q ? 0.0 : std::numeric_limits<double>::infinity();
      }
      out.push_back({node, analytic.t, i, j, e, q, se, z, std::abs(z) <= gate});
    }
  return out;
}

struct MonteCarloOptions {
  std::size_t replicas = 20000;
  std::uint64_t master_seed = 1;
  unsigned threads = 1;
  /// Every replica reuses the master seed (degenerate run, for testing).
  bool identical_seeds = false;
  /// Replicas per deterministic merge unit; results do not depend on threads.
  std::size_t chunk = 500;
};

/// Draws one replica: seed -> K x nodes matrix.
using ReplicaDraw = std::function<Eigen::MatrixXd(std::uint64_t)>;

/**
 * Accumulates `replicas` draws into one accumulator per node column.
 * make_draw is called once per worker thread so draws may hold mutable
 * scratch state. Replica r uses replica_seed(master, r).
 */
inline std::vector<MomentAccumulator> accumulate_replicas(std::size_t K, std::size_t node_count,
                                                          const std::function<ReplicaDraw()>& make_draw,
                                                          const MonteCarloOptions& opt) {
  if (opt.replicas < 2) throw std::invalid_argument("run_monte_carlo: need at least 2 replicas");
  const std::size_t chunk = std::max<std::size_t>(opt.chunk, 1);
  const std::size_t chunks = (opt.replicas + chunk - 1) / chunk;
  std::vector<std::vector<MomentAccumulator>> partial(chunks,
                                                      std::vector<MomentAccumulator>(node_count, MomentAccumulator(K)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;

  auto worker = [&]() {
    ReplicaDraw draw = make_draw();
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      const std::size_t first = c * chunk;
      const std::size_t last = std::min(first + chunk, opt.replicas);
      for (std::size_t r = first; r < last; ++r) {
        try {
          const std::uint64_t seed = opt.identical_seeds ? opt.master_seed : replica_seed(opt.master_seed, r);
          const Eigen::MatrixXd x = draw(seed);
          for (std::size_t k = 0; k < node_count; ++k) partial[c][k].add(x.col(static_cast<Eigen::Index>(k)));
        } catch (const std::exception& ex) {
          std::lock_guard<std::mutex> lock(failure_lock);
          if (!failure) {
            failure = std::make_exception_ptr(numerical_error(detail::concat("replica ", r, ": ", ex.what())));
          }
          next.store(chunks);
          return;
        }
      }
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(chunks)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<MomentAccumulator> out(node_count, MomentAccumulator(K));
  for (const auto& part : partial)
    for (std::size_t k = 0; k < node_count; ++k) out[k].merge(part[k]);
  return out;
}

/// Everything a replica of the stochastic convolution needs.
struct ConvolutionProblem {
  SpectralModel model;
  ResolventTable table;
  OperatorField field;
  HurstParameter hurst;

  const TimeGrid& grid() const noexcept { return table.grid; }
};

/// Riemann-route Monte Carlo of the convolution at the given node indices.
inline std::vector<MomentAccumulator> run_monte_carlo(const ConvolutionProblem& problem,
                                                      const std::vector<std::size_t>& nodes,
                                                      const MonteCarloOptions& opt) {
  auto make = [&]() -> ReplicaDraw {
    auto sampler = std::make_shared<FbmSampler>(problem.grid(), problem.hurst);
    return [&problem, &nodes, sampler](std::uint64_t seed) {
      const auto noise = sample_hilbert_fbm(problem.model, *sampler, seed);
      return convolution_at(problem.table, problem.field, noise, nodes);
    };
  };
  return accumulate_replicas(problem.model.size(), nodes.size(), make, opt);
}

/// Exact-marginal Monte Carlo from analytic covariances (one per node).
inline std::vector<MomentAccumulator> run_monte_carlo_exact(const std::vector<CovarianceMatrix>& covariances,
                                                            const MonteCarloOptions& opt) {
  auto sampler = std::make_shared<GaussianMarginalSampler>(covariances);
  auto make = [sampler]() -> ReplicaDraw {
    return [sampler](std::uint64_t seed) { return sampler->draw(seed); };
  };
  return accumulate_replicas(sampler->dim(), sampler->nodes(), make, opt);
}

/**
 * Pairing of the Volterra equation with the k-th basis vector at node m:
 *   | x_k(t) - x_k(0) - mu_k (a * x_k)(t) - (int F dB^H)_k(t) |
 * using the solver's product-integration weights and the simulator's
 * left-point sums.
 */
inline double weak_residual(const HilbertPath& path, const HilbertPath& noise, const SpectralModel& model,
                            const Kernel& kernel, const OperatorField& F, std::size_t mode, std::size_t node) {
  require_same_grid(path.grid, noise.grid, "weak_residual");
  if (path.dim() != model.size() || noise.dim() != model.size()) {
    throw std::invalid_argument("weak_residual: path, noise and model disagree on K");
  }
  if (mode >= model.size()) throw std::out_of_range("weak_residual: mode out of range");
  if (node > path.grid.steps()) throw std::out_of_range("weak_residual: node out of range");
  const ConvolutionWeights weights(kernel, path.grid);
  std::vector<double> x(path.grid.size());
  for (std::size_t j = 0; j < x.size(); ++j)
    x[j] = path.coords(static_cast<Eigen::Index>(mode), static_cast<Eigen::Index>(j));
  const auto driven = stochastic_integral(F, noise);
  const double stoch = driven.coords(static_cast<Eigen::Index>(mode), static_cast<Eigen::Index>(node));
  return std::abs(x[node] - x[0] - model.mu[mode] * weights.apply_at(x, node) - stoch);
}

}  // namespace fracvolt
