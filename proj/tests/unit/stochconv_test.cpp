#include <gtest/gtest.h>

#include <cmath>

#include "fracvolt/stochconv.hpp"
#include "fracvolt/validation.hpp"

using namespace fracvolt;

namespace {

HilbertPath noise_for(const SpectralModel& model, const TimeGrid& grid, double h, std::uint64_t seed) {
  return sample_hilbert_fbm(model, grid, HurstParameter(h), seed);
}

}  // namespace

TEST(StochasticIntegral, IdentityReturnsNoise) {
  const TimeGrid grid(1.0, 64);
  const SpectralModel model({1.0, 0.25}, {-1.0, -4.0});
  const auto noise = noise_for(model, grid, 0.6, 3);
  const auto out = stochastic_integral(OperatorField::identity(grid, 2), noise);
  EXPECT_LT((out.coords - noise.coords).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(StochasticIntegral, ZeroFieldGivesZero) {
  const TimeGrid grid(1.0, 32);
  const SpectralModel model({1.0}, {-1.0});
  const auto out = stochastic_integral(OperatorField::zero(grid, 1), noise_for(model, grid, 0.4, 1));
  EXPECT_EQ(out.coords.cwiseAbs().maxCoeff(), 0.0);
}

TEST(StochasticIntegral, LinearInField) {
  const TimeGrid grid(1.0, 32);
  const SpectralModel model({1.0, 1.0}, {-1.0, -1.0});
  const auto noise = noise_for(model, grid, 0.7, 8);
  const auto F = OperatorField::from(grid, [](double t) {
    Eigen::MatrixXd m(2, 2);
    m << std::cos(t), t, 0.0, 1.0;
    return m;
  });
  const auto a = stochastic_integral(F, noise);
  const auto b = stochastic_integral(F.scaled(4.0), noise);
  EXPECT_EQ(Eigen::MatrixXd(b.coords), Eigen::MatrixXd(4.0 * a.coords));
  const auto c = stochastic_integral(F.plus(F.scaled(2.0)), noise);
  EXPECT_LT((c.coords - 3.0 * a.coords).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(WeakSolution, NoiseFreeFollowsResolvent) {
  const TimeGrid grid(1.0, 128);
  const SpectralModel model({1.0, 1.0}, {-1.0, -4.0});
  const auto table = build_resolvent_table(model.mu, Kernel::power(1.0), grid);
  const auto noise = noise_for(model, grid, 0.5, 1);
  const std::vector<double> x0{2.0, -1.0};
  const auto x = simulate_weak_solution(x0, table, OperatorField::zero(grid, 2), noise);
  for (std::size_t j = 0; j < grid.size(); j += 16) {
    EXPECT_DOUBLE_EQ(x.coords(0, static_cast<Eigen::Index>(j)), 2.0 * table(0, j));
    EXPECT_DOUBLE_EQ(x.coords(1, static_cast<Eigen::Index>(j)), -1.0 * table(1, j));
  }
}

TEST(WeakSolution, ConvolutionAtMatchesFullPath) {
  const TimeGrid grid(1.0, 64);
  const SpectralModel model({1.0}, {-2.0});
  const auto table = build_resolvent_table(model.mu, Kernel::power(0.5), grid);
  const auto noise = noise_for(model, grid, 0.3, 4);
  const auto I = OperatorField::identity(grid, 1);
  const auto full = simulate_convolution(table, I, noise);
  const std::vector<std::size_t> nodes{10, 64};
  const auto some = convolution_at(table, I, noise, nodes);
  EXPECT_DOUBLE_EQ(some(0, 0), full.path.coords(0, 10));
  EXPECT_DOUBLE_EQ(some(0, 1), full.path.coords(0, 64));
  EXPECT_EQ(full.method, SampleMethod::riemann);
}

TEST(WeakResidual, ZeroForNoiseFreeHeat) {
  const TimeGrid grid(1.0, 256);
  const auto model = SpectralModel::laplacian(3, PowerFamily{1.0, 2.0});
  const auto kernel = Kernel::power(1.0);
  const auto table = build_resolvent_table(model.mu, kernel, grid);
  const auto F = OperatorField::zero(grid, 3);
  const auto noise = noise_for(model, grid, 0.5, 2);
  const std::vector<double> x0{1.0, 1.0, 1.0};
  const auto x = simulate_weak_solution(x0, table, F, noise);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_LT(weak_residual(x, noise, model, kernel, F, k, 256), 1e-12);
  EXPECT_THROW(weak_residual(x, noise, model, kernel, F, 3, 256), std::out_of_range);
}

TEST(WeakResidual, NoisyCaseShrinksWithStep) {
  const SpectralModel model({1.0}, {-1.0});
  const auto kernel = Kernel::constant(1.0);
  double res[2];
  for (int r = 0; r < 2; ++r) {
    const TimeGrid grid(1.0, r == 0 ? 64 : 256);
    const auto table = build_resolvent_table(model.mu, kernel, grid);
    const auto F = OperatorField::identity(grid, 1);
    double acc = 0.0;
    for (std::uint64_t s = 0; s < 50; ++s) {
      const auto noise = noise_for(model, grid, 0.5, replica_seed(9, s));
      const std::vector<double> x0{0.0};
      const auto x = simulate_weak_solution(x0, table, F, noise);
      const double e = weak_residual(x, noise, model, kernel, F, 0, grid.steps());
      acc += e * e;
    }
    res[r] = std::sqrt(acc / 50);
  }
  EXPECT_LT(res[1], 0.5 * res[0]);
}

TEST(GaussianMarginal, DeterministicAndShaped) {
  Eigen::MatrixXd m(2, 2);
  m << 2, 1, 1, 2;
  const std::vector<CovarianceMatrix> covs{{1.0, 1.0, m, HurstParameter(0.5)}, {2.0, 2.0, 2 * m, HurstParameter(0.5)}};
  const auto a = exact_gaussian_convolution(covs, 17);
  const auto b = exact_gaussian_convolution(covs, 17);
  EXPECT_EQ(a.rows(), 2);
  EXPECT_EQ(a.cols(), 2);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, exact_gaussian_convolution(covs, 18));
}

TEST(GaussianMarginal, RejectsIndefinite) {
  Eigen::MatrixXd m(2, 2);
  m << 1, 3, 3, 1;
  EXPECT_THROW(GaussianMarginalSampler({CovarianceMatrix{1.0, 1.0, m, HurstParameter(0.5)}}), numerical_error);
}
