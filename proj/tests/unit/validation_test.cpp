#include <gtest/gtest.h>

#include <cmath>

#include "fracvolt/closed_forms.hpp"
#include "fracvolt/validation.hpp"

using namespace fracvolt;

TEST(MomentAccumulator, MergeMatchesSequential) {
  MomentAccumulator all(2), left(2), right(2);
  Philox4x32 rng(1, 0);
  std::normal_distribution<double> normal;
  for (int i = 0; i < 300; ++i) {
    Eigen::Vector2d x(normal(rng) + 1.0, normal(rng));
    all.add(x);
    (i < 120 ? left : right).add(x);
  }
  left.merge(right);
  EXPECT_EQ(left.count(), all.count());
  EXPECT_LT((left.second_moment() - all.second_moment()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((left.covariance() - all.covariance()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((left.mean() - all.mean()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MomentAccumulator, SecondMomentIsAboutZero) {
  MomentAccumulator a(1);
  a.add(Eigen::VectorXd::Constant(1, 2.0));
  a.add(Eigen::VectorXd::Constant(1, 4.0));
  EXPECT_DOUBLE_EQ(a.second_moment()(0, 0), 10.0);
  EXPECT_DOUBLE_EQ(a.covariance()(0, 0), 2.0);
}

TEST(Compare, ExactMatchGivesZeroScore) {
  MomentAccumulator a(2);
  a.add(Eigen::Vector2d(1.0, 1.0));
  a.add(Eigen::Vector2d(-1.0, -1.0));
  Eigen::MatrixXd q = Eigen::MatrixXd::Ones(2, 2);
  const auto e = compare(a, CovarianceMatrix{1.0, 1.0, q, HurstParameter(0.5)}, 0);
  ASSERT_EQ(e.size(), 3u);
  for (const auto& x : e) {
    EXPECT_EQ(x.z, 0.0);
    EXPECT_TRUE(x.pass);
    EXPECT_NEAR(x.standard_error, 1.0, 1e-15);
  }
}

TEST(Compare, DetectsScaledCovariance) {
  MomentAccumulator a(1);
  Philox4x32 rng(4, 0);
  std::normal_distribution<double> normal;
  for (int i = 0; i < 20000; ++i) a.add(Eigen::VectorXd::Constant(1, normal(rng)));
  Eigen::MatrixXd q = Eigen::MatrixXd::Constant(1, 1, 1.0);
  EXPECT_TRUE(compare(a, CovarianceMatrix{1.0, 1.0, q, HurstParameter(0.5)}, 0)[0].pass);
  EXPECT_FALSE(compare(a, CovarianceMatrix{1.0, 1.0, 1.5 * q, HurstParameter(0.5)}, 0)[0].pass);
}

TEST(AccumulateReplicas, IdenticalSeedsDegenerate) {
  MonteCarloOptions opt;
  opt.replicas = 2;
  opt.identical_seeds = true;
  auto make = []() -> ReplicaDraw {
    return [](std::uint64_t seed) { return Eigen::MatrixXd::Constant(1, 1, static_cast<double>(seed % 97)); };
  };
  const auto acc = accumulate_replicas(1, 1, make, opt);
  EXPECT_EQ(acc[0].count(), 2u);
  EXPECT_EQ(acc[0].covariance()(0, 0), 0.0);
  opt.replicas = 1;
  EXPECT_THROW(accumulate_replicas(1, 1, make, opt), std::invalid_argument);
}

TEST(AccumulateReplicas, IndependentOfThreadCount) {
  const TimeGrid grid(1.0, 50);
  const SpectralModel model({1.0}, {-1.0});
  ConvolutionProblem p{model, build_resolvent_table(model.mu, Kernel::constant(1.0), grid), OperatorField::identity(grid, 1),
                       HurstParameter(0.6)};
  MonteCarloOptions opt;
  opt.replicas = 1200;
  opt.chunk = 100;
  opt.threads = 1;
  const auto a = run_monte_carlo(p, {50}, opt);
  opt.threads = 3;
  const auto b = run_monte_carlo(p, {50}, opt);
  EXPECT_EQ(a[0].second_moment(), b[0].second_moment());
}

TEST(RunMonteCarlo, OrnsteinUhlenbeckVariance) {
  const TimeGrid grid(1.0, 500);
  const SpectralModel model({1.0}, {-1.0});
  ConvolutionProblem p{model, build_resolvent_table(model.mu, Kernel::constant(1.0), grid), OperatorField::identity(grid, 1),
                       HurstParameter(0.5)};
  MonteCarloOptions opt;
  opt.replicas = 4000;
  const auto acc = run_monte_carlo(p, {250, 500}, opt);
  for (std::size_t i = 0; i < 2; ++i) {
    const double t = grid.node(i == 0 ? 250 : 500);
    const double q = ou_variance(-1.0, t);
    EXPECT_NEAR(acc[i].second_moment()(0, 0), q, 4 * q * std::sqrt(2.0 / 4000) + 2e-3);
  }
}

TEST(ValidationReport, Allowance) {
  ValidationReport r;
  r.allowance = 0.01;
  for (int i = 0; i < 200; ++i) r.entries.push_back({0, 1.0, 0, 0, 1.0, 1.0, 1.0, i < 2 ? 5.0 : 0.1, i >= 2});
  EXPECT_EQ(r.failures(), 2u);
  EXPECT_TRUE(r.passed());
  r.entries[5].pass = false;
  EXPECT_FALSE(r.passed());
  EXPECT_DOUBLE_EQ(r.max_abs_z(), 5.0);
}
