#include <gtest/gtest.h>

#include <cmath>

#include "fracvolt/mittag_leffler.hpp"

using fracvolt::mittag_leffler;

struct MlCase {
  double alpha;
  double z;
  double value;
};

class MittagLefflerOracle : public ::testing::TestWithParam<MlCase> {};

// Reference values from a 40-digit series / integral evaluation.
TEST_P(MittagLefflerOracle, Matches) {
  const auto c = GetParam();
  EXPECT_NEAR(mittag_leffler(c.alpha, c.z), c.value, 1e-12 * std::max(1.0, std::abs(c.value))) << c.alpha << " " << c.z;
}

INSTANTIATE_TEST_SUITE_P(Values, MittagLefflerOracle,
                         ::testing::Values(MlCase{0.5, -1.0, 0.4275835761558070044},
                                           MlCase{0.5, -3.0, 0.1790011511813899504},
                                           MlCase{0.75, -2.0, 0.2020784834129544543},
                                           MlCase{0.3, -4.0, 0.1665017443155166497},
                                           MlCase{1.5, -4.0, -0.2724248789099405415},
                                           MlCase{0.5, -7.0, 0.07980005432915293349},
                                           MlCase{0.5, -12.0, 0.04685422101489376262},
                                           MlCase{0.5, -20.0, 0.02817434874105131932},
                                           MlCase{0.5, -30.0, 0.01879588886141675150},
                                           MlCase{0.75, -12.0, 0.02508577770638487771},
                                           MlCase{0.3, -20.0, 0.03740622621388226359}));

TEST(MittagLeffler, ElementaryCases) {
  EXPECT_DOUBLE_EQ(mittag_leffler(0.7, 0.0), 1.0);
  for (double z : {-3.0, -0.5, 1.0, 4.0}) EXPECT_NEAR(mittag_leffler(1.0, z), std::exp(z), 1e-13 * std::exp(z));
  for (double x : {0.5, 1.5, 2.2}) EXPECT_NEAR(mittag_leffler(2.0, -x * x), std::cos(x), 1e-13);
  EXPECT_NEAR(mittag_leffler(2.0, -100.0), std::cos(10.0), 1e-14);
  EXPECT_NEAR(mittag_leffler(1.0, -40.0), std::exp(-40.0), 1e-30);
}

TEST(MittagLeffler, RejectsBadInput) {
  EXPECT_THROW(mittag_leffler(0.0, 1.0), std::domain_error);
  EXPECT_THROW(mittag_leffler(0.5, INFINITY), std::domain_error);
  EXPECT_THROW(mittag_leffler(1.0, 800.0), std::overflow_error);
}
