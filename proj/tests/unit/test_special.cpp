#include <cmath>

#include <gtest/gtest.h>

#include "disagg/core/rng.hpp"
#include "disagg/core/special.hpp"
#include "disagg/core/stats.hpp"

using namespace disagg;

TEST(Special, GammaMatchesStdOnWideRange) {
  for (double x = 0.05; x < 30.0; x += 0.137) {
    EXPECT_NEAR(special::gamma(x) / std::tgamma(x), 1.0, 1e-12) << x;
    EXPECT_NEAR(special::log_gamma(x), std::lgamma(x), 1e-12 * std::max(1.0, std::abs(std::lgamma(x))));
  }
}

TEST(Special, GammaReflectionForNegativeArguments) {
  for (double x : {-0.3, -1.5, -2.75}) EXPECT_NEAR(special::gamma(x) / std::tgamma(x), 1.0, 1e-12);
}

TEST(Special, KnownValues) {
  EXPECT_NEAR(special::gamma(0.5), std::sqrt(std::numbers::pi), 1e-14);
  EXPECT_NEAR(special::beta(3.0, 1.5), 16.0 / 105.0, 1e-14);
}

TEST(Special, NormalQuantileInvertsCdf) {
  for (double p : {1e-10, 1e-4, 0.025, 0.3, 0.5, 0.8, 0.975, 1.0 - 1e-9}) {
    EXPECT_NEAR(special::normal_cdf(special::normal_quantile(p)), p, 1e-14 + 1e-12 * p);
  }
  EXPECT_NEAR(special::normal_quantile(0.975), 1.959963984540054, 1e-13);
}

TEST(Rng, DerivedSeedsAreDistinctAndStable) {
  EXPECT_EQ(rng::derive_seed(7, 3), rng::derive_seed(7, 3));
  EXPECT_NE(rng::derive_seed(7, 3), rng::derive_seed(7, 4));
  EXPECT_NE(rng::derive_seed(7, 3), rng::derive_seed(8, 3));
  rng::Normal a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Stats, QuantilesAndFit) {
  std::vector<double> v{4, 1, 3, 2, 5};
  EXPECT_DOUBLE_EQ(stats::quantile(v, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(stats::quantile(v, 0.25), 2.0);
  EXPECT_DOUBLE_EQ(stats::mean(v), 3.0);
  EXPECT_DOUBLE_EQ(stats::variance(v), 2.5);
  const auto fit = stats::least_squares(std::vector<double>{1, 2, 3, 4}, std::vector<double>{3, 5, 7, 9});
  EXPECT_NEAR(fit.slope, 2.0, 1e-14);
  EXPECT_NEAR(fit.intercept, 1.0, 1e-14);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-14);
}
