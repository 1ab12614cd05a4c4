#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "disagg/core/stats.hpp"
#include "disagg/simulate.hpp"

using namespace disagg;

namespace {

MixtureDensity case1() { return MixtureDensity::beta_two_component(0.8, 0.95, 3.0, 1.5, 2.0, 1.0); }

double autocov(const std::vector<double>& x, int h) {
  double s = 0.0;
  for (std::size_t i = 0; i + h < x.size(); ++i) s += x[i] * x[i + h];
  return s / static_cast<double>(x.size());
}

}  // namespace

TEST(Sampler, CompensatorSupport) {
  const CoefficientSampler s(MixtureDensity::compensator(0.1, 0.8));
  auto eng = rng::make_engine(1);
  for (int i = 0; i < 20000; ++i) {
    const double a = s(eng);
    EXPECT_GE(a, -0.8);
    EXPECT_LE(a, 0.0);
  }
}

TEST(Sampler, MeansMatchQuadrature) {
  for (const auto& m : {case1(), MixtureDensity::farima(0.25), MixtureDensity::beta_uniform(0.8, 0.9, 2.0, 1.2),
                        MixtureDensity::tabulated({-0.9, 0.0, 0.5, 0.99}, {0.5, 2.0, 0.0, 3.0})}) {
    const CoefficientSampler s(m);
    auto eng = rng::make_engine(99);
    const int draws = 100000;
    std::vector<double> v(draws);
    for (double& a : v) a = s(eng);
    const double mean = m.integrate_or_throw([](const Abscissa& a) { return a.x; }, "mean");
    const double second = m.integrate_or_throw([](const Abscissa& a) { return a.x * a.x; }, "second");
    const double se = std::sqrt((second - mean * mean) / draws);
    EXPECT_NEAR(stats::mean(v), mean, 3.0 * se) << m.describe();
    EXPECT_NEAR(stats::variance(v), second - mean * mean, 0.02 * (second - mean * mean)) << m.describe();
  }
}

TEST(Sampler, CdfAtQuartileOfUnboundedDensity) {
  // Empirical CDF of farima(0.1) draws at 0.01 against quadrature: tests the power-law edge cell.
  const auto m = MixtureDensity::farima(0.1);
  const CoefficientSampler s(m);
  auto eng = rng::make_engine(5);
  const int draws = 200000;
  int below = 0;
  for (int i = 0; i < draws; ++i) below += s(eng) < 0.01;
  const auto r = m.integrate_with_breaks(
      [](const Abscissa& a, double phi) { return a.x < 0.01 ? phi : 0.0; }, {0.01});
  ASSERT_TRUE(r.converged);
  const double p = r.value;
  EXPECT_NEAR(below / double(draws), p, 4.0 * std::sqrt(p * (1 - p) / draws));
}

TEST(Sampler, Deterministic) {
  const CoefficientSampler s(case1());
  auto e1 = rng::make_engine(7), e2 = rng::make_engine(7);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(s(e1), s(e2));
}

TEST(Ar1, ZeroCoefficientIsWhiteNoise) {
  PanelConfig c;
  c.n = 100000;
  c.sigma_eps = 2.0;
  auto eng = rng::make_engine(3);
  const auto y = ar1_path(0.0, c, eng);
  EXPECT_NEAR(autocov(y, 0), 4.0, 0.05);
  EXPECT_NEAR(autocov(y, 1) / autocov(y, 0), 0.0, 0.01);
}

TEST(Ar1, LagOneAutocorrelation) {
  PanelConfig c;
  c.n = 100000;
  auto eng = rng::make_engine(4);
  const auto y = ar1_path(0.9, c, eng);
  EXPECT_NEAR(autocov(y, 1) / autocov(y, 0), 0.9, 0.01);
}

TEST(Ar1, StationaryStart) {
  PanelConfig c;
  c.n = 8;
  const double a = 0.95;
  std::vector<double> first(10000);
  for (int r = 0; r < 10000; ++r) {
    auto eng = rng::make_engine(rng::derive_seed(11, r));
    first[r] = ar1_path(a, c, eng)[0];
  }
  const double target = 1.0 / (1.0 - a * a);
  // the sample variance of 1e4 Gaussians has relative s.d. sqrt(2/1e4) = 1.4%
  EXPECT_NEAR(stats::variance(first) / target, 1.0, 0.045);
  EXPECT_THROW(ar1_path(1.0, c, *std::make_unique<rng::Engine>(1)), DomainError);
}

TEST(Aggregate, SingleMemberEqualsPath) {
  PanelConfig c;
  c.N = 1;
  c.n = 50;
  c.seed = 17;
  const auto m = case1();
  const CoefficientSampler s(m);
  const auto x = aggregate(s, c, 1);
  auto eng = rng::make_engine(rng::derive_seed(17, 0));
  const double a = s(eng);
  const auto y = ar1_path(a, c, eng);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t t = 0; t < y.size(); ++t) EXPECT_EQ(x[t], y[t]);
}

TEST(Aggregate, IndependentOfThreadCount) {
  PanelConfig c;
  c.N = 300;
  c.n = 200;
  const CoefficientSampler s(case1());
  const auto a = aggregate(s, c, 1);
  const auto b = aggregate(s, c, 3);
  EXPECT_EQ(a.values, b.values);
}

TEST(Aggregate, MomentsMatchCovariance) {
  // A mixture with light tails at +-1. Lag 0 is held to 5%; lag 2, whose relative sampling
  // error at n = 5000 is near 8%, to three standard errors of the replicate spread.
  const auto m = MixtureDensity::beta_two_component(0.9, 0.5, 3.0, 3.0, 2.0, 2.0);
  const CoefficientSampler sampler(m);
  std::vector<double> r0, r2;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    PanelConfig c;
    c.N = 5000;
    c.n = 5000;
    c.seed = seed;
    const auto x = aggregate(sampler, c);
    EXPECT_EQ(x.meta.source, SeriesSource::panel);
    r0.push_back(autocov(x.values, 0) / covariance(m, 0));
    r2.push_back(autocov(x.values, 2) / covariance(m, 2));
  }
  EXPECT_NEAR(stats::mean(r0), 1.0, 0.05);
  EXPECT_NEAR(stats::mean(r2), 1.0, 3.0 * std::sqrt(stats::variance(r2) / 4.0));
}

TEST(Aggregate, HeavyTailedCaseWithinMonteCarloSpread) {
  // Case 1 puts density (1 - x)^0.5 at 1, so 1/(1 - a^2) has tail index 1.5 and panel
  // variances fluctuate by O(N^-1/3); checked with a correspondingly wider band.
  PanelConfig c;
  c.N = 5000;
  c.n = 5000;
  c.seed = 2024;
  const auto m = case1();
  const auto x = aggregate(m, c);
  EXPECT_NEAR(autocov(x.values, 0) / covariance(m, 0), 1.0, 0.25);
  EXPECT_NEAR(autocov(x.values, 2) / covariance(m, 2), 1.0, 0.25);
}

TEST(Synthesis, SingleDraw) {
  const auto m = case1();
  const auto x = gaussian_synthesis(m, 1, 1.0, 5);
  ASSERT_EQ(x.size(), 1u);
  rng::Normal z(5);
  EXPECT_DOUBLE_EQ(x[0], std::sqrt(covariance(m, 0)) * z());
}

TEST(Synthesis, DeterministicAndCirculant) {
  const auto m = case1();
  const auto synth = make_synthesizer(m, 5000, 1.0);
  EXPECT_EQ(synth.method(), SynthesisMethod::circulant);
  EXPECT_EQ(synth.sample(9), synth.sample(9));
  EXPECT_NE(synth.sample(9), synth.sample(10));
}

TEST(Synthesis, AutocovarianceMatches) {
  const auto m = case1();
  const long n = 2048;
  const int reps = 200;
  const auto synth = make_synthesizer(m, n, 1.0);
  const auto sigma = covariances(m, 5);
  for (int h = 0; h <= 5; ++h) {
    std::vector<double> est(reps);
    for (int r = 0; r < reps; ++r) est[r] = autocov(synth.sample(rng::derive_seed(77, r)), h);
    const double expected = sigma[h] * (1.0 - double(h) / n);
    const double se = std::sqrt(stats::variance(est) / reps);
    EXPECT_NEAR(stats::mean(est), expected, 3.0 * se) << "h=" << h;
  }
}

TEST(Synthesis, CholeskyFallback) {
  // The size-4 circulant embedding of (1, 0.5, -0.4) has eigenvalue -0.4, the Toeplitz matrix is PD.
  const GaussianSynthesizer synth(std::vector<double>{1.0, 0.5, -0.4});
  EXPECT_EQ(synth.method(), SynthesisMethod::cholesky);
  double s00 = 0, s02 = 0;
  const int reps = 40000;
  for (int r = 0; r < reps; ++r) {
    const auto x = synth.sample(r);
    s00 += x[0] * x[0];
    s02 += x[0] * x[2];
  }
  EXPECT_NEAR(s00 / reps, 1.0, 0.03);
  EXPECT_NEAR(s02 / reps, -0.4, 0.03);
  EXPECT_THROW(GaussianSynthesizer(std::vector<double>{1.0, 0.9, -0.9}), Error);
}

TEST(SeriesCsv, RoundTrip) {
  const auto x = gaussian_synthesis(case1(), 64, 1.0, 123);
  std::stringstream ss;
  write_series_csv(ss, x);
  EXPECT_NE(ss.str().find("# mixture: beta_two_component"), std::string::npos);
  const auto y = read_series_csv(ss);
  EXPECT_EQ(y.values, x.values);
  EXPECT_EQ(y.meta.seed, 123u);
  EXPECT_EQ(y.meta.N, 0);
  EXPECT_EQ(y.meta.source, SeriesSource::synthesis);
  EXPECT_EQ(y.meta.method, "circulant");
}
