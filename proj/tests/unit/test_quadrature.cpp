#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "disagg/core/fft.hpp"
#include "disagg/core/quadrature.hpp"

using namespace disagg;

TEST(TanhSinh, SmoothIntegrand) {
  const auto r = quad::tanh_sinh([](double x) { return std::exp(x); }, 0.0, 1.0);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, std::numbers::e - 1.0, 1e-14);
}

TEST(TanhSinh, EndpointPowerSingularitiesUseEdgeDistances) {
  // int_0^1 x^-0.75 (1-x)^-0.5 dx = B(0.25, 0.5)
  const auto r = quad::tanh_sinh(
      [](const quad::EdgePoint& p) { return std::pow(p.from_lo, -0.75) * std::pow(p.to_hi, -0.5); },
      0.0, 1.0);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, special::beta(0.25, 0.5), 1e-11);
}

TEST(TanhSinh, LogSingularity) {
  const double v = quad::integrate_or_throw([](const quad::EdgePoint& p) { return std::log(p.from_lo); },
                                            0.0, 1.0, "log");
  EXPECT_NEAR(v, -1.0, 1e-13);
}

TEST(TanhSinh, NonFiniteIntegrandThrows) {
  EXPECT_THROW(quad::tanh_sinh([](double) { return std::nan(""); }, 0.0, 1.0), QuadratureError);
}

TEST(GaussJacobi, IntegratesPolynomialsExactly) {
  for (double a : {-0.5, 0.0, 0.6, 2.3}) {
    const auto rule = quad::gauss_jacobi(12, a, a);
    double mass = 0.0, second = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      mass += rule.weights[i];
      second += rule.weights[i] * rule.nodes[i] * rule.nodes[i];
    }
    // int (1-x^2)^a dx = B(1/2, a+1); second moment = B(3/2, a+1)
    EXPECT_NEAR(mass, special::beta(0.5, a + 1.0), 1e-13);
    EXPECT_NEAR(second, special::beta(1.5, a + 1.0), 1e-13);
  }
}

TEST(GaussJacobi, AsymmetricWeight) {
  const auto rule = quad::gauss_jacobi(20, 0.3, -0.4);
  double mass = 0.0;
  for (double w : rule.weights) mass += w;
  // int (1-x)^a (1+x)^b = 2^(a+b+1) B(a+1, b+1)
  EXPECT_NEAR(mass, std::pow(2.0, 0.9) * special::beta(1.3, 0.6), 1e-12);
}

TEST(GaussLegendre, MapsInterval) {
  const auto rule = quad::gauss_legendre(10, 1.0, 3.0);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * std::pow(rule.nodes[i], 5);
  EXPECT_NEAR(s, (std::pow(3.0, 6) - 1.0) / 6.0, 1e-10);
}

TEST(Fft, RoundTrip) {
  const int n = 30;
  std::vector<std::complex<double>> x(n), y(n), z(n);
  for (int i = 0; i < n; ++i) x[i] = {std::sin(0.3 * i), std::cos(1.7 * i)};
  fft::Plan fwd(n, fft::Direction::forward), bwd(n, fft::Direction::backward);
  fwd.execute(x, y);
  bwd.execute(y, z);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(std::abs(z[i] / double(n) - x[i]), 0.0, 1e-13);
  // DC bin is the plain sum
  std::complex<double> s = 0.0;
  for (auto v : x) s += v;
  EXPECT_NEAR(std::abs(y[0] - s), 0.0, 1e-12);
}
