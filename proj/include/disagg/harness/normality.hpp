#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "disagg/core/error.hpp"
#include "disagg/core/special.hpp"

namespace disagg::harness {

struct ShapiroWilk {
  double w;
  double p;
};

namespace detail {

inline double poly(const double* c, int nord, double x) {
  double r = c[nord - 1];
  for (int i = nord - 2; i >= 0; --i) r = r * x + c[i];
  return r;
}

}  // namespace detail

/// Shapiro-Wilk W and its p-value, following Royston's AS R94 (complete samples only).
inline ShapiroWilk shapiro_wilk(std::vector<double> x) {
  const int n = static_cast<int>(x.size());
  if (n < 3 || n > 5000) throw DomainError("shapiro_wilk: need 3 <= n <= 5000");
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (!(range > 1e-19 * std::max(1.0, std::abs(x.front())))) {
    throw Error(ErrorCode::degenerate_sample, "shapiro_wilk: sample has zero range");
  }

  static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static constexpr double c3[] = {0.5440, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
  static constexpr double g[] = {-2.273, 0.459};

  const int nn2 = n / 2;
  const double an = n;
  std::vector<double> a(nn2);
  if (n == 3) {
    a[0] = std::sqrt(0.5);
  } else {
    const double an25 = an + 0.25;
    double summ2 = 0.0;
    for (int i = 0; i < nn2; ++i) {
      a[i] = special::normal_quantile((i + 1 - 0.375) / an25);
      summ2 += a[i] * a[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = detail::poly(c1, 6, rsn) - a[0] / ssumm2;
    int i1;
    double fac;
    if (n > 5) {
      i1 = 2;
      const double a2 = -a[1] / ssumm2 + detail::poly(c2, 6, rsn);
      fac = std::sqrt((summ2 - 2.0 * a[0] * a[0] - 2.0 * a[1] * a[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
    } else {
      i1 = 1;
      fac = std::sqrt((summ2 - 2.0 * a[0] * a[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (int i = i1; i < nn2; ++i) a[i] = -a[i] / fac;
  }

  // W from range-scaled, centred data.
  double mean = 0.0;
  for (double v : x) mean += v / range;
  mean /= an;
  double ssq = 0.0, num = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = x[i] / range - mean;
    ssq += d * d;
  }
  for (int i = 0; i < nn2; ++i) num += a[i] * (x[n - 1 - i] - x[i]) / range;
  double w = num * num / ssq;
  w = std::min(w, 1.0);
  const double w1 = 1.0 - w;

  if (n == 3) {
    constexpr double pi6 = 1.909859, stqr = 1.047198;
    return {w, std::max(pi6 * (std::asin(std::sqrt(w)) - stqr), 0.0)};
  }
  if (w1 <= 0.0) return {w, 1.0};
  double y = std::log(w1);
  const double xx = std::log(an);
  double m, s;
  if (n <= 11) {
    const double gamma = detail::poly(g, 2, an);
    if (y >= gamma) return {w, 1e-19};
    y = -std::log(gamma - y);
    m = detail::poly(c3, 4, an);
    s = std::exp(detail::poly(c4, 4, an));
  } else {
    m = detail::poly(c5, 4, xx);
    s = std::exp(detail::poly(c6, 3, xx));
  }
  return {w, special::normal_upper_tail((y - m) / s)};
}

/// (standard-normal quantile of (i - 3/8) / (M + 1/4), i-th order statistic), i = 1..M.
inline std::vector<std::pair<double, double>> qq_data(std::vector<double> samples) {
  if (samples.size() < 3) throw DomainError("qq_data: need at least 3 samples");
  std::sort(samples.begin(), samples.end());
  const double M = static_cast<double>(samples.size());
  std::vector<std::pair<double, double>> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out[i] = {special::normal_quantile((i + 1 - 0.375) / (M + 0.25)), samples[i]};
  }
  return out;
}

struct HistogramBin {
  double lo, hi;
  long count;
};

/// Equal-width bins over [min, max]; Sturges' rule when bins = 0.
inline std::vector<HistogramBin> histogram(const std::vector<double>& samples, int bins = 0) {
  if (samples.empty()) throw DomainError("histogram: empty sample");
  if (bins <= 0) bins = static_cast<int>(std::ceil(std::log2(static_cast<double>(samples.size())))) + 1;
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / bins;
  std::vector<HistogramBin> out(bins);
  for (int b = 0; b < bins; ++b) out[b] = {lo + b * width, b + 1 == bins ? hi : lo + (b + 1) * width, 0};
  for (double v : samples) {
    const int b = std::min(bins - 1, static_cast<int>((v - lo) / width));
    ++out[b].count;
  }
  return out;
}

}  // namespace disagg::harness
