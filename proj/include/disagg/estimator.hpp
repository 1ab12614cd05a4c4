#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "disagg/core/error.hpp"
#include "disagg/core/fft.hpp"
#include "disagg/core/quadrature.hpp"
#include "disagg/gegenbauer.hpp"
#include "disagg/simulate.hpp"

namespace disagg {

/// (2 log(1 + sqrt 2))^-1, the admissible bound on the truncation exponent.
inline const double gamma_max = 1.0 / (2.0 * std::log(1.0 + std::numbers::sqrt2));

/// sigma_hat(j) = n^-1 sum_{i=1}^{n-j} X_i X_{i+j}.
inline double sample_autocov(std::span<const double> x, long j) {
  const long n = static_cast<long>(x.size());
  if (j < 0 || j >= n) throw DomainError("sample_autocov: need 0 <= j < n");
  double s = 0.0;
  for (long i = 0; i + j < n; ++i) s += x[i] * x[i + j];
  return s / static_cast<double>(n);
}

inline double sample_autocov(const AggregatedSeries& s, long j) { return sample_autocov(s.values, j); }

/// sigma_hat(0..max_lag).
inline std::vector<double> autocovariances(std::span<const double> x, long max_lag) {
  std::vector<double> out(max_lag + 1);
  for (long j = 0; j <= max_lag; ++j) out[j] = sample_autocov(x, j);
  return out;
}

/// sigma_hat(0) - sigma_hat(2); may be nonpositive on degenerate samples.
inline double sigma_eps2_hat(std::span<const double> x) {
  if (x.size() < 3) throw DomainError("sigma_eps2_hat: need n >= 3");
  return sample_autocov(x, 0) - sample_autocov(x, 2);
}

inline double sigma_eps2_hat(const AggregatedSeries& s) { return sigma_eps2_hat(s.values); }

/// floor(gamma * log_n); a relative guard of 1e-12 keeps exact products such as
/// 0.3 * 10 from rounding down.
inline int truncation_Kn_from_log(double log_n, double gamma) {
  if (!(gamma > 0.0 && gamma < gamma_max)) {
    throw DomainError("truncation_Kn: gamma must lie in (0, " + std::to_string(gamma_max) + ")");
  }
  const double v = gamma * log_n;
  return static_cast<int>(std::floor(v + 1e-12 * std::max(1.0, std::abs(v))));
}

inline int truncation_Kn(long n, double gamma) {
  if (n < 2) throw DomainError("truncation_Kn: need n >= 2");
  return truncation_Kn_from_log(std::log(static_cast<double>(n)), gamma);
}

/// zeta_hat_k = sum_{j<=k} g_{k,j} (sigma_hat(j) - sigma_hat(j+2)), from sample
/// autocovariances sigma_hat(0..k+2).
inline double zeta_hat(std::span<const double> autocov, const GegenbauerBasis& basis, int k) {
  if (k < 0 || k > basis.max_degree()) throw DomainError("zeta_hat: degree outside the basis");
  if (static_cast<long>(autocov.size()) < k + 3) throw DomainError("zeta_hat: need sigma_hat up to lag k+2");
  double z = 0.0;
  for (int j = 0; j <= k; ++j) z += basis.coefficient(k, j) * (autocov[j] - autocov[j + 2]);
  return z;
}

inline double zeta_hat(const AggregatedSeries& s, const GegenbauerBasis& basis, int k) {
  if (static_cast<long>(s.size()) <= k + 2) throw DomainError("zeta_hat: series shorter than k+3");
  return zeta_hat(autocovariances(s.values, k + 2), basis, k);
}

/// Population coefficient zeta_k = int phi(x) G_k(x) dx, the limit of zeta_hat_k / sigma_eps2.
inline double population_zeta(const MixtureDensity& m, const GegenbauerBasis& basis, int k) {
  return m.integrate_or_throw([&](const Abscissa& a) { return basis.evaluate(k, a.x); }, "population_zeta");
}

inline double alpha_rule(double d) {
  if (!(d > 0.0 && d < 0.5)) throw DomainError("alpha_rule: d must lie in (0, 1/2)");
  return 1.0 - 2.0 * d;
}

struct EstimatorConfig {
  double alpha = 0.5;
  double gamma = 0.41;
  std::optional<int> kn;
  std::optional<double> d;
  bool use_alpha_rule = true;  // alpha := 1 - 2d when d is given
  bool clip = false;           // visualization-only truncate-and-renormalize

  double effective_alpha() const { return use_alpha_rule && d ? alpha_rule(*d) : alpha; }

  int effective_kn(long n) const { return kn ? *kn : truncation_Kn(n, gamma); }

  /// Violations of the parameter region of the asymptotic normality result; empty when
  /// d is unknown or everything holds. These are advisory.
  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (!(gamma > 0.0 && gamma < gamma_max)) w.push_back("gamma outside (0, (2 log(1+sqrt 2))^-1)");
    if (!d) return w;
    const double a = effective_alpha();
    if (!(a > -0.5 && a < 2.5 - 4.0 * *d)) w.push_back("alpha outside (-1/2, 5/2 - 4d)");
    const double bound = gamma_max * (1.0 - std::max(a + 4.0 * *d - 1.5, 0.0));
    if (!kn && !(gamma < bound)) w.push_back("gamma exceeds the bound for this (alpha, d)");
    return w;
  }
};

/// The estimate phi_hat(x) = sigma_eps2_hat^-1 (1 - x^2)^alpha sum_{k<=Kn} zeta_hat_k G_k(x).
class MixtureEstimate {
 public:
  static constexpr int grid_size = 512;

  MixtureEstimate(std::shared_ptr<const GegenbauerBasis> basis, double gamma, std::vector<double> autocov,
                  std::vector<double> zeta, double sigma_eps2)
      : basis_(std::move(basis)), gamma_(gamma), autocov_(std::move(autocov)), zeta_(std::move(zeta)),
        sigma_eps2_(sigma_eps2) {}

  double alpha() const noexcept { return basis_->alpha(); }
  int kn() const noexcept { return basis_->max_degree(); }
  double gamma() const noexcept { return gamma_; }
  const std::vector<double>& zeta_hat() const noexcept { return zeta_; }
  const std::vector<double>& autocov() const noexcept { return autocov_; }
  double sigma_eps2_hat() const noexcept { return sigma_eps2_; }
  const GegenbauerBasis& basis() const noexcept { return *basis_; }

  /// sum_k zeta_hat_k G_k(x) / sigma_eps2_hat, the polynomial factor.
  double polynomial(double x) const {
    double s = 0.0;
    for (int k = 0; k <= kn(); ++k) s += zeta_[k] * basis_->evaluate(k, x);
    return s / sigma_eps2_;
  }

  double operator()(double x) const {
    if (!(x > -1.0 && x < 1.0)) return 0.0;
    return std::pow((1.0 - x) * (1.0 + x), alpha()) * polynomial(x);
  }

  /// Integral over (-1, 1); exact up to rounding for the polynomial-times-weight form.
  double mass() const {
    const auto rule = quad::gauss_jacobi(kn() / 2 + 2, alpha(), alpha());
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * polynomial(rule.nodes[i]);
    return s;
  }

  /// 512 Chebyshev points cos(pi (i + 1/2) / 512), ascending.
  static std::vector<double> grid() {
    std::vector<double> g(grid_size);
    for (int i = 0; i < grid_size; ++i) g[i] = -std::cos(std::numbers::pi * (i + 0.5) / grid_size);
    return g;
  }

  std::vector<double> evaluate(const std::vector<double>& xs) const {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = (*this)(xs[i]);
    return out;
  }

  /// max(phi_hat, 0) rescaled to unit mass. For display only; not an estimator property.
  std::vector<double> clipped(const std::vector<double>& xs) const {
    // Integrate the smooth positive parts between sign changes of the polynomial factor.
    constexpr int scan = 4096;
    std::vector<double> breaks{-1.0};
    auto p = [this](double x) { return polynomial(x); };
    double prev_x = -1.0, prev_p = p(-1.0);
    for (int i = 1; i <= scan; ++i) {
      const double x = -std::cos(std::numbers::pi * i / scan);
      const double px = p(x);
      if ((prev_p < 0.0) != (px < 0.0)) {
        double lo = prev_x, hi = x;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          ((p(mid) < 0.0) == (prev_p < 0.0) ? lo : hi) = mid;
        }
        breaks.push_back(0.5 * (lo + hi));
      }
      prev_x = x;
      prev_p = px;
    }
    breaks.push_back(1.0);
    double z = 0.0;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
      if (p(0.5 * (breaks[k] + breaks[k + 1])) <= 0.0) continue;
      z += quad::integrate_or_throw([this](double x) { return (*this)(x); }, breaks[k], breaks[k + 1],
                                    "MixtureEstimate::clipped", quad::Options{1e-10, 1e-15, 3, 12});
    }
    if (!(z > 0.0)) throw Error(ErrorCode::degenerate_sample, "MixtureEstimate::clipped: no positive part");
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = std::max((*this)(xs[i]), 0.0) / z;
    return out;
  }

 private:
  std::shared_ptr<const GegenbauerBasis> basis_;
  double gamma_;
  std::vector<double> autocov_;
  std::vector<double> zeta_;
  double sigma_eps2_;
};

/// Estimate from sample autocovariances sigma_hat(0..Kn+2) of a series of length n.
inline MixtureEstimate estimate_from_autocov(std::vector<double> autocov, std::shared_ptr<const GegenbauerBasis> basis,
                                             double gamma) {
  const int kn = basis->max_degree();
  if (static_cast<int>(autocov.size()) < kn + 3) throw DomainError("estimate: need sigma_hat up to lag Kn+2");
  autocov.resize(kn + 3);
  const double s2 = autocov[0] - autocov[2];
  if (!(s2 > 0.0)) {
    throw DegenerateSampleError("estimate: sigma_eps2_hat = sigma_hat(0) - sigma_hat(2) is not positive", s2);
  }
  std::vector<double> zeta(kn + 1);
  for (int k = 0; k <= kn; ++k) zeta[k] = zeta_hat(autocov, *basis, k);
  return MixtureEstimate(std::move(basis), gamma, std::move(autocov), std::move(zeta), s2);
}

inline MixtureEstimate estimate(std::span<const double> x, const EstimatorConfig& config) {
  const long n = static_cast<long>(x.size());
  if (n < 3) throw DomainError("estimate: series too short");
  const int kn = config.effective_kn(n);
  if (kn < 0) throw DomainError("estimate: Kn must be >= 0");
  if (kn + 2 >= n) throw DomainError("estimate: need Kn + 2 < n");
  auto basis = std::make_shared<const GegenbauerBasis>(config.effective_alpha(), kn);
  return estimate_from_autocov(autocovariances(x, kn + 2), std::move(basis), config.gamma);
}

inline MixtureEstimate estimate(const AggregatedSeries& s, const EstimatorConfig& config) {
  return estimate(s.values, config);
}

// ---------------------------------------------------------------------------------------------
// Spectral representation
// ---------------------------------------------------------------------------------------------

/// I_n(lambda) = (2 pi n)^-1 |sum_{j=1}^n X_j e^{i j lambda}|^2.
inline double periodogram(std::span<const double> x, double lambda) {
  std::complex<double> s = 0.0;
  const std::complex<double> step = std::polar(1.0, lambda);
  std::complex<double> e = step;
  for (std::size_t j = 0; j < x.size(); ++j) {
    s += x[j] * e;
    e *= step;
    if ((j & 63U) == 63U) e = std::polar(1.0, lambda * static_cast<double>(j + 2));
  }
  return std::norm(s) / (2.0 * std::numbers::pi * static_cast<double>(x.size()));
}

/// I_n at lambda_k = 2 pi k / m, k = 0..m-1 (m >= n), by one FFT.
inline std::vector<double> periodogram_grid(std::span<const double> x, std::size_t m) {
  if (m < x.size()) throw DomainError("periodogram_grid: need m >= n");
  std::vector<std::complex<double>> in(m, 0.0), out(m);
  for (std::size_t j = 0; j < x.size(); ++j) in[j] = x[j];
  fft::Plan(m, fft::Direction::forward).execute(in, out);
  std::vector<double> p(m);
  const double scale = 1.0 / (2.0 * std::numbers::pi * static_cast<double>(x.size()));
  // |sum_{j>=1} X_j e^{i j l}| equals the modulus of the 0-based forward transform.
  for (std::size_t k = 0; k < m; ++k) p[k] = std::norm(out[k]) * scale;
  return p;
}

/// eta_n(lambda; x) = (1 - x^2)^alpha sum_k G_k(x) sum_{j<=k} g_{k,j} (e^{i lambda j} - e^{i lambda (j+2)}).
inline std::complex<double> kernel_eta(const GegenbauerBasis& basis, int kn, double lambda, double x) {
  if (kn < 0 || kn > basis.max_degree()) throw DomainError("kernel_eta: Kn outside the basis");
  std::complex<double> total = 0.0;
  for (int k = 0; k <= kn; ++k) {
    std::complex<double> inner = 0.0;
    for (int j = 0; j <= k; ++j) {
      inner += basis.coefficient(k, j) * (std::polar(1.0, lambda * j) - std::polar(1.0, lambda * (j + 2)));
    }
    total += basis.evaluate(k, x) * inner;
  }
  return std::pow((1.0 - x) * (1.0 + x), basis.alpha()) * total;
}

/// The same kernel as (1 - e^{2 i lambda}) (1 - x^2)^alpha sum_k G_k(x) G_k(e^{i lambda}).
inline std::complex<double> kernel_eta_factored(const GegenbauerBasis& basis, int kn, double lambda, double x) {
  if (kn < 0 || kn > basis.max_degree()) throw DomainError("kernel_eta: Kn outside the basis");
  const std::complex<double> z = std::polar(1.0, lambda);
  std::complex<double> total = 0.0;
  for (int k = 0; k <= kn; ++k) total += basis.evaluate(k, x) * basis.evaluate(k, z);
  return (1.0 - z * z) * std::pow((1.0 - x) * (1.0 + x), basis.alpha()) * total;
}

/// sigma_eps2_hat^-1 int_{-pi}^{pi} eta_n(lambda; x) I_n(lambda) d lambda. The integrand is a
/// trigonometric polynomial of degree <= n + Kn + 1, so the periodic trapezoid rule on
/// m > n + Kn + 2 points is exact.
class SpectralFormEstimator {
 public:
  SpectralFormEstimator(std::span<const double> x, std::shared_ptr<const GegenbauerBasis> basis)
      : basis_(std::move(basis)) {
    const std::size_t n = x.size();
    if (n < 3) throw DomainError("SpectralFormEstimator: series too short");
    std::size_t m = 1;
    while (m <= n + basis_->max_degree() + 2) m <<= 1;
    lambda_.resize(m);
    for (std::size_t k = 0; k < m; ++k) lambda_[k] = 2.0 * std::numbers::pi * static_cast<double>(k) / m;
    pgram_ = periodogram_grid(x, m);
    sigma_eps2_ = sigma_eps2_hat(x);
    if (!(sigma_eps2_ > 0.0)) throw DegenerateSampleError("SpectralFormEstimator: sigma_eps2_hat <= 0", sigma_eps2_);
  }

  double operator()(double x) const {
    const int kn = basis_->max_degree();
    std::complex<double> s = 0.0;
    for (std::size_t k = 0; k < lambda_.size(); ++k) s += kernel_eta(*basis_, kn, lambda_[k], x) * pgram_[k];
    return (2.0 * std::numbers::pi / static_cast<double>(lambda_.size())) * s.real() / sigma_eps2_;
  }

  std::size_t nodes() const noexcept { return lambda_.size(); }

 private:
  std::shared_ptr<const GegenbauerBasis> basis_;
  std::vector<double> lambda_;
  std::vector<double> pgram_;
  double sigma_eps2_;
};

/// max over lambda_grid of |eta_n(lambda; x)| |lambda|^((2 alpha - 3) / 4).
inline double kernel_sup(const GegenbauerBasis& basis, int kn, double x, const std::vector<double>& lambda_grid) {
  const double p = (2.0 * basis.alpha() - 3.0) / 4.0;
  double best = 0.0;
  for (double l : lambda_grid) {
    if (l == 0.0) continue;
    best = std::max(best, std::abs(kernel_eta(basis, kn, l, x)) * std::pow(std::abs(l), p));
  }
  return best;
}

}  // namespace disagg
