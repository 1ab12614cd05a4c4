#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "disagg/core/error.hpp"
#include "disagg/core/fft.hpp"
#include "disagg/core/quadrature.hpp"
#include "disagg/core/stats.hpp"
#include "disagg/mixture.hpp"

namespace disagg {

/// Wold coefficients of a long-memory series whose spectral density factors as
/// f(lambda; d) g(lambda): psi = h * g with h the FARIMA part and g the analytic part.
struct MACoefficients {
  std::vector<double> psi;
  std::vector<double> h;
  std::vector<double> g;
  double sigma2 = 1.0;    // innovation variance of the full process
  double sigma_g2 = 1.0;  // innovation variance of the analytic factor
  double d = 0.0;
};

/// h_j = Gamma(j + d) / (Gamma(j + 1) Gamma(d)) for j = 0..J.
inline std::vector<double> farima_h(double d, int J) {
  if (!(d > 0.0 && d < 0.5)) throw DomainError("farima_h: d must lie in (0, 1/2)");
  if (J < 0) throw DomainError("farima_h: J must be nonnegative");
  std::vector<double> h(J + 1);
  h[0] = 1.0;
  for (int j = 1; j <= J; ++j) h[j] = h[j - 1] * (j - 1 + d) / j;
  return h;
}

struct CepstralFactor {
  std::vector<double> g;          // g_0 = 1
  double sigma_g2 = 0.0;          // 2 pi exp(c_0)
  std::vector<double> cepstrum;   // c_0..c_J
};

/// Causal factor of a positive smooth spectral density: g(lambda) = (sigma_g2 / 2 pi) |sum g_j e^{ij lambda}|^2.
/// log g is sampled at 2^grid_log2 frequencies; the one-sided cepstrum is exponentiated
/// through j g_j = sum_{k=1}^j k c_k g_{j-k}.
inline CepstralFactor cepstral_g(const SpectralDensity& f, int J, int grid_log2 = 14) {
  const std::size_t M = std::size_t{1} << grid_log2;
  if (J < 0 || static_cast<std::size_t>(J) >= M / 2) throw DomainError("cepstral_g: need 0 <= J < grid/2");
  std::vector<std::complex<double>> logf(M);
  for (std::size_t k = 0; k <= M / 2; ++k) {
    const double v = f(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(M));
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DomainError("cepstral_g: spectral density not positive and finite on the grid");
    }
    logf[k] = std::log(v);
    if (k > 0 && k < M / 2) logf[M - k] = logf[k];
  }
  std::vector<std::complex<double>> c;
  fft::Plan(M, fft::Direction::forward).execute(logf, c);
  CepstralFactor out;
  out.cepstrum.resize(J + 1);
  for (int k = 0; k <= J; ++k) out.cepstrum[k] = c[k].real() / static_cast<double>(M);
  out.sigma_g2 = 2.0 * std::numbers::pi * std::exp(out.cepstrum[0]);
  out.g.assign(J + 1, 0.0);
  out.g[0] = 1.0;
  for (int j = 1; j <= J; ++j) {
    double s = 0.0;
    for (int k = 1; k <= j; ++k) s += k * out.cepstrum[k] * out.g[j - k];
    out.g[j] = s / j;
  }
  return out;
}

/// Convolution of h and g rescaled so that psi_0 = 1.
inline std::vector<double> compose_psi(const std::vector<double>& h, const std::vector<double>& g) {
  if (h.size() != g.size() || h.empty()) throw DomainError("compose_psi: need equal nonempty inputs");
  const std::size_t n = h.size();
  std::vector<double> psi(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j <= k; ++j) s += h[k - j] * g[j];
    psi[k] = s;
  }
  if (psi[0] == 0.0) throw DomainError("compose_psi: zeroth coefficient vanishes");
  const double p0 = psi[0];
  for (double& v : psi) v /= p0;
  return psi;
}

/// Kolmogorov's formula sigma^2 = 2 pi exp{(2 pi)^-1 int log f}. f is taken even; on
/// (0, lambda0] the substitution lambda = lambda0 e^-u absorbs a power singularity at 0.
inline double innovation_variance(const SpectralDensity& f, double rel_tol = 1e-13) {
  constexpr double lambda0 = 0.5;
  const quad::Options opt{rel_tol, 1e-300, 3, 12};
  auto logf = [&](double l) {
    const double v = f(l);
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw QuadratureError("innovation_variance: log f diverges (f = " + std::to_string(v) + ")", v);
    }
    return std::log(v);
  };
  const double outer = quad::integrate_or_throw(logf, lambda0, std::numbers::pi, "innovation_variance", opt);
  // e^-u underflows the relevant scale well before u = 60.
  const double inner = quad::integrate_or_throw(
      [&](double u) {
        const double s = lambda0 * std::exp(-u);
        return logf(s) * s;
      },
      0.0, 60.0, "innovation_variance: near zero", opt);
  return 2.0 * std::numbers::pi * std::exp((outer + inner) / std::numbers::pi);
}

struct TailCheck {
  double psi_exponent = 0.0;    // slope of log |psi_j| on log j over the last decade
  double diff_exponent = 0.0;   // slope of log |psi_j - psi_{j+1}|
  double energy_increment = 0.0;  // sum of psi_j^2 over the last decade
  bool psi_ok = false;          // |psi_exponent - (d - 1)| <= 0.05
  bool diff_ok = false;         // diff_exponent <= d - 2 + 0.1
  bool passed() const noexcept { return psi_ok && diff_ok; }
};

inline TailCheck tail_check(const std::vector<double>& psi, double d) {
  if (psi.size() < 100) throw DomainError("tail_check: need at least 100 coefficients");
  const std::size_t last = psi.size() - 1;
  const std::size_t first = std::max<std::size_t>(1, psi.size() / 10);
  std::vector<double> lj, lp, ljd, ld;
  TailCheck t;
  for (std::size_t j = first; j <= last; ++j) {
    t.energy_increment += psi[j] * psi[j];
    if (psi[j] != 0.0) {
      lj.push_back(std::log(static_cast<double>(j)));
      lp.push_back(std::log(std::abs(psi[j])));
    }
    if (j < last) {
      const double diff = std::abs(psi[j] - psi[j + 1]);
      if (diff > 0.0) {
        ljd.push_back(std::log(static_cast<double>(j)));
        ld.push_back(std::log(diff));
      }
    }
  }
  // A sequence that has underflowed to zero has no power law; report -inf.
  t.psi_exponent = lj.size() >= 2 ? stats::least_squares(lj, lp).slope : -HUGE_VAL;
  t.diff_exponent = ljd.size() >= 2 ? stats::least_squares(ljd, ld).slope : -HUGE_VAL;
  t.psi_ok = std::abs(t.psi_exponent - (d - 1.0)) <= 0.05;
  t.diff_ok = t.diff_exponent <= d - 2.0 + 0.1;
  return t;
}

/// (sigma2 / 2 pi) |sum_{j<=J} psi_j e^{ij lambda}|^2.
inline double reconstruct_spectral(const MACoefficients& ma, double lambda) {
  std::complex<double> s = 0.0;
  const std::complex<double> z = std::polar(1.0, lambda);
  for (std::size_t j = ma.psi.size(); j-- > 0;) s = s * z + ma.psi[j];
  return ma.sigma2 / (2.0 * std::numbers::pi) * std::norm(s);
}

/// Coefficients for f(lambda; d) g(lambda). sigma2 comes from Kolmogorov's formula on the
/// product and must equal sigma_g2 / (2 pi) to 1e-8.
inline MACoefficients ma_coefficients(double d, const SpectralDensity& g, int J) {
  MACoefficients ma;
  ma.d = d;
  ma.h = farima_h(d, J);
  const auto cep = cepstral_g(g, J);
  ma.g = cep.g;
  ma.sigma_g2 = cep.sigma_g2;
  ma.psi = compose_psi(ma.h, ma.g);
  ma.sigma2 = innovation_variance(product_spectral_density(d, g));
  const double implied = ma.sigma_g2 / (2.0 * std::numbers::pi);
  if (std::abs(ma.sigma2 - implied) > 1e-8 * std::max(1.0, implied)) {
    throw Error(ErrorCode::conditioning, "ma_coefficients: Kolmogorov variance " + std::to_string(ma.sigma2) +
                                             " disagrees with sigma_g2 / 2pi = " + std::to_string(implied));
  }
  return ma;
}

/// Farima mixtures (g constant) and farima-times-phi_g product mixtures.
inline MACoefficients ma_coefficients(const MixtureDensity& m, int J) {
  if (const auto* p = std::get_if<FarimaParams>(&m.params())) {
    // f(lambda; d) = f(lambda; d) * 1, so g is the constant 1 and sigma_g2 = 2 pi.
    const SpectralDensity flat{[](double) { return 1.0; }, SpectralProvenance::analytic_custom, std::nullopt};
    return ma_coefficients(p->d, flat, J);
  }
  if (const auto* p = std::get_if<ProductParams>(&m.params())) {
    return ma_coefficients(p->d, spectral_density(*p->phi_g, 1.0), J);
  }
  throw DomainError("ma_coefficients: need a farima or product mixture, got " + m.describe());
}

}  // namespace disagg
