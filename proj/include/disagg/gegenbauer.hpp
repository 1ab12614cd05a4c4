#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "disagg/core/error.hpp"
#include "disagg/core/quadrature.hpp"
#include "disagg/core/special.hpp"

namespace disagg {

/// Squared norm of the classical Gegenbauer polynomial C_k^(alpha+1/2) under the weight
/// (1 - x^2)^alpha.
inline double gegenbauer_norm(double alpha, int k) {
  const double lam = alpha + 0.5;
  return std::numbers::pi * std::pow(2.0, -2.0 * alpha) * special::gamma(k + 2.0 * alpha + 1.0) /
         ((k + lam) * std::pow(special::gamma(lam), 2) * special::gamma(k + 1.0));
}

/// Orthonormal basis G_0..G_K of L^2((1 - x^2)^alpha) on [-1, 1], held as monomial
/// coefficients g[k][j] of x^j in G_k.
///
/// The polynomials come from the three-term recurrence of C_k^(alpha+1/2), scaled by
/// gamma_k^(-1/2). The monomial form is ill-conditioned at high degree, so K is capped.
class GegenbauerBasis {
 public:
  static constexpr int max_supported_degree = 30;

  GegenbauerBasis(double alpha, int max_degree) : alpha_(alpha), max_degree_(max_degree) {
    if (!(alpha > -0.5)) throw DomainError("GegenbauerBasis: alpha must exceed -1/2");
    if (max_degree < 0) throw DomainError("GegenbauerBasis: max_degree must be >= 0");
    if (max_degree > max_supported_degree) {
      throw Error(ErrorCode::conditioning,
                  "GegenbauerBasis: degree " + std::to_string(max_degree) +
                      " exceeds the conditioning limit of the monomial form (" +
                      std::to_string(max_supported_degree) + ")");
    }
    const double lam = alpha + 0.5;
    std::vector<std::vector<double>> c(max_degree + 1);
    c[0] = {1.0};
    if (max_degree >= 1) c[1] = {0.0, 2.0 * lam};
    for (int k = 1; k < max_degree; ++k) {
      // (k+1) C_{k+1} = 2 (k + lam) x C_k - (k + 2 lam - 1) C_{k-1}
      std::vector<double> next(k + 2, 0.0);
      for (int j = 0; j <= k; ++j) next[j + 1] += 2.0 * (k + lam) * c[k][j];
      for (int j = 0; j < k; ++j) next[j] -= (k + 2.0 * lam - 1.0) * c[k - 1][j];
      for (double& v : next) v /= (k + 1.0);
      c[k + 1] = std::move(next);
    }
    norms_.resize(max_degree + 1);
    for (int k = 0; k <= max_degree; ++k) {
      norms_[k] = gegenbauer_norm(alpha, k);
      const double scale = 1.0 / std::sqrt(norms_[k]);
      for (double& v : c[k]) v *= scale;
    }
    coeffs_ = std::move(c);
  }

  double alpha() const noexcept { return alpha_; }
  int max_degree() const noexcept { return max_degree_; }

  /// g_{k,j}: coefficient of x^j in G_k; zero for j > k.
  double coefficient(int k, int j) const {
    check_degree(k);
    return j >= 0 && j <= k ? coeffs_[k][j] : 0.0;
  }

  const std::vector<double>& coefficients(int k) const {
    check_degree(k);
    return coeffs_[k];
  }

  /// gamma_k from the closed form.
  double norm(int k) const {
    check_degree(k);
    return norms_[k];
  }

  double evaluate(int k, double x) const { return horner(k, x); }

  std::complex<double> evaluate(int k, std::complex<double> z) const { return horner(k, z); }

  /// All G_0(x)..G_K(x).
  std::vector<double> evaluate_all(double x) const {
    std::vector<double> out(max_degree_ + 1);
    for (int k = 0; k <= max_degree_; ++k) out[k] = horner(k, x);
    return out;
  }

  /// zeta_k = integral of (1 - x^2)^alpha f(x) G_k(x) over [-1, 1], by a Gauss-Jacobi rule
  /// whose node count doubles until two estimates agree within `tol`.
  template <class F>
  double project(F&& f, int k, double tol = 1e-10, int max_nodes = 4096) const {
    check_degree(k);
    auto integrand = [&](double x) { return f(x) * horner(k, x); };
    const quad::Result r = quad::gauss_jacobi_adaptive(integrand, alpha_, alpha_, tol, max_nodes);
    if (!r.converged) throw QuadratureError("GegenbauerBasis::project did not converge", r.error);
    return r.value;
  }

 private:
  void check_degree(int k) const {
    if (k < 0 || k > max_degree_) {
      throw DomainError("GegenbauerBasis: degree " + std::to_string(k) + " outside [0, " +
                        std::to_string(max_degree_) + "]");
    }
  }

  template <class T>
  T horner(int k, T x) const {
    check_degree(k);
    const auto& c = coeffs_[k];
    T acc = T(c.back());
    for (int j = k - 1; j >= 0; --j) acc = acc * x + T(c[j]);
    return acc;
  }

  double alpha_;
  int max_degree_;
  std::vector<std::vector<double>> coeffs_;
  std::vector<double> norms_;
};

}  // namespace disagg
