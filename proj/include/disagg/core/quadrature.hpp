#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <type_traits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "disagg/core/error.hpp"
#include "disagg/core/special.hpp"

namespace disagg::quad {

/// Abscissa on [a, b] with the distances to both ends kept separately, so that
/// integrands with power singularities at an endpoint keep full relative precision.
struct EdgePoint {
  double x;
  double from_lo;  // x - a
  double to_hi;    // b - x
};

struct Options {
  double rel_tol = 1e-12;
  double abs_tol = 1e-15;
  int min_level = 3;
  int max_level = 11;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  long evaluations = 0;
  bool converged = false;
};

inline Result& operator+=(Result& lhs, const Result& rhs) {
  lhs.value += rhs.value;
  lhs.error += rhs.error;
  lhs.evaluations += rhs.evaluations;
  lhs.converged = lhs.converged && rhs.converged;
  return lhs;
}

template <class F>
double invoke_at(F& f, const EdgePoint& p) {
  if constexpr (std::is_invocable_r_v<double, F&, const EdgePoint&>) {
    return f(p);
  } else {
    return f(p.x);
  }
}

/// One tanh-sinh node, mapped to [a, b]; weight includes the Jacobian but not the step h.
struct TanhSinhNode {
  EdgePoint point;
  double weight;
};

namespace detail {

// Nodes beyond this t have distances to the end below ~1e-300.
inline constexpr double t_max = 6.0;

inline bool make_node(double a, double b, double t, TanhSinhNode& node) {
  const double half = 0.5 * (b - a);
  const double u = 0.5 * std::numbers::pi * std::sinh(t);
  const double e2u = std::exp(2.0 * std::abs(u));
  if (!std::isfinite(e2u)) return false;
  const double near = half * 2.0 / (1.0 + e2u);
  if (!(near > 1e-300)) return false;
  const double cu = std::cosh(u);
  const double w = half * 0.5 * std::numbers::pi * std::cosh(t) / (cu * cu);
  if (t >= 0.0) {
    node.point = {b - near, (b - a) - near, near};
  } else {
    node.point = {a + near, near, (b - a) - near};
  }
  node.weight = w;
  return true;
}

}  // namespace detail

/// Nodes introduced at `level` (step 2^-level): all of t = k h for level 0, odd k otherwise.
inline std::vector<TanhSinhNode> tanh_sinh_level_nodes(double a, double b, int level) {
  std::vector<TanhSinhNode> nodes;
  const double h = std::ldexp(1.0, -level);
  const long kmax = static_cast<long>(detail::t_max / h);
  const long step = level == 0 ? 1 : 2;
  const long start = level == 0 ? 0 : 1;
  for (long k = start; k <= kmax; k += step) {
    const double t = k * h;
    TanhSinhNode node;
    if (detail::make_node(a, b, t, node)) nodes.push_back(node);
    if (k != 0 && detail::make_node(a, b, -t, node)) nodes.push_back(node);
  }
  return nodes;
}

/// Adaptive tanh-sinh (double-exponential) quadrature of f over [a, b].
///
/// Endpoint power and logarithmic singularities are integrated without special
/// treatment. `f` may take either `double` or `EdgePoint`. Level refinement stops when
/// successive estimates agree within the tolerance; the returned error is that difference.
template <class F>
Result tanh_sinh(F&& f, double a, double b, const Options& opt = {}) {
  Result res;
  if (!(b > a)) {
    res.converged = true;
    return res;
  }
  double sum = 0.0;
  double previous = 0.0;
  for (int level = 0; level <= opt.max_level; ++level) {
    for (const auto& node : tanh_sinh_level_nodes(a, b, level)) {
      const double fx = invoke_at(f, node.point);
      if (!std::isfinite(fx)) {
        throw QuadratureError("tanh_sinh: integrand not finite at x = " +
                                  std::to_string(node.point.x),
                              HUGE_VAL);
      }
      sum += node.weight * fx;
      ++res.evaluations;
    }
    const double estimate = sum * std::ldexp(1.0, -level);
    if (level > 0) {
      res.error = std::abs(estimate - previous);
      res.value = estimate;
      if (level >= opt.min_level &&
          res.error <= std::max(opt.abs_tol, opt.rel_tol * std::abs(estimate))) {
        res.converged = true;
        return res;
      }
    }
    previous = estimate;
    res.value = estimate;
  }
  return res;
}

/// Sum of tanh-sinh integrals over consecutive pieces [breaks[i], breaks[i+1]].
template <class F>
Result tanh_sinh_piecewise(F&& f, std::span<const double> breaks, const Options& opt = {}) {
  Result total;
  total.converged = true;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    total += tanh_sinh(f, breaks[i], breaks[i + 1], opt);
  }
  return total;
}

template <class F>
double integrate_or_throw(F&& f, double a, double b, const char* what, const Options& opt = {}) {
  const Result r = tanh_sinh(std::forward<F>(f), a, b, opt);
  if (!r.converged) throw QuadratureError(what, r.error);
  return r.value;
}

/// Gauss rule: nodes ascending, weights positive.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Jacobi rule for the weight (1 - x)^a (1 + x)^b on [-1, 1].
///
/// Nodes are the eigenvalues of the Jacobi matrix; weights come from the Christoffel
/// function 1 / sum_k p_k(x)^2 of the orthonormal polynomials.
inline GaussRule gauss_jacobi(int n, double a, double b) {
  if (n < 1) throw DomainError("gauss_jacobi: need at least one node");
  if (!(a > -1.0 && b > -1.0)) throw DomainError("gauss_jacobi: exponents must exceed -1");
  const double ab = a + b;
  auto diag_coef = [&](int k) {
    if (k == 0) return (b - a) / (ab + 2.0);
    const double s = 2.0 * k + ab;
    return (b * b - a * a) / (s * (s + 2.0));
  };
  auto offdiag_sq = [&](int k) {  // beta_k, k >= 1
    if (k == 1) return 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
    const double s = 2.0 * k + ab;
    return 4.0 * k * (k + a) * (k + b) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
  };
  const double mu0 = std::exp((ab + 1.0) * std::numbers::ln2 + special::log_gamma(a + 1.0) +
                              special::log_gamma(b + 1.0) - special::log_gamma(ab + 2.0));

  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(std::max(n - 1, 1));
  std::vector<double> alpha(n), sqrt_beta(n + 1, 0.0);
  for (int k = 0; k < n; ++k) {
    alpha[k] = diag_coef(k);
    diag(k) = alpha[k];
  }
  for (int k = 1; k < n; ++k) {
    sqrt_beta[k] = std::sqrt(offdiag_sq(k));
    sub(k - 1) = sqrt_beta[k];
  }
  GaussRule rule;
  if (n == 1) {
    rule.nodes = {alpha[0]};
    rule.weights = {mu0};
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::conditioning, "gauss_jacobi: eigenvalue iteration failed");
  }
  rule.nodes.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
  rule.weights.resize(n);
  const double p0 = 1.0 / std::sqrt(mu0);
  for (int i = 0; i < n; ++i) {
    const double x = rule.nodes[i];
    double prev = 0.0;
    double cur = p0;
    double sumsq = cur * cur;
    for (int k = 0; k + 1 < n; ++k) {
      const double next = ((x - alpha[k]) * cur - sqrt_beta[k] * prev) / sqrt_beta[k + 1];
      prev = cur;
      cur = next;
      sumsq += cur * cur;
    }
    rule.weights[i] = 1.0 / sumsq;
  }
  return rule;
}

/// Integral of (1 - x)^a (1 + x)^b f(x) over [-1, 1]; node count doubles from 8 until two
/// successive rules agree within `tol` or `max_nodes` is reached.
template <class F>
Result gauss_jacobi_adaptive(F&& f, double a, double b, double tol = 1e-10,
                             int max_nodes = 4096) {
  Result res;
  double previous = 0.0;
  for (int n = 8; n <= max_nodes; n *= 2) {
    const GaussRule rule = gauss_jacobi(n, a, b);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rule.weights[i] * f(rule.nodes[i]);
    res.evaluations += n;
    res.value = sum;
    if (n > 8) {
      res.error = std::abs(sum - previous);
      if (res.error < tol) {
        res.converged = true;
        return res;
      }
    }
    previous = sum;
  }
  return res;
}

/// Gauss-Legendre rule mapped to [a, b].
inline GaussRule gauss_legendre(int n, double a, double b) {
  GaussRule rule = gauss_jacobi(n, 0.0, 0.0);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

}  // namespace disagg::quad
