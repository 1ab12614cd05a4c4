#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "disagg/core/error.hpp"
#include "disagg/core/quadrature.hpp"
#include "disagg/core/special.hpp"

namespace disagg {

/// Integration point inside one support piece of a mixture density. Distances to the
/// piece ends and to +-1 are carried exactly so power singularities lose no precision.
struct Abscissa {
  double x;
  double from_lo;
  double to_hi;
  double one_minus_x;
  double one_plus_x;
};

/// Smooth part of a density on [lo, hi]; it behaves like dist^order at each end.
struct Piece {
  double lo;
  double hi;
  double order_lo;
  double order_hi;
  std::function<double(const Abscissa&)> eval;

  Abscissa abscissa(const quad::EdgePoint& p) const {
    return {p.x, p.from_lo, p.to_hi, hi == 1.0 ? p.to_hi : 1.0 - p.x,
            lo == -1.0 ? p.from_lo : 1.0 + p.x};
  }
};

enum class MixtureFamily { beta_two_component, beta_uniform, farima, compensator, product, tabulated };

inline const char* to_string(MixtureFamily f) {
  switch (f) {
    case MixtureFamily::beta_two_component: return "beta_two_component";
    case MixtureFamily::beta_uniform: return "beta_uniform";
    case MixtureFamily::farima: return "farima";
    case MixtureFamily::compensator: return "compensator";
    case MixtureFamily::product: return "product";
    case MixtureFamily::tabulated: return "tabulated";
  }
  return "unknown";
}

struct BetaTwoComponentParams {
  double w, a_star, p1, q1, p2, q2;
};
struct BetaUniformParams {
  double w, a_star, p3, q3;
};
struct FarimaParams {
  double d;
};
struct CompensatorParams {
  double kappa, a_star;
};
struct TabulatedParams {
  std::vector<double> x, phi;
};

class MixtureDensity;

struct ProductParams {
  double d;
  std::shared_ptr<const MixtureDensity> phi_g;
  double c_star;
};

using MixtureParams = std::variant<BetaTwoComponentParams, BetaUniformParams, FarimaParams,
                                   CompensatorParams, ProductParams, TabulatedParams>;

/// C_1(d) = Gamma(3-d) / (2 Gamma(d) Gamma(2-2d)), the FARIMA mixture normalizer.
inline double farima_normalizer(double d) {
  return special::gamma(3.0 - d) / (2.0 * special::gamma(d) * special::gamma(2.0 - 2.0 * d));
}

/// c_d with spectral(farima(d), lambda, 1) = c_d * f(lambda; d).
inline double farima_association_constant(double d) {
  return special::gamma(3.0 - d) * special::gamma(1.0 - d) / (2.0 * special::gamma(2.0 - 2.0 * d));
}

/// Density of the random AR(1) coefficient on (-1, 1). Immutable and cheap to copy.
class MixtureDensity {
 public:
  static MixtureDensity beta_two_component(double w, double a_star, double p1, double q1,
                                           double p2, double q2) {
    check_unit_open(w, "w");
    check_unit_open(a_star, "a_star");
    for (double s : {p1, q1, p2, q2}) {
      if (!(s > 0.0)) throw DomainError("beta_two_component: shape parameters must be positive");
    }
    MixtureDensity m(MixtureFamily::beta_two_component,
                     BetaTwoComponentParams{w, a_star, p1, q1, p2, q2});
    const double c1 = w / special::beta(p1, q1);
    const double c2 = (1.0 - w) / (std::pow(a_star, p2 + q2 - 1.0) * special::beta(p2, q2));
    m.pieces_.push_back(left_beta_piece(a_star, p2, q2, c2));
    m.pieces_.push_back(right_beta_piece(p1, q1, c1));
    return m;
  }

  static MixtureDensity beta_uniform(double w, double a_star, double p3, double q3) {
    check_unit_open(w, "w");
    check_unit_open(a_star, "a_star");
    if (!(p3 > 0.0 && q3 > 0.0)) throw DomainError("beta_uniform: shape parameters must be positive");
    MixtureDensity m(MixtureFamily::beta_uniform, BetaUniformParams{w, a_star, p3, q3});
    const double level = (1.0 - w) / a_star;
    m.pieces_.push_back(Piece{-a_star, 0.0, 0.0, 0.0, [level](const Abscissa&) { return level; }});
    m.pieces_.push_back(right_beta_piece(p3, q3, w / special::beta(p3, q3)));
    return m;
  }

  /// phi(x; d) = C_1(d) x^(d-1) (1-x)^(1-2d) (1+x) on (0, 1].
  static MixtureDensity farima(double d) {
    check_memory(d);
    MixtureDensity m(MixtureFamily::farima, FarimaParams{d});
    m.pieces_.push_back(farima_piece(d));
    m.associated_sigma_eps2_ = 1.0 / farima_association_constant(d);
    return m;
  }

  /// phi_g(x; kappa) = C_2(kappa) |x|^kappa on [-a_star, 0].
  static MixtureDensity compensator(double kappa, double a_star) {
    if (!(kappa > 0.0)) throw DomainError("compensator: kappa must be positive");
    check_unit_open(a_star, "a_star");
    MixtureDensity m(MixtureFamily::compensator, CompensatorParams{kappa, a_star});
    const double c2 = (kappa + 1.0) * std::pow(a_star, -kappa - 1.0);
    m.pieces_.push_back(Piece{-a_star, 0.0, 0.0, kappa, [c2, kappa](const Abscissa& p) {
                                return c2 * std::pow(p.to_hi, kappa);
                              }});
    return m;
  }

  /// Piecewise-linear density through (x_i, phi_i), rescaled to unit mass.
  static MixtureDensity tabulated(std::vector<double> x, std::vector<double> phi) {
    if (x.size() != phi.size() || x.size() < 2) {
      throw DomainError("tabulated: need at least two (x, phi) pairs of equal length");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!(x[i] >= -1.0 && x[i] <= 1.0)) throw DomainError("tabulated: grid must lie in [-1, 1]");
      if (i > 0 && !(x[i] > x[i - 1])) throw DomainError("tabulated: grid must be increasing");
      if (!(phi[i] >= 0.0) || !std::isfinite(phi[i])) {
        throw DomainError("tabulated: density values must be finite and nonnegative");
      }
    }
    double mass = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) mass += 0.5 * (phi[i] + phi[i + 1]) * (x[i + 1] - x[i]);
    if (!(mass > 0.0)) throw DomainError("tabulated: density has zero mass");
    for (double& v : phi) v /= mass;
    MixtureDensity m(MixtureFamily::tabulated, TabulatedParams{x, phi});
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      const double width = x[i + 1] - x[i];
      const double y0 = phi[i], y1 = phi[i + 1];
      if (y0 == 0.0 && y1 == 0.0) continue;
      m.pieces_.push_back(Piece{x[i], x[i + 1], y0 == 0.0 ? 1.0 : 0.0, y1 == 0.0 ? 1.0 : 0.0,
                                [=](const Abscissa& p) {
                                  return p.from_lo <= p.to_hi
                                             ? y0 + (y1 - y0) * (p.from_lo / width)
                                             : y1 + (y0 - y1) * (p.to_hi / width);
                                }});
    }
    return m;
  }

  friend MixtureDensity product_mixture(const MixtureDensity& phi_d, const MixtureDensity& phi_g);

  MixtureFamily family() const noexcept { return family_; }
  const MixtureParams& params() const noexcept { return params_; }
  const std::vector<Piece>& pieces() const noexcept { return pieces_; }

  std::pair<double, double> support() const { return {pieces_.front().lo, pieces_.back().hi}; }

  std::vector<double> breakpoints() const {
    std::vector<double> b;
    for (const auto& p : pieces_) {
      if (b.empty() || b.back() != p.lo) b.push_back(p.lo);
      b.push_back(p.hi);
    }
    return b;
  }

  /// phi(x); zero outside the support, +inf at an integrable singularity.
  double density(double x) const {
    for (const auto& p : pieces_) {
      if (x >= p.lo && x <= p.hi) {
        const double v = p.eval({x, x - p.lo, p.hi - x, 1.0 - x, 1.0 + x});
        return std::isfinite(v) ? v : HUGE_VAL;
      }
    }
    return 0.0;
  }

  double operator()(double x) const { return density(x); }

  /// Integral of phi(x) g(x) over the support; g receives the Abscissa. A callable taking
  /// (Abscissa, phi) instead supplies the whole integrand.
  template <class G>
  quad::Result integrate(G&& g, const quad::Options& opt = {}) const {
    return integrate_with_breaks(std::forward<G>(g), {}, opt);
  }

  /// As integrate, with extra breakpoints (ascending) dividing the pieces they fall in.
  template <class G>
  quad::Result integrate_with_breaks(G&& g, const std::vector<double>& breaks,
                                     const quad::Options& opt = {}) const {
    quad::Result total;
    total.converged = true;
    for (const auto& piece : pieces_) {
      std::vector<double> cuts{piece.lo};
      for (double b : breaks) {
        if (b > piece.lo && b < piece.hi) cuts.push_back(b);
      }
      cuts.push_back(piece.hi);
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double c = cuts[i], e = cuts[i + 1];
        auto integrand = [&](const quad::EdgePoint& q) {
          const quad::EdgePoint in_piece{q.x, c == piece.lo ? q.from_lo : (c - piece.lo) + q.from_lo,
                                         e == piece.hi ? q.to_hi : (piece.hi - e) + q.to_hi};
          const Abscissa a = piece.abscissa(in_piece);
          const double phi = piece.eval(a);
          if constexpr (std::is_invocable_r_v<double, G&, const Abscissa&, double>) {
            return g(a, phi);
          } else {
            return phi == 0.0 ? 0.0 : phi * g(a);
          }
        };
        total += quad::tanh_sinh(integrand, c, e, opt);
      }
    }
    return total;
  }

  template <class G>
  double integrate_or_throw(G&& g, const char* what, const quad::Options& opt = {}) const {
    const quad::Result r = integrate(std::forward<G>(g), opt);
    if (!r.converged) throw QuadratureError(what, r.error);
    return r.value;
  }

  double mass() const {
    return integrate_or_throw([](const Abscissa&) { return 1.0; }, "MixtureDensity::mass");
  }

  /// Memory parameter d read off the behaviour (1 - x)^(1-2d) at x = 1, when 0 < d < 1/2.
  std::optional<double> memory_parameter() const {
    const Piece& last = pieces_.back();
    if (last.hi != 1.0) return std::nullopt;
    const double d = 0.5 * (1.0 - last.order_hi);
    if (d > 0.0 && d < 0.5) return d;
    return std::nullopt;
  }

  /// Innovation variance under which this density reproduces its named spectral density
  /// (f(lambda; d) for farima, f(lambda; d) g(lambda) for product); 1 for other families.
  double associated_sigma_eps2() const { return associated_sigma_eps2_; }

  double c_star() const {
    if (const auto* p = std::get_if<ProductParams>(&params_)) return p->c_star;
    throw DomainError("c_star: only defined for product mixtures");
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << to_string(family_);
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, BetaTwoComponentParams>) {
            os << "(w=" << p.w << ",a_star=" << p.a_star << ",p1=" << p.p1 << ",q1=" << p.q1
               << ",p2=" << p.p2 << ",q2=" << p.q2 << ")";
          } else if constexpr (std::is_same_v<T, BetaUniformParams>) {
            os << "(w=" << p.w << ",a_star=" << p.a_star << ",p3=" << p.p3 << ",q3=" << p.q3 << ")";
          } else if constexpr (std::is_same_v<T, FarimaParams>) {
            os << "(d=" << p.d << ")";
          } else if constexpr (std::is_same_v<T, CompensatorParams>) {
            os << "(kappa=" << p.kappa << ",a_star=" << p.a_star << ")";
          } else if constexpr (std::is_same_v<T, ProductParams>) {
            os << "(d=" << p.d << ",g=" << p.phi_g->describe() << ")";
          } else {
            os << "(points=" << p.x.size() << ")";
          }
        },
        params_);
    return os.str();
  }

 private:
  MixtureDensity(MixtureFamily f, MixtureParams p) : family_(f), params_(std::move(p)) {}

  static void check_unit_open(double v, const char* name) {
    if (!(v > 0.0 && v < 1.0)) throw DomainError(std::string(name) + " must lie in (0, 1)");
  }
  static void check_memory(double d) {
    if (!(d > 0.0 && d < 0.5)) throw DomainError("memory parameter d must lie in (0, 1/2)");
  }

  static Piece right_beta_piece(double p, double q, double c) {
    return Piece{0.0, 1.0, p - 1.0, q - 1.0, [=](const Abscissa& a) {
                   return c * std::pow(a.from_lo, p - 1.0) * std::pow(a.to_hi, q - 1.0);
                 }};
  }

  static Piece left_beta_piece(double a_star, double p, double q, double c) {
    // |x|^(p-1) (a_star + x)^(q-1): |x| is the distance to 0, a_star + x the distance to -a_star.
    return Piece{-a_star, 0.0, q - 1.0, p - 1.0, [=](const Abscissa& a) {
                   return c * std::pow(a.to_hi, p - 1.0) * std::pow(a.from_lo, q - 1.0);
                 }};
  }

  static Piece farima_piece(double d) {
    const double c1 = farima_normalizer(d);
    return Piece{0.0, 1.0, d - 1.0, 1.0 - 2.0 * d, [=](const Abscissa& a) {
                   return c1 * std::pow(a.from_lo, d - 1.0) * std::pow(a.to_hi, 1.0 - 2.0 * d) *
                          (2.0 - a.to_hi);
                 }};
  }

  MixtureFamily family_;
  MixtureParams params_;
  std::vector<Piece> pieces_;
  double associated_sigma_eps2_ = 1.0;
};

/// Mixture density associated with f(lambda; d) g(lambda), where phi_d is farima(d) and
/// g is the spectral density of phi_g (supported in [-a, 0], a < 1) at unit innovation
/// variance. C* is computed eagerly by nested quadrature.
inline MixtureDensity product_mixture(const MixtureDensity& phi_d, const MixtureDensity& phi_g) {
  const auto* fp = std::get_if<FarimaParams>(&phi_d.params());
  if (fp == nullptr) throw DomainError("product_mixture: first factor must be a farima mixture");
  const auto [glo, ghi] = phi_g.support();
  if (!(glo > -1.0 && ghi <= 0.0)) {
    throw DomainError("product_mixture: phi_g must be supported in [-a_star, 0] with a_star < 1");
  }
  const double d = fp->d;
  auto g = std::make_shared<const MixtureDensity>(phi_g);
  auto fd = std::make_shared<const MixtureDensity>(phi_d);
  const quad::Options inner_opt{1e-11, 1e-300, 3, 11};

  // C* = int_0^1 int phi(x;d) phi_g(y) / (1 - x y) dy dx
  const double c_star = fd->integrate_or_throw(
      [&](const Abscissa& a) {
        return g->integrate_or_throw([&](const Abscissa& b) { return 1.0 / (1.0 - a.x * b.x); },
                                     "product_mixture: C* inner", inner_opt);
      },
      "product_mixture: C* outer", inner_opt);

  MixtureDensity m(MixtureFamily::product, ProductParams{d, g, c_star});
  const double inv_c = 1.0 / c_star;
  const double order_g0 = phi_g.pieces().back().hi == 0.0 ? phi_g.pieces().back().order_hi : 0.0;
  // The inner kernels peak at distance |x| from 0; a geometric ladder of breakpoints keeps
  // tanh-sinh accurate when |x| is many decades below 1.
  auto ladder = [](double scale, double sign) {
    std::vector<double> b;
    for (double t = scale; t < 1.0; t *= 8.0) b.push_back(sign * t);
    if (sign < 0.0) std::reverse(b.begin(), b.end());
    return b;
  };
  for (const Piece& gp : phi_g.pieces()) {
    // x in [-a_star, 0): phi_g(x) int_0^1 phi(y;d) |x| / ((1 + |x| y)(|x| + y)) dy
    Piece left = gp;
    if (gp.hi == 0.0) left.order_hi = gp.order_hi + d;
    left.eval = [gp, fd, inv_c, inner_opt, ladder, d, c1 = farima_normalizer(d)](const Abscissa& a) {
      const double phig = gp.eval(a);
      if (phig == 0.0) return 0.0;
      const double ax = -a.x;
      if (ax < 1e-100) {
        // int_0^inf y^(d-1) |x| / (|x| + y) dy = pi |x|^d / sin(pi d); correction O(|x|^(1-d)).
        return inv_c * phig * c1 * std::numbers::pi / std::sin(std::numbers::pi * d) * std::pow(ax, d);
      }
      const quad::Result r = fd->integrate_with_breaks(
          [ax](const Abscissa& b) { return ax / ((1.0 + ax * b.x) * (ax + b.x)); }, ladder(ax, 1.0),
          inner_opt);
      if (!r.converged) throw QuadratureError("product_mixture: density (x < 0)", r.error);
      return inv_c * phig * r.value;
    };
    m.pieces_.push_back(std::move(left));
  }
  Piece right = fd->pieces().front();
  right.order_lo = d + std::min(order_g0, 0.0);
  right.eval = [fpiece = fd->pieces().front(), g, inv_c, inner_opt, ladder](const Abscissa& a) {
    const double phid = fpiece.eval(a);
    if (phid == 0.0) return 0.0;
    const double x = a.x;
    const quad::Result r = g->integrate_with_breaks(
        [x](const Abscissa& b) { return x / ((1.0 - x * b.x) * (x - b.x)); }, ladder(x, -1.0),
        inner_opt);
    if (!r.converged) throw QuadratureError("product_mixture: density (x > 0)", r.error);
    return inv_c * phid * r.value;
  };
  m.pieces_.push_back(std::move(right));
  m.associated_sigma_eps2_ = c_star / (2.0 * std::numbers::pi * farima_association_constant(d));
  return m;
}

// ---------------------------------------------------------------------------------------------
// Forward maps
// ---------------------------------------------------------------------------------------------

struct IntegrabilityReport {
  double mixture_integral;  // int phi / (1 - x^2), +inf when divergent
  bool mixture_finite;
  double expansion_integral;  // int phi^2 (1 - x^2)^(-alpha), +inf when divergent
  bool expansion_finite;
  bool expansion_admissible;  // both finite and alpha > -1
};

namespace detail {
// int phi^power (1 - x^2)^(-weight) is finite iff every end exponent exceeds -1.
inline bool power_integrable(const MixtureDensity& m, double power, double weight) {
  for (const Piece& p : m.pieces()) {
    const double at_lo = power * p.order_lo - (p.lo == -1.0 ? weight : 0.0);
    const double at_hi = power * p.order_hi - (p.hi == 1.0 ? weight : 0.0);
    if (!(at_lo > -1.0) || !(at_hi > -1.0)) return false;
  }
  return true;
}

inline double int_pow(double x, int h) {
  double result = 1.0;
  double base = x;
  unsigned e = static_cast<unsigned>(h);
  while (e != 0) {
    if (e & 1U) result *= base;
    base *= base;
    e >>= 1U;
  }
  return result;
}
}  // namespace detail

inline IntegrabilityReport check_integrability(const MixtureDensity& m, double alpha) {
  IntegrabilityReport r{HUGE_VAL, false, HUGE_VAL, false, false};
  r.mixture_finite = detail::power_integrable(m, 1.0, 1.0);
  r.expansion_finite = detail::power_integrable(m, 2.0, alpha);
  if (r.mixture_finite) {
    r.mixture_integral = m.integrate_or_throw(
        [](const Abscissa& a) { return 1.0 / (a.one_minus_x * a.one_plus_x); },
        "check_integrability: mixture condition");
  }
  if (r.expansion_finite) {
    r.expansion_integral = m.integrate_or_throw(
        [alpha](const Abscissa& a, double phi) {
          return phi == 0.0 ? 0.0 : phi * phi * std::pow(a.one_minus_x * a.one_plus_x, -alpha);
        },
        "check_integrability: expansion condition");
  }
  r.expansion_admissible = r.mixture_finite && r.expansion_finite && alpha > -1.0;
  return r;
}

/// sigma(h) = sigma_eps2 int x^|h| phi(x) / (1 - x^2) dx.
inline double covariance(const MixtureDensity& m, int h, double sigma_eps2 = 1.0) {
  if (!(sigma_eps2 > 0.0)) throw DomainError("covariance: sigma_eps2 must be positive");
  const int lag = std::abs(h);
  return sigma_eps2 * m.integrate_or_throw(
                          [lag](const Abscissa& a) {
                            return detail::int_pow(a.x, lag) / (a.one_minus_x * a.one_plus_x);
                          },
                          "covariance");
}

/// sigma(0..max_lag) from one shared tanh-sinh node set, refined until every lag has
/// converged to rel_tol * sigma(0).
inline std::vector<double> covariances(const MixtureDensity& m, int max_lag, double sigma_eps2 = 1.0,
                                       double rel_tol = 1e-12) {
  if (!(sigma_eps2 > 0.0)) throw DomainError("covariances: sigma_eps2 must be positive");
  if (max_lag < 0) throw DomainError("covariances: max_lag must be >= 0");
  const int lags = max_lag + 1;
  struct Node {
    double x, base;
    int level;
  };
  std::vector<Node> nodes;
  for (const Piece& piece : m.pieces()) {
    for (int level = 0; level <= 5; ++level) {
      for (const auto& n : quad::tanh_sinh_level_nodes(piece.lo, piece.hi, level)) {
        const Abscissa a = piece.abscissa(n.point);
        nodes.push_back({a.x, n.weight * piece.eval(a) / (a.one_minus_x * a.one_plus_x), level});
      }
    }
  }
  std::vector<double> cur(lags, 0.0);
  for (int level = 5; level <= 12; ++level) {
    if (level > 5) {
      for (const Piece& piece : m.pieces()) {
        for (const auto& n : quad::tanh_sinh_level_nodes(piece.lo, piece.hi, level)) {
          const Abscissa a = piece.abscissa(n.point);
          nodes.push_back({a.x, n.weight * piece.eval(a) / (a.one_minus_x * a.one_plus_x), level});
        }
      }
    }
    std::vector<double> old_sum(lags, 0.0), new_sum(lags, 0.0);
    for (const Node& n : nodes) {
      if (n.base == 0.0) continue;
      if (!std::isfinite(n.base)) throw QuadratureError("covariances: integrand not finite", HUGE_VAL);
      auto& target = n.level == level ? new_sum : old_sum;
      double p = n.base;
      for (int h = 0; h < lags; ++h) {
        target[h] += p;
        p *= n.x;
        if (p == 0.0) break;
      }
    }
    const double step = std::ldexp(1.0, -level);
    double worst = 0.0;
    for (int h = 0; h < lags; ++h) {
      cur[h] = step * (old_sum[h] + new_sum[h]);
      worst = std::max(worst, step * std::abs(new_sum[h] - old_sum[h]));
    }
    if (worst <= rel_tol * std::abs(cur[0])) {
      for (double& v : cur) v *= sigma_eps2;
      return cur;
    }
  }
  throw QuadratureError("covariances: node refinement exhausted", 0.0);
}

/// f(lambda) = sigma_eps2 / (2 pi) int phi(x) / |1 - x e^{i lambda}|^2 dx.
inline double spectral(const MixtureDensity& m, double lambda, double sigma_eps2 = 1.0) {
  if (!(std::abs(lambda) <= std::numbers::pi + 1e-12)) {
    throw DomainError("spectral: lambda must lie in [-pi, pi]");
  }
  const double s2 = std::pow(std::sin(0.5 * lambda), 2);
  const double value = m.integrate_or_throw(
      [s2](const Abscissa& a) {
        // |1 - x e^{i l}|^2 = (1 - x)^2 + 4 x sin^2(l / 2)
        return 1.0 / (a.one_minus_x * a.one_minus_x + 4.0 * a.x * s2);
      },
      "spectral");
  return sigma_eps2 / (2.0 * std::numbers::pi) * value;
}

/// FARIMA(0, d, 0) spectral density (2 pi)^-1 (2 sin(|lambda| / 2))^(-2d).
inline double farima_spectral(double lambda, double d) {
  if (!(d > 0.0 && d < 0.5)) throw DomainError("farima_spectral: d must lie in (0, 1/2)");
  if (lambda == 0.0) throw DomainError("farima_spectral: singular at lambda = 0");
  return std::pow(2.0 * std::sin(0.5 * std::abs(lambda)), -2.0 * d) / (2.0 * std::numbers::pi);
}

/// Integral of an even integrand over [-pi, pi], allowing an integrable power singularity
/// at 0: [0, pi] is cut into pieces [pi 4^-(k+1), pi 4^-k] and the remaining tail near 0 is
/// extrapolated geometrically from the last pieces.
template <class F>
double integrate_frequency(F&& f, double rel_tol = 1e-10, int max_pieces = 400) {
  const quad::Options opt{rel_tol * 0.1, 1e-300, 3, 11};
  double total = 0.0, last = 0.0, previous_estimate = HUGE_VAL;
  int stable = 0;
  double hi = std::numbers::pi;
  for (int k = 0; k < max_pieces; ++k) {
    const double lo = 0.25 * hi;
    const double piece = quad::integrate_or_throw(f, lo, hi, "integrate_frequency", opt);
    const double ratio = last != 0.0 ? piece / last : 0.0;
    total += piece;
    last = piece;
    hi = lo;
    const double estimate = total + (ratio > 0.0 && ratio < 1.0 ? piece * ratio / (1.0 - ratio) : 0.0);
    if (k >= 3 && std::abs(estimate - previous_estimate) <= rel_tol * std::abs(estimate)) {
      if (++stable >= 2) return 2.0 * estimate;
    } else {
      stable = 0;
    }
    previous_estimate = estimate;
  }
  throw QuadratureError("integrate_frequency: tail near 0 did not settle", 0.0);
}

enum class SpectralProvenance { from_mixture, farima, product, analytic_custom };

/// Even spectral density on [-pi, pi].
struct SpectralDensity {
  std::function<double(double)> eval;
  SpectralProvenance provenance = SpectralProvenance::analytic_custom;
  std::optional<double> d;

  double operator()(double lambda) const { return eval(std::abs(lambda)); }
};

inline SpectralDensity spectral_density(const MixtureDensity& m, double sigma_eps2 = 1.0) {
  return {[m, sigma_eps2](double l) { return spectral(m, l, sigma_eps2); },
          SpectralProvenance::from_mixture, m.memory_parameter()};
}

inline SpectralDensity farima_spectral_density(double d) {
  farima_spectral(1.0, d);  // validates d
  return {[d](double l) { return farima_spectral(l, d); }, SpectralProvenance::farima, d};
}

inline SpectralDensity product_spectral_density(double d, SpectralDensity g) {
  farima_spectral(1.0, d);
  return {[d, g = std::move(g)](double l) { return farima_spectral(l, d) * g(l); },
          SpectralProvenance::product, d};
}

/// (psi_1(x), psi_2(x)): the two components of the smooth factor of the product mixture
/// built from farima(d) and compensator(kappa, a_star), by direct quadrature.
inline std::pair<double, double> appendix_a_psi(double x, double d, double kappa, double a_star) {
  if (!(d > 0.0 && d < 0.5)) throw DomainError("appendix_a_psi: d must lie in (0, 1/2)");
  if (!(kappa > 0.0)) throw DomainError("appendix_a_psi: kappa must be positive");
  if (!(a_star > 0.0 && a_star < 1.0)) throw DomainError("appendix_a_psi: a_star must lie in (0, 1)");
  if (x == 0.0) throw DomainError("appendix_a_psi: x = 0 is a removable singularity");
  if (x > 1.0 || x < -a_star) return {0.0, 0.0};
  const quad::Options opt{1e-12, 1e-300, 3, 12};
  if (x > 0.0) {
    // 1 / ((1 - x y)(1 - y / x)) = x / ((1 + x |y|)(x + |y|)) for y < 0
    const double integral = quad::integrate_or_throw(
        [=](const quad::EdgePoint& p) {
          const double ay = p.to_hi;
          return std::pow(ay, kappa) * x / ((1.0 + x * ay) * (x + ay));
        },
        -a_star, 0.0, "appendix_a_psi: psi_1", opt);
    return {std::pow(x, d - 1.0) * (1.0 + x) * integral, 0.0};
  }
  const double ax = -x;
  const double integral = quad::integrate_or_throw(
      [=](const quad::EdgePoint& p) {
        const double y = p.from_lo;
        return std::pow(y, d - 1.0) * std::pow(p.to_hi, 1.0 - 2.0 * d) * (1.0 + y) * ax /
               ((1.0 + ax * y) * (ax + y));
      },
      0.0, 1.0, "appendix_a_psi: psi_2", opt);
  return {0.0, std::pow(ax, kappa) * std::pow(1.0 + ax, 2.0 * d - 1.0) * integral};
}

}  // namespace disagg
