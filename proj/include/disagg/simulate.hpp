#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "disagg/core/error.hpp"
#include "disagg/core/fft.hpp"
#include "disagg/core/quadrature.hpp"
#include "disagg/core/rng.hpp"
#include "disagg/io/csv.hpp"
#include "disagg/mixture.hpp"

namespace disagg {

struct PanelConfig {
  long N = 5000;
  long n = 1500;
  double sigma_eps = 1.0;
  long burn_in = 0;
  std::uint64_t seed = 20240101;

  void validate() const {
    if (N < 1) throw DomainError("PanelConfig: N must be >= 1");
    if (n < 8) throw DomainError("PanelConfig: n must be >= 8");
    if (!(sigma_eps > 0.0)) throw DomainError("PanelConfig: sigma_eps must be positive");
    if (burn_in < 0) throw DomainError("PanelConfig: burn_in must be >= 0");
  }
};

enum class SeriesSource { panel, synthesis, external };

inline const char* to_string(SeriesSource s) {
  switch (s) {
    case SeriesSource::panel: return "panel";
    case SeriesSource::synthesis: return "synthesis";
    case SeriesSource::external: return "external";
  }
  return "external";
}

struct SeriesMeta {
  SeriesSource source = SeriesSource::external;
  long N = 0;  // 0 for the limit process
  double sigma_eps2 = 1.0;
  std::uint64_t seed = 0;
  std::string mixture;
  std::string method;  // panel | circulant | cholesky
};

/// One realization X_1..X_n with its provenance.
struct AggregatedSeries {
  std::vector<double> values;
  SeriesMeta meta;
  std::shared_ptr<const MixtureDensity> source_mixture;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

// ---------------------------------------------------------------------------------------------
// Coefficient sampling
// ---------------------------------------------------------------------------------------------

/// Draws from a mixture density by numeric inverse CDF on a graded grid. Cells touching a
/// piece end use the local power law dist^order, so unbounded densities invert exactly there.
/// Tabulated densities are sampled exactly by per-segment rejection.
class CoefficientSampler {
 public:
  explicit CoefficientSampler(const MixtureDensity& m, int cells_per_piece = 1024) : m_(m) {
    if (cells_per_piece < 4) throw DomainError("CoefficientSampler: need at least 4 cells");
    if (const auto* t = std::get_if<TabulatedParams>(&m.params())) {
      build_tabulated(*t);
      return;
    }
    double total = 0.0;
    for (const Piece& p : m.pieces()) {
      tables_.push_back(build_piece(p, cells_per_piece));
      total += tables_.back().cdf.back();
      piece_cdf_.push_back(total);
    }
    for (double& v : piece_cdf_) v /= total;
  }

  const MixtureDensity& mixture() const noexcept { return m_; }

  /// One draw in (-1, 1).
  double operator()(rng::Engine& eng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    while (true) {
      const double a = tabulated_ ? draw_tabulated(eng, unif) : draw_inverse(unif(eng), unif(eng));
      if (a > -1.0 && a < 1.0) return a;
    }
  }

 private:
  struct PieceTable {
    double lo, hi, order_lo, order_hi;
    std::vector<double> x;    // cell boundaries
    std::vector<double> cdf;  // unnormalized CDF at boundaries
  };

  static PieceTable build_piece(const Piece& p, int cells) {
    PieceTable t{p.lo, p.hi, p.order_lo, p.order_hi, {}, {}};
    const double width = p.hi - p.lo;
    t.x.resize(cells + 1);
    for (int i = 0; i <= cells; ++i) {
      t.x[i] = p.lo + width * 0.5 * (1.0 - std::cos(std::numbers::pi * i / cells));
    }
    t.x.front() = p.lo;
    t.x.back() = p.hi;
    t.cdf.assign(cells + 1, 0.0);
    const auto rule = quad::gauss_legendre(8, 0.0, 1.0);
    const quad::Options edge_opt{1e-12, 1e-300, 3, 11};
    for (int i = 0; i < cells; ++i) {
      const double c = t.x[i], e = t.x[i + 1];
      double mass = 0.0;
      if (i == 0 || i == cells - 1) {
        mass = quad::integrate_or_throw(
            [&](const quad::EdgePoint& q) {
              const quad::EdgePoint in{q.x, i == 0 ? q.from_lo : (c - p.lo) + q.from_lo,
                                       i == cells - 1 ? q.to_hi : (p.hi - e) + q.to_hi};
              return p.eval(p.abscissa(in));
            },
            c, e, "CoefficientSampler: edge cell", edge_opt);
      } else {
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
          const double x = c + (e - c) * rule.nodes[k];
          mass += (e - c) * rule.weights[k] *
                  p.eval(p.abscissa({x, x - p.lo, p.hi - x}));
        }
      }
      t.cdf[i + 1] = t.cdf[i] + mass;
    }
    return t;
  }

  double draw_inverse(double u_piece, double u) const {
    const auto pit = std::lower_bound(piece_cdf_.begin(), piece_cdf_.end(), u_piece);
    const std::size_t pi = std::min<std::size_t>(pit - piece_cdf_.begin(), tables_.size() - 1);
    const PieceTable& t = tables_[pi];
    const double target = u * t.cdf.back();
    const auto it = std::upper_bound(t.cdf.begin(), t.cdf.end(), target);
    std::size_t i = std::clamp<std::size_t>(it - t.cdf.begin(), 1, t.cdf.size() - 1) - 1;
    const std::size_t last = t.cdf.size() - 2;
    const double cell_mass = t.cdf[i + 1] - t.cdf[i];
    if (!(cell_mass > 0.0)) return t.x[i];
    const double frac = (target - t.cdf[i]) / cell_mass;
    const double width = t.x[i + 1] - t.x[i];
    if (i == 0) {
      // mass up to distance s from lo grows like s^(order + 1)
      return t.lo + width * std::pow(frac, 1.0 / (t.order_lo + 1.0));
    }
    if (i == last) {
      return t.hi - width * std::pow(1.0 - frac, 1.0 / (t.order_hi + 1.0));
    }
    return t.x[i] + width * frac;
  }

  void build_tabulated(const TabulatedParams& p) {
    tabulated_ = true;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < p.x.size(); ++i) {
      total += 0.5 * (p.phi[i] + p.phi[i + 1]) * (p.x[i + 1] - p.x[i]);
      piece_cdf_.push_back(total);
    }
    for (double& v : piece_cdf_) v /= total;
    tab_ = p;
  }

  double draw_tabulated(rng::Engine& eng, std::uniform_real_distribution<double>& unif) const {
    const auto it = std::lower_bound(piece_cdf_.begin(), piece_cdf_.end(), unif(eng));
    const std::size_t i = std::min<std::size_t>(it - piece_cdf_.begin(), piece_cdf_.size() - 1);
    const double x0 = tab_.x[i], x1 = tab_.x[i + 1], y0 = tab_.phi[i], y1 = tab_.phi[i + 1];
    const double top = std::max(y0, y1);
    while (true) {
      const double s = unif(eng);
      if (unif(eng) * top <= y0 + (y1 - y0) * s) return x0 + (x1 - x0) * s;
    }
  }

  MixtureDensity m_;
  std::vector<PieceTable> tables_;
  std::vector<double> piece_cdf_;
  bool tabulated_ = false;
  TabulatedParams tab_;
};

inline double sample_coefficient(const CoefficientSampler& sampler, rng::Engine& eng) { return sampler(eng); }

// ---------------------------------------------------------------------------------------------
// Panel aggregation
// ---------------------------------------------------------------------------------------------

/// Stationary AR(1) path Y_1..Y_n: Y_0 ~ N(0, sigma^2 / (1 - a^2)), then the recursion
/// (preceded by burn_in discarded steps when requested).
inline std::vector<double> ar1_path(double a, const PanelConfig& config, rng::Engine& eng) {
  if (!(std::abs(a) < 1.0)) throw DomainError("ar1_path: |a| must be < 1");
  std::normal_distribution<double> z(0.0, 1.0);
  const double s = config.sigma_eps;
  double y = z(eng) * s / std::sqrt((1.0 - a) * (1.0 + a));
  for (long t = 0; t < config.burn_in; ++t) y = a * y + s * z(eng);
  std::vector<double> out(config.n);
  for (long t = 0; t < config.n; ++t) {
    y = a * y + s * z(eng);
    out[t] = y;
  }
  return out;
}

namespace detail {

// Members are summed in fixed blocks, each with Neumaier compensation, and blocks are
// merged in index order; the result does not depend on the number of threads.
inline std::vector<double> panel_sum(const CoefficientSampler& sampler, const PanelConfig& config,
                                     unsigned threads) {
  constexpr long block = 64;
  const long nblocks = (config.N + block - 1) / block;
  const long n = config.n;
  std::vector<std::vector<double>> block_sums(nblocks);
  auto work = [&](long b) {
    std::vector<double> sum(n, 0.0), comp(n, 0.0);
    for (long j = b * block; j < std::min(config.N, (b + 1) * block); ++j) {
      rng::Engine eng = rng::make_engine(rng::derive_seed(config.seed, static_cast<std::uint64_t>(j)));
      const double a = sampler(eng);
      const auto path = ar1_path(a, config, eng);
      for (long t = 0; t < n; ++t) {
        const double v = path[t];
        const double s = sum[t] + v;
        comp[t] += std::abs(sum[t]) >= std::abs(v) ? (sum[t] - s) + v : (v - s) + sum[t];
        sum[t] = s;
      }
    }
    for (long t = 0; t < n; ++t) sum[t] += comp[t];
    block_sums[b] = std::move(sum);
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(nblocks)));
  if (threads == 1) {
    for (long b = 0; b < nblocks; ++b) work(b);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (long b = w; b < nblocks; b += threads) work(b);
      });
    }
    for (auto& th : pool) th.join();
  }
  std::vector<double> total(n, 0.0), comp(n, 0.0);
  for (const auto& bs : block_sums) {
    for (long t = 0; t < n; ++t) {
      const double s = total[t] + bs[t];
      comp[t] += std::abs(total[t]) >= std::abs(bs[t]) ? (total[t] - s) + bs[t] : (bs[t] - s) + total[t];
      total[t] = s;
    }
  }
  for (long t = 0; t < n; ++t) total[t] += comp[t];
  return total;
}

}  // namespace detail

/// X_t = N^(-1/2) sum_j Y_t^(j) with a^(j) ~ phi. Member j draws its coefficient and
/// innovations from its own stream derived from (seed, j); paths are streamed, never stored.
inline AggregatedSeries aggregate(const CoefficientSampler& sampler, const PanelConfig& config,
                                  unsigned threads = std::thread::hardware_concurrency()) {
  config.validate();
  AggregatedSeries out;
  out.values = detail::panel_sum(sampler, config, threads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(config.N));
  for (double& v : out.values) v *= scale;
  out.meta = {SeriesSource::panel, config.N, config.sigma_eps * config.sigma_eps, config.seed,
              sampler.mixture().describe(), "panel"};
  out.source_mixture = std::make_shared<const MixtureDensity>(sampler.mixture());
  return out;
}

inline AggregatedSeries aggregate(const MixtureDensity& m, const PanelConfig& config,
                                  unsigned threads = std::thread::hardware_concurrency()) {
  return aggregate(CoefficientSampler(m), config, threads);
}

// ---------------------------------------------------------------------------------------------
// Exact Gaussian synthesis
// ---------------------------------------------------------------------------------------------

enum class SynthesisMethod { single, circulant, cholesky };

/// Exact sampler of a stationary Gaussian series with autocovariance sigma(0..n-1).
///
/// Circulant embedding of size 2(n-1), enlarged up to four times when the embedding has
/// eigenvalues below -1e-8; eigenvalues in [-1e-8, 0) are set to zero. If no embedding is
/// nonnegative, a Cholesky factor of the Toeplitz matrix is used (n <= 8192).
class GaussianSynthesizer {
 public:
  static constexpr double negative_tolerance = 1e-8;
  static constexpr long cholesky_limit = 8192;

  /// `extend(m)` returns sigma(0..m-1) for m > cov.size(), or an empty vector when no
  /// extension is available; it is called only when padding is needed.
  template <class Extend>
  GaussianSynthesizer(std::vector<double> cov, Extend&& extend) : n_(static_cast<long>(cov.size())) {
    if (n_ < 1) throw DomainError("GaussianSynthesizer: need n >= 1");
    if (!(cov[0] > 0.0)) throw Error(ErrorCode::synthesis_failure, "GaussianSynthesizer: sigma(0) must be positive");
    if (n_ == 1) {
      method_ = SynthesisMethod::single;
      scale_.assign(1, std::sqrt(cov[0]));
      return;
    }
    for (long mult = 1; mult <= 4; mult *= 2) {
      std::vector<double> c = cov;
      if (mult > 1) {
        c = extend(mult * (n_ - 1) + 1);
        if (c.empty()) break;
      }
      if (try_circulant(c)) return;
    }
    if (n_ > cholesky_limit) {
      throw Error(ErrorCode::synthesis_failure,
                  "GaussianSynthesizer: circulant embedding not nonnegative and n too large for Cholesky");
    }
    Eigen::MatrixXd t(n_, n_);
    for (long i = 0; i < n_; ++i)
      for (long j = 0; j < n_; ++j) t(i, j) = cov[std::abs(i - j)];
    Eigen::LLT<Eigen::MatrixXd> llt(t);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::synthesis_failure,
                  "GaussianSynthesizer: covariance is not positive definite (circulant and Cholesky failed)");
    }
    chol_ = llt.matrixL();
    method_ = SynthesisMethod::cholesky;
  }

  explicit GaussianSynthesizer(std::vector<double> cov)
      : GaussianSynthesizer(std::move(cov), [](long) { return std::vector<double>{}; }) {}

  long length() const noexcept { return n_; }
  SynthesisMethod method() const noexcept { return method_; }
  long embedding_size() const noexcept { return static_cast<long>(scale_.size()); }

  std::vector<double> sample(std::uint64_t seed) const {
    rng::Normal z(seed);
    std::vector<double> out(n_);
    if (method_ == SynthesisMethod::single) {
      out[0] = scale_[0] * z();
    } else if (method_ == SynthesisMethod::circulant) {
      const std::size_t m = scale_.size();
      std::vector<std::complex<double>> w(m), y(m);
      for (std::size_t k = 0; k < m; ++k) {
        const double re = z();
        const double im = z();
        w[k] = {scale_[k] * re, scale_[k] * im};
      }
      plan_->execute(w, y);
      for (long t = 0; t < n_; ++t) out[t] = y[t].real();
    } else {
      Eigen::VectorXd e(n_);
      for (long i = 0; i < n_; ++i) e(i) = z();
      const Eigen::VectorXd x = chol_.triangularView<Eigen::Lower>() * e;
      for (long i = 0; i < n_; ++i) out[i] = x(i);
    }
    return out;
  }

 private:
  bool try_circulant(const std::vector<double>& c) {
    const long half = static_cast<long>(c.size()) - 1;
    const std::size_t m = 2 * static_cast<std::size_t>(half);
    std::vector<std::complex<double>> row(m), eig(m);
    for (long k = 0; k <= half; ++k) row[k] = c[k];
    for (long k = 1; k < half; ++k) row[m - k] = c[k];
    fft::Plan plan(m, fft::Direction::forward);
    plan.execute(row, eig);
    std::vector<double> scale(m);
    for (std::size_t k = 0; k < m; ++k) {
      double lam = eig[k].real();
      if (lam < 0.0) {
        if (lam < -negative_tolerance) return false;
        lam = 0.0;
      }
      scale[k] = std::sqrt(lam / static_cast<double>(m));
    }
    scale_ = std::move(scale);
    plan_ = std::make_shared<fft::Plan>(m, fft::Direction::forward);
    method_ = SynthesisMethod::circulant;
    return true;
  }

  long n_;
  SynthesisMethod method_ = SynthesisMethod::circulant;
  std::vector<double> scale_;
  std::shared_ptr<fft::Plan> plan_;
  Eigen::MatrixXd chol_;
};

inline const char* to_string(SynthesisMethod m) {
  switch (m) {
    case SynthesisMethod::single: return "single";
    case SynthesisMethod::circulant: return "circulant";
    case SynthesisMethod::cholesky: return "cholesky";
  }
  return "circulant";
}

/// Synthesizer for the limit process of `m` at innovation variance sigma_eps2.
inline GaussianSynthesizer make_synthesizer(const MixtureDensity& m, long n, double sigma_eps2) {
  if (n < 1) throw DomainError("gaussian_synthesis: n must be >= 1");
  if (!(sigma_eps2 > 0.0)) throw DomainError("gaussian_synthesis: sigma_eps2 must be positive");
  return GaussianSynthesizer(covariances(m, static_cast<int>(n - 1), sigma_eps2),
                             [&](long len) { return covariances(m, static_cast<int>(len - 1), sigma_eps2); });
}

inline AggregatedSeries synthesize(const GaussianSynthesizer& synth, const MixtureDensity& m,
                                   double sigma_eps2, std::uint64_t seed) {
  AggregatedSeries out;
  out.values = synth.sample(seed);
  out.meta = {SeriesSource::synthesis, 0, sigma_eps2, seed, m.describe(), to_string(synth.method())};
  out.source_mixture = std::make_shared<const MixtureDensity>(m);
  return out;
}

/// Exact sample of the zero-mean Gaussian limit process with autocovariance sigma(h).
inline AggregatedSeries gaussian_synthesis(const MixtureDensity& m, long n, double sigma_eps2,
                                           std::uint64_t seed) {
  return synthesize(make_synthesizer(m, n, sigma_eps2), m, sigma_eps2, seed);
}

// ---------------------------------------------------------------------------------------------
// Series CSV
// ---------------------------------------------------------------------------------------------

inline void write_series_csv(std::ostream& out, const AggregatedSeries& s) {
  out << "# n: " << s.size() << '\n';
  out << "# N: " << (s.meta.source == SeriesSource::panel ? std::to_string(s.meta.N) : std::string("limit")) << '\n';
  out << "# sigma_eps2: " << io::format_double(s.meta.sigma_eps2) << '\n';
  out << "# seed: " << s.meta.seed << '\n';
  out << "# mixture: " << s.meta.mixture << '\n';
  out << "# source: " << to_string(s.meta.source) << '\n';
  if (!s.meta.method.empty()) out << "# method: " << s.meta.method << '\n';
  out << "x\n";
  for (double v : s.values) out << io::format_double(v) << '\n';
}

inline AggregatedSeries read_series_csv(std::istream& in) {
  const io::CsvTable t = io::read_csv(in, "series");
  AggregatedSeries s;
  for (const auto& r : t.rows) {
    if (r.size() != 1) throw Error(ErrorCode::io, "series: expected a single column");
    if (!std::isfinite(r[0])) throw Error(ErrorCode::io, "series: non-finite value");
    s.values.push_back(r[0]);
  }
  auto get = [&](const char* key) -> std::optional<std::string> {
    const auto it = t.header.find(key);
    return it == t.header.end() ? std::nullopt : std::optional<std::string>(it->second);
  };
  if (auto v = get("n"); v && std::stoul(*v) != s.values.size()) {
    throw Error(ErrorCode::io, "series: header n does not match the number of values");
  }
  if (auto v = get("N")) s.meta.N = *v == "limit" ? 0 : std::stol(*v);
  if (auto v = get("sigma_eps2")) s.meta.sigma_eps2 = io::parse_double(*v, "series sigma_eps2");
  if (auto v = get("seed")) s.meta.seed = std::stoull(*v);
  if (auto v = get("mixture")) s.meta.mixture = *v;
  if (auto v = get("method")) s.meta.method = *v;
  if (auto v = get("source")) {
    s.meta.source = *v == "panel" ? SeriesSource::panel
                    : *v == "synthesis" ? SeriesSource::synthesis
                                        : SeriesSource::external;
  }
  return s;
}

}  // namespace disagg
