#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "disagg/core/error.hpp"
#include "disagg/core/rng.hpp"
#include "disagg/core/stats.hpp"
#include "disagg/estimator.hpp"
#include "disagg/harness/config.hpp"
#include "disagg/harness/normality.hpp"
#include "disagg/simulate.hpp"

namespace disagg::harness {

/// Maximum share of failed replications before a run is declared failed.
inline constexpr double failure_threshold = 0.2;

/// Runs fn(0..count-1) on up to `threads` workers. Each index writes only its own slot, so
/// the outcome does not depend on scheduling.
inline void parallel_for(int count, unsigned threads, const std::function<void(int)>& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max(count, 1))));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Ascending first-kind Chebyshev points -cos(pi (i + 1/2) / size).
inline std::vector<double> chebyshev_grid(int size) {
  std::vector<double> g(size);
  for (int i = 0; i < size; ++i) g[i] = -std::cos(std::numbers::pi * (i + 0.5) / size);
  return g;
}

/// Fejer's first rule on the Chebyshev grid of the same size.
inline std::vector<double> fejer_weights(int size) {
  std::vector<double> w(size);
  for (int i = 0; i < size; ++i) {
    const double theta = std::numbers::pi * (i + 0.5) / size;
    double s = 0.0;
    for (int j = 1; j <= size / 2; ++j) s += std::cos(2.0 * j * theta) / (4.0 * j * j - 1.0);
    w[i] = 2.0 / size * (1.0 - 2.0 * s);
  }
  return w;
}

/// Produces the r-th replication series of length n for a spec: limit-process synthesis
/// when N = 0, otherwise an N-member panel. Replication seeds are derive_seed(seed, r).
class ReplicationSource {
 public:
  ReplicationSource(const ExperimentSpec& spec, long n) : spec_(spec), n_(n) {
    if (spec.N == 0) {
      synth_.emplace(make_synthesizer(*spec.mixture, n, spec.sigma_eps2));
    } else {
      sampler_.emplace(*spec.mixture);
    }
  }

  std::vector<double> operator()(int r) const {
    const std::uint64_t seed = rng::derive_seed(spec_.seed, static_cast<std::uint64_t>(r));
    if (synth_) return synth_->sample(seed);
    PanelConfig pc;
    pc.N = spec_.N;
    pc.n = n_;
    pc.sigma_eps = std::sqrt(spec_.sigma_eps2);
    pc.seed = seed;
    return aggregate(*sampler_, pc, 1).values;
  }

  std::string method() const { return synth_ ? to_string(synth_->method()) : "panel"; }

 private:
  const ExperimentSpec& spec_;
  long n_;
  std::optional<GaussianSynthesizer> synth_;
  std::optional<CoefficientSampler> sampler_;
};

struct PointSummary {
  double x = 0.0;
  double true_phi = 0.0;
  std::vector<double> samples;  // successful replications, in index order
  double mean = 0.0;
  double variance = 0.0;
  std::optional<ShapiroWilk> normality;
  std::string normality_note;
  std::vector<std::pair<double, double>> qq;
  std::vector<HistogramBin> histogram;
};

struct VarianceSlope {
  double gamma_hat = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double x = 0.0;
  std::vector<long> n;
  std::vector<double> variance;
  std::vector<int> failed;
};

struct ReplicationReport {
  ExperimentSpec spec;
  int kn = 0;
  double alpha = 0.0;
  std::string method;
  int succeeded = 0;
  int failed = 0;
  std::map<std::string, int> failure_reasons;
  std::vector<double> grid;
  std::vector<double> weights;
  std::vector<double> true_phi;
  std::vector<std::vector<double>> curves;       // successful replications x grid
  std::vector<std::array<double, 5>> boxplot;    // q05, q25, q50, q75, q95 per grid point
  std::vector<double> ise;
  double mise = 0.0;
  std::vector<PointSummary> points;
  std::optional<VarianceSlope> slope;
  std::vector<std::string> warnings;
  double seconds = 0.0;

  bool threshold_exceeded() const noexcept { return failed > failure_threshold * spec.M; }
};

/// Integrated squared error of one curve against phi on a weighted grid.
inline double integrated_squared_error(const std::vector<double>& curve, const std::vector<double>& truth,
                                       const std::vector<double>& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) s += weights[i] * (curve[i] - truth[i]) * (curve[i] - truth[i]);
  return s;
}

/// M^-1 sum_m int (phi_hat^(m) - phi)^2 over the report grid.
inline double mise(const ReplicationReport& report, const MixtureDensity& truth) {
  std::vector<double> t(report.grid.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = truth(report.grid[i]);
  if (report.curves.empty()) throw Error(ErrorCode::failure_threshold, "mise: no successful replications");
  double s = 0.0;
  for (const auto& c : report.curves) s += integrated_squared_error(c, t, report.weights);
  return s / static_cast<double>(report.curves.size());
}

/// Slope of log Var on log n, returned as gamma_hat = -slope. `stat(n, r)` gives the r-th
/// replication value at size n, or nullopt for a failed replication.
inline VarianceSlope variance_slope(const std::function<std::optional<double>(long, int)>& stat,
                                    const std::vector<long>& n_values, int M, unsigned threads = 1) {
  if (std::set<long>(n_values.begin(), n_values.end()).size() < 4 || n_values.size() != std::set<long>(n_values.begin(), n_values.end()).size()) {
    throw DomainError("variance_slope: need at least 4 distinct sample sizes, no repeats");
  }
  if (M < 2) throw DomainError("variance_slope: need M >= 2");
  VarianceSlope out;
  std::vector<double> lx, ly;
  for (long n : n_values) {
    std::vector<std::optional<double>> v(M);
    parallel_for(M, threads, [&](int r) { v[r] = stat(n, r); });
    std::vector<double> ok;
    for (const auto& x : v) {
      if (x) ok.push_back(*x);
    }
    const int failed = M - static_cast<int>(ok.size());
    if (failed > failure_threshold * M) {
      throw Error(ErrorCode::failure_threshold,
                  "variance_slope: " + std::to_string(failed) + " of " + std::to_string(M) +
                      " replications failed at n = " + std::to_string(n));
    }
    const double var = ok.size() >= 2 ? stats::variance(ok) : 0.0;
    if (!(var > 0.0)) {
      throw Error(ErrorCode::degenerate_sample, "variance_slope: nonpositive variance at n = " + std::to_string(n));
    }
    out.n.push_back(n);
    out.variance.push_back(var);
    out.failed.push_back(failed);
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(var));
  }
  const auto fit = stats::least_squares(lx, ly);
  out.gamma_hat = -fit.slope;
  out.intercept = fit.intercept;
  out.r_squared = fit.r_squared;
  return out;
}

namespace detail {

inline std::shared_ptr<const GegenbauerBasis> basis_for(const ExperimentSpec& spec, long n) {
  const int kn = spec.estimator.effective_kn(n);
  if (kn + 2 >= n) throw ConfigError("experiment: need Kn + 2 < n");
  return std::make_shared<const GegenbauerBasis>(spec.estimator.effective_alpha(), kn);
}

}  // namespace detail

/// Variance decay of phi_hat(x) at the first evaluation point over spec.n_grid.
inline VarianceSlope variance_slope(const ExperimentSpec& spec, const std::vector<long>& n_values) {
  spec.validate();
  const double x = spec.eval_points.front();
  std::map<long, std::pair<std::unique_ptr<ReplicationSource>, std::shared_ptr<const GegenbauerBasis>>> setup;
  for (long n : n_values) setup[n] = {std::make_unique<ReplicationSource>(spec, n), detail::basis_for(spec, n)};
  auto stat = [&](long n, int r) -> std::optional<double> {
    const auto& [src, basis] = setup.at(n);
    try {
      const auto series = (*src)(r);
      return estimate_from_autocov(autocovariances(series, basis->max_degree() + 2), basis, spec.estimator.gamma)(x);
    } catch (const DegenerateSampleError&) {
      return std::nullopt;
    }
  };
  auto out = variance_slope(stat, n_values, spec.M, spec.threads);
  out.x = x;
  return out;
}

/// M replications of series generation plus estimation, summarized for the figures.
/// Replications whose estimate fails (non-positive sigma_eps2_hat) are counted, not fatal;
/// check threshold_exceeded() on the result.
inline ReplicationReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();
  ReplicationReport rep;
  rep.spec = spec;
  rep.warnings = spec.estimator.warnings();
  const auto basis = detail::basis_for(spec, spec.n);
  rep.kn = basis->max_degree();
  rep.alpha = basis->alpha();
  rep.grid = chebyshev_grid(spec.grid_size);
  rep.weights = fejer_weights(spec.grid_size);
  rep.true_phi.resize(rep.grid.size());
  for (std::size_t i = 0; i < rep.grid.size(); ++i) rep.true_phi[i] = (*spec.mixture)(rep.grid[i]);

  const ReplicationSource source(spec, spec.n);
  rep.method = source.method();

  struct Outcome {
    bool ok = false;
    std::string error;
    std::vector<double> curve;
    std::vector<double> at_points;
  };
  std::vector<Outcome> outcomes(spec.M);
  parallel_for(spec.M, spec.threads, [&](int r) {
    Outcome& o = outcomes[r];
    try {
      const auto series = source(r);
      const auto est = estimate_from_autocov(autocovariances(series, rep.kn + 2), basis, spec.estimator.gamma);
      o.curve = est.evaluate(rep.grid);
      o.at_points = est.evaluate(spec.eval_points);
      o.ok = true;
    } catch (const DegenerateSampleError& e) {
      o.error = e.what();
    }
  });

  rep.points.resize(spec.eval_points.size());
  for (std::size_t p = 0; p < spec.eval_points.size(); ++p) {
    rep.points[p].x = spec.eval_points[p];
    rep.points[p].true_phi = (*spec.mixture)(spec.eval_points[p]);
  }
  for (auto& o : outcomes) {
    if (!o.ok) {
      ++rep.failed;
      ++rep.failure_reasons[o.error];
      continue;
    }
    ++rep.succeeded;
    for (std::size_t p = 0; p < o.at_points.size(); ++p) rep.points[p].samples.push_back(o.at_points[p]);
    rep.curves.push_back(std::move(o.curve));
  }

  if (!rep.curves.empty()) {
    rep.boxplot.resize(rep.grid.size());
    std::vector<double> column(rep.curves.size());
    for (std::size_t i = 0; i < rep.grid.size(); ++i) {
      for (std::size_t m = 0; m < rep.curves.size(); ++m) column[m] = rep.curves[m][i];
      std::sort(column.begin(), column.end());
      rep.boxplot[i] = {stats::quantile_sorted(column, 0.05), stats::quantile_sorted(column, 0.25),
                        stats::quantile_sorted(column, 0.50), stats::quantile_sorted(column, 0.75),
                        stats::quantile_sorted(column, 0.95)};
    }
    for (const auto& c : rep.curves) rep.ise.push_back(integrated_squared_error(c, rep.true_phi, rep.weights));
    rep.mise = stats::mean(rep.ise);
  }

  for (auto& pt : rep.points) {
    if (pt.samples.empty()) continue;
    pt.mean = stats::mean(pt.samples);
    pt.variance = pt.samples.size() >= 2 ? stats::variance(pt.samples) : 0.0;
    pt.histogram = histogram(pt.samples);
    if (pt.samples.size() < 3) {
      pt.normality_note = "fewer than 3 successful replications";
      continue;
    }
    pt.qq = qq_data(pt.samples);
    if (pt.samples.size() > 5000) {
      pt.normality_note = "more than 5000 replications; Shapiro-Wilk not applicable";
      continue;
    }
    try {
      pt.normality = shapiro_wilk(pt.samples);
    } catch (const Error& e) {
      pt.normality_note = e.what();
    }
  }

  if (!spec.n_grid.empty()) rep.slope = variance_slope(spec, spec.n_grid);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace disagg::harness
