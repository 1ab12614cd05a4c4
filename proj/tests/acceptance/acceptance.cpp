// Acceptance suite: one PASS/FAIL line per criterion. Exit status is zero only when the
// set of failing criteria equals the --expected-failures list (default: none).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "disagg/disagg.hpp"

using namespace disagg;
using namespace disagg::harness;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double time_limit_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ExperimentSpec case1_spec(int M) {
  auto s = preset(1);
  s.M = M;
  s.estimator.kn = 3;
  s.estimator.d.reset();
  s.estimator.use_alpha_rule = false;
  s.estimator.alpha = 0.5;
  return s;
}

Outcome orthonormality() {
  double worst = 0.0;
  for (double alpha : {0.2, 0.5, 0.6}) {
    const GegenbauerBasis b(alpha, 10);
    const auto rule = quad::gauss_jacobi(16, alpha, alpha);
    for (int j = 0; j <= 10; ++j) {
      for (int k = 0; k <= 10; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
          s += rule.weights[i] * b.evaluate(j, rule.nodes[i]) * b.evaluate(k, rule.nodes[i]);
        }
        worst = std::max(worst, std::abs(s - (j == k ? 1.0 : 0.0)));
      }
    }
  }
  return {worst < 1e-8, fmt("max |<G_j,G_k> - delta_jk| = %.3g (limit 1e-8)", worst)};
}

Outcome unit_mass() {
  double worst = 0.0;
  int count = 0;
  for (int c = 1; c <= 3; ++c) {
    const auto m = case_mixture(c);
    const auto synth = make_synthesizer(m, 1500, 1.0);
    EstimatorConfig cfg;
    cfg.d = case_memory(c);
    cfg.kn = 3;
    const int reps = c == 3 ? 16 : 17;
    for (int r = 0; r < reps; ++r, ++count) {
      const auto est = estimate(synth.sample(rng::derive_seed(default_seed, 1000 + c, r)), cfg);
      const double q = quad::integrate_or_throw([&](double x) { return est(x); }, -1.0, 1.0, "mass",
                                                quad::Options{1e-12, 1e-15, 3, 12});
      worst = std::max(worst, std::abs(q - 1.0));
    }
  }
  return {worst < 1e-6, fmt("%d series, max |int phi_hat - 1| = %.3g (limit 1e-6)", count, worst)};
}

Outcome farima_duality() {
  const double d = 0.25;
  const auto m = MixtureDensity::farima(d);
  const double cov0 = covariance(m, 0, 1.0);
  const double spec_f = integrate_frequency([d](double l) { return farima_spectral(l, d); }, 1e-12);
  const double closed = special::gamma(1.0 - 2.0 * d) / std::pow(special::gamma(1.0 - d), 2);
  // Side checks: sigma(0) against its own spectral integral, and the FARIMA closed form.
  const double spec_m = integrate_frequency([&](double l) { return spectral(m, l, 1.0); }, 1e-12);
  const double diff = std::abs(cov0 - spec_f);
  return {diff < 1e-5,
          fmt("sigma(0) = %.10f, int f(lambda;d) = %.10f, |diff| = %.3g (limit 1e-5); closed form %.10f; "
              "int of the mixture's own spectral density %.10f (|diff| %.2g); "
              "the mixture's spectral density is c_d f(lambda;d), c_d = %.6f",
              cov0, spec_f, diff, closed, spec_m, std::abs(spec_m - cov0), farima_association_constant(d))};
}

Outcome kolmogorov() {
  double worst = 0.0;
  std::ostringstream os;
  for (double d : {0.1, 0.25, 0.4}) {
    const double s2 = innovation_variance(farima_spectral_density(d));
    worst = std::max(worst, std::abs(s2 - 1.0));
    os << fmt("d=%.2f: %.12f  ", d, s2);
  }
  return {worst <= 1e-6, os.str() + fmt("max |sigma2 - 1| = %.3g (limit 1e-6)", worst)};
}

Outcome ma_asymptotics() {
  const double d = 0.2;
  const auto m = product_mixture(MixtureDensity::farima(d), MixtureDensity::compensator(0.1, 0.8));
  const auto ma = ma_coefficients(m, 4096);
  double gsum = 0.0;
  for (double g : ma.g) gsum += g;
  const double ratio = ma.psi[2000] * std::pow(2000.0, 1.0 - d) * special::gamma(d) / gsum;
  const auto t = tail_check(ma.psi, d);
  const bool ok = ratio >= 0.95 && ratio <= 1.05 && t.diff_exponent <= d - 2.0 + 0.1;
  return {ok, fmt("ratio at j=2000 = %.6f (band [0.95,1.05]); psi exponent %.4f; difference exponent %.4f "
                  "(limit %.2f); sigma2 = %.10f, sigma_g2/2pi = %.10f",
                  ratio, t.psi_exponent, t.diff_exponent, d - 1.9, ma.sigma2, ma.sigma_g2 / (2 * std::numbers::pi))};
}

Outcome appendix_asymptotics() {
  const double d = 0.2, kappa = 0.1, a = 0.8;
  const double x = 1e-3;
  const double psi1 = appendix_a_psi(x, d, kappa, a).first;
  const double psi2 = appendix_a_psi(-x, d, kappa, a).second;
  const double r1 = psi1 / (std::pow(a, kappa + 1.0) / (kappa + 1.0) * std::pow(x, d));
  const double r2 = psi2 / (special::gamma(d) * special::gamma(1.0 - d) * std::pow(x, kappa + d));
  const double r1_alt = psi1 / (std::pow(a, kappa) / kappa * std::pow(x, d));
  const bool ok = r1 >= 0.9 && r1 <= 1.1 && r2 >= 0.9 && r2 <= 1.1;
  return {ok, fmt("psi1 ratio %.4f, psi2 ratio %.4f (band [0.9,1.1]); psi1 against a*^kappa/kappa x^d: %.4f", r1, r2,
                  r1_alt)};
}

Outcome dual_representation() {
  const auto x = gaussian_synthesis(case_mixture(1), 2048, 1.0, default_seed).values;
  EstimatorConfig cfg;
  cfg.alpha = 0.5;
  const auto est = estimate(x, cfg);
  const SpectralFormEstimator spec(x, std::make_shared<const GegenbauerBasis>(0.5, est.kn()));
  double worst = 0.0;
  for (double t : {-0.5, 0.0, 0.5, 0.96}) worst = std::max(worst, std::abs(spec(t) - est(t)));
  return {worst < 1e-4, fmt("Kn = %d, max |covariance form - periodogram form| = %.3g (limit 1e-4)", est.kn(), worst)};
}

Outcome normality() {
  auto s = case1_spec(200);
  s.eval_points = {-0.5};
  const auto r = run_experiment(s);
  const auto& p = r.points.front();
  if (!p.normality) return {false, "Shapiro-Wilk unavailable: " + p.normality_note};
  return {p.normality->p > 0.05, fmt("%d/%d replications, W = %.5f, p = %.4f (need p > 0.05), seed %llu",
                                     r.succeeded, s.M, p.normality->w, p.normality->p,
                                     static_cast<unsigned long long>(s.seed))};
}

Outcome variance_decay() {
  auto s = case1_spec(200);
  s.eval_points = {-0.5};
  const auto v = variance_slope(s, {500, 1000, 2000, 4000});
  std::ostringstream os;
  for (std::size_t i = 0; i < v.n.size(); ++i) os << fmt("Var(n=%ld) = %.4g  ", v.n[i], v.variance[i]);
  return {v.gamma_hat >= 0.8 && v.gamma_hat <= 1.2,
          os.str() + fmt("gamma_hat = %.4f (band [0.8,1.2]), R^2 = %.4f", v.gamma_hat, v.r_squared)};
}

Outcome consistency() {
  auto s = case1_spec(100);
  const auto r = run_experiment(s);
  int inside = 0, total = 0;
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    if (r.grid[i] < -0.9 || r.grid[i] > 0.98) continue;
    ++total;
    if (r.true_phi[i] >= r.boxplot[i][1] && r.true_phi[i] <= r.boxplot[i][3]) ++inside;
  }
  const double coverage = static_cast<double>(inside) / total;
  s.n = 500;
  const double mise_small = run_experiment(s).mise;
  s.n = 5000;
  const double mise_large = run_experiment(s).mise;
  return {coverage >= 0.9 && mise_large < mise_small,
          fmt("true phi inside the replication IQR at %d/%d grid points (%.3f, need 0.9); MISE n=500 %.5f, "
              "n=1500 %.5f, n=5000 %.5f",
              inside, total, coverage, mise_small, r.mise, mise_large)};
}

Outcome alpha_rule_check() {
  auto s = case1_spec(100);
  std::vector<double> m;
  for (double alpha : {0.5, 0.2, 0.8}) {
    s.estimator.alpha = alpha;
    m.push_back(run_experiment(s).mise);
  }
  return {m[0] <= m[1] && m[0] <= m[2], fmt("MISE alpha=0.5 %.5f, alpha=0.2 %.5f, alpha=0.8 %.5f", m[0], m[1], m[2])};
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(std::stoi(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected, only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--expected-failures" && i + 1 < argc) {
      expected = parse_list(argv[++i]);
    } else if (a == "--only" && i + 1 < argc) {
      only = parse_list(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--expected-failures 3,6] [--only 1,2]\n");
      return 2;
    }
  }

  const std::vector<Criterion> criteria{
      {1, "Gegenbauer orthonormality", 5, orthonormality},
      {2, "unit mass of the estimator", 60, unit_mass},
      {3, "FARIMA covariance/spectral duality", 60, farima_duality},
      {4, "Kolmogorov innovation variance", 60, kolmogorov},
      {5, "MA coefficient asymptotics", 60, ma_asymptotics},
      {6, "small-x asymptotics of psi1, psi2", 60, appendix_asymptotics},
      {7, "covariance and periodogram forms agree", 60, dual_representation},
      {8, "Shapiro-Wilk normality, Case 1", 600, normality},
      {9, "variance decay slope, Case 1", 1200, variance_decay},
      {10, "consistency band and MISE, Case 1", 900, consistency},
      {11, "alpha = 1 - 2d minimizes MISE, Case 1", 1200, alpha_rule_check},
  };

  std::set<int> failed;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.time_limit_s) {
      o.pass = false;
      o.detail += fmt("; runtime %.1f s exceeds %.0f s", secs, c.time_limit_s);
    }
    if (!o.pass) failed.insert(c.id);
    std::printf("criterion %2d: %s  %s [%.1f s]\n    %s\n", c.id, o.pass ? "PASS" : "FAIL",
                c.title, secs, o.detail.c_str());
    std::fflush(stdout);
  }

  std::set<int> expected_in_run;
  for (int id : expected) {
    if (only.empty() || only.count(id)) expected_in_run.insert(id);
  }
  std::printf("summary: %zu failing", failed.size());
  for (int id : failed) std::printf(" %d", id);
  std::printf("; expected failures");
  for (int id : expected_in_run) std::printf(" %d", id);
  std::printf("\n");
  if (failed != expected_in_run) {
    std::printf("result: failing set differs from the expected set\n");
    return 1;
  }
  return 0;
}
