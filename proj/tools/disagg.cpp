// disagg: command-line front end for simulation, estimation, experiments and the
// forward and MA-coefficient tables.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "disagg/disagg.hpp"

namespace {

using namespace disagg;
using nlohmann::json;
namespace fs = std::filesystem;

constexpr int exit_config = 2;
constexpr int exit_numeric = 3;

/// --mixture takes inline JSON or a path to a JSON file; --case picks a table row.
struct MixtureArgs {
  std::string mixture;
  int case_id = 0;

  void add(CLI::App* app) {
    app->add_option("--mixture", mixture, "mixture as inline JSON or a path to a JSON file");
    app->add_option("--case", case_id, "built-in case 1, 2 or 3")->check(CLI::Range(1, 3));
  }

  MixtureDensity resolve() const {
    if (!mixture.empty() && case_id != 0) throw ConfigError("give either --mixture or --case, not both");
    if (case_id != 0) return harness::case_mixture(case_id);
    if (mixture.empty()) throw ConfigError("a mixture is required (--mixture or --case)");
    json j;
    fs::path base;
    try {
      if (!mixture.empty() && mixture.front() == '{') {
        j = json::parse(mixture);
      } else {
        std::ifstream in(mixture);
        if (!in) throw ConfigError("cannot open mixture file " + mixture);
        j = json::parse(in, nullptr, true, true);
        base = fs::path(mixture).parent_path();
      }
    } catch (const json::exception& e) {
      throw ConfigError(std::string("mixture: ") + e.what());
    }
    return harness::mixture_from_json(j, base);
  }
};

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw Error(ErrorCode::io, "cannot write " + p.string());
  return f;
}

long parse_N(const std::string& s) {
  if (s == "limit") return 0;
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used == s.size() && v > 0) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("--N must be a positive integer or 'limit'");
}

// -------------------------------------------------------------------------------------------

struct SimulateCmd {
  MixtureArgs mix;
  long n = 1500;
  std::string N = "limit";
  double sigma_eps2 = 1.0;
  std::uint64_t seed = harness::default_seed;
  long burn_in = 0;
  unsigned threads = 1;
  std::string out;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("simulate", "generate an aggregated series (panel or limit synthesis)");
    mix.add(c);
    c->add_option("--n", n, "series length")->check(CLI::PositiveNumber);
    c->add_option("--N", N, "panel size, or 'limit' for Gaussian synthesis");
    c->add_option("--sigma-eps2", sigma_eps2, "innovation variance");
    c->add_option("--seed", seed, "master seed");
    c->add_option("--burn-in", burn_in, "extra AR(1) steps discarded (panel only)");
    c->add_option("--threads", threads, "worker threads for panel aggregation");
    c->add_option("-o,--out", out, "output CSV (default stdout)");
    c->callback([this] { run(); });
  }

  void run() const {
    const auto m = mix.resolve();
    const long members = parse_N(N);
    if (!(sigma_eps2 > 0.0)) throw ConfigError("--sigma-eps2 must be positive");
    AggregatedSeries s;
    if (members == 0) {
      s = gaussian_synthesis(m, n, sigma_eps2, seed);
    } else {
      PanelConfig pc;
      pc.N = members;
      pc.n = n;
      pc.sigma_eps = std::sqrt(sigma_eps2);
      pc.burn_in = burn_in;
      pc.seed = seed;
      try {
        pc.validate();
      } catch (const DomainError& e) {
        throw ConfigError(e.what());
      }
      s = aggregate(m, pc, std::max(1u, threads));
    }
    if (out.empty()) {
      write_series_csv(std::cout, s);
    } else {
      auto f = open_out(out);
      write_series_csv(f, s);
    }
  }
};

struct EstimateCmd {
  std::string input;
  double alpha = 0.5;
  double gamma = 0.41;
  std::optional<int> kn;
  std::optional<double> d;
  bool clip = false;
  int grid = MixtureEstimate::grid_size;
  std::string out;
  std::string sidecar;
  MixtureArgs truth;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("estimate", "estimate the mixture density from a series CSV");
    c->add_option("-i,--input", input, "series CSV")->required();
    c->add_option("--alpha", alpha, "Gegenbauer weight exponent (> -1/2)");
    c->add_option("--gamma", gamma, "truncation exponent, Kn = floor(gamma log n)");
    c->add_option("--kn", kn, "fixed truncation degree (overrides --gamma)");
    c->add_option("--d", d, "memory parameter; sets alpha = 1 - 2d");
    c->add_flag("--clip", clip, "also write the clipped, renormalized curve (display only)");
    c->add_option("--grid", grid, "number of Chebyshev grid points")->check(CLI::Range(8, 1 << 20));
    c->add_option("-o,--out", out, "grid CSV (default stdout)");
    c->add_option("--json", sidecar, "JSON sidecar path (default: <out>.json)");
    truth.add(c);
    c->callback([this] { run(); });
  }

  void run() const {
    std::ifstream in(input);
    if (!in) throw ConfigError("cannot open series " + input);
    AggregatedSeries s;
    try {
      s = read_series_csv(in);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    EstimatorConfig cfg;
    cfg.alpha = alpha;
    cfg.gamma = gamma;
    cfg.kn = kn;
    cfg.d = d;
    cfg.use_alpha_rule = d.has_value();
    cfg.clip = clip;
    if (!kn && !(gamma > 0.0 && gamma < gamma_max)) throw ConfigError("--gamma must lie in (0, 0.5673)");
    if (d && !(*d > 0.0 && *d < 0.5)) throw ConfigError("--d must lie in (0, 1/2)");
    if (!(cfg.effective_alpha() > -0.5)) throw ConfigError("--alpha must exceed -1/2");
    if (kn && (*kn < 0 || *kn > GegenbauerBasis::max_supported_degree)) throw ConfigError("--kn out of range");
    const auto est = estimate(s, cfg);
    const auto xs = harness::chebyshev_grid(grid);
    const auto phi = est.evaluate(xs);
    std::vector<double> clipped;
    if (clip) clipped = est.clipped(xs);
    std::optional<MixtureDensity> true_m;
    if (!truth.mixture.empty() || truth.case_id != 0) true_m = truth.resolve();

    auto write_grid = [&](std::ostream& os) {
      os << "# alpha: " << io::format_double(est.alpha()) << '\n';
      os << "# kn: " << est.kn() << '\n';
      os << "x,phi_hat" << (clip ? ",phi_clipped" : "") << (true_m ? ",phi_true" : "") << '\n';
      for (std::size_t i = 0; i < xs.size(); ++i) {
        os << io::format_double(xs[i]) << ',' << io::format_double(phi[i]);
        if (clip) os << ',' << io::format_double(clipped[i]);
        if (true_m) os << ',' << io::format_double((*true_m)(xs[i]));
        os << '\n';
      }
    };
    json j;
    j["input"] = input;
    j["n"] = s.size();
    j["series"] = {{"N", s.meta.N == 0 ? json("limit") : json(s.meta.N)},
                   {"sigma_eps2", s.meta.sigma_eps2},
                   {"seed", s.meta.seed},
                   {"mixture", s.meta.mixture}};
    j["alpha"] = est.alpha();
    j["kn"] = est.kn();
    j["gamma"] = est.gamma();
    j["sigma_eps2_hat"] = est.sigma_eps2_hat();
    j["autocov"] = est.autocov();
    j["zeta_hat"] = est.zeta_hat();
    j["mass"] = est.mass();
    j["warnings"] = cfg.warnings();
    j["grid_size"] = grid;
    if (true_m) {
      const auto w = harness::fejer_weights(grid);
      std::vector<double> t(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) t[i] = (*true_m)(xs[i]);
      j["ise"] = harness::integrated_squared_error(phi, t, w);
    }
    if (out.empty()) {
      write_grid(std::cout);
      if (!sidecar.empty()) {
        auto f = open_out(sidecar);
        f << j.dump(2) << '\n';
      }
      return;
    }
    {
      auto f = open_out(out);
      write_grid(f);
    }
    auto f = open_out(sidecar.empty() ? out + ".json" : sidecar);
    f << j.dump(2) << '\n';
  }
};

struct ExperimentCmd {
  std::string spec;
  int case_id = 0;
  std::string out = "experiment_out";
  std::optional<int> M;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool timing = false;
  bool curves = false;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("experiment", "run a Monte-Carlo experiment from a spec file");
    c->add_option("-s,--spec", spec, "experiment spec (JSON)");
    c->add_option("--case", case_id, "use the built-in preset for case 1, 2 or 3")->check(CLI::Range(1, 3));
    c->add_option("-o,--out", out, "output directory");
    c->add_option("--M", M, "override the replication count");
    c->add_option("--seed", seed, "override the master seed");
    c->add_option("--threads", threads, "worker threads");
    c->add_flag("--timing", timing, "include wall-clock time in the report");
    c->add_flag("--curves", curves, "include every replication curve in the report");
    c->callback([this] { run(); });
  }

  void run() const {
    if (spec.empty() == (case_id == 0)) throw ConfigError("give exactly one of --spec or --case");
    harness::ExperimentSpec s = spec.empty() ? harness::preset(case_id) : harness::load_spec(spec);
    if (M) s.M = *M;
    if (seed) s.seed = *seed;
    if (threads) s.threads = std::max(1u, *threads);
    s.validate();
    const auto r = harness::run_experiment(s);
    harness::write_report_files(out, r, {timing, curves});
    std::cerr << "experiment " << s.name << ": " << r.succeeded << "/" << s.M << " replications, MISE "
              << r.mise;
    if (r.slope) std::cerr << ", gamma_hat " << r.slope->gamma_hat;
    std::cerr << " -> " << out << '\n';
    if (r.threshold_exceeded()) {
      throw Error(ErrorCode::failure_threshold,
                  std::to_string(r.failed) + " of " + std::to_string(s.M) + " replications failed");
    }
  }
};

struct MaCoeffsCmd {
  MixtureArgs mix;
  int J = 4096;
  std::string out;
  std::string sidecar;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("ma-coeffs", "MA coefficients h_j, g_j, psi_j of a farima or product mixture");
    mix.add(c);
    c->add_option("--J", J, "largest index")->check(CLI::Range(100, 8191));
    c->add_option("-o,--out", out, "CSV output (default stdout)");
    c->add_option("--json", sidecar, "JSON sidecar path (default: <out>.json)");
    c->callback([this] { run(); });
  }

  void run() const {
    const auto m = mix.resolve();
    if (m.family() != MixtureFamily::farima && m.family() != MixtureFamily::product) {
      throw ConfigError("ma-coeffs needs a farima or product mixture");
    }
    const auto ma = ma_coefficients(m, J);
    const auto tc = tail_check(ma.psi, ma.d);
    double gsum = 0.0;
    for (double v : ma.g) gsum += v;
    auto write_csv = [&](std::ostream& os) {
      os << "j,h,g,psi\n";
      for (int j = 0; j <= J; ++j) {
        os << j << ',' << io::format_double(ma.h[j]) << ',' << io::format_double(ma.g[j]) << ','
           << io::format_double(ma.psi[j]) << '\n';
      }
    };
    json j;
    j["mixture"] = m.describe();
    j["d"] = ma.d;
    j["J"] = J;
    j["sigma2"] = ma.sigma2;
    j["sigma_g2"] = ma.sigma_g2;
    j["sum_g"] = gsum;
    j["tail_check"] = {{"psi_exponent", tc.psi_exponent},     {"diff_exponent", tc.diff_exponent},
                       {"energy_increment", tc.energy_increment}, {"psi_ok", tc.psi_ok},
                       {"diff_ok", tc.diff_ok},               {"passed", tc.passed()}};
    if (out.empty()) {
      write_csv(std::cout);
      if (!sidecar.empty()) {
        auto f = open_out(sidecar);
        f << j.dump(2) << '\n';
      }
      return;
    }
    {
      auto f = open_out(out);
      write_csv(f);
    }
    auto f = open_out(sidecar.empty() ? out + ".json" : sidecar);
    f << j.dump(2) << '\n';
  }
};

struct ForwardCmd {
  MixtureArgs mix;
  int max_lag = 50;
  int lambda_points = 256;
  double sigma_eps2 = 1.0;
  std::string cov_out;
  std::string spec_out;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("forward", "covariance and spectral-density tables of a mixture");
    mix.add(c);
    c->add_option("--max-lag", max_lag, "largest covariance lag")->check(CLI::Range(0, 1 << 20));
    c->add_option("--lambda-points", lambda_points, "frequencies in (0, pi]")->check(CLI::Range(1, 1 << 20));
    c->add_option("--sigma-eps2", sigma_eps2, "innovation variance");
    c->add_option("--cov-out", cov_out, "covariance CSV (default stdout)");
    c->add_option("--spec-out", spec_out, "spectral CSV (default stdout after the covariances)");
    c->callback([this] { run(); });
  }

  void run() const {
    const auto m = mix.resolve();
    if (!(sigma_eps2 > 0.0)) throw ConfigError("--sigma-eps2 must be positive");
    const auto cov = covariances(m, max_lag, sigma_eps2);
    auto write_cov = [&](std::ostream& os) {
      os << "# mixture: " << m.describe() << '\n' << "# sigma_eps2: " << io::format_double(sigma_eps2) << '\n';
      os << "h,sigma\n";
      for (int h = 0; h <= max_lag; ++h) os << h << ',' << io::format_double(cov[h]) << '\n';
    };
    auto write_spec = [&](std::ostream& os) {
      os << "# mixture: " << m.describe() << '\n' << "# sigma_eps2: " << io::format_double(sigma_eps2) << '\n';
      os << "lambda,f\n";
      for (int i = 1; i <= lambda_points; ++i) {
        const double l = std::numbers::pi * i / lambda_points;
        os << io::format_double(l) << ',' << io::format_double(spectral(m, l, sigma_eps2)) << '\n';
      }
    };
    if (cov_out.empty()) {
      write_cov(std::cout);
    } else {
      auto f = open_out(cov_out);
      write_cov(f);
    }
    if (spec_out.empty()) {
      if (cov_out.empty()) std::cout << '\n';
      write_spec(std::cout);
    } else {
      auto f = open_out(spec_out);
      write_spec(f);
    }
  }
};

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::config:
    case ErrorCode::invalid_argument:
    case ErrorCode::io:
      return exit_config;
    default:
      return exit_numeric;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Disaggregation of long-memory aggregated AR(1) panels"};
  app.require_subcommand(1);
  SimulateCmd simulate;
  EstimateCmd estimate;
  ExperimentCmd experiment;
  MaCoeffsCmd ma;
  ForwardCmd forward;
  simulate.add(app);
  estimate.add(app);
  experiment.add(app);
  ma.add(app);
  forward.add(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_config;
  } catch (const Error& e) {
    std::cerr << "disagg: " << to_string(e.code()) << ": " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "disagg: " << e.what() << '\n';
    return exit_config;
  }
  return 0;
}
