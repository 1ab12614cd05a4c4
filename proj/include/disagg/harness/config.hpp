#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "disagg/core/error.hpp"
#include "disagg/estimator.hpp"
#include "disagg/io/csv.hpp"
#include "disagg/mixture.hpp"

namespace disagg::harness {

using nlohmann::json;

inline constexpr std::uint64_t default_seed = 20240101;

/// The three parameter rows of the simulation study: (mixture, d).
inline MixtureDensity case_mixture(int case_id) {
  switch (case_id) {
    case 1: return MixtureDensity::beta_two_component(0.8, 0.95, 3.0, 1.5, 2.0, 1.0);
    case 2: return MixtureDensity::beta_two_component(0.8, 0.80, 1.2, 1.6, 1.3, 2.5);
    case 3: return MixtureDensity::beta_uniform(0.8, 0.90, 2.0, 1.2);
    default: throw ConfigError("unknown case " + std::to_string(case_id) + " (expected 1, 2 or 3)");
  }
}

inline double case_memory(int case_id) {
  switch (case_id) {
    case 1: return 0.25;
    case 2: return 0.20;
    case 3: return 0.40;
    default: throw ConfigError("unknown case " + std::to_string(case_id) + " (expected 1, 2 or 3)");
  }
}

namespace detail {

inline double number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  if (!j.at(key).is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
  return j.at(key).get<double>();
}

inline long integer(const json& j, const char* key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + ": '" + key + "' must be an integer");
  return v.get<long>();
}

}  // namespace detail

/// Mixture from its JSON description. `base_dir` resolves relative tabulated-file paths.
inline MixtureDensity mixture_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
  const std::string where = "mixture";
  if (!j.is_object()) throw ConfigError("mixture must be an object");
  try {
    if (j.contains("case")) return case_mixture(static_cast<int>(detail::integer(j, "case", where)));
    if (!j.contains("family") || !j.at("family").is_string()) throw ConfigError("mixture: missing 'family'");
    const std::string fam = j.at("family");
    auto num = [&](const char* k) { return detail::number(j, k, "mixture '" + fam + "'"); };
    if (fam == "beta_two_component") {
      return MixtureDensity::beta_two_component(num("w"), num("a_star"), num("p1"), num("q1"), num("p2"), num("q2"));
    }
    if (fam == "beta_uniform") return MixtureDensity::beta_uniform(num("w"), num("a_star"), num("p3"), num("q3"));
    if (fam == "farima") return MixtureDensity::farima(num("d"));
    if (fam == "compensator") return MixtureDensity::compensator(num("kappa"), num("a_star"));
    if (fam == "product") {
      if (!j.contains("g")) throw ConfigError("mixture 'product': missing 'g'");
      return product_mixture(MixtureDensity::farima(num("d")), mixture_from_json(j.at("g"), base_dir));
    }
    if (fam == "tabulated") {
      if (j.contains("path")) {
        std::filesystem::path p = j.at("path").get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        std::ifstream in(p);
        if (!in) throw ConfigError("mixture 'tabulated': cannot open " + p.string());
        return io::read_tabulated_csv(in);
      }
      if (!j.contains("x") || !j.contains("phi")) throw ConfigError("mixture 'tabulated': need 'path' or 'x' and 'phi'");
      return MixtureDensity::tabulated(j.at("x").get<std::vector<double>>(), j.at("phi").get<std::vector<double>>());
    }
    throw ConfigError("mixture: unknown family '" + fam + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("mixture: ") + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("mixture: ") + e.what());
  }
}

inline json mixture_to_json(const MixtureDensity& m) {
  json j;
  j["family"] = to_string(m.family());
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, BetaTwoComponentParams>) {
          j.update({{"w", p.w}, {"a_star", p.a_star}, {"p1", p.p1}, {"q1", p.q1}, {"p2", p.p2}, {"q2", p.q2}});
        } else if constexpr (std::is_same_v<T, BetaUniformParams>) {
          j.update({{"w", p.w}, {"a_star", p.a_star}, {"p3", p.p3}, {"q3", p.q3}});
        } else if constexpr (std::is_same_v<T, FarimaParams>) {
          j["d"] = p.d;
        } else if constexpr (std::is_same_v<T, CompensatorParams>) {
          j.update({{"kappa", p.kappa}, {"a_star", p.a_star}});
        } else if constexpr (std::is_same_v<T, ProductParams>) {
          j["d"] = p.d;
          j["g"] = mixture_to_json(*p.phi_g);
        } else {
          j["points"] = p.x.size();
        }
      },
      m.params());
  return j;
}

struct ExperimentSpec {
  std::string name = "experiment";
  std::optional<int> case_id;
  std::shared_ptr<const MixtureDensity> mixture;
  json mixture_json;
  long n = 1500;
  long N = 0;  // 0: limit process by Gaussian synthesis
  int M = 100;
  double sigma_eps2 = 1.0;
  EstimatorConfig estimator;
  std::vector<double> eval_points{-0.5, 0.96};
  int grid_size = MixtureEstimate::grid_size;
  std::uint64_t seed = default_seed;
  std::vector<long> n_grid;  // variance-decay run when non-empty
  unsigned threads = 1;

  void validate() const {
    if (!mixture) throw ConfigError("experiment: no mixture");
    if (M < 2) throw ConfigError("experiment: M must be >= 2");
    if (n < 8) throw ConfigError("experiment: n must be >= 8");
    if (N < 0) throw ConfigError("experiment: N must be positive or \"limit\"");
    if (!(sigma_eps2 > 0.0)) throw ConfigError("experiment: sigma_eps2 must be positive");
    if (grid_size < 8) throw ConfigError("experiment: grid must have at least 8 points");
    if (eval_points.empty()) throw ConfigError("experiment: eval_points must not be empty");
    for (double x : eval_points) {
      if (!(x > -1.0 && x < 1.0)) throw ConfigError("experiment: eval_points must lie in (-1, 1)");
    }
    for (long v : n_grid) {
      if (v < 8) throw ConfigError("experiment: n_grid entries must be >= 8");
    }
    if (!(estimator.gamma > 0.0 && estimator.gamma < gamma_max) && !estimator.kn) {
      throw ConfigError("experiment: gamma must lie in (0, " + std::to_string(gamma_max) + ")");
    }
    if (estimator.kn && (*estimator.kn < 0 || *estimator.kn > GegenbauerBasis::max_supported_degree)) {
      throw ConfigError("experiment: kn out of range");
    }
    try {
      (void)estimator.effective_alpha();
    } catch (const Error& e) {
      throw ConfigError(std::string("experiment: ") + e.what());
    }
    if (!(estimator.effective_alpha() > -0.5)) throw ConfigError("experiment: alpha must exceed -1/2");
  }
};

/// Table-1 preset: mixture and d of the row, alpha = 1 - 2d, Kn = 3, gamma = 0.41,
/// n = 1500, M = 500, limit-process synthesis, evaluation at -0.5 and 0.96.
inline ExperimentSpec preset(int case_id) {
  ExperimentSpec s;
  s.name = "case" + std::to_string(case_id);
  s.case_id = case_id;
  s.mixture = std::make_shared<const MixtureDensity>(case_mixture(case_id));
  s.mixture_json = json{{"case", case_id}};
  s.M = 500;
  s.estimator.d = case_memory(case_id);
  s.estimator.use_alpha_rule = true;
  s.estimator.kn = 3;
  s.estimator.gamma = 0.41;
  return s;
}

/// Spec from a JSON document. A "case" key starts from the preset; the other keys override.
inline ExperimentSpec spec_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
  if (!j.is_object()) throw ConfigError("experiment spec must be a JSON object");
  static const std::vector<std::string> known{"name", "case", "mixture", "n", "N", "M", "alpha", "d", "gamma",
                                              "kn", "eval_points", "seed", "n_grid", "grid", "sigma_eps2",
                                              "use_alpha_rule", "threads"};
  for (const auto& [k, _] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("unknown key '" + k + "'");
  }
  const std::string where = "experiment";
  try {
    ExperimentSpec s;
    if (j.contains("case")) s = preset(static_cast<int>(detail::integer(j, "case", where)));
    if (j.contains("mixture")) {
      s.mixture = std::make_shared<const MixtureDensity>(mixture_from_json(j.at("mixture"), base_dir));
      s.mixture_json = j.at("mixture");
      s.case_id.reset();
      if (!j.contains("d")) s.estimator.d.reset();
    }
    if (j.contains("name")) s.name = j.at("name").get<std::string>();
    if (j.contains("n")) s.n = detail::integer(j, "n", where);
    if (j.contains("N")) {
      const auto& v = j.at("N");
      if (v.is_string() && v.get<std::string>() == "limit") {
        s.N = 0;
      } else if (v.is_number_integer() && v.get<long>() > 0) {
        s.N = v.get<long>();
      } else {
        throw ConfigError("experiment: N must be a positive integer or \"limit\"");
      }
    }
    if (j.contains("M")) s.M = static_cast<int>(detail::integer(j, "M", where));
    if (j.contains("d")) {
      if (j.at("d").is_null()) {
        s.estimator.d.reset();
      } else {
        s.estimator.d = detail::number(j, "d", where);
      }
    }
    if (j.contains("alpha")) {
      s.estimator.alpha = detail::number(j, "alpha", where);
      s.estimator.use_alpha_rule = false;
    }
    if (j.contains("use_alpha_rule")) s.estimator.use_alpha_rule = j.at("use_alpha_rule").get<bool>();
    if (j.contains("gamma")) {
      s.estimator.gamma = detail::number(j, "gamma", where);
      if (!j.contains("kn")) s.estimator.kn.reset();
    }
    if (j.contains("kn")) {
      if (j.at("kn").is_null()) {
        s.estimator.kn.reset();
      } else {
        s.estimator.kn = static_cast<int>(detail::integer(j, "kn", where));
      }
    }
    if (j.contains("eval_points")) s.eval_points = j.at("eval_points").get<std::vector<double>>();
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_unsigned()) throw ConfigError("experiment: seed must be a nonnegative integer");
      s.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("n_grid")) s.n_grid = j.at("n_grid").get<std::vector<long>>();
    if (j.contains("grid")) s.grid_size = static_cast<int>(detail::integer(j, "grid", where));
    if (j.contains("sigma_eps2")) s.sigma_eps2 = detail::number(j, "sigma_eps2", where);
    if (j.contains("threads")) s.threads = static_cast<unsigned>(std::max(1L, detail::integer(j, "threads", where)));
    s.validate();
    return s;
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment: ") + e.what());
  }
}

inline ExperimentSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open spec file " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return spec_from_json(j, path.parent_path());
}

inline json spec_to_json(const ExperimentSpec& s) {
  json j;
  j["name"] = s.name;
  if (s.case_id) j["case"] = *s.case_id;
  j["mixture"] = s.mixture ? mixture_to_json(*s.mixture) : json(nullptr);
  j["n"] = s.n;
  j["N"] = s.N == 0 ? json("limit") : json(s.N);
  j["path"] = s.N == 0 ? "synthesis" : "panel";
  j["M"] = s.M;
  j["sigma_eps2"] = s.sigma_eps2;
  j["alpha"] = s.estimator.effective_alpha();
  j["use_alpha_rule"] = s.estimator.use_alpha_rule;
  j["d"] = s.estimator.d ? json(*s.estimator.d) : json(nullptr);
  j["gamma"] = s.estimator.gamma;
  j["kn"] = s.estimator.kn ? json(*s.estimator.kn) : json(nullptr);
  j["eval_points"] = s.eval_points;
  j["grid"] = s.grid_size;
  j["seed"] = s.seed;
  j["n_grid"] = s.n_grid;
  return j;
}

}  // namespace disagg::harness
