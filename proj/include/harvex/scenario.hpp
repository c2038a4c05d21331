#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "harvex/control.hpp"
#include "harvex/errors.hpp"
#include "harvex/location_scatter.hpp"
#include "harvex/risk.hpp"
#include "harvex/spatial_domain.hpp"

namespace harvex {

struct TimeGridSpec {
  double start = 0.0;
  double end = 0.0;
  int points = 0;

  std::vector<double> times() const {
    std::vector<double> grid(static_cast<std::size_t>(points));
    if (points == 1) {
      grid[0] = start;
      return grid;
    }
    const double step = (end - start) / (points - 1);
    for (int j = 0; j < points; ++j) grid[static_cast<std::size_t>(j)] = start + step * j;
    grid.back() = end;
    return grid;
  }
};

// Everything one run needs, parsed and validated. Region indices in the file
// are 0-based.
struct Scenario {
  std::string schema_version;
  SpatialDomain domain;
  EconomicParams economics;
  bool kappa0_explicit = false;
  RateVariant variant = RateVariant::AlphaWeighted;
  PriorSet priors;
  RiskPreferences preferences;
  std::optional<std::uint64_t> seed;
  TimeGridSpec time_grid;
  std::map<std::string, double> tolerances;
  std::optional<Vector> initial_state;

  std::string source_path;
  std::uint64_t source_hash = 0;  // FNV-1a of the file bytes
};

namespace detail {

using Json = nlohmann::json;

inline const Json& require_key(const Json& node, const std::string& path, const char* key) {
  if (!node.is_object() || !node.contains(key)) {
    throw SchemaError(path.empty() ? key : path + "." + key, "missing required field");
  }
  return node.at(key);
}

inline double as_number(const Json& node, const std::string& path) {
  if (!node.is_number()) throw SchemaError(path, "expected a number");
  return node.get<double>();
}

inline int as_int(const Json& node, const std::string& path) {
  if (!node.is_number_integer()) throw SchemaError(path, "expected an integer");
  return node.get<int>();
}

inline bool as_bool(const Json& node, const std::string& path) {
  if (!node.is_boolean()) throw SchemaError(path, "expected a boolean");
  return node.get<bool>();
}

inline std::string as_string(const Json& node, const std::string& path) {
  if (!node.is_string()) throw SchemaError(path, "expected a string");
  return node.get<std::string>();
}

inline Vector as_vector(const Json& node, const std::string& path) {
  if (!node.is_array()) throw SchemaError(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = as_number(node[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

inline Matrix as_matrix(const Json& node, const std::string& path) {
  if (!node.is_array() || node.empty()) throw SchemaError(path, "expected an array of rows");
  const std::size_t rows = node.size();
  const Json& first = node[0];
  if (!first.is_array()) throw SchemaError(path + "[0]", "expected an array row");
  const std::size_t cols = first.size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string row_path = path + "[" + std::to_string(r) + "]";
    if (!node[r].is_array() || node[r].size() != cols) {
      throw SchemaError(row_path, "ragged matrix row");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          as_number(node[r][c], row_path + "[" + std::to_string(c) + "]");
    }
  }
  return m;
}

inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

}  // namespace detail

inline Scenario parse_scenario_text(const std::string& text, const std::string& path_label) {
  using detail::Json;
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SchemaError("", std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw SchemaError("", "scenario must be a JSON object");

  Scenario scenario;
  scenario.source_path = path_label;
  scenario.source_hash = detail::fnv1a(text);
  scenario.schema_version =
      detail::as_string(detail::require_key(root, "", "schema_version"), "schema_version");
  if (scenario.schema_version != "1") {
    throw SchemaError("schema_version",
                      "unrecognized version '" + scenario.schema_version + "' (expected \"1\")");
  }

  // domain
  const Json& jdomain = detail::require_key(root, "", "domain");
  const int n_regions =
      detail::as_int(detail::require_key(jdomain, "domain", "n_regions"), "domain.n_regions");
  std::vector<Edge> edges;
  const Json& jedges = detail::require_key(jdomain, "domain", "edges");
  if (!jedges.is_array()) throw SchemaError("domain.edges", "expected an array of [i, j, w]");
  for (std::size_t e = 0; e < jedges.size(); ++e) {
    const std::string edge_path = "domain.edges[" + std::to_string(e) + "]";
    const Json& je = jedges[e];
    if (!je.is_array() || je.size() != 3) {
      throw SchemaError(edge_path, "expected a triple [i, j, w]");
    }
    edges.push_back({detail::as_int(je[0], edge_path + "[0]"),
                     detail::as_int(je[1], edge_path + "[1]"),
                     detail::as_number(je[2], edge_path + "[2]")});
  }
  scenario.domain = validate_domain(
      n_regions, edges,
      detail::as_vector(detail::require_key(jdomain, "domain", "a_diag"), "domain.a_diag"),
      detail::as_vector(detail::require_key(jdomain, "domain", "b_diag"), "domain.b_diag"),
      detail::as_vector(detail::require_key(jdomain, "domain", "d_weights"), "domain.d_weights"),
      detail::as_vector(detail::require_key(jdomain, "domain", "pi_weights"),
                        "domain.pi_weights"));

  // priors
  const Json& jpriors = detail::require_key(root, "", "priors");
  const Json& jmodels = detail::require_key(jpriors, "priors", "models");
  if (!jmodels.is_array() || jmodels.empty()) {
    throw SchemaError("priors.models", "expected a nonempty array of models");
  }
  std::vector<LocationScatterModel> models;
  Vector weights(static_cast<Eigen::Index>(jmodels.size()));
  for (std::size_t i = 0; i < jmodels.size(); ++i) {
    const std::string model_path = "priors.models[" + std::to_string(i) + "]";
    const Json& jm = jmodels[i];
    Vector mean = detail::as_vector(detail::require_key(jm, model_path, "mean"),
                                    model_path + ".mean");
    Matrix scatter = detail::as_matrix(detail::require_key(jm, model_path, "scatter"),
                                       model_path + ".scatter");
    std::string tag = jm.contains("family_tag")
                          ? detail::as_string(jm.at("family_tag"), model_path + ".family_tag")
                          : std::string("gaussian");
    if (mean.size() != scenario.domain.n_regions) {
      throw ValidationError(ErrorCode::DimensionMismatch, model_path + ".mean",
                            "prior dimension must equal n_regions");
    }
    models.push_back(
        make_location_scatter(std::move(mean), std::move(scatter), std::move(tag), model_path));
    weights(static_cast<Eigen::Index>(i)) = detail::as_number(
        detail::require_key(jm, model_path, "weight"), model_path + ".weight");
  }
  scenario.priors = make_prior_set(std::move(models), std::move(weights), "priors");

  // economics (kappa0 defaults to <D, m_B>)
  const Json& jecon = detail::require_key(root, "", "economics");
  const double r = detail::as_number(detail::require_key(jecon, "economics", "r"), "economics.r");
  const double beta =
      detail::as_number(detail::require_key(jecon, "economics", "beta"), "economics.beta");
  const double horizon = detail::as_number(detail::require_key(jecon, "economics", "horizon"),
                                           "economics.horizon");
  double kappa0 = 0.0;
  if (jecon.contains("kappa0")) {
    kappa0 = detail::as_number(jecon.at("kappa0"), "economics.kappa0");
    scenario.kappa0_explicit = true;
  } else {
    kappa0 = scenario.domain.d_weights.dot(prior_mean(scenario.priors));
  }
  scenario.economics = validate_economics(r, beta, horizon, kappa0);
  if (jecon.contains("rate_variant")) {
    const std::string v = detail::as_string(jecon.at("rate_variant"), "economics.rate_variant");
    if (v == "paper") {
      scenario.variant = RateVariant::AlphaWeighted;
    } else if (v == "foc") {
      scenario.variant = RateVariant::FocDerived;
    } else {
      throw SchemaError("economics.rate_variant", "expected \"paper\" or \"foc\"");
    }
  }

  // preferences: gamma / no_aversion flag, seed, time grid
  const Json& jprefs = detail::require_key(root, "", "preferences");
  const bool no_aversion =
      jprefs.contains("no_aversion") && detail::as_bool(jprefs.at("no_aversion"),
                                                        "preferences.no_aversion");
  double gamma = 0.0;
  if (jprefs.contains("gamma")) {
    gamma = detail::as_number(jprefs.at("gamma"), "preferences.gamma");
  } else if (!no_aversion) {
    throw SchemaError("preferences.gamma", "missing required field");
  }
  scenario.preferences = validate_preferences(gamma, no_aversion);
  if (jprefs.contains("seed")) {
    const Json& jseed = jprefs.at("seed");
    if (!jseed.is_number_unsigned()) {
      throw SchemaError("preferences.seed", "expected a nonnegative integer");
    }
    scenario.seed = jseed.get<std::uint64_t>();
  }
  if (jprefs.contains("time_grid")) {
    const Json& jgrid = jprefs.at("time_grid");
    scenario.time_grid.start = detail::as_number(
        detail::require_key(jgrid, "preferences.time_grid", "start"),
        "preferences.time_grid.start");
    scenario.time_grid.end =
        detail::as_number(detail::require_key(jgrid, "preferences.time_grid", "end"),
                          "preferences.time_grid.end");
    scenario.time_grid.points =
        detail::as_int(detail::require_key(jgrid, "preferences.time_grid", "points"),
                       "preferences.time_grid.points");
  } else {
    scenario.time_grid = TimeGridSpec{0.0, horizon, 101};
  }
  if (scenario.time_grid.points < 1 || scenario.time_grid.start < 0.0 ||
      scenario.time_grid.end < scenario.time_grid.start ||
      scenario.time_grid.end > horizon * (1.0 + 1e-12)) {
    throw ValidationError(ErrorCode::BadParameter, "preferences.time_grid",
                          "grid must satisfy 0 <= start <= end <= horizon, points >= 1");
  }

  if (root.contains("initial_state")) {
    Vector k0 = detail::as_vector(root.at("initial_state"), "initial_state");
    if (k0.size() != scenario.domain.n_regions) {
      throw ValidationError(ErrorCode::DimensionMismatch, "initial_state",
                            "initial_state length must equal n_regions");
    }
    scenario.initial_state = std::move(k0);
  }

  if (root.contains("tolerances")) {
    const Json& jtol = root.at("tolerances");
    if (!jtol.is_object()) throw SchemaError("tolerances", "expected an object");
    static const std::set<std::string> known = {
        "rk4",      "rk4_dt",   "quadrature", "quadrature_dt", "hjb",     "foc",
        "terminal", "barycenter", "sup",      "objective",     "euler",   "mc_samples",
        "phi"};
    for (const auto& [key, value] : jtol.items()) {
      if (known.count(key) == 0) {
        throw SchemaError("tolerances." + key, "unrecognized tolerance key");
      }
      scenario.tolerances[key] = detail::as_number(value, "tolerances." + key);
    }
  }

  return scenario;
}

inline Scenario parse_scenario(const std::string& path) {
  std::ifstream stream(path, std::ios::binary);
  if (!stream) throw IoError("cannot open scenario file '" + path + "'");
  std::ostringstream buffer;
  buffer << stream.rdbuf();
  return parse_scenario_text(buffer.str(), path);
}

}  // namespace harvex
