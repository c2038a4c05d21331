#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "harvex/control.hpp"
#include "harvex/errors.hpp"
#include "harvex/logging.hpp"
#include "harvex/oracles.hpp"
#include "harvex/report.hpp"
#include "harvex/risk.hpp"
#include "harvex/scenario.hpp"

namespace harvex {

inline constexpr const char* kToolVersion = "1.0.0";

struct RunOptions {
  std::optional<RateVariant> variant_override;
  bool no_aversion_override = false;
  std::map<std::string, double> tolerance_overrides;
};

namespace detail {

struct Pipeline {
  Scenario scenario;  // effective: overrides applied
  std::string subcommand;
  SpectralSolution spectral;
  ControlSolution solution;
  RiskCoefficients coeffs;
  Vector reference_state;  // initial_state when given, else the prior mean
  std::map<std::string, double> tolerances;

  double tol(const std::string& key, double fallback) const {
    auto it = tolerances.find(key);
    return it == tolerances.end() ? fallback : it->second;
  }
};

inline Pipeline build_pipeline(const Scenario& input, const std::string& subcommand,
                               const RunOptions& options) {
  Pipeline p;
  p.scenario = input;
  p.subcommand = subcommand;
  if (options.variant_override) p.scenario.variant = *options.variant_override;
  if (options.no_aversion_override) {
    p.scenario.preferences = RiskPreferences{0.0, true};
  }
  p.tolerances = p.scenario.tolerances;
  for (const auto& [key, value] : options.tolerance_overrides) p.tolerances[key] = value;

  p.spectral = lowest_eigenpair(drift_matrix(p.scenario.domain));
  p.solution = build_control_solution(p.scenario.domain, p.spectral, p.scenario.economics,
                                      p.scenario.variant);
  p.reference_state =
      p.scenario.initial_state ? *p.scenario.initial_state : prior_mean(p.scenario.priors);
  return p;
}

inline void write_provenance(report::JsonWriter& json, const Pipeline& p) {
  json.key("provenance").begin_object();
  json.key("tool").value("harvex");
  json.key("version").value(kToolVersion);
  json.key("subcommand").value(p.subcommand);
  json.key("scenario_path").value(p.scenario.source_path);
  json.key("scenario_fnv1a").value(report::hex64(p.scenario.source_hash));
  json.key("seed");
  if (p.scenario.seed) {
    json.value(*p.scenario.seed);
  } else {
    json.null();
  }
  json.key("rate_variant").value(rate_variant_name(p.scenario.variant));
  json.key("no_aversion").value(p.scenario.preferences.no_aversion);
  json.end_object();
}

inline void write_scenario_echo(report::JsonWriter& json, const Pipeline& p) {
  const Scenario& s = p.scenario;
  json.key("scenario").begin_object();
  json.key("schema_version").value(s.schema_version);

  json.key("domain").begin_object();
  json.key("n_regions").value(s.domain.n_regions);
  json.key("edges").begin_array();
  for (const Edge& e : s.domain.edges) {
    json.begin_array().value(e.i).value(e.j).value(e.weight).end_array();
  }
  json.end_array();
  json.key("a_diag").value(s.domain.a_diag);
  json.key("b_diag").value(s.domain.b_diag);
  json.key("d_weights").value(s.domain.d_weights);
  json.key("pi_weights").value(s.domain.pi_weights);
  json.end_object();

  json.key("economics").begin_object();
  json.key("r").value(s.economics.discount_rate);
  json.key("beta").value(s.economics.elasticity);
  json.key("horizon").value(s.economics.horizon);
  json.key("kappa0").value(s.economics.kappa0);
  json.key("kappa0_explicit").value(s.kappa0_explicit);
  json.key("rate_variant").value(rate_variant_name(s.variant));
  json.end_object();

  json.key("priors").begin_object();
  json.key("models").begin_array();
  for (std::size_t i = 0; i < s.priors.models.size(); ++i) {
    const LocationScatterModel& m = s.priors.models[i];
    json.begin_object();
    json.key("mean").value(m.mean);
    json.key("scatter").value(m.scatter);
    json.key("weight").value(s.priors.weights(static_cast<Eigen::Index>(i)));
    json.key("family_tag").value(m.family_tag);
    json.end_object();
  }
  json.end_array();
  json.end_object();

  json.key("preferences").begin_object();
  json.key("gamma").value(s.preferences.gamma);
  json.key("no_aversion").value(s.preferences.no_aversion);
  json.key("seed");
  if (s.seed) {
    json.value(*s.seed);
  } else {
    json.null();
  }
  json.key("time_grid").begin_object();
  json.key("start").value(s.time_grid.start);
  json.key("end").value(s.time_grid.end);
  json.key("points").value(s.time_grid.points);
  json.end_object();
  json.end_object();

  json.key("initial_state");
  if (s.initial_state) {
    json.value(*s.initial_state);
  } else {
    json.null();
  }

  json.key("tolerances").begin_object();
  for (const auto& [key, value] : p.tolerances) json.key(key).value(value);
  json.end_object();

  json.end_object();
}

inline void write_model(report::JsonWriter& json, const LocationScatterModel& m) {
  json.begin_object();
  json.key("mean").value(m.mean);
  json.key("scatter").value(m.scatter);
  json.key("family_tag").value(m.family_tag);
  json.end_object();
}

inline std::string finish_report(const Pipeline& p,
                                 const std::function<void(report::JsonWriter&)>& body) {
  report::JsonWriter json;
  json.begin_object();
  write_provenance(json, p);
  write_scenario_echo(json, p);
  body(json);
  json.end_object();
  return json.str() + "\n";
}

inline std::uint64_t require_seed(const Pipeline& p) {
  if (!p.scenario.seed) {
    throw ValidationError(ErrorCode::BadParameter, "preferences.seed",
                          "a seed is required for sampling subcommands");
  }
  return *p.scenario.seed;
}

// HJB/FOC probe grid: states spread around the reference state (scaled and
// axis-perturbed, all positive), times strictly inside (0, T).
inline Matrix probe_states(const Pipeline& p, int n_scales = 8) {
  const Vector& ref = p.reference_state;
  const int n = p.scenario.domain.n_regions;
  std::vector<Vector> rows;
  for (int s = 0; s < n_scales; ++s) {
    const double scale = 0.3 + (2.5 - 0.3) * s / std::max(1, n_scales - 1);
    rows.push_back(scale * ref);
  }
  for (int axis = 0; axis < std::min(4, n); ++axis) {
    Vector k = ref;
    k(axis) *= 1.4;
    rows.push_back(k);
  }
  Matrix states(static_cast<Eigen::Index>(rows.size()), n);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    states.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  return states;
}

inline std::vector<double> probe_times(const Pipeline& p, int count = 16) {
  const double horizon = p.scenario.economics.horizon;
  std::vector<double> times(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    times[static_cast<std::size_t>(j)] =
        horizon * (0.05 + 0.9 * j / std::max(1, count - 1));
  }
  return times;
}

inline void write_oracle_report(report::JsonWriter& json, const OracleReport& r) {
  json.begin_object();
  json.key("name").value(r.name);
  json.key("max_abs_error").value(r.max_abs_error);
  json.key("tolerance").value(r.tolerance);
  json.key("passed").value(r.passed);
  json.key("diagnostics").begin_object();
  for (const auto& [key, value] : r.diagnostics) json.key(key).value(value);
  json.end_object();
  json.end_object();
}

inline std::vector<OracleReport> verify_suite(const Pipeline& p) {
  const Scenario& s = p.scenario;
  const double horizon = s.economics.horizon;
  std::vector<OracleReport> reports;

  // Trajectory closed form vs one-step integration, scaled by the largest
  // state so growing modes do not distort the comparison.
  {
    const std::vector<double> times = s.time_grid.times();
    const Matrix exact = state_trajectory(p.reference_state, times, p.solution.closed_loop);
    const Matrix stepped =
        rk4_trajectory(p.reference_state, p.solution.closed_loop, p.tol("rk4_dt", 1e-3), times);
    const double scale = std::max(1.0, exact.cwiseAbs().maxCoeff());
    std::map<std::string, std::string> diag;
    diag["state_scale"] = detail::compact_double(scale);
    reports.push_back(OracleReport::make("expm_vs_rk4",
                                         (exact - stepped).cwiseAbs().maxCoeff() / scale,
                                         p.tol("rk4", 1e-6), std::move(diag)));
  }

  // One-step integration converges at fourth order.
  {
    const double mnorm = std::max(p.solution.closed_loop.norm(), 1e-8);
    const double h = std::min(horizon / 8.0, 0.2 / mnorm);
    const std::vector<double> end{horizon};
    const Vector exact =
        (linalg::expm(horizon * p.solution.closed_loop) * p.reference_state);
    const double e1 =
        (rk4_trajectory(p.reference_state, p.solution.closed_loop, h, end).row(0).transpose() -
         exact)
            .norm();
    const double e2 =
        (rk4_trajectory(p.reference_state, p.solution.closed_loop, h / 2.0, end)
             .row(0)
             .transpose() -
         exact)
            .norm();
    std::map<std::string, std::string> diag;
    double err = 0.0;
    if (e1 < 1e-13 || e2 <= 0.0) {
      diag["flag"] = "below-rounding";
      diag["coarse_error"] = detail::compact_double(e1);
    } else {
      const double ratio = e1 / e2;
      diag["ratio"] = detail::compact_double(ratio);
      err = std::max({0.0, 12.0 - ratio, ratio - 20.0});
    }
    reports.push_back(OracleReport::make("rk4_convergence_order", err, 0.0, std::move(diag)));
  }

  // Closed-form loss vs Simpson quadrature of the harvest path.
  {
    const double closed = p.coeffs.g_total * p.coeffs.tilde_alpha.dot(p.reference_state);
    const double quad = quadrature_loss(p.reference_state, p.solution, s.domain, horizon,
                                        p.tol("quadrature_dt", 1e-3 * horizon));
    reports.push_back(OracleReport::make("quadrature_loss", std::abs(closed - quad),
                                         p.tol("quadrature", 1e-6)));
  }

  const Matrix states = probe_states(p);
  const std::vector<double> times = probe_times(p);

  reports.push_back(
      hjb_residual(p.solution, states, times, s.variant, p.tol("hjb", 1e-6)));
  reports.push_back(terminal_condition_residual(p.solution, states, p.tol("terminal", 1e-12)));

  // First-order stationarity of the selected variant.
  {
    double max_resid = 0.0;
    for (double t : times) {
      for (Eigen::Index row = 0; row < states.rows(); ++row) {
        max_resid = std::max(
            max_resid,
            foc_residual(t, states.row(row).transpose(), p.solution, s.variant)
                .cwiseAbs()
                .maxCoeff());
      }
    }
    const RegimeInfo regime = analyze_regime(p.solution, s.variant);
    std::map<std::string, std::string> diag;
    diag["variant"] = rate_variant_name(s.variant);
    diag["kappa_spread"] = detail::compact_double(regime.kappa_spread);
    diag["aggregate_ratio"] = detail::compact_double(regime.aggregate_ratio);
    if (!regime.consistent) {
      diag["flag"] = "inconsistent-regime";
    } else if (!regime.foc_exact) {
      diag["flag"] = "aggregate-mismatch";
    }
    reports.push_back(
        OracleReport::make("foc_residual", max_resid, p.tol("foc", 1e-8), std::move(diag)));
  }

  // Barycenter fixed-point residual.
  BarycenterOptions bopts;
  bopts.tol = p.tol("barycenter", 1e-10);
  {
    BarycenterStats stats;
    barycenter(s.priors, bopts, &stats);
    std::map<std::string, std::string> diag;
    diag["iterations"] = std::to_string(stats.iterations);
    diag["regularizations"] = std::to_string(stats.regularizations);
    reports.push_back(
        OracleReport::make("barycenter_residual", stats.residual, bopts.tol, std::move(diag)));
  }

  // Euler aggregation identity.
  {
    const double total = total_risk(p.coeffs, s.priors, s.preferences);
    const Vector allocations = allocate_risk_all(p.coeffs, s.priors, s.preferences);
    const double penalty = s.preferences.no_aversion
                               ? 0.0
                               : 0.5 * s.preferences.gamma * p.coeffs.g_total *
                                     p.coeffs.g_total * p.coeffs.tilde_alpha.squaredNorm();
    const double resid =
        std::abs(s.domain.pi_weights.dot(allocations) - total - penalty) /
        std::max(1.0, std::abs(total));
    reports.push_back(OracleReport::make("euler_aggregation", resid, p.tol("euler", 1e-10)));
  }

  // Worst-case representation: objective at Q* equals the closed-form risk,
  // and no location perturbation improves on it.
  {
    const LocationScatterModel qstar = robust_model(p.coeffs, s.priors, s.preferences, bopts);
    const double objective = risk_objective(qstar, p.coeffs, s.priors, s.preferences);
    const double total = total_risk(p.coeffs, s.priors, s.preferences);
    reports.push_back(OracleReport::make("risk_objective_at_optimum",
                                         std::abs(objective - total), p.tol("objective", 1e-8)));
    if (!s.preferences.no_aversion) {
      reports.push_back(sup_check(p.coeffs, s.priors, s.preferences,
                                  {-0.1, -0.01, -0.001, 0.001, 0.01, 0.1},
                                  p.tol("sup", 1e-8), bopts));
    }
  }

  // Monte Carlo expectation under Q*.
  {
    const std::uint64_t seed = require_seed(p);
    const LocationScatterModel qstar = robust_model(p.coeffs, s.priors, s.preferences, bopts);
    const int samples = static_cast<int>(p.tol("mc_samples", 20000));
    const auto [estimate, stderr_] = mc_expected_loss(qstar, p.coeffs, samples, seed);
    const double target = p.coeffs.g_total * p.coeffs.tilde_alpha.dot(qstar.mean);
    std::map<std::string, std::string> diag;
    diag["estimate"] = detail::compact_double(estimate);
    diag["standard_error"] = detail::compact_double(stderr_);
    diag["samples"] = std::to_string(samples);
    reports.push_back(OracleReport::make("mc_expected_loss", std::abs(estimate - target),
                                         std::max(3.0 * stderr_, 1e-12), std::move(diag)));
  }

  // Deviation bound of the finite-horizon factor Phi, valid when
  // theta kappa0 >= Lambda(alpha).
  {
    const double ratio = p.solution.theta * s.economics.kappa0 / p.solution.lambda_alpha;
    double excess = 0.0;
    for (double t : probe_times(p, 24)) {
      const double bound =
          std::abs(ratio - 1.0) * std::exp(-p.solution.theta * (horizon - t));
      excess = std::max(excess, std::abs(phi_factor(t, p.solution) - 1.0) - bound);
    }
    std::map<std::string, std::string> diag;
    diag["theta_kappa0_over_lambda"] = detail::compact_double(ratio);
    if (ratio < 1.0) diag["flag"] = "bound-regime";  // bound only holds for ratio >= 1
    reports.push_back(OracleReport::make("phi_bound", std::max(0.0, excess),
                                         p.tol("phi", 1e-12), std::move(diag)));
  }

  return reports;
}

}  // namespace detail

/// Executes one subcommand against a parsed scenario, writing reports under
/// out_dir. Returns the process exit code (0 success, 1 numeric failure via
/// exceptions in the caller, 2 validation failure via exceptions).
inline int run(const std::string& subcommand, const Scenario& scenario,
               const std::string& out_dir, const RunOptions& options = {}) {
  detail::Pipeline p = detail::build_pipeline(scenario, subcommand, options);
  report::ensure_directory(out_dir);
  const Scenario& s = p.scenario;

  const bool needs_risk = subcommand == "risk" || subcommand == "allocate" ||
                          subcommand == "robust" || subcommand == "verify";
  if (needs_risk) p.coeffs = risk_coefficients(p.solution, s.domain);

  BarycenterOptions bopts;
  bopts.tol = p.tol("barycenter", 1e-10);

  if (subcommand == "spectral") {
    const std::string body = detail::finish_report(p, [&](report::JsonWriter& json) {
      json.key("results").begin_object();
      json.key("lambda_min").value(p.spectral.lambda_min);
      json.key("alpha").value(p.spectral.alpha);
      json.key("drift").value(p.spectral.drift);
      json.end_object();
    });
    report::write_file(out_dir + "/spectral.json", body);
    return 0;
  }

  if (subcommand == "solve") {
    const std::vector<double> times = s.time_grid.times();
    Vector psi(static_cast<Eigen::Index>(times.size()));
    for (std::size_t j = 0; j < times.size(); ++j) {
      psi(static_cast<Eigen::Index>(j)) =
          psi0(times[j], p.solution.theta, p.solution.lambda_alpha, s.economics);
    }
    const std::string body = detail::finish_report(p, [&](report::JsonWriter& json) {
      json.key("results").begin_object();
      json.key("theta").value(p.solution.theta);
      json.key("lambda_alpha").value(p.solution.lambda_alpha);
      json.key("kappa0").value(s.economics.kappa0);
      json.key("closed_loop").value(p.solution.closed_loop);
      json.key("psi0").begin_object();
      json.key("t").begin_array();
      for (double t : times) json.value(t);
      json.end_array();
      json.key("value").value(psi);
      json.end_object();
      json.end_object();
    });
    report::write_file(out_dir + "/solve.json", body);
    return 0;
  }

  if (subcommand == "simulate") {
    const std::vector<double> times = s.time_grid.times();
    const Matrix states = state_trajectory(p.reference_state, times, p.solution.closed_loop);
    const Matrix rates = harvest_trajectory(p.reference_state, times, p.solution);
    report::write_file(out_dir + "/simulate.csv", report::csv_timeseries(times, states, rates));
    const std::string body = detail::finish_report(p, [&](report::JsonWriter& json) {
      json.key("results").begin_object();
      json.key("initial_state").value(p.reference_state);
      json.key("grid_points").value(static_cast<int>(times.size()));
      json.key("timeseries_csv").value("simulate.csv");
      json.end_object();
    });
    report::write_file(out_dir + "/simulate.json", body);
    return 0;
  }

  if (subcommand == "risk" || subcommand == "allocate") {
    const double total = total_risk(p.coeffs, s.priors, s.preferences);
    const Vector allocations = allocate_risk_all(p.coeffs, s.priors, s.preferences);
    const double penalty = s.preferences.no_aversion
                               ? 0.0
                               : 0.5 * s.preferences.gamma * p.coeffs.g_total *
                                     p.coeffs.g_total * p.coeffs.tilde_alpha.squaredNorm();
    const double identity_residual =
        std::abs(s.domain.pi_weights.dot(allocations) - total - penalty) /
        std::max(1.0, std::abs(total));
    const std::string body = detail::finish_report(p, [&](report::JsonWriter& json) {
      json.key("results").begin_object();
      json.key("tilde_alpha").value(p.coeffs.tilde_alpha);
      json.key("g_region").value(p.coeffs.g_region);
      json.key("g_total").value(p.coeffs.g_total);
      json.key("prior_mean").value(prior_mean(s.priors));
      json.key("total_risk").value(total);
      if (subcommand == "allocate") json.key("allocations").value(allocations);
      json.key("allocation_identity_residual").value(identity_residual);
      json.end_object();
    });
    report::write_file(out_dir + "/" + subcommand + ".json", body);
    return 0;
  }

  if (subcommand == "robust") {
    const std::uint64_t seed = detail::require_seed(p);
    BarycenterStats stats;
    const LocationScatterModel center = barycenter(s.priors, bopts, &stats);
    const double variance = frechet_function(center, s.priors);
    RobustPolicy policy = robust_policy(p.coeffs, p.solution, s.preferences, s.priors,
                                        s.time_grid.times(), seed, bopts);
    report::write_file(out_dir + "/robust_policy.csv",
                       report::csv_timeseries(policy.times, policy.mean_states,
                                              policy.mean_rates));
    const std::string body = detail::finish_report(p, [&](report::JsonWriter& json) {
      json.key("results").begin_object();
      json.key("barycenter");
      detail::write_model(json, center);
      json.key("frechet_variance").value(variance);
      json.key("robust_model");
      detail::write_model(json, policy.model);
      json.key("total_risk").value(total_risk(p.coeffs, s.priors, s.preferences));
      json.key("policy_csv").value("robust_policy.csv");
      json.end_object();
    });
    report::write_file(out_dir + "/robust.json", body);
    return 0;
  }

  if (subcommand == "barycenter") {
    BarycenterStats stats;
    const LocationScatterModel center = barycenter(s.priors, bopts, &stats);
    const double variance = frechet_function(center, s.priors);
    const std::string body = detail::finish_report(p, [&](report::JsonWriter& json) {
      json.key("results").begin_object();
      json.key("barycenter");
      detail::write_model(json, center);
      json.key("frechet_variance").value(variance);
      json.key("iterations").value(stats.iterations);
      json.key("residual").value(stats.residual);
      json.key("regularizations").value(stats.regularizations);
      json.end_object();
    });
    report::write_file(out_dir + "/barycenter.json", body);
    return 0;
  }

  if (subcommand == "verify") {
    const std::vector<OracleReport> reports = detail::verify_suite(p);
    bool all_assertive_passed = true;
    for (const OracleReport& r : reports) {
      if (!r.diagnostic_only() && !r.passed) all_assertive_passed = false;
    }
    const std::string body = detail::finish_report(p, [&](report::JsonWriter& json) {
      json.key("reports").begin_array();
      for (const OracleReport& r : reports) detail::write_oracle_report(json, r);
      json.end_array();
      json.key("all_assertive_passed").value(all_assertive_passed);
    });
    report::write_file(out_dir + "/verify.json", body);
    if (!all_assertive_passed) {
      log::error("verify: at least one assertive oracle report failed");
      return 1;
    }
    return 0;
  }

  throw ValidationError(ErrorCode::BadParameter, "",
                        "unknown subcommand '" + subcommand + "'");
}

/// Parse + run with exceptions mapped to the CLI exit-code contract.
inline int run_catching(const std::string& subcommand, const std::string& scenario_path,
                        const std::string& out_dir, const RunOptions& options = {}) {
  try {
    const Scenario scenario = parse_scenario(scenario_path);
    return run(subcommand, scenario, out_dir, options);
  } catch (const ValidationError& e) {
    log::error(e.what());
    return 2;
  } catch (const IoError& e) {
    log::error(e.what());
    return 2;
  } catch (const NumericError& e) {
    log::error(e.what());
    return 1;
  } catch (const std::exception& e) {
    log::error(e.what());
    return 1;
  }
}

}  // namespace harvex
