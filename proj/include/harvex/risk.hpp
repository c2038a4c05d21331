#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "harvex/control.hpp"
#include "harvex/errors.hpp"
#include "harvex/linalg.hpp"
#include "harvex/location_scatter.hpp"

namespace harvex {

// Model-ambiguity aversion. gamma > 0 weights the Frechet penalty; the
// gamma -> 0 limit is an explicit flag rather than a zero input.
struct RiskPreferences {
  double gamma = 1.0;
  bool no_aversion = false;
};

inline RiskPreferences validate_preferences(double gamma, bool no_aversion,
                                            const std::string& context = "preferences") {
  if (!no_aversion && !(gamma > 0.0)) {
    throw ValidationError(ErrorCode::BadParameter, context + ".gamma",
                          "gamma must be > 0 (use the no_aversion flag for the limit)");
  }
  return RiskPreferences{no_aversion ? 0.0 : gamma, no_aversion};
}

// Coefficients of the affine loss map L = G <tilde_alpha, k0>:
//   tilde_alpha = -J(T)' alpha with J(T) = integral_0^T e^{tM} dt,
//   g_region_i  = alpha_i theta / (T Lambda) (B_i/D_i)^{-1/beta},
//   g_total     = sum_j pi_j g_region_j.
struct RiskCoefficients {
  Vector tilde_alpha;
  Vector g_region;
  double g_total = 0.0;
};

/// tilde_alpha = -(integral_0^T e^{tM} dt)' alpha. The adjoint (transpose)
/// acts on alpha; singular M is handled by the block-integral path.
inline Vector integral_adjoint(const Matrix& closed_loop, double horizon, const Vector& alpha) {
  if (horizon < 0.0) {
    throw ValidationError(ErrorCode::BadParameter, "", "horizon must be nonnegative");
  }
  const Matrix integral = linalg::expm_integral(closed_loop, horizon);
  return -(integral.transpose() * alpha);
}

inline RiskCoefficients risk_coefficients(const ControlSolution& solution,
                                          const SpatialDomain& domain) {
  if (!(solution.theta > 0.0)) {
    throw NumericError(ErrorCode::AsymptoticsInvalid, "",
                       "risk coefficients require theta > 0");
  }
  const double horizon = solution.params.horizon;
  RiskCoefficients coeffs;
  coeffs.tilde_alpha = integral_adjoint(solution.closed_loop, horizon, solution.spectral.alpha);
  coeffs.g_region.resize(domain.n_regions);
  for (int i = 0; i < domain.n_regions; ++i) {
    coeffs.g_region(i) = solution.spectral.alpha(i) * solution.theta /
                         (horizon * solution.lambda_alpha) * solution.bd_pow(i);
  }
  coeffs.g_total = domain.pi_weights.dot(coeffs.g_region);
  return coeffs;
}

inline Vector prior_mean(const PriorSet& priors) {
  Vector mean = Vector::Zero(priors.dimension());
  for (std::size_t i = 0; i < priors.models.size(); ++i) {
    mean += priors.weights(static_cast<Eigen::Index>(i)) * priors.models[i].mean;
  }
  return mean;
}

/// Total harvest risk rho(L) = G <tilde_alpha, m_B> + (gamma/2) G^2 ||tilde_alpha||^2;
/// only the prior locations enter.
inline double total_risk(const RiskCoefficients& coeffs, const PriorSet& priors,
                         const RiskPreferences& prefs) {
  const double base = coeffs.g_total * coeffs.tilde_alpha.dot(prior_mean(priors));
  if (prefs.no_aversion) return base;
  return base + 0.5 * prefs.gamma * coeffs.g_total * coeffs.g_total *
                    coeffs.tilde_alpha.squaredNorm();
}

/// Euler allocation to one region:
/// rho(L_j | L) = G_j <tilde_alpha, m_B> + gamma G G_j ||tilde_alpha||^2.
inline double allocate_risk(const RiskCoefficients& coeffs, const PriorSet& priors,
                            const RiskPreferences& prefs, int region) {
  if (region < 0 || region >= coeffs.g_region.size()) {
    throw ValidationError(ErrorCode::BadDimension, "", "region index out of range");
  }
  const double base = coeffs.g_region(region) * coeffs.tilde_alpha.dot(prior_mean(priors));
  if (prefs.no_aversion) return base;
  return base + prefs.gamma * coeffs.g_total * coeffs.g_region(region) *
                    coeffs.tilde_alpha.squaredNorm();
}

inline Vector allocate_risk_all(const RiskCoefficients& coeffs, const PriorSet& priors,
                                const RiskPreferences& prefs) {
  Vector allocations(coeffs.g_region.size());
  for (int j = 0; j < coeffs.g_region.size(); ++j) {
    allocations(j) = allocate_risk(coeffs, priors, prefs, j);
  }
  return allocations;
}

/// Worst-case model of the risk representation: the barycenter with its
/// location shifted by gamma G tilde_alpha. The scatter stays at S_B.
inline LocationScatterModel robust_model(const RiskCoefficients& coeffs, const PriorSet& priors,
                                         const RiskPreferences& prefs,
                                         const BarycenterOptions& options = {},
                                         BarycenterStats* stats = nullptr) {
  LocationScatterModel center = barycenter(priors, options, stats);
  if (prefs.no_aversion) return center;
  center.mean += prefs.gamma * coeffs.g_total * coeffs.tilde_alpha;
  return center;
}

/// Distribution of the scalar loss L = G <tilde_alpha, k0> under k0 ~ Q.
inline LocationScatterModel loss_distribution(const LocationScatterModel& q,
                                              const RiskCoefficients& coeffs) {
  if (q.mean.size() != coeffs.tilde_alpha.size()) {
    throw ValidationError(ErrorCode::DimensionMismatch, "",
                          "model dimension != coefficient dimension");
  }
  const Vector direction = coeffs.g_total * coeffs.tilde_alpha;
  Vector mean(1);
  mean(0) = direction.dot(q.mean);
  Matrix scatter(1, 1);
  scatter(0, 0) = std::max(0.0, direction.dot(q.scatter * direction));
  return LocationScatterModel{std::move(mean), std::move(scatter), q.family_tag};
}

// Robust harvest policy: the closed-loop paths discounted by the worst-case
// model Q*. The mean paths are deterministic; sampled paths come from the
// Gaussian representative of Q* through the stored seed.
struct RobustPolicy {
  std::vector<double> times;
  Matrix mean_states;  // one row per time
  Matrix mean_rates;
  LocationScatterModel model;  // Q*
  std::uint64_t seed = 0;
};

inline RobustPolicy robust_policy(const RiskCoefficients& coeffs,
                                  const ControlSolution& solution,
                                  const RiskPreferences& prefs, const PriorSet& priors,
                                  std::vector<double> times, std::uint64_t seed,
                                  const BarycenterOptions& options = {}) {
  RobustPolicy policy;
  policy.model = robust_model(coeffs, priors, prefs, options);
  policy.times = std::move(times);
  policy.mean_states = state_trajectory(policy.model.mean, policy.times, solution.closed_loop);
  policy.mean_rates = harvest_trajectory(policy.model.mean, policy.times, solution);
  policy.seed = seed;
  return policy;
}

/// Sampled harvest paths (one matrix per draw of k0 ~ Q*). Deterministic in
/// (policy.seed, count).
inline std::vector<Matrix> sample_policy_paths(const RobustPolicy& policy,
                                               const ControlSolution& solution, int count) {
  GaussianSampler sampler(policy.model, policy.seed);
  const Matrix draws = sampler.draw(count);
  std::vector<Matrix> paths;
  paths.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    paths.push_back(harvest_trajectory(draws.row(s).transpose(), policy.times, solution));
  }
  return paths;
}

// Aggregated risk output for one scenario.
struct RiskReport {
  double total = 0.0;
  Vector allocations;
  LocationScatterModel barycenter_model;
  LocationScatterModel robust;
  double frechet_var = 0.0;
  RobustPolicy policy;
  double allocation_identity_residual = 0.0;  // relative
  BarycenterStats barycenter_stats;
};

inline RiskReport build_risk_report(const SpatialDomain& domain, const ControlSolution& solution,
                                    const RiskCoefficients& coeffs, const PriorSet& priors,
                                    const RiskPreferences& prefs, std::vector<double> times,
                                    std::uint64_t seed, const BarycenterOptions& options = {}) {
  RiskReport report;
  report.total = total_risk(coeffs, priors, prefs);
  report.allocations = allocate_risk_all(coeffs, priors, prefs);
  report.barycenter_model = barycenter(priors, options, &report.barycenter_stats);
  report.frechet_var = frechet_function(report.barycenter_model, priors);
  report.robust = report.barycenter_model;
  if (!prefs.no_aversion) {
    report.robust.mean += prefs.gamma * coeffs.g_total * coeffs.tilde_alpha;
  }
  report.policy.model = report.robust;
  report.policy.times = std::move(times);
  report.policy.mean_states =
      state_trajectory(report.robust.mean, report.policy.times, solution.closed_loop);
  report.policy.mean_rates =
      harvest_trajectory(report.robust.mean, report.policy.times, solution);
  report.policy.seed = seed;

  // Aggregation identity: sum_j pi_j rho(L_j|L) = rho(L) + (gamma/2) G^2 ||ta||^2.
  const double aggregated = domain.pi_weights.dot(report.allocations);
  const double penalty = prefs.no_aversion
                             ? 0.0
                             : 0.5 * prefs.gamma * coeffs.g_total * coeffs.g_total *
                                   coeffs.tilde_alpha.squaredNorm();
  report.allocation_identity_residual =
      std::abs(aggregated - report.total - penalty) / std::max(1.0, std::abs(report.total));
  if (report.allocation_identity_residual > 1e-10) {
    throw NumericError(ErrorCode::NoConvergence, "",
                       "Euler aggregation identity violated beyond 1e-10 relative");
  }
  return report;
}

}  // namespace harvex
