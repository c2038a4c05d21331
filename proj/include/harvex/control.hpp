#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "harvex/errors.hpp"
#include "harvex/linalg.hpp"
#include "harvex/spatial_domain.hpp"

namespace harvex {

// Which closed form produces the per-region harvest rates. AlphaWeighted
// scales each region by alpha_i directly; FocDerived follows the
// first-order-condition chain (alpha_i^{-1/beta}, extra 1/D_i). The two
// disagree for N > 1; both are kept so the residual oracles can compare
// them. Scenario files select them as "paper" and "foc".
enum class RateVariant { AlphaWeighted, FocDerived };

inline const char* rate_variant_name(RateVariant v) {
  return v == RateVariant::AlphaWeighted ? "paper" : "foc";
}

struct EconomicParams {
  double discount_rate = 0.0;  // r > 0, 1/time
  double elasticity = 0.0;     // beta in (0,1)
  double horizon = 0.0;        // T > 0
  double kappa0 = 0.0;         // terminal-condition scalar, > 0
};

inline EconomicParams validate_economics(double r, double beta, double horizon, double kappa0,
                                         const std::string& context = "economics") {
  const auto field = [&context](const char* name) { return context + "." + name; };
  if (!(r > 0.0)) {
    throw ValidationError(ErrorCode::BadParameter, field("r"), "discount rate must be > 0");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw ValidationError(ErrorCode::BadParameter, field("beta"),
                          "elasticity must lie strictly inside (0,1)");
  }
  if (!(horizon > 0.0)) {
    throw ValidationError(ErrorCode::BadParameter, field("horizon"), "horizon must be > 0");
  }
  if (!(kappa0 > 0.0)) {
    throw ValidationError(ErrorCode::BadParameter, field("kappa0"), "kappa0 must be > 0");
  }
  return EconomicParams{r, beta, horizon, kappa0};
}

/// theta = (r - lambda (1-beta)) / beta; the decay rate of the controlled
/// mode. |theta| below 1e-12 is rejected because theta divides the bracket
/// term of the value function.
inline double compute_theta(const EconomicParams& params, double lambda_min) {
  const double theta =
      (params.discount_rate - lambda_min * (1.0 - params.elasticity)) / params.elasticity;
  if (std::abs(theta) < 1e-12) {
    throw NumericError(ErrorCode::DegenerateTheta, "",
                       "theta vanishes: lambda = r/(1-beta) is a degenerate regime");
  }
  return theta;
}

/// Lambda(alpha) = sum_i B_i (B_i/D_i)^{-1/beta} alpha_i^{(beta-1)/beta}.
inline double compute_lambda_alpha(const SpatialDomain& domain, const Vector& alpha,
                                   double beta) {
  if (alpha.size() != domain.n_regions) {
    throw ValidationError(ErrorCode::DimensionMismatch, "", "alpha length != n_regions");
  }
  double total = 0.0;
  for (int i = 0; i < domain.n_regions; ++i) {
    if (!(alpha(i) > 0.0)) {
      throw NumericError(ErrorCode::NonPositiveEigenvector, "",
                         "Lambda(alpha) undefined for nonpositive alpha component");
    }
    total += domain.b_diag(i) * std::pow(domain.b_diag(i) / domain.d_weights(i), -1.0 / beta) *
             std::pow(alpha(i), (beta - 1.0) / beta);
  }
  return total;
}

// Bracket term shared by psi0, the value function and the harvest rates:
//   (kappa0 - Lambda/theta) e^{-theta (T - t)} + Lambda/theta.
// Monotone in t, so positivity over [0,T] follows from the endpoints.
inline double bracket_term(double t, double theta, double lambda_alpha,
                           const EconomicParams& params) {
  const double ratio = lambda_alpha / theta;
  return (params.kappa0 - ratio) * std::exp(-theta * (params.horizon - t)) + ratio;
}

/// Time profile psi0(t) of the value function separable ansatz.
inline double psi0(double t, double theta, double lambda_alpha, const EconomicParams& params) {
  const double bracket = bracket_term(t, theta, lambda_alpha, params);
  if (!(bracket > 0.0)) {
    throw NumericError(ErrorCode::NegativeBracket, "",
                       "bracket term nonpositive at t=" + std::to_string(t) +
                           "; parameter regime invalid");
  }
  const double beta = params.elasticity;
  return std::exp(-params.discount_rate * t / (1.0 - beta)) *
         std::pow(bracket, beta / (1.0 - beta));
}

// Immutable bundle of everything the closed forms need. Constructed once per
// (domain, economics) pair and shared freely across threads.
struct ControlSolution {
  SpatialDomain domain;
  SpectralSolution spectral;
  EconomicParams params;
  RateVariant variant = RateVariant::AlphaWeighted;

  double theta = 0.0;
  double lambda_alpha = 0.0;
  Vector bd_pow;      // (B_i/D_i)^{-1/beta}
  Vector rank_one_u;  // B_i (B_i/D_i)^{-1/beta} alpha_i
  Matrix closed_loop;
};

/// Closed-loop dynamics matrix M = drift - (theta/Lambda) u alpha', where
/// u_i = B_i (B_i/D_i)^{-1/beta} alpha_i. The correction is rank one.
inline Matrix closed_loop_matrix(const SpatialDomain& domain, const SpectralSolution& spectral,
                                 double theta, double lambda_alpha, double beta) {
  Vector u(domain.n_regions);
  for (int i = 0; i < domain.n_regions; ++i) {
    u(i) = domain.b_diag(i) * std::pow(domain.b_diag(i) / domain.d_weights(i), -1.0 / beta) *
           spectral.alpha(i);
  }
  return spectral.drift - (theta / lambda_alpha) * u * spectral.alpha.transpose();
}

inline ControlSolution build_control_solution(const SpatialDomain& domain,
                                              const SpectralSolution& spectral,
                                              const EconomicParams& params,
                                              RateVariant variant = RateVariant::AlphaWeighted) {
  ControlSolution solution;
  solution.domain = domain;
  solution.spectral = spectral;
  solution.params = params;
  solution.variant = variant;
  solution.theta = compute_theta(params, spectral.lambda_min);
  solution.lambda_alpha = compute_lambda_alpha(domain, spectral.alpha, params.elasticity);

  // Fail fast on invalid regimes: the bracket is monotone in t and equals
  // kappa0 > 0 at t = T, so checking t = 0 covers the whole horizon.
  if (!(bracket_term(0.0, solution.theta, solution.lambda_alpha, params) > 0.0)) {
    throw NumericError(ErrorCode::NegativeBracket, "",
                       "bracket term nonpositive at t=0; parameter regime invalid");
  }

  const double beta = params.elasticity;
  solution.bd_pow.resize(domain.n_regions);
  solution.rank_one_u.resize(domain.n_regions);
  for (int i = 0; i < domain.n_regions; ++i) {
    solution.bd_pow(i) = std::pow(domain.b_diag(i) / domain.d_weights(i), -1.0 / beta);
    solution.rank_one_u(i) = domain.b_diag(i) * solution.bd_pow(i) * spectral.alpha(i);
  }
  solution.closed_loop = spectral.drift - (solution.theta / solution.lambda_alpha) *
                                              solution.rank_one_u *
                                              spectral.alpha.transpose();
  return solution;
}

namespace detail {

inline double alpha_state(const ControlSolution& s, const Vector& k) {
  if (k.size() != s.domain.n_regions) {
    throw ValidationError(ErrorCode::DimensionMismatch, "", "state length != n_regions");
  }
  const double dot = s.spectral.alpha.dot(k);
  if (!(dot > 0.0)) {
    throw NumericError(ErrorCode::NonPositiveState, "",
                       "<alpha, k> must be positive for the closed forms");
  }
  return dot;
}

// Gradient of the value function in k: psi0^{1-beta} <alpha,k>^{-beta} alpha.
inline Vector value_gradient(double t, double dot, const ControlSolution& s) {
  const double beta = s.params.elasticity;
  const double p = psi0(t, s.theta, s.lambda_alpha, s.params);
  return std::pow(p, 1.0 - beta) * std::pow(dot, -beta) * s.spectral.alpha;
}

}  // namespace detail

/// Value function v(t,k) = e^{-rt}/(1-beta) [bracket]^beta <alpha,k>^{1-beta}.
inline double value_function(double t, const Vector& k, const ControlSolution& s) {
  const double dot = detail::alpha_state(s, k);
  const double bracket = bracket_term(t, s.theta, s.lambda_alpha, s.params);
  if (!(bracket > 0.0)) {
    throw NumericError(ErrorCode::NegativeBracket, "", "bracket term nonpositive");
  }
  const double beta = s.params.elasticity;
  return std::exp(-s.params.discount_rate * t) / (1.0 - beta) * std::pow(bracket, beta) *
         std::pow(dot, 1.0 - beta);
}

/// Optimal per-region harvest rates at (t, k) under the selected variant.
inline Vector harvest_rate(double t, const Vector& k, const ControlSolution& s,
                           RateVariant variant) {
  const double dot = detail::alpha_state(s, k);
  const double bracket = bracket_term(t, s.theta, s.lambda_alpha, s.params);
  if (!(bracket > 0.0)) {
    throw NumericError(ErrorCode::NegativeBracket, "", "bracket term nonpositive");
  }
  const int n = s.domain.n_regions;
  const double beta = s.params.elasticity;
  Vector rates(n);
  if (variant == RateVariant::AlphaWeighted) {
    for (int i = 0; i < n; ++i) {
      rates(i) = s.spectral.alpha(i) * s.bd_pow(i) * dot / bracket;
    }
  } else {
    // First-order-condition chain: c_i = D_i^{-1} e^{-rt/beta}
    // ((B_i/D_i) (Dv)_i)^{-1/beta} with the analytic value gradient.
    const Vector grad = detail::value_gradient(t, dot, s);
    for (int i = 0; i < n; ++i) {
      const double inner = (s.domain.b_diag(i) / s.domain.d_weights(i)) * grad(i);
      rates(i) = std::exp(-s.params.discount_rate * t / beta) *
                 std::pow(inner, -1.0 / beta) / s.domain.d_weights(i);
    }
  }
  return rates;
}

inline Vector harvest_rate(double t, const Vector& k, const ControlSolution& s) {
  return harvest_rate(t, k, s, s.variant);
}

/// Phi(t) = [1 + (theta kappa0/Lambda - 1) e^{-theta (T-t)}]^{-1}; the factor
/// by which the finite-horizon rates deviate from the stationary ones.
inline double phi_factor(double t, const ControlSolution& s) {
  const double x = (s.theta * s.params.kappa0 / s.lambda_alpha - 1.0) *
                   std::exp(-s.theta * (s.params.horizon - t));
  const double denom = 1.0 + x;
  if (std::abs(denom) < 1e-14) {
    throw NumericError(ErrorCode::DivisionByZero, "", "Phi(t) denominator vanishes");
  }
  return 1.0 / denom;
}

/// Stationary (large-horizon) harvest rates
/// c_i = (alpha_i theta / Lambda) (B_i/D_i)^{-1/beta} <alpha, k>.
inline Vector asymptotic_harvest_rate(const Vector& k, const ControlSolution& s) {
  if (!(s.theta > 0.0)) {
    throw NumericError(ErrorCode::AsymptoticsInvalid, "",
                       "asymptotic rates require theta > 0");
  }
  if (k.size() != s.domain.n_regions) {
    throw ValidationError(ErrorCode::DimensionMismatch, "", "state length != n_regions");
  }
  const double dot = s.spectral.alpha.dot(k);
  Vector rates(s.domain.n_regions);
  for (int i = 0; i < s.domain.n_regions; ++i) {
    rates(i) = s.spectral.alpha(i) * s.theta / s.lambda_alpha * s.bd_pow(i) * dot;
  }
  return rates;
}

namespace detail {

inline void check_times(const std::vector<double>& times) {
  double prev = 0.0;
  bool first = true;
  for (double t : times) {
    if (t < 0.0 || (!first && t < prev)) {
      throw ValidationError(ErrorCode::BadParameter, "",
                            "time grid must be sorted and nonnegative");
    }
    prev = t;
    first = false;
  }
}

}  // namespace detail

/// Closed-loop state path k(t_j) = e^{t_j M} k0, one row per grid point.
inline Matrix state_trajectory(const Vector& k0, const std::vector<double>& times,
                               const Matrix& closed_loop) {
  if (k0.size() != closed_loop.rows()) {
    throw ValidationError(ErrorCode::DimensionMismatch, "", "k0 length != matrix dimension");
  }
  detail::check_times(times);
  Matrix states(static_cast<Eigen::Index>(times.size()), k0.size());
  for (std::size_t j = 0; j < times.size(); ++j) {
    states.row(static_cast<Eigen::Index>(j)) =
        (linalg::expm(times[j] * closed_loop) * k0).transpose();
  }
  return states;
}

/// Closed-loop harvest path c(t) = (theta/Lambda) Btilde A Atilde e^{tM} k0,
/// i.e. the stationary rate map applied to the state path.
inline Matrix harvest_trajectory(const Vector& k0, const std::vector<double>& times,
                                 const ControlSolution& s) {
  if (!(s.theta > 0.0)) {
    throw NumericError(ErrorCode::AsymptoticsInvalid, "",
                       "harvest trajectory requires theta > 0");
  }
  Matrix states = state_trajectory(k0, times, s.closed_loop);
  Matrix rates(states.rows(), states.cols());
  for (Eigen::Index j = 0; j < states.rows(); ++j) {
    rates.row(j) = asymptotic_harvest_rate(states.row(j).transpose(), s).transpose();
  }
  return rates;
}

}  // namespace harvex
