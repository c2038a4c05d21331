#pragma once

#include <cmath>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include "harvex/harvex.hpp"

namespace harvex::testing {

inline std::string scenario_dir() {
  const char* env = std::getenv("HARVEX_SCENARIO_DIR");
  return env != nullptr ? env : "scenarios";
}

inline Vector random_simplex(std::mt19937_64& rng, int n) {
  std::exponential_distribution<double> expo(1.0);
  Vector w(n);
  for (int i = 0; i < n; ++i) w(i) = expo(rng) + 1e-3;
  w /= w.sum();
  // Renormalize exactly enough for the 1e-12 simplex check.
  w(n - 1) = 1.0 - w.head(n - 1).sum();
  return w;
}

inline Matrix random_spd(std::mt19937_64& rng, int n, double jitter = 0.2) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) a(r, c) = normal(rng);
  }
  Matrix s = a * a.transpose() / n + jitter * Matrix::Identity(n, n);
  return 0.5 * (s + s.transpose());
}

inline PriorSet random_priors(std::mt19937_64& rng, int dim, int max_models = 4) {
  std::uniform_int_distribution<int> model_count(1, max_models);
  std::uniform_real_distribution<double> mean_range(0.3, 2.0);
  std::uniform_real_distribution<double> scatter_scale(0.05, 0.3);
  const int n_models = model_count(rng);
  std::vector<LocationScatterModel> models;
  for (int m = 0; m < n_models; ++m) {
    Vector mean(dim);
    for (int i = 0; i < dim; ++i) mean(i) = mean_range(rng);
    models.push_back(
        make_location_scatter(mean, scatter_scale(rng) * random_spd(rng, dim)));
  }
  return make_prior_set(std::move(models), random_simplex(rng, n_models));
}

struct Instance {
  SpatialDomain domain;
  SpectralSolution spectral;
  ControlSolution solution;
  Vector k0;
  double gamma = 1.0;
};

// Random connected domain with dissipative drift (a_i = -2 deg_i - u_i keeps
// the spectrum negative, hence theta > 0 and bounded trajectories) and a
// moderate closed-loop norm so the quadrature/RK4 oracle tolerances hold with
// slack at the criteria step sizes.
inline Instance random_stable_instance(std::mt19937_64& rng, int max_regions,
                                       double min_horizon = 2.0, double max_horizon = 8.0,
                                       RateVariant variant = RateVariant::AlphaWeighted) {
  std::uniform_int_distribution<int> region_count(1, max_regions);
  std::uniform_real_distribution<double> weight(0.1, 0.4);
  std::uniform_real_distribution<double> margin(0.05, 0.3);
  std::uniform_real_distribution<double> bd(0.5, 1.8);
  std::uniform_real_distribution<double> rr(0.03, 0.15);
  std::uniform_real_distribution<double> bb(0.35, 0.7);
  std::uniform_real_distribution<double> tt(min_horizon, max_horizon);
  std::uniform_real_distribution<double> kk(0.5, 3.0);
  std::uniform_real_distribution<double> state(0.3, 2.0);
  std::uniform_real_distribution<double> gamma_range(0.2, 2.5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int attempt = 0; attempt < 500; ++attempt) {
    const int n = region_count(rng);
    std::vector<Edge> edges;
    for (int v = 1; v < n; ++v) {
      std::uniform_int_distribution<int> parent(0, v - 1);
      edges.push_back({parent(rng), v, weight(rng)});
    }
    if (n >= 3 && unit(rng) < 0.5) {
      std::uniform_int_distribution<int> any(0, n - 1);
      const int i = any(rng);
      const int j = any(rng);
      if (i != j) edges.push_back({std::min(i, j), std::max(i, j), weight(rng)});
    }

    Vector wdeg = Vector::Zero(n);
    for (const Edge& e : edges) {
      wdeg(e.i) += e.weight;
      wdeg(e.j) += e.weight;
    }
    Vector a(n), b(n), d(n);
    for (int i = 0; i < n; ++i) {
      a(i) = -2.0 * wdeg(i) - margin(rng);
      b(i) = bd(rng);
      d(i) = bd(rng);
    }

    Instance inst;
    try {
      inst.domain = validate_domain(n, edges, a, b, d, random_simplex(rng, n));
      inst.spectral = lowest_eigenpair(drift_matrix(inst.domain));
    } catch (const Error&) {
      continue;  // merged duplicate edge with conflicting weight, tight gap, ...
    }
    const EconomicParams params = validate_economics(rr(rng), bb(rng), tt(rng), kk(rng));
    ControlSolution solution;
    try {
      solution = build_control_solution(inst.domain, inst.spectral, params, variant);
    } catch (const Error&) {
      continue;
    }
    if (!(solution.theta > 0.05) || solution.theta > 4.0) continue;
    if (solution.closed_loop.norm() > 4.0) continue;

    inst.solution = solution;
    inst.k0.resize(n);
    for (int i = 0; i < n; ++i) inst.k0(i) = state(rng);
    inst.gamma = gamma_range(rng);
    return inst;
  }
  throw std::runtime_error("random_stable_instance: no acceptable instance in 500 draws");
}

// Symmetric two-region domain whose FocDerived rates solve the HJB exactly:
// beta = 1/2 and D_i = sqrt(2) - 1 satisfy ratio^{1-beta} - ratio(1-beta)
// = beta sum(D) with ratio = N = 2.
inline Instance calibrated_k2_instance(double kappa0 = 1.0) {
  Instance inst;
  const double d = std::sqrt(2.0) - 1.0;
  Vector a = Vector::Constant(2, -2.2);
  Vector b = Vector::Constant(2, d);
  Vector dv = Vector::Constant(2, d);
  Vector pi = Vector::Constant(2, 0.5);
  inst.domain = validate_domain(2, {{0, 1, 1.0}}, a, b, dv, pi);
  inst.spectral = lowest_eigenpair(drift_matrix(inst.domain));
  inst.solution = build_control_solution(
      inst.domain, inst.spectral, validate_economics(0.1, 0.5, 10.0, kappa0),
      RateVariant::FocDerived);
  inst.k0 = Vector::Constant(2, 1.0);
  inst.gamma = 0.8;
  return inst;
}

// The single-region scenario with a = 0.05, B = D = 1, r = 0.1, beta = 1/2,
// T = 10, kappa0 = 1, whose quantities are all checkable by hand.
inline Instance hand_instance(RateVariant variant = RateVariant::AlphaWeighted) {
  Instance inst;
  inst.domain = validate_domain(1, {}, Vector::Constant(1, 0.05), Vector::Ones(1),
                                Vector::Ones(1), Vector::Ones(1));
  inst.spectral = lowest_eigenpair(drift_matrix(inst.domain));
  inst.solution = build_control_solution(inst.domain, inst.spectral,
                                         validate_economics(0.1, 0.5, 10.0, 1.0), variant);
  inst.k0 = Vector::Ones(1);
  inst.gamma = 1.0;
  return inst;
}

inline PriorSet hand_priors() {
  return make_prior_set({make_location_scatter(Vector::Ones(1), Matrix::Ones(1, 1))},
                        Vector::Ones(1));
}

}  // namespace harvex::testing
