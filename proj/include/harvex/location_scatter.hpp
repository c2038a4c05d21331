#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "harvex/errors.hpp"
#include "harvex/linalg.hpp"
#include "harvex/logging.hpp"

namespace harvex {

// A location-scatter probability model: mean vector m and symmetric PSD
// scatter S. The Gaussian member is used whenever sampling is required.
struct LocationScatterModel {
  Vector mean;
  Matrix scatter;
  std::string family_tag = "gaussian";
};

inline LocationScatterModel make_location_scatter(Vector mean, Matrix scatter,
                                                  std::string family_tag = "gaussian",
                                                  const std::string& context = "") {
  if (scatter.rows() != scatter.cols() || scatter.rows() != mean.size()) {
    throw ValidationError(ErrorCode::DimensionMismatch, context,
                          "scatter must be square with the mean's dimension");
  }
  const double scale = std::max(1.0, scatter.cwiseAbs().maxCoeff());
  if (!linalg::is_symmetric(scatter, 1e-12 * scale)) {
    throw ValidationError(ErrorCode::NonPsdScatter, context,
                          "scatter must be symmetric within 1e-12");
  }
  Matrix sym = 0.5 * (scatter + scatter.transpose());
  if (linalg::min_eigenvalue(sym) < -1e-12 * scale) {
    throw ValidationError(ErrorCode::NonPsdScatter, context,
                          "scatter has an eigenvalue below -1e-12");
  }
  return LocationScatterModel{std::move(mean), std::move(sym), std::move(family_tag)};
}

// Weighted collection of location-scatter priors over the same space.
struct PriorSet {
  std::vector<LocationScatterModel> models;
  Vector weights;

  int dimension() const { return static_cast<int>(models.front().mean.size()); }
};

inline PriorSet make_prior_set(std::vector<LocationScatterModel> models, Vector weights,
                               const std::string& context = "priors") {
  if (models.empty()) {
    throw ValidationError(ErrorCode::BadDimension, context + ".models",
                          "at least one prior model is required");
  }
  if (weights.size() != static_cast<Eigen::Index>(models.size())) {
    throw ValidationError(ErrorCode::DimensionMismatch, context + ".weights",
                          "one weight per model is required");
  }
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights(i) < 0.0) {
      throw ValidationError(ErrorCode::BadSimplex, context + ".weights",
                            "weights must be nonnegative");
    }
  }
  if (std::abs(weights.sum() - 1.0) > 1e-12) {
    throw ValidationError(ErrorCode::BadSimplex, context + ".weights",
                          "weights must sum to 1 within 1e-12");
  }
  const Eigen::Index dim = models.front().mean.size();
  for (const auto& m : models) {
    if (m.mean.size() != dim) {
      throw ValidationError(ErrorCode::DimensionMismatch, context + ".models",
                            "all prior models must share one dimension");
    }
  }
  return PriorSet{std::move(models), std::move(weights)};
}

namespace detail {

// Deterministic total order on models so the distance below evaluates
// identically under argument swap (exact floating-point symmetry).
inline bool model_precedes(const LocationScatterModel& a, const LocationScatterModel& b) {
  for (Eigen::Index i = 0; i < a.mean.size(); ++i) {
    if (a.mean(i) != b.mean(i)) return a.mean(i) < b.mean(i);
  }
  for (Eigen::Index i = 0; i < a.scatter.size(); ++i) {
    if (a.scatter.data()[i] != b.scatter.data()[i]) return a.scatter.data()[i] < b.scatter.data()[i];
  }
  return false;
}

inline double bures_trace(const Matrix& s1, const Matrix& s2) {
  const Matrix root = linalg::spd_sqrt(s1);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(root * s2 * root, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

}  // namespace detail

/// Squared quadratic Wasserstein distance between two location-scatter models:
/// ||m1-m2||^2 + tr(S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2}).
inline double wasserstein2_distance(const LocationScatterModel& q1,
                                    const LocationScatterModel& q2) {
  if (q1.mean.size() != q2.mean.size()) {
    throw ValidationError(ErrorCode::DimensionMismatch, "",
                          "models of different dimension have no W2 distance");
  }
  const LocationScatterModel* a = &q1;
  const LocationScatterModel* b = &q2;
  if (detail::model_precedes(*b, *a)) std::swap(a, b);
  const double location = (a->mean - b->mean).squaredNorm();
  const double trace_term =
      a->scatter.trace() + b->scatter.trace() - 2.0 * detail::bures_trace(a->scatter, b->scatter);
  return std::max(0.0, location + trace_term);
}

struct BarycenterOptions {
  double tol = 1e-10;  // Frobenius residual on the fixed-point equation
  int max_iterations = 500;
};

struct BarycenterStats {
  int iterations = 0;
  double residual = 0.0;
  int regularizations = 0;
};

/// Wasserstein barycenter of the prior set: mean is the weighted mean of the
/// locations; the scatter solves S = sum_i w_i (S^{1/2} S_i S^{1/2})^{1/2}
/// via the standard fixed-point scheme started at the weighted scatter mean.
inline LocationScatterModel barycenter(const PriorSet& priors,
                                       const BarycenterOptions& options = {},
                                       BarycenterStats* stats = nullptr) {
  const int n = priors.dimension();
  Vector mean = Vector::Zero(n);
  for (std::size_t i = 0; i < priors.models.size(); ++i) {
    mean += priors.weights(static_cast<Eigen::Index>(i)) * priors.models[i].mean;
  }

  Matrix s = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < priors.models.size(); ++i) {
    s += priors.weights(static_cast<Eigen::Index>(i)) * priors.models[i].scatter;
  }

  BarycenterStats local;
  const double eig_floor = 1e-12;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Matrix root = linalg::spd_sqrt(s);
    Matrix mixed = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < priors.models.size(); ++i) {
      mixed += priors.weights(static_cast<Eigen::Index>(i)) *
               linalg::spd_sqrt(root * priors.models[i].scatter * root);
    }
    local.residual = (s - mixed).norm();
    local.iterations = iter;
    if (local.residual <= options.tol) {
      if (stats != nullptr) *stats = local;
      return LocationScatterModel{mean, s, priors.models.front().family_tag};
    }

    if (linalg::min_eigenvalue(s) <= eig_floor) {
      // Rank-deficient iterate: nudge back into the SPD cone and note it.
      s += eig_floor * Matrix::Identity(n, n);
      ++local.regularizations;
      log::warn("barycenter iterate lost rank; regularized by 1e-12 I");
    }
    const Matrix inv_root = linalg::spd_inv_sqrt(s, 0.0);
    s = inv_root * mixed * mixed * inv_root;
    s = 0.5 * (s + s.transpose());
  }
  throw NumericError(ErrorCode::NoConvergence, "",
                     "barycenter fixed point did not reach tolerance " +
                         std::to_string(options.tol) + " in " +
                         std::to_string(options.max_iterations) + " iterations");
}

/// Frechet function F(Q) = sum_i w_i W2^2(Q, Q_i).
inline double frechet_function(const LocationScatterModel& q, const PriorSet& priors) {
  double total = 0.0;
  for (std::size_t i = 0; i < priors.models.size(); ++i) {
    total += priors.weights(static_cast<Eigen::Index>(i)) *
             wasserstein2_distance(q, priors.models[i]);
  }
  return total;
}

/// Frechet variance: the minimum of the Frechet function, attained at the
/// barycenter.
inline double frechet_variance(const PriorSet& priors, const BarycenterOptions& options = {}) {
  return frechet_function(barycenter(priors, options), priors);
}

// Draws from the Gaussian representative of a location-scatter model. Each
// draw call reseeds, so results depend only on (seed, count) and never on
// call interleaving.
class GaussianSampler {
 public:
  GaussianSampler(LocationScatterModel model, std::uint64_t seed)
      : model_(std::move(model)), root_(linalg::spd_sqrt(model_.scatter)), seed_(seed) {}

  // One sample per row.
  Matrix draw(int count) const {
    std::mt19937_64 rng(seed_);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::Index dim = model_.mean.size();
    Matrix samples(count, dim);
    Vector z(dim);
    for (int s = 0; s < count; ++s) {
      for (Eigen::Index i = 0; i < dim; ++i) z(i) = normal(rng);
      samples.row(s) = (model_.mean + root_ * z).transpose();
    }
    return samples;
  }

  const LocationScatterModel& model() const { return model_; }
  std::uint64_t seed() const { return seed_; }

 private:
  LocationScatterModel model_;
  Matrix root_;
  std::uint64_t seed_;
};

}  // namespace harvex
