#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "harvex/errors.hpp"
#include "harvex/linalg.hpp"

namespace harvex {

struct Edge {
  int i = 0;
  int j = 0;
  double weight = 0.0;
};

// Discretized spatial domain: an undirected weighted graph of sub-regions
// plus the diagonal operators and weight vectors that drive the dynamics.
//
//   a_diag     diagonal of A_D (per-region growth, 1/time)
//   b_diag     diagonal of B_D (harvest coupling, > 0)
//   d_weights  manager weights D_i (> 0)
//   pi_weights region importance, a point on the probability simplex
//
// Values are immutable after validation; build through validate_domain.
struct SpatialDomain {
  int n_regions = 0;
  std::vector<Edge> edges;  // canonical form: i < j, merged duplicates
  Vector a_diag;
  Vector b_diag;
  Vector d_weights;
  Vector pi_weights;
};

namespace detail {

inline std::string region_label(int idx) { return "region " + std::to_string(idx); }

inline void check_vector_size(const Vector& v, int n, const std::string& field) {
  if (v.size() != n) {
    throw ValidationError(ErrorCode::BadDimension, field,
                          "expected length " + std::to_string(n) + ", got " +
                              std::to_string(static_cast<long>(v.size())));
  }
}

}  // namespace detail

// Validates a raw domain description and returns the canonical SpatialDomain.
// `context` prefixes field paths in errors (e.g. "domain").
inline SpatialDomain validate_domain(int n_regions, const std::vector<Edge>& raw_edges,
                                     Vector a_diag, Vector b_diag, Vector d_weights,
                                     Vector pi_weights, const std::string& context = "domain") {
  const auto field = [&context](const char* name) { return context + "." + name; };

  if (n_regions <= 0) {
    throw ValidationError(ErrorCode::BadDimension, field("n_regions"),
                          "number of regions must be positive");
  }
  detail::check_vector_size(a_diag, n_regions, field("a_diag"));
  detail::check_vector_size(b_diag, n_regions, field("b_diag"));
  detail::check_vector_size(d_weights, n_regions, field("d_weights"));
  detail::check_vector_size(pi_weights, n_regions, field("pi_weights"));

  for (int i = 0; i < n_regions; ++i) {
    if (!(b_diag(i) > 0.0)) {
      throw ValidationError(ErrorCode::NonPositiveOperator, field("b_diag"),
                            "B_D must be strictly positive at " + detail::region_label(i));
    }
    if (!(d_weights(i) > 0.0)) {
      throw ValidationError(ErrorCode::NonPositiveOperator, field("d_weights"),
                            "D must be strictly positive at " + detail::region_label(i));
    }
    if (pi_weights(i) < 0.0 || pi_weights(i) > 1.0) {
      throw ValidationError(ErrorCode::BadSimplex, field("pi_weights"),
                            "entries must lie in [0,1]; offending " + detail::region_label(i));
    }
  }
  if (std::abs(pi_weights.sum() - 1.0) > 1e-12) {
    throw ValidationError(ErrorCode::BadSimplex, field("pi_weights"),
                          "entries must sum to 1 within 1e-12");
  }

  // Merge duplicate/mirrored edge statements; conflicting weights are an error.
  std::map<std::pair<int, int>, double> merged;
  for (const Edge& e : raw_edges) {
    if (e.i < 0 || e.i >= n_regions || e.j < 0 || e.j >= n_regions) {
      throw ValidationError(ErrorCode::BadDimension, field("edges"),
                            "edge indices must lie in [0, n_regions)");
    }
    if (e.i == e.j) {
      throw ValidationError(ErrorCode::SelfLoop, field("edges"),
                            "self-loop at " + detail::region_label(e.i));
    }
    if (e.weight < 0.0) {
      throw ValidationError(ErrorCode::NegativeWeight, field("edges"),
                            "edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                                ") has negative weight");
    }
    const auto key = std::make_pair(std::min(e.i, e.j), std::max(e.i, e.j));
    auto it = merged.find(key);
    if (it == merged.end()) {
      merged.emplace(key, e.weight);
    } else if (it->second != e.weight) {
      throw ValidationError(ErrorCode::AsymmetricWeights, field("edges"),
                            "edge (" + std::to_string(key.first) + "," +
                                std::to_string(key.second) + ") stated with weights " +
                                std::to_string(it->second) + " and " + std::to_string(e.weight));
    }
  }

  // Connectivity by traversal over strictly positive weights.
  std::vector<std::vector<int>> adjacency(static_cast<std::size_t>(n_regions));
  for (const auto& [key, w] : merged) {
    if (w > 0.0) {
      adjacency[static_cast<std::size_t>(key.first)].push_back(key.second);
      adjacency[static_cast<std::size_t>(key.second)].push_back(key.first);
    }
  }
  std::vector<char> seen(static_cast<std::size_t>(n_regions), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adjacency[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        stack.push_back(w);
      }
    }
  }
  for (int i = 0; i < n_regions; ++i) {
    if (!seen[static_cast<std::size_t>(i)]) {
      throw ValidationError(ErrorCode::DisconnectedGraph, field("edges"),
                            detail::region_label(i) + " is unreachable from region 0");
    }
  }

  SpatialDomain domain;
  domain.n_regions = n_regions;
  domain.edges.reserve(merged.size());
  for (const auto& [key, w] : merged) domain.edges.push_back({key.first, key.second, w});
  domain.a_diag = std::move(a_diag);
  domain.b_diag = std::move(b_diag);
  domain.d_weights = std::move(d_weights);
  domain.pi_weights = std::move(pi_weights);
  return domain;
}

// Graph Laplacian: L[i][j] = -w_ij on edges, diagonal = sum of incident
// weights. Symmetric with zero row sums by construction.
inline Matrix build_laplacian(const SpatialDomain& domain) {
  Matrix lap = Matrix::Zero(domain.n_regions, domain.n_regions);
  for (const Edge& e : domain.edges) {
    lap(e.i, e.j) -= e.weight;
    lap(e.j, e.i) -= e.weight;
    lap(e.i, e.i) += e.weight;
    lap(e.j, e.j) += e.weight;
  }
  return lap;
}

// Drift operator of the capital dynamics: L_G + diag(a).
inline Matrix drift_matrix(const SpatialDomain& domain) {
  Matrix drift = build_laplacian(domain);
  drift.diagonal() += domain.a_diag;
  return drift;
}

// Lowest eigenpair of the drift matrix together with the matrix itself.
// alpha is unit norm, oriented positive, and strictly positive entrywise.
struct SpectralSolution {
  double lambda_min = 0.0;
  Vector alpha;
  Matrix drift;
};

// Smallest eigenvalue and eigenvector of a symmetric drift matrix. The
// eigenvector is oriented so its entries sum positive and must then be
// strictly positive (Perron property of -drift for connected nonnegative
// graphs); a violation means the downstream closed forms are undefined.
inline SpectralSolution lowest_eigenpair(const Matrix& drift,
                                         double degeneracy_gap = 1e-10,
                                         double positivity_tol = 1e-12) {
  const Eigen::Index n = drift.rows();
  if (n == 0 || drift.cols() != n) {
    throw ValidationError(ErrorCode::BadDimension, "", "drift matrix must be square, nonempty");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(drift);
  if (eig.info() != Eigen::Success) {
    throw NumericError(ErrorCode::NoConvergence, "", "symmetric eigensolver failed");
  }
  if (n >= 2 && eig.eigenvalues()(1) - eig.eigenvalues()(0) < degeneracy_gap) {
    throw NumericError(ErrorCode::DegenerateEigenvalue, "",
                       "lowest eigenvalue has multiplicity > 1 within gap tolerance");
  }

  SpectralSolution solution;
  solution.lambda_min = eig.eigenvalues()(0);
  solution.alpha = eig.eigenvectors().col(0);
  if (solution.alpha.sum() < 0.0) solution.alpha = -solution.alpha;
  solution.alpha.normalize();
  if (solution.alpha.minCoeff() <= positivity_tol) {
    throw NumericError(ErrorCode::NonPositiveEigenvector, "",
                       "lowest eigenvector is not strictly positive after orientation");
  }
  solution.drift = drift;
  return solution;
}

}  // namespace harvex
