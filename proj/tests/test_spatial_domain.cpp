#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace harvex;

namespace {

SpatialDomain path3() {
  return validate_domain(3, {{0, 1, 1.0}, {1, 2, 1.0}}, Vector::Zero(3), Vector::Ones(3),
                         Vector::Ones(3), Vector::Constant(3, 1.0 / 3.0));
}

}  // namespace

TEST_CASE("graph Laplacian on small graphs") {
  SECTION("path on 3 nodes, unit weights") {
    Matrix lap = build_laplacian(path3());
    Matrix expected(3, 3);
    expected << 1, -1, 0, -1, 2, -1, 0, -1, 1;
    REQUIRE((lap - expected).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("single node, no edges") {
    SpatialDomain d = validate_domain(1, {}, Vector::Zero(1), Vector::Ones(1), Vector::Ones(1),
                                      Vector::Ones(1));
    Matrix lap = build_laplacian(d);
    REQUIRE(lap.rows() == 1);
    REQUIRE(lap(0, 0) == 0.0);
  }
  SECTION("two nodes, weight 3") {
    SpatialDomain d = validate_domain(2, {{0, 1, 3.0}}, Vector::Zero(2), Vector::Ones(2),
                                      Vector::Ones(2), Vector::Constant(2, 0.5));
    Matrix expected(2, 2);
    expected << 3, -3, -3, 3;
    REQUIRE((build_laplacian(d) - expected).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("domain validation accepts well-formed input and names failures") {
  SECTION("valid two-node domain") {
    SpatialDomain d = validate_domain(2, {{0, 1, 1.0}}, Vector::Zero(2), Vector::Ones(2),
                                      Vector::Ones(2), Vector::Constant(2, 0.5));
    REQUIRE(d.n_regions == 2);
    REQUIRE(d.edges.size() == 1);
  }
  SECTION("mirrored edges with equal weight collapse to one edge") {
    SpatialDomain d = validate_domain(2, {{0, 1, 1.5}, {1, 0, 1.5}}, Vector::Zero(2),
                                      Vector::Ones(2), Vector::Ones(2), Vector::Constant(2, 0.5));
    REQUIRE(d.edges.size() == 1);
    REQUIRE(d.edges[0].weight == 1.5);
  }
  SECTION("conflicting mirrored weights") {
    try {
      validate_domain(2, {{0, 1, 1.0}, {1, 0, 2.0}}, Vector::Zero(2), Vector::Ones(2),
                      Vector::Ones(2), Vector::Constant(2, 0.5));
      FAIL("expected AsymmetricWeights");
    } catch (const ValidationError& e) {
      REQUIRE(e.code() == ErrorCode::AsymmetricWeights);
    }
  }
  SECTION("two components with no connecting edge") {
    try {
      validate_domain(3, {{0, 1, 1.0}}, Vector::Zero(3), Vector::Ones(3), Vector::Ones(3),
                      Vector::Constant(3, 1.0 / 3.0));
      FAIL("expected DisconnectedGraph");
    } catch (const ValidationError& e) {
      REQUIRE(e.code() == ErrorCode::DisconnectedGraph);
    }
  }
  SECTION("zero-weight edges do not connect") {
    try {
      validate_domain(2, {{0, 1, 0.0}}, Vector::Zero(2), Vector::Ones(2), Vector::Ones(2),
                      Vector::Constant(2, 0.5));
      FAIL("expected DisconnectedGraph");
    } catch (const ValidationError& e) {
      REQUIRE(e.code() == ErrorCode::DisconnectedGraph);
    }
  }
  SECTION("negative weight") {
    try {
      validate_domain(2, {{0, 1, -0.5}}, Vector::Zero(2), Vector::Ones(2), Vector::Ones(2),
                      Vector::Constant(2, 0.5));
      FAIL("expected NegativeWeight");
    } catch (const ValidationError& e) {
      REQUIRE(e.code() == ErrorCode::NegativeWeight);
    }
  }
  SECTION("self loop") {
    try {
      validate_domain(2, {{0, 0, 1.0}, {0, 1, 1.0}}, Vector::Zero(2), Vector::Ones(2),
                      Vector::Ones(2), Vector::Constant(2, 0.5));
      FAIL("expected SelfLoop");
    } catch (const ValidationError& e) {
      REQUIRE(e.code() == ErrorCode::SelfLoop);
    }
  }
  SECTION("nonpositive operators") {
    Vector bad = Vector::Ones(2);
    bad(1) = 0.0;
    try {
      validate_domain(2, {{0, 1, 1.0}}, Vector::Zero(2), bad, Vector::Ones(2),
                      Vector::Constant(2, 0.5));
      FAIL("expected NonPositiveOperator");
    } catch (const ValidationError& e) {
      REQUIRE(e.code() == ErrorCode::NonPositiveOperator);
    }
  }
  SECTION("importance weights off the simplex") {
    try {
      validate_domain(2, {{0, 1, 1.0}}, Vector::Zero(2), Vector::Ones(2), Vector::Ones(2),
                      Vector::Constant(2, 0.4));
      FAIL("expected BadSimplex");
    } catch (const ValidationError& e) {
      REQUIRE(e.code() == ErrorCode::BadSimplex);
    }
  }
}

TEST_CASE("drift matrix adds the diagonal growth operator") {
  SECTION("K2, zero growth") {
    SpatialDomain d = validate_domain(2, {{0, 1, 1.0}}, Vector::Zero(2), Vector::Ones(2),
                                      Vector::Ones(2), Vector::Constant(2, 0.5));
    Matrix expected(2, 2);
    expected << 1, -1, -1, 1;
    REQUIRE((drift_matrix(d) - expected).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("single node") {
    SpatialDomain d = validate_domain(1, {}, Vector::Constant(1, 0.05), Vector::Ones(1),
                                      Vector::Ones(1), Vector::Ones(1));
    REQUIRE(drift_matrix(d)(0, 0) == 0.05);
  }
  SECTION("K2 with distinct diagonal") {
    Vector a(2);
    a << 0.2, 0.1;
    SpatialDomain d = validate_domain(2, {{0, 1, 1.0}}, a, Vector::Ones(2), Vector::Ones(2),
                                      Vector::Constant(2, 0.5));
    Matrix expected(2, 2);
    expected << 1.2, -1, -1, 1.1;
    REQUIRE((drift_matrix(d) - expected).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("lowest eigenpair on closed-form cases") {
  SECTION("K2 kernel") {
    Matrix drift(2, 2);
    drift << 1, -1, -1, 1;
    SpectralSolution s = lowest_eigenpair(drift);
    REQUIRE(s.lambda_min == Catch::Approx(0.0).margin(1e-14));
    REQUIRE(s.alpha(0) == Catch::Approx(1.0 / std::sqrt(2.0)).margin(1e-14));
    REQUIRE(s.alpha(1) == Catch::Approx(1.0 / std::sqrt(2.0)).margin(1e-14));
  }
  SECTION("diagonal shift moves the eigenvalue, not the eigenvector") {
    Matrix drift(2, 2);
    drift << 1.05, -1, -1, 1.05;
    SpectralSolution s = lowest_eigenpair(drift);
    REQUIRE(s.lambda_min == Catch::Approx(0.05).margin(1e-13));
    REQUIRE(s.alpha(0) == Catch::Approx(1.0 / std::sqrt(2.0)).margin(1e-13));
  }
  SECTION("asymmetric 2x2 against the quadratic formula") {
    Matrix drift(2, 2);
    drift << 1.2, -1, -1, 1.1;
    // Characteristic polynomial oracle: trace 2.3, determinant 0.32.
    const double lambda = (2.3 - std::sqrt(2.3 * 2.3 - 4.0 * 0.32)) / 2.0;
    SpectralSolution s = lowest_eigenpair(drift);
    REQUIRE(s.lambda_min == Catch::Approx(lambda).epsilon(1e-12));
    Vector expected(2);
    expected << 1.0, 1.2 - lambda;
    expected.normalize();
    REQUIRE((s.alpha - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
  SECTION("degenerate lowest eigenvalue is rejected") {
    try {
      lowest_eigenpair(Matrix::Identity(2, 2));
      FAIL("expected DegenerateEigenvalue");
    } catch (const NumericError& e) {
      REQUIRE(e.code() == ErrorCode::DegenerateEigenvalue);
    }
  }
  SECTION("sign-mixed eigenvector is rejected") {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;  // lowest eigenvector (1,-1)/sqrt(2)
    try {
      lowest_eigenpair(m);
      FAIL("expected NonPositiveEigenvector");
    } catch (const NumericError& e) {
      REQUIRE(e.code() == ErrorCode::NonPositiveEigenvector);
    }
  }
}

TEST_CASE("spectral properties on random domains") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 40; ++trial) {
    testing::Instance inst = testing::random_stable_instance(rng, 8);
    const Matrix lap = build_laplacian(inst.domain);

    // Symmetric, PSD, zero row sums.
    REQUIRE((lap - lap.transpose()).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(lap.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(linalg::min_eigenvalue(lap) > -1e-10);

    // Eigen residual and strict positivity.
    const SpectralSolution& s = inst.spectral;
    REQUIRE((s.drift * s.alpha - s.lambda_min * s.alpha).norm() <= 1e-10);
    REQUIRE(s.alpha.minCoeff() > 1e-12);
    REQUIRE(std::abs(s.alpha.norm() - 1.0) <= 1e-12);

    // Shift invariance of the eigenpair.
    std::uniform_real_distribution<double> shift(-2.0, 2.0);
    const double c = shift(rng);
    const int n = inst.domain.n_regions;
    if (n >= 2) {
      SpectralSolution shifted = lowest_eigenpair(s.drift + c * Matrix::Identity(n, n));
      REQUIRE(shifted.lambda_min == Catch::Approx(s.lambda_min + c).margin(1e-10));
      REQUIRE((shifted.alpha - s.alpha).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}
