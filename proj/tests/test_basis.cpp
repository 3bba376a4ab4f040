#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace momentmap;

TEST_CASE("basis is orthonormal in the Frobenius inner product") {
  SECTION("m=2, p=1") {
    const HermitianBasis basis = build_basis(2, 1);
    REQUIRE(basis.size() == 7);
    REQUIRE(basis.side() == 4);
    RealMatrix gram(7, 7);
    for (Index j = 0; j < 7; ++j)
      for (Index k = 0; k < 7; ++k) gram(j, k) = trace_inner(basis.elements[j], basis.elements[k]);
    REQUIRE((gram - RealMatrix::Identity(7, 7)).cwiseAbs().maxCoeff() < 1e-14);
  }
  SECTION("m=1, p=1 has two elements") {
    const HermitianBasis basis = build_basis(1, 1);
    REQUIRE(basis.size() == 2);
  }
  SECTION("m=3, p=2") {
    const HermitianBasis basis = build_basis(3, 2);
    REQUIRE(basis.size() == 2 * 9 + 6);
    RealMatrix gram(basis.size(), basis.size());
    for (Index j = 0; j < basis.size(); ++j)
      for (Index k = 0; k < basis.size(); ++k)
        gram(j, k) = trace_inner(basis.elements[j], basis.elements[k]);
    REQUIRE((gram - RealMatrix::Identity(basis.size(), basis.size())).cwiseAbs().maxCoeff() < 1e-14);
    for (const RealMatrix& b : basis.elements)
      REQUIRE((b - b.transpose()).norm() == 0.0);
  }
  SECTION("invalid dimensions") {
    REQUIRE_THROWS_AS(build_basis(0, 1), ConfigError);
    REQUIRE_THROWS_AS(build_basis(2, 0), ConfigError);
  }
}

TEST_CASE("basis ordering: lag blocks first, then diagonal upper triangle") {
  const HermitianBasis basis = build_basis(2, 1);
  // First four elements touch only the off-diagonal blocks.
  for (Index j = 0; j < 4; ++j) {
    REQUIRE(basis.elements[j].block(0, 0, 2, 2).norm() == 0.0);
    REQUIRE(basis.elements[j].block(2, 2, 2, 2).norm() == 0.0);
  }
  // Element 0 is the (2,0) unit generator symmetrized.
  REQUIRE(basis.elements[0](2, 0) == Catch::Approx(1.0 / std::sqrt(2.0)));
  REQUIRE(basis.elements[1](2, 1) == Catch::Approx(1.0 / std::sqrt(2.0)));
  REQUIRE(basis.elements[2](3, 0) == Catch::Approx(1.0 / std::sqrt(2.0)));
  REQUIRE(basis.elements[3](3, 1) == Catch::Approx(1.0 / std::sqrt(2.0)));
  // Diagonal generators repeat on both diagonal blocks.
  REQUIRE(basis.elements[4](0, 0) == Catch::Approx(1.0 / std::sqrt(2.0)));
  REQUIRE(basis.elements[4](2, 2) == Catch::Approx(1.0 / std::sqrt(2.0)));
  REQUIRE(basis.elements[5](0, 1) == Catch::Approx(0.5));
  REQUIRE(basis.elements[5](1, 0) == Catch::Approx(0.5));
  REQUIRE(basis.elements[6](1, 1) == Catch::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("projection") {
  const HermitianBasis basis = build_basis(2, 1);

  SECTION("idempotent on the span") {
    std::mt19937_64 rng(3);
    const RealVector coords = ts::random_direction(rng, 7) * 2.5;
    const LambdaParam lam = lambda_from_coords(coords, basis);
    const LambdaParam back = project(lam.matrix, basis);
    REQUIRE((back.coords - coords).norm() < 1e-13);
    REQUIRE((back.matrix - lam.matrix).norm() < 1e-13);
  }
  SECTION("coordinate 2-norm equals Frobenius norm on the span") {
    std::mt19937_64 rng(5);
    const RealVector coords = ts::random_direction(rng, 7) * 3.0;
    const LambdaParam lam = lambda_from_coords(coords, basis);
    REQUIRE(lam.matrix.norm() == Catch::Approx(coords.norm()).epsilon(1e-12));
  }
  SECTION("self-adjoint: <P(X), Y> == <X, P(Y)> for symmetric X, Y") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    RealMatrix x(4, 4), y(4, 4);
    for (Index r = 0; r < 4; ++r)
      for (Index c = 0; c < 4; ++c) {
        x(r, c) = unif(rng);
        y(r, c) = unif(rng);
      }
    x = RealMatrix(symmetric_part(x));
    y = RealMatrix(symmetric_part(y));
    const double lhs = trace_inner(project(x, basis).matrix, y);
    const double rhs = trace_inner(x, project(y, basis).matrix);
    REQUIRE(lhs == Catch::Approx(rhs).margin(1e-12));
  }
  SECTION("rejects non-symmetric input") {
    RealMatrix x = RealMatrix::Zero(4, 4);
    x(0, 1) = 1.0;
    REQUIRE_THROWS_AS(project(x, basis), ConfigError);
  }
  SECTION("rejects wrong side") {
    REQUIRE_THROWS_AS(project(RealMatrix::Identity(3, 3), basis), ConfigError);
  }
  SECTION("coordinate count must match") {
    REQUIRE_THROWS_AS(lambda_from_coords(RealVector::Zero(6), basis), ConfigError);
  }
}

TEST_CASE("parameters from spectral factors") {
  const RationalFilter filter = block_shift_filter(2, 1);
  const HermitianBasis basis = build_basis(2, 1);

  SECTION("C = [0 | I] gives the half-identity diagonal") {
    RealMatrix c(2, 4);
    c << 0, 0, 1, 0, 0, 0, 0, 1;
    const LambdaParam lam = lambda_from_factor(FactorC::checked(c, filter), basis);
    RealMatrix expected = 0.5 * RealMatrix::Identity(4, 4);
    REQUIRE((lam.matrix - expected).norm() < 1e-14);
  }
  SECTION("published reference blocks for C0") {
    const LambdaParam lam = lambda_from_factor(FactorC::checked(ts::factor_c0(), filter), basis);
    const RealMatrix diag = ts::mat(2, 2, {4.4473, 0.6681, 0.6681, 0.4698});
    const RealMatrix off = ts::mat(2, 2, {-1.7976, -1.4773, 0.6552, -0.0624});
    REQUIRE((lam.matrix.block(0, 0, 2, 2) - diag).cwiseAbs().maxCoeff() < 1e-3);
    REQUIRE((lam.matrix.block(2, 0, 2, 2) - off).cwiseAbs().maxCoeff() < 1e-3);
    REQUIRE((lam.matrix - lam.matrix.transpose()).norm() == 0.0);
  }
  SECTION("published reference blocks for C1") {
    const LambdaParam lam = lambda_from_factor(FactorC::checked(ts::factor_c1(), filter), basis);
    const RealMatrix diag = ts::mat(2, 2, {3.2017, 0.7387, 0.7387, 2.4105});
    const RealMatrix off = ts::mat(2, 2, {2.6607, 0.3371, 3.3600, -1.2200});
    REQUIRE((lam.matrix.block(0, 0, 2, 2) - diag).cwiseAbs().maxCoeff() < 1e-3);
    REQUIRE((lam.matrix.block(2, 0, 2, 2) - off).cwiseAbs().maxCoeff() < 1e-3);
  }
  SECTION("G* Lambda G equals (CG)*(CG) on the circle") {
    const LambdaParam lam = lambda_from_factor(FactorC::checked(ts::factor_c0(), filter), basis);
    for (double theta : {0.3, -1.1, 2.9}) {
      const Complex z = std::polar(1.0, theta);
      const ComplexMatrix g = eval_filter(filter, z);
      const ComplexMatrix lhs = g.adjoint() * lam.matrix.cast<Complex>() * g;
      const ComplexMatrix cg = ts::factor_c0().cast<Complex>() * g;
      REQUIRE((lhs - cg.adjoint() * cg).norm() < 1e-10);
    }
  }
  SECTION("factor with a simple unit-circle root is rejected") {
    // det(zCG) = (1 - w)(0.5 + w): simple root at z = 1, the other at z = -2.
    RealMatrix c(2, 4);
    c << -1, 0, 1, 0, 0, 1, 0, 0.5;
    REQUIRE_THROWS_AS(FactorC::checked(c, filter), FeasibilityError);
  }
  SECTION("double circle root needs the wider margin it deserves") {
    // C0blk = C1blk = I: det(zCG) = (1 + w)^2. The double root at z = -1
    // splits by ~sqrt(eps) numerically, so only a loosened margin sees it.
    RealMatrix c(2, 4);
    c << 1, 0, 1, 0, 0, 1, 0, 1;
    REQUIRE_THROWS_AS(FactorC::checked(c, filter, 1e-6), FeasibilityError);
  }
}

TEST_CASE("feasibility margins") {
  const RationalFilter filter = block_shift_filter(2, 1);
  const HermitianBasis basis = build_basis(2, 1);
  const FrequencyGrid grid = make_grid(1e-2);

  SECTION("identity parameter has margin p+1") {
    const LambdaParam lam = project(RealMatrix::Identity(4, 4), basis);
    REQUIRE(feasibility_check(filter, lam, grid) == Catch::Approx(2.0).margin(1e-12));
  }
  SECTION("negated identity has margin -(p+1)") {
    const LambdaParam lam = project(RealMatrix(-RealMatrix::Identity(4, 4)), basis);
    REQUIRE(feasibility_check(filter, lam, grid) == Catch::Approx(-2.0).margin(1e-12));
  }
  SECTION("factor-induced parameters are feasible") {
    const LambdaParam lam = lambda_from_factor(FactorC::checked(ts::factor_c0(), filter), basis);
    REQUIRE(feasibility_check(filter, lam, grid) > 0.0);
  }
}
