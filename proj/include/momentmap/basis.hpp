#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "momentmap/core.hpp"
#include "momentmap/filter.hpp"
#include "momentmap/polyroots.hpp"

namespace momentmap {

// Orthonormal basis (Frobenius inner product) of the real symmetric block-
// banded matrices carrying the moment parametrization: for each lag
// l = 1..p the m^2 unit generators of block (blk+l, blk) plus transpose,
// row-major within the block; then the diagonal-block generators, upper
// triangle row-major.
struct HermitianBasis {
  std::vector<RealMatrix> elements;
  Index m = 0;
  Index p = 0;

  Index size() const { return static_cast<Index>(elements.size()); }
  Index side() const { return m * (p + 1); }
};

inline HermitianBasis build_basis(Index m, Index p) {
  if (m < 1 || p < 1) throw ConfigError("build_basis: m and p must be at least 1");
  HermitianBasis basis;
  basis.m = m;
  basis.p = p;
  const Index n = m * (p + 1);
  for (Index lag = 1; lag <= p; ++lag) {
    for (Index a = 0; a < m; ++a) {
      for (Index b = 0; b < m; ++b) {
        RealMatrix gen = RealMatrix::Zero(n, n);
        for (Index blk = 0; blk + lag <= p; ++blk) {
          gen((blk + lag) * m + a, blk * m + b) = 1.0;
          gen(blk * m + b, (blk + lag) * m + a) = 1.0;
        }
        basis.elements.push_back(gen / gen.norm());
      }
    }
  }
  for (Index a = 0; a < m; ++a) {
    for (Index b = a; b < m; ++b) {
      RealMatrix gen = RealMatrix::Zero(n, n);
      for (Index blk = 0; blk <= p; ++blk) {
        gen(blk * m + a, blk * m + b) = 1.0;
        gen(blk * m + b, blk * m + a) = 1.0;
      }
      basis.elements.push_back(gen / gen.norm());
    }
  }
  return basis;
}

// A point of the parameter space: the symmetric matrix together with its
// coordinates in the basis. Because the basis is orthonormal, the 2-norm of
// coords equals the Frobenius norm of matrix for in-range points.
struct LambdaParam {
  RealMatrix matrix;
  RealVector coords;
};

inline LambdaParam lambda_from_coords(const RealVector& coords, const HermitianBasis& basis) {
  if (coords.size() != basis.size())
    throw ConfigError("lambda_from_coords: coordinate count does not match basis size");
  LambdaParam lam;
  lam.coords = coords;
  lam.matrix = RealMatrix::Zero(basis.side(), basis.side());
  for (Index j = 0; j < basis.size(); ++j) lam.matrix += coords(j) * basis.elements[j];
  return lam;
}

// Orthogonal projection onto the basis span. X must be symmetric; the
// reassembled matrix is the nearest (Frobenius) element of the span.
inline LambdaParam project(const RealMatrix& x, const HermitianBasis& basis) {
  if (x.rows() != basis.side() || x.cols() != basis.side())
    throw ConfigError("project: matrix side does not match basis");
  const double scale = std::max(1.0, x.norm());
  if ((x - x.transpose()).norm() > 1e-10 * scale)
    throw ConfigError("project: matrix must be symmetric");
  RealVector coords(basis.size());
  for (Index j = 0; j < basis.size(); ++j) coords(j) = trace_inner(basis.elements[j], x);
  return lambda_from_coords(coords, basis);
}

// Spectral-factor slice C = [C_0 ... C_p]. checked() rejects factors whose
// determinantal roots touch the unit circle, since those make C G lose rank
// on the integration contour.
struct FactorC {
  RealMatrix c;

  static FactorC checked(const RealMatrix& c, const RationalFilter& filter,
                         double margin = kSchurMargin) {
    RootReport report = determinantal_roots(c, filter);
    for (Complex z : report.roots) {
      if (std::abs(std::abs(z) - 1.0) <= margin)
        throw FeasibilityError("FactorC: determinantal root on the unit circle", std::arg(z));
    }
    FactorC factor;
    factor.c = c;
    return factor;
  }
};

// The parameter determined by a factor: the projection of C^T C onto the
// basis span. G^* Lambda G == (CG)^* (CG) on the circle because the
// off-span part of C^T C is annihilated by G on both sides.
inline LambdaParam lambda_from_factor(const FactorC& factor, const HermitianBasis& basis) {
  return project(factor.c.transpose() * factor.c, basis);
}

// Minimum eigenvalue of G^*(z) Lambda G(z) over the grid. Positive means
// the parameter is strictly inside the feasible cone at this resolution.
inline double feasibility_check(const RationalFilter& filter, const LambdaParam& lambda,
                                const FrequencyGrid& grid) {
  if (lambda.matrix.rows() != filter.state_dim())
    throw ConfigError("feasibility_check: parameter side does not match filter state dimension");
  double min_eig = std::numeric_limits<double>::infinity();
  const ComplexMatrix lam_c = lambda.matrix.cast<Complex>();
  for (double theta : grid.angles) {
    const Complex z = std::polar(1.0, theta);
    const ComplexMatrix g = eval_filter(filter, z);
    const ComplexMatrix q = hermitian_part(ComplexMatrix(g.adjoint() * lam_c * g));
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(q, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success)
      throw NumericalError("feasibility_check: eigensolve failed");
    min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
  }
  return min_eig;
}

}  // namespace momentmap
