#pragma once

#include <string>
#include <vector>

#include "momentmap/basis.hpp"
#include "momentmap/core.hpp"
#include "momentmap/critical_scan.hpp"
#include "momentmap/moment_map.hpp"

namespace momentmap {

// Jacobian of the homotopy residual H(Lambda, t) = h(Lambda) - p(t) in
// coordinates: the M x (M+1) matrix [ J_h | -p_dot(t) ]. For the affine
// moment path p(t) = h-image interpolation target, p_dot is constant in t
// only in coordinates of the target path; here the path lives in parameter
// space, so p_dot(t) = dh(Lambda(t))[Lambda' by path] evaluated along the
// parameter segment.
inline RealMatrix augmented_jacobian(const LambdaParam& lambda, double t, const SegmentPath& path,
                                     const HermitianBasis& basis, const EvalContext& ctx) {
  const JacobianMatrixRep jac = jacobian_matrix(ctx.filter, ctx.prior, lambda, basis, ctx.grid);
  const RealMatrix pdot_mat =
      dh_apply(ctx.filter, ctx.prior, path.at(t), path.delta().matrix, ctx.grid, ctx.quad);
  const RealVector pdot = project(pdot_mat, basis).coords;
  RealMatrix aug(basis.size(), basis.size() + 1);
  aug.leftCols(basis.size()) = jac.entries;
  aug.rightCols(1) = -pdot;
  return aug;
}

// Singular-value split of the augmented Jacobian at a simple critical
// point: rank M-1, one-dimensional left null space spanned by u2, two-
// dimensional right null space spanned by the columns of v2.
struct LSDecomposition {
  RealMatrix u1;     // M x (M-1)
  RealVector u2;     // M
  RealMatrix v1;     // (M+1) x (M-1)
  RealMatrix v2;     // (M+1) x 2
  RealVector sigma;  // M-1 positive singular values, descending
};

inline LSDecomposition ls_decompose(const RealMatrix& j_aug,
                                    double rank_threshold = kDefaultRankThreshold) {
  const Index msize = j_aug.rows();
  if (j_aug.cols() != msize + 1)
    throw ConfigError("ls_decompose: expected an M x (M+1) augmented Jacobian");
  Eigen::JacobiSVD<RealMatrix> svd(j_aug, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const RealVector& sv = svd.singularValues();
  const double smax = sv(0);
  const Index rank = (sv.array() > rank_threshold * smax).count();
  if (rank != msize - 1)
    throw RankError("ls_decompose: numerical rank " + std::to_string(rank) + ", expected M-1 = " +
                    std::to_string(msize - 1) + " — not a simple critical point");
  LSDecomposition dec;
  dec.u1 = svd.matrixU().leftCols(msize - 1);
  dec.u2 = svd.matrixU().col(msize - 1);
  dec.v1 = svd.matrixV().leftCols(msize - 1);
  dec.v2 = svd.matrixV().rightCols(2);
  dec.sigma = sv.head(msize - 1);
  return dec;
}

// Coordinate Hessian tensor of H at (lambda, t): for each residual
// component j, the (M+1) x (M+1) symmetric matrix of second derivatives in
// (coords, t). The (coords, coords) block is fused over the grid like the
// Jacobian; the (t, t) corner is -<B_j, d2h(Lambda(t))[path', path']>;
// mixed (coords, t) entries vanish because dh is evaluated at the fixed
// path point.
inline std::vector<RealMatrix> coordinate_hessians(const LambdaParam& lambda, double t,
                                                   const SegmentPath& path,
                                                   const HermitianBasis& basis,
                                                   const EvalContext& ctx) {
  const Index msize = basis.size();
  std::vector<ComplexMatrix> basis_c(msize);
  for (Index j = 0; j < msize; ++j) basis_c[j] = basis.elements[j].cast<Complex>();

  std::vector<RealMatrix> hess(msize, RealMatrix::Zero(msize + 1, msize + 1));
  std::vector<ComplexMatrix> y(msize), ytil(msize), zq(msize), yq(msize);
  for (double theta : ctx.grid.angles) {
    const detail::PointEval pt = detail::eval_point(ctx.filter, ctx.prior, lambda.matrix, theta);
    for (Index k = 0; k < msize; ++k) {
      y[k] = pt.g.adjoint() * basis_c[k] * pt.g;
      ytil[k] = pt.w.adjoint() * y[k] * pt.w;
      zq[k] = pt.qinv * y[k] * pt.qinv;
      yq[k] = y[k] * pt.qinv;
    }
    for (Index l = 0; l < msize; ++l) {
      for (Index k = 0; k < msize; ++k) {
        const ComplexMatrix zl_yk = zq[l] * yq[k];
        for (Index j = 0; j < msize; ++j)
          hess[j](k, l) += 2.0 * trace_product(ytil[j], zl_yk).real();
      }
    }
  }
  const double n = static_cast<double>(ctx.grid.size());
  const RealMatrix d2_path = d2h_apply(ctx.filter, ctx.prior, path.at(t), path.delta().matrix,
                                       path.delta().matrix, ctx.grid, ctx.quad);
  const RealVector d2_coords = project(d2_path, basis).coords;
  for (Index j = 0; j < msize; ++j) {
    hess[j].topLeftCorner(msize, msize) /= n;
    hess[j].topLeftCorner(msize, msize) =
        symmetric_part(RealMatrix(hess[j].topLeftCorner(msize, msize)));
    hess[j](msize, msize) = -d2_coords(j);
  }
  return hess;
}

// Reduced 2 x 2 Hessian of the bifurcation equation on the kernel:
// Hb(a, b) = sum_j u2(j) * v2(:,a)^T Hess_j v2(:,b).
struct BifurcationHessian {
  RealMatrix matrix;       // 2 x 2 symmetric
  RealVector eigenvalues;  // ascending
};

inline BifurcationHessian bifurcation_hessian(const LSDecomposition& dec,
                                              const std::vector<RealMatrix>& hessians) {
  const Index msize = dec.u2.size();
  if (static_cast<Index>(hessians.size()) != msize)
    throw ConfigError("bifurcation_hessian: tensor size does not match decomposition");
  RealMatrix contracted = RealMatrix::Zero(msize + 1, msize + 1);
  for (Index j = 0; j < msize; ++j) contracted += dec.u2(j) * hessians[j];
  BifurcationHessian result;
  result.matrix = symmetric_part(RealMatrix(dec.v2.transpose() * contracted * dec.v2));
  Eigen::SelfAdjointEigenSolver<RealMatrix> eig(result.matrix);
  if (eig.info() != Eigen::Success)
    throw NumericalError("bifurcation_hessian: eigensolve failed");
  result.eigenvalues = eig.eigenvalues();
  return result;
}

enum class CriticalClass {
  kSimpleBifurcation,  // nondegenerate, eigenvalues of opposite sign
  kIsolatedZero,       // nondegenerate, eigenvalues of equal sign
  kDegenerate,         // an eigenvalue vanishes at working precision
};

inline const char* to_string(CriticalClass cls) {
  switch (cls) {
    case CriticalClass::kSimpleBifurcation:
      return "simple-bifurcation";
    case CriticalClass::kIsolatedZero:
      return "isolated-zero";
    case CriticalClass::kDegenerate:
      return "degenerate";
  }
  return "unknown";
}

inline constexpr double kDegeneracyThreshold = 1e-10;

inline CriticalClass classify(const BifurcationHessian& hess) {
  const double lo = hess.eigenvalues(0);
  const double hi = hess.eigenvalues(1);
  const double scale = std::max(std::abs(lo), std::abs(hi));
  if (scale == 0.0 || std::min(std::abs(lo), std::abs(hi)) < kDegeneracyThreshold * scale)
    return CriticalClass::kDegenerate;
  if ((lo < 0.0) != (hi < 0.0)) return CriticalClass::kSimpleBifurcation;
  return CriticalClass::kIsolatedZero;
}

struct BifurcationReport {
  CriticalPointRecord critical;
  LSDecomposition decomposition;
  BifurcationHessian hessian;
  CriticalClass classification = CriticalClass::kDegenerate;
};

// Full pipeline at an already-located critical point: augmented Jacobian,
// kernel split, reduced Hessian, classification.
inline BifurcationReport analyze_bifurcation(const CriticalPointRecord& critical,
                                             const SegmentPath& path, const HermitianBasis& basis,
                                             const EvalContext& ctx,
                                             double rank_threshold = kDefaultRankThreshold) {
  BifurcationReport report;
  report.critical = critical;
  const RealMatrix aug = augmented_jacobian(critical.lambda_c, critical.t_c, path, basis, ctx);
  report.decomposition = ls_decompose(aug, rank_threshold);
  const std::vector<RealMatrix> hess =
      coordinate_hessians(critical.lambda_c, critical.t_c, path, basis, ctx);
  report.hessian = bifurcation_hessian(report.decomposition, hess);
  report.classification = classify(report.hessian);
  return report;
}

}  // namespace momentmap
