#pragma once

#include <cmath>
#include <vector>

#include "momentmap/basis.hpp"
#include "momentmap/core.hpp"
#include "momentmap/filter.hpp"
#include "momentmap/polyroots.hpp"

namespace momentmap {

// Pointwise condition-number ceiling for tau_map; beyond this the factor is
// treated as numerically singular on the contour.
inline constexpr double kPointwiseCondMax = 1e12;

// Prior spectral density Psi = K G G^* K^* given by its factor K (m x n).
// scalar() means Psi == I, i.e. the unweighted map.
struct PriorFactor {
  RealMatrix k;  // empty => scalar prior

  bool scalar() const { return k.size() == 0; }

  static PriorFactor identity() { return PriorFactor{}; }

  static PriorFactor from_outer(const RealMatrix& k) {
    PriorFactor prior;
    prior.k = k;
    return prior;
  }
};

// The prior weight W(z) = z K G(z) must be boundedly invertible on the
// circle: K's determinantal roots must be Schur and z K G must keep full
// rank at every grid node.
inline void validate_prior(const PriorFactor& prior, const RationalFilter& filter,
                           const FrequencyGrid& grid) {
  if (prior.scalar()) return;
  if (prior.k.rows() != filter.channel_dim() || prior.k.cols() != filter.state_dim())
    throw ConfigError("validate_prior: K must be m x n for the given filter");
  RootReport report = determinantal_roots(prior.k, filter);
  if (!report.schur)
    throw FeasibilityError("validate_prior: prior factor is not Schur — W is not invertible inside the disk",
                           0.0);
  const ComplexMatrix k_c = prior.k.cast<Complex>();
  for (double theta : grid.angles) {
    const Complex z = std::polar(1.0, theta);
    const ComplexMatrix w = z * (k_c * eval_filter(filter, z));
    Eigen::JacobiSVD<ComplexMatrix> svd(w);
    if (svd.singularValues().minCoeff() <= 0.0)
      throw FeasibilityError("validate_prior: W(z) loses rank on the unit circle", theta);
  }
}

namespace detail {

struct PointEval {
  ComplexMatrix g;     // n x m
  ComplexMatrix w;     // m x m prior weight at z (identity if scalar)
  ComplexMatrix qinv;  // (G^* Lambda G)^{-1}, m x m
};

inline PointEval eval_point(const RationalFilter& filter, const PriorFactor& prior,
                            const RealMatrix& lambda, double theta) {
  PointEval pt;
  const Complex z = std::polar(1.0, theta);
  pt.g = eval_filter(filter, z);
  if (prior.scalar()) {
    pt.w = ComplexMatrix::Identity(filter.channel_dim(), filter.channel_dim());
  } else {
    pt.w = z * (prior.k.cast<Complex>() * pt.g);
  }
  const ComplexMatrix q = hermitian_part(ComplexMatrix(pt.g.adjoint() * lambda.cast<Complex>() * pt.g));
  Eigen::LLT<ComplexMatrix> llt(q);
  if (llt.info() != Eigen::Success)
    throw FeasibilityError("moment map: G^* Lambda G is not positive definite at theta = " +
                               std::to_string(theta),
                           theta);
  pt.qinv = llt.solve(ComplexMatrix::Identity(q.rows(), q.cols()));
  return pt;
}

}  // namespace detail

// Moment map h(Lambda) = Gamma( W (G^* Lambda G)^{-1} W^* ): the moments of
// the spectral density that maximizes prior-weighted entropy subject to the
// parameter Lambda. Symmetric n x n, lands in the basis span.
inline RealMatrix h_map(const RationalFilter& filter, const PriorFactor& prior,
                        const LambdaParam& lambda, const FrequencyGrid& grid,
                        const QuadratureOptions& opts = {}) {
  std::vector<ComplexMatrix> terms(grid.size());
  for (Index i = 0; i < grid.size(); ++i) {
    const detail::PointEval pt = detail::eval_point(filter, prior, lambda.matrix, grid.angles[i]);
    const ComplexMatrix gw = pt.g * pt.w;
    terms[i] = gw * pt.qinv * gw.adjoint();
  }
  const ComplexMatrix mean = integrate(make_samples(std::move(terms)), grid, opts);
  return hermitian_part(mean).real();
}

// Directional derivative dh(Lambda)[Y] = -Gamma( P (G^* Y G) P^* ) with
// P = G W Q^{-1}. Linear in Y; dh(Lambda)[Lambda] == -h(Lambda) by
// homogeneity.
inline RealMatrix dh_apply(const RationalFilter& filter, const PriorFactor& prior,
                           const LambdaParam& lambda, const RealMatrix& delta,
                           const FrequencyGrid& grid, const QuadratureOptions& opts = {}) {
  if (delta.rows() != filter.state_dim() || delta.cols() != filter.state_dim())
    throw ConfigError("dh_apply: direction side does not match filter state dimension");
  const ComplexMatrix delta_c = delta.cast<Complex>();
  std::vector<ComplexMatrix> terms(grid.size());
  for (Index i = 0; i < grid.size(); ++i) {
    const detail::PointEval pt = detail::eval_point(filter, prior, lambda.matrix, grid.angles[i]);
    const ComplexMatrix pmat = pt.g * pt.w * pt.qinv;
    const ComplexMatrix y = pt.g.adjoint() * delta_c * pt.g;
    terms[i] = -(pmat * y * pmat.adjoint());
  }
  const ComplexMatrix mean = integrate(make_samples(std::move(terms)), grid, opts);
  return hermitian_part(mean).real();
}

// Adjoint of dh(Lambda) in the Frobenius pairing:
// dh*(Lambda)[X] = -Gamma_hat over (G Q^{-1}) (W^* (G^* X G) W) (G Q^{-1})^*,
// so that <dh[Y], X> == <Y, dh*[X]> for all symmetric X, Y.
inline RealMatrix dh_adjoint_apply(const RationalFilter& filter, const PriorFactor& prior,
                                   const LambdaParam& lambda, const RealMatrix& x,
                                   const FrequencyGrid& grid, const QuadratureOptions& opts = {}) {
  if (x.rows() != filter.state_dim() || x.cols() != filter.state_dim())
    throw ConfigError("dh_adjoint_apply: argument side does not match filter state dimension");
  const ComplexMatrix x_c = x.cast<Complex>();
  std::vector<ComplexMatrix> terms(grid.size());
  for (Index i = 0; i < grid.size(); ++i) {
    const detail::PointEval pt = detail::eval_point(filter, prior, lambda.matrix, grid.angles[i]);
    const ComplexMatrix gq = pt.g * pt.qinv;
    const ComplexMatrix inner = pt.w.adjoint() * (pt.g.adjoint() * x_c * pt.g) * pt.w;
    terms[i] = -(gq * inner * gq.adjoint());
  }
  const ComplexMatrix mean = integrate(make_samples(std::move(terms)), grid, opts);
  return hermitian_part(mean).real();
}

// Second derivative d2h(Lambda)[Y1, Y2]: symmetric bilinear, with
// d2h[Lambda, Lambda] == 2 h(Lambda).
inline RealMatrix d2h_apply(const RationalFilter& filter, const PriorFactor& prior,
                            const LambdaParam& lambda, const RealMatrix& delta1,
                            const RealMatrix& delta2, const FrequencyGrid& grid,
                            const QuadratureOptions& opts = {}) {
  const Index n = filter.state_dim();
  if (delta1.rows() != n || delta1.cols() != n || delta2.rows() != n || delta2.cols() != n)
    throw ConfigError("d2h_apply: direction side does not match filter state dimension");
  const ComplexMatrix d1 = delta1.cast<Complex>();
  const ComplexMatrix d2 = delta2.cast<Complex>();
  std::vector<ComplexMatrix> terms(grid.size());
  for (Index i = 0; i < grid.size(); ++i) {
    const detail::PointEval pt = detail::eval_point(filter, prior, lambda.matrix, grid.angles[i]);
    const ComplexMatrix y1 = pt.g.adjoint() * d1 * pt.g;
    const ComplexMatrix y2 = pt.g.adjoint() * d2 * pt.g;
    const ComplexMatrix pwq = pt.g * pt.w * pt.qinv;
    const ComplexMatrix f = pwq * y2 * pt.qinv * y1 * pwq.adjoint();
    terms[i] = f + f.adjoint();
  }
  const ComplexMatrix mean = integrate(make_samples(std::move(terms)), grid, opts);
  return hermitian_part(mean).real();
}

// Jacobian of the coordinate form of h: entries(j, k) = <B_j, dh(Lambda)[B_k]>.
struct JacobianMatrixRep {
  RealMatrix entries;
  RealVector lambda_coords;
};

// Fused evaluation: per grid point compute Q^{-1} and the pulled-back basis
// images Y_k = G^* B_k G once, then J(j,k) = -(1/N) sum_theta
// Re tr( Ytil_j Q^{-1} Y_k Q^{-1} ) with Ytil_j = W^* Y_j W. Sequential
// ascending accumulation keeps results bit-reproducible.
inline JacobianMatrixRep jacobian_matrix(const RationalFilter& filter, const PriorFactor& prior,
                                         const LambdaParam& lambda, const HermitianBasis& basis,
                                         const FrequencyGrid& grid) {
  const Index msize = basis.size();
  std::vector<ComplexMatrix> basis_c(msize);
  for (Index j = 0; j < msize; ++j) basis_c[j] = basis.elements[j].cast<Complex>();

  RealMatrix acc = RealMatrix::Zero(msize, msize);
  std::vector<ComplexMatrix> y(msize), ytil(msize), zmat(msize);
  for (double theta : grid.angles) {
    const detail::PointEval pt = detail::eval_point(filter, prior, lambda.matrix, theta);
    for (Index k = 0; k < msize; ++k) {
      y[k] = pt.g.adjoint() * basis_c[k] * pt.g;
      ytil[k] = pt.w.adjoint() * y[k] * pt.w;
      zmat[k] = pt.qinv * y[k] * pt.qinv;
    }
    for (Index j = 0; j < msize; ++j)
      for (Index k = 0; k < msize; ++k) acc(j, k) -= trace_product(ytil[j], zmat[k]).real();
  }
  JacobianMatrixRep rep;
  rep.entries = acc / static_cast<double>(grid.size());
  rep.lambda_coords = lambda.coords;
  if (!rep.entries.allFinite()) throw NumericalError("jacobian_matrix: non-finite entries");
  return rep;
}

// tau(C) = Gamma( (CG)^{-1} Psi (CG)^{-*} ): the moments of the density
// parameterized directly by the spectral-factor slice C. With a scalar prior
// this equals h at the parameter induced by C; with a matrix prior the two
// parameterizations genuinely differ (W does not commute past (CG)^{-1}).
// Throws SingularityError when CG is numerically singular on the grid.
inline RealMatrix tau_map(const RationalFilter& filter, const PriorFactor& prior,
                          const FactorC& factor, const FrequencyGrid& grid,
                          const QuadratureOptions& opts = {}) {
  const ComplexMatrix c_c = factor.c.cast<Complex>();
  // A balanced collapse (all singular values ~eps together) has a harmless
  // condition ratio but no information, so guard scale as well as ratio.
  const double scale_floor = 1e-14 * std::max(1.0, factor.c.norm());
  std::vector<ComplexMatrix> terms(grid.size());
  for (Index i = 0; i < grid.size(); ++i) {
    const double theta = grid.angles[i];
    const Complex z = std::polar(1.0, theta);
    const ComplexMatrix g = eval_filter(filter, z);
    const ComplexMatrix s = c_c * g;
    Eigen::JacobiSVD<ComplexMatrix> svd(s);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin <= scale_floor || smax / smin > kPointwiseCondMax)
      throw SingularityError("tau_map: C G is numerically singular at theta = " + std::to_string(theta),
                             theta);
    ComplexMatrix w;
    if (prior.scalar()) {
      w = ComplexMatrix::Identity(filter.channel_dim(), filter.channel_dim());
    } else {
      w = z * (prior.k.cast<Complex>() * g);
    }
    const ComplexMatrix gx = g * s.partialPivLu().solve(w);
    terms[i] = gx * gx.adjoint();
  }
  const ComplexMatrix mean = integrate(make_samples(std::move(terms)), grid, opts);
  return hermitian_part(mean).real();
}

// Everything the moment-equation solvers need about a fixed problem
// instance.
struct EvalContext {
  RationalFilter filter;
  PriorFactor prior;
  HermitianBasis basis;
  FrequencyGrid grid;
  QuadratureOptions quad;
};

inline RealVector h_coords(const LambdaParam& lambda, const EvalContext& ctx) {
  return project(h_map(ctx.filter, ctx.prior, lambda, ctx.grid, ctx.quad), ctx.basis).coords;
}

}  // namespace momentmap
