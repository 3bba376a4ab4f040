#pragma once

#include <initializer_list>
#include <random>

#include "momentmap/momentmap.hpp"

// Shared fixtures for the test suite. The reference matrices are duplicated
// here on purpose: the tests must not read their expectations from the
// library's own reference namespace.
namespace ts {

using namespace momentmap;

inline RealMatrix mat(Index rows, Index cols, std::initializer_list<double> vals) {
  RealMatrix m(rows, cols);
  Index i = 0;
  for (double v : vals) m(i / cols, i % cols) = v, ++i;
  return m;
}

inline RealMatrix prior_k() {
  return mat(2, 4, {-0.22, -1.23, 2.22, 0.0, -1.11, -0.96, 1.14, 2.49});
}

inline RealMatrix factor_c0() {
  return mat(2, 4, {-1.08, -0.57, 2.45, 0.0, 0.84, -0.08, 1.01, 0.78});
}

inline RealMatrix factor_c1() {
  return mat(2, 4, {0.63, 0.67, 1.45, 0.0, 1.68, -0.61, 1.04, 2.0});
}

inline EvalContext make_ctx(double dtheta = 1e-3, bool scalar = false) {
  EvalContext ctx;
  ctx.filter = block_shift_filter(2, 1);
  ctx.prior = scalar ? PriorFactor::identity() : PriorFactor::from_outer(prior_k());
  ctx.basis = build_basis(2, 1);
  ctx.grid = make_grid(dtheta);
  return ctx;
}

inline double rel_diff(const RealMatrix& a, const RealMatrix& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

// Random parameter with unit Frobenius norm and a strict feasibility margin,
// so finite-difference tolerances are uniform across draws.
inline LambdaParam random_feasible_lambda(std::mt19937_64& rng, const EvalContext& ctx,
                                          double margin = 0.05) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const Index m = ctx.filter.channel_dim();
  const Index n = ctx.filter.state_dim();
  for (int attempt = 0; attempt < 500; ++attempt) {
    RealMatrix c(m, n);
    for (Index r = 0; r < m; ++r)
      for (Index col = 0; col < n; ++col) c(r, col) = unif(rng);
    LambdaParam lam = project(c.transpose() * c, ctx.basis);
    const double norm = lam.matrix.norm();
    if (norm < 1e-8) continue;
    lam.matrix /= norm;
    lam.coords /= norm;
    if (feasibility_check(ctx.filter, lam, ctx.grid) >= margin) return lam;
  }
  throw std::runtime_error("random_feasible_lambda: no feasible draw in 500 attempts");
}

inline RealVector random_direction(std::mt19937_64& rng, Index size) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  RealVector v(size);
  for (Index i = 0; i < size; ++i) v(i) = gauss(rng);
  return v / v.norm();
}

}  // namespace ts
