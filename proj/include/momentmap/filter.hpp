#pragma once

#include <cmath>
#include <future>
#include <string>
#include <utility>
#include <vector>

#include "momentmap/core.hpp"

namespace momentmap {

// State-space filter bank G(z) = (zI - A)^{-1} B evaluated on |z| = 1.
// make_filter enforces the invariants: spectral radius of A strictly below
// one, B of full column rank, (A, B) reachable.
struct RationalFilter {
  ComplexMatrix A;  // n x n
  ComplexMatrix B;  // n x m
  Index state_dim() const { return A.rows(); }
  Index channel_dim() const { return B.cols(); }
};

inline RationalFilter make_filter(ComplexMatrix a, ComplexMatrix b) {
  if (a.rows() == 0 || a.rows() != a.cols())
    throw ConfigError("make_filter: A must be square and nonempty");
  if (b.rows() != a.rows() || b.cols() < 1)
    throw ConfigError("make_filter: B must be n x m with m >= 1");
  if (b.cols() > b.rows())
    throw ConfigError("make_filter: channel count m exceeds state dimension n");
  const Index n = a.rows();
  const Index m = b.cols();

  Eigen::ComplexEigenSolver<ComplexMatrix> eig(a, /*computeEigenvectors=*/false);
  if (eig.info() != Eigen::Success)
    throw NumericalError("make_filter: eigenvalue computation for A failed");
  const double radius = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (!(radius < 1.0))
    throw ConfigError("make_filter: spectral radius of A is " + std::to_string(radius) +
                      ", stability needs < 1");

  if (b.colPivHouseholderQr().rank() < m)
    throw ConfigError("make_filter: B is column-rank deficient");

  ComplexMatrix reach(n, n * m);
  ComplexMatrix block = b;
  for (Index k = 0; k < n; ++k) {
    reach.middleCols(k * m, m) = block;
    block = a * block;
  }
  if (reach.colPivHouseholderQr().rank() < n)
    throw ConfigError("make_filter: (A, B) is not reachable");

  return RationalFilter{std::move(a), std::move(b)};
}

inline RationalFilter make_filter(const RealMatrix& a, const RealMatrix& b) {
  return make_filter(ComplexMatrix(a.cast<Complex>()), ComplexMatrix(b.cast<Complex>()));
}

// The covariance-extension filter: A the (p+1)-block upshift and B the last
// block column, so G(z) = [z^{-(p+1)} I_m; ...; z^{-1} I_m].
inline RationalFilter block_shift_filter(Index m, Index p) {
  if (m < 1 || p < 1) throw ConfigError("block_shift_filter: need m >= 1 and p >= 1");
  const Index n = m * (p + 1);
  RealMatrix a = RealMatrix::Zero(n, n);
  for (Index blk = 0; blk < p; ++blk) a.block(blk * m, (blk + 1) * m, m, m).setIdentity();
  RealMatrix b = RealMatrix::Zero(n, m);
  b.bottomRows(m).setIdentity();
  return make_filter(a, b);
}

inline bool is_block_shift(const RationalFilter& filter) {
  const Index m = filter.channel_dim();
  const Index n = filter.state_dim();
  if (n % m != 0 || n <= m) return false;
  const Index p = n / m - 1;
  ComplexMatrix a = ComplexMatrix::Zero(n, n);
  for (Index blk = 0; blk < p; ++blk) a.block(blk * m, (blk + 1) * m, m, m).setIdentity();
  ComplexMatrix b = ComplexMatrix::Zero(n, m);
  b.bottomRows(m).setIdentity();
  return (filter.A - a).norm() == 0.0 && (filter.B - b).norm() == 0.0;
}

// G(z) through a linear solve, never an explicit inverse. |z| = 1 is the
// caller's contract; any z with zI - A invertible works.
inline ComplexMatrix eval_filter(const RationalFilter& filter, Complex z) {
  ComplexMatrix zia = -filter.A;
  zia.diagonal().array() += z;
  ComplexMatrix g = zia.partialPivLu().solve(filter.B);
  if (!g.allFinite())
    throw NumericalError("eval_filter: singular solve — stability invariant violated");
  return g;
}

// Equidistant angles on (-pi, pi]; the last node is exactly pi and the
// actual step is 2*pi/N with N = round(2*pi/delta_theta).
struct FrequencyGrid {
  std::vector<double> angles;
  double step = 0.0;
  Index size() const { return static_cast<Index>(angles.size()); }
};

inline FrequencyGrid make_grid(double delta_theta) {
  if (!(delta_theta > 0.0) || !(delta_theta <= kTwoPi))
    throw ConfigError("make_grid: delta_theta must lie in (0, 2*pi]");
  const long long n = std::max<long long>(1, std::llround(kTwoPi / delta_theta));
  FrequencyGrid grid;
  grid.step = kTwoPi / static_cast<double>(n);
  grid.angles.resize(static_cast<std::size_t>(n));
  for (long long k = 0; k < n; ++k)
    grid.angles[static_cast<std::size_t>(k)] =
        kPi * (2.0 * static_cast<double>(k + 1) / static_cast<double>(n) - 1.0);
  return grid;
}

// Grid samples of a matrix-valued function on the circle. The hermitian
// flag asserts every sample equals its adjoint to 1e-12 relative (checked).
struct MatrixSamples {
  std::vector<ComplexMatrix> values;
  Index side = 0;
  bool hermitian = false;
};

inline MatrixSamples make_samples(std::vector<ComplexMatrix> values, bool hermitian = false) {
  if (values.empty()) throw ConfigError("make_samples: empty sample list");
  const Index side = values.front().rows();
  for (const ComplexMatrix& v : values) {
    if (v.rows() != side || v.cols() != side)
      throw ConfigError("make_samples: samples must all be square with one common side");
    if (hermitian && (v - v.adjoint()).norm() > 1e-12 * std::max(1.0, v.norm()))
      throw ConfigError("make_samples: sample flagged Hermitian is not Hermitian");
  }
  return MatrixSamples{std::move(values), side, hermitian};
}

template <class Fn>
MatrixSamples sample_grid(const FrequencyGrid& grid, Fn&& fn, bool hermitian = false) {
  std::vector<ComplexMatrix> values;
  values.reserve(grid.angles.size());
  for (double theta : grid.angles) values.push_back(fn(theta));
  return make_samples(std::move(values), hermitian);
}

enum class Summation { kSequential, kPairwise };

struct QuadratureOptions {
  Summation summation = Summation::kSequential;
  bool parallel = false;  // honored only by the pairwise mode
};

namespace detail {

// Cascade summation of term(k) over [lo, hi); the top split levels may fork.
template <class Term>
ComplexMatrix pairwise_sum(const Term& term, Index lo, Index hi, int fork_depth) {
  if (hi - lo <= 32) {
    ComplexMatrix acc = term(lo);
    for (Index k = lo + 1; k < hi; ++k) acc += term(k);
    return acc;
  }
  const Index mid = lo + (hi - lo) / 2;
  if (fork_depth > 0) {
    auto right = std::async(std::launch::async,
                            [&] { return pairwise_sum(term, mid, hi, fork_depth - 1); });
    ComplexMatrix left = pairwise_sum(term, lo, mid, fork_depth - 1);
    return left + right.get();
  }
  return pairwise_sum(term, lo, mid, 0) + pairwise_sum(term, mid, hi, 0);
}

// Riemann mean (1/N) sum_k term(k). Ascending-k accumulation is the
// reproducibility contract of the sequential mode.
template <class Term>
ComplexMatrix grid_mean(const FrequencyGrid& grid, const Term& term, const QuadratureOptions& opts) {
  const Index n = grid.size();
  ComplexMatrix acc;
  if (opts.summation == Summation::kSequential) {
    acc = term(0);
    for (Index k = 1; k < n; ++k) acc += term(k);
  } else {
    acc = pairwise_sum(term, 0, n, opts.parallel ? 3 : 0);
  }
  return acc / static_cast<double>(n);
}

}  // namespace detail

// (delta_theta / 2 pi) * sum_k F(theta_k); because the step is exactly
// 2 pi / N this is the plain mean of the samples.
inline ComplexMatrix integrate(const MatrixSamples& samples, const FrequencyGrid& grid,
                               const QuadratureOptions& opts = {}) {
  if (static_cast<Index>(samples.values.size()) != grid.size())
    throw ConfigError("integrate: sample count does not match the grid size");
  return detail::grid_mean(
      grid, [&](Index k) -> const ComplexMatrix& { return samples.values[static_cast<std::size_t>(k)]; },
      opts);
}

// Gamma(Phi) = integral of G Phi G* over the circle, re-Hermitized to kill
// roundoff asymmetry.
inline ComplexMatrix gamma_apply(const RationalFilter& filter, const MatrixSamples& phi,
                                 const FrequencyGrid& grid, const QuadratureOptions& opts = {}) {
  if (phi.side != filter.channel_dim())
    throw ConfigError("gamma_apply: sample side must equal the filter channel dimension");
  if (!phi.hermitian) throw ConfigError("gamma_apply: samples must be Hermitian-flagged");
  if (static_cast<Index>(phi.values.size()) != grid.size())
    throw ConfigError("gamma_apply: sample count does not match the grid size");
  auto term = [&](Index k) {
    const ComplexMatrix g = eval_filter(filter, std::polar(1.0, grid.angles[static_cast<std::size_t>(k)]));
    return ComplexMatrix(g * phi.values[static_cast<std::size_t>(k)] * g.adjoint());
  };
  return hermitian_part(detail::grid_mean(grid, term, opts));
}

// Gamma*(X)(z) = G*(z) X G(z); Hermitian whenever X is.
inline ComplexMatrix gamma_adjoint(const RationalFilter& filter, const ComplexMatrix& x, Complex z) {
  if (x.rows() != filter.state_dim() || x.cols() != filter.state_dim())
    throw ConfigError("gamma_adjoint: X must be n x n for the filter state dimension");
  const ComplexMatrix g = eval_filter(filter, z);
  return g.adjoint() * x * g;
}

}  // namespace momentmap
