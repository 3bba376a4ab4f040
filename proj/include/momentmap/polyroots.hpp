#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "momentmap/core.hpp"
#include "momentmap/filter.hpp"

namespace momentmap {

// Roots with modulus within this margin of 1 count as on-circle: they fail
// the Schur test and invalidate spectral factors.
inline constexpr double kSchurMargin = 1e-9;

// Roots of det(z C G(z)) in the z-plane for the covariance-extension filter.
struct RootReport {
  std::vector<Complex> roots;  // finite roots, sorted by (Re, Im)
  std::vector<double> moduli;  // matching |root|
  int roots_at_infinity = 0;   // dropped w = 0 factors of q(w), w = 1/z
  bool schur = false;          // no roots at infinity, every |root| < 1 - margin
};

// For the block filter, z C G(z) = C_p + w C_{p-1} + ... + w^p C_0 with
// w = z^{-1} and C = [C_0 ... C_p], so q(w) := det(z C G(z)) is a polynomial
// of degree at most m*p. It is recovered by evaluating det through the
// filter at |w| = 1 nodes (rotated by sample_phase if nonzero) and solving
// the Vandermonde system; after pruning near-zero leading/trailing
// coefficients the roots come from the companion matrix and map back by
// z = 1/w. w = 0 factors are roots at z = infinity and are counted, not
// listed.
inline RootReport determinantal_roots(const RealMatrix& c, const RationalFilter& filter,
                                      double prune_tol = 1e-12, double sample_phase = 0.0) {
  const Index m = filter.channel_dim();
  const Index n = filter.state_dim();
  if (c.rows() != m || c.cols() != n)
    throw ConfigError("determinantal_roots: C must be m x n for the given filter");
  if (c.cwiseAbs().maxCoeff() == 0.0) throw ConfigError("determinantal_roots: C must be nonzero");
  if (!is_block_shift(filter))
    throw ConfigError("determinantal_roots: only the block covariance-extension filter is supported");
  const Index p = n / m - 1;
  const Index samples = m * p + 1;

  Eigen::VectorXcd q(samples);
  Eigen::MatrixXcd vander(samples, samples);
  for (Index i = 0; i < samples; ++i) {
    const double ang = kTwoPi * (static_cast<double>(i) + sample_phase) / static_cast<double>(samples);
    const Complex w = std::polar(1.0, ang);
    const Complex z = 1.0 / w;
    const ComplexMatrix zcg = z * (c.cast<Complex>() * eval_filter(filter, z));
    q(i) = zcg.determinant();
    Complex pw = 1.0;
    for (Index j = 0; j < samples; ++j) {
      vander(i, j) = pw;
      pw *= w;
    }
  }
  const Eigen::VectorXcd coeff = vander.partialPivLu().solve(q);
  if (!coeff.allFinite())
    throw NumericalError("determinantal_roots: coefficient interpolation failed");

  const double scale = coeff.cwiseAbs().maxCoeff();
  if (scale == 0.0)
    throw NumericalError("determinantal_roots: det(zCG) vanishes identically — degenerate factor");

  Index hi = samples - 1;
  while (hi > 0 && std::abs(coeff(hi)) <= prune_tol * scale) --hi;
  Index lo = 0;
  while (lo < hi && std::abs(coeff(lo)) <= prune_tol * scale) ++lo;

  RootReport report;
  report.roots_at_infinity = static_cast<int>(lo);
  const Index deg = hi - lo;
  if (deg > 0) {
    ComplexMatrix companion = ComplexMatrix::Zero(deg, deg);
    for (Index r = 1; r < deg; ++r) companion(r, r - 1) = 1.0;
    for (Index r = 0; r < deg; ++r) companion(r, deg - 1) = -coeff(lo + r) / coeff(hi);
    Eigen::ComplexEigenSolver<ComplexMatrix> eig(companion, /*computeEigenvectors=*/false);
    if (eig.info() != Eigen::Success)
      throw NumericalError("determinantal_roots: companion eigensolve failed");
    for (Index r = 0; r < deg; ++r) report.roots.push_back(1.0 / eig.eigenvalues()(r));
    std::sort(report.roots.begin(), report.roots.end(), [](Complex a, Complex b) {
      if (a.real() != b.real()) return a.real() < b.real();
      return a.imag() < b.imag();
    });
    // Conjugate pairs compute with ulp-level noise in the real part; snap
    // near-ties into a canonical imag-ascending order so output is stable.
    double scale = 1.0;
    for (Complex z : report.roots) scale = std::max(scale, std::abs(z));
    const double tie = 1e-9 * scale;
    for (std::size_t lo = 0; lo < report.roots.size();) {
      std::size_t hi = lo + 1;
      while (hi < report.roots.size() &&
             report.roots[hi].real() - report.roots[lo].real() <= tie)
        ++hi;
      std::sort(report.roots.begin() + static_cast<std::ptrdiff_t>(lo),
                report.roots.begin() + static_cast<std::ptrdiff_t>(hi),
                [](Complex a, Complex b) { return a.imag() < b.imag(); });
      lo = hi;
    }
  }
  report.moduli.reserve(report.roots.size());
  for (Complex z : report.roots) report.moduli.push_back(std::abs(z));
  report.schur = report.roots_at_infinity == 0 &&
                 std::all_of(report.moduli.begin(), report.moduli.end(),
                             [](double v) { return v < 1.0 - kSchurMargin; });
  return report;
}

}  // namespace momentmap
