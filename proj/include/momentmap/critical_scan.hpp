#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "momentmap/basis.hpp"
#include "momentmap/core.hpp"
#include "momentmap/moment_map.hpp"

namespace momentmap {

inline constexpr double kDefaultTolT = 1e-8;
inline constexpr double kDefaultRankThreshold = 1e-8;  // relative to sigma_max
inline constexpr int kDefaultScanSamples = 11;

// Affine segment Lambda(t) = (1-t) start + t end in parameter space.
struct SegmentPath {
  LambdaParam start;
  LambdaParam end;

  LambdaParam at(double t) const {
    LambdaParam lam;
    lam.matrix = (1.0 - t) * start.matrix + t * end.matrix;
    lam.coords = (1.0 - t) * start.coords + t * end.coords;
    return lam;
  }

  LambdaParam delta() const {
    LambdaParam lam;
    lam.matrix = end.matrix - start.matrix;
    lam.coords = end.coords - start.coords;
    return lam;
  }
};

inline double det_jacobian_at(const SegmentPath& path, double t, const EvalContext& ctx) {
  try {
    return jacobian_matrix(ctx.filter, ctx.prior, path.at(t), ctx.basis, ctx.grid)
        .entries.partialPivLu()
        .determinant();
  } catch (const FeasibilityError& err) {
    throw FeasibilityError(std::string(err.what()) + " at t = " + std::to_string(t), err.theta());
  }
}

struct DetScanSample {
  double t = 0.0;
  double det = 0.0;
};

struct DetScanResult {
  std::vector<DetScanSample> samples;
  std::vector<std::pair<double, double>> brackets;  // strict sign changes
};

// Sample det J along the segment at num_samples equidistant points
// (endpoints included) and report consecutive pairs with strictly opposite
// determinant signs.
inline DetScanResult det_scan(const SegmentPath& path, int num_samples, const EvalContext& ctx) {
  if (num_samples < 2) throw ConfigError("det_scan: need at least 2 samples");
  DetScanResult result;
  result.samples.reserve(num_samples);
  for (int i = 0; i < num_samples; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(num_samples - 1);
    result.samples.push_back({t, det_jacobian_at(path, t, ctx)});
  }
  for (int i = 0; i + 1 < num_samples; ++i) {
    const double a = result.samples[i].det;
    const double b = result.samples[i + 1].det;
    if ((a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0))
      result.brackets.emplace_back(result.samples[i].t, result.samples[i + 1].t);
  }
  return result;
}

struct BisectResult {
  double t = 0.0;
  int iterations = 0;
};

// Plain bisection on a sign change. Endpoint zeros are accepted as-is; a
// bracket without a sign change is an input error.
inline BisectResult bisect_sign_change(const std::function<double(double)>& f, double lo, double hi,
                                       double tol) {
  if (!(lo < hi)) throw ConfigError("bisect_sign_change: need lo < hi");
  if (!(tol > 0.0)) throw ConfigError("bisect_sign_change: tolerance must be positive");
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return {lo, 0};
  if (fhi == 0.0) return {hi, 0};
  if ((flo < 0.0) == (fhi < 0.0))
    throw NumericalError("bisect_sign_change: no sign change across bracket [" + std::to_string(lo) +
                         ", " + std::to_string(hi) + "]");
  BisectResult result;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // step below double resolution
    const double fmid = f(mid);
    ++result.iterations;
    if (fmid == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((fmid < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
      fhi = fmid;
    }
  }
  result.t = 0.5 * (lo + hi);
  return result;
}

struct CriticalPointRecord {
  double t_c = 0.0;
  LambdaParam lambda_c;
  double det_at_c = 0.0;
  RealVector singular_values;  // of J at t_c, descending
  Index numerical_rank = 0;    // sigma > rank_threshold * sigma_max
  int bisect_iterations = 0;
};

// Refine a det-sign-change bracket to a critical point of the coordinate
// Jacobian and record its singular-value profile.
inline CriticalPointRecord bisect_critical(const SegmentPath& path,
                                           std::pair<double, double> bracket, double tol_t,
                                           const EvalContext& ctx,
                                           double rank_threshold = kDefaultRankThreshold) {
  const BisectResult bis = bisect_sign_change(
      [&](double t) { return det_jacobian_at(path, t, ctx); }, bracket.first, bracket.second, tol_t);
  CriticalPointRecord record;
  record.t_c = bis.t;
  record.bisect_iterations = bis.iterations;
  record.lambda_c = path.at(bis.t);
  const JacobianMatrixRep jac =
      jacobian_matrix(ctx.filter, ctx.prior, record.lambda_c, ctx.basis, ctx.grid);
  record.det_at_c = jac.entries.partialPivLu().determinant();
  Eigen::JacobiSVD<RealMatrix> svd(jac.entries);
  record.singular_values = svd.singularValues();
  const double smax = record.singular_values(0);
  record.numerical_rank =
      (record.singular_values.array() > rank_threshold * smax).count();
  return record;
}

}  // namespace momentmap
