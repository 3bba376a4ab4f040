#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "momentmap/basis.hpp"
#include "momentmap/core.hpp"
#include "momentmap/moment_map.hpp"

namespace momentmap {

enum class ContinuationStatus {
  kConverged,
  kDivergedNearSingularity,
  kInfeasibleIterate,
};

inline const char* to_string(ContinuationStatus status) {
  switch (status) {
    case ContinuationStatus::kConverged:
      return "converged";
    case ContinuationStatus::kDivergedNearSingularity:
      return "diverged-near-singularity";
    case ContinuationStatus::kInfeasibleIterate:
      return "infeasible-iterate";
  }
  return "unknown";
}

enum class ContinuationMode {
  kPredictorCorrector,  // Euler predictor + Newton corrector per t-step
  kOdeOnly,             // adaptive Heun on the Davidenko flow, no correction
};

struct ContinuationOptions {
  double dt0 = 0.1;
  double min_step = 1e-10;
  double cond_max = 1e10;
  double newton_tol = 1e-10;
  int max_newton = 20;
  double residual_tol = 1e-8;
  ContinuationMode mode = ContinuationMode::kPredictorCorrector;
};

struct ContinuationStep {
  double t = 0.0;
  RealVector coords;
  double residual = 0.0;   // coordinate residual |h(x) - p(t)| after the step
  double condition = 0.0;  // condition estimate of J at the accepted iterate
  std::vector<double> newton_residuals;
};

struct ContinuationTrace {
  std::vector<ContinuationStep> steps;
  ContinuationStatus status = ContinuationStatus::kDivergedNearSingularity;
  std::optional<LambdaParam> solution;
  double final_residual = 0.0;  // matrix-space |h(x) - target|_F at the last accepted iterate
  double last_t = 0.0;
  std::string detail;
};

namespace detail {

inline double condition_estimate(const RealMatrix& j) {
  Eigen::JacobiSVD<RealMatrix> svd(j);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

enum class FailReason { kNone, kInfeasible, kNoConvergence };

}  // namespace detail

// Solve h(Lambda) = Sigma by continuation along the coordinate homotopy
// p(t) = (1-t) h(start) + t Sigma. Euler predictor through the Davidenko
// equation J dx/dt = y - y0, Newton corrector at fixed t, adaptive step.
// The trace records every accepted step; the final iterate must satisfy
// |h(sol) - Sigma|_F <= residual_tol * |Sigma|_F to count as converged.
inline ContinuationTrace continuation_solve(const RealMatrix& target, const LambdaParam& start,
                                            const EvalContext& ctx,
                                            const ContinuationOptions& opts = {}) {
  const Index n = ctx.filter.state_dim();
  if (target.rows() != n || target.cols() != n)
    throw ConfigError("continuation_solve: target side does not match filter state dimension");
  const double target_scale = std::max(1.0, target.norm());
  if ((target - target.transpose()).norm() > 1e-10 * target_scale)
    throw ConfigError("continuation_solve: target must be symmetric");
  const LambdaParam target_param = project(target, ctx.basis);
  if ((target - target_param.matrix).norm() > 1e-8 * target_scale)
    throw ConfigError("continuation_solve: target has components outside the moment range");
  {
    Eigen::SelfAdjointEigenSolver<RealMatrix> eig(symmetric_part(target), Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() <= 0.0)
      throw ConfigError("continuation_solve: target must be positive definite");
  }

  const RealVector y = target_param.coords;
  const RealVector y0 = h_coords(start, ctx);
  const RealVector dy = y - y0;
  const double ytol = opts.newton_tol * std::max(1.0, y.norm());

  ContinuationTrace trace;
  auto finish = [&](LambdaParam sol) {
    const RealMatrix hval = h_map(ctx.filter, ctx.prior, sol, ctx.grid, ctx.quad);
    trace.final_residual = (hval - target).norm();
    if (trace.final_residual <= opts.residual_tol * target.norm()) {
      trace.status = ContinuationStatus::kConverged;
      trace.solution = std::move(sol);
    } else {
      trace.status = ContinuationStatus::kDivergedNearSingularity;
      trace.detail = "endpoint residual above tolerance";
    }
  };

  if (dy.norm() <= ytol) {
    trace.last_t = 1.0;
    finish(start);
    return trace;
  }

  LambdaParam x = start;
  double t = 0.0;
  double dt = opts.dt0;
  detail::FailReason last_fail = detail::FailReason::kNone;
  int guard = 0;

  auto record_step = [&](double at_t, const LambdaParam& lam, double resid, double cond,
                         std::vector<double> hist) {
    ContinuationStep step;
    step.t = at_t;
    step.coords = lam.coords;
    step.residual = resid;
    step.condition = cond;
    step.newton_residuals = std::move(hist);
    trace.steps.push_back(std::move(step));
  };

  auto abort_with = [&](ContinuationStatus status, std::string why) -> ContinuationTrace {
    trace.status = status;
    trace.detail = std::move(why);
    trace.last_t = t;
    try {
      // Residual at the last accepted iterate, same convention as finish().
      const RealMatrix hval = h_map(ctx.filter, ctx.prior, x, ctx.grid, ctx.quad);
      trace.final_residual = (hval - target).norm();
    } catch (const Error&) {
      trace.final_residual = 0.0;
    }
    return trace;
  };

  if (opts.mode == ContinuationMode::kOdeOnly) {
    // Adaptive Heun on dx/dt = J(x)^{-1} (y - y0); no corrector, so drift
    // accumulates and near-singular Jacobians blow the step error up.
    auto slope = [&](const LambdaParam& lam) -> std::optional<RealVector> {
      const JacobianMatrixRep jac =
          jacobian_matrix(ctx.filter, ctx.prior, lam, ctx.basis, ctx.grid);
      const double cond = detail::condition_estimate(jac.entries);
      if (cond > opts.cond_max) return std::nullopt;
      return RealVector(jac.entries.partialPivLu().solve(dy));
    };
    while (t < 1.0 && ++guard < 100000) {
      dt = std::min(dt, 1.0 - t);
      const auto k1 = slope(x);
      if (!k1)
        return abort_with(ContinuationStatus::kDivergedNearSingularity,
                          "Jacobian condition exceeded cond_max at t = " + std::to_string(t));
      bool accepted = false;
      try {
        const LambdaParam euler = lambda_from_coords(x.coords + dt * (*k1), ctx.basis);
        const auto k2 = slope(euler);
        if (!k2) throw NumericalError("slope unavailable");
        const RealVector heun = x.coords + 0.5 * dt * (*k1 + *k2);
        const double err = (heun - euler.coords).norm() / std::max(1.0, heun.norm());
        if (err < 1e-6) {
          x = lambda_from_coords(heun, ctx.basis);
          t += dt;
          const double resid = (h_coords(x, ctx) - (y0 + t * dy)).norm();
          record_step(t, x, resid, detail::condition_estimate(jacobian_matrix(ctx.filter, ctx.prior,
                                                                              x, ctx.basis, ctx.grid)
                                                                  .entries),
                      {});
          dt *= 1.5;
          accepted = true;
          last_fail = detail::FailReason::kNone;
        } else {
          last_fail = detail::FailReason::kNoConvergence;
        }
      } catch (const FeasibilityError&) {
        last_fail = detail::FailReason::kInfeasible;
      } catch (const NumericalError&) {
        last_fail = detail::FailReason::kNoConvergence;
      }
      if (!accepted) {
        dt *= 0.5;
        if (dt < opts.min_step)
          return abort_with(last_fail == detail::FailReason::kInfeasible
                                ? ContinuationStatus::kInfeasibleIterate
                                : ContinuationStatus::kDivergedNearSingularity,
                            "step size underflow at t = " + std::to_string(t));
      }
    }
    trace.last_t = t;
    finish(x);
    return trace;
  }

  while (t < 1.0 && ++guard < 100000) {
    dt = std::min(dt, 1.0 - t);
    const JacobianMatrixRep jac = jacobian_matrix(ctx.filter, ctx.prior, x, ctx.basis, ctx.grid);
    const double cond = detail::condition_estimate(jac.entries);
    if (!trace.steps.empty() && trace.steps.back().condition == 0.0)
      trace.steps.back().condition = cond;
    if (cond > opts.cond_max)
      return abort_with(ContinuationStatus::kDivergedNearSingularity,
                        "Jacobian condition " + std::to_string(cond) +
                            " exceeded cond_max at t = " + std::to_string(t));

    const double t_next = t + dt;
    bool accepted = false;
    std::vector<double> hist;
    try {
      // Euler predictor along the Davidenko flow, then Newton at fixed t.
      RealVector coords = x.coords + dt * jac.entries.partialPivLu().solve(dy);
      LambdaParam iterate = lambda_from_coords(coords, ctx.basis);
      const RealVector pt = y0 + t_next * dy;
      int it = 0;
      for (; it < opts.max_newton; ++it) {
        const RealVector resid = h_coords(iterate, ctx) - pt;
        hist.push_back(resid.norm());
        if (resid.norm() <= ytol) break;
        const JacobianMatrixRep jin =
            jacobian_matrix(ctx.filter, ctx.prior, iterate, ctx.basis, ctx.grid);
        coords -= jin.entries.partialPivLu().solve(resid);
        if (!coords.allFinite()) throw NumericalError("non-finite Newton iterate");
        iterate = lambda_from_coords(coords, ctx.basis);
      }
      const RealVector resid_final = h_coords(iterate, ctx) - pt;
      if (resid_final.norm() <= ytol) {
        x = iterate;
        t = t_next;
        record_step(t, x, resid_final.norm(), 0.0, std::move(hist));
        if (it <= 3) dt = std::min(dt * 1.5, 1.0);
        accepted = true;
        last_fail = detail::FailReason::kNone;
      } else {
        last_fail = detail::FailReason::kNoConvergence;
      }
    } catch (const FeasibilityError&) {
      last_fail = detail::FailReason::kInfeasible;
    } catch (const NumericalError&) {
      last_fail = detail::FailReason::kNoConvergence;
    }
    if (!accepted) {
      dt *= 0.5;
      if (dt < opts.min_step)
        return abort_with(last_fail == detail::FailReason::kInfeasible
                              ? ContinuationStatus::kInfeasibleIterate
                              : ContinuationStatus::kDivergedNearSingularity,
                          "step size underflow at t = " + std::to_string(t));
    }
  }

  if (!trace.steps.empty() && trace.steps.back().condition == 0.0) {
    const JacobianMatrixRep jac = jacobian_matrix(ctx.filter, ctx.prior, x, ctx.basis, ctx.grid);
    trace.steps.back().condition = detail::condition_estimate(jac.entries);
  }
  trace.last_t = t;
  finish(x);
  return trace;
}

}  // namespace momentmap
