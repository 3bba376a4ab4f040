// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 1-5 replay the bundled example against its reference
// figures; 6 and 7 are property batteries on randomized instances.

#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "momentmap/momentmap.hpp"

using namespace momentmap;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s — %s\n", pass ? "PASS" : "FAIL", criterion, name.c_str(),
              detail.c_str());
  if (!pass) ++g_failures;
}

RealMatrix mat24(std::initializer_list<double> vals) {
  RealMatrix m(2, 4);
  Index i = 0;
  for (double v : vals) m(i / 4, i % 4) = v, ++i;
  return m;
}

LambdaParam random_feasible(std::mt19937_64& rng, const EvalContext& ctx) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int attempt = 0; attempt < 500; ++attempt) {
    RealMatrix c(2, 4);
    for (Index r = 0; r < 2; ++r)
      for (Index col = 0; col < 4; ++col) c(r, col) = unif(rng);
    LambdaParam lam = project(c.transpose() * c, ctx.basis);
    const double norm = lam.matrix.norm();
    if (norm < 1e-8) continue;
    lam.matrix /= norm;
    lam.coords /= norm;
    if (feasibility_check(ctx.filter, lam, ctx.grid) >= 0.05) return lam;
  }
  throw NumericalError("no feasible random draw");
}

RealVector random_unit(std::mt19937_64& rng, Index size) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  RealVector v(size);
  for (Index i = 0; i < size; ++i) v(i) = gauss(rng);
  return v / v.norm();
}

}  // namespace

int main() {
  bool criterion5_pass = false;

  // --- criteria 1-5: reference-figure replay -------------------------------
  try {
    RunOptions run;
    run.config_path = MOMENTMAP_PAPER_CONFIG;
    const Scenario sc = build_scenario(run);
    const std::vector<GoldenCheck> checks = reproduce_checks(sc);

    std::map<int, std::pair<int, std::string>> by_criterion;  // {failed count, failed names}
    std::map<int, int> totals;
    for (const GoldenCheck& check : checks) {
      ++totals[check.criterion];
      auto& slot = by_criterion[check.criterion];
      if (!check.pass) {
        ++slot.first;
        slot.second += (slot.second.empty() ? "" : "; ") + check.name + " (" + check.detail + ")";
      }
    }
    const std::map<int, std::string> names = {
        {1, "determinantal roots of K, C0, C1"},
        {2, "parameters induced by the factors"},
        {3, "endpoint Jacobian determinants and sign change"},
        {4, "critical point location and singular profile"},
        {5, "kernel split, reduced Hessian, classification"},
    };
    for (const auto& [criterion, name] : names) {
      const auto it = by_criterion.find(criterion);
      const int failed = it == by_criterion.end() ? 0 : it->second.first;
      const bool pass = failed == 0 && totals[criterion] > 0;
      std::string detail = std::to_string(totals[criterion] - failed) + "/" +
                           std::to_string(totals[criterion]) + " sub-checks";
      if (failed > 0) detail += ": " + it->second.second;
      report(criterion, name, pass, detail);
      if (criterion == 5) criterion5_pass = pass;
    }
  } catch (const std::exception& e) {
    report(1, "reference-figure replay", false, std::string("exception: ") + e.what());
    report(2, "reference-figure replay", false, "aborted");
    report(3, "reference-figure replay", false, "aborted");
    report(4, "reference-figure replay", false, "aborted");
    report(5, "reference-figure replay", false, "aborted");
  }

  // --- criterion 6: derivative identities ----------------------------------
  try {
    EvalContext ctx;
    ctx.filter = block_shift_filter(2, 1);
    ctx.prior = PriorFactor::from_outer(
        mat24({-0.22, -1.23, 2.22, 0.0, -1.11, -0.96, 1.14, 2.49}));
    ctx.basis = build_basis(2, 1);
    ctx.grid = make_grid(1e-3);

    std::mt19937_64 rng(20260816);
    bool pass = true;
    std::string why;
    auto fail = [&](const std::string& msg) {
      pass = false;
      if (why.empty()) why = msg;
    };

    for (int trial = 0; trial < 10 && pass; ++trial) {
      const LambdaParam lam = random_feasible(rng, ctx);
      const LambdaParam y1 = lambda_from_coords(random_unit(rng, 7), ctx.basis);
      const LambdaParam y2 = lambda_from_coords(random_unit(rng, 7), ctx.basis);
      const double eps = 1e-5;

      // dh against central differences of h.
      const LambdaParam lp = project(RealMatrix(lam.matrix + eps * y1.matrix), ctx.basis);
      const LambdaParam lm = project(RealMatrix(lam.matrix - eps * y1.matrix), ctx.basis);
      const RealMatrix fd1 = (h_map(ctx.filter, ctx.prior, lp, ctx.grid) -
                              h_map(ctx.filter, ctx.prior, lm, ctx.grid)) /
                             (2.0 * eps);
      const RealMatrix an1 = dh_apply(ctx.filter, ctx.prior, lam, y1.matrix, ctx.grid);
      if ((fd1 - an1).norm() > 1e-5 * std::max(1.0, an1.norm())) fail("dh finite-difference mismatch");

      // d2h against central differences of dh.
      const RealMatrix fd2 = (dh_apply(ctx.filter, ctx.prior, lp, y2.matrix, ctx.grid) -
                              dh_apply(ctx.filter, ctx.prior, lm, y2.matrix, ctx.grid)) /
                             (2.0 * eps);
      const RealMatrix an2 = d2h_apply(ctx.filter, ctx.prior, lam, y2.matrix, y1.matrix, ctx.grid);
      if ((fd2 - an2).norm() > 1e-5 * std::max(1.0, an2.norm())) fail("d2h finite-difference mismatch");

      // Adjoint duality.
      const double lhs = trace_inner(dh_apply(ctx.filter, ctx.prior, lam, y1.matrix, ctx.grid),
                                     y2.matrix);
      const double rhs = trace_inner(
          y1.matrix, dh_adjoint_apply(ctx.filter, ctx.prior, lam, y2.matrix, ctx.grid));
      if (std::abs(lhs - rhs) > 1e-8 * std::max(1.0, std::abs(lhs))) fail("adjoint duality violated");

      // d2h argument symmetry.
      const RealMatrix ab = d2h_apply(ctx.filter, ctx.prior, lam, y1.matrix, y2.matrix, ctx.grid);
      const RealMatrix ba = d2h_apply(ctx.filter, ctx.prior, lam, y2.matrix, y1.matrix, ctx.grid);
      if ((ab - ba).norm() > 1e-12 * std::max(1.0, ab.norm())) fail("d2h argument asymmetry");

      // Degree -1 homogeneity.
      const LambdaParam scaled = project(RealMatrix(2.0 * lam.matrix), ctx.basis);
      const RealMatrix h1 = h_map(ctx.filter, ctx.prior, lam, ctx.grid);
      const RealMatrix h2 = h_map(ctx.filter, ctx.prior, scaled, ctx.grid);
      if ((h2 - 0.5 * h1).norm() > 1e-12 * h1.norm()) fail("homogeneity violated");
    }

    // Scalar-prior Jacobian is symmetric negative definite.
    {
      EvalContext scalar = ctx;
      scalar.prior = PriorFactor::identity();
      const LambdaParam lam = random_feasible(rng, scalar);
      const RealMatrix j =
          jacobian_matrix(scalar.filter, scalar.prior, lam, scalar.basis, scalar.grid).entries;
      if ((j - j.transpose()).norm() > 1e-10 * j.norm()) fail("scalar-prior Jacobian asymmetric");
      Eigen::SelfAdjointEigenSolver<RealMatrix> eig(RealMatrix(symmetric_part(j)),
                                                    Eigen::EigenvaluesOnly);
      if (eig.eigenvalues().maxCoeff() >= 0.0) fail("scalar-prior Jacobian not negative definite");
    }

    // Gamma duality: <Gamma(Phi), X> == mean <Phi, G* X G>.
    {
      std::uniform_real_distribution<double> unif(-1.0, 1.0);
      std::vector<ComplexMatrix> vals(ctx.grid.size());
      for (Index i = 0; i < ctx.grid.size(); ++i) {
        const double th = ctx.grid.angles[i];
        ComplexMatrix v(2, 2);
        v(0, 0) = 2.0 + 0.4 * std::cos(th);
        v(1, 1) = 1.5 + 0.2 * std::sin(th) * std::sin(th);
        v(0, 1) = std::polar(0.3, th);
        v(1, 0) = std::conj(v(0, 1));
        vals[i] = v;
      }
      std::vector<ComplexMatrix> phi_copy = vals;
      const MatrixSamples phi = make_samples(std::move(vals), true);
      RealMatrix x(4, 4);
      for (Index r = 0; r < 4; ++r)
        for (Index c = 0; c < 4; ++c) x(r, c) = unif(rng);
      x = RealMatrix(symmetric_part(x));
      const double lhs = trace_product(gamma_apply(ctx.filter, phi, ctx.grid), x.cast<Complex>()).real();
      Complex rhs = 0.0;
      for (Index i = 0; i < ctx.grid.size(); ++i)
        rhs += trace_product(phi_copy[i].adjoint(),
                             gamma_adjoint(ctx.filter, x.cast<Complex>(),
                                           std::polar(1.0, ctx.grid.angles[i])));
      rhs /= static_cast<double>(ctx.grid.size());
      if (std::abs(lhs - rhs.real()) > 1e-10 * std::max(1.0, std::abs(lhs)))
        fail("moment-operator duality violated");
    }

    report(6, "derivative and operator identities (10 random instances)", pass,
           pass ? "dh/d2h FD, adjoint duality, symmetry, homogeneity, definiteness all hold" : why);
  } catch (const std::exception& e) {
    report(6, "derivative and operator identities", false, std::string("exception: ") + e.what());
  }

  // --- criterion 7: continuation roundtrips --------------------------------
  try {
    EvalContext ctx;
    ctx.filter = block_shift_filter(2, 1);
    ctx.prior = PriorFactor::identity();
    ctx.basis = build_basis(2, 1);
    ctx.grid = make_grid(1e-2);

    std::mt19937_64 rng(424242);
    const LambdaParam start = project(RealMatrix::Identity(4, 4), ctx.basis);
    int recovered = 0;
    std::string why;
    for (int trial = 0; trial < 10; ++trial) {
      const LambdaParam truth = random_feasible(rng, ctx);
      const RealMatrix target = h_map(ctx.filter, ctx.prior, truth, ctx.grid);
      const ContinuationTrace trace = continuation_solve(target, start, ctx);
      const bool ok = trace.status == ContinuationStatus::kConverged &&
                      trace.final_residual <= 1e-8 * target.norm() &&
                      (trace.solution->matrix - truth.matrix).norm() < 1e-6;
      if (ok) {
        ++recovered;
      } else if (why.empty()) {
        why = "trial " + std::to_string(trial) + " status " + to_string(trace.status) +
              ", residual " + std::to_string(trace.final_residual);
      }
    }
    report(7, "continuation roundtrips on the unweighted map", recovered == 10,
           std::to_string(recovered) + "/10 recovered within 1e-6 with certified residual");
  } catch (const std::exception& e) {
    report(7, "continuation roundtrips", false, std::string("exception: ") + e.what());
  }

  // --- criterion 8: the non-injectivity statement ---------------------------
  // Proven abstractly by the simple-bifurcation classification, so this
  // criterion stands or falls with criterion 5.
  report(8, "moment map is not injective over the feasible cone", criterion5_pass,
         criterion5_pass
             ? "the homotopy hits a simple bifurcation, so two solution branches coexist"
             : "depends on criterion 5, which failed");

  std::printf("%s: %d criterion failure%s\n", g_failures == 0 ? "ACCEPTED" : "REJECTED",
              g_failures, g_failures == 1 ? "" : "s");
  return g_failures;
}
