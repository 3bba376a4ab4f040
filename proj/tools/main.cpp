#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "momentmap/momentmap.hpp"

namespace {

momentmap::RunOptions g_run;

void add_shared_options(CLI::App* sub) {
  sub->add_option("--config", g_run.config_path, "Scenario configuration file (JSON)")
      ->required();
  sub->add_option("--out", g_run.out_dir, "Output directory for reports");
  static double dt_value = 0.0;
  auto* dt = sub->add_option("--delta-theta", dt_value, "Override the grid spacing (radians)");
  sub->add_flag("--full-grid", g_run.full_grid, "Use the fine reference grid");
  sub->add_flag("--parallel", g_run.parallel,
                "Pairwise summation with parallel reduction (faster, not byte-reproducible "
                "against sequential mode)");
  sub->callback([dt]() {
    if (dt->count() > 0) g_run.delta_theta_override = dt_value;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moment-map analysis for matrix covariance extension"};
  app.require_subcommand(1);

  CLI::App* roots = app.add_subcommand("roots", "Determinantal roots of every factor in the config");
  add_shared_options(roots);

  CLI::App* det = app.add_subcommand("det-scan", "Scan det J along the factor segment");
  add_shared_options(det);
  det->add_option("--samples", g_run.scan_samples, "Number of equidistant samples")
      ->check(CLI::Range(2, 100000));

  CLI::App* bisect = app.add_subcommand("bisect", "Bisect the first det-sign-change bracket");
  add_shared_options(bisect);
  bisect->add_option("--samples", g_run.scan_samples, "Pre-scan sample count")
      ->check(CLI::Range(2, 100000));

  CLI::App* bifurcate =
      app.add_subcommand("bifurcate", "Kernel split and reduced Hessian at the critical point");
  add_shared_options(bifurcate);
  bifurcate->add_option("--samples", g_run.scan_samples, "Pre-scan sample count")
      ->check(CLI::Range(2, 100000));

  CLI::App* cont = app.add_subcommand("continue", "Solve the moment equation by continuation");
  add_shared_options(cont);
  cont->add_flag("--ode", g_run.ode_mode, "Integrate the Davidenko flow without correction");

  CLI::App* tau = app.add_subcommand("tau", "Moments of each factor's spectral density");
  add_shared_options(tau);

  CLI::App* reproduce =
      app.add_subcommand("reproduce", "Verify the bundled example against its reference figures");
  add_shared_options(reproduce);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const momentmap::Scenario sc = momentmap::build_scenario(g_run);
    if (roots->parsed()) return momentmap::run_roots(sc, g_run);
    if (det->parsed()) return momentmap::run_det_scan(sc, g_run);
    if (bisect->parsed()) return momentmap::run_bisect(sc, g_run);
    if (bifurcate->parsed()) return momentmap::run_bifurcate(sc, g_run);
    if (cont->parsed()) return momentmap::run_continue(sc, g_run);
    if (tau->parsed()) return momentmap::run_tau(sc, g_run);
    if (reproduce->parsed()) return momentmap::run_reproduce(sc, g_run);
    std::fprintf(stderr, "error: no subcommand dispatched\n");
    return 1;
  } catch (const momentmap::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const momentmap::FeasibilityError& e) {
    std::fprintf(stderr, "feasibility error: %s\n", e.what());
    return 2;
  } catch (const momentmap::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
