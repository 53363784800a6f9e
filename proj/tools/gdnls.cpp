// Command-line front end: single-eps solves, full sweeps, the validation
// suite, and norm inspection of a configured field.
//
//   gdnls solve    --config cfg --epsilon 0.1 --out dir
//   gdnls sweep    --config cfg --out dir
//   gdnls validate --config cfg
//   gdnls norms    --config cfg --field a0
//
// Exit code 0 iff every executed check passed.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "gdnls/harness.hpp"

namespace {

using namespace gdnls;

void print_fit(const char* name, const RateFit& fit) {
  if (!fit.sufficient) {
    std::printf("  %-14s insufficient data (need >= 3 epsilon values)\n", name);
    return;
  }
  std::printf("  %-14s slope = %8.4f   intercept = %8.4f   residual = %.4f%s\n",
              name, fit.slope, fit.intercept, fit.residual,
              fit.floored ? "   [floored]" : "");
}

int print_checks(const std::vector<Check>& checks) {
  int failures = 0;
  for (const auto& c : checks) {
    std::printf("  [%s] %-28s value = %-14.6g threshold = %g\n",
                c.pass ? "pass" : "FAIL", c.name.c_str(), c.value, c.threshold);
    if (!c.pass) ++failures;
  }
  return failures;
}

int run_sweep_cmd(const std::string& config_path, const std::string& out_dir) {
  ExperimentConfig cfg = load_config(config_path);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  const ConvergenceReport report = run_sweep(cfg);

  std::printf("sweep: %zu epsilon values, n = %d, dt = %.3e, M = %.4g, T = %.4g\n",
              report.rows.size(), report.n_modes, report.dt, report.schedule.M,
              report.schedule.T);
  std::printf("  %-10s %-13s %-13s %-13s %-13s\n", "epsilon", "leading",
              "corrected", "wf L2", "rho L1");
  for (const auto& row : report.rows) {
    if (!row.ok) {
      std::printf("  %-10.4g excluded: %s\n", row.epsilon, row.note.c_str());
      continue;
    }
    std::printf("  %-10.4g %-13.6e %-13.6e %-13.6e %-13.6e\n", row.epsilon,
                row.err_phi_leading + row.err_a_leading,
                row.err_phi_corrected + row.err_a_corrected, row.err_wf_l2,
                row.err_rho_l1);
  }
  print_fit("leading", report.slope_leading);
  print_fit("corrected", report.slope_corrected);
  print_fit("wavefunction", report.slope_wavefunction);
  print_fit("rho", report.slope_rho);
  print_fit("current", report.slope_current);

  int failures = print_checks(report.checks);
  for (const auto& w : report.warnings)
    std::printf("  warning: %s\n", w.c_str());
  for (const auto& row : report.rows)
    if (!row.ok) ++failures;

  emit_report(report, "csv", cfg.output_dir);
  emit_report(report, "json", cfg.output_dir);
  std::printf("report written to %s/report.{csv,json}\n", cfg.output_dir.c_str());
  return failures == 0 ? 0 : 1;
}

int run_solve_cmd(const std::string& config_path, double eps,
                  const std::string& out_dir) {
  ExperimentConfig cfg = load_config(config_path);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  cfg.epsilons = {eps};

  const ExperimentSetup setup = prepare(cfg);
  const auto limit =
      solve_limit(setup.data, setup.nonlinearity, setup.schedule, setup.dt_run);
  const auto corrector = integrate_corrector(setup.corrector_data, limit,
                                             setup.nonlinearity, setup.dt_run);
  ConvergenceReport report;
  report.config_hash = cfg.config_hash;
  report.n_modes = cfg.n_modes;
  report.length = cfg.length;
  report.ell = cfg.ell;
  report.dt = setup.dt_run;
  report.schedule = setup.schedule;

  int failures = 0;
  try {
    const SweepRow row = run_single(setup, cfg, limit, corrector, eps);
    report.rows.push_back(row);
    std::printf("solve: eps = %g  (n = %d, dt = %.3e, T = %.4g)\n", eps,
                cfg.n_modes, setup.dt_run, setup.schedule.T);
    std::printf("  leading   : phi %.6e   a %.6e\n", row.err_phi_leading,
                row.err_a_leading);
    std::printf("  corrected : phi %.6e   a %.6e\n", row.err_phi_corrected,
                row.err_a_corrected);
    std::printf("  wavefn    : L2 %.6e   Linf %.6e\n", row.err_wf_l2,
                row.err_wf_linf);
    std::printf("  observables: rho L1 %.6e   J L1 %.6e\n", row.err_rho_l1,
                row.err_current_l1);
    std::printf("  mass drift %.3e   tail mass %.3e\n", row.mass_drift,
                row.tail_mass);
    if (row.apriori_amp_ratio > 1.0 || row.apriori_phi_ratio > 1.0) {
      std::printf("  [FAIL] a priori bound ratios: amp %.4g phi %.4g\n",
                  row.apriori_amp_ratio, row.apriori_phi_ratio);
      ++failures;
    }
  } catch (const std::exception& ex) {
    std::printf("solve failed: %s\n", ex.what());
    ++failures;
  }
  emit_report(report, "csv", cfg.output_dir);
  emit_report(report, "json", cfg.output_dir);
  return failures == 0 ? 0 : 1;
}

int run_validate_cmd(const std::string& config_path) {
  const ExperimentConfig cfg = load_config(config_path);
  const auto checks = validate(cfg);
  std::printf("validate: %zu checks\n", checks.size());
  const int failures = print_checks(checks);
  std::printf("%d of %zu checks failed\n", failures, checks.size());
  return failures == 0 ? 0 : 1;
}

int run_norms_cmd(const std::string& config_path, const std::string& field_name) {
  const ExperimentConfig cfg = load_config(config_path);
  const ExperimentSetup setup = prepare(cfg);

  const SpectralField* field = nullptr;
  if (field_name == "phi0") field = &setup.data.phi;
  else if (field_name == "a0") field = &setup.data.amp;
  else if (field_name == "phi10") field = &setup.corrector_data.phi1;
  else if (field_name == "a10") field = &setup.corrector_data.amp1;
  if (!field) {
    std::fprintf(stderr, "unknown field '%s' (use phi0, a0, phi10, a10)\n",
                 field_name.c_str());
    return 1;
  }
  const double ell = cfg.ell;
  std::printf("norms of %s (n = %d, L = %.6g, w0 = %g):\n", field_name.c_str(),
              cfg.n_modes, cfg.length, cfg.w0);
  std::printf("  L2                    : %.12e\n", sobolev_norm(*field, 0.0));
  std::printf("  H^ell                 : %.12e\n", sobolev_norm(*field, ell));
  std::printf("  H_w0^ell              : %.12e\n",
              analytic_norm(*field, cfg.w0, ell));
  std::printf("  H_w0^(ell+1)          : %.12e\n",
              analytic_norm(*field, cfg.w0, ell + 1.0));
  std::printf("  tail mass fraction    : %.3e\n", tail_mass_fraction(*field));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semiclassical generalized derivative NLS / WKB suite"};
  app.require_subcommand(1);

  std::string config_path, out_dir, field_name;
  double eps = 0.1;

  auto* solve = app.add_subcommand("solve", "run the pipeline for one epsilon");
  solve->add_option("--config", config_path, "config file")->required();
  solve->add_option("--epsilon", eps, "semiclassical parameter")->required();
  solve->add_option("--out", out_dir, "output directory");

  auto* sweep = app.add_subcommand("sweep", "run the configured epsilon sweep");
  sweep->add_option("--config", config_path, "config file")->required();
  sweep->add_option("--out", out_dir, "output directory");

  auto* validate_cmd = app.add_subcommand("validate", "run the validation suite");
  validate_cmd->add_option("--config", config_path, "config file")->required();

  auto* norms = app.add_subcommand("norms", "print norms of a configured field");
  norms->add_option("--config", config_path, "config file")->required();
  norms->add_option("--field", field_name, "phi0, a0, phi10 or a10")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(solve)) return run_solve_cmd(config_path, eps, out_dir);
    if (app.got_subcommand(sweep)) return run_sweep_cmd(config_path, out_dir);
    if (app.got_subcommand(validate_cmd)) return run_validate_cmd(config_path);
    if (app.got_subcommand(norms)) return run_norms_cmd(config_path, field_name);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  }
  return 1;
}
