#pragma once

// Configuration ingestion, the eps sweep, rate fitting, the validation suite,
// and report emission.  This is the layer the CLI drives.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gdnls/assembly.hpp"
#include "gdnls/corrector.hpp"
#include "gdnls/grenier.hpp"
#include "gdnls/nls.hpp"

namespace gdnls {

struct ExperimentConfig {
  int n_modes = 512;
  double length = 2.0 * M_PI;
  double ell = 2.0;
  double w0 = 0.5;
  std::optional<double> M_override;
  std::optional<double> T_override;
  NonlinearitySpec nonlinearity{1.0, 1, 1.0, 1};

  // Named preset, or explicit coefficient lists ([mode, re, im] triples).
  std::string preset = "analytic-bump";
  std::vector<ModeAmplitude> phi0, a0;
  std::vector<ModeAmplitude> phi10, a10;  // corrector data, default zero

  // Optional eps-dependent data perturbation: data + eps^p * (mode field).
  std::vector<ModeAmplitude> perturb_phi0, perturb_a0;
  double perturb_power = 1.0;

  std::vector<double> epsilons = {0.2, 0.1, 0.05, 0.025, 0.0125};
  double dt = 1e-3;  // upper bound; runs snap to T / n_steps with n_steps >= 16
  std::string output_dir = "out";

  std::string config_hash;  // FNV-1a of the config text
};

/// Parse + validate; errors carry the offending line or field name.
ExperimentConfig parse_config(const std::string& text,
                              const std::string& origin = "<memory>");
ExperimentConfig load_config(const std::string& path);
void validate_config(const ExperimentConfig& config);

/// Grid, data, corrector data and schedule realized from a config.
struct ExperimentSetup {
  GridPtr grid;
  WKBState data;
  CorrectorState corrector_data;
  WeightSchedule schedule;
  double dt_run = 0.0;
  long n_steps = 0;
  double ell = 2.0;
  NonlinearitySpec nonlinearity;
};

ExperimentSetup prepare(const ExperimentConfig& config);
/// Base data plus eps^p times the configured perturbation modes.
WKBState data_for_epsilon(const ExperimentSetup& setup,
                          const ExperimentConfig& config, double eps);
/// The named initial-data presets ("analytic-bump").
WKBState preset_data(const GridPtr& grid, const std::string& name);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;  // natural log
  double residual = 0.0;   // RMS deviation in log-log space
  bool floored = false;    // some errors were clamped at 1e-14
  bool sufficient = true;  // at least 3 usable points
};

RateFit fit_rate(std::span<const double> eps, std::span<const double> errors);

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct SweepRow {
  double epsilon = 0.0;
  double err_phi_leading = 0.0;
  double err_a_leading = 0.0;
  double err_phi_corrected = 0.0;
  double err_a_corrected = 0.0;
  double err_wf_l2 = 0.0;
  double err_wf_linf = 0.0;
  double err_rho_l1 = 0.0;
  double err_rho_linf = 0.0;
  double err_current_l1 = 0.0;
  double err_current_linf = 0.0;
  double apriori_amp_ratio = 0.0;  // |||a|||^2 / (2 ||a0||^2)
  double apriori_phi_ratio = 0.0;  // |||phi|||^2 / (4 ||phi0||^2 + ||a0||^(4 sigma))
  double mass_drift = 0.0;
  double tail_mass = 0.0;
  bool ok = true;
  std::string note;
};

struct ConvergenceReport {
  std::string config_hash;
  int n_modes = 0;
  double length = 0.0;
  double ell = 0.0;
  double dt = 0.0;
  WeightSchedule schedule;
  std::vector<SweepRow> rows;
  RateFit slope_leading, slope_corrected, slope_wavefunction;
  RateFit slope_rho, slope_current;
  std::vector<Check> checks;
  std::vector<std::string> warnings;
};

ConvergenceReport run_sweep(const ExperimentConfig& config);
/// Pipeline for a single eps (shared limit/corrector solves supplied).
SweepRow run_single(const ExperimentSetup& setup, const ExperimentConfig& config,
                    const Trajectory<WKBState>& limit,
                    const Trajectory<CorrectorState>& corrector, double eps);

std::vector<Check> validate(const ExperimentConfig& config);

/// format in {"csv", "json"}; writes <dir>/report.<format>.
void emit_report(const ConvergenceReport& report, const std::string& format,
                 const std::string& dir);
/// Re-reads what emit_report("json", ...) wrote.
ConvergenceReport report_from_json(const std::string& path);

}  // namespace gdnls
