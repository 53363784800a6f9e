#include "gdnls/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gdnls {

namespace {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// config parsing: flat "key = value" lines, '#' comments
// ---------------------------------------------------------------------------

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void parse_fail(const std::string& origin, int line,
                             const std::string& msg) {
  throw std::runtime_error(origin + ":" + std::to_string(line) + ": " + msg);
}

double parse_number(const std::string& s, const std::string& origin, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    parse_fail(origin, line, "expected a number, got '" + s + "'");
  }
  if (trim(s.substr(used)).size() != 0)
    parse_fail(origin, line, "trailing characters after number in '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const std::string& origin, int line) {
  const double v = parse_number(s, origin, line);
  const long r = std::lround(v);
  if (std::abs(v - r) > 1e-9)
    parse_fail(origin, line, "expected an integer, got '" + s + "'");
  return static_cast<int>(r);
}

std::vector<double> parse_number_list(const std::string& s, const std::string& origin,
                                      int line) {
  std::vector<double> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) parse_fail(origin, line, "empty entry in number list");
    out.push_back(parse_number(item, origin, line));
  }
  if (out.empty()) parse_fail(origin, line, "empty number list");
  return out;
}

// "[mode, re, im], [mode, re, im], ..."
std::vector<ModeAmplitude> parse_mode_list(const std::string& s,
                                           const std::string& origin, int line) {
  std::vector<ModeAmplitude> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    while (pos < s.size() && (std::isspace(static_cast<unsigned char>(s[pos])) ||
                              s[pos] == ','))
      ++pos;
    if (pos >= s.size()) break;
    if (s[pos] != '[') parse_fail(origin, line, "expected '[' in mode list");
    const std::size_t close = s.find(']', pos);
    if (close == std::string::npos) parse_fail(origin, line, "unterminated '['");
    const auto vals = parse_number_list(s.substr(pos + 1, close - pos - 1), origin, line);
    if (vals.size() != 3)
      parse_fail(origin, line, "mode entries are [mode, re, im] triples");
    const long mode = std::lround(vals[0]);
    if (std::abs(vals[0] - mode) > 1e-9)
      parse_fail(origin, line, "mode index must be an integer");
    out.push_back({static_cast<int>(mode), complex_t{vals[1], vals[2]}});
    pos = close + 1;
  }
  if (out.empty()) parse_fail(origin, line, "empty mode list");
  return out;
}

std::string fnv1a_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

[[noreturn]] void invariant_fail(const std::string& field, const std::string& msg) {
  throw std::runtime_error("config field '" + field + "': " + msg);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  bool preset_given = false;
  bool explicit_data = false;

  std::stringstream ss(text);
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string stripped = trim(raw);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) parse_fail(origin, line, "expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (value.empty()) parse_fail(origin, line, "empty value for '" + key + "'");

    if (key == "grid.n_modes") {
      cfg.n_modes = parse_int(value, origin, line);
    } else if (key == "grid.length") {
      cfg.length = parse_number(value, origin, line);
    } else if (key == "regularity.ell") {
      cfg.ell = parse_number(value, origin, line);
    } else if (key == "weight.w0") {
      cfg.w0 = parse_number(value, origin, line);
    } else if (key == "weight.M") {
      cfg.M_override = parse_number(value, origin, line);
    } else if (key == "weight.T") {
      cfg.T_override = parse_number(value, origin, line);
    } else if (key == "nonlinearity.alpha") {
      cfg.nonlinearity.alpha = parse_number(value, origin, line);
    } else if (key == "nonlinearity.gamma") {
      cfg.nonlinearity.gamma = parse_int(value, origin, line);
    } else if (key == "nonlinearity.lambda") {
      cfg.nonlinearity.lambda = parse_number(value, origin, line);
    } else if (key == "nonlinearity.sigma") {
      cfg.nonlinearity.sigma = parse_int(value, origin, line);
    } else if (key == "data.preset") {
      cfg.preset = value;
      preset_given = true;
    } else if (key == "data.phi0") {
      cfg.phi0 = parse_mode_list(value, origin, line);
      explicit_data = true;
    } else if (key == "data.a0") {
      cfg.a0 = parse_mode_list(value, origin, line);
      explicit_data = true;
    } else if (key == "data.phi10") {
      cfg.phi10 = parse_mode_list(value, origin, line);
    } else if (key == "data.a10") {
      cfg.a10 = parse_mode_list(value, origin, line);
    } else if (key == "data.perturb_phi0") {
      cfg.perturb_phi0 = parse_mode_list(value, origin, line);
    } else if (key == "data.perturb_a0") {
      cfg.perturb_a0 = parse_mode_list(value, origin, line);
    } else if (key == "data.perturb_power") {
      cfg.perturb_power = parse_number(value, origin, line);
    } else if (key == "sweep.epsilons") {
      cfg.epsilons = parse_number_list(value, origin, line);
    } else if (key == "solver.dt") {
      cfg.dt = parse_number(value, origin, line);
    } else if (key == "output.dir") {
      cfg.output_dir = value;
    } else {
      parse_fail(origin, line, "unknown key '" + key + "'");
    }
  }

  if (preset_given && explicit_data)
    invariant_fail("data", "give either data.preset or explicit data, not both");
  if (explicit_data) {
    if (cfg.phi0.empty() || cfg.a0.empty())
      invariant_fail("data", "explicit data needs both data.phi0 and data.a0");
    cfg.preset.clear();
  }

  cfg.config_hash = fnv1a_hash(text);
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path);
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.n_modes < 8 || cfg.n_modes % 2 != 0)
    invariant_fail("grid.n_modes", "must be even and >= 8");
  if (!(cfg.length > 0.0)) invariant_fail("grid.length", "must be positive");
  if (!(cfg.ell > 1.0)) invariant_fail("regularity.ell", "must exceed 1");
  if (!(cfg.w0 > 0.0)) invariant_fail("weight.w0", "must be positive");
  cfg.nonlinearity.check();
  if (cfg.epsilons.empty()) invariant_fail("sweep.epsilons", "must be nonempty");
  for (double e : cfg.epsilons) {
    if (!(e > 0.0) || e > 1.0)
      invariant_fail("sweep.epsilons", "every value must lie in (0, 1]");
  }
  for (std::size_t i = 1; i < cfg.epsilons.size(); ++i) {
    if (!(cfg.epsilons[i] < cfg.epsilons[i - 1]))
      invariant_fail("sweep.epsilons", "values must be strictly decreasing");
  }
  if (!(cfg.dt > 0.0)) invariant_fail("solver.dt", "must be positive");
  if (cfg.perturb_power < 0.0) invariant_fail("data.perturb_power", "must be >= 0");
  if (cfg.T_override && !cfg.M_override)
    invariant_fail("weight.T", "weight.T override requires weight.M");
  if (!cfg.preset.empty() && cfg.preset != "analytic-bump")
    invariant_fail("data.preset", "unknown preset '" + cfg.preset + "'");
  if (cfg.preset == "analytic-bump" &&
      std::abs(cfg.length - 2.0 * M_PI) > 1e-9)
    invariant_fail("grid.length", "preset analytic-bump expects length 2*pi");
}

WKBState preset_data(const GridPtr& grid, const std::string& name) {
  if (name != "analytic-bump")
    throw std::invalid_argument("unknown preset '" + name + "'");
  // phi0 = 0.3 sin x, a0 = exp(0.5 (cos x - 1)); entire, nonvacuum data whose
  // spectrum is compact after the machine-precision floor.
  const std::vector<ModeAmplitude> phi_modes = {{1, complex_t{0.0, -0.15}},
                                                {-1, complex_t{0.0, 0.15}}};
  SpectralField phi = SpectralField::from_modes(grid, phi_modes, true);
  std::vector<double> a(grid->size());
  const auto& x = grid->points();
  for (int m = 0; m < grid->size(); ++m) a[m] = std::exp(0.5 * (std::cos(x[m]) - 1.0));
  SpectralField amp = SpectralField::from_real_samples(grid, a);
  amp.floor_small();
  return {std::move(phi), std::move(amp)};
}

ExperimentSetup prepare(const ExperimentConfig& cfg) {
  validate_config(cfg);
  ExperimentSetup setup;
  setup.grid = FourierGrid::make(cfg.n_modes, cfg.length);
  setup.ell = cfg.ell;
  setup.nonlinearity = cfg.nonlinearity;

  if (!cfg.preset.empty()) {
    setup.data = preset_data(setup.grid, cfg.preset);
  } else {
    setup.data = {SpectralField::from_modes(setup.grid, cfg.phi0, true),
                  SpectralField::from_modes(setup.grid, cfg.a0, false)};
  }
  setup.corrector_data = {
      cfg.phi10.empty() ? SpectralField::zero(setup.grid, true)
                        : SpectralField::from_modes(setup.grid, cfg.phi10, true),
      cfg.a10.empty() ? SpectralField::zero(setup.grid, false)
                      : SpectralField::from_modes(setup.grid, cfg.a10, false)};

  if (cfg.M_override) {
    const double M = *cfg.M_override;
    const double T = cfg.T_override ? *cfg.T_override : 0.9 * cfg.w0 / M;
    setup.schedule = WeightSchedule(cfg.w0, M, T);
  } else {
    // Selected at the regularity the corrected approximation needs (ell + 2),
    // so a single schedule serves the whole sweep.
    const double ell_sched = cfg.ell + 2.0;
    const double phi_norm = analytic_norm(setup.data.phi, cfg.w0, ell_sched + 1.0);
    const double amp_norm = analytic_norm(setup.data.amp, cfg.w0, ell_sched);
    setup.schedule =
        select_schedule(ell_sched, phi_norm, amp_norm, cfg.w0, cfg.nonlinearity);
  }

  setup.n_steps = std::max<long>(
      16, static_cast<long>(std::ceil(setup.schedule.T / cfg.dt - 1e-12)));
  setup.dt_run = setup.schedule.T / static_cast<double>(setup.n_steps);
  return setup;
}

WKBState data_for_epsilon(const ExperimentSetup& setup, const ExperimentConfig& cfg,
                          double eps) {
  WKBState data = setup.data;
  if (cfg.perturb_phi0.empty() && cfg.perturb_a0.empty()) return data;
  const double scale = std::pow(eps, cfg.perturb_power);
  if (!cfg.perturb_phi0.empty()) {
    data.phi += SpectralField::from_modes(setup.grid, cfg.perturb_phi0, true) * scale;
  }
  if (!cfg.perturb_a0.empty()) {
    data.amp +=
        SpectralField::from_modes(setup.grid, cfg.perturb_a0, false) * scale;
  }
  return data;
}

RateFit fit_rate(std::span<const double> eps, std::span<const double> errors) {
  if (eps.size() != errors.size())
    throw std::invalid_argument("fit_rate: length mismatch");
  RateFit fit;
  if (eps.size() < 3) {
    fit.sufficient = false;
    return fit;
  }
  const double floor = 1e-14;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0)) throw std::invalid_argument("fit_rate: eps must be > 0");
    double e = errors[i];
    if (e < floor) {
      e = floor;
      fit.floored = true;
    }
    xs.push_back(std::log(eps[i]));
    ys.push_back(std::log(e));
  }
  const double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double det = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / det;
  fit.intercept = (sy - fit.slope * sx) / n;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = ys[i] - (fit.slope * xs[i] + fit.intercept);
    rss += d * d;
  }
  fit.residual = std::sqrt(rss / n);
  return fit;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

SweepRow run_single(const ExperimentSetup& setup, const ExperimentConfig& cfg,
                    const Trajectory<WKBState>& limit,
                    const Trajectory<CorrectorState>& corrector, double eps) {
  SweepRow row;
  row.epsilon = eps;
  const auto& schedule = setup.schedule;
  const double ell = setup.ell;
  const auto& nl = setup.nonlinearity;

  const WKBState data = data_for_epsilon(setup, cfg, eps);

  const auto grenier = integrate_grenier(data, eps, nl, schedule, setup.dt_run);

  const WaveField u0 = assemble_initial(data, eps);
  const auto wave = integrate_nls(u0, nl, schedule.T, setup.dt_run);

  // Leading error vs the limit system.
  const TripleError lead = triple_error(grenier, limit, schedule, ell);
  row.err_phi_leading = lead.phi;
  row.err_a_leading = lead.amp;

  // Corrected error vs (phi, a) + eps (phi1, a1).
  Trajectory<WKBState> corrected;
  corrected.dt = limit.dt;
  corrected.schedule = schedule;
  corrected.states.reserve(limit.states.size());
  for (std::size_t k = 0; k < limit.states.size(); ++k) {
    corrected.states.push_back(
        {limit.states[k].phi + corrector.states[k].phi1 * eps,
         limit.states[k].amp + corrector.states[k].amp1 * eps});
  }
  const TripleError corr = triple_error(grenier, corrected, schedule, ell);
  row.err_phi_corrected = corr.phi;
  row.err_a_corrected = corr.amp;

  // Wavefunction error vs a e^{i phi1} e^{i phi / eps}.
  Trajectory<WaveField> approx;
  approx.dt = limit.dt;
  approx.states.reserve(limit.states.size());
  for (std::size_t k = 0; k < limit.states.size(); ++k) {
    approx.states.push_back(approximant_corrected(
        limit.states[k].phi, limit.states[k].amp, corrector.states[k].phi1, eps));
  }
  const SupError wf = error_metrics(wave, approx);
  row.err_wf_l2 = wf.l2;
  row.err_wf_linf = wf.linf;

  // Quadratic observables vs the limit densities.
  const double L = setup.grid->length();
  std::vector<double> diff(setup.grid->size());
  for (std::size_t k = 0; k < wave.states.size(); ++k) {
    const Observables oe = observables(wave.states[k]);
    const Observables ol = observables_limit(limit.states[k]);
    for (int m = 0; m < setup.grid->size(); ++m) diff[m] = oe.rho[m] - ol.rho[m];
    row.err_rho_l1 = std::max(row.err_rho_l1, l1_norm(diff, L));
    row.err_rho_linf = std::max(row.err_rho_linf, linf_norm(diff));
    for (int m = 0; m < setup.grid->size(); ++m)
      diff[m] = oe.current[m] - ol.current[m];
    row.err_current_l1 = std::max(row.err_current_l1, l1_norm(diff, L));
    row.err_current_linf = std::max(row.err_current_linf, linf_norm(diff));
  }

  // A priori bounds of the well-posedness theorem, as ratios <= 1.
  TripleNormAccumulator acc_phi(ell + 1.0, schedule);
  TripleNormAccumulator acc_amp(ell, schedule);
  for (std::size_t k = 0; k < grenier.states.size(); ++k) {
    const double t = grenier.time_at(k);
    acc_phi.observe(t, grenier.states[k].phi);
    acc_amp.observe(t, grenier.states[k].amp);
  }
  const double phi0_norm = analytic_norm(data.phi, schedule.w0, ell + 1.0);
  const double a0_norm = analytic_norm(data.amp, schedule.w0, ell);
  const double amp_bound = 2.0 * a0_norm * a0_norm;
  const double phi_bound = 4.0 * phi0_norm * phi0_norm +
                           std::pow(a0_norm, 4.0 * setup.nonlinearity.sigma);
  const double amp_triple = acc_amp.value();
  const double phi_triple = acc_phi.value();
  row.apriori_amp_ratio =
      amp_bound > 0.0 ? amp_triple * amp_triple / amp_bound : 0.0;
  row.apriori_phi_ratio =
      phi_bound > 0.0 ? phi_triple * phi_triple / phi_bound : 0.0;

  // Conservation and resolution diagnostics.
  const double mass0 = mass(wave.states.front());
  for (std::size_t k = 0; k < wave.states.size(); ++k) {
    row.mass_drift = std::max(
        row.mass_drift, std::abs(mass(wave.states[k]) - mass0) / mass0);
    row.tail_mass = std::max(row.tail_mass, tail_mass_fraction(wave.states[k].u));
  }
  return row;
}

ConvergenceReport run_sweep(const ExperimentConfig& cfg) {
  const ExperimentSetup setup = prepare(cfg);
  ConvergenceReport report;
  report.config_hash = cfg.config_hash.empty() ? std::string("unset")
                                               : cfg.config_hash;
  report.n_modes = cfg.n_modes;
  report.length = cfg.length;
  report.ell = cfg.ell;
  report.dt = setup.dt_run;
  report.schedule = setup.schedule;

  const auto limit =
      solve_limit(setup.data, setup.nonlinearity, setup.schedule, setup.dt_run);
  const auto corrector = integrate_corrector(setup.corrector_data, limit,
                                             setup.nonlinearity, setup.dt_run);

  for (double eps : cfg.epsilons) {
    SweepRow row;
    try {
      row = run_single(setup, cfg, limit, corrector, eps);
    } catch (const std::exception& ex) {
      row.epsilon = eps;
      row.ok = false;
      row.note = ex.what();
      report.warnings.push_back("eps = " + std::to_string(eps) +
                                " excluded from fits: " + ex.what());
    }
    report.rows.push_back(std::move(row));
  }

  std::vector<double> eps_ok, lead, corr, wf, rho, cur;
  for (const auto& row : report.rows) {
    if (!row.ok) continue;
    eps_ok.push_back(row.epsilon);
    lead.push_back(row.err_phi_leading + row.err_a_leading);
    corr.push_back(row.err_phi_corrected + row.err_a_corrected);
    wf.push_back(std::max(row.err_wf_l2, row.err_wf_linf));
    rho.push_back(std::max(row.err_rho_l1, row.err_rho_linf));
    cur.push_back(std::max(row.err_current_l1, row.err_current_linf));
  }
  report.slope_leading = fit_rate(eps_ok, lead);
  report.slope_corrected = fit_rate(eps_ok, corr);
  report.slope_wavefunction = fit_rate(eps_ok, wf);
  report.slope_rho = fit_rate(eps_ok, rho);
  report.slope_current = fit_rate(eps_ok, cur);

  // Leading errors should shrink along the eps list; a violation flags
  // under-resolution but does not fail the run.
  for (std::size_t i = 1; i < lead.size(); ++i) {
    if (!(lead[i] < lead[i - 1])) {
      report.warnings.push_back(
          "leading-order errors are not strictly decreasing along the eps list");
      break;
    }
  }

  double max_amp_ratio = 0.0, max_phi_ratio = 0.0, max_drift = 0.0, max_tail = 0.0;
  for (const auto& row : report.rows) {
    if (!row.ok) continue;
    max_amp_ratio = std::max(max_amp_ratio, row.apriori_amp_ratio);
    max_phi_ratio = std::max(max_phi_ratio, row.apriori_phi_ratio);
    max_drift = std::max(max_drift, row.mass_drift);
    max_tail = std::max(max_tail, row.tail_mass);
  }
  report.checks.push_back(
      {"apriori_amp_ratio", max_amp_ratio, 1.0, max_amp_ratio <= 1.0});
  report.checks.push_back(
      {"apriori_phi_ratio", max_phi_ratio, 1.0, max_phi_ratio <= 1.0});
  report.checks.push_back({"mass_drift", max_drift, 1e-8, max_drift <= 1e-8});
  report.checks.push_back({"tail_mass", max_tail, 1e-8, max_tail <= 1e-8});
  report.checks.push_back({"observable_rho_rate", report.slope_rho.slope, 0.85,
                           report.slope_rho.sufficient &&
                               report.slope_rho.slope >= 0.85});
  report.checks.push_back({"observable_current_rate", report.slope_current.slope,
                           0.85,
                           report.slope_current.sufficient &&
                               report.slope_current.slope >= 0.85});
  return report;
}

// ---------------------------------------------------------------------------
// validation suite
// ---------------------------------------------------------------------------

namespace {

SpectralField random_band_field(const GridPtr& grid, int band, std::mt19937_64& rng,
                                bool real) {
  std::uniform_real_distribution<double> mag(0.5, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> decay(1.2, 2.5);
  const double r = decay(rng);
  std::vector<ModeAmplitude> modes;
  for (int j = real ? 0 : -band; j <= band; ++j) {
    const double xi = grid->frequency_of_mode(j);
    const double rho = mag(rng) * std::exp(-r * (std::sqrt(1.0 + xi * xi) - 1.0));
    const double th = angle(rng);
    const complex_t c = rho * complex_t{std::cos(th), std::sin(th)};
    if (real) {
      if (j == 0) {
        modes.push_back({0, complex_t{c.real(), 0.0}});
      } else {
        modes.push_back({j, c});
        modes.push_back({-j, std::conj(c)});
      }
    } else {
      modes.push_back({j, c});
    }
  }
  return SpectralField::from_modes(grid, modes, real);
}

struct TameStudy {
  double variation = 0.0;       // max_w C_w / min_w C_w
  double peak_over_median = 0.0;  // max_w C_w / median of w = 0 ratios
  double max_ratio = 0.0;       // max_w C_w
};

TameStudy tame_study(double ell, int pairs, unsigned seed) {
  const auto grid = FourierGrid::make(128, 2.0 * M_PI);
  const int band = 30;  // exact products: 2 * band < n/2
  const double m = ell + 0.5, s = ell;
  const std::vector<double> ws = {0.0, 0.25, 1.0};
  std::mt19937_64 rng(seed);

  std::vector<std::vector<double>> ratios(ws.size());
  for (int p = 0; p < pairs; ++p) {
    const auto psi1 = random_band_field(grid, band, rng, false);
    const auto psi2 = random_band_field(grid, band, rng, false);
    const auto prod = pointwise_product(psi1, psi2);
    for (std::size_t wi = 0; wi < ws.size(); ++wi) {
      const double w = ws[wi];
      const double num = analytic_norm(prod, w, m);
      const double den = analytic_norm(psi1, w, m) * analytic_norm(psi2, w, s) +
                         analytic_norm(psi1, w, s) * analytic_norm(psi2, w, m);
      ratios[wi].push_back(num / den);
    }
  }

  TameStudy out;
  std::vector<double> constants;
  for (auto& r : ratios)
    constants.push_back(*std::max_element(r.begin(), r.end()));
  const double cmax = *std::max_element(constants.begin(), constants.end());
  const double cmin = *std::min_element(constants.begin(), constants.end());
  std::vector<double> base = ratios[0];
  std::nth_element(base.begin(), base.begin() + base.size() / 2, base.end());
  const double median0 = base[base.size() / 2];
  out.variation = cmax / cmin;
  out.peak_over_median = cmax / median0;
  out.max_ratio = cmax;
  return out;
}

}  // namespace

std::vector<Check> validate(const ExperimentConfig& cfg) {
  std::vector<Check> checks;
  const auto& nl = cfg.nonlinearity;

  // Product estimate: the empirical constant should be flat across w and
  // covered by the calibrated bound.
  {
    const TameStudy tame = tame_study(cfg.ell, 200, 20240901u);
    checks.push_back(
        {"tame_ratio_variation", tame.variation, 3.0, tame.variation < 3.0});
    checks.push_back({"tame_ratio_peak_vs_median", tame.peak_over_median, 10.0,
                      tame.peak_over_median < 10.0});
    const double cover = tame.max_ratio / tame_constant_bound(cfg.ell);
    checks.push_back({"tame_bound_cover", cover, 1.0, cover <= 1.0});
  }

  // Weighted norms dominate Sobolev norms.
  {
    const auto grid = FourierGrid::make(128, 2.0 * M_PI);
    std::mt19937_64 rng(77001u);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const auto psi = random_band_field(grid, 30, rng, false);
      const double sob = sobolev_norm(psi, cfg.ell);
      for (double w : {0.1, 1.0})
        worst = std::max(worst, sob / analytic_norm(psi, w, cfg.ell));
    }
    checks.push_back(
        {"sobolev_vs_analytic", worst, 1.0 + 1e-12, worst <= 1.0 + 1e-12});
  }

  // Diagnostics on a limit trajectory with a gentle schedule (the residuals
  // do not involve the selected M; they only need w(t) > 0 on [0, T]).
  {
    const auto grid = FourierGrid::make(128, 2.0 * M_PI);
    const WKBState data = cfg.preset.empty()
                              ? WKBState{SpectralField::from_modes(grid, cfg.phi0, true),
                                         SpectralField::from_modes(grid, cfg.a0, false)}
                              : preset_data(grid, cfg.preset);
    const WeightSchedule gentle(0.5, 1.0, 0.4);
    const double dt = 1e-3;
    const auto limit = solve_limit(data, nl, gentle, dt);

    const EulerResidual euler = euler_residual(limit, nl);
    checks.push_back({"euler_residual_velocity", euler.velocity, 1e-4,
                      euler.velocity <= 1e-4});
    checks.push_back(
        {"euler_residual_density", euler.density, 1e-4, euler.density <= 1e-4});

    std::vector<SpectralField> phis, amps, dphis, damps;
    for (const auto& st : limit.states) {
      const WKBState dot = rhs_grenier(st, 0.0, nl);
      phis.push_back(st.phi);
      amps.push_back(st.amp);
      dphis.push_back(dot.phi);
      damps.push_back(dot.amp);
    }
    const double res_phi =
        norm_evolution_residual(phis, dphis, dt, gentle, cfg.ell + 1.0);
    const double res_amp =
        norm_evolution_residual(amps, damps, dt, gentle, cfg.ell);
    const double res = std::max(res_phi, res_amp);
    checks.push_back({"evol_norm_residual", res, 1e-3, res <= 1e-3});
  }

  // Exact solutions.
  {
    // Plane wave: u = A exp(i(kx - omega t)/eps) with k L / eps in 2 pi Z.
    const auto grid = FourierGrid::make(64, 2.0 * M_PI);
    const double eps = 0.5, A = 1.0;
    const int mode = 2;
    const double k = eps * grid->frequency_of_mode(mode);
    const double omega =
        0.5 * k * k + 0.5 * k * nl.g(A * A) + nl.f(A * A);
    std::vector<ModeAmplitude> init = {{mode, complex_t{A, 0.0}}};
    WaveField u0{SpectralField::from_modes(grid, init, false), eps};
    const double T = 0.3, dt = 1e-3;
    const auto traj = integrate_nls(u0, nl, T, dt);
    const double theta = -omega * T / eps;
    const complex_t expected = A * complex_t{std::cos(theta), std::sin(theta)};
    const complex_t got = traj.states.back().u.at_mode(mode);
    double err = std::abs(got - expected) / std::abs(expected);
    for (int j = -31; j <= 32; ++j) {
      if (j == mode) continue;
      err = std::max(err, std::abs(traj.states.back().u.at_mode(j)) / A);
    }
    checks.push_back({"plane_wave_error", err, 1e-8, err <= 1e-8});
  }
  {
    // Free single mode: g = f = 0 evolves by the exact dispersive phase.
    const auto grid = FourierGrid::make(64, 2.0 * M_PI);
    NonlinearitySpec free_nl{0.0, 1, 0.0, 1};
    const double eps = 0.25;
    const int mode = 3;
    std::vector<ModeAmplitude> init = {{mode, complex_t{0.8, 0.3}}};
    WaveField u0{SpectralField::from_modes(grid, init, false), eps};
    const double T = 0.2, dt = 1e-3;
    const auto traj = integrate_nls(u0, free_nl, T, dt);
    const double xi = grid->frequency_of_mode(mode);
    const double theta = -0.5 * eps * xi * xi * T;
    const complex_t expected =
        complex_t{0.8, 0.3} * complex_t{std::cos(theta), std::sin(theta)};
    const double err = std::abs(traj.states.back().u.at_mode(mode) - expected) /
                       std::abs(expected);
    checks.push_back(
        {"free_schrodinger_error", err, 1e-10, err <= 1e-10});
  }
  {
    // Constant data: phi(t) = -t f(|c|^2), a(t) = c, for every eps.
    const auto grid = FourierGrid::make(64, 2.0 * M_PI);
    const complex_t c{0.9, 0.2};
    WKBState data{SpectralField::zero(grid, true),
                  SpectralField::from_modes(
                      grid, std::vector<ModeAmplitude>{{0, c}}, false)};
    const WeightSchedule gentle(0.5, 1.0, 0.4);
    const auto traj = integrate_grenier(data, 0.5, nl, gentle, 1e-3);
    const double expected_phi = -gentle.T * nl.f(std::norm(c));
    double err = std::abs(traj.states.back().phi.at_mode(0) - expected_phi);
    err = std::max(err, std::abs(traj.states.back().amp.at_mode(0) - c));
    for (int j = -31; j <= 32; ++j) {
      if (j == 0) continue;
      err = std::max(err, std::abs(traj.states.back().phi.at_mode(j)));
      err = std::max(err, std::abs(traj.states.back().amp.at_mode(j)));
    }
    checks.push_back({"constant_data_error", err, 1e-10, err <= 1e-10});
  }

  // Theorem-level bounds and the fixed-point construction on the config data.
  {
    const ExperimentSetup setup = prepare(cfg);
    double max_amp_ratio = 0.0, max_phi_ratio = 0.0;
    for (double eps : cfg.epsilons) {
      const auto traj =
          integrate_grenier(setup.data, eps, nl, setup.schedule, setup.dt_run);
      TripleNormAccumulator acc_phi(setup.ell + 1.0, setup.schedule);
      TripleNormAccumulator acc_amp(setup.ell, setup.schedule);
      for (std::size_t k = 0; k < traj.states.size(); ++k) {
        acc_phi.observe(traj.time_at(k), traj.states[k].phi);
        acc_amp.observe(traj.time_at(k), traj.states[k].amp);
      }
      const double phi0_norm =
          analytic_norm(setup.data.phi, cfg.w0, setup.ell + 1.0);
      const double a0_norm = analytic_norm(setup.data.amp, cfg.w0, setup.ell);
      max_amp_ratio =
          std::max(max_amp_ratio, acc_amp.value() * acc_amp.value() /
                                      (2.0 * a0_norm * a0_norm));
      max_phi_ratio = std::max(
          max_phi_ratio,
          acc_phi.value() * acc_phi.value() /
              (4.0 * phi0_norm * phi0_norm + std::pow(a0_norm, 4.0 * nl.sigma)));
    }
    checks.push_back(
        {"apriori_amp_ratio", max_amp_ratio, 1.0, max_amp_ratio <= 1.0});
    checks.push_back(
        {"apriori_phi_ratio", max_phi_ratio, 1.0, max_phi_ratio <= 1.0});

    const double eps_mid =
        cfg.epsilons[cfg.epsilons.size() / 2];
    const auto [fixed, diag] = iterate_scheme(setup.data, eps_mid, nl,
                                              setup.schedule, setup.dt_run,
                                              setup.ell, 12, 1e-7);
    double worst_ratio = 0.0;
    for (std::size_t i = 2; i < diag.ratios.size(); ++i)
      worst_ratio = std::max(worst_ratio, diag.ratios[i]);
    checks.push_back({"scheme_contraction_ratio", worst_ratio, 1.0,
                      !diag.diverged && worst_ratio < 1.0});
    const auto direct =
        integrate_grenier(setup.data, eps_mid, nl, setup.schedule, setup.dt_run);
    const TripleError gap = triple_error(fixed, direct, setup.schedule, setup.ell);
    const double gap_total = gap.phi + gap.amp;
    checks.push_back(
        {"scheme_vs_direct", gap_total, 1e-6, gap_total <= 1e-6});
  }

  // Mass conservation at eps = 0.1 over the selected window.
  {
    const ExperimentSetup setup = prepare(cfg);
    const WaveField u0 = assemble_initial(setup.data, 0.1);
    const auto traj = integrate_nls(u0, nl, setup.schedule.T, setup.dt_run);
    const double m0 = mass(traj.states.front());
    double drift = 0.0;
    for (const auto& s : traj.states)
      drift = std::max(drift, std::abs(mass(s) - m0) / m0);
    checks.push_back({"mass_drift", drift, 1e-8, drift <= 1e-8});
  }

  // Linearized system vs the directional derivative of the eps = 0 flow.
  {
    const auto grid = FourierGrid::make(128, 2.0 * M_PI);
    const WKBState background = preset_data(grid, "analytic-bump");
    std::mt19937_64 rng(5150u);
    CorrectorState dir{random_band_field(grid, 6, rng, true) * 0.3,
                       random_band_field(grid, 6, rng, false) * 0.3};
    const CorrectorState lin = rhs_linearized(dir, background, nl);

    const double tau = 1e-4;
    WKBState plus{background.phi + dir.phi1 * tau,
                  background.amp + dir.amp1 * tau};
    WKBState minus{background.phi - dir.phi1 * tau,
                   background.amp - dir.amp1 * tau};
    const WKBState rp = rhs_grenier(plus, 0.0, nl);
    const WKBState rm = rhs_grenier(minus, 0.0, nl);
    const SpectralField fd_phi = (rp.phi - rm.phi) * (0.5 / tau);
    SpectralField fd_amp = (rp.amp - rm.amp) * (0.5 / tau);
    fd_amp += background.amp.derivative(2) * complex_t{0.0, 0.5};

    const double num = sobolev_norm(lin.phi1 - fd_phi, 0.0) +
                       sobolev_norm(lin.amp1 - fd_amp, 0.0);
    const double den = std::max(
        1.0, sobolev_norm(fd_phi, 0.0) + sobolev_norm(fd_amp, 0.0));
    const double err = num / den;
    checks.push_back({"linearization_fd_error", err, 1e-5, err <= 1e-5});
  }

  return checks;
}

// ---------------------------------------------------------------------------
// report emission
// ---------------------------------------------------------------------------

namespace {

ordered_json fit_to_json(const RateFit& fit) {
  return ordered_json{{"slope", fit.slope},
                      {"intercept", fit.intercept},
                      {"residual", fit.residual},
                      {"floored", fit.floored},
                      {"sufficient", fit.sufficient}};
}

RateFit fit_from_json(const ordered_json& j) {
  RateFit fit;
  fit.slope = j.at("slope").get<double>();
  fit.intercept = j.at("intercept").get<double>();
  fit.residual = j.at("residual").get<double>();
  fit.floored = j.at("floored").get<bool>();
  fit.sufficient = j.at("sufficient").get<bool>();
  return fit;
}

}  // namespace

void emit_report(const ConvergenceReport& report, const std::string& format,
                 const std::string& dir) {
  if (format != "csv" && format != "json")
    throw std::invalid_argument("emit_report: format must be csv or json");
  std::filesystem::create_directories(dir);
  const std::filesystem::path path =
      std::filesystem::path(dir) / ("report." + format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("emit_report: cannot write " + path.string());

  if (format == "csv") {
    out << "epsilon,err_phi_leading,err_a_leading,err_phi_corrected,"
           "err_a_corrected,err_wf_L2,err_wf_Linf,err_rho_L1,err_J_L1\n";
    char buf[256];
    for (const auto& row : report.rows) {
      std::snprintf(buf, sizeof(buf),
                    "%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e\n",
                    row.epsilon, row.err_phi_leading, row.err_a_leading,
                    row.err_phi_corrected, row.err_a_corrected, row.err_wf_l2,
                    row.err_wf_linf, row.err_rho_l1, row.err_current_l1);
      out << buf;
    }
    return;
  }

  ordered_json j;
  j["config_hash"] = report.config_hash;
  j["grid"] = ordered_json{{"n_modes", report.n_modes}, {"length", report.length}};
  j["ell"] = report.ell;
  j["dt"] = report.dt;
  j["schedule"] = ordered_json{{"w0", report.schedule.w0},
                               {"M", report.schedule.M},
                               {"T", report.schedule.T}};
  j["rows"] = ordered_json::array();
  for (const auto& row : report.rows) {
    j["rows"].push_back(ordered_json{{"epsilon", row.epsilon},
                                     {"err_phi_leading", row.err_phi_leading},
                                     {"err_a_leading", row.err_a_leading},
                                     {"err_phi_corrected", row.err_phi_corrected},
                                     {"err_a_corrected", row.err_a_corrected},
                                     {"err_wf_L2", row.err_wf_l2},
                                     {"err_wf_Linf", row.err_wf_linf},
                                     {"err_rho_L1", row.err_rho_l1},
                                     {"err_rho_Linf", row.err_rho_linf},
                                     {"err_J_L1", row.err_current_l1},
                                     {"err_J_Linf", row.err_current_linf},
                                     {"apriori_amp_ratio", row.apriori_amp_ratio},
                                     {"apriori_phi_ratio", row.apriori_phi_ratio},
                                     {"mass_drift", row.mass_drift},
                                     {"tail_mass", row.tail_mass},
                                     {"ok", row.ok},
                                     {"note", row.note}});
  }
  j["slopes"] = ordered_json{{"leading", fit_to_json(report.slope_leading)},
                             {"corrected", fit_to_json(report.slope_corrected)},
                             {"wavefunction", fit_to_json(report.slope_wavefunction)}};
  j["checks"] = ordered_json::array();
  for (const auto& c : report.checks) {
    j["checks"].push_back(ordered_json{{"name", c.name},
                                       {"value", c.value},
                                       {"threshold", c.threshold},
                                       {"pass", c.pass}});
  }
  j["warnings"] = report.warnings;
  out << j.dump(2) << "\n";
}

ConvergenceReport report_from_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("report_from_json: cannot open " + path);
  ordered_json j = ordered_json::parse(in);

  ConvergenceReport report;
  report.config_hash = j.at("config_hash").get<std::string>();
  report.n_modes = j.at("grid").at("n_modes").get<int>();
  report.length = j.at("grid").at("length").get<double>();
  report.ell = j.at("ell").get<double>();
  report.dt = j.at("dt").get<double>();
  report.schedule = WeightSchedule(j.at("schedule").at("w0").get<double>(),
                                   j.at("schedule").at("M").get<double>(),
                                   j.at("schedule").at("T").get<double>());
  for (const auto& r : j.at("rows")) {
    SweepRow row;
    row.epsilon = r.at("epsilon").get<double>();
    row.err_phi_leading = r.at("err_phi_leading").get<double>();
    row.err_a_leading = r.at("err_a_leading").get<double>();
    row.err_phi_corrected = r.at("err_phi_corrected").get<double>();
    row.err_a_corrected = r.at("err_a_corrected").get<double>();
    row.err_wf_l2 = r.at("err_wf_L2").get<double>();
    row.err_wf_linf = r.at("err_wf_Linf").get<double>();
    row.err_rho_l1 = r.at("err_rho_L1").get<double>();
    row.err_rho_linf = r.at("err_rho_Linf").get<double>();
    row.err_current_l1 = r.at("err_J_L1").get<double>();
    row.err_current_linf = r.at("err_J_Linf").get<double>();
    row.apriori_amp_ratio = r.at("apriori_amp_ratio").get<double>();
    row.apriori_phi_ratio = r.at("apriori_phi_ratio").get<double>();
    row.mass_drift = r.at("mass_drift").get<double>();
    row.tail_mass = r.at("tail_mass").get<double>();
    row.ok = r.at("ok").get<bool>();
    row.note = r.at("note").get<std::string>();
    report.rows.push_back(std::move(row));
  }
  report.slope_leading = fit_from_json(j.at("slopes").at("leading"));
  report.slope_corrected = fit_from_json(j.at("slopes").at("corrected"));
  report.slope_wavefunction = fit_from_json(j.at("slopes").at("wavefunction"));
  for (const auto& c : j.at("checks")) {
    report.checks.push_back({c.at("name").get<std::string>(),
                             c.at("value").get<double>(),
                             c.at("threshold").get<double>(),
                             c.at("pass").get<bool>()});
  }
  for (const auto& w : j.at("warnings"))
    report.warnings.push_back(w.get<std::string>());
  return report;
}

}  // namespace gdnls
