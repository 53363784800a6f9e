#include "gdnls/grenier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gdnls {

namespace {

long step_count(double T, double dt) {
  const long n = std::lround(T / dt);
  if (n < 1 || std::abs(n * dt - T) > 1e-9 * std::max(T, 1.0))
    throw std::invalid_argument("integrate: dt must divide T");
  return n;
}

// exp(-i eps xi^2 tau / 2) per coefficient slot
std::vector<complex_t> dispersion_factors(const FourierGrid& grid, double eps,
                                          double tau) {
  std::vector<complex_t> out(grid.size());
  const auto& xi = grid.frequencies();
  for (int k = 0; k < grid.size(); ++k) {
    const double phase = -0.5 * eps * xi[k] * xi[k] * tau;
    out[k] = complex_t{std::cos(phase), std::sin(phase)};
  }
  return out;
}

SpectralField apply_factors(const SpectralField& f,
                            const std::vector<complex_t>& factors) {
  std::vector<complex_t> coef(f.coefficients().begin(), f.coefficients().end());
  for (std::size_t k = 0; k < coef.size(); ++k) coef[k] *= factors[k];
  return SpectralField::from_coefficients(f.grid(), std::move(coef), false);
}

// Nonstiff part of the right-hand side (everything except (i eps/2) dxx a).
WKBState rhs_nonstiff(const WKBState& state, const NonlinearitySpec& nl) {
  const auto& grid = state.phi.grid();
  const int n = grid->size();

  const auto phi_x = state.phi.derivative(1).real_samples();
  const auto phi_xx = state.phi.derivative(2).real_samples();
  const auto a = state.amp.samples();
  const auto a_x = state.amp.derivative(1).samples();

  std::vector<double> dens(n), gs(n), fs(n);
  for (int m = 0; m < n; ++m) {
    dens[m] = std::norm(a[m]);
    gs[m] = nl.g(dens[m]);
    fs[m] = nl.f(dens[m]);
  }

  std::vector<double> phi_dot(n);
  for (int m = 0; m < n; ++m)
    phi_dot[m] = -0.5 * phi_x[m] * phi_x[m] - 0.5 * gs[m] * phi_x[m] - fs[m];
  SpectralField dphi =
      SpectralField::from_real_samples(grid, phi_dot).dealiased();

  std::vector<complex_t> transport(n), flux(n);
  for (int m = 0; m < n; ++m) {
    transport[m] = -phi_x[m] * a_x[m] - 0.5 * a[m] * phi_xx[m];
    flux[m] = gs[m] * a[m];
  }
  SpectralField damp = SpectralField::from_samples(grid, transport).dealiased();
  damp += SpectralField::from_samples(grid, flux).dealiased().derivative(1) * (-0.5);

  return {std::move(dphi), std::move(damp)};
}

void check_state(const WKBState& s, double t, double base_norm) {
  if (!s.phi.all_finite() || !s.amp.all_finite())
    throw SolverAbort("grenier: NaN in state", t);
  const double norm = sobolev_norm(s.phi, 0.0) + sobolev_norm(s.amp, 0.0);
  if (norm > 10.0 * base_norm + 1e-9)
    throw SolverAbort("grenier: norm growth beyond 10x initial", t);
}

}  // namespace

WKBState rhs_grenier(const WKBState& state, double eps, const NonlinearitySpec& nl) {
  if (eps < 0.0 || eps > 1.0)
    throw std::invalid_argument("rhs_grenier: eps must lie in [0, 1]");
  WKBState out = rhs_nonstiff(state, nl);
  if (eps != 0.0)
    out.amp += state.amp.derivative(2) * complex_t{0.0, 0.5 * eps};
  if (!out.phi.all_finite() || !out.amp.all_finite())
    throw SolverAbort("rhs_grenier: NaN in derivative", 0.0);
  return out;
}

Trajectory<WKBState> integrate_grenier(const WKBState& initial, double eps,
                                       const NonlinearitySpec& nl,
                                       const WeightSchedule& schedule, double dt) {
  if (eps < 0.0 || eps > 1.0)
    throw std::invalid_argument("integrate_grenier: eps must lie in [0, 1]");
  nl.check();
  const long n_steps = step_count(schedule.T, dt);
  const auto& grid = initial.phi.grid();

  const auto e_half = dispersion_factors(*grid, eps, 0.5 * dt);
  const auto e_full = dispersion_factors(*grid, eps, dt);
  const bool stiff = eps != 0.0;
  auto half = [&](const SpectralField& f) {
    return stiff ? apply_factors(f, e_half) : f;
  };
  auto full = [&](const SpectralField& f) {
    return stiff ? apply_factors(f, e_full) : f;
  };

  const double base_norm =
      sobolev_norm(initial.phi, 0.0) + sobolev_norm(initial.amp, 0.0);

  Trajectory<WKBState> traj;
  traj.dt = dt;
  traj.schedule = schedule;
  traj.states.reserve(n_steps + 1);
  WKBState y = initial;
  y.phi.floor_small();
  y.amp.floor_small();
  traj.states.push_back(y);

  for (long step = 0; step < n_steps; ++step) {
    const double t = dt * step;

    const WKBState k1 = rhs_nonstiff(y, nl);

    WKBState u2 = y;
    u2.add_scaled(k1, 0.5 * dt);
    u2.amp = half(u2.amp);
    const WKBState k2 = rhs_nonstiff(u2, nl);

    WKBState u3{y.phi, half(y.amp)};
    u3.add_scaled(k2, 0.5 * dt);
    const WKBState k3 = rhs_nonstiff(u3, nl);

    WKBState u4{y.phi, full(y.amp)};
    u4.phi += k3.phi * dt;
    u4.amp += half(k3.amp) * dt;
    const WKBState k4 = rhs_nonstiff(u4, nl);

    WKBState next{y.phi, full(y.amp)};
    next.phi += (k1.phi + k2.phi * 2.0 + k3.phi * 2.0 + k4.phi) * (dt / 6.0);
    next.amp += (full(k1.amp) + half(k2.amp) * 2.0 + half(k3.amp) * 2.0 + k4.amp) *
                (dt / 6.0);

    next.phi.floor_small();
    next.amp.floor_small();
    check_state(next, t + dt, base_norm);
    y = std::move(next);
    traj.states.push_back(y);
  }
  return traj;
}

Trajectory<WKBState> solve_limit(const WKBState& initial, const NonlinearitySpec& nl,
                                 const WeightSchedule& schedule, double dt) {
  return integrate_grenier(initial, 0.0, nl, schedule, dt);
}

namespace {

// Coefficient bundle of one background state, for the frozen-coefficient sweep.
struct FrozenCoefficients {
  std::vector<double> phi_x;
  std::vector<double> phi_xx;
  std::vector<double> gs;        // g(|a|^2)
  std::vector<double> fs;        // f(|a|^2)
  std::vector<double> gs_x;      // dx g(|a|^2), spectral derivative
  std::vector<complex_t> htail;  // (1/2) h(|a|^2) conj(a) dx a
};

FrozenCoefficients freeze(const WKBState& b, const NonlinearitySpec& nl) {
  const auto& grid = b.phi.grid();
  const int n = grid->size();
  FrozenCoefficients out;
  out.phi_x = b.phi.derivative(1).real_samples();
  out.phi_xx = b.phi.derivative(2).real_samples();
  const auto a = b.amp.samples();
  const auto a_x = b.amp.derivative(1).samples();
  out.gs.resize(n);
  out.fs.resize(n);
  out.htail.resize(n);
  for (int m = 0; m < n; ++m) {
    const double dens = std::norm(a[m]);
    out.gs[m] = nl.g(dens);
    out.fs[m] = nl.f(dens);
    out.htail[m] = 0.5 * nl.h(dens) * std::conj(a[m]) * a_x[m];
  }
  out.gs_x = SpectralField::from_real_samples(grid, out.gs)
                 .dealiased()
                 .derivative(1)
                 .real_samples();
  return out;
}

// Linear sweep right-hand side with frozen coefficients (nonstiff part).
WKBState rhs_sweep(const WKBState& y, const FrozenCoefficients& c) {
  const auto& grid = y.phi.grid();
  const int n = grid->size();

  const auto yphi_x = y.phi.derivative(1).real_samples();
  const auto ya = y.amp.samples();
  const auto ya_x = y.amp.derivative(1).samples();

  std::vector<double> phi_dot(n);
  for (int m = 0; m < n; ++m)
    phi_dot[m] = -0.5 * c.phi_x[m] * yphi_x[m] - 0.5 * c.gs[m] * yphi_x[m] - c.fs[m];

  std::vector<complex_t> amp_dot(n);
  for (int m = 0; m < n; ++m) {
    amp_dot[m] = -c.phi_x[m] * ya_x[m] - 0.5 * ya[m] * c.phi_xx[m] -
                 0.5 * c.gs_x[m] * ya[m] - c.htail[m] * ya[m];
  }

  return {SpectralField::from_real_samples(grid, phi_dot).dealiased(),
          SpectralField::from_samples(grid, amp_dot).dealiased()};
}

Trajectory<WKBState> sweep_once(const WKBState& initial,
                                const Trajectory<WKBState>& background, double eps,
                                const NonlinearitySpec& nl,
                                const WeightSchedule& schedule, double dt) {
  const long n_steps = step_count(schedule.T, dt);
  const auto& grid = initial.phi.grid();
  const auto e_half = dispersion_factors(*grid, eps, 0.5 * dt);
  const auto e_full = dispersion_factors(*grid, eps, dt);
  const bool stiff = eps != 0.0;
  auto half = [&](const SpectralField& f) {
    return stiff ? apply_factors(f, e_half) : f;
  };
  auto full = [&](const SpectralField& f) {
    return stiff ? apply_factors(f, e_full) : f;
  };

  const double base_norm =
      sobolev_norm(initial.phi, 0.0) + sobolev_norm(initial.amp, 0.0);

  Trajectory<WKBState> traj;
  traj.dt = dt;
  traj.schedule = schedule;
  traj.states.reserve(n_steps + 1);
  WKBState y = initial;
  traj.states.push_back(y);

  for (long step = 0; step < n_steps; ++step) {
    const double t = dt * step;
    const auto c0 = freeze(background.states[step], nl);
    const auto cmid = freeze(interpolate(background, t + 0.5 * dt), nl);
    const auto c1 = freeze(background.states[step + 1], nl);

    const WKBState k1 = rhs_sweep(y, c0);

    WKBState u2 = y;
    u2.add_scaled(k1, 0.5 * dt);
    u2.amp = half(u2.amp);
    const WKBState k2 = rhs_sweep(u2, cmid);

    WKBState u3{y.phi, half(y.amp)};
    u3.add_scaled(k2, 0.5 * dt);
    const WKBState k3 = rhs_sweep(u3, cmid);

    WKBState u4{y.phi, full(y.amp)};
    u4.phi += k3.phi * dt;
    u4.amp += half(k3.amp) * dt;
    const WKBState k4 = rhs_sweep(u4, c1);

    WKBState next{y.phi, full(y.amp)};
    next.phi += (k1.phi + k2.phi * 2.0 + k3.phi * 2.0 + k4.phi) * (dt / 6.0);
    next.amp += (full(k1.amp) + half(k2.amp) * 2.0 + half(k3.amp) * 2.0 + k4.amp) *
                (dt / 6.0);

    next.phi.floor_small();
    next.amp.floor_small();
    check_state(next, t + dt, base_norm);
    y = std::move(next);
    traj.states.push_back(y);
  }
  return traj;
}

// ||| phi_a - phi_b |||_{l+1,T} and ||| a_a - a_b |||_{l,T}
std::pair<double, double> trajectory_difference(const Trajectory<WKBState>& a,
                                                const Trajectory<WKBState>& b,
                                                const WeightSchedule& schedule,
                                                double ell) {
  TripleNormAccumulator acc_phi(ell + 1.0, schedule);
  TripleNormAccumulator acc_amp(ell, schedule);
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    const double t = a.time_at(k);
    acc_phi.observe(t, a.states[k].phi - b.states[k].phi);
    acc_amp.observe(t, a.states[k].amp - b.states[k].amp);
  }
  return {acc_phi.value(), acc_amp.value()};
}

}  // namespace

std::pair<Trajectory<WKBState>, SchemeDiagnostics> iterate_scheme(
    const WKBState& initial, double eps, const NonlinearitySpec& nl,
    const WeightSchedule& schedule, double dt, double ell, int j_max, double tol) {
  if (j_max < 2) throw std::invalid_argument("iterate_scheme: j_max must be >= 2");
  nl.check();
  const long n_steps = step_count(schedule.T, dt);

  // Iterate 0 is the time-independent extension of the data.
  Trajectory<WKBState> prev;
  prev.dt = dt;
  prev.schedule = schedule;
  prev.states.assign(n_steps + 1, initial);

  SchemeDiagnostics diag;
  Trajectory<WKBState> current;
  int rising = 0;
  for (int j = 0; j < j_max; ++j) {
    current = sweep_once(initial, prev, eps, nl, schedule, dt);
    const auto [dphi, damp] = trajectory_difference(current, prev, schedule, ell);
    diag.phi_increments.push_back(dphi);
    diag.amp_increments.push_back(damp);
    diag.iterations = j + 1;
    const std::size_t m = diag.phi_increments.size();
    if (m >= 2) {
      const double prev_inc =
          diag.phi_increments[m - 2] + diag.amp_increments[m - 2];
      const double cur_inc = dphi + damp;
      const double ratio = prev_inc > 0.0
                               ? cur_inc / prev_inc
                               : (cur_inc > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      diag.ratios.push_back(ratio);
      rising = ratio > 1.0 ? rising + 1 : 0;
      if (rising >= 3) {
        diag.diverged = true;
        break;
      }
    }
    prev = current;
    if (dphi + damp < tol) {
      diag.converged = true;
      break;
    }
  }
  return {std::move(current), std::move(diag)};
}

double tame_constant_bound(double ell) {
  // Calibrated against the measured product-estimate ratios on random
  // band-limited pairs (see the validation suite); the measured constants sit
  // near 0.4 for ell ~ 2 and grow slowly, so this stays a comfortable bound
  // while keeping the selected M within a usable range.
  return 0.5 + 0.25 * ell;
}

WeightSchedule select_schedule(double ell, double phi0_norm, double a0_norm,
                               double w0, const NonlinearitySpec& nl) {
  if (!(ell > 1.0))
    throw std::invalid_argument("select_schedule: ell must exceed 1");
  if (phi0_norm < 0.0 || a0_norm < 0.0 || !(w0 > 0.0))
    throw std::invalid_argument("select_schedule: norms must be >= 0 and w0 > 0");
  nl.check();
  const double C = tame_constant_bound(ell);
  const double a_sq = a0_norm * a0_norm;

  // Quadratic-in-M^2 condition: M^2/(16 C^2) >= 4 phi^2 + (4 C^2 / M^2) (2 a^2)^(2 sigma).
  const double P = 4.0 * phi0_norm * phi0_norm;
  const double A = std::pow(2.0 * a_sq, 2.0 * nl.sigma);
  const double m_quad = std::sqrt(8.0 * C * C * (P + std::sqrt(P * P + A)));

  double M = C;  // floor when the data vanish
  M = std::max(M, m_quad);
  M = std::max(M, 4.0 * C * std::pow(2.0 * a_sq, static_cast<double>(nl.gamma)));
  M = std::max(M, 4.0 * C * phi0_norm);
  M = std::max(M, 4.0 * C * std::pow(a_sq, static_cast<double>(nl.gamma)));
  if (a0_norm > 0.0) {
    // keeps the residual term (4 C^2 / M^2)(2 a^2)^(2 sigma) below a^(4 sigma)
    M = std::max(M, 2.0 * C * std::pow(2.0, static_cast<double>(nl.sigma)));
  }

  constexpr double kSafety = 2.0;
  M *= kSafety;
  return WeightSchedule(w0, M, 0.9 * w0 / M);
}

}  // namespace gdnls
