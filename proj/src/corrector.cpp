#include "gdnls/corrector.hpp"

#include <cmath>
#include <stdexcept>

namespace gdnls {

CorrectorState rhs_linearized(const CorrectorState& corr, const WKBState& background,
                              const NonlinearitySpec& nl) {
  const auto& grid = corr.phi1.grid();
  if (grid != background.phi.grid())
    throw std::invalid_argument("rhs_linearized: corrector/background grid mismatch");
  const int n = grid->size();

  const auto bphi_x = background.phi.derivative(1).real_samples();
  const auto bphi_xx = background.phi.derivative(2).real_samples();
  const auto ba = background.amp.samples();
  const auto ba_x = background.amp.derivative(1).samples();

  const auto cphi_x = corr.phi1.derivative(1).real_samples();
  const auto cphi_xx = corr.phi1.derivative(2).real_samples();
  const auto ca = corr.amp1.samples();
  const auto ca_x = corr.amp1.derivative(1).samples();

  std::vector<double> phi_dot(n);
  std::vector<complex_t> transport(n), flux(n);
  for (int m = 0; m < n; ++m) {
    const double dens = std::norm(ba[m]);
    const double gs = nl.g(dens);
    const double gp = nl.g_prime(dens);
    const double fp = nl.f_prime(dens);
    const double cross = (std::conj(ba[m]) * ca[m]).real();  // Re(conj(a) a1)

    phi_dot[m] = -(bphi_x[m] + 0.5 * gs) * cphi_x[m] -
                 (gp * bphi_x[m] + 2.0 * fp) * cross;

    transport[m] = -bphi_x[m] * ca_x[m] - 0.5 * ca[m] * bphi_xx[m] -
                   ba_x[m] * cphi_x[m] - 0.5 * ba[m] * cphi_xx[m];
    flux[m] = gs * ca[m] + 2.0 * ba[m] * gp * cross;
  }

  SpectralField dphi1 = SpectralField::from_real_samples(grid, phi_dot).dealiased();
  SpectralField damp1 = SpectralField::from_samples(grid, transport).dealiased();
  damp1 += SpectralField::from_samples(grid, flux).dealiased().derivative(1) * (-0.5);
  damp1 += background.amp.derivative(2) * complex_t{0.0, 0.5};  // source

  if (!dphi1.all_finite() || !damp1.all_finite())
    throw SolverAbort("rhs_linearized: NaN in derivative", 0.0);
  return {std::move(dphi1), std::move(damp1)};
}

Trajectory<CorrectorState> integrate_corrector(const CorrectorState& initial,
                                               const Trajectory<WKBState>& background,
                                               const NonlinearitySpec& nl, double dt) {
  if (background.states.size() < 2)
    throw std::invalid_argument("integrate_corrector: background too short");
  if (std::abs(background.dt - dt) > 1e-9 * dt)
    throw std::invalid_argument("integrate_corrector: background dt mismatch");
  if (initial.phi1.grid() != background.states.front().phi.grid())
    throw std::invalid_argument("integrate_corrector: grid mismatch");
  nl.check();

  const long n_steps = static_cast<long>(background.states.size()) - 1;
  // Source-driven: the growth guard is taken off the background scale.
  const double base_norm = sobolev_norm(initial.phi1, 0.0) +
                           sobolev_norm(initial.amp1, 0.0) +
                           sobolev_norm(background.states.front().amp, 0.0) + 1.0;

  Trajectory<CorrectorState> traj;
  traj.dt = dt;
  traj.schedule = background.schedule;
  traj.states.reserve(n_steps + 1);
  CorrectorState y = initial;
  traj.states.push_back(y);

  for (long step = 0; step < n_steps; ++step) {
    const double t = dt * step;
    const WKBState& b0 = background.states[step];
    const WKBState bmid = interpolate(background, t + 0.5 * dt);
    const WKBState& b1 = background.states[step + 1];

    const CorrectorState k1 = rhs_linearized(y, b0, nl);
    CorrectorState u2 = y;
    u2.add_scaled(k1, 0.5 * dt);
    const CorrectorState k2 = rhs_linearized(u2, bmid, nl);
    CorrectorState u3 = y;
    u3.add_scaled(k2, 0.5 * dt);
    const CorrectorState k3 = rhs_linearized(u3, bmid, nl);
    CorrectorState u4 = y;
    u4.add_scaled(k3, dt);
    const CorrectorState k4 = rhs_linearized(u4, b1, nl);

    CorrectorState next = y;
    next.add_scaled(k1, dt / 6.0);
    next.add_scaled(k2, dt / 3.0);
    next.add_scaled(k3, dt / 3.0);
    next.add_scaled(k4, dt / 6.0);

    next.phi1.floor_small();
    next.amp1.floor_small();
    if (!next.phi1.all_finite() || !next.amp1.all_finite())
      throw SolverAbort("corrector: NaN in state", t + dt);
    const double norm = sobolev_norm(next.phi1, 0.0) + sobolev_norm(next.amp1, 0.0);
    if (norm > 10.0 * base_norm)
      throw SolverAbort("corrector: norm growth beyond 10x initial scale", t + dt);
    y = std::move(next);
    traj.states.push_back(y);
  }
  return traj;
}

}  // namespace gdnls
