#include "gdnls/nls.hpp"

#include <cmath>
#include <stdexcept>

namespace gdnls {

namespace {

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

// N(u) = -1/2 dx( g(|u|^2) u ) - (i / eps) f(|u|^2) u
SpectralField rhs_nonlinear(const SpectralField& u, double eps,
                            const NonlinearitySpec& nl) {
  const auto& grid = u.grid();
  const int n = grid->size();
  const auto us = u.samples();
  std::vector<complex_t> flux(n), force(n);
  const complex_t minus_i_over_eps{0.0, -1.0 / eps};
  for (int m = 0; m < n; ++m) {
    const double dens = std::norm(us[m]);
    flux[m] = nl.g(dens) * us[m];
    force[m] = minus_i_over_eps * nl.f(dens) * us[m];
  }
  SpectralField out =
      SpectralField::from_samples(grid, flux).dealiased().derivative(1) * (-0.5);
  out += SpectralField::from_samples(grid, force).dealiased();
  return out;
}

}  // namespace

double tail_mass_fraction(const SpectralField& u) {
  const auto& grid = u.grid();
  const int limit = grid->dealias_mode_limit();
  const auto coef = u.coefficients();
  double tail = 0.0, total = 0.0;
  for (int k = 0; k < grid->size(); ++k) {
    const double m = std::norm(coef[k]);
    total += m;
    if (std::abs(grid->mode_of(k)) > limit) tail += m;
  }
  return total > 0.0 ? tail / total : 0.0;
}

WaveField assemble_initial(const WKBState& data, double eps, double tail_guard) {
  if (!(eps > 0.0)) throw std::invalid_argument("assemble_initial: eps must be > 0");
  if (!data.phi.is_real() || data.phi.hermitian_defect() > 1e-12)
    throw std::invalid_argument("assemble_initial: phase must be real");
  const auto& grid = data.phi.grid();
  const auto phi = data.phi.real_samples();
  const auto amp = data.amp.samples();
  std::vector<complex_t> u(grid->size());
  for (int m = 0; m < grid->size(); ++m) {
    const double theta = phi[m] / eps;
    u[m] = amp[m] * complex_t{std::cos(theta), std::sin(theta)};
  }
  WaveField out{SpectralField::from_samples(grid, u), eps};
  out.u.floor_small();
  const double tail = tail_mass_fraction(out.u);
  if (tail > tail_guard)
    throw std::invalid_argument(
        "assemble_initial: spectral tail mass " + std::to_string(tail) +
        " exceeds guard; increase n_modes for this eps");
  return out;
}

double mass(const WaveField& w) {
  const auto us = w.u.samples();
  const double dx = w.u.grid()->length() / w.u.grid()->size();
  double total = 0.0;
  for (const auto& v : us) total += std::norm(v);
  return dx * total;
}

Trajectory<WaveField> integrate_nls(const WaveField& initial,
                                    const NonlinearitySpec& nl, double T, double dt,
                                    double cfl_c, double tail_guard) {
  nl.check();
  const double eps = initial.eps;
  if (!(eps > 0.0)) throw std::invalid_argument("integrate_nls: eps must be > 0");
  const long n_out = std::lround(T / dt);
  if (n_out < 1 || std::abs(n_out * dt - T) > 1e-9 * std::max(T, 1.0))
    throw std::invalid_argument("integrate_nls: dt must divide T");

  // eps-fast phase rotation through f limits the internal step.
  const long substeps =
      std::max<long>(1, static_cast<long>(std::ceil(dt / (cfl_c * eps) - 1e-12)));
  const double h = dt / substeps;

  const auto& grid = initial.u.grid();
  const auto e_half = dispersion_factors(*grid, eps, 0.5 * h);
  const auto e_full = dispersion_factors(*grid, eps, h);

  const double mass0 = mass(initial);

  Trajectory<WaveField> traj;
  traj.dt = dt;
  traj.states.reserve(n_out + 1);
  WaveField y = initial;
  y.u.floor_small();
  traj.states.push_back(y);

  for (long out = 0; out < n_out; ++out) {
    for (long s = 0; s < substeps; ++s) {
      const double t = dt * out + h * s;

      const SpectralField k1 = rhs_nonlinear(y.u, eps, nl);
      const SpectralField u2 = apply_factors(y.u + k1 * (0.5 * h), e_half);
      const SpectralField k2 = rhs_nonlinear(u2, eps, nl);
      const SpectralField u3 = apply_factors(y.u, e_half) + k2 * (0.5 * h);
      const SpectralField k3 = rhs_nonlinear(u3, eps, nl);
      const SpectralField u4 =
          apply_factors(y.u, e_full) + apply_factors(k3, e_half) * h;
      const SpectralField k4 = rhs_nonlinear(u4, eps, nl);

      SpectralField next = apply_factors(y.u, e_full);
      next += (apply_factors(k1, e_full) + apply_factors(k2, e_half) * 2.0 +
               apply_factors(k3, e_half) * 2.0 + k4) *
              (h / 6.0);
      next.floor_small();
      if (!next.all_finite()) throw SolverAbort("nls: NaN in state", t + h);
      y.u = std::move(next);
    }
    if (mass(y) > 10.0 * mass0 + 1e-9)
      throw SolverAbort("nls: mass growth beyond 10x initial", dt * (out + 1));
    if (tail_mass_fraction(y.u) > tail_guard)
      throw SolverAbort("nls: spectral tail mass exceeds guard (under-resolved)",
                        dt * (out + 1));
    traj.states.push_back(y);
  }
  return traj;
}

}  // namespace gdnls
