#include "gdnls/assembly.hpp"

#include <cmath>
#include <stdexcept>

namespace gdnls {

namespace {

void require_real_phase(const SpectralField& phi, const char* what) {
  if (!phi.is_real() || phi.hermitian_defect() > 1e-12)
    throw std::invalid_argument(std::string(what) + ": phase must be real");
}

std::vector<complex_t> phase_rotation(std::span<const double> phase, double scale) {
  std::vector<complex_t> out(phase.size());
  for (std::size_t m = 0; m < phase.size(); ++m) {
    const double theta = phase[m] * scale;
    out[m] = complex_t{std::cos(theta), std::sin(theta)};
  }
  return out;
}

}  // namespace

WaveField approximant_leading(const SpectralField& phi, const SpectralField& amp,
                              double eps) {
  require_real_phase(phi, "approximant_leading");
  const auto rot = phase_rotation(phi.real_samples(), 1.0 / eps);
  const auto a = amp.samples();
  std::vector<complex_t> u(a.size());
  for (std::size_t m = 0; m < a.size(); ++m) u[m] = a[m] * rot[m];
  WaveField out{SpectralField::from_samples(phi.grid(), u), eps};
  out.u.floor_small();
  return out;
}

WaveField approximant_corrected(const SpectralField& phi, const SpectralField& amp,
                                const SpectralField& phi1, double eps) {
  require_real_phase(phi, "approximant_corrected");
  require_real_phase(phi1, "approximant_corrected");
  const auto rot = phase_rotation(phi.real_samples(), 1.0 / eps);
  const auto rot1 = phase_rotation(phi1.real_samples(), 1.0);
  const auto a = amp.samples();
  std::vector<complex_t> u(a.size());
  for (std::size_t m = 0; m < a.size(); ++m) u[m] = a[m] * rot1[m] * rot[m];
  WaveField out{SpectralField::from_samples(phi.grid(), u), eps};
  out.u.floor_small();
  return out;
}

Observables observables(const WaveField& wave) {
  Observables out;
  out.grid = wave.u.grid();
  const auto us = wave.u.samples();
  const auto ux = wave.u.derivative(1).samples();
  const int n = out.grid->size();
  out.rho.resize(n);
  out.current.resize(n);
  for (int m = 0; m < n; ++m) {
    out.rho[m] = std::norm(us[m]);
    out.current[m] = wave.eps * (std::conj(us[m]) * ux[m]).imag();
  }
  return out;
}

Observables observables_limit(const WKBState& state) {
  require_real_phase(state.phi, "observables_limit");
  Observables out;
  out.grid = state.phi.grid();
  const auto a = state.amp.samples();
  const auto vx = state.phi.derivative(1).real_samples();
  const int n = out.grid->size();
  out.rho.resize(n);
  out.current.resize(n);
  out.velocity = vx;
  for (int m = 0; m < n; ++m) {
    out.rho[m] = std::norm(a[m]);
    out.current[m] = out.rho[m] * vx[m];
  }
  return out;
}

double l1_norm(std::span<const double> samples, double length) {
  double sum = 0.0;
  for (double v : samples) sum += std::abs(v);
  return sum * length / static_cast<double>(samples.size());
}

double l2_norm(std::span<const double> samples, double length) {
  double sum = 0.0;
  for (double v : samples) sum += v * v;
  return std::sqrt(sum * length / static_cast<double>(samples.size()));
}

double linf_norm(std::span<const double> samples) {
  double peak = 0.0;
  for (double v : samples) peak = std::max(peak, std::abs(v));
  return peak;
}

EulerResidual euler_residual(const Trajectory<WKBState>& limit,
                             const NonlinearitySpec& nl) {
  const std::size_t n_samp = limit.states.size();
  if (n_samp < 5)
    throw std::invalid_argument("euler_residual: need at least 5 samples");
  const auto& grid = limit.states.front().phi.grid();
  const int n = grid->size();
  const double L = grid->length();
  const double dt = limit.dt;

  // Per-sample v and rho plus the spatial flux terms, all spectral.
  std::vector<std::vector<double>> v(n_samp), rho(n_samp), flux_v(n_samp),
      flux_rho(n_samp);
  for (std::size_t k = 0; k < n_samp; ++k) {
    const auto& s = limit.states[k];
    v[k] = s.phi.derivative(1).real_samples();
    const auto a = s.amp.samples();
    rho[k].resize(n);
    for (int m = 0; m < n; ++m) rho[k][m] = std::norm(a[m]);

    std::vector<double> gv(n), f_of_rho(n), rv(n), q_of_rho(n);
    for (int m = 0; m < n; ++m) {
      gv[m] = nl.g(rho[k][m]) * v[k][m];
      f_of_rho[m] = nl.f(rho[k][m]);
      rv[m] = rho[k][m] * v[k][m];
      q_of_rho[m] = nl.Q(rho[k][m]);
    }
    const auto vfield = SpectralField::from_real_samples(grid, v[k]);
    const auto vvx =
        pointwise_product(vfield, vfield).dealiased().derivative(1).real_samples();
    const auto gvx = SpectralField::from_real_samples(grid, gv)
                         .dealiased()
                         .derivative(1)
                         .real_samples();
    const auto fx = SpectralField::from_real_samples(grid, f_of_rho)
                        .dealiased()
                        .derivative(1)
                        .real_samples();
    const auto rvx = SpectralField::from_real_samples(grid, rv)
                         .dealiased()
                         .derivative(1)
                         .real_samples();
    const auto qx = SpectralField::from_real_samples(grid, q_of_rho)
                        .dealiased()
                        .derivative(1)
                        .real_samples();
    flux_v[k].resize(n);
    flux_rho[k].resize(n);
    for (int m = 0; m < n; ++m) {
      // v dx v = 1/2 dx(v^2)
      flux_v[k][m] = 0.5 * vvx[m] + 0.5 * gvx[m] + fx[m];
      flux_rho[k][m] = rvx[m] + qx[m];
    }
  }

  EulerResidual out;
  std::vector<double> res_v(n), res_rho(n);
  for (std::size_t k = 2; k + 2 < n_samp; ++k) {
    for (int m = 0; m < n; ++m) {
      const double dtv = (-v[k + 2][m] + 8.0 * v[k + 1][m] - 8.0 * v[k - 1][m] +
                          v[k - 2][m]) /
                         (12.0 * dt);
      const double dtr = (-rho[k + 2][m] + 8.0 * rho[k + 1][m] -
                          8.0 * rho[k - 1][m] + rho[k - 2][m]) /
                         (12.0 * dt);
      res_v[m] = dtv + flux_v[k][m];
      res_rho[m] = dtr + flux_rho[k][m];
    }
    out.velocity = std::max(out.velocity, l2_norm(res_v, L));
    out.density = std::max(out.density, l2_norm(res_rho, L));
  }
  return out;
}

namespace {

void require_aligned(double dt_a, double dt_b, std::size_t na, std::size_t nb) {
  if (na != nb || std::abs(dt_a - dt_b) > 1e-9 * std::max(dt_a, dt_b))
    throw std::invalid_argument("trajectory comparison: misaligned time samples");
}

}  // namespace

SupError error_metrics(const Trajectory<WaveField>& truth,
                       const Trajectory<WaveField>& approx) {
  require_aligned(truth.dt, approx.dt, truth.states.size(), approx.states.size());
  const auto& grid = truth.states.front().u.grid();
  if (grid != approx.states.front().u.grid())
    throw std::invalid_argument("error_metrics: grid mismatch");
  const double L = grid->length();
  SupError out;
  std::vector<double> diff(grid->size());
  for (std::size_t k = 0; k < truth.states.size(); ++k) {
    const auto ut = truth.states[k].u.samples();
    const auto ua = approx.states[k].u.samples();
    for (int m = 0; m < grid->size(); ++m) diff[m] = std::abs(ut[m] - ua[m]);
    out.l2 = std::max(out.l2, l2_norm(diff, L));
    out.linf = std::max(out.linf, linf_norm(diff));
  }
  return out;
}

TripleError triple_error(const Trajectory<WKBState>& truth,
                         const Trajectory<WKBState>& approx,
                         const WeightSchedule& schedule, double ell) {
  require_aligned(truth.dt, approx.dt, truth.states.size(), approx.states.size());
  TripleNormAccumulator acc_phi(ell + 1.0, schedule);
  TripleNormAccumulator acc_amp(ell, schedule);
  for (std::size_t k = 0; k < truth.states.size(); ++k) {
    const double t = truth.time_at(k);
    acc_phi.observe(t, truth.states[k].phi - approx.states[k].phi);
    acc_amp.observe(t, truth.states[k].amp - approx.states[k].amp);
  }
  return {acc_phi.value(), acc_amp.value()};
}

}  // namespace gdnls
