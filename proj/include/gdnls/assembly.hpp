#pragma once

// WKB approximants, quadratic observables, hydrodynamic residuals, and the
// error norms the convergence study reports.

#include <span>
#include <vector>

#include "gdnls/nonlinearity.hpp"
#include "gdnls/wkb_state.hpp"

namespace gdnls {

/// a exp(i phi / eps); |result| = |a| pointwise.
WaveField approximant_leading(const SpectralField& phi, const SpectralField& amp,
                              double eps);

/// a exp(i phi1) exp(i phi / eps); the amplitude corrector does not enter.
WaveField approximant_corrected(const SpectralField& phi, const SpectralField& amp,
                                const SpectralField& phi1, double eps);

/// Position density rho = |u|^2 and momentum density J = Im(eps conj(u) dx u),
/// as collocation samples.  The limit variant also carries v = dx phi with
/// rho = |a|^2, J = rho v.
struct Observables {
  GridPtr grid;
  std::vector<double> rho;
  std::vector<double> current;
  std::vector<double> velocity;  // only filled by the limit variant
};

Observables observables(const WaveField& wave);
Observables observables_limit(const WKBState& state);

/// Collocation quadrature norms of a sample vector on [0, L).
double l1_norm(std::span<const double> samples, double length);
double l2_norm(std::span<const double> samples, double length);
double linf_norm(std::span<const double> samples);

/// Max-in-time L2 residuals of the hydrodynamic system
///   d_t v + v dx v + 1/2 dx(g(rho) v) + dx f(rho) = 0
///   d_t rho + dx(rho v) + dx Q(rho) = 0
/// with v = dx phi, rho = |a|^2 read off a limit trajectory.  The time
/// derivative is a fourth-order centered difference; the first and last two
/// samples are excluded from the max.
struct EulerResidual {
  double velocity = 0.0;
  double density = 0.0;
};
EulerResidual euler_residual(const Trajectory<WKBState>& limit,
                             const NonlinearitySpec& nl);

/// Sup over aligned samples of the spatial L2 / Linf distances.
struct SupError {
  double l2 = 0.0;
  double linf = 0.0;
};
SupError error_metrics(const Trajectory<WaveField>& truth,
                       const Trajectory<WaveField>& approx);

/// ||| delta phi |||_{l+1,T} and ||| delta a |||_{l,T} for delta = truth - approx.
struct TripleError {
  double phi = 0.0;
  double amp = 0.0;
};
TripleError triple_error(const Trajectory<WKBState>& truth,
                         const Trajectory<WKBState>& approx,
                         const WeightSchedule& schedule, double ell);

}  // namespace gdnls
