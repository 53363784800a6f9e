#pragma once

// Direct simulation of the semiclassical wave equation
//   i eps d_t u + (eps^2/2) dxx u + (i eps / 2) dx( g(|u|^2) u ) - f(|u|^2) u = 0
// with oscillatory data u0 = a0 exp(i phi0 / eps).  The free flow is applied
// exactly per mode (integrating factor); the remaining terms go through RK4
// with internal substeps dt_int <= cfl_c * eps, so the stored samples stay on
// the caller's dt while eps-fast phases remain resolved.

#include "gdnls/nonlinearity.hpp"
#include "gdnls/wkb_state.hpp"

namespace gdnls {

/// Mass fraction carried by modes beyond the 2/3 dealiasing band.
double tail_mass_fraction(const SpectralField& u);

/// u0 = a0 exp(i phi0 / eps) on the collocation grid.  Rejects nonreal phases
/// and under-resolved data (tail mass above the guard threshold).
WaveField assemble_initial(const WKBState& data, double eps,
                           double tail_guard = 1e-8);

/// Trajectory sampled at t_k = k dt on [0, T]; dt must divide T to rounding.
Trajectory<WaveField> integrate_nls(const WaveField& initial,
                                    const NonlinearitySpec& nl, double T, double dt,
                                    double cfl_c = 0.1, double tail_guard = 1e-8);

/// Grid quadrature of |u|^2 (the conserved mass).
double mass(const WaveField& u);

}  // namespace gdnls
