#pragma once

// First corrector (phi1, a1): the linearization of the phase/amplitude system
// about a limit solution (phi, a), driven by the source (i/2) dxx a.  The
// system carries no eps, so one corrector serves an entire eps sweep.

#include "gdnls/nonlinearity.hpp"
#include "gdnls/wkb_state.hpp"

namespace gdnls {

/// d_t phi1 = -(dx phi + 1/2 g(|a|^2)) dx phi1 - (g'(|a|^2) dx phi + 2 f'(|a|^2)) Re(conj(a) a1)
/// d_t a1   = -dx phi dx a1 - 1/2 a1 dxx phi - dx a dx phi1 - 1/2 a dxx phi1
///            - 1/2 dx( g(|a|^2) a1 ) - 1/2 dx( 2 a g'(|a|^2) Re(conj(a) a1) )
///            + (i/2) dxx a
CorrectorState rhs_linearized(const CorrectorState& corr, const WKBState& background,
                              const NonlinearitySpec& nl);

/// RK4 along the background trajectory; the background must be sampled at the
/// same dt (stage midpoints come from cubic interpolation in time).
Trajectory<CorrectorState> integrate_corrector(const CorrectorState& initial,
                                               const Trajectory<WKBState>& background,
                                               const NonlinearitySpec& nl, double dt);

}  // namespace gdnls
