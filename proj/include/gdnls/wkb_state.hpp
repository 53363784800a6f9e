#pragma once

// Phase/amplitude unknowns, the wave field, and uniform-in-time trajectories.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "gdnls/spectral.hpp"

namespace gdnls {

/// Real phase and complex amplitude on a shared grid.
struct WKBState {
  SpectralField phi;
  SpectralField amp;

  WKBState scaled(double s) const { return {phi * s, amp * s}; }
  WKBState& add_scaled(const WKBState& o, double s) {
    phi += o.phi * s;
    amp += o.amp * s;
    return *this;
  }
};

/// First corrector: same shape as a WKBState.
struct CorrectorState {
  SpectralField phi1;
  SpectralField amp1;

  CorrectorState scaled(double s) const { return {phi1 * s, amp1 * s}; }
  CorrectorState& add_scaled(const CorrectorState& o, double s) {
    phi1 += o.phi1 * s;
    amp1 += o.amp1 * s;
    return *this;
  }
};

/// Solution of the semiclassical wave equation at a fixed epsilon.
struct WaveField {
  SpectralField u;
  double eps = 0.0;
};

/// Uniform samples t_k = k dt on [0, T = dt * (size - 1)].
template <typename State>
struct Trajectory {
  double dt = 0.0;
  WeightSchedule schedule;
  std::vector<State> states;

  std::size_t size() const { return states.size(); }
  double time_at(std::size_t k) const { return dt * static_cast<double>(k); }
  double duration() const {
    return states.empty() ? 0.0 : dt * static_cast<double>(states.size() - 1);
  }
};

/// Cubic (four point) Lagrange interpolation in time; exact at the sample
/// times and falling back to lower degree when fewer samples exist.
template <typename State>
State interpolate(const Trajectory<State>& traj, double t) {
  const std::size_t n = traj.states.size();
  if (n == 0) throw std::invalid_argument("interpolate: empty trajectory");
  if (n == 1) return traj.states.front();
  const double s = t / traj.dt;
  const long nearest = std::lround(s);
  if (nearest >= 0 && nearest < static_cast<long>(n) &&
      std::abs(s - static_cast<double>(nearest)) < 1e-9)
    return traj.states[static_cast<std::size_t>(nearest)];

  const std::size_t stencil = std::min<std::size_t>(4, n);
  long first = std::lround(std::floor(s)) - (static_cast<long>(stencil) / 2 - 1);
  first = std::max<long>(0, std::min<long>(first, static_cast<long>(n - stencil)));
  const double u = s - static_cast<double>(first);

  State out;
  bool started = false;
  for (std::size_t m = 0; m < stencil; ++m) {
    double weight = 1.0;
    for (std::size_t k = 0; k < stencil; ++k) {
      if (k == m) continue;
      weight *= (u - static_cast<double>(k)) /
                (static_cast<double>(m) - static_cast<double>(k));
    }
    const State& node = traj.states[static_cast<std::size_t>(first) + m];
    if (!started) {
      out = node.scaled(weight);
      started = true;
    } else {
      out.add_scaled(node, weight);
    }
  }
  return out;
}

/// Thrown when an integrator meets NaNs or runaway norm growth.
class SolverAbort : public std::runtime_error {
public:
  SolverAbort(const std::string& what, double t)
      : std::runtime_error(what + " at t = " + std::to_string(t)), time_(t) {}
  double time() const { return time_; }

private:
  double time_ = 0.0;
};

}  // namespace gdnls
