#pragma once

// Test-only reference implementations, kept independent of the library's
// transform and quadrature paths.

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include "gdnls/spectral.hpp"

namespace gdnls::testing {

/// Direct O(n^2) discrete Fourier sum: c_j = (1/n) sum_m psi(x_m) e^{-i xi_j x_m},
/// returned in the grid's storage order.
inline std::vector<complex_t> slow_dft(const FourierGrid& grid,
                                       const std::vector<complex_t>& samples) {
  const int n = grid.size();
  std::vector<complex_t> coef(n);
  for (int k = 0; k < n; ++k) {
    const double xi = grid.frequencies()[k];
    complex_t sum{0.0, 0.0};
    for (int m = 0; m < n; ++m) {
      const double theta = -xi * grid.points()[m];
      sum += samples[m] * complex_t{std::cos(theta), std::sin(theta)};
    }
    coef[k] = sum / static_cast<double>(n);
  }
  return coef;
}

/// Direct evaluation of psi(x) = sum_j c_j e^{i xi_j x} at the grid points.
inline std::vector<complex_t> slow_idft(const FourierGrid& grid,
                                        const std::vector<complex_t>& coef) {
  const int n = grid.size();
  std::vector<complex_t> samples(n);
  for (int m = 0; m < n; ++m) {
    complex_t sum{0.0, 0.0};
    for (int k = 0; k < n; ++k) {
      const double theta = grid.frequencies()[k] * grid.points()[m];
      sum += coef[k] * complex_t{std::cos(theta), std::sin(theta)};
    }
    samples[m] = sum;
  }
  return samples;
}

/// Adaptive Simpson quadrature.
inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol = 1e-12, int depth = 20) {
  const auto simpson = [&](double lo, double hi) {
    return (hi - lo) / 6.0 * (f(lo) + 4.0 * f(0.5 * (lo + hi)) + f(hi));
  };
  std::function<double(double, double, double, int)> recurse =
      [&](double lo, double hi, double whole, int d) -> double {
    const double mid = 0.5 * (lo + hi);
    const double left = simpson(lo, mid);
    const double right = simpson(mid, hi);
    if (d <= 0 || std::abs(left + right - whole) < 15.0 * tol)
      return left + right + (left + right - whole) / 15.0;
    return recurse(lo, mid, left, d - 1) + recurse(mid, hi, right, d - 1);
  };
  return recurse(a, b, simpson(a, b), depth);
}

/// Random band-limited field with exponentially decaying coefficients.
inline SpectralField random_field(const GridPtr& grid, int band,
                                  std::mt19937_64& rng, bool real,
                                  double min_decay = 0.6, double max_decay = 1.8) {
  std::uniform_real_distribution<double> mag(0.5, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> decay(min_decay, max_decay);
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

/// Weighted norm by direct summation over explicit (mode, coefficient) pairs.
inline double direct_norm(const FourierGrid& grid,
                          const std::vector<ModeAmplitude>& modes, double w,
                          double ell) {
  double sum = 0.0;
  for (const auto& m : modes) {
    const double xi = grid.frequency_of_mode(m.mode);
    const double br = std::sqrt(1.0 + xi * xi);
    sum += std::pow(br, 2.0 * ell) * std::exp(2.0 * w * br) * std::norm(m.value);
  }
  return std::sqrt(grid.length() * sum);
}

}  // namespace gdnls::testing
