#pragma once

// Monomial nonlinearities g(s) = alpha s^gamma, f(s) = lambda s^sigma acting on
// the squared modulus s = |a|^2, together with the derived scalar functions
// the phase/amplitude systems need.

#include <complex>

namespace gdnls {

using complex_t = std::complex<double>;

struct NonlinearitySpec {
  double alpha = 0.0;
  int gamma = 1;
  double lambda = 0.0;
  int sigma = 1;

  void check() const;  // gamma, sigma >= 1 so g(0) = f(0) = 0

  double g(double s) const;
  double g_prime(double s) const;
  double g_second(double s) const;
  double f(double s) const;
  double f_prime(double s) const;

  /// h(s) = g(s) / s evaluated in polynomial form: alpha s^(gamma-1);
  /// finite at s = 0.
  double h(double s) const;

  /// Q(rho) = rho g(rho) - (1/2) int_0^rho g = alpha rho^(gamma+1) (2 gamma + 1) / (2 gamma + 2).
  double Q(double rho) const;

  /// g(|a + delta|^2) - g(|a|^2) - 2 g'(|a|^2) Re(conj(a) delta).
  double taylor_remainder_g(complex_t a, complex_t delta) const;
};

}  // namespace gdnls
