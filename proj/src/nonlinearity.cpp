#include "gdnls/nonlinearity.hpp"

#include <stdexcept>

namespace gdnls {

namespace {

double pow_int(double s, int p) {
  double out = 1.0;
  for (int i = 0; i < p; ++i) out *= s;
  return out;
}

void require_nonnegative(double s) {
  if (s < 0.0)
    throw std::invalid_argument("nonlinearity: argument is a squared modulus, s >= 0");
}

}  // namespace

void NonlinearitySpec::check() const {
  if (gamma < 1 || sigma < 1)
    throw std::invalid_argument("NonlinearitySpec: gamma and sigma must be >= 1");
}

double NonlinearitySpec::g(double s) const {
  require_nonnegative(s);
  return alpha * pow_int(s, gamma);
}

double NonlinearitySpec::g_prime(double s) const {
  require_nonnegative(s);
  return alpha * gamma * pow_int(s, gamma - 1);
}

double NonlinearitySpec::g_second(double s) const {
  require_nonnegative(s);
  if (gamma < 2) return 0.0;
  return alpha * gamma * (gamma - 1) * pow_int(s, gamma - 2);
}

double NonlinearitySpec::f(double s) const {
  require_nonnegative(s);
  return lambda * pow_int(s, sigma);
}

double NonlinearitySpec::f_prime(double s) const {
  require_nonnegative(s);
  return lambda * sigma * pow_int(s, sigma - 1);
}

double NonlinearitySpec::h(double s) const {
  require_nonnegative(s);
  return alpha * pow_int(s, gamma - 1);
}

double NonlinearitySpec::Q(double rho) const {
  require_nonnegative(rho);
  return alpha * pow_int(rho, gamma + 1) * (2.0 * gamma + 1.0) / (2.0 * gamma + 2.0);
}

double NonlinearitySpec::taylor_remainder_g(complex_t a, complex_t delta) const {
  const double s0 = std::norm(a);
  const double s1 = std::norm(a + delta);
  return g(s1) - g(s0) - 2.0 * g_prime(s0) * (std::conj(a) * delta).real();
}

}  // namespace gdnls
