#pragma once

// Periodic Fourier discretization: grids, spectral fields, differentiation,
// and the weighted analytic norms H_w^l with squared norm
//   ||psi||^2 = L * sum_j <xi_j>^(2l) exp(2 w <xi_j>) |c_j|^2,
// where c_j are the interpolation coefficients (psi(x) = sum_j c_j e^{i xi_j x})
// and <xi> = sqrt(1 + xi^2).  At w = 0, l = 0 this reproduces the grid
// quadrature of integral |psi|^2 dx (Parseval).

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace gdnls {

using complex_t = std::complex<double>;

/// One Fourier coefficient addressed by its integer mode index.
struct ModeAmplitude {
  int mode = 0;
  complex_t value{0.0, 0.0};
};

class FourierGrid;
using GridPtr = std::shared_ptr<const FourierGrid>;

/// Uniform periodic grid: n collocation points x_m = m L / n on [0, L),
/// modes xi_j = 2 pi j / L for j in {-n/2+1, ..., n/2}.  Coefficients are
/// stored in FFT order (slot k holds mode j = k for k <= n/2, else k - n).
class FourierGrid {
public:
  static GridPtr make(int n_modes, double length);
  ~FourierGrid();

  FourierGrid(const FourierGrid&) = delete;
  FourierGrid& operator=(const FourierGrid&) = delete;

  int size() const { return n_; }
  double length() const { return length_; }
  const std::vector<double>& frequencies() const { return freq_; }  // FFT order
  const std::vector<double>& points() const { return points_; }

  int mode_of(int slot) const { return slot <= n_ / 2 ? slot : slot - n_; }
  int slot_of(int mode) const { return mode >= 0 ? mode : mode + n_; }
  double frequency_of_mode(int mode) const;
  int nyquist_slot() const { return n_ / 2; }
  /// Largest |mode| kept by the 2/3-rule mask.
  int dealias_mode_limit() const { return n_ / 3; }

  /// Samples -> interpolation coefficients (DFT scaled by 1/n).
  void forward(std::span<const complex_t> samples, std::span<complex_t> coef) const;
  /// Coefficients -> samples (plain inverse DFT, no scaling).
  void inverse(std::span<const complex_t> coef, std::span<complex_t> samples) const;

private:
  FourierGrid(int n, double length);

  int n_;
  double length_;
  std::vector<double> freq_;
  std::vector<double> points_;
  void* plan_forward_ = nullptr;
  void* plan_inverse_ = nullptr;
  mutable std::vector<complex_t> work_in_;
  mutable std::vector<complex_t> work_out_;
};

/// Periodic function stored as Fourier coefficients on a shared grid.
/// The realness flag asserts Hermitian symmetry of the coefficients;
/// from_real_samples enforces it exactly.
class SpectralField {
public:
  /// Coefficients below this fraction of the largest one are flushed to zero
  /// by floor_small(); keeps exponential norm weights from amplifying FFT
  /// round-off that sits far above the resolved spectrum.
  static constexpr double kSpectralFloor = 1e-15;

  SpectralField() = default;

  static SpectralField zero(GridPtr grid, bool real = true);
  static SpectralField from_samples(GridPtr grid, std::span<const complex_t> samples);
  static SpectralField from_real_samples(GridPtr grid, std::span<const double> samples);
  static SpectralField from_modes(GridPtr grid, std::span<const ModeAmplitude> modes,
                                  bool real);
  static SpectralField from_coefficients(GridPtr grid, std::vector<complex_t> coef,
                                         bool real);

  bool empty() const { return grid_ == nullptr; }
  const GridPtr& grid() const { return grid_; }
  bool is_real() const { return real_; }
  std::span<const complex_t> coefficients() const { return coef_; }
  complex_t at_mode(int mode) const;

  std::vector<complex_t> samples() const;
  std::vector<double> real_samples() const;  // requires is_real()

  /// Multiply coefficients by (i xi)^order, order in {1, 2}.  The Nyquist
  /// mode is zeroed so real fields stay exactly Hermitian.
  SpectralField derivative(int order) const;
  /// 2/3-rule mask: modes with |j| > n/3 zeroed.
  SpectralField dealiased() const;

  void floor_small(double relative_threshold = kSpectralFloor);
  double hermitian_defect() const;  // relative to max |c_j|
  bool all_finite() const;
  double max_abs_coefficient() const;

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double scale);
  SpectralField& operator*=(complex_t scale);  // clears realness if imag != 0

private:
  GridPtr grid_;
  std::vector<complex_t> coef_;
  bool real_ = false;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(SpectralField a, double scale);
SpectralField operator*(SpectralField a, complex_t scale);

/// Pointwise product on the collocation grid (no dealiasing).
SpectralField pointwise_product(const SpectralField& a, const SpectralField& b);

/// || f ||_{H_w^l}; rejects w < 0 and l < 0.
double analytic_norm(const SpectralField& field, double w, double ell);
/// Sobolev norm, the w = 0 special case.
double sobolev_norm(const SpectralField& field, double ell);
/// <a, b>_{H_w^l} = L * sum_j <xi_j>^(2l) e^{2w<xi_j>} a_j conj(b_j).
complex_t analytic_inner(const SpectralField& a, const SpectralField& b, double w,
                         double ell);

/// Decreasing analyticity radius w(t) = w0 - M t, valid while w > 0.
struct WeightSchedule {
  double w0 = 0.0;
  double M = 0.0;
  double T = 0.0;

  WeightSchedule() = default;
  WeightSchedule(double w0_, double M_, double T_);  // requires 0 < T < w0 / M

  double weight_at(double t) const;  // rejects t outside [0, T]
};

/// Running realization of the time-weighted norm
///   max( sup_s ||psi(s)||^2_{H_w(s)^l},  2 M int_0^t ||psi(s)||^2_{H_w(s)^{l+1/2}} ds )
/// with the integral accumulated by the composite trapezoid rule.
class TripleNormAccumulator {
public:
  TripleNormAccumulator(double ell, const WeightSchedule& schedule);

  void observe(double t, const SpectralField& psi);

  double sup_branch() const { return sup_sq_; }            // squared
  double integral_branch() const { return 2.0 * schedule_.M * integral_; }  // squared
  double value() const;                                    // the norm itself
  int observations() const { return count_; }

private:
  double ell_;
  WeightSchedule schedule_;
  double sup_sq_ = 0.0;
  double integral_ = 0.0;       // int ||psi||^2_{l+1/2}
  double last_t_ = 0.0;
  double last_half_sq_ = 0.0;
  int count_ = 0;
};

/// Max over interior samples of
///   | d/dt ||psi||^2_{H_w^l} - 2 Re<psi, dpsi>_{H_w^l} - 2 wdot ||psi||^2_{H_w^{l+1/2}} |
/// relative to max(1, |rhs|); the time derivative is a centered difference on
/// the uniform sample times t_k = k dt.
double norm_evolution_residual(const std::vector<SpectralField>& psi,
                               const std::vector<SpectralField>& dpsi, double dt,
                               const WeightSchedule& schedule, double ell);

}  // namespace gdnls
