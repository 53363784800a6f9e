#include "gdnls/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace gdnls {

namespace {

// FFTW's planner is not thread safe; execution on distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

inline double angle_bracket(double xi) { return std::sqrt(1.0 + xi * xi); }

}  // namespace

FourierGrid::FourierGrid(int n, double length) : n_(n), length_(length) {
  freq_.resize(n_);
  points_.resize(n_);
  const double dxi = 2.0 * M_PI / length_;
  for (int k = 0; k < n_; ++k) {
    freq_[k] = dxi * mode_of(k);
    points_[k] = length_ * k / n_;
  }
  work_in_.resize(n_);
  work_out_.resize(n_);
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto* in = reinterpret_cast<fftw_complex*>(work_in_.data());
  auto* out = reinterpret_cast<fftw_complex*>(work_out_.data());
  plan_forward_ = fftw_plan_dft_1d(n_, in, out, FFTW_FORWARD,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
  plan_inverse_ = fftw_plan_dft_1d(n_, in, out, FFTW_BACKWARD,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
}

FourierGrid::~FourierGrid() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plan_forward_) fftw_destroy_plan(static_cast<fftw_plan>(plan_forward_));
  if (plan_inverse_) fftw_destroy_plan(static_cast<fftw_plan>(plan_inverse_));
}

GridPtr FourierGrid::make(int n_modes, double length) {
  if (n_modes < 8 || n_modes % 2 != 0)
    throw std::invalid_argument("FourierGrid: n_modes must be even and >= 8");
  if (!(length > 0.0))
    throw std::invalid_argument("FourierGrid: length must be positive");
  return GridPtr(new FourierGrid(n_modes, length));
}

double FourierGrid::frequency_of_mode(int mode) const {
  return 2.0 * M_PI * mode / length_;
}

void FourierGrid::forward(std::span<const complex_t> samples,
                          std::span<complex_t> coef) const {
  if (static_cast<int>(samples.size()) != n_ || static_cast<int>(coef.size()) != n_)
    throw std::invalid_argument("FourierGrid::forward: length mismatch");
  std::vector<complex_t> in(samples.begin(), samples.end());
  fftw_execute_dft(static_cast<fftw_plan>(plan_forward_),
                   reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(coef.data()));
  const double scale = 1.0 / n_;
  for (auto& c : coef) c *= scale;
}

void FourierGrid::inverse(std::span<const complex_t> coef,
                          std::span<complex_t> samples) const {
  if (static_cast<int>(samples.size()) != n_ || static_cast<int>(coef.size()) != n_)
    throw std::invalid_argument("FourierGrid::inverse: length mismatch");
  std::vector<complex_t> in(coef.begin(), coef.end());
  fftw_execute_dft(static_cast<fftw_plan>(plan_inverse_),
                   reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(samples.data()));
}

SpectralField SpectralField::zero(GridPtr grid, bool real) {
  SpectralField f;
  f.grid_ = std::move(grid);
  f.coef_.assign(f.grid_->size(), complex_t{0.0, 0.0});
  f.real_ = real;
  return f;
}

SpectralField SpectralField::from_samples(GridPtr grid,
                                          std::span<const complex_t> samples) {
  SpectralField f;
  f.grid_ = std::move(grid);
  f.coef_.resize(f.grid_->size());
  f.grid_->forward(samples, f.coef_);
  f.real_ = false;
  return f;
}

SpectralField SpectralField::from_real_samples(GridPtr grid,
                                               std::span<const double> samples) {
  if (static_cast<int>(samples.size()) != grid->size())
    throw std::invalid_argument("from_real_samples: length mismatch");
  std::vector<complex_t> cs(samples.size());
  for (std::size_t m = 0; m < samples.size(); ++m) cs[m] = complex_t{samples[m], 0.0};
  SpectralField f = from_samples(std::move(grid), cs);
  // Make Hermitian symmetry exact: c_{-j} = conj(c_j).
  const int n = f.grid_->size();
  auto& c = f.coef_;
  c[0] = complex_t{c[0].real(), 0.0};
  c[n / 2] = complex_t{c[n / 2].real(), 0.0};
  for (int j = 1; j < n / 2; ++j) {
    const complex_t avg = 0.5 * (c[j] + std::conj(c[n - j]));
    c[j] = avg;
    c[n - j] = std::conj(avg);
  }
  f.real_ = true;
  return f;
}

SpectralField SpectralField::from_modes(GridPtr grid,
                                        std::span<const ModeAmplitude> modes,
                                        bool real) {
  SpectralField f = zero(std::move(grid), real);
  const int n = f.grid_->size();
  for (const auto& m : modes) {
    if (m.mode < -n / 2 + 1 || m.mode > n / 2)
      throw std::invalid_argument("from_modes: mode index outside grid range");
    f.coef_[f.grid_->slot_of(m.mode)] = m.value;
  }
  if (real && f.hermitian_defect() > 1e-12)
    throw std::invalid_argument("from_modes: coefficients are not Hermitian-symmetric");
  return f;
}

SpectralField SpectralField::from_coefficients(GridPtr grid,
                                               std::vector<complex_t> coef,
                                               bool real) {
  if (static_cast<int>(coef.size()) != grid->size())
    throw std::invalid_argument("from_coefficients: length mismatch");
  SpectralField f;
  f.grid_ = std::move(grid);
  f.coef_ = std::move(coef);
  f.real_ = real;
  return f;
}

complex_t SpectralField::at_mode(int mode) const {
  const int n = grid_->size();
  if (mode < -n / 2 + 1 || mode > n / 2)
    throw std::invalid_argument("at_mode: mode index outside grid range");
  return coef_[grid_->slot_of(mode)];
}

std::vector<complex_t> SpectralField::samples() const {
  std::vector<complex_t> out(grid_->size());
  grid_->inverse(coef_, out);
  return out;
}

std::vector<double> SpectralField::real_samples() const {
  if (!real_)
    throw std::logic_error("real_samples: field is not flagged real");
  const auto cs = samples();
  std::vector<double> out(cs.size());
  for (std::size_t m = 0; m < cs.size(); ++m) out[m] = cs[m].real();
  return out;
}

SpectralField SpectralField::derivative(int order) const {
  if (order != 1 && order != 2)
    throw std::invalid_argument("derivative: order must be 1 or 2");
  SpectralField out = *this;
  const int n = grid_->size();
  const auto& xi = grid_->frequencies();
  if (order == 1) {
    for (int k = 0; k < n; ++k)
      out.coef_[k] = complex_t{0.0, xi[k]} * coef_[k];
  } else {
    for (int k = 0; k < n; ++k)
      out.coef_[k] = -(xi[k] * xi[k]) * coef_[k];
  }
  out.coef_[grid_->nyquist_slot()] = complex_t{0.0, 0.0};
  return out;
}

SpectralField SpectralField::dealiased() const {
  SpectralField out = *this;
  const int n = grid_->size();
  const int limit = grid_->dealias_mode_limit();
  for (int k = 0; k < n; ++k) {
    if (std::abs(grid_->mode_of(k)) > limit) out.coef_[k] = complex_t{0.0, 0.0};
  }
  return out;
}

void SpectralField::floor_small(double relative_threshold) {
  const double peak = max_abs_coefficient();
  if (peak == 0.0) return;
  const double cut = relative_threshold * peak;
  for (auto& c : coef_) {
    if (std::abs(c) < cut) c = complex_t{0.0, 0.0};
  }
}

double SpectralField::hermitian_defect() const {
  const int n = grid_->size();
  const double peak = max_abs_coefficient();
  if (peak == 0.0) return 0.0;
  double worst = std::abs(coef_[0].imag());
  worst = std::max(worst, std::abs(coef_[n / 2].imag()));
  for (int j = 1; j < n / 2; ++j)
    worst = std::max(worst, std::abs(coef_[j] - std::conj(coef_[n - j])));
  return worst / peak;
}

bool SpectralField::all_finite() const {
  for (const auto& c : coef_) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
  }
  return true;
}

double SpectralField::max_abs_coefficient() const {
  double peak = 0.0;
  for (const auto& c : coef_) peak = std::max(peak, std::abs(c));
  return peak;
}

namespace {
void require_same_grid(const SpectralField& a, const SpectralField& b,
                       const char* what) {
  if (a.grid() != b.grid())
    throw std::invalid_argument(std::string(what) + ": fields on different grids");
}
}  // namespace

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  require_same_grid(*this, other, "operator+=");
  for (std::size_t k = 0; k < coef_.size(); ++k) coef_[k] += other.coef_[k];
  real_ = real_ && other.real_;
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  require_same_grid(*this, other, "operator-=");
  for (std::size_t k = 0; k < coef_.size(); ++k) coef_[k] -= other.coef_[k];
  real_ = real_ && other.real_;
  return *this;
}

SpectralField& SpectralField::operator*=(double scale) {
  for (auto& c : coef_) c *= scale;
  return *this;
}

SpectralField& SpectralField::operator*=(complex_t scale) {
  for (auto& c : coef_) c *= scale;
  if (scale.imag() != 0.0) real_ = false;
  return *this;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(SpectralField a, double scale) { return a *= scale; }
SpectralField operator*(SpectralField a, complex_t scale) { return a *= scale; }

SpectralField pointwise_product(const SpectralField& a, const SpectralField& b) {
  require_same_grid(a, b, "pointwise_product");
  if (a.is_real() && b.is_real()) {
    const auto sa = a.real_samples();
    const auto sb = b.real_samples();
    std::vector<double> prod(sa.size());
    for (std::size_t m = 0; m < sa.size(); ++m) prod[m] = sa[m] * sb[m];
    return SpectralField::from_real_samples(a.grid(), prod);
  }
  const auto sa = a.samples();
  const auto sb = b.samples();
  std::vector<complex_t> prod(sa.size());
  for (std::size_t m = 0; m < sa.size(); ++m) prod[m] = sa[m] * sb[m];
  return SpectralField::from_samples(a.grid(), prod);
}

namespace {

double analytic_norm_sq(const SpectralField& field, double w, double ell) {
  if (w < 0.0) throw std::invalid_argument("analytic_norm: w must be >= 0");
  if (ell < 0.0) throw std::invalid_argument("analytic_norm: ell must be >= 0");
  const auto& xi = field.grid()->frequencies();
  const auto coef = field.coefficients();
  double sum = 0.0;
  for (std::size_t k = 0; k < coef.size(); ++k) {
    const double mag = std::abs(coef[k]);
    if (mag == 0.0) continue;
    const double br = angle_bracket(xi[k]);
    // log form keeps the per-mode weight from overflowing before the
    // (possibly tiny) coefficient is folded in
    sum += std::exp(2.0 * w * br + 2.0 * ell * std::log(br) + 2.0 * std::log(mag));
  }
  return field.grid()->length() * sum;
}

}  // namespace

double analytic_norm(const SpectralField& field, double w, double ell) {
  return std::sqrt(analytic_norm_sq(field, w, ell));
}

double sobolev_norm(const SpectralField& field, double ell) {
  return analytic_norm(field, 0.0, ell);
}

complex_t analytic_inner(const SpectralField& a, const SpectralField& b, double w,
                         double ell) {
  require_same_grid(a, b, "analytic_inner");
  if (w < 0.0) throw std::invalid_argument("analytic_inner: w must be >= 0");
  if (ell < 0.0) throw std::invalid_argument("analytic_inner: ell must be >= 0");
  const auto& xi = a.grid()->frequencies();
  const auto ca = a.coefficients();
  const auto cb = b.coefficients();
  complex_t sum{0.0, 0.0};
  for (std::size_t k = 0; k < ca.size(); ++k) {
    if ((ca[k].real() == 0.0 && ca[k].imag() == 0.0) ||
        (cb[k].real() == 0.0 && cb[k].imag() == 0.0))
      continue;
    const double br = angle_bracket(xi[k]);
    const double weight = std::exp(2.0 * w * br + 2.0 * ell * std::log(br));
    sum += weight * ca[k] * std::conj(cb[k]);
  }
  return a.grid()->length() * sum;
}

WeightSchedule::WeightSchedule(double w0_, double M_, double T_)
    : w0(w0_), M(M_), T(T_) {
  if (!(w0 > 0.0)) throw std::invalid_argument("WeightSchedule: w0 must be > 0");
  if (!(M > 0.0)) throw std::invalid_argument("WeightSchedule: M must be > 0");
  if (!(T > 0.0) || !(T < w0 / M))
    throw std::invalid_argument("WeightSchedule: need 0 < T < w0 / M");
}

double WeightSchedule::weight_at(double t) const {
  const double slack = 1e-12 * std::max(1.0, T);
  if (t < -slack || t > T + slack)
    throw std::invalid_argument("WeightSchedule: t outside [0, T]");
  return w0 - M * std::clamp(t, 0.0, T);
}

TripleNormAccumulator::TripleNormAccumulator(double ell,
                                             const WeightSchedule& schedule)
    : ell_(ell), schedule_(schedule) {}

void TripleNormAccumulator::observe(double t, const SpectralField& psi) {
  const double w = schedule_.weight_at(t);  // rejects t outside the schedule
  if (count_ > 0 && t < last_t_ - 1e-12 * std::max(1.0, schedule_.T))
    throw std::invalid_argument("TripleNormAccumulator: time regression");
  const double base_sq = analytic_norm_sq(psi, w, ell_);
  const double half_sq = analytic_norm_sq(psi, w, ell_ + 0.5);
  sup_sq_ = std::max(sup_sq_, base_sq);
  if (count_ > 0) integral_ += 0.5 * (t - last_t_) * (half_sq + last_half_sq_);
  last_t_ = t;
  last_half_sq_ = half_sq;
  ++count_;
}

double TripleNormAccumulator::value() const {
  return std::sqrt(std::max(sup_sq_, integral_branch()));
}

double norm_evolution_residual(const std::vector<SpectralField>& psi,
                               const std::vector<SpectralField>& dpsi, double dt,
                               const WeightSchedule& schedule, double ell) {
  if (psi.size() < 3)
    throw std::invalid_argument("norm_evolution_residual: need at least 3 samples");
  if (psi.size() != dpsi.size())
    throw std::invalid_argument("norm_evolution_residual: sample count mismatch");
  std::vector<double> base_sq(psi.size());
  for (std::size_t k = 0; k < psi.size(); ++k) {
    const double w = schedule.weight_at(dt * k);
    base_sq[k] = analytic_norm_sq(psi[k], w, ell);
  }
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < psi.size(); ++k) {
    const double t = dt * k;
    const double w = schedule.weight_at(t);
    const double lhs = (base_sq[k + 1] - base_sq[k - 1]) / (2.0 * dt);
    const double rhs = 2.0 * analytic_inner(psi[k], dpsi[k], w, ell).real() -
                       2.0 * schedule.M * analytic_norm_sq(psi[k], w, ell + 0.5);
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
  }
  return worst;
}

}  // namespace gdnls
