#include "focusforge/propagation.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace focusforge {
namespace {

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

/// In-place 2-D (rank 2) or 1-D (ny == 1) complex transform.
void fft_inplace(Complex* data, std::size_t ny, std::size_t nx, int sign) {
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = ny == 1 ? fftw_plan_dft_1d(int(nx), buf, buf, sign, FFTW_ESTIMATE)
                   : fftw_plan_dft_2d(int(ny), int(nx), buf, buf, sign, FFTW_ESTIMATE);
  }
  if (!plan) throw std::runtime_error("FFTW planning failed");
  fftw_execute(plan);
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan);
}

double frequency(std::size_t k, std::size_t n, double dx) {
  const double idx = k < (n + 1) / 2 ? double(k) : double(k) - double(n);
  return idx / (double(n) * dx);
}

/// Transfer function value for spatial frequency (fx, fy); zero outside the
/// propagating disc and the band limits.
Complex transfer(double fx, double fy, double inv_lambda2, double ux_lim, double uy_lim, double dz) {
  if (std::abs(fx) >= ux_lim || std::abs(fy) >= uy_lim) return 0.0;
  const double arg = inv_lambda2 - fx * fx - fy * fy;
  if (arg < 0.0) return 0.0;
  return std::polar(1.0, kTwoPi * dz * std::sqrt(arg));
}

}  // namespace

void ComplexField::validate() const {
  if (samples.rows() < 2 || samples.cols() < 2) throw std::invalid_argument("field must be at least 2x2");
  if (!(dx_um > 0.0)) throw std::invalid_argument("field sample pitch must be > 0");
  if (!(wavelength_um > 0.0)) throw std::invalid_argument("field wavelength must be > 0");
  for (const auto& v : samples.values())
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::invalid_argument("field contains non-finite samples");
}

void ComplexLine::validate() const {
  if (samples.size() < 2) throw std::invalid_argument("line field needs at least 2 samples");
  if (!(dx_um > 0.0)) throw std::invalid_argument("field sample pitch must be > 0");
  if (!(wavelength_um > 0.0)) throw std::invalid_argument("field wavelength must be > 0");
}

ComplexField field_from_profile(const PhaseProfile& profile, double padding_factor) {
  if (!(padding_factor >= 1.0)) throw std::invalid_argument("padding factor must be >= 1");
  const auto& lens = profile.lens;
  const std::size_t ny = profile.phase.rows(), nx = profile.phase.cols();
  const auto py = std::size_t(std::lround(double(ny) * padding_factor));
  const auto px = std::size_t(std::lround(double(nx) * padding_factor));
  const std::size_t oy = (py - ny) / 2, ox = (px - nx) / 2;

  ComplexField f;
  f.samples = Grid2D<Complex>(py, px, Complex{});
  f.dx_um = lens.pitch_um;
  f.wavelength_um = lens.wavelength_um;
  f.z_um = 0.0;
  f.x0_um = lens.cell_x(0) - double(ox) * lens.pitch_um;
  f.y0_um = lens.cell_y(0) - double(oy) * lens.pitch_um;
  for (std::size_t i = 0; i < ny; ++i)
    for (std::size_t j = 0; j < nx; ++j) f.samples(oy + i, ox + j) = std::polar(1.0, -profile.phase(i, j));
  return f;
}

double band_limit(std::size_t n, double dx_um, double wavelength_um, double dz_um) {
  const double du = 1.0 / (double(n) * dx_um);
  return 1.0 / (wavelength_um * std::sqrt(std::pow(2.0 * du * dz_um, 2) + 1.0));
}

ComplexField propagate(const ComplexField& field, double dz_um) {
  if (!(dz_um >= 0.0)) throw std::invalid_argument("negative propagation distance (back-propagation not supported)");
  field.validate();
  const std::size_t ny = field.ny(), nx = field.nx();
  ComplexField out = field;
  out.z_um = field.z_um + dz_um;
  fft_inplace(out.samples.data(), ny, nx, FFTW_FORWARD);

  const double inv_l2 = 1.0 / (field.wavelength_um * field.wavelength_um);
  const double ux = band_limit(nx, field.dx_um, field.wavelength_um, dz_um);
  const double uy = band_limit(ny, field.dx_um, field.wavelength_um, dz_um);
  const double norm = 1.0 / double(nx * ny);
  std::vector<double> fxs(nx);
  for (std::size_t j = 0; j < nx; ++j) fxs[j] = frequency(j, nx, field.dx_um);
  for (std::size_t i = 0; i < ny; ++i) {
    const double fy = frequency(i, ny, field.dx_um);
    auto row = out.samples.row(i);
    for (std::size_t j = 0; j < nx; ++j) row[j] *= transfer(fxs[j], fy, inv_l2, ux, uy, dz_um) * norm;
  }
  fft_inplace(out.samples.data(), ny, nx, FFTW_BACKWARD);
  return out;
}

ComplexLine propagate(const ComplexLine& field, double dz_um) {
  if (!(dz_um >= 0.0)) throw std::invalid_argument("negative propagation distance (back-propagation not supported)");
  field.validate();
  const std::size_t nx = field.samples.size();
  ComplexLine out = field;
  out.z_um = field.z_um + dz_um;
  fft_inplace(out.samples.data(), 1, nx, FFTW_FORWARD);
  const double inv_l2 = 1.0 / (field.wavelength_um * field.wavelength_um);
  const double ux = band_limit(nx, field.dx_um, field.wavelength_um, dz_um);
  const double norm = 1.0 / double(nx);
  for (std::size_t j = 0; j < nx; ++j)
    out.samples[j] *= transfer(frequency(j, nx, field.dx_um), 0.0, inv_l2, ux, 2.0 * ux + 1.0, dz_um) * norm;
  fft_inplace(out.samples.data(), 1, nx, FFTW_BACKWARD);
  return out;
}

double total_power(const ComplexField& field) {
  double p = 0.0;
  for (const auto& v : field.samples.values()) p += std::norm(v);
  return p * field.dx_um * field.dx_um;
}

double total_power(const ComplexLine& field) {
  double p = 0.0;
  for (const auto& v : field.samples) p += std::norm(v);
  return p * field.dx_um;
}

Grid2D<double> intensity(const ComplexField& field) {
  Grid2D<double> out(field.ny(), field.nx());
  for (std::size_t k = 0; k < out.size(); ++k) out.values()[k] = std::norm(field.samples.values()[k]);
  return out;
}

std::vector<double> intensity(const ComplexLine& field) {
  std::vector<double> out(field.samples.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::norm(field.samples[k]);
  return out;
}

std::optional<std::string> sampling_warning(const ComplexField& field) {
  if (field.dx_um > 0.5 * field.wavelength_um)
    return "sample pitch " + std::to_string(field.dx_um) + " um exceeds lambda/2 = " +
           std::to_string(0.5 * field.wavelength_um) + " um; propagating waves are undersampled";
  return std::nullopt;
}

}  // namespace focusforge
