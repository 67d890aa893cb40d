#include "focusforge/phase_synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace focusforge {

double point_focus_phase(double x_um, double y_um, const LensSpec& spec) {
  const double f = spec.focal_length_um;
  const double k0 = kTwoPi / spec.wavelength_um;
  // sqrt(r^2 + f^2) - f written to avoid cancellation near the axis.
  const double r2 = x_um * x_um + y_um * y_um;
  return k0 * r2 / (std::sqrt(r2 + f * f) + f);
}

double line_offset(double y_um, double k, double c_um) {
  if (k == 0.0) throw std::invalid_argument("vertical-line degenerate slope");
  return -(y_um - c_um) / k;
}

double arc_offset(double y_um, double r_um) {
  if (std::abs(y_um) > r_um) throw std::out_of_range("row outside arc support");
  return -std::sqrt(r_um * r_um - y_um * y_um);
}

double shifted_focus_phase(double x_um, const RowParams& row, const LensSpec& spec) {
  const double fs = spec.focal_length_um + row.s_um;
  if (!(fs > 0.0)) throw std::domain_error("non-positive effective focal length");
  const double u = x_um + row.a_um;
  const double k0 = kTwoPi / spec.wavelength_um;
  return k0 * u * u / (std::sqrt(u * u + fs * fs) + fs);
}

MicroFocusSpacing micro_focus_spacing(const std::function<double(double)>& a_of_y, double y_um,
                                      double pitch_um) {
  const double da = a_of_y(y_um + pitch_um) - a_of_y(y_um);
  return {std::hypot(da, pitch_um), std::abs(da)};
}

namespace {
void check_na(double na) {
  if (!(na > 0.0 && na <= 1.0)) throw std::invalid_argument("invalid numerical aperture");
}
}  // namespace

double diffraction_limit(double wavelength_um, double na) {
  check_na(na);
  return wavelength_um / (2.0 * na);
}

bool spacing_criterion_satisfied(double spacing_um, double wavelength_um, double na_local) {
  return spacing_um <= diffraction_limit(wavelength_um, na_local);
}

double local_na(double aperture_w_um, double a_um, double effective_f_um) {
  if (!(aperture_w_um > 0.0)) throw std::invalid_argument("aperture width must be > 0");
  return subaperture_na(-0.5 * aperture_w_um, 0.5 * aperture_w_um, a_um, effective_f_um);
}

double subaperture_na(double x_lo_um, double x_hi_um, double a_um, double effective_f_um) {
  if (!(x_hi_um > x_lo_um)) throw std::invalid_argument("sub-aperture must have positive width");
  if (!(effective_f_um > 0.0)) throw std::invalid_argument("effective focal length must be > 0");
  const double target = -a_um;
  const double m = std::max(std::abs(x_lo_um - target), std::abs(x_hi_um - target));
  return m / std::hypot(m, effective_f_um);
}

double beam_width(double pitch_um, double na_local) {
  if (!(na_local >= 0.0)) throw std::invalid_argument("invalid numerical aperture");
  if (na_local >= 1.0) throw std::domain_error("grazing beam, width unbounded");
  return pitch_um / std::sqrt(1.0 - na_local * na_local);
}

}  // namespace focusforge
