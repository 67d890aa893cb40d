#pragma once

#include <functional>

#include "focusforge/lens_spec.hpp"

namespace focusforge {

/// Per-row parameters of the shifted-focus phase: the row steers its focus to
/// x = -a and focuses at distance f + s.
struct RowParams {
  double y_um = 0.0;
  double a_um = 0.0;
  double s_um = 0.0;
};

/// Hyperbolic point-focus phase, unwrapped, referenced to zero at the origin.
double point_focus_phase(double x_um, double y_um, const LensSpec& spec);

/// Offset a(y) = -(y - c) / k of a line-shaped focus y = k x + c.
/// Throws std::invalid_argument for k == 0.
double line_offset(double y_um, double k, double c_um);

/// Offset a(y) = -sqrt(r^2 - y^2) of an arc-shaped focus of radius r.
/// Throws std::out_of_range when |y| > r.
double arc_offset(double y_um, double r_um);

/// Row phase with lateral offset a and focal shift s (cylindrical, x only):
///   (2 pi / lambda) (sqrt((x + a)^2 + (f + s)^2) - (f + s)).
/// Throws std::domain_error if f + s <= 0.
double shifted_focus_phase(double x_um, const RowParams& row, const LensSpec& spec);

struct MicroFocusSpacing {
  double spacing_um = 0.0;      ///< D = sqrt(da^2 + U^2)
  double offset_step_um = 0.0;  ///< |a(y + U) - a(y)| on its own
};

/// Distance between the micro-focuses of two adjacent rows. Exceptions thrown
/// by `a_of_y` propagate unchanged.
MicroFocusSpacing micro_focus_spacing(const std::function<double(double)>& a_of_y, double y_um,
                                      double pitch_um);

/// Abbe limit lambda / (2 NA).
double diffraction_limit(double wavelength_um, double na);

/// True iff D <= lambda / (2 NA). Throws std::invalid_argument unless 0 < NA <= 1.
bool spacing_criterion_satisfied(double spacing_um, double wavelength_um, double na_local);

/// Marginal-ray NA of a centred micro lens of width W steering to -a.
double local_na(double aperture_w_um, double a_um, double effective_f_um);

/// Marginal-ray NA of a micro lens covering [x_lo, x_hi] and focusing at x = -a.
/// Reduces to local_na() when the sub-aperture is centred on the origin.
double subaperture_na(double x_lo_um, double x_hi_um, double a_um, double effective_f_um);

/// Width of the beamlet leaving one pitch cell, U / sin(alpha) with the beam
/// angle measured from the lens plane, so sin(alpha) = sqrt(1 - NA^2).
/// Throws std::domain_error for NA >= 1.
double beam_width(double pitch_um, double na_local);

}  // namespace focusforge
