#pragma once

#include <span>
#include <vector>

#include "focusforge/lens_spec.hpp"
#include "focusforge/metrics.hpp"
#include "focusforge/pattern.hpp"

namespace focusforge {

enum class TargetPolicy {
  weakest_row,  ///< min over a of max over s of I(a, s)
  fixed,        ///< CalibrationConfig::fixed_target
};

inline constexpr double kZeroSlopeValue[1] = {0.0};
inline constexpr std::span<const double> kZeroSlope{kZeroSlopeValue};

struct CalibrationConfig {
  double micro_aperture_w_um = 10.0;
  double s_min_um = -3.0;
  double s_max_um = 3.0;
  double s_step_um = 0.1;
  /// Allowed relative mismatch between achieved and target intensity.
  double tolerance = 0.15;
  /// Simulation domain = padding_factor * micro aperture + 2 max |a|.
  double padding_factor = 4.0;
  TargetPolicy policy = TargetPolicy::weakest_row;
  double fixed_target = 0.0;
};

struct ShiftEntry {
  double slope = 0.0;  ///< |d(target x)/dy| of the rows this entry serves
  double a_um = 0.0;
  double s_um = 0.0;
  double achieved_intensity = 0.0;
  bool operator==(const ShiftEntry&) const = default;
};

/// Focal shift s as a function of the micro-lens offset a and the slope of
/// the focus locus. Entries are grouped by slope (ascending); within a group
/// a is strictly increasing and every group samples the same offsets.
struct ShiftTable {
  std::vector<ShiftEntry> entries;
  double target_intensity = 0.0;
  CalibrationConfig config;

  std::vector<double> slopes() const;
  /// Bilinear interpolation in (a, |slope|). Throws std::out_of_range
  /// ("calibration range exceeded") outside the sampled rectangle.
  double shift_at(double a_um, double slope = 0.0) const;
};

/// Offsets sampled by calibrate_focal_shift for a given grid geometry: the
/// symmetric s grid k * step for ceil(s_min / step) <= k <= floor(s_max / step).
std::vector<double> focal_shift_grid(const CalibrationConfig& config);

/// Simulates a one-row micro lens of width micro_aperture_w (offset a, focal
/// shift s) to z = f and returns the peak of |E|^2 within +-lambda/NA of the
/// target x = -a, per cell of the micro aperture.
///
/// A nonzero slope models a row whose target moves along a tilted line. The
/// 2-D phase is then locally a cylindrical lens across the line, and the model
/// becomes the cut along the line normal: the aperture widens to g W, the
/// phase argument is scaled by g and the target sits at -g a, with
/// g = sqrt(1 + slope^2). The lens power across the line grows by g^2.
double micro_lens_peak_intensity(double a_um, double s_um, const LensSpec& spec,
                                 const CalibrationConfig& config, double max_abs_a_um,
                                 double slope = 0.0);

/// Chooses per-offset focal shifts that equalize the focused intensity at the
/// design plane. Throws std::invalid_argument for an empty offset list or bad
/// config and std::runtime_error naming the offset when the target cannot be
/// met within tolerance or the choice sits on the search-range boundary.
ShiftTable calibrate_focal_shift(std::span<const double> a_values, const LensSpec& spec,
                                 const CalibrationConfig& config,
                                 std::span<const double> slopes = kZeroSlope);

/// Sets s of every sub-aperture of a homogenized segment from the table,
/// keyed by the sub-aperture-relative offset (a plus the sub-aperture centre)
/// and the locus slope.
RowAssignment apply_homogenization(const RowAssignment& assignment, const ShiftTable& table);

struct RefineOptions {
  /// s-correction knots per homogenized segment, spread evenly over its rows.
  int knots = 12;
  /// Successive objectives: the q-norm of the spread of ln(row peak).
  /// Raising q moves the fit from least squares towards minimax.
  std::vector<double> norm_powers = {2.0, 4.0};
  int iterations_per_power = 10;
  double fd_step_um = 0.05;
  /// Largest knot change per accepted step.
  double max_step_um = 1.0;
  double padding = 2.0;
  PatternMetricsOptions metrics;
};

struct RefineResult {
  RowAssignment assignment;           ///< best iterate by homogeneity ratio
  std::vector<double> ratio_history;  ///< start, then every accepted step
};

/// Closed-loop correction of s(y) against full 2-D simulations at z = f. The
/// micro-lens model ignores light shared between rows of a tilted stroke and
/// diffraction at stroke ends, so the table-based shifts leave residual
/// non-uniformity; this adds a piecewise-linear correction per homogenized
/// segment, fitted by Levenberg-Marquardt with a finite-difference Jacobian.
/// The best iterate is returned, so the result is never worse than `start`.
RefineResult refine_homogenization(const RowAssignment& start, const RefineOptions& options = {});

/// Evenly spaced offsets (spacing `step`, symmetric about zero) covering the
/// relative offsets of all homogenized sub-apertures.
std::vector<double> calibration_offsets(const RowAssignment& assignment, double step_um);

/// Distinct |slope| values of homogenized sub-apertures (to 1e-6). When there
/// are more than `max_distinct`, a uniform grid of spacing `grid_step` from 0
/// covering the largest slope is returned instead.
std::vector<double> calibration_slopes(const RowAssignment& assignment, std::size_t max_distinct = 8,
                                       double grid_step = 0.25);

/// Most common sub-aperture width among homogenized sub-apertures.
double dominant_subaperture_width(const RowAssignment& assignment);

}  // namespace focusforge
