#pragma once

#include <span>
#include <string>
#include <vector>

#include "focusforge/pattern.hpp"
#include "focusforge/propagation.hpp"

namespace focusforge {

/// Full width at half maximum of a sampled cut. Half-maximum crossings on
/// both sides of the global peak are located by linear interpolation between
/// the two straddling samples. Throws std::domain_error("unbounded peak") when
/// the peak is on the boundary or a crossing is missing.
double fwhm_of_cut(std::span<const double> intensity, double dx_um);

struct FwhmCut {
  std::string name;
  double fwhm_um = 0.0;
};

/// Per (row, target) measurement on a focal plane.
struct RowPeak {
  int row_index = 0;
  double y_um = 0.0;  ///< design-frame row coordinate
  int segment_id = -1;
  int subaperture_index = 0;  ///< position within the assignment row
  double target_x_um = 0.0;
  double s_um = 0.0;
  double peak_intensity = 0.0;
  double peak_x_um = 0.0;  ///< design frame
  double peak_y_um = 0.0;  ///< design frame
  double fwhm_um = 0.0;    ///< along the row through the peak; 0 if unmeasurable
  bool in_support = true;  ///< counted in the homogeneity ratio
};

struct FocusMetrics {
  double peak_intensity = 0.0;  ///< max |E|^2 over the plane's total sum of |E|^2
  double peak_x_um = 0.0;
  double peak_y_um = 0.0;
  std::vector<FwhmCut> fwhm;
  double homogeneity_ratio = 1.0;
  std::vector<RowPeak> rows;
};

/// Global peak with x and y cuts through it.
FocusMetrics plane_metrics(const ComplexField& field);

struct FocalScan {
  double z_um = 0.0;
  FocusMetrics metrics;
  std::vector<double> z_values;
  std::vector<double> peaks;
};

/// Scans n_steps evenly spaced planes over [z_min, z_max] and returns the
/// first plane of maximal normalized peak intensity.
FocalScan find_focal_plane(const ComplexField& field0, double z_min_um, double z_max_um, int n_steps);

struct PatternMetricsOptions {
  /// Fraction of each segment's rows dropped at both ends from the support.
  double end_trim_fraction = 0.1;
  /// Targets closer than this many search windows to another target on the
  /// same row are left out of the support.
  double crowding_windows = 2.0;
};

/// Intensity maximum within +-lambda/NA of every expected target, the
/// homogeneity ratio over the pattern support and a row-wise FWHM.
FocusMetrics pattern_metrics(const ComplexField& field, const RowAssignment& assignment,
                             const PatternMetricsOptions& options = {});

struct LineFit {
  double slope = 0.0;
  double intercept_um = 0.0;
  double rms_residual_um = 0.0;
};

/// Least-squares x = slope * y + intercept through (y, x) pairs.
LineFit fit_line(std::span<const double> ys, std::span<const double> xs);

struct RidgePoint {
  double y_um = 0.0;
  double x_um = 0.0;
};

/// Position of the intensity maximum along every design-frame row of the
/// field, over the lens rows in the central `central_fraction` of the
/// aperture height.
std::vector<RidgePoint> row_ridge(const ComplexField& field, const RowAssignment& assignment,
                                  double central_fraction = 0.8);

/// Sample index range [lo, hi] covering [c - half, c + half] on an axis.
struct IndexWindow {
  std::size_t lo = 0;
  std::size_t hi = 0;
};

}  // namespace focusforge
