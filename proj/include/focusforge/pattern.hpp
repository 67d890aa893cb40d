#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "focusforge/lens_spec.hpp"
#include "focusforge/phase_profile.hpp"

namespace focusforge {

struct PointTarget {
  double x_um = 0.0;
  double y_um = 0.0;
};

/// Straight stroke y = k x + c restricted to y in [y_min, y_max].
struct LineTarget {
  double k = 1.0;
  double c_um = 0.0;
  double y_min_um = 0.0;
  double y_max_um = 0.0;
};

/// Vertical stroke at x = -a for y in [y_min, y_max].
struct ConstantOffsetTarget {
  double a_um = 0.0;
  double y_min_um = 0.0;
  double y_max_um = 0.0;
};

/// Circular arc. Azimuth is measured counter-clockwise from +x, in degrees.
struct ArcTarget {
  double r_um = 1.0;
  double center_x_um = 0.0;
  double center_y_um = 0.0;
  double azimuth_start_deg = 0.0;
  double azimuth_end_deg = 360.0;
};

using SegmentShape = std::variant<PointTarget, LineTarget, ConstantOffsetTarget, ArcTarget>;

struct Segment {
  SegmentShape shape;
  bool homogenize = false;
};

struct BoundingBox {
  double x_min_um = 0.0;
  double x_max_um = 0.0;
  double y_min_um = 0.0;
  double y_max_um = 0.0;

  bool contains(double x, double y, double tol = 1e-9) const {
    return x >= x_min_um - tol && x <= x_max_um + tol && y >= y_min_um - tol &&
           y <= y_max_um + tol;
  }
};

/// Which lens axis carries the micro lenses. With `rows` each lens row (fixed
/// y) is a micro lens steering in x. With `columns` the design is carried out
/// on the transposed lens and the resulting profile is transposed back, so the
/// focus pattern appears with x and y exchanged in the physical frame.
enum class Orientation { rows, columns };

struct PatternSpec {
  std::vector<Segment> segments;
  BoundingBox bounding_box;
  Orientation orientation = Orientation::rows;

  /// Throws std::invalid_argument on empty ranges, bad azimuths, or a target
  /// locus leaving the bounding box.
  void validate() const;
};

struct SubAperture {
  double x_lo_um = 0.0;
  double x_hi_um = 0.0;
  double a_um = 0.0;
  double s_um = 0.0;
  int segment_id = -1;
  /// d(target x)/dy of the locus at this row; 0 for points.
  double slope = 0.0;

  double center_um() const { return 0.5 * (x_lo_um + x_hi_um); }
  double target_x_um() const { return -a_um; }
  /// Offset relative to the sub-aperture centre; equals a for centred apertures.
  double relative_offset_um() const { return a_um + center_um(); }

  bool operator==(const SubAperture&) const = default;
};

struct AssignedRow {
  int row_index = 0;
  double y_um = 0.0;
  std::vector<SubAperture> subapertures;  ///< disjoint, ordered by x

  bool operator==(const AssignedRow&) const = default;
};

/// Per (row, segment) spacing and beam-width report.
struct RowDiagnostic {
  int row_index = 0;
  double y_um = 0.0;
  int segment_id = -1;
  double target_x_um = 0.0;
  double spacing_um = 0.0;
  double offset_step_um = 0.0;
  double local_na = 0.0;
  double diffraction_limit_um = 0.0;
  bool spacing_ok = false;
  bool spacing_defined = false;
  double beam_width_um = 0.0;
  bool beam_width_ok = false;

  bool operator==(const RowDiagnostic&) const = default;
};

/// Compiled per-row micro-lens parameters. All coordinates are in the design
/// frame `frame`, which is the physical lens or its transpose.
struct RowAssignment {
  LensSpec frame;
  bool transposed = false;
  std::vector<AssignedRow> rows;
  std::vector<bool> segment_homogenize;
  /// Row nearest a point target's y per segment, -1 for extended segments.
  std::vector<int> segment_point_row;
  std::vector<RowDiagnostic> diagnostics;
  std::vector<std::string> warnings;

  /// Lens in the physical frame.
  LensSpec physical_lens() const { return transposed ? frame.transposed() : frame; }
  bool operator==(const RowAssignment&) const = default;
};

RowAssignment compile_segments(const PatternSpec& pattern, const LensSpec& spec);

/// Evaluates the shifted-focus phase at every cell centre of its sub-aperture,
/// zero phase elsewhere, wrapped to [0, 2 pi). Returned in the physical frame.
PhaseProfile synthesize_profile(const RowAssignment& assignment);

/// Uniformly sampled phase phi(u) for u = 0, du, 2 du, ...
struct RadialProfile {
  double du_um = 0.01;
  std::vector<double> values;

  double u_max_um() const { return values.empty() ? 0.0 : du_um * double(values.size() - 1); }
  /// Linear interpolation; u must lie in [0, u_max].
  double at(double u_um) const;
};

/// One-sided off-axis lens phase phi(u) = shifted_focus_phase(u, a, s = 0).
RadialProfile off_axis_radial_profile(double a_um, const LensSpec& spec, double u_max_um,
                                      double du_um);

/// Sweeps `radial` around the arc centre over the arc's azimuth range
/// [start, end). Cells outside the range or beyond u_max get zero phase.
/// Throws std::invalid_argument("radial profile too short") when the profile
/// does not reach the nearest aperture edge from an interior centre.
PhaseProfile rotate_half_lens(const RadialProfile& radial, const ArcTarget& arc,
                              const LensSpec& spec);

/// True iff the azimuth of (dx, dy) lies in [start, end) (whole circle for 360).
bool azimuth_in_range(double dx, double dy, double start_deg, double end_deg);

/// Letter presets "M" and "U". Throws std::invalid_argument listing the
/// available presets for unknown names.
PatternSpec compile_letter(const std::string& preset, const LensSpec& spec);

/// Single line stroke y = k x + c over every lens row.
PatternSpec line_preset(double k, double c_um, const LensSpec& spec);

/// Quarter arc of radius r centred on the middle of the lens's lower edge:
/// a(y) = -sqrt(r^2 - (y - y_edge)^2) over every lens row, so the row at the
/// edge steers furthest. Throws std::out_of_range("row outside arc support")
/// if a lens row lies more than r above the edge.
PatternSpec arc_preset(double r_um, const LensSpec& spec);

/// Design-frame parameters of the 'U' preset, shared by the rotation builder.
struct LetterUGeometry {
  double radius_um = 10.0;
  double center_x_um = 0.0;
  double center_y_um = -5.0;
  double top_y_um = 20.0;
};
LetterUGeometry letter_u_geometry();

/// Builds the 'U' by the rotation construction: the vertical strokes come from
/// row-compiled sub-apertures above the arc centre and the lower half is the
/// rotated one-sided off-axis profile.
PhaseProfile synthesize_letter_u_rotated(const LensSpec& spec);

}  // namespace focusforge
