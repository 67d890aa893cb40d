#pragma once

#include <functional>
#include <string>
#include <vector>

#include "focusforge/lens_spec.hpp"
#include "focusforge/phase_profile.hpp"

namespace focusforge {

/// Reduces phi to [0, 2 pi). Throws std::invalid_argument for non-finite input.
double wrap_phase(double phi_rad);

/// Circular distance between two phases, in [0, pi].
double phase_distance(double a_rad, double b_rad);

/// Samples `field` at every cell centre of `spec` and wraps the result.
PhaseProfile discretize(const std::function<double(double, double)>& field, const LensSpec& spec);

/// Minimum printable feature size of the shifters.
inline constexpr double kMinFeatureNm = 40.0;

enum class LutKind { cylinder_diameter, grating_fill_factor };

std::string to_string(LutKind kind);
LutKind lut_kind_from_string(const std::string& name);

struct LutEntry {
  double dimension_nm = 0.0;
  double phase_rad = 0.0;
  bool operator==(const LutEntry&) const = default;
};

/// Monotone map between a shifter dimension and its transmission phase.
struct PhaseLUT {
  std::vector<LutEntry> entries;
  LutKind kind = LutKind::cylinder_diameter;
  double wavelength_um = 0.685;

  double phase_span() const;
  /// Structural invariants; throws std::invalid_argument.
  void validate() const;
};

/// Smoothstep-shaped phase curve over [d_min, d_max] with span 2 pi (n - 1) / n.
PhaseLUT synthetic_lut(int n_entries, double d_min_nm = kMinFeatureNm, double d_max_nm = 200.0,
                       double wavelength_um = 0.685,
                       LutKind kind = LutKind::cylinder_diameter);

/// Dimension realizing `phase_rad`, interpolated linearly between the two
/// bracketing entries. Phases in the uncovered gap snap to the circularly
/// nearer end of the table.
double lut_dimension_for_phase(const PhaseLUT& lut, double phase_rad);

/// Phase of a shifter of the given dimension. Throws std::out_of_range when the
/// dimension lies outside the table.
double lut_phase_for_dimension(const PhaseLUT& lut, double dimension_nm);

struct ShifterElement {
  double x_um = 0.0;
  double y_um = 0.0;
  double dimension_nm = 0.0;
  bool operator==(const ShifterElement&) const = default;
};

/// One element per lens cell in row-major order.
struct ShifterLayout {
  std::vector<ShifterElement> elements;
  LutKind lut_kind = LutKind::cylinder_diameter;
  LensSpec lens;
};

/// Throws std::invalid_argument("LUT does not cover 2π") when the table span is
/// short, or on a wavelength mismatch.
ShifterLayout phase_to_structure(const PhaseProfile& profile, const PhaseLUT& lut);

PhaseProfile structure_to_phase(const ShifterLayout& layout, const PhaseLUT& lut);

}  // namespace focusforge
