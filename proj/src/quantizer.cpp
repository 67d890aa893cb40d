#include "focusforge/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace focusforge {

double wrap_phase(double phi_rad) {
  if (!std::isfinite(phi_rad)) throw std::invalid_argument("phase must be finite");
  double w = std::fmod(phi_rad, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  // fmod of a tiny negative value can round up to exactly 2 pi.
  if (w >= kTwoPi) w = 0.0;
  return w;
}

double phase_distance(double a_rad, double b_rad) {
  const double d = wrap_phase(a_rad - b_rad);
  return std::min(d, kTwoPi - d);
}

void PhaseProfile::validate() const {
  lens.validate();
  if (phase.rows() != std::size_t(lens.ny()) || phase.cols() != std::size_t(lens.nx()))
    throw std::invalid_argument("phase grid does not match lens dimensions");
  for (double v : phase.values())
    if (!(v >= 0.0 && v < kTwoPi)) throw std::invalid_argument("phase value outside [0, 2pi)");
}

PhaseProfile discretize(const std::function<double(double, double)>& field, const LensSpec& spec) {
  spec.validate();
  PhaseProfile out{spec, Grid2D<double>(spec.ny(), spec.nx())};
  for (int i = 0; i < spec.ny(); ++i)
    for (int j = 0; j < spec.nx(); ++j)
      out.phase(i, j) = wrap_phase(field(spec.cell_x(j), spec.cell_y(i)));
  return out;
}

std::string to_string(LutKind kind) {
  return kind == LutKind::cylinder_diameter ? "cylinder-diameter" : "grating-fill-factor";
}

LutKind lut_kind_from_string(const std::string& name) {
  if (name == "cylinder-diameter") return LutKind::cylinder_diameter;
  if (name == "grating-fill-factor") return LutKind::grating_fill_factor;
  throw std::invalid_argument("unknown LUT kind '" + name +
                              "' (expected cylinder-diameter or grating-fill-factor)");
}

double PhaseLUT::phase_span() const {
  if (entries.empty()) return 0.0;
  return entries.back().phase_rad - entries.front().phase_rad;
}

void PhaseLUT::validate() const {
  if (entries.size() < 2) throw std::invalid_argument("LUT needs at least two entries");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (!std::isfinite(e.dimension_nm) || !std::isfinite(e.phase_rad))
      throw std::invalid_argument("LUT entries must be finite");
    if (e.dimension_nm < kMinFeatureNm - 1e-9)
      throw std::invalid_argument("LUT dimension below minimum feature size");
    if (i > 0) {
      if (e.dimension_nm <= entries[i - 1].dimension_nm)
        throw std::invalid_argument("LUT dimensions must be strictly increasing");
      if (e.phase_rad < entries[i - 1].phase_rad)
        throw std::invalid_argument("LUT phases must be nondecreasing");
    }
  }
  const double n = double(entries.size());
  if (phase_span() < kTwoPi - kTwoPi / n - 1e-12)
    throw std::invalid_argument("LUT does not cover 2π");
  if (phase_span() >= kTwoPi + 1e-12) throw std::invalid_argument("LUT phase span exceeds 2π");
}

PhaseLUT synthetic_lut(int n_entries, double d_min_nm, double d_max_nm, double wavelength_um,
                       LutKind kind) {
  if (n_entries < 8) throw std::invalid_argument("synthetic LUT needs at least 8 entries");
  if (!(d_min_nm >= kMinFeatureNm) || !(d_max_nm > d_min_nm))
    throw std::invalid_argument("synthetic LUT needs 40 nm <= d_min < d_max");
  PhaseLUT lut;
  lut.kind = kind;
  lut.wavelength_um = wavelength_um;
  const double span = kTwoPi * double(n_entries - 1) / double(n_entries);
  for (int i = 0; i < n_entries; ++i) {
    const double t = double(i) / double(n_entries - 1);
    const double smooth = t * t * (3.0 - 2.0 * t);
    lut.entries.push_back({d_min_nm + t * (d_max_nm - d_min_nm), span * smooth});
  }
  return lut;
}

double lut_dimension_for_phase(const PhaseLUT& lut, double phase_rad) {
  const auto& e = lut.entries;
  const double p0 = e.front().phase_rad;
  // Table-relative phase in [0, 2 pi).
  const double rel = wrap_phase(phase_rad - p0);
  const double span = lut.phase_span();
  if (rel >= span) {
    // Uncovered gap between the last entry and p0 + 2 pi.
    return (rel - span <= kTwoPi - rel) ? e.back().dimension_nm : e.front().dimension_nm;
  }
  const double p = p0 + rel;
  auto hi = std::upper_bound(e.begin(), e.end(), p,
                             [](double v, const LutEntry& x) { return v < x.phase_rad; });
  if (hi == e.begin()) return e.front().dimension_nm;
  if (hi == e.end()) return e.back().dimension_nm;
  auto lo = std::prev(hi);
  const double dp = hi->phase_rad - lo->phase_rad;
  if (dp <= 0.0) return lo->dimension_nm;
  const double t = (p - lo->phase_rad) / dp;
  return lo->dimension_nm + t * (hi->dimension_nm - lo->dimension_nm);
}

double lut_phase_for_dimension(const PhaseLUT& lut, double dimension_nm) {
  const auto& e = lut.entries;
  const double tol = 1e-9 * std::max(1.0, std::abs(e.back().dimension_nm));
  if (!(dimension_nm >= e.front().dimension_nm - tol && dimension_nm <= e.back().dimension_nm + tol))
    throw std::out_of_range("shifter dimension outside LUT range");
  const double d = std::clamp(dimension_nm, e.front().dimension_nm, e.back().dimension_nm);
  auto hi = std::lower_bound(e.begin(), e.end(), d,
                             [](const LutEntry& x, double v) { return x.dimension_nm < v; });
  if (hi == e.begin()) return e.front().phase_rad;
  auto lo = std::prev(hi);
  const double t = (d - lo->dimension_nm) / (hi->dimension_nm - lo->dimension_nm);
  return lo->phase_rad + t * (hi->phase_rad - lo->phase_rad);
}

ShifterLayout phase_to_structure(const PhaseProfile& profile, const PhaseLUT& lut) {
  lut.validate();
  if (std::abs(lut.wavelength_um - profile.lens.wavelength_um) > 1e-9)
    throw std::invalid_argument("LUT wavelength does not match lens wavelength");
  ShifterLayout layout;
  layout.lut_kind = lut.kind;
  layout.lens = profile.lens;
  const auto& lens = profile.lens;
  layout.elements.reserve(profile.phase.size());
  for (int i = 0; i < lens.ny(); ++i)
    for (int j = 0; j < lens.nx(); ++j)
      layout.elements.push_back(
          {lens.cell_x(j), lens.cell_y(i), lut_dimension_for_phase(lut, profile.phase(i, j))});
  return layout;
}

PhaseProfile structure_to_phase(const ShifterLayout& layout, const PhaseLUT& lut) {
  lut.validate();
  const auto& lens = layout.lens;
  lens.validate();
  if (layout.elements.size() != std::size_t(lens.nx()) * std::size_t(lens.ny()))
    throw std::invalid_argument("layout element count does not match lens grid");
  PhaseProfile out{lens, Grid2D<double>(lens.ny(), lens.nx())};
  for (std::size_t k = 0; k < layout.elements.size(); ++k)
    out.phase.values()[k] = wrap_phase(lut_phase_for_dimension(lut, layout.elements[k].dimension_nm));
  return out;
}

}  // namespace focusforge
