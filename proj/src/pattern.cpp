#include "focusforge/pattern.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "focusforge/phase_synthesis.hpp"
#include "focusforge/quantizer.hpp"

namespace focusforge {
namespace {

constexpr double kDeg = kPi / 180.0;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

/// One focus target on one row together with the offset function a(y) of the
/// branch it came from.
struct RowTarget {
  double x_um;
  int segment_id;
  std::function<double(double)> offset;
};

bool azimuth_in_closed_range(double dx, double dy, double start_deg, double end_deg) {
  if (end_deg - start_deg >= 360.0) return true;
  double t = std::fmod(std::atan2(dy, dx) / kDeg - start_deg, 360.0);
  if (t < 0.0) t += 360.0;
  if (t > 360.0 - 1e-9) t = 0.0;
  return t <= end_deg - start_deg + 1e-9;
}

void targets_on_row(const Segment& seg, int id, double y, std::vector<RowTarget>& out) {
  std::visit(
      overloaded{
          [&](const PointTarget& p) {
            out.push_back({p.x_um, id, [a = -p.x_um](double) { return a; }});
          },
          [&](const LineTarget& l) {
            if (y < l.y_min_um || y > l.y_max_um) return;
            auto fn = [k = l.k, c = l.c_um](double yy) { return line_offset(yy, k, c); };
            out.push_back({-fn(y), id, fn});
          },
          [&](const ConstantOffsetTarget& c) {
            if (y < c.y_min_um || y > c.y_max_um) return;
            out.push_back({-c.a_um, id, [a = c.a_um](double) { return a; }});
          },
          [&](const ArcTarget& arc) {
            const double dy = y - arc.center_y_um;
            if (std::abs(dy) > arc.r_um) return;
            const double half = -arc_offset(dy, arc.r_um);
            const double cx = arc.center_x_um, cy = arc.center_y_um, r = arc.r_um;
            bool right_taken = false;
            if (azimuth_in_closed_range(half, dy, arc.azimuth_start_deg, arc.azimuth_end_deg)) {
              out.push_back(
                  {cx + half, id, [=](double yy) { return arc_offset(yy - cy, r) - cx; }});
              right_taken = true;
            }
            if ((!right_taken || half > 1e-12) &&
                azimuth_in_closed_range(-half, dy, arc.azimuth_start_deg, arc.azimuth_end_deg)) {
              out.push_back(
                  {cx - half, id, [=](double yy) { return -arc_offset(yy - cy, r) - cx; }});
            }
          },
      },
      seg.shape);
}

/// Vertical extent [lo, hi] of a segment's locus.
std::pair<double, double> segment_y_extent(const Segment& seg, const LensSpec& frame) {
  return std::visit(overloaded{
                        [&](const PointTarget&) {
                          return std::pair{-0.5 * frame.aperture_h_um, 0.5 * frame.aperture_h_um};
                        },
                        [](const LineTarget& l) { return std::pair{l.y_min_um, l.y_max_um}; },
                        [](const ConstantOffsetTarget& c) {
                          return std::pair{c.y_min_um, c.y_max_um};
                        },
                        [](const ArcTarget& a) {
                          return std::pair{a.center_y_um - a.r_um, a.center_y_um + a.r_um};
                        },
                    },
                    seg.shape);
}

MicroFocusSpacing spacing_with_fallback(const std::function<double(double)>& fn, double y,
                                        double pitch, bool& defined) {
  defined = true;
  try {
    return micro_focus_spacing(fn, y, pitch);
  } catch (const std::out_of_range&) {
  }
  try {
    return micro_focus_spacing(fn, y - pitch, pitch);
  } catch (const std::out_of_range&) {
  }
  defined = false;
  return {};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace

void PatternSpec::validate() const {
  if (segments.empty()) throw std::invalid_argument("pattern has no segments");
  const auto& bb = bounding_box;
  if (!(bb.x_max_um > bb.x_min_um) || !(bb.y_max_um > bb.y_min_um))
    throw std::invalid_argument("pattern bounding box is empty");
  for (std::size_t id = 0; id < segments.size(); ++id) {
    const std::string tag = "segment " + std::to_string(id) + ": ";
    auto inside = [&](double x, double y) {
      if (!bb.contains(x, y, 1e-6)) throw std::invalid_argument(tag + "locus leaves bounding box");
    };
    std::visit(overloaded{
                   [&](const PointTarget& p) { inside(p.x_um, p.y_um); },
                   [&](const LineTarget& l) {
                     if (l.k == 0.0) throw std::invalid_argument(tag + "vertical-line degenerate slope");
                     if (!(l.y_max_um > l.y_min_um)) throw std::invalid_argument(tag + "empty y range");
                     inside((l.y_min_um - l.c_um) / l.k, l.y_min_um);
                     inside((l.y_max_um - l.c_um) / l.k, l.y_max_um);
                   },
                   [&](const ConstantOffsetTarget& c) {
                     if (!(c.y_max_um > c.y_min_um)) throw std::invalid_argument(tag + "empty y range");
                     inside(-c.a_um, c.y_min_um);
                     inside(-c.a_um, c.y_max_um);
                   },
                   [&](const ArcTarget& a) {
                     if (!(a.r_um > 0.0)) throw std::invalid_argument(tag + "arc radius must be > 0");
                     if (!(a.azimuth_end_deg > a.azimuth_start_deg) ||
                         a.azimuth_end_deg > a.azimuth_start_deg + 360.0)
                       throw std::invalid_argument(tag + "azimuth range must satisfy start < end <= start + 360");
                     const int n = 64;
                     for (int s = 0; s <= n; ++s) {
                       const double th =
                           (a.azimuth_start_deg + (a.azimuth_end_deg - a.azimuth_start_deg) * s / n) * kDeg;
                       inside(a.center_x_um + a.r_um * std::cos(th), a.center_y_um + a.r_um * std::sin(th));
                     }
                   },
               },
               segments[id].shape);
  }
}

RowAssignment compile_segments(const PatternSpec& pattern, const LensSpec& spec) {
  spec.validate();
  pattern.validate();
  RowAssignment out;
  out.transposed = pattern.orientation == Orientation::columns;
  out.frame = out.transposed ? spec.transposed() : spec;
  const LensSpec& frame = out.frame;
  const double half_w = 0.5 * frame.aperture_w_um;
  const double y_lo = frame.cell_y(0), y_hi = frame.cell_y(frame.ny() - 1);

  for (std::size_t id = 0; id < pattern.segments.size(); ++id) {
    out.segment_homogenize.push_back(pattern.segments[id].homogenize);
    int point_row = -1;
    if (const auto* pt = std::get_if<PointTarget>(&pattern.segments[id].shape)) {
      const double fi = (pt->y_um + 0.5 * frame.aperture_h_um) / frame.pitch_um - 0.5;
      point_row = std::clamp(int(std::lround(fi)), 0, frame.ny() - 1);
    }
    out.segment_point_row.push_back(point_row);
    const auto [lo, hi] = segment_y_extent(pattern.segments[id], frame);
    if (hi < y_lo || lo > y_hi)
      throw std::invalid_argument("segment " + std::to_string(id) + " lies outside the lens aperture");
  }

  // (segment pair) -> rows closer than the diffraction limit
  std::map<std::pair<int, int>, std::vector<double>> close_rows;
  int beam_width_flags = 0;
  int spacing_flags = 0;

  for (int i = 0; i < frame.ny(); ++i) {
    const double y = frame.cell_y(i);
    std::vector<RowTarget> targets;
    for (std::size_t id = 0; id < pattern.segments.size(); ++id)
      targets_on_row(pattern.segments[id], int(id), y, targets);
    if (targets.empty()) continue;
    std::stable_sort(targets.begin(), targets.end(),
                     [](const RowTarget& a, const RowTarget& b) { return a.x_um < b.x_um; });

    AssignedRow row{i, y, {}};
    const double width = frame.aperture_w_um / double(targets.size());
    for (std::size_t t = 0; t < targets.size(); ++t) {
      SubAperture sub;
      sub.x_lo_um = -half_w + width * double(t);
      sub.x_hi_um = t + 1 == targets.size() ? half_w : -half_w + width * double(t + 1);
      sub.a_um = -targets[t].x_um;
      sub.segment_id = targets[t].segment_id;

      RowDiagnostic d;
      d.row_index = i;
      d.y_um = y;
      d.segment_id = sub.segment_id;
      d.target_x_um = targets[t].x_um;
      const auto spacing = spacing_with_fallback(targets[t].offset, y, frame.pitch_um, d.spacing_defined);
      d.spacing_um = spacing.spacing_um;
      d.offset_step_um = spacing.offset_step_um;
      if (d.spacing_defined) sub.slope = -spacing.offset_step_um / frame.pitch_um;
      row.subapertures.push_back(sub);
      d.local_na = subaperture_na(sub.x_lo_um, sub.x_hi_um, sub.a_um, frame.focal_length_um);
      d.diffraction_limit_um = diffraction_limit(frame.wavelength_um, d.local_na);
      d.spacing_ok = d.spacing_defined && spacing_criterion_satisfied(d.spacing_um, frame.wavelength_um, d.local_na);
      d.beam_width_um = beam_width(frame.pitch_um, d.local_na);
      d.beam_width_ok = d.beam_width_um <= d.diffraction_limit_um;
      if (!d.spacing_ok) ++spacing_flags;
      if (!d.beam_width_ok) ++beam_width_flags;
      out.diagnostics.push_back(d);
    }
    for (std::size_t t = 0; t + 1 < targets.size(); ++t) {
      const auto& da = out.diagnostics[out.diagnostics.size() - targets.size() + t];
      const auto& db = out.diagnostics[out.diagnostics.size() - targets.size() + t + 1];
      const double limit = diffraction_limit(frame.wavelength_um, std::min(da.local_na, db.local_na));
      if (targets[t + 1].x_um - targets[t].x_um < limit)
        close_rows[{targets[t].segment_id, targets[t + 1].segment_id}].push_back(y);
    }
    out.rows.push_back(std::move(row));
  }

  for (const auto& [pair, ys] : close_rows) {
    out.warnings.push_back("segments " + std::to_string(pair.first) + " and " +
                           std::to_string(pair.second) + " are closer than the diffraction limit on " +
                           std::to_string(ys.size()) + " rows (y from " + fmt(ys.front()) + " to " +
                           fmt(ys.back()) + " um)");
  }
  if (spacing_flags > 0)
    out.warnings.push_back(std::to_string(spacing_flags) +
                           " row targets violate the micro-focus spacing criterion");
  if (beam_width_flags > 0)
    out.warnings.push_back(std::to_string(beam_width_flags) +
                           " row targets have beam width above the diffraction limit");
  return out;
}

PhaseProfile synthesize_profile(const RowAssignment& assignment) {
  const LensSpec& frame = assignment.frame;
  frame.validate();
  Grid2D<double> phase(frame.ny(), frame.nx(), 0.0);
  for (const auto& row : assignment.rows) {
    if (row.row_index < 0 || row.row_index >= frame.ny() || row.subapertures.empty())
      throw std::invalid_argument("assignment row inconsistent with lens grid");
    std::size_t k = 0;
    for (int j = 0; j < frame.nx(); ++j) {
      const double x = frame.cell_x(j);
      while (k + 1 < row.subapertures.size() && x >= row.subapertures[k].x_hi_um) ++k;
      const auto& sub = row.subapertures[k];
      phase(row.row_index, j) =
          wrap_phase(shifted_focus_phase(x, {row.y_um, sub.a_um, sub.s_um}, frame));
    }
  }
  if (assignment.transposed) return {frame.transposed(), phase.transposed()};
  return {frame, std::move(phase)};
}

double RadialProfile::at(double u_um) const {
  if (values.empty()) throw std::invalid_argument("empty radial profile");
  if (!(u_um >= 0.0) || u_um > u_max_um() * (1.0 + 1e-12))
    throw std::out_of_range("radial coordinate outside profile");
  const double t = u_um / du_um;
  const std::size_t i = std::min(std::size_t(t), values.size() - 1);
  if (i + 1 >= values.size()) return values.back();
  const double frac = t - double(i);
  return values[i] + frac * (values[i + 1] - values[i]);
}

RadialProfile off_axis_radial_profile(double a_um, const LensSpec& spec, double u_max_um, double du_um) {
  if (!(du_um > 0.0) || !(u_max_um > 0.0)) throw std::invalid_argument("radial sampling must be positive");
  RadialProfile p;
  p.du_um = du_um;
  const auto n = std::size_t(std::ceil(u_max_um / du_um)) + 1;
  p.values.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    p.values.push_back(shifted_focus_phase(du_um * double(i), {0.0, a_um, 0.0}, spec));
  return p;
}

bool azimuth_in_range(double dx, double dy, double start_deg, double end_deg) {
  if (end_deg - start_deg >= 360.0) return true;
  double t = std::fmod(std::atan2(dy, dx) / kDeg - start_deg, 360.0);
  if (t < 0.0) t += 360.0;
  if (t >= 360.0) t = 0.0;
  return t < end_deg - start_deg;
}

PhaseProfile rotate_half_lens(const RadialProfile& radial, const ArcTarget& arc, const LensSpec& spec) {
  spec.validate();
  if (!(arc.azimuth_end_deg > arc.azimuth_start_deg) || arc.azimuth_end_deg > arc.azimuth_start_deg + 360.0)
    throw std::invalid_argument("azimuth range must satisfy start < end <= start + 360");
  const double hw = 0.5 * spec.aperture_w_um, hh = 0.5 * spec.aperture_h_um;
  const double cx = arc.center_x_um, cy = arc.center_y_um;
  if (std::abs(cx) < hw && std::abs(cy) < hh) {
    const double nearest_edge = std::min({cx + hw, hw - cx, cy + hh, hh - cy});
    if (radial.u_max_um() < nearest_edge) throw std::invalid_argument("radial profile too short");
  }
  PhaseProfile out{spec, Grid2D<double>(spec.ny(), spec.nx(), 0.0)};
  const double u_max = radial.u_max_um();
  for (int i = 0; i < spec.ny(); ++i) {
    const double dy = spec.cell_y(i) - cy;
    for (int j = 0; j < spec.nx(); ++j) {
      const double dx = spec.cell_x(j) - cx;
      const double rho = std::hypot(dx, dy);
      if (rho > u_max || !azimuth_in_range(dx, dy, arc.azimuth_start_deg, arc.azimuth_end_deg)) continue;
      out.phase(i, j) = wrap_phase(radial.at(rho));
    }
  }
  return out;
}

PatternSpec compile_letter(const std::string& preset, const LensSpec& spec) {
  PatternSpec p;
  if (preset == "M") {
    // 40 x 40 um box, verticals on the box edges, diagonals meeting at the
    // bottom centre (slopes -2 and +2).
    const double h = 20.0;
    p.bounding_box = {-h, h, -h, h};
    p.segments = {
        {ConstantOffsetTarget{h, -h, h}, true},
        {LineTarget{-2.0, -h, -h, h}, true},
        {LineTarget{2.0, -h, -h, h}, true},
        {ConstantOffsetTarget{-h, -h, h}, true},
    };
    p.orientation = spec.aperture_h_um > spec.aperture_w_um ? Orientation::columns : Orientation::rows;
    return p;
  }
  if (preset == "U") {
    const auto g = letter_u_geometry();
    p.bounding_box = {g.center_x_um - g.radius_um, g.center_x_um + g.radius_um,
                      g.center_y_um - g.radius_um, g.top_y_um};
    p.segments = {
        {ConstantOffsetTarget{g.radius_um - g.center_x_um, g.center_y_um, g.top_y_um}, false},
        {ArcTarget{g.radius_um, g.center_x_um, g.center_y_um, 180.0, 360.0}, false},
        {ConstantOffsetTarget{-g.radius_um - g.center_x_um, g.center_y_um, g.top_y_um}, false},
    };
    return p;
  }
  throw std::invalid_argument("unknown preset '" + preset + "' (available: M, U)");
}

PatternSpec line_preset(double k, double c_um, const LensSpec& spec) {
  spec.validate();
  const double y0 = -0.5 * spec.aperture_h_um, y1 = 0.5 * spec.aperture_h_um;
  const double xa = -line_offset(y0, k, c_um), xb = -line_offset(y1, k, c_um);
  PatternSpec p;
  p.bounding_box = {std::min(xa, xb), std::max(xa, xb), y0, y1};
  if (p.bounding_box.x_max_um - p.bounding_box.x_min_um < 1e-9) {
    p.bounding_box.x_min_um -= 1.0;
    p.bounding_box.x_max_um += 1.0;
  }
  p.segments = {{LineTarget{k, c_um, y0, y1}, false}};
  return p;
}

PatternSpec arc_preset(double r_um, const LensSpec& spec) {
  spec.validate();
  const double edge = -0.5 * spec.aperture_h_um;
  for (int i = 0; i < spec.ny(); ++i) arc_offset(spec.cell_y(i) - edge, r_um);
  PatternSpec p;
  p.bounding_box = {0.0, r_um, edge, edge + r_um};
  p.segments = {{ArcTarget{r_um, 0.0, edge, 0.0, 90.0}, false}};
  return p;
}

LetterUGeometry letter_u_geometry() { return {}; }

PhaseProfile synthesize_letter_u_rotated(const LensSpec& spec) {
  spec.validate();
  const auto g = letter_u_geometry();
  // Upper part: the two vertical strokes compiled by rows.
  PatternSpec upper;
  upper.bounding_box = {g.center_x_um - g.radius_um, g.center_x_um + g.radius_um, g.center_y_um, g.top_y_um};
  upper.segments = {
      {ConstantOffsetTarget{g.radius_um - g.center_x_um, g.center_y_um, g.top_y_um}, false},
      {ConstantOffsetTarget{-g.radius_um - g.center_x_um, g.center_y_um, g.top_y_um}, false},
  };
  PhaseProfile out = synthesize_profile(compile_segments(upper, spec));

  // Lower half: one-sided off-axis profile swept through 180 degrees.
  const double hw = 0.5 * spec.aperture_w_um, hh = 0.5 * spec.aperture_h_um;
  double u_max = 0.0;
  for (double sx : {-1.0, 1.0})
    for (double sy : {-1.0, 1.0})
      u_max = std::max(u_max, std::hypot(sx * hw - g.center_x_um, sy * hh - g.center_y_um));
  const ArcTarget arc{g.radius_um, g.center_x_um, g.center_y_um, 180.0, 360.0};
  const auto radial = off_axis_radial_profile(-g.radius_um, spec, u_max, spec.pitch_um / 8.0);
  const PhaseProfile lower = rotate_half_lens(radial, arc, spec);
  for (int i = 0; i < spec.ny(); ++i) {
    const double dy = spec.cell_y(i) - g.center_y_um;
    for (int j = 0; j < spec.nx(); ++j) {
      const double dx = spec.cell_x(j) - g.center_x_um;
      if (azimuth_in_range(dx, dy, arc.azimuth_start_deg, arc.azimuth_end_deg))
        out.phase(i, j) = lower.phase(i, j);
    }
  }
  return out;
}

}  // namespace focusforge
