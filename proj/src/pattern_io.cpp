#include "focusforge/pattern_io.hpp"

#include "focusforge/file_util.hpp"
#include "json_reader.hpp"

namespace focusforge {

using nlohmann::json;
using nlohmann::ordered_json;
using detail::ObjectReader;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Orientation orientation_from_string(const std::string& s, const std::string& where) {
  if (s == "rows") return Orientation::rows;
  if (s == "columns") return Orientation::columns;
  throw SchemaError(where + ": expected \"rows\" or \"columns\"");
}

const char* to_string(Orientation o) { return o == Orientation::rows ? "rows" : "columns"; }

Segment segment_from_json(const json& doc, const std::string& where) {
  ObjectReader r(doc, where);
  const std::string type = r.string("type");
  Segment seg;
  if (type == "point") {
    seg.shape = PointTarget{r.number("x_um"), r.number("y_um")};
  } else if (type == "line") {
    seg.shape = LineTarget{r.number("k"), r.number("c_um"), r.number("y_min_um"), r.number("y_max_um")};
  } else if (type == "constant_offset") {
    seg.shape = ConstantOffsetTarget{r.number("a_um"), r.number("y_min_um"), r.number("y_max_um")};
  } else if (type == "arc") {
    seg.shape = ArcTarget{r.number("r_um"), r.number("center_x_um"), r.number("center_y_um"),
                          r.number("azimuth_start_deg"), r.number("azimuth_end_deg")};
  } else {
    throw SchemaError(r.field("type") + ": unknown segment type '" + type +
                      "' (point, line, constant_offset, arc)");
  }
  seg.homogenize = r.boolean("homogenize", false);
  r.finish();
  return seg;
}

ordered_json segment_to_json(const Segment& seg) {
  ordered_json j = std::visit(
      overloaded{
          [](const PointTarget& p) { return ordered_json{{"type", "point"}, {"x_um", p.x_um}, {"y_um", p.y_um}}; },
          [](const LineTarget& l) {
            return ordered_json{{"type", "line"}, {"k", l.k}, {"c_um", l.c_um},
                                {"y_min_um", l.y_min_um}, {"y_max_um", l.y_max_um}};
          },
          [](const ConstantOffsetTarget& c) {
            return ordered_json{{"type", "constant_offset"}, {"a_um", c.a_um},
                                {"y_min_um", c.y_min_um}, {"y_max_um", c.y_max_um}};
          },
          [](const ArcTarget& a) {
            return ordered_json{{"type", "arc"},
                                {"r_um", a.r_um},
                                {"center_x_um", a.center_x_um},
                                {"center_y_um", a.center_y_um},
                                {"azimuth_start_deg", a.azimuth_start_deg},
                                {"azimuth_end_deg", a.azimuth_end_deg}};
          },
      },
      seg.shape);
  j["homogenize"] = seg.homogenize;
  return j;
}

}  // namespace

json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(what + ": " + e.what());
  }
}

ordered_json lens_to_json(const LensSpec& lens) {
  return {{"wavelength_um", lens.wavelength_um},
          {"focal_length_um", lens.focal_length_um},
          {"pitch_um", lens.pitch_um},
          {"aperture_w_um", lens.aperture_w_um},
          {"aperture_h_um", lens.aperture_h_um},
          {"material_index", lens.material_index},
          {"material_thickness_um", lens.material_thickness_um}};
}

LensSpec lens_from_json(const json& doc, const std::string& where, const LensSpec& base) {
  ObjectReader r(doc, where);
  LensSpec lens = base;
  lens.wavelength_um = r.number("wavelength_um", lens.wavelength_um);
  lens.focal_length_um = r.number("focal_length_um", lens.focal_length_um);
  lens.pitch_um = r.number("pitch_um", lens.pitch_um);
  lens.aperture_w_um = r.number("aperture_w_um", lens.aperture_w_um);
  lens.aperture_h_um = r.number("aperture_h_um", lens.aperture_h_um);
  lens.material_index = r.number("material_index", lens.material_index);
  lens.material_thickness_um = r.number("material_thickness_um", lens.material_thickness_um);
  r.finish();
  return lens;
}

ordered_json pattern_to_json(const PatternSpec& pattern) {
  const auto& bb = pattern.bounding_box;
  ordered_json segs = ordered_json::array();
  for (const auto& s : pattern.segments) segs.push_back(segment_to_json(s));
  return {{"bounding_box",
           {{"x_min_um", bb.x_min_um}, {"x_max_um", bb.x_max_um}, {"y_min_um", bb.y_min_um}, {"y_max_um", bb.y_max_um}}},
          {"orientation", to_string(pattern.orientation)},
          {"segments", segs}};
}

PatternSpec pattern_from_json(const json& doc) {
  ObjectReader r(doc, "");
  PatternSpec p;
  {
    ObjectReader b(r.raw("bounding_box"), "bounding_box");
    p.bounding_box = {b.number("x_min_um"), b.number("x_max_um"), b.number("y_min_um"), b.number("y_max_um")};
    b.finish();
  }
  p.orientation = orientation_from_string(r.string("orientation", "rows"), "orientation");
  const auto& segs = r.array("segments");
  for (std::size_t i = 0; i < segs.size(); ++i)
    p.segments.push_back(segment_from_json(segs[i], "segments[" + std::to_string(i) + "]"));
  r.finish();
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("pattern: ") + e.what());
  }
  return p;
}

PatternSpec load_pattern(const std::filesystem::path& path) {
  return pattern_from_json(parse_json_text(read_file(path), path.string()));
}

ordered_json assignment_to_json(const RowAssignment& a) {
  ordered_json rows = ordered_json::array();
  for (const auto& row : a.rows) {
    ordered_json subs = ordered_json::array();
    for (const auto& s : row.subapertures)
      subs.push_back({{"x_lo_um", s.x_lo_um},
                      {"x_hi_um", s.x_hi_um},
                      {"a_um", s.a_um},
                      {"s_um", s.s_um},
                      {"segment_id", s.segment_id},
                      {"slope", s.slope}});
    rows.push_back({{"row_index", row.row_index}, {"y_um", row.y_um}, {"subapertures", subs}});
  }
  ordered_json diags = ordered_json::array();
  for (const auto& d : a.diagnostics)
    diags.push_back({{"row_index", d.row_index},
                     {"y_um", d.y_um},
                     {"segment_id", d.segment_id},
                     {"target_x_um", d.target_x_um},
                     {"spacing_um", d.spacing_um},
                     {"offset_step_um", d.offset_step_um},
                     {"local_na", d.local_na},
                     {"diffraction_limit_um", d.diffraction_limit_um},
                     {"spacing_ok", d.spacing_ok},
                     {"spacing_defined", d.spacing_defined},
                     {"beam_width_um", d.beam_width_um},
                     {"beam_width_ok", d.beam_width_ok}});
  return {{"frame", lens_to_json(a.frame)},
          {"transposed", a.transposed},
          {"segment_homogenize", a.segment_homogenize},
          {"segment_point_row", a.segment_point_row},
          {"rows", rows},
          {"diagnostics", diags},
          {"warnings", a.warnings}};
}

RowAssignment assignment_from_json(const json& doc) {
  ObjectReader r(doc, "assignment");
  RowAssignment a;
  a.frame = lens_from_json(r.raw("frame"), r.field("frame"));
  a.transposed = r.boolean("transposed");
  for (const auto& v : r.array("segment_homogenize")) {
    if (!v.is_boolean()) throw SchemaError(r.field("segment_homogenize") + ": expected booleans");
    a.segment_homogenize.push_back(v.get<bool>());
  }
  for (const auto& v : r.array("segment_point_row")) {
    if (!v.is_number_integer()) throw SchemaError(r.field("segment_point_row") + ": expected integers");
    a.segment_point_row.push_back(v.get<int>());
  }
  const auto& rows = r.array("rows");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string where = r.field("rows[" + std::to_string(i) + "]");
    ObjectReader rr(rows[i], where);
    AssignedRow row;
    row.row_index = rr.integer("row_index");
    row.y_um = rr.number("y_um");
    const auto& subs = rr.array("subapertures");
    for (std::size_t k = 0; k < subs.size(); ++k) {
      ObjectReader sr(subs[k], where + ".subapertures[" + std::to_string(k) + "]");
      SubAperture s;
      s.x_lo_um = sr.number("x_lo_um");
      s.x_hi_um = sr.number("x_hi_um");
      s.a_um = sr.number("a_um");
      s.s_um = sr.number("s_um");
      s.segment_id = sr.integer("segment_id");
      s.slope = sr.number("slope", 0.0);
      sr.finish();
      if (s.segment_id < 0 || std::size_t(s.segment_id) >= a.segment_homogenize.size())
        throw SchemaError(sr.field("segment_id") + ": no such segment");
      row.subapertures.push_back(s);
    }
    rr.finish();
    a.rows.push_back(std::move(row));
  }
  // Diagnostics and warnings are reports, not inputs; accept and skip them.
  if (r.has("diagnostics")) r.raw("diagnostics");
  if (r.has("warnings")) r.raw("warnings");
  r.finish();
  try {
    a.frame.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("assignment.frame: ") + e.what());
  }
  return a;
}

}  // namespace focusforge
