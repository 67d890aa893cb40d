#include "focusforge/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string_view>
#include <vector>

#include "focusforge/file_util.hpp"
#include "focusforge/pattern_io.hpp"
#include "json_reader.hpp"

namespace focusforge {

using nlohmann::json;
using nlohmann::ordered_json;
using detail::ObjectReader;

namespace {

struct CsvRow {
  int line = 0;
  std::vector<double> values;
};

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Header line plus numeric rows. Blank lines are allowed only at the end.
struct Csv {
  std::vector<std::string> header;
  std::vector<CsvRow> rows;
};

Csv read_csv(const std::string& text, const std::string& source) {
  Csv csv;
  const auto lines = split(text, '\n');
  std::size_t last = lines.size();
  while (last > 0 && trim(lines[last - 1]).empty()) --last;
  if (last == 0) throw ParseError(source, 1, "missing header");
  for (auto h : split(trim(lines[0]), ',')) csv.header.emplace_back(trim(h));
  for (std::size_t k = 1; k < last; ++k) {
    const int line = int(k) + 1;
    const auto cells = split(trim(lines[k]), ',');
    if (cells.size() != csv.header.size())
      throw ParseError(source, line,
                       "expected " + std::to_string(csv.header.size()) + " fields, found " + std::to_string(cells.size()));
    CsvRow row{line, {}};
    for (auto c : cells) {
      c = trim(c);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (c.empty() || ec != std::errc() || ptr != c.data() + c.size() || !std::isfinite(v))
        throw ParseError(source, line, "not a finite number: '" + std::string(c) + "'");
      row.values.push_back(v);
    }
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

void expect_header(const Csv& csv, const std::vector<std::string>& want, const std::string& source) {
  if (csv.header != want) {
    std::string joined;
    for (const auto& w : want) joined += (joined.empty() ? "" : ",") + w;
    throw ParseError(source, 1, "expected header '" + joined + "'");
  }
}

std::string policy_name(TargetPolicy p) { return p == TargetPolicy::fixed ? "fixed" : "weakest_row"; }

TargetPolicy policy_from_name(const std::string& s, const std::string& where) {
  if (s == "weakest_row") return TargetPolicy::weakest_row;
  if (s == "fixed") return TargetPolicy::fixed;
  throw SchemaError(where + ": expected \"weakest_row\" or \"fixed\"");
}

}  // namespace

std::string format_g(double v, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string layout_csv(const ShifterLayout& layout) {
  std::string out = "x_um,y_um,dimension_nm\n";
  out.reserve(out.size() + layout.elements.size() * 32);
  for (const auto& e : layout.elements)
    out += format_g(e.x_um, 9) + "," + format_g(e.y_um, 9) + "," + format_g(e.dimension_nm, 9) + "\n";
  return out;
}

ordered_json layout_meta(const ShifterLayout& layout) {
  return {{"lens", lens_to_json(layout.lens)},
          {"lut_kind", to_string(layout.lut_kind)},
          {"elements", layout.elements.size()},
          {"generated_by", kGeneratedBy}};
}

ShifterLayout parse_layout(const std::string& text, const json& meta, const std::string& source) {
  ShifterLayout layout;
  {
    ObjectReader r(meta, source + " metadata");
    layout.lens = lens_from_json(r.raw("lens"), r.field("lens"));
    try {
      layout.lut_kind = lut_kind_from_string(r.string("lut_kind"));
    } catch (const std::invalid_argument& e) {
      throw SchemaError(r.field("lut_kind") + ": " + e.what());
    }
    const auto& n = r.raw("elements");
    if (!n.is_number_unsigned()) throw SchemaError(r.field("elements") + ": expected a count");
    r.string("generated_by", "");
    r.finish();
    const Csv csv = read_csv(text, source);
    expect_header(csv, {"x_um", "y_um", "dimension_nm"}, source);
    if (csv.rows.size() != n.get<std::size_t>())
      throw ParseError(source, int(csv.rows.size()) + 1,
                       "metadata declares " + std::to_string(n.get<std::size_t>()) + " elements, file has " +
                           std::to_string(csv.rows.size()));
    for (const auto& row : csv.rows) layout.elements.push_back({row.values[0], row.values[1], row.values[2]});
  }
  return layout;
}

void export_layout(const ShifterLayout& layout, const std::filesystem::path& path) {
  StagedOutputs staged;
  staged.stage(path, layout_csv(layout));
  staged.stage(sidecar_path(path), layout_meta(layout).dump(2) + "\n");
  staged.commit();
}

ShifterLayout import_layout(const std::filesystem::path& path) {
  const auto meta_path = sidecar_path(path);
  return parse_layout(read_file(path), parse_json_text(read_file(meta_path), meta_path.string()), path.string());
}

std::string lut_csv(const PhaseLUT& lut) {
  std::string out = "dimension_nm,phase_rad\n";
  for (const auto& e : lut.entries) out += format_g(e.dimension_nm, 17) + "," + format_g(e.phase_rad, 17) + "\n";
  return out;
}

PhaseLUT parse_lut(const std::string& text, double wavelength_um, LutKind kind, const std::string& source) {
  const Csv csv = read_csv(text, source);
  expect_header(csv, {"dimension_nm", "phase_rad"}, source);
  PhaseLUT lut;
  lut.kind = kind;
  lut.wavelength_um = wavelength_um;
  for (const auto& row : csv.rows) {
    if (!lut.entries.empty() && row.values[0] <= lut.entries.back().dimension_nm)
      throw ParseError(source, row.line, "dimensions must be strictly increasing");
    lut.entries.push_back({row.values[0], row.values[1]});
  }
  lut.validate();
  return lut;
}

PhaseLUT import_lut(const std::filesystem::path& path, double wavelength_um, LutKind kind) {
  return parse_lut(read_file(path), wavelength_um, kind, path.string());
}

std::string shift_table_csv(const ShiftTable& table) {
  std::string out = "slope,a_um,s_um,achieved_intensity\n";
  for (const auto& e : table.entries)
    out += format_g(e.slope, 17) + "," + format_g(e.a_um, 17) + "," + format_g(e.s_um, 17) + "," +
           format_g(e.achieved_intensity, 17) + "\n";
  return out;
}

ordered_json shift_table_meta(const ShiftTable& table) {
  const auto& c = table.config;
  return {{"config",
           {{"micro_aperture_w_um", c.micro_aperture_w_um},
            {"s_min_um", c.s_min_um},
            {"s_max_um", c.s_max_um},
            {"s_step_um", c.s_step_um},
            {"tolerance", c.tolerance},
            {"padding_factor", c.padding_factor},
            {"policy", policy_name(c.policy)},
            {"fixed_target", c.fixed_target}}},
          {"target_intensity", table.target_intensity},
          {"generated_by", kGeneratedBy}};
}

ShiftTable parse_shift_table(const std::string& text, const json& meta, const std::string& source) {
  ShiftTable table;
  {
    ObjectReader r(meta, source + " metadata");
    ObjectReader c(r.raw("config"), r.field("config"));
    auto& cfg = table.config;
    cfg.micro_aperture_w_um = c.number("micro_aperture_w_um");
    cfg.s_min_um = c.number("s_min_um");
    cfg.s_max_um = c.number("s_max_um");
    cfg.s_step_um = c.number("s_step_um");
    cfg.tolerance = c.number("tolerance");
    cfg.padding_factor = c.number("padding_factor");
    cfg.policy = policy_from_name(c.string("policy"), c.field("policy"));
    cfg.fixed_target = c.number("fixed_target", 0.0);
    c.finish();
    table.target_intensity = r.number("target_intensity");
    r.string("generated_by", "");
    r.finish();
  }
  const Csv csv = read_csv(text, source);
  const bool with_slope = csv.header.size() == 4;
  expect_header(csv,
                with_slope ? std::vector<std::string>{"slope", "a_um", "s_um", "achieved_intensity"}
                           : std::vector<std::string>{"a_um", "s_um", "achieved_intensity"},
                source);
  if (csv.rows.empty()) throw ParseError(source, 2, "table has no entries");
  for (const auto& row : csv.rows) {
    ShiftEntry e;
    std::size_t k = 0;
    e.slope = with_slope ? row.values[k++] : 0.0;
    e.a_um = row.values[k++];
    e.s_um = row.values[k++];
    e.achieved_intensity = row.values[k++];
    if (e.slope < 0.0) throw ParseError(source, row.line, "slope must be >= 0");
    if (!table.entries.empty()) {
      const auto& p = table.entries.back();
      if (e.slope < p.slope || (e.slope == p.slope && e.a_um <= p.a_um))
        throw ParseError(source, row.line, "entries must be ordered by slope, then strictly by a_um");
    }
    table.entries.push_back(e);
  }
  // Every slope group has to sample the same offsets for bilinear lookup.
  std::vector<double> first;
  for (const auto& e : table.entries) {
    if (e.slope != table.entries.front().slope) break;
    first.push_back(e.a_um);
  }
  if (table.entries.size() % first.size() != 0)
    throw ParseError(source, int(csv.rows.size()) + 1, "slope groups sample different offsets");
  for (std::size_t k = 0; k < table.entries.size(); ++k)
    if (table.entries[k].a_um != first[k % first.size()] ||
        table.entries[k].slope != table.entries[k - k % first.size()].slope)
      throw ParseError(source, csv.rows[k].line, "slope groups sample different offsets");
  return table;
}

void export_shift_table(const ShiftTable& table, const std::filesystem::path& path) {
  StagedOutputs staged;
  staged.stage(path, shift_table_csv(table));
  staged.stage(sidecar_path(path), shift_table_meta(table).dump(2) + "\n");
  staged.commit();
}

ShiftTable import_shift_table(const std::filesystem::path& path) {
  const auto meta_path = sidecar_path(path);
  return parse_shift_table(read_file(path), parse_json_text(read_file(meta_path), meta_path.string()),
                           path.string());
}

}  // namespace focusforge
