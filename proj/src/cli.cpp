#include "focusforge/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include "focusforge/csv_io.hpp"
#include "focusforge/field_io.hpp"
#include "focusforge/file_util.hpp"
#include "focusforge/homogenizer.hpp"
#include "focusforge/metrics.hpp"
#include "focusforge/pattern.hpp"
#include "focusforge/pattern_io.hpp"
#include "focusforge/propagation.hpp"
#include "focusforge/quantizer.hpp"
#include "json_reader.hpp"

namespace focusforge::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using detail::ObjectReader;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CompileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SimulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct JobConfig {
  std::string command;
  std::string config_path;
  std::string out_dir = ".";

  LensSpec lens;
  std::string aperture;  // "WxH" flag, folded into lens

  std::string preset;
  std::string pattern_path;
  std::string orientation;  // empty keeps the pattern's own
  double k = -2.0;
  double c_um = 0.0;
  double arc_r_um = 10.0;
  std::string arc_mode = "rows";

  std::string shift_table_path;
  bool refine = false;

  std::string lut_path;
  int lut_entries = 64;
  std::string lut_kind = "cylinder-diameter";
  double d_min_nm = kMinFeatureNm;
  double d_max_nm = 200.0;

  std::string profile_path;
  std::string field_path;
  std::string diagnostics_path;
  double padding = 2.0;
  std::vector<double> planes;
  double z_min_um = 0.0;  // 0 with z_max 0: derived from f
  double z_max_um = 0.0;
  int steps = 41;
  bool dump_field = false;

  CalibrationConfig calibration{.micro_aperture_w_um = 0.0};  // 0 = dominant sub-aperture width
  double a_step_um = 0.5;
  std::vector<double> a_values;
};

// ---------------------------------------------------------------- config

std::vector<double> number_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw SchemaError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw SchemaError(where + ": expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

/// Keys in the config document replace the corresponding flag values.
void apply_config(JobConfig& c, const json& doc) {
  ObjectReader r(doc, "config");
  if (r.has("command") && r.string("command") != c.command)
    throw SchemaError("config.command: '" + doc.at("command").get<std::string>() + "' does not match '" +
                      c.command + "'");
  if (r.has("lens")) c.lens = lens_from_json(r.raw("lens"), "config.lens", c.lens);
  c.out_dir = r.string("out_dir", c.out_dir);
  if (r.has("pattern")) {
    ObjectReader p(r.raw("pattern"), "config.pattern");
    c.preset = p.string("preset", c.preset);
    c.pattern_path = p.string("path", c.pattern_path);
    c.orientation = p.string("orientation", c.orientation);
    c.k = p.number("k", c.k);
    c.c_um = p.number("c_um", c.c_um);
    c.arc_r_um = p.number("arc_r_um", c.arc_r_um);
    c.arc_mode = p.string("arc_mode", c.arc_mode);
    p.finish();
  }
  if (r.has("homogenization")) {
    ObjectReader h(r.raw("homogenization"), "config.homogenization");
    c.shift_table_path = h.string("shift_table", c.shift_table_path);
    c.refine = h.boolean("refine", c.refine);
    h.finish();
  }
  if (r.has("quantization")) {
    ObjectReader q(r.raw("quantization"), "config.quantization");
    c.lut_path = q.string("lut", c.lut_path);
    c.lut_entries = q.integer("lut_entries", c.lut_entries);
    c.lut_kind = q.string("lut_kind", c.lut_kind);
    c.d_min_nm = q.number("d_min_nm", c.d_min_nm);
    c.d_max_nm = q.number("d_max_nm", c.d_max_nm);
    q.finish();
  }
  if (r.has("simulation")) {
    ObjectReader s(r.raw("simulation"), "config.simulation");
    c.profile_path = s.string("profile", c.profile_path);
    c.field_path = s.string("field", c.field_path);
    c.diagnostics_path = s.string("diagnostics", c.diagnostics_path);
    c.padding = s.number("padding", c.padding);
    if (s.has("planes")) c.planes = number_list(s.raw("planes"), s.field("planes"));
    c.z_min_um = s.number("z_min_um", c.z_min_um);
    c.z_max_um = s.number("z_max_um", c.z_max_um);
    c.steps = s.integer("steps", c.steps);
    c.dump_field = s.boolean("dump_field", c.dump_field);
    s.finish();
  }
  if (r.has("calibration")) {
    ObjectReader k(r.raw("calibration"), "config.calibration");
    auto& cal = c.calibration;
    cal.micro_aperture_w_um = k.number("micro_aperture_w_um", cal.micro_aperture_w_um);
    cal.s_min_um = k.number("s_min_um", cal.s_min_um);
    cal.s_max_um = k.number("s_max_um", cal.s_max_um);
    cal.s_step_um = k.number("s_step_um", cal.s_step_um);
    cal.tolerance = k.number("tolerance", cal.tolerance);
    cal.padding_factor = k.number("padding_factor", cal.padding_factor);
    const std::string policy = k.string("policy", cal.policy == TargetPolicy::fixed ? "fixed" : "weakest_row");
    if (policy != "fixed" && policy != "weakest_row")
      throw SchemaError(k.field("policy") + ": expected \"weakest_row\" or \"fixed\"");
    cal.policy = policy == "fixed" ? TargetPolicy::fixed : TargetPolicy::weakest_row;
    cal.fixed_target = k.number("fixed_target", cal.fixed_target);
    c.a_step_um = k.number("a_step_um", c.a_step_um);
    if (k.has("a_values")) c.a_values = number_list(k.raw("a_values"), k.field("a_values"));
    k.finish();
  }
  r.finish();
}

void parse_aperture(JobConfig& c) {
  if (c.aperture.empty()) return;
  const auto x = c.aperture.find_first_of("xX");
  try {
    if (x == std::string::npos) throw std::invalid_argument("");
    std::size_t used_w = 0, used_h = 0;
    const double w = std::stod(c.aperture.substr(0, x), &used_w);
    const double h = std::stod(c.aperture.substr(x + 1), &used_h);
    if (used_w != x || used_h != c.aperture.size() - x - 1) throw std::invalid_argument("");
    c.lens.aperture_w_um = w;
    c.lens.aperture_h_um = h;
  } catch (const std::exception&) {
    throw ConfigError("--aperture: expected WxH in micrometres, got '" + c.aperture + "'");
  }
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw ConfigError(what + ": no such file '" + path + "'");
}

void require_dump(const std::string& path, const std::string& what) {
  require_file(path, what);
  require_file(sidecar_path(path).string(), what + " sidecar");
}

void validate_common(const JobConfig& c) {
  try {
    c.lens.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("lens: ") + e.what());
  }
}

void validate_pattern_source(const JobConfig& c, bool required) {
  if (!c.preset.empty() && !c.pattern_path.empty())
    throw ConfigError("--preset and --pattern are mutually exclusive");
  if (c.preset.empty() && c.pattern_path.empty()) {
    if (required) throw ConfigError("one of --preset or --pattern is required");
    return;
  }
  if (!c.preset.empty() && c.preset != "M" && c.preset != "U" && c.preset != "line" && c.preset != "arc")
    throw ConfigError("--preset: unknown preset '" + c.preset + "' (M, U, line, arc)");
  if (!c.pattern_path.empty()) require_file(c.pattern_path, "--pattern");
  if (!c.orientation.empty() && c.orientation != "rows" && c.orientation != "columns")
    throw ConfigError("--orientation: expected rows or columns");
  if (c.arc_mode != "rows" && c.arc_mode != "rotate") throw ConfigError("--arc-mode: expected rows or rotate");
  if (c.arc_mode == "rotate" && c.preset != "U") throw ConfigError("--arc-mode rotate applies to the U preset only");
}

// ---------------------------------------------------------------- shared steps

PatternSpec build_pattern(const JobConfig& c) {
  PatternSpec p;
  if (!c.pattern_path.empty()) {
    p = load_pattern(c.pattern_path);
  } else {
    try {
      if (c.preset == "line")
        p = line_preset(c.k, c.c_um, c.lens);
      else if (c.preset == "arc")
        p = arc_preset(c.arc_r_um, c.lens);
      else
        p = compile_letter(c.preset, c.lens);
    } catch (const std::exception& e) {
      throw CompileError(e.what());
    }
  }
  if (!c.orientation.empty()) p.orientation = c.orientation == "rows" ? Orientation::rows : Orientation::columns;
  return p;
}

RowAssignment compile(const PatternSpec& p, const LensSpec& lens) {
  try {
    return compile_segments(p, lens);
  } catch (const std::exception& e) {
    throw CompileError(e.what());
  }
}

PhaseLUT load_lut(const JobConfig& c) {
  LutKind kind;
  try {
    kind = lut_kind_from_string(c.lut_kind);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("--lut-kind: ") + e.what());
  }
  try {
    if (!c.lut_path.empty()) return import_lut(c.lut_path, c.lens.wavelength_um, kind);
    return synthetic_lut(c.lut_entries, c.d_min_nm, c.d_max_nm, c.lens.wavelength_um, kind);
  } catch (const ParseError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("LUT: ") + e.what());
  }
}

ordered_json field_geometry(const ComplexField& f) {
  auto j = field_meta(f);
  j.erase("generated_by");
  return j;
}

/// Metrics of one plane; with an assignment, per-target rows, homogeneity and
/// (for single-stroke patterns) a straight-line fit of the row ridge.
ordered_json plane_report(const ComplexField& f, const RowAssignment* asg, const std::string& image) {
  ordered_json j;
  j["z_um"] = f.z_um;
  j["image"] = image;
  const FocusMetrics m = asg ? pattern_metrics(f, *asg) : plane_metrics(f);
  j["peak_intensity"] = m.peak_intensity;
  j["peak_x_um"] = m.peak_x_um;
  j["peak_y_um"] = m.peak_y_um;
  ordered_json cuts = ordered_json::object();
  for (const auto& c : m.fwhm) cuts[c.name] = c.fwhm_um;
  j["fwhm_um"] = cuts;
  if (!asg) return j;

  j["homogeneity_ratio"] = m.homogeneity_ratio;
  ordered_json rows = ordered_json::array();
  for (const auto& r : m.rows)
    rows.push_back({{"row_index", r.row_index},
                    {"y_um", r.y_um},
                    {"segment_id", r.segment_id},
                    {"target_x_um", r.target_x_um},
                    {"s_um", r.s_um},
                    {"peak_intensity", r.peak_intensity},
                    {"peak_x_um", r.peak_x_um},
                    {"peak_y_um", r.peak_y_um},
                    {"fwhm_um", r.fwhm_um},
                    {"in_support", r.in_support}});
  j["rows"] = rows;
  const bool single_stroke = std::all_of(asg->rows.begin(), asg->rows.end(),
                                         [](const AssignedRow& r) { return r.subapertures.size() == 1; });
  if (single_stroke && asg->rows.size() >= 2) {
    const auto ridge = row_ridge(f, *asg);
    std::vector<double> ys, xs;
    for (const auto& p : ridge) {
      ys.push_back(p.y_um);
      xs.push_back(p.x_um);
    }
    if (ys.size() >= 2) {
      const auto fit = fit_line(ys, xs);
      j["ridge_fit"] = {{"slope", fit.slope},
                        {"intercept_um", fit.intercept_um},
                        {"rms_residual_um", fit.rms_residual_um},
                        {"rows", ys.size()}};
    }
  }
  return j;
}

std::optional<RowAssignment> load_assignment(const std::string& path) {
  if (path.empty()) return std::nullopt;
  const json doc = parse_json_text(read_file(path), path);
  if (!doc.is_object() || !doc.contains("assignment"))
    throw SchemaError(path + ": missing 'assignment'");
  if (doc.at("assignment").is_null()) throw ConfigError(path + ": design has no row assignment");
  return assignment_from_json(doc.at("assignment"));
}

// ---------------------------------------------------------------- commands

int run_design(const JobConfig& c, std::ostream& out) {
  validate_common(c);
  validate_pattern_source(c, true);
  if (!c.shift_table_path.empty()) require_dump(c.shift_table_path, "--shift-table");
  if (!c.lut_path.empty()) require_file(c.lut_path, "--lut");
  if (c.lut_path.empty() && c.lut_entries < 8) throw ConfigError("--lut-entries must be >= 8");

  const PhaseLUT lut = load_lut(c);
  std::optional<ShiftTable> table;
  if (!c.shift_table_path.empty()) table = import_shift_table(c.shift_table_path);

  ordered_json diag;
  diag["generated_by"] = kGeneratedBy;
  diag["lens"] = lens_to_json(c.lens);

  PhaseProfile profile;
  if (c.arc_mode == "rotate") {
    try {
      profile = synthesize_letter_u_rotated(c.lens);
    } catch (const std::exception& e) {
      throw CompileError(e.what());
    }
    diag["construction"] = "rotation";
    diag["assignment"] = nullptr;
  } else {
    const PatternSpec pattern = build_pattern(c);
    RowAssignment asg = compile(pattern, c.lens);
    if (table) {
      try {
        asg = apply_homogenization(asg, *table);
      } catch (const std::exception& e) {
        throw CompileError(std::string("homogenization: ") + e.what());
      }
    }
    if (c.refine) {
      try {
        auto refined = refine_homogenization(asg);
        diag["refinement"] = {{"ratio_history", refined.ratio_history}};
        asg = std::move(refined.assignment);
      } catch (const std::exception& e) {
        throw SimulationError(std::string("refinement: ") + e.what());
      }
    }
    profile = synthesize_profile(asg);

    int spacing_bad = 0, beam_bad = 0;
    double max_na = 0.0;
    for (const auto& d : asg.diagnostics) {
      spacing_bad += !d.spacing_ok;
      beam_bad += !d.beam_width_ok;
      max_na = std::max(max_na, d.local_na);
    }
    diag["construction"] = "rows";
    diag["pattern"] = pattern_to_json(pattern);
    diag["summary"] = {{"rows", asg.rows.size()},
                       {"row_targets", asg.diagnostics.size()},
                       {"spacing_violations", spacing_bad},
                       {"beam_width_warnings", beam_bad},
                       {"max_local_na", max_na}};
    diag["warnings"] = asg.warnings;
    diag["assignment"] = assignment_to_json(asg);
  }

  const ShifterLayout layout = phase_to_structure(profile, lut);

  const fs::path dir = c.out_dir;
  StagedOutputs staged;
  staged.stage(dir / "profile.bin", profile_dump_bytes(profile));
  staged.stage(dir / "profile.meta.json", profile_meta(profile).dump(2) + "\n");
  staged.stage(dir / "layout.csv", layout_csv(layout));
  staged.stage(dir / "layout.meta.json", layout_meta(layout).dump(2) + "\n");
  staged.stage(dir / "diagnostics.json", diag.dump(2) + "\n");
  staged.commit();
  out << "design: " << profile.phase.cols() << "x" << profile.phase.rows() << " cells -> " << dir.string() << "\n";
  if (diag.contains("warnings"))
    for (const auto& w : diag["warnings"]) out << "warning: " << w.get<std::string>() << "\n";
  return kOk;
}

int run_calibrate(const JobConfig& c, std::ostream& out) {
  validate_common(c);
  validate_pattern_source(c, c.a_values.empty());
  if (!(c.a_step_um > 0.0)) throw ConfigError("--a-step-um must be > 0");

  CalibrationConfig cfg = c.calibration;
  std::vector<double> offsets = c.a_values, slopes = {0.0};
  if (offsets.empty()) {
    const RowAssignment asg = compile(build_pattern(c), c.lens);
    if (std::none_of(asg.segment_homogenize.begin(), asg.segment_homogenize.end(), [](bool b) { return b; }))
      throw CompileError("pattern has no homogenized segments");
    offsets = calibration_offsets(asg, c.a_step_um);
    slopes = calibration_slopes(asg);
    if (cfg.micro_aperture_w_um <= 0.0) cfg.micro_aperture_w_um = dominant_subaperture_width(asg);
  } else if (cfg.micro_aperture_w_um <= 0.0) {
    cfg.micro_aperture_w_um = c.lens.aperture_w_um;
  }

  ShiftTable table;
  try {
    table = calibrate_focal_shift(offsets, c.lens, cfg, slopes);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("calibration: ") + e.what());
  } catch (const std::exception& e) {
    throw SimulationError(std::string("calibration: ") + e.what());
  }

  const fs::path dir = c.out_dir;
  StagedOutputs staged;
  staged.stage(dir / "shift_table.csv", shift_table_csv(table));
  staged.stage(dir / "shift_table.meta.json", shift_table_meta(table).dump(2) + "\n");
  staged.commit();
  out << "calibrate: " << table.entries.size() << " entries, target intensity " << table.target_intensity
      << " -> " << (dir / "shift_table.csv").string() << "\n";
  return kOk;
}

int run_simulate(const JobConfig& c, std::ostream& out) {
  validate_common(c);
  if (c.profile_path.empty()) throw ConfigError("--profile is required");
  require_dump(c.profile_path, "--profile");
  if (!c.diagnostics_path.empty()) require_file(c.diagnostics_path, "--diagnostics");
  if (!(c.padding >= 1.0)) throw ConfigError("--padding must be >= 1");
  for (double z : c.planes)
    if (!(z >= 0.0)) throw ConfigError("--planes: distances must be >= 0");

  PhaseProfile profile;
  try {
    profile = read_profile_dump(c.profile_path);
  } catch (const DegenerateField& e) {
    throw SimulationError(e.what());
  }
  const auto asg = load_assignment(c.diagnostics_path);
  if (asg && !(asg->physical_lens() == profile.lens))
    throw ConfigError("--diagnostics: lens does not match the profile");

  const double f = profile.lens.focal_length_um;
  double z_min = c.z_min_um, z_max = c.z_max_um;
  if (z_min == 0.0 && z_max == 0.0) {
    z_min = f * 2.0 / 3.0;
    z_max = f * 4.0 / 3.0;
  }
  if (c.planes.empty() && !(z_max > z_min && z_min >= 0.0)) throw ConfigError("scan range needs 0 <= z_min < z_max");
  if (c.planes.empty() && c.steps < 3) throw ConfigError("--steps must be >= 3");

  ordered_json report;
  report["generated_by"] = kGeneratedBy;
  const fs::path dir = c.out_dir;
  StagedOutputs staged;
  try {
    const ComplexField field0 = field_from_profile(profile, c.padding);
    if (auto w = sampling_warning(field0)) out << "warning: " << *w << "\n";
    std::vector<double> planes = c.planes;
    if (planes.empty()) {
      const FocalScan scan = find_focal_plane(field0, z_min, z_max, c.steps);
      report["scan"] = {{"z_values_um", scan.z_values}, {"peak_intensity", scan.peaks}, {"z_star_um", scan.z_um}};
      planes = {scan.z_um};
    }
    ordered_json reports = ordered_json::array();
    for (std::size_t k = 0; k < planes.size(); ++k) {
      const ComplexField fz = propagate(field0, planes[k]);
      const std::string stem = "plane_" + std::to_string(k);
      reports.push_back(plane_report(fz, asg ? &*asg : nullptr, stem + ".pgm"));
      staged.stage(dir / (stem + ".pgm"), pgm_bytes(intensity(fz)));
      staged.stage(dir / (stem + ".meta.json"), field_meta(fz).dump(2) + "\n");
      if (c.dump_field) {
        staged.stage(dir / ("field_" + std::to_string(k) + ".bin"), field_dump_bytes(fz));
        staged.stage(dir / ("field_" + std::to_string(k) + ".meta.json"), field_meta(fz).dump(2) + "\n");
      }
    }
    report["padding"] = c.padding;
    report["field"] = field_geometry(field0);
    report["planes"] = reports;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw SimulationError(e.what());
  }
  staged.stage(dir / "metrics.json", report.dump(2) + "\n");
  staged.commit();
  if (report.contains("scan")) out << "simulate: focal plane at z = " << report["scan"]["z_star_um"] << " um\n";
  out << "simulate: " << report["planes"].size() << " plane(s) -> " << dir.string() << "\n";
  return kOk;
}

int run_analyze(const JobConfig& c, std::ostream& out) {
  if (c.field_path.empty()) throw ConfigError("--field is required");
  require_dump(c.field_path, "--field");
  if (!c.diagnostics_path.empty()) require_file(c.diagnostics_path, "--diagnostics");
  ComplexField field;
  try {
    field = read_field_dump(c.field_path);
  } catch (const DegenerateField& e) {
    throw SimulationError(e.what());
  }
  const auto asg = load_assignment(c.diagnostics_path);
  ordered_json report;
  report["generated_by"] = kGeneratedBy;
  const fs::path dir = c.out_dir;
  StagedOutputs staged;
  try {
    report["plane"] = plane_report(field, asg ? &*asg : nullptr, "analysis.pgm");
    staged.stage(dir / "analysis.pgm", pgm_bytes(intensity(field)));
    staged.stage(dir / "analysis.meta.json", field_meta(field).dump(2) + "\n");
  } catch (const std::exception& e) {
    throw SimulationError(e.what());
  }
  staged.stage(dir / "analysis.json", report.dump(2) + "\n");
  staged.commit();
  out << "analyze: peak " << report["plane"]["peak_intensity"] << " at z = " << field.z_um << " um\n";
  return kOk;
}

int run_export_lut(const JobConfig& c, std::ostream& out) {
  if (!(c.lens.wavelength_um > 0.0)) throw ConfigError("--lambda-um must be > 0");
  if (c.lut_entries < 8) throw ConfigError("--lut-entries must be >= 8");
  const PhaseLUT lut = load_lut(c);
  const fs::path dir = c.out_dir;
  ordered_json meta = {{"wavelength_um", lut.wavelength_um},
                       {"kind", to_string(lut.kind)},
                       {"entries", lut.entries.size()},
                       {"generated_by", kGeneratedBy}};
  StagedOutputs staged;
  staged.stage(dir / "lut.csv", lut_csv(lut));
  staged.stage(dir / "lut.meta.json", meta.dump(2) + "\n");
  staged.commit();
  out << "export-lut: " << lut.entries.size() << " entries -> " << (dir / "lut.csv").string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------- flags

void lens_flags(CLI::App& app, JobConfig& c) {
  app.add_option("--lambda-um", c.lens.wavelength_um, "Design wavelength")->capture_default_str();
  app.add_option("--f-um", c.lens.focal_length_um, "Focal length")->capture_default_str();
  app.add_option("--pitch-um", c.lens.pitch_um, "Shifter pitch")->capture_default_str();
  app.add_option("--aperture", c.aperture, "Lens aperture WxH in um (default 10x10)");
}

void pattern_flags(CLI::App& app, JobConfig& c) {
  app.add_option("--preset", c.preset, "Built-in pattern: M, U, line, arc");
  app.add_option("--pattern", c.pattern_path, "Pattern JSON file");
  app.add_option("--orientation", c.orientation, "Micro-lens axis: rows or columns");
  app.add_option("--k", c.k, "Line preset slope")->capture_default_str();
  app.add_option("--c-um", c.c_um, "Line preset intercept")->capture_default_str();
  app.add_option("--arc-r-um", c.arc_r_um, "Arc preset radius")->capture_default_str();
}

void lut_flags(CLI::App& app, JobConfig& c) {
  app.add_option("--lut-entries", c.lut_entries, "Entries of the synthetic LUT")->capture_default_str();
  app.add_option("--lut-kind", c.lut_kind, "cylinder-diameter or grating-fill-factor")->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  JobConfig c;
  CLI::App app{"Metalens focus-pattern design and scalar verification"};
  app.name("focusforge");
  app.require_subcommand(1);
  app.set_version_flag("--version", kGeneratedBy);

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", c.config_path, "JSON job file; its keys override flags");
    sub->add_option("--out-dir", c.out_dir, "Output directory")->capture_default_str();
  };

  auto* design = app.add_subcommand("design", "Compile a pattern into a phase profile and shifter layout");
  common(design);
  lens_flags(*design, c);
  pattern_flags(*design, c);
  lut_flags(*design, c);
  design->add_option("--lut", c.lut_path, "LUT CSV (dimension_nm,phase_rad); default synthetic");
  design->add_option("--shift-table", c.shift_table_path, "Focal-shift table CSV from calibrate");
  design->add_flag("--refine", c.refine, "Refine focal shifts against 2-D simulations");
  design->add_option("--arc-mode", c.arc_mode, "U preset construction: rows or rotate")->capture_default_str();

  auto* calibrate = app.add_subcommand("calibrate", "Tabulate focal shifts that equalize micro-focus intensity");
  common(calibrate);
  lens_flags(*calibrate, c);
  pattern_flags(*calibrate, c);
  calibrate->add_option("--a-values", c.a_values, "Explicit offsets (um) instead of a pattern")->delimiter(',');
  calibrate->add_option("--a-step-um", c.a_step_um, "Offset sampling step")->capture_default_str();
  calibrate->add_option("--micro-width-um", c.calibration.micro_aperture_w_um,
                        "Micro-lens width (default: dominant sub-aperture)");
  calibrate->add_option("--s-min-um", c.calibration.s_min_um)->capture_default_str();
  calibrate->add_option("--s-max-um", c.calibration.s_max_um)->capture_default_str();
  calibrate->add_option("--s-step-um", c.calibration.s_step_um)->capture_default_str();
  calibrate->add_option("--tolerance", c.calibration.tolerance, "Relative intensity mismatch")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "Propagate a profile and measure its focus");
  common(simulate);
  simulate->add_option("--profile", c.profile_path, "Profile dump written by design");
  simulate->add_option("--diagnostics", c.diagnostics_path, "diagnostics.json for per-target metrics");
  simulate->add_option("--padding", c.padding, "Zero-padding factor")->capture_default_str();
  simulate->add_option("--planes", c.planes, "Explicit plane distances (um); skips the scan")->delimiter(',');
  simulate->add_option("--z-min-um", c.z_min_um, "Scan start (default 2f/3)");
  simulate->add_option("--z-max-um", c.z_max_um, "Scan end (default 4f/3)");
  simulate->add_option("--steps", c.steps, "Scan planes")->capture_default_str();
  simulate->add_flag("--dump-field", c.dump_field, "Also write complex field dumps");

  auto* analyze = app.add_subcommand("analyze", "Measure a stored complex field");
  common(analyze);
  analyze->add_option("--field", c.field_path, "Field dump");
  analyze->add_option("--diagnostics", c.diagnostics_path, "diagnostics.json for per-target metrics");

  auto* export_lut = app.add_subcommand("export-lut", "Write the synthetic phase LUT");
  common(export_lut);
  export_lut->add_option("--lambda-um", c.lens.wavelength_um)->capture_default_str();
  lut_flags(*export_lut, c);
  export_lut->add_option("--d-min-nm", c.d_min_nm)->capture_default_str();
  export_lut->add_option("--d-max-nm", c.d_max_nm)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    for (auto* sub : app.get_subcommands()) c.command = sub->get_name();
    parse_aperture(c);
    if (!c.config_path.empty()) {
      require_file(c.config_path, "--config");
      apply_config(c, parse_json_text(read_file(c.config_path), c.config_path));
    }
    if (c.command == "design") return run_design(c, out);
    if (c.command == "calibrate") return run_calibrate(c, out);
    if (c.command == "simulate") return run_simulate(c, out);
    if (c.command == "analyze") return run_analyze(c, out);
    return run_export_lut(c, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const CompileError& e) {
    err << "error: " << e.what() << "\n";
    return kCompileError;
  } catch (const SimulationError& e) {
    err << "error: " << e.what() << "\n";
    return kSimulationError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace focusforge::cli
