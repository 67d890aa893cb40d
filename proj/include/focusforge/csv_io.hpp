#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "focusforge/homogenizer.hpp"
#include "focusforge/quantizer.hpp"

namespace focusforge {

/// Malformed CSV content. line() is 1-based and counts the header.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, int line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Layout CSV: header `x_um,y_um,dimension_nm`, one element per line, values
/// with 9 significant digits. The sidecar carries lens metadata and LUT kind.
std::string layout_csv(const ShifterLayout& layout);
nlohmann::ordered_json layout_meta(const ShifterLayout& layout);
ShifterLayout parse_layout(const std::string& csv, const nlohmann::json& meta,
                           const std::string& source = "layout");

void export_layout(const ShifterLayout& layout, const std::filesystem::path& path);
ShifterLayout import_layout(const std::filesystem::path& path);

/// LUT CSV: header `dimension_nm,phase_rad`, values with 17 significant
/// digits so that a table round-trips exactly. Wavelength and kind are not part
/// of the table and are supplied by the caller.
std::string lut_csv(const PhaseLUT& lut);
PhaseLUT parse_lut(const std::string& csv, double wavelength_um, LutKind kind,
                   const std::string& source = "lut");
PhaseLUT import_lut(const std::filesystem::path& path, double wavelength_um,
                    LutKind kind = LutKind::cylinder_diameter);

/// Shift table CSV: header `slope,a_um,s_um,achieved_intensity`, 17 digits. Files with
/// the three-column header `a_um,s_um,achieved_intensity` read as slope 0.
/// The sidecar holds the calibration config and target intensity.
std::string shift_table_csv(const ShiftTable& table);
nlohmann::ordered_json shift_table_meta(const ShiftTable& table);
ShiftTable parse_shift_table(const std::string& csv, const nlohmann::json& meta,
                             const std::string& source = "shift table");

void export_shift_table(const ShiftTable& table, const std::filesystem::path& path);
ShiftTable import_shift_table(const std::filesystem::path& path);

/// printf-style %.<digits>g.
std::string format_g(double v, int digits);

}  // namespace focusforge
