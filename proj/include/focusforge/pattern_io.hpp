#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "focusforge/lens_spec.hpp"
#include "focusforge/pattern.hpp"

namespace focusforge {

/// Malformed or schema-violating JSON document. The message names the
/// offending field as a dotted path, e.g. "segments[2].k".
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::ordered_json lens_to_json(const LensSpec& lens);
/// Keys present override `base`; unknown keys are rejected.
LensSpec lens_from_json(const nlohmann::json& doc, const std::string& where = "lens",
                        const LensSpec& base = {});

/// Pattern document:
///   { "bounding_box": {"x_min_um", "x_max_um", "y_min_um", "y_max_um"},
///     "orientation": "rows" | "columns",                (optional, rows)
///     "segments": [ { "type": "point" | "line" | "constant_offset" | "arc",
///                     <fields of the target type>, "homogenize": bool } ] }
nlohmann::ordered_json pattern_to_json(const PatternSpec& pattern);
PatternSpec pattern_from_json(const nlohmann::json& doc);

PatternSpec load_pattern(const std::filesystem::path& path);

nlohmann::ordered_json assignment_to_json(const RowAssignment& assignment);
RowAssignment assignment_from_json(const nlohmann::json& doc);

/// Parses JSON text, turning syntax errors into SchemaError with the position.
nlohmann::json parse_json_text(const std::string& text, const std::string& what);

}  // namespace focusforge
