#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "focusforge/grid.hpp"
#include "focusforge/phase_profile.hpp"
#include "focusforge/propagation.hpp"

namespace focusforge {

/// A dump whose payload is empty or does not match its sidecar dimensions.
class DegenerateField : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Complex field dump: little-endian IEEE doubles, row-major, interleaved
/// (re, im). Sidecar keys: nx, ny, dx_um, wavelength_um, z_um, x0_um, y0_um,
/// generated_by.
std::string field_dump_bytes(const ComplexField& field);
nlohmann::ordered_json field_meta(const ComplexField& field);
ComplexField parse_field_dump(const std::string& bytes, const nlohmann::json& meta);

void write_field_dump(const ComplexField& field, const std::filesystem::path& path);
ComplexField read_field_dump(const std::filesystem::path& path);

/// Real-only variant holding a wrapped phase profile, one double per cell.
/// The sidecar adds "kind": "phase_profile" and the full lens.
std::string profile_dump_bytes(const PhaseProfile& profile);
nlohmann::ordered_json profile_meta(const PhaseProfile& profile);
PhaseProfile parse_profile_dump(const std::string& bytes, const nlohmann::json& meta);

void write_profile_dump(const PhaseProfile& profile, const std::filesystem::path& path);
PhaseProfile read_profile_dump(const std::filesystem::path& path);

/// 16-bit binary PGM (P5, big-endian samples) scaled so the maximum maps to
/// 65535. Row 0 of the grid is written first. Throws DegenerateField when the
/// image has no positive value.
std::string pgm_bytes(const Grid2D<double>& image);

/// Decodes a P5 image with maxval 65535 back to [0, 1].
Grid2D<double> parse_pgm(const std::string& bytes);

}  // namespace focusforge
