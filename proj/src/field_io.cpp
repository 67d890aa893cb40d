#include "focusforge/field_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "focusforge/file_util.hpp"
#include "focusforge/pattern_io.hpp"
#include "json_reader.hpp"

namespace focusforge {

using nlohmann::json;
using nlohmann::ordered_json;
using detail::ObjectReader;

namespace {

void put_le(std::string& out, double v) {
  std::uint64_t u = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int k = 0; k < 8; ++k) b[k] = char((u >> (8 * k)) & 0xff);
  out.append(b, 8);
}

double get_le(const char* p) {
  std::uint64_t u = 0;
  for (int k = 0; k < 8; ++k) u |= std::uint64_t(static_cast<unsigned char>(p[k])) << (8 * k);
  return std::bit_cast<double>(u);
}

std::size_t dimension(ObjectReader& r, const std::string& key) {
  const auto& v = r.raw(key);
  if (!v.is_number_unsigned() || v.get<std::size_t>() == 0)
    throw SchemaError(r.field(key) + ": expected a positive integer");
  return v.get<std::size_t>();
}

void check_payload(const std::string& bytes, std::size_t expected) {
  if (bytes.empty()) throw DegenerateField("empty field dump");
  if (bytes.size() != expected)
    throw DegenerateField("field dump holds " + std::to_string(bytes.size()) + " bytes, sidecar implies " +
                          std::to_string(expected));
}

}  // namespace

std::string field_dump_bytes(const ComplexField& field) {
  std::string out;
  out.reserve(field.samples.size() * 16);
  for (const auto& v : field.samples.values()) {
    put_le(out, v.real());
    put_le(out, v.imag());
  }
  return out;
}

ordered_json field_meta(const ComplexField& field) {
  return {{"nx", field.nx()},
          {"ny", field.ny()},
          {"dx_um", field.dx_um},
          {"wavelength_um", field.wavelength_um},
          {"z_um", field.z_um},
          {"x0_um", field.x0_um},
          {"y0_um", field.y0_um},
          {"generated_by", kGeneratedBy}};
}

ComplexField parse_field_dump(const std::string& bytes, const json& meta) {
  ObjectReader r(meta, "field metadata");
  ComplexField f;
  const std::size_t nx = dimension(r, "nx"), ny = dimension(r, "ny");
  f.dx_um = r.number("dx_um");
  f.wavelength_um = r.number("wavelength_um");
  f.z_um = r.number("z_um");
  f.x0_um = r.number("x0_um", 0.0);
  f.y0_um = r.number("y0_um", 0.0);
  r.string("generated_by", "");
  r.finish();
  check_payload(bytes, nx * ny * 16);
  f.samples = Grid2D<Complex>(ny, nx);
  const char* p = bytes.data();
  for (auto& v : f.samples.values()) {
    v = {get_le(p), get_le(p + 8)};
    p += 16;
  }
  try {
    f.validate();
  } catch (const std::invalid_argument& e) {
    throw DegenerateField(e.what());
  }
  return f;
}

void write_field_dump(const ComplexField& field, const std::filesystem::path& path) {
  StagedOutputs staged;
  staged.stage(path, field_dump_bytes(field));
  staged.stage(sidecar_path(path), field_meta(field).dump(2) + "\n");
  staged.commit();
}

ComplexField read_field_dump(const std::filesystem::path& path) {
  const auto meta_path = sidecar_path(path);
  return parse_field_dump(read_file(path), parse_json_text(read_file(meta_path), meta_path.string()));
}

std::string profile_dump_bytes(const PhaseProfile& profile) {
  std::string out;
  out.reserve(profile.phase.size() * 8);
  for (double v : profile.phase.values()) put_le(out, v);
  return out;
}

ordered_json profile_meta(const PhaseProfile& profile) {
  const auto& l = profile.lens;
  return {{"kind", "phase_profile"},
          {"nx", profile.phase.cols()},
          {"ny", profile.phase.rows()},
          {"dx_um", l.pitch_um},
          {"wavelength_um", l.wavelength_um},
          {"z_um", 0.0},
          {"x0_um", l.cell_x(0)},
          {"y0_um", l.cell_y(0)},
          {"lens", lens_to_json(l)},
          {"generated_by", kGeneratedBy}};
}

PhaseProfile parse_profile_dump(const std::string& bytes, const json& meta) {
  ObjectReader r(meta, "profile metadata");
  if (r.string("kind") != "phase_profile") throw SchemaError(r.field("kind") + ": expected \"phase_profile\"");
  PhaseProfile p;
  p.lens = lens_from_json(r.raw("lens"), r.field("lens"));
  const std::size_t nx = dimension(r, "nx"), ny = dimension(r, "ny");
  // Geometry keys are derived from the lens; read them only to accept the file.
  for (const char* k : {"dx_um", "wavelength_um", "z_um", "x0_um", "y0_um"}) r.number(k, 0.0);
  r.string("generated_by", "");
  r.finish();
  try {
    p.lens.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("profile metadata.lens: ") + e.what());
  }
  if (nx != std::size_t(p.lens.nx()) || ny != std::size_t(p.lens.ny()))
    throw SchemaError("profile metadata: nx/ny do not match the lens grid");
  check_payload(bytes, nx * ny * 8);
  p.phase = Grid2D<double>(ny, nx);
  const char* src = bytes.data();
  for (auto& v : p.phase.values()) {
    v = get_le(src);
    src += 8;
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw DegenerateField(std::string("phase profile: ") + e.what());
  }
  return p;
}

void write_profile_dump(const PhaseProfile& profile, const std::filesystem::path& path) {
  StagedOutputs staged;
  staged.stage(path, profile_dump_bytes(profile));
  staged.stage(sidecar_path(path), profile_meta(profile).dump(2) + "\n");
  staged.commit();
}

PhaseProfile read_profile_dump(const std::filesystem::path& path) {
  const auto meta_path = sidecar_path(path);
  return parse_profile_dump(read_file(path), parse_json_text(read_file(meta_path), meta_path.string()));
}

std::string pgm_bytes(const Grid2D<double>& image) {
  double peak = 0.0;
  for (double v : image.values())
    if (std::isfinite(v)) peak = std::max(peak, v);
  if (!(peak > 0.0)) throw DegenerateField("image has no positive samples");
  std::string out = "P5\n" + std::to_string(image.cols()) + " " + std::to_string(image.rows()) + "\n65535\n";
  out.reserve(out.size() + image.size() * 2);
  for (double v : image.values()) {
    const double t = std::isfinite(v) ? std::clamp(v / peak, 0.0, 1.0) : 0.0;
    const auto q = std::uint16_t(std::lround(t * 65535.0));
    out.push_back(char(q >> 8));
    out.push_back(char(q & 0xff));
  }
  return out;
}

Grid2D<double> parse_pgm(const std::string& bytes) {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (token() != "P5") throw std::runtime_error("not a binary PGM");
  const auto w = std::stoul(token()), h = std::stoul(token());
  if (token() != "65535") throw std::runtime_error("expected a 16-bit PGM");
  ++pos;  // single whitespace before the raster
  if (bytes.size() - pos != w * h * 2) throw std::runtime_error("PGM raster size mismatch");
  Grid2D<double> img(h, w);
  for (auto& v : img.values()) {
    const unsigned hi = static_cast<unsigned char>(bytes[pos]), lo = static_cast<unsigned char>(bytes[pos + 1]);
    v = double((hi << 8) | lo) / 65535.0;
    pos += 2;
  }
  return img;
}

}  // namespace focusforge
