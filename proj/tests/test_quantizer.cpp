#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "focusforge/csv_io.hpp"
#include "focusforge/file_util.hpp"
#include "focusforge/phase_synthesis.hpp"
#include "focusforge/quantizer.hpp"
#include "test_support.hpp"

using namespace focusforge;

namespace {

LensSpec lens(double f, double w = 10.0, double h = 10.0) {
  LensSpec s;
  s.focal_length_um = f;
  s.aperture_w_um = w;
  s.aperture_h_um = h;
  return s;
}

PhaseProfile random_profile(const LensSpec& s, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  PhaseProfile p{s, Grid2D<double>(s.ny(), s.nx())};
  for (auto& v : p.phase.values()) v = wrap_phase(u(rng));
  return p;
}

double max_round_trip_error(const PhaseProfile& p, const PhaseLUT& lut) {
  const auto back = structure_to_phase(phase_to_structure(p, lut), lut);
  double worst = 0.0;
  for (std::size_t k = 0; k < p.phase.size(); ++k)
    worst = std::max(worst, phase_distance(p.phase.values()[k], back.phase.values()[k]));
  return worst;
}

}  // namespace

TEST_SUITE("quantizer") {

TEST_CASE("wrap phase") {
  CHECK(wrap_phase(0.0) == 0.0);
  CHECK(wrap_phase(7.44258) == doctest::Approx(7.44258 - kTwoPi).epsilon(1e-14));
  CHECK(wrap_phase(7.44258) == doctest::Approx(1.15939).epsilon(1e-5));
  CHECK(wrap_phase(-0.1) == doctest::Approx(6.18319).epsilon(1e-5));
  CHECK(wrap_phase(-1e-18) < kTwoPi);
  CHECK_THROWS_AS(wrap_phase(std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(wrap_phase(INFINITY), std::invalid_argument);
}

TEST_CASE("wrap phase is 2 pi periodic") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::uniform_int_distribution<int> k(-10, 10);
  for (int n = 0; n < 2000; ++n) {
    const double phi = u(rng);
    const double w = wrap_phase(phi);
    CHECK(w >= 0.0);
    CHECK(w < kTwoPi);
    CHECK(phase_distance(wrap_phase(phi + kTwoPi * k(rng)), w) <= 1e-12);
  }
}

TEST_CASE("discretize") {
  const auto s = lens(15.0);
  const auto c = discretize([](double, double) { return 9.0; }, s);
  for (double v : c.phase.values()) CHECK(v == wrap_phase(9.0));

  const auto eq1 = discretize([&](double x, double y) { return point_focus_phase(x, y, s); }, s);
  REQUIRE(eq1.phase.rows() == 45);
  REQUIRE(eq1.phase.cols() == 45);
  // Within the first Fresnel zone the four cells nearest the origin hold the
  // four smallest phases. Outside it, wrapping brings values back near zero.
  const double zone_r = std::sqrt(std::pow(15.0 + 0.685, 2) - 15.0 * 15.0);
  std::vector<std::pair<double, std::size_t>> by_radius, by_phase;
  for (int i = 0; i < 45; ++i)
    for (int j = 0; j < 45; ++j) {
      const double x = (j + 0.5) * 0.22 - 5.0, y = (i + 0.5) * 0.22 - 5.0;
      if (std::hypot(x, y) >= zone_r) continue;
      by_radius.push_back({x * x + y * y, std::size_t(i * 45 + j)});
      by_phase.push_back({eq1.phase(i, j), std::size_t(i * 45 + j)});
    }
  std::sort(by_radius.begin(), by_radius.end());
  std::sort(by_phase.begin(), by_phase.end());
  std::vector<std::size_t> a, b;
  for (int k = 0; k < 4; ++k) {
    a.push_back(by_radius[k].second);
    b.push_back(by_phase[k].second);
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);

  const auto ramp = discretize([&](double x, double) { return kTwoPi * x / s.aperture_w_um; }, s);
  for (int i = 0; i < 45; ++i) {
    int wraps = 0;
    for (int j = 1; j < 45; ++j)
      if (ramp.phase(i, j) - ramp.phase(i, j - 1) < -kPi) ++wraps;
    CHECK(wraps == 1);
  }
}

TEST_CASE("sampling commutes with wrapping") {
  const auto s = lens(6.0);
  const RowParams row{0.0, -1.3, 0.7};
  auto field = [&](double x, double y) { return shifted_focus_phase(x, row, s) + 3.0 * y; };
  const auto a = discretize(field, s);
  const auto b = discretize([&](double x, double y) { return wrap_phase(field(x, y)); }, s);
  for (std::size_t k = 0; k < a.phase.size(); ++k)
    CHECK(phase_distance(a.phase.values()[k], b.phase.values()[k]) <= 1e-12);
}

TEST_CASE("synthetic LUT") {
  const auto lut8 = synthetic_lut(8);
  REQUIRE(lut8.entries.size() == 8);
  CHECK(lut8.entries.front().dimension_nm == 40.0);
  CHECK(lut8.phase_span() >= kTwoPi * 7.0 / 8.0 - 1e-12);
  CHECK_NOTHROW(lut8.validate());
  for (int n = 8; n <= 256; ++n) {
    const auto lut = synthetic_lut(n);
    CHECK(lut.entries.size() == std::size_t(n));
    bool monotone = true;
    for (std::size_t k = 1; k < lut.entries.size(); ++k)
      monotone = monotone && lut.entries[k].dimension_nm > lut.entries[k - 1].dimension_nm &&
                 lut.entries[k].phase_rad >= lut.entries[k - 1].phase_rad;
    CHECK(monotone);
    CHECK(lut.entries.front().dimension_nm >= kMinFeatureNm);
    CHECK_NOTHROW(lut.validate());
  }
  CHECK_THROWS_AS(synthetic_lut(7), std::invalid_argument);
  CHECK(synthetic_lut(16, 40.0, 200.0, 0.685, LutKind::grating_fill_factor).kind == LutKind::grating_fill_factor);
}

TEST_CASE("phase to structure lookup") {
  const auto s = lens(15.0);
  const auto lut = synthetic_lut(64);
  PhaseProfile p{s, Grid2D<double>(s.ny(), s.nx(), lut.entries[10].phase_rad)};
  for (const auto& e : phase_to_structure(p, lut).elements) CHECK(e.dimension_nm == lut.entries[10].dimension_nm);

  const double mid = 0.5 * (lut.entries[20].phase_rad + lut.entries[21].phase_rad);
  CHECK(lut_dimension_for_phase(lut, mid) ==
        doctest::Approx(0.5 * (lut.entries[20].dimension_nm + lut.entries[21].dimension_nm)).epsilon(1e-12));

  const auto layout = phase_to_structure(p, lut);
  CHECK(layout.lens == s);
  CHECK(layout.elements.size() == 2025);
  CHECK(layout.elements[46].x_um == doctest::Approx(s.cell_x(1)));
  CHECK(layout.elements[46].y_um == doctest::Approx(s.cell_y(1)));

  PhaseLUT short_lut = lut;
  short_lut.entries.resize(32);
  CHECK_THROWS_WITH(phase_to_structure(p, short_lut), "LUT does not cover 2π");
  PhaseLUT other = lut;
  other.wavelength_um = 0.532;
  CHECK_THROWS_WITH(phase_to_structure(p, other), doctest::Contains("wavelength"));
}

TEST_CASE("structure to phase") {
  const auto s = lens(15.0);
  const auto lut = synthetic_lut(64);
  PhaseProfile p{s, Grid2D<double>(s.ny(), s.nx(), 2.5)};
  const auto back = structure_to_phase(phase_to_structure(p, lut), lut);
  for (double v : back.phase.values()) CHECK(v == doctest::Approx(2.5).epsilon(1e-12));

  CHECK(lut_phase_for_dimension(lut, lut.entries[33].dimension_nm) == lut.entries[33].phase_rad);

  auto layout = phase_to_structure(p, lut);
  layout.elements[5].dimension_nm = 10.0;
  CHECK_THROWS_AS(structure_to_phase(layout, lut), std::out_of_range);
  layout.elements[5].dimension_nm = 250.0;
  CHECK_THROWS_AS(structure_to_phase(layout, lut), std::out_of_range);
}

TEST_CASE("hyperbolic lens round trip through a 64-entry LUT") {
  const auto s = lens(15.0);
  const auto p = discretize([&](double x, double y) { return point_focus_phase(x, y, s); }, s);
  CHECK(max_round_trip_error(p, synthetic_lut(64)) <= kTwoPi / 64.0);
}

TEST_CASE("round trip error is bounded by the LUT step on random profiles") {
  std::mt19937 rng(2024);
  const auto s = lens(15.0, 8.0, 8.0);
  for (int n : {8, 16, 64, 256}) {
    const auto lut = synthetic_lut(n);
    for (int trial = 0; trial < 5; ++trial) CHECK(max_round_trip_error(random_profile(s, rng), lut) <= kTwoPi / n);
  }
}

TEST_CASE("layout CSV round trip") {
  testing::TempDir dir;
  const auto s = lens(15.0);
  const auto p = discretize([&](double x, double y) { return point_focus_phase(x, y, s); }, s);
  const auto layout = phase_to_structure(p, synthetic_lut(64));
  const auto path = dir.path() / "layout.csv";
  export_layout(layout, path);
  CHECK(std::filesystem::exists(dir.path() / "layout.meta.json"));

  const std::string text = read_file(path);
  CHECK(text.rfind("x_um,y_um,dimension_nm\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2026);

  const auto back = import_layout(path);
  CHECK(back.lens == layout.lens);
  CHECK(back.lut_kind == layout.lut_kind);
  REQUIRE(back.elements.size() == layout.elements.size());
  for (std::size_t k = 0; k < back.elements.size(); ++k) {
    CHECK(back.elements[k].x_um == std::stod(format_g(layout.elements[k].x_um, 9)));
    CHECK(back.elements[k].dimension_nm == std::stod(format_g(layout.elements[k].dimension_nm, 9)));
  }
  // Printed values are a fixed point of export/import.
  export_layout(back, dir.path() / "again.csv");
  CHECK(read_file(dir.path() / "again.csv") == text);
}

TEST_CASE("empty layout exports a header-only CSV") {
  testing::TempDir dir;
  ShifterLayout empty;
  export_layout(empty, dir.path() / "e.csv");
  CHECK(read_file(dir.path() / "e.csv") == "x_um,y_um,dimension_nm\n");
  CHECK(import_layout(dir.path() / "e.csv").elements.empty());
}

TEST_CASE("malformed layout CSV reports the line") {
  const auto meta = nlohmann::json::parse(R"({"lens": {}, "lut_kind": "cylinder-diameter", "elements": 2})");
  try {
    parse_layout("x_um,y_um,dimension_nm\n0,0,50\n0,0.22,abc\n", meta);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("abc") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_layout("x,y,d\n", meta), ParseError);
  CHECK_THROWS_AS(parse_layout("x_um,y_um,dimension_nm\n1,2\n", meta), ParseError);
  CHECK_THROWS_AS(parse_layout("x_um,y_um,dimension_nm\n1,2,3\n", meta), ParseError);
}

TEST_CASE("LUT CSV round trip") {
  const auto lut = synthetic_lut(32, 40.0, 180.0, 0.685, LutKind::grating_fill_factor);
  const auto back = parse_lut(lut_csv(lut), 0.685, LutKind::grating_fill_factor);
  CHECK(back.entries == lut.entries);
  CHECK_THROWS_AS(parse_lut("dimension_nm,phase_rad\n50,0\n45,1\n", 0.685, LutKind::cylinder_diameter), ParseError);
  CHECK_THROWS_WITH(parse_lut("dimension_nm,phase_rad\n50,0\n60,1\n", 0.685, LutKind::cylinder_diameter),
                    doctest::Contains("2π"));
}

}  // TEST_SUITE
