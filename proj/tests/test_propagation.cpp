#include <doctest.h>

#include <cmath>
#include <random>

#include "focusforge/metrics.hpp"
#include "focusforge/phase_synthesis.hpp"
#include "focusforge/propagation.hpp"
#include "focusforge/quantizer.hpp"

using namespace focusforge;

namespace {

LensSpec lens(double f, double w = 10.0, double h = 10.0) {
  LensSpec s;
  s.focal_length_um = f;
  s.aperture_w_um = w;
  s.aperture_h_um = h;
  return s;
}

ComplexField blank(std::size_t n, double dx = 0.22) {
  ComplexField f;
  f.samples = Grid2D<Complex>(n, n);
  f.dx_um = dx;
  f.x0_um = f.y0_um = -0.5 * double(n - 1) * dx;
  return f;
}

/// Smooth, well inside every band limit used below.
ComplexField gaussian_beam(std::size_t n, double sigma_um, double tilt_per_um = 0.0) {
  auto f = blank(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double x = f.x_at(j), y = f.y_at(i);
      f.samples(i, j) = std::exp(-(x * x + y * y) / (2 * sigma_um * sigma_um)) * std::polar(1.0, tilt_per_um * x);
    }
  return f;
}

ComplexField random_field(std::size_t n, std::mt19937& rng) {
  std::normal_distribution<double> g;
  auto f = blank(n);
  for (auto& v : f.samples.values()) v = {g(rng), g(rng)};
  return f;
}

double relative_difference(const ComplexField& a, const ComplexField& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    num += std::norm(a.samples.values()[k] - b.samples.values()[k]);
    den += std::norm(b.samples.values()[k]);
  }
  return std::sqrt(num / den);
}

PhaseProfile hyperbolic_profile(const LensSpec& s) {
  return discretize([&](double x, double y) { return point_focus_phase(x, y, s); }, s);
}

/// First-kind Rayleigh-Sommerfeld integral by direct summation over the cells.
Complex rayleigh_sommerfeld(const PhaseProfile& p, double x, double y, double z) {
  const auto& s = p.lens;
  const double k = kTwoPi / s.wavelength_um, dA = s.pitch_um * s.pitch_um;
  Complex sum{};
  for (int i = 0; i < s.ny(); ++i)
    for (int j = 0; j < s.nx(); ++j) {
      const double dx = x - s.cell_x(j), dy = y - s.cell_y(i);
      const double r = std::sqrt(dx * dx + dy * dy + z * z);
      const Complex g = z / (r * r) * (1.0 / r - Complex(0.0, k)) * std::polar(1.0, k * r) / kTwoPi;
      sum += std::polar(1.0, -p.phase(i, j)) * g * dA;
    }
  return sum;
}

}  // namespace

TEST_SUITE("propagation") {

TEST_CASE("field from profile pads and centres the aperture") {
  const auto s = lens(15.0);
  PhaseProfile zero{s, Grid2D<double>(45, 45, 0.0)};
  const auto unit = field_from_profile(zero, 1.0);
  REQUIRE(unit.nx() == 45);
  for (const auto& v : unit.samples.values()) CHECK(v == Complex(1.0, 0.0));

  const auto p = hyperbolic_profile(s);
  const auto f = field_from_profile(p, 2.0);
  REQUIRE(f.nx() == 90);
  REQUIRE(f.ny() == 90);
  CHECK(f.dx_um == s.pitch_um);
  CHECK(f.z_um == 0.0);
  int inside = 0;
  for (std::size_t i = 0; i < 90; ++i)
    for (std::size_t j = 0; j < 90; ++j) {
      const bool in_aperture = std::abs(f.x_at(j)) < 5.0 && std::abs(f.y_at(i)) < 5.0;
      CHECK(std::abs(f.samples(i, j)) == doctest::Approx(in_aperture ? 1.0 : 0.0).epsilon(1e-15));
      inside += in_aperture;
    }
  CHECK(inside == 2025);
  CHECK(f.x_at(22) == doctest::Approx(s.cell_x(0)));
  CHECK(total_power(f) == doctest::Approx(2025 * 0.22 * 0.22).epsilon(1e-12));
  CHECK_THROWS_AS(field_from_profile(p, 0.5), std::invalid_argument);
}

TEST_CASE("total power") {
  auto f = blank(8);
  CHECK(total_power(f) == 0.0);
  for (auto& v : f.samples.values()) v = 1.0;
  CHECK(total_power(f) == doctest::Approx(64 * 0.22 * 0.22).epsilon(1e-15));
}

TEST_CASE("zero distance is the identity on band-limited fields") {
  const auto g = gaussian_beam(128, 1.5, 2.0);
  CHECK(relative_difference(propagate(g, 0.0), g) <= 1e-13);
}

TEST_CASE("plane wave advances in phase only") {
  auto f = blank(32);
  for (auto& v : f.samples.values()) v = 1.0;
  for (double dz : {0.3, 1.0, 7.77}) {
    const auto out = propagate(f, dz);
    CHECK(out.z_um == dz);
    const Complex expected = std::polar(1.0, kTwoPi * dz / f.wavelength_um);
    for (const auto& v : out.samples.values()) CHECK(std::abs(v - expected) <= 1e-12);
  }
}

TEST_CASE("group law") {
  const auto g = gaussian_beam(128, 1.5, 1.0);
  for (auto [z1, z2] : {std::pair{2.0, 3.0}, std::pair{5.0, 10.0}, std::pair{0.5, 14.5}}) {
    const auto two_steps = propagate(propagate(g, z1), z2);
    const auto one_step = propagate(g, z1 + z2);
    CHECK(relative_difference(two_steps, one_step) <= 1e-9);
  }
}

TEST_CASE("power is conserved for paraxial fields and never grows") {
  const auto g = gaussian_beam(128, 1.5, 1.0);
  for (double dz : {1.0, 6.0, 15.0})
    CHECK(std::abs(total_power(propagate(g, dz)) - total_power(g)) <= 1e-12 * total_power(g));

  std::mt19937 rng(3);
  const auto noisy = random_field(64, rng);
  for (double dz : {0.5, 3.0, 20.0}) CHECK(total_power(propagate(noisy, dz)) <= total_power(noisy) * (1 + 1e-12));
}

TEST_CASE("propagation is linear") {
  std::mt19937 rng(9);
  const auto f = random_field(64, rng), g = random_field(64, rng);
  const Complex alpha(0.7, -1.3), beta(-2.1, 0.4);
  auto combo = f;
  for (std::size_t k = 0; k < combo.samples.size(); ++k)
    combo.samples.values()[k] = alpha * f.samples.values()[k] + beta * g.samples.values()[k];
  const auto pf = propagate(f, 4.0), pg = propagate(g, 4.0);
  auto expected = pf;
  for (std::size_t k = 0; k < expected.samples.size(); ++k)
    expected.samples.values()[k] = alpha * pf.samples.values()[k] + beta * pg.samples.values()[k];
  CHECK(relative_difference(propagate(combo, 4.0), expected) <= 1e-12);
}

TEST_CASE("negative distance is rejected") {
  CHECK_THROWS_AS(propagate(gaussian_beam(16, 1.0), -1.0), std::invalid_argument);
  ComplexLine line;
  line.samples.assign(16, 1.0);
  CHECK_THROWS_AS(propagate(line, -0.1), std::invalid_argument);
}

TEST_CASE("sampling warning above lambda / 2") {
  auto f = blank(8, 0.22);
  CHECK_FALSE(sampling_warning(f).has_value());
  f.dx_um = 0.4;
  CHECK(sampling_warning(f).has_value());
}

TEST_CASE("low-NA lens focuses on axis, matching a Rayleigh-Sommerfeld oracle") {
  const auto s = lens(30.0);
  const auto p = hyperbolic_profile(s);
  const auto f = propagate(field_from_profile(p, 2.0), 30.0);
  const auto m = plane_metrics(f);
  CHECK(std::abs(m.peak_x_um) <= f.dx_um);
  CHECK(std::abs(m.peak_y_um) <= f.dx_um);

  // Oracle on a coarse 9 x 9 patch of the same sample positions.
  const std::size_t c = f.nx() / 2;
  double best = -1.0;
  double best_x = 0.0, best_y = 0.0;
  double asm_norm = 0.0, rs_norm = 0.0, cross = 0.0;
  for (std::size_t i = c - 4; i <= c + 4; ++i)
    for (std::size_t j = c - 4; j <= c + 4; ++j) {
      const double I_rs = std::norm(rayleigh_sommerfeld(p, f.x_at(j), f.y_at(i), 30.0));
      const double I_asm = std::norm(f.samples(i, j));
      if (I_rs > best) {
        best = I_rs;
        best_x = f.x_at(j);
        best_y = f.y_at(i);
      }
      asm_norm += I_asm * I_asm;
      rs_norm += I_rs * I_rs;
      cross += I_asm * I_rs;
    }
  CHECK(std::abs(m.peak_x_um - best_x) <= f.dx_um + 1e-12);
  CHECK(std::abs(m.peak_y_um - best_y) <= f.dx_um + 1e-12);
  // Intensity shapes agree on the patch.
  CHECK(cross / std::sqrt(asm_norm * rs_norm) >= 0.99);
}

TEST_CASE("focal scan recovers the design focal length") {
  const auto s = lens(15.0, 20.0, 20.0);
  const auto scan = find_focal_plane(field_from_profile(hyperbolic_profile(s), 2.0), 10.0, 20.0, 41);
  CHECK(std::abs(scan.z_um - 15.0) <= 0.75);
  CHECK(scan.z_values.size() == 41);
  CHECK(scan.z_values.front() == 10.0);
  CHECK(scan.z_values.back() == 20.0);
  CHECK(scan.metrics.peak_intensity > 0.0);
}

TEST_CASE("focal scan tie-break and preconditions") {
  auto plane = blank(32);
  for (auto& v : plane.samples.values()) v = 1.0;
  CHECK(find_focal_plane(plane, 2.0, 8.0, 5).z_um == 2.0);
  CHECK_THROWS_AS(find_focal_plane(plane, 2.0, 8.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(find_focal_plane(plane, 8.0, 2.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(find_focal_plane(blank(32), 2.0, 8.0, 5), std::domain_error);
}

TEST_CASE("band limit") {
  CHECK(band_limit(128, 0.22, 0.685, 0.0) == doctest::Approx(1.0 / 0.685));
  CHECK(band_limit(128, 0.22, 0.685, 50.0) < band_limit(128, 0.22, 0.685, 5.0));
}

}  // TEST_SUITE
