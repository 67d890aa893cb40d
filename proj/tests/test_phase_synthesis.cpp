#include <doctest.h>

#include <cmath>
#include <random>

#include "focusforge/phase_synthesis.hpp"
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

// Straight evaluation of the hyperbolic phase in long double.
long double hyperbolic(long double x, long double y, long double f, long double lambda) {
  const long double pi = 3.141592653589793238462643383279502884L;
  return 2.0L * pi / lambda * (std::sqrt(x * x + y * y + f * f) - f);
}

}  // namespace

TEST_SUITE("phase_synthesis") {

TEST_CASE("point focus phase at the reference point and a worked value") {
  CHECK(point_focus_phase(0.0, 0.0, lens(15.0)) == 0.0);
  const double phi = point_focus_phase(3.0, 4.0, lens(15.0));
  CHECK(phi == doctest::Approx(double(hyperbolic(3, 4, 15, 0.685))).epsilon(1e-14));
  // Quoted figures are rounded; the oracle above is the reference.
  CHECK(std::abs(phi - 7.44258) <= 1e-4);
  CHECK(std::abs(wrap_phase(phi) - 1.15939) <= 1e-4);
}

TEST_CASE("point focus phase is radially symmetric and non-negative") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-40.0, 40.0);
  const auto s = lens(15.0);
  for (int k = 0; k < 500; ++k) {
    const double x = u(rng), y = u(rng);
    const double p = point_focus_phase(x, y, s);
    CHECK(p >= 0.0);
    CHECK(point_focus_phase(-x, y, s) == p);
    CHECK(point_focus_phase(x, -y, s) == p);
    CHECK(point_focus_phase(-x, -y, s) == p);
    CHECK(point_focus_phase(y, x, s) == doctest::Approx(p).epsilon(1e-14));
  }
}

TEST_CASE("line offset") {
  CHECK(line_offset(0.0, -2.0, 0.0) == 0.0);
  CHECK(line_offset(2.0, -2.0, 0.0) == 1.0);
  CHECK(line_offset(2.0, -2.0, 2.0) == 0.0);
  CHECK_THROWS_WITH_AS(line_offset(1.0, 0.0, 0.0), "vertical-line degenerate slope", std::invalid_argument);
}

TEST_CASE("arc offset") {
  CHECK(arc_offset(0.0, 10.0) == -10.0);
  CHECK(arc_offset(10.0, 10.0) == 0.0);
  CHECK(arc_offset(6.0, 10.0) == doctest::Approx(-8.0));
  CHECK(arc_offset(-6.0, 10.0) == doctest::Approx(-8.0));
  CHECK_THROWS_WITH_AS(arc_offset(10.5, 10.0), "row outside arc support", std::out_of_range);
}

TEST_CASE("shifted focus phase") {
  const auto s6 = lens(6.0);
  CHECK(shifted_focus_phase(0.0, RowParams{0.0, 0.0, 0.0}, s6) == 0.0);
  const double v = shifted_focus_phase(2.0, RowParams{0.0, -1.0, 1.0}, s6);
  CHECK(v == doctest::Approx(2.0 * kPi / 0.685 * (std::sqrt(50.0) - 7.0)).epsilon(1e-13));
  CHECK(std::abs(v - 0.65189) <= 1e-4);
  CHECK_THROWS_WITH_AS(shifted_focus_phase(1.0, RowParams{0.0, 0.0, -6.0}, s6),
                       "non-positive effective focal length", std::domain_error);
  CHECK_THROWS_AS(shifted_focus_phase(1.0, RowParams{0.0, 0.0, -7.0}, s6), std::domain_error);
}

TEST_CASE("shifted focus phase with a = s = 0 is the 1-D point focus phase") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  const auto s = lens(15.0);
  for (int k = 0; k < 1000; ++k) {
    const double x = u(rng);
    CHECK(shifted_focus_phase(x, RowParams{}, s) == doctest::Approx(point_focus_phase(x, 0.0, s)).epsilon(1e-15));
  }
}

TEST_CASE("row phases differ by a translation of the argument") {
  const auto s = lens(6.0);
  for (double x = -5.0; x <= 5.0; x += 0.37)
    CHECK(shifted_focus_phase(x, RowParams{0.0, 1.0, 0.0}, s) ==
          doctest::Approx(shifted_focus_phase(x + 1.0, RowParams{0.0, 0.0, 0.0}, s)).epsilon(1e-14));
}

TEST_CASE("micro focus spacing against a finite-difference oracle") {
  const double U = 0.22;
  auto constant = [](double) { return 1.5; };
  CHECK(micro_focus_spacing(constant, 0.3, U).spacing_um == doctest::Approx(0.22).epsilon(1e-15));

  auto line = [](double y) { return line_offset(y, -2.0, 0.0); };
  CHECK(micro_focus_spacing(line, 1.0, U).spacing_um == doctest::Approx(0.24597).epsilon(1e-5));

  auto arc = [](double y) { return arc_offset(y, 10.0); };
  const auto d = micro_focus_spacing(arc, 3.0, U);
    CHECK(std::abs(d.offset_step_um - 0.0719) <= 1e-4);
  CHECK(std::abs(d.spacing_um - 0.23145) <= 1e-4);

  for (double y : {-4.0, -1.3, 0.0, 2.2, 3.0, 7.5}) {
    for (auto fn : {std::function<double(double)>(line), std::function<double(double)>(arc)}) {
      const double da = fn(y + U) - fn(y);
      const double oracle = std::sqrt(da * da + U * U);
      CHECK(std::abs(micro_focus_spacing(fn, y, U).spacing_um - oracle) <= 1e-12 * oracle);
    }
  }
  CHECK_THROWS_WITH(micro_focus_spacing(arc, 9.9, U), "row outside arc support");
}

TEST_CASE("micro focus spacing is at least one pitch") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> coef(-5.0, 5.0);
  for (int k = 0; k < 200; ++k) {
    const double c0 = coef(rng), c1 = coef(rng), c2 = coef(rng);
    auto fn = [&](double y) { return c0 + c1 * y + c2 * std::sin(y * c1); };
    CHECK(micro_focus_spacing(fn, coef(rng), 0.22).spacing_um >= 0.22);
  }
}

TEST_CASE("spacing criterion") {
  CHECK(spacing_criterion_satisfied(0.246, 0.685, 0.8));
  CHECK(diffraction_limit(0.685, 0.8) == doctest::Approx(0.428125));
  CHECK_FALSE(spacing_criterion_satisfied(0.430, 0.685, 0.8));
  CHECK(spacing_criterion_satisfied(0.685 / 2.0, 0.685, 1.0));
  CHECK_THROWS_WITH_AS(spacing_criterion_satisfied(0.2, 0.685, 0.0), "invalid numerical aperture",
                       std::invalid_argument);
  CHECK_THROWS_AS(spacing_criterion_satisfied(0.2, 0.685, 1.01), std::invalid_argument);
}

TEST_CASE("local NA") {
  CHECK(local_na(10.0, 0.0, 6.0) == doctest::Approx(5.0 / std::sqrt(61.0)).epsilon(1e-14));
  CHECK(local_na(10.0, 0.0, 6.0) == doctest::Approx(0.64018).epsilon(1e-5));
  CHECK(local_na(10.0, 5.0, 6.0) == doctest::Approx(0.85749).epsilon(1e-5));
  double prev = 0.0;
  for (double a = 0.0; a < 200.0; a += 5.0) {
    const double na = local_na(10.0, a, 6.0);
    CHECK(na >= prev);
    CHECK(na < 1.0);
    prev = na;
  }
  prev = 0.0;
  for (double w = 1.0; w < 50.0; w += 1.0) {
    const double na = local_na(w, 2.0, 6.0);
    CHECK(na >= prev);
    prev = na;
  }
  CHECK(local_na(10.0, -3.0, 6.0) == local_na(10.0, 3.0, 6.0));
  CHECK_THROWS(local_na(0.0, 0.0, 6.0));
  CHECK_THROWS(local_na(10.0, 0.0, 0.0));
  // A centred sub-aperture reduces to the full-row formula.
  CHECK(subaperture_na(-5.0, 5.0, 2.0, 6.0) == local_na(10.0, 2.0, 6.0));
}

TEST_CASE("beam width worked values") {
  CHECK(beam_width(0.35, 0.9) == doctest::Approx(0.35 / std::sqrt(0.19)).epsilon(1e-15));
  CHECK(std::abs(beam_width(0.35, 0.9) - 0.80286) <= 1e-4);
  CHECK(std::abs(beam_width(0.35, 0.99) - 2.48105) <= 1e-4);
  CHECK(std::abs(beam_width(0.35, 0.9) - 0.802) <= 0.01);
  CHECK(std::abs(beam_width(0.35, 0.99) - 2.48) <= 0.01);
  CHECK(beam_width(0.35, 0.0) == 0.35);
  CHECK_THROWS_WITH_AS(beam_width(0.35, 1.0), "grazing beam, width unbounded", std::domain_error);
  double prev = 0.0;
  for (double na = 0.0; na < 0.999; na += 0.01) {
    CHECK(beam_width(0.22, na) > prev);
    prev = beam_width(0.22, na);
  }
}

TEST_CASE("beam width against a geometric oracle built from lens phase samples") {
  // Two adjacent cells of the hyperbolic lens, U apart, around the radius
  // where the marginal ray has sine NA. The optical path step between them
  // is one leg of a right triangle whose hypotenuse is U; the beam crosses
  // the lens plane over U^2 divided by the other leg.
  const auto s = lens(15.0, 200.0, 200.0);
  const double U = 0.22;
  for (double na : {0.3, 0.6, 0.9}) {
    const double r = na * s.focal_length_um / std::sqrt(1.0 - na * na);
    const double path = (point_focus_phase(r + 0.5 * U, 0.0, s) - point_focus_phase(r - 0.5 * U, 0.0, s)) *
                        s.wavelength_um / kTwoPi;
    const double other_leg = std::sqrt(U * U - path * path);
    const double oracle = U * U / other_leg;
    CHECK(std::abs(beam_width(U, na) - oracle) <= 0.01 * oracle);
  }
}

}  // TEST_SUITE
