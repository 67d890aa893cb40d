#include <doctest.h>

#include <cmath>
#include <vector>

#include "focusforge/metrics.hpp"
#include "focusforge/pattern.hpp"

using namespace focusforge;

TEST_SUITE("metrics") {

TEST_CASE("FWHM of exact half-maximum samples") {
  const std::vector<double> tri{0, 1, 2, 1, 0};
  CHECK(fwhm_of_cut(tri, 1.0) == 2.0);
  CHECK(fwhm_of_cut(tri, 0.5) == 1.0);
  const std::vector<double> asym{0, 0, 4, 3, 1, 0};
  // Left crossing at 1.5, right crossing between 3 and 4 at 3.5.
  CHECK(fwhm_of_cut(asym, 1.0) == doctest::Approx(2.0));
}

TEST_CASE("FWHM of a sampled sinc squared") {
  const double W = 10.0, f = 30.0, lambda = 0.685, dx = 0.05;
  std::vector<double> cut;
  for (int k = -200; k <= 200; ++k) {
    const double u = kPi * k * dx * W / (lambda * f);
    cut.push_back(k == 0 ? 1.0 : std::pow(std::sin(u) / u, 2));
  }
  const double analytic = 0.886 * lambda * f / W;
  CHECK(analytic == doctest::Approx(1.8207).epsilon(1e-4));
  CHECK(std::abs(fwhm_of_cut(cut, dx) - analytic) <= 0.05 * analytic);
}

TEST_CASE("FWHM rejects unbounded peaks") {
  CHECK_THROWS_WITH_AS(fwhm_of_cut(std::vector<double>{1, 2, 3, 4}, 1.0), "unbounded peak", std::domain_error);
  CHECK_THROWS_WITH_AS(fwhm_of_cut(std::vector<double>{4, 3, 2, 1}, 1.0), "unbounded peak", std::domain_error);
  CHECK_THROWS_WITH_AS(fwhm_of_cut(std::vector<double>{1, 3, 2.5}, 1.0), "unbounded peak", std::domain_error);
  CHECK_THROWS_AS(fwhm_of_cut(std::vector<double>{0, 0, 0}, 1.0), std::domain_error);
}

TEST_CASE("line fit") {
  const std::vector<double> ys{-2, -1, 0, 1, 2};
  std::vector<double> xs;
  for (double y : ys) xs.push_back(-0.5 * y + 0.25);
  const auto fit = fit_line(ys, xs);
  CHECK(fit.slope == doctest::Approx(-0.5));
  CHECK(fit.intercept_um == doctest::Approx(0.25));
  CHECK(fit.rms_residual_um == doctest::Approx(0.0).epsilon(1e-12));
  xs[2] += 1.0;
  CHECK(fit_line(ys, xs).rms_residual_um > 0.0);
  CHECK_THROWS_AS(fit_line(std::vector<double>{1.0}, std::vector<double>{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(fit_line(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("single point target has unit homogeneity") {
  LensSpec s;
  s.focal_length_um = 15.0;
  PatternSpec pattern;
  pattern.segments.push_back({PointTarget{1.0, 0.0}, false});
  pattern.bounding_box = {-5, 5, -5, 5};
  const auto a = compile_segments(pattern, s);
  const auto f = propagate(field_from_profile(synthesize_profile(a), 2.0), 15.0);
  const auto m = pattern_metrics(f, a);
  CHECK(m.homogeneity_ratio == 1.0);
  REQUIRE(m.rows.size() == 1);
  CHECK(std::abs(m.rows[0].peak_x_um - 1.0) <= 2 * s.pitch_um);
  CHECK(m.peak_intensity > 0.0);
}

TEST_CASE("pattern metrics invariants on a line focus") {
  LensSpec s;
  s.focal_length_um = 6.0;
  const auto a = compile_segments(line_preset(-2.0, 0.0, s), s);
  const auto f = propagate(field_from_profile(synthesize_profile(a), 2.0), 6.0);
  const auto m = pattern_metrics(f, a);
  CHECK(m.homogeneity_ratio >= 1.0);
  CHECK(m.rows.size() == a.rows.size());
  for (const auto& r : m.rows) {
    CHECK(r.peak_intensity >= 0.0);
    if (r.fwhm_um > 0.0) CHECK(r.fwhm_um >= f.dx_um);
  }
  for (const auto& c : m.fwhm) CHECK(c.fwhm_um >= f.dx_um);

  const auto ridge = row_ridge(f, a, 0.8);
  CHECK(ridge.size() >= std::size_t(0.8 * 45) - 1);
  CHECK_THROWS_AS(row_ridge(f, a, 0.0), std::invalid_argument);

  // Metrics windows must stay inside the field.
  auto cropped = f;
  cropped.samples = Grid2D<Complex>(8, 8, 1.0);
  CHECK_THROWS_AS(pattern_metrics(cropped, a), std::out_of_range);
}

}  // TEST_SUITE
