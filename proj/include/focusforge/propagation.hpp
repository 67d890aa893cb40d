#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "focusforge/grid.hpp"
#include "focusforge/phase_profile.hpp"

namespace focusforge {

using Complex = std::complex<double>;

/// Sampled scalar field on a plane z = const. Sample (i, j) sits at
/// (x0 + j dx, y0 + i dx).
struct ComplexField {
  Grid2D<Complex> samples;
  double dx_um = 0.22;
  double wavelength_um = 0.685;
  double z_um = 0.0;
  double x0_um = 0.0;
  double y0_um = 0.0;

  std::size_t nx() const { return samples.cols(); }
  std::size_t ny() const { return samples.rows(); }
  double x_at(std::size_t j) const { return x0_um + double(j) * dx_um; }
  double y_at(std::size_t i) const { return y0_um + double(i) * dx_um; }

  /// At least 2 x 2 samples, dx > 0, finite samples.
  void validate() const;
};

/// Field varying along x only (uniform along y): the one-dimensional problem
/// of a single lens row.
struct ComplexLine {
  std::vector<Complex> samples;
  double dx_um = 0.22;
  double wavelength_um = 0.685;
  double z_um = 0.0;
  double x0_um = 0.0;

  double x_at(std::size_t j) const { return x0_um + double(j) * dx_um; }
  void validate() const;
};

/// Unit-amplitude transmission exp(-i phase) of the profile, centred in a
/// zero-padded grid of round(n * padding_factor) samples per axis.
ComplexField field_from_profile(const PhaseProfile& profile, double padding_factor = 2.0);

/// Band-limited angular-spectrum transport by dz >= 0.
ComplexField propagate(const ComplexField& field, double dz_um);
ComplexLine propagate(const ComplexLine& field, double dz_um);

/// Sum of |E|^2 dx^2 (dx for lines).
double total_power(const ComplexField& field);
double total_power(const ComplexLine& field);

Grid2D<double> intensity(const ComplexField& field);
std::vector<double> intensity(const ComplexLine& field);

/// Message when dx exceeds lambda / 2, otherwise nothing.
std::optional<std::string> sampling_warning(const ComplexField& field);

/// Largest transmitted spatial frequency per axis for a grid of n samples at
/// pitch dx propagated by dz.
double band_limit(std::size_t n, double dx_um, double wavelength_um, double dz_um);

}  // namespace focusforge
