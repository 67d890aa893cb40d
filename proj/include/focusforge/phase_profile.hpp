#pragma once

#include "focusforge/grid.hpp"
#include "focusforge/lens_spec.hpp"

namespace focusforge {

/// Wrapped phase in [0, 2 pi) per lens cell, Ny rows by Nx columns.
struct PhaseProfile {
  LensSpec lens;
  Grid2D<double> phase;

  double pitch_um() const { return lens.pitch_um; }

  /// Checks grid dimensions against `lens` and the [0, 2 pi) range.
  void validate() const;
};

}  // namespace focusforge
