#pragma once

#include "oamsq/quantum.hpp"
#include "oamsq/sweep.hpp"

namespace oamsq {

struct CalibrationTarget {
  double power = 10.5e-3;     // W, must be on the power axis
  double density = 2.7e12;    // cm^-3, must be on the density axis
  double level_dB = -1.8;
  double tolerance_dB = 0.2;
};

struct CalibrationResult {
  NoiseModelParams params;
  double achieved_dB = 0.0;  // grid optimum after calibration
  double residual_dB = 0.0;  // |achieved - target|
  double margin_dB = 0.0;    // how far every other cell sits above the target cell
  std::size_t row = 0, col = 0;
};

// Fits (g0, eps0) on a power-density grid. For each excess/gain ratio on a
// log grid g0 is solved so the target cell sits exactly at the target level;
// the ratio that leaves the target cell lowest by the widest margin wins and
// is then refined by golden-section search. Throws CalibrationDiverged when
// the grid optimum misses the target cell or the level by more than the
// tolerance.
CalibrationResult calibrate(const SweepGrid& grid, const CalibrationTarget& target, const NoiseModelParams& base);

}  // namespace oamsq
