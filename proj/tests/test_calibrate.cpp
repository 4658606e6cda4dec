#include <doctest.h>

#include <cmath>

#include "oamsq/calibrate.hpp"

using namespace oamsq;

namespace {

// Gain features (A, B, T) recorded from the default Gaussian train around
// 10.5 mW and 2.7e12 cm^-3.
SweepGrid recorded_grid() {
  const double table[3][3][3] = {
      {{0.141904, 0.388632, 0.639876}, {0.168303, 0.432469, 0.580507}, {0.20749, 0.487153, 0.496283}},
      {{0.148101, 0.695923, 0.667648}, {0.176705, 0.779165, 0.611048}, {0.21996, 0.885116, 0.52957}},
      {{0.149692, 1.10215, 0.690969}, {0.179328, 1.24055, 0.637063}, {0.224732, 1.41975, 0.558589}}};
  SweepGrid g;
  g.rows = {8e-3, 10.5e-3, 13e-3};
  g.cols = {2.25e12, 2.7e12, 3.4e12};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      SweepCell cell;
      cell.power = g.rows[r];
      cell.density = g.cols[c];
      cell.ok = true;
      CellVariant v;
      v.gain = {table[r][c][0], table[r][c][1], table[r][c][2]};
      cell.variants.push_back(v);
      g.cells.push_back(cell);
    }
  return g;
}

double noise_dB(const SweepCell& cell, const NoiseModelParams& p) {
  const auto& f = cell.variants[0].gain;
  const double eta = p.detection_efficiency * f.transmission;
  return 10 * std::log10(1 + eta * (std::exp(-2 * p.gain_coefficient * f.gain_sum) +
                                    p.excess_coefficient * f.excess_sum - 1));
}

}  // namespace

TEST_CASE("calibration lands the optimum on the target cell") {
  const SweepGrid g = recorded_grid();
  const CalibrationTarget target;
  const auto res = calibrate(g, target, NoiseModelParams{});
  CHECK(res.row == 1);
  CHECK(res.col == 1);
  CHECK(res.residual_dB < 1e-9);
  CHECK(res.margin_dB > 0);
  CHECK(res.params.gain_coefficient > 0);
  CHECK(res.params.excess_coefficient > 0);
  CHECK(res.params.detection_efficiency == 0.95);
  // Independent re-evaluation of every cell.
  const double at_target = noise_dB(g.at(1, 1), res.params);
  CHECK(at_target == doctest::Approx(-1.8).epsilon(1e-9));
  for (std::size_t i = 0; i < g.cells.size(); ++i) {
    if (i == 4) continue;
    CHECK(noise_dB(g.cells[i], res.params) - at_target >= res.margin_dB - 1e-12);
  }
}

TEST_CASE("calibration rejects off-axis targets and the wrong sweep kind") {
  SweepGrid g = recorded_grid();
  CalibrationTarget t;
  t.power = 11e-3;
  try {
    calibrate(g, t, NoiseModelParams{});
    FAIL("off-axis target accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigInvalid);
  }
  g.kind = SweepGrid::Kind::Displacement;
  CHECK_THROWS_AS(calibrate(g, CalibrationTarget{}, NoiseModelParams{}), Error);
}

TEST_CASE("calibration diverges when another cell dominates") {
  SweepGrid g = recorded_grid();
  // More gain, no more excess, no more loss than the target: always quieter.
  auto& v = g.cells[5].variants[0].gain;
  v = g.cells[4].variants[0].gain;
  v.gain_sum *= 1.2;
  try {
    calibrate(g, CalibrationTarget{}, NoiseModelParams{});
    FAIL("dominated target accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CalibrationDiverged);
  }
}

TEST_CASE("unreachable level diverges") {
  SweepGrid g = recorded_grid();
  CalibrationTarget t;
  t.level_dB = -30;  // below the loss floor 1 - eta
  try {
    calibrate(g, t, NoiseModelParams{});
    FAIL("unreachable level accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CalibrationDiverged);
  }
  g.cells[4].ok = false;
  CHECK_THROWS_AS(calibrate(g, CalibrationTarget{}, NoiseModelParams{}), Error);
}
