#include "oamsq/calibrate.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace oamsq {

namespace {

std::size_t find_axis(const std::vector<double>& axis, double value, const char* what) {
  for (std::size_t i = 0; i < axis.size(); ++i)
    if (std::abs(axis[i] - value) <= 1e-9 * std::abs(value)) return i;
  std::ostringstream msg;
  msg << "calibration target " << what << " " << value << " is not on the sweep axis";
  throw Error(ErrorKind::ConfigInvalid, msg.str());
}

struct Trial {
  double ratio = 0.0;
  double gain = 0.0;
  double margin = -std::numeric_limits<double>::infinity();
  bool ok = false;
};

NoiseModelParams with(const NoiseModelParams& base, double gain, double ratio) {
  NoiseModelParams p = base;
  p.gain_coefficient = gain;
  p.excess_coefficient = gain * ratio;
  return p;
}

// Smallest g0 with V(target) = level on the falling branch of V(g0).
bool solve_gain(const SweepCell& cell, const NoiseModelParams& base, double ratio, double level, double& gain) {
  auto f = [&](double g) { return evaluate_cell(cell, with(base, g, ratio)).min_quadrature_dB - level; };
  double lo = 0.0, hi = 1e-3;
  double prev = f(lo);
  if (prev <= 0) return false;
  bool bracketed = false;
  for (int i = 0; i < 80 && !bracketed; ++i) {
    const double v = f(hi);
    if (v <= 0) {
      bracketed = true;
    } else {
      if (v > prev) return false;  // past the noise minimum without reaching the level
      prev = v;
      lo = hi;
      hi *= 1.5;
    }
  }
  if (!bracketed) return false;
  for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0 ? lo : hi) = mid;
  }
  gain = hi;
  return true;
}

Trial try_ratio(const SweepGrid& grid, std::size_t target, const NoiseModelParams& base, double level, double ratio) {
  Trial t;
  t.ratio = ratio;
  if (!solve_gain(grid.cells[target], base, ratio, level, t.gain)) return t;
  const NoiseModelParams p = with(base, t.gain, ratio);
  const double at_target = evaluate_cell(grid.cells[target], p).min_quadrature_dB;
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    if (i == target || !grid.cells[i].ok) continue;
    margin = std::min(margin, evaluate_cell(grid.cells[i], p).min_quadrature_dB - at_target);
  }
  t.margin = margin;
  t.ok = true;
  return t;
}

}  // namespace

CalibrationResult calibrate(const SweepGrid& grid, const CalibrationTarget& target, const NoiseModelParams& base) {
  if (grid.kind != SweepGrid::Kind::PowerDensity)
    throw Error(ErrorKind::ConfigInvalid, "calibration needs a power-density sweep");
  const std::size_t row = find_axis(grid.rows, target.power, "power");
  const std::size_t col = find_axis(grid.cols, target.density, "density");
  const std::size_t idx = row * grid.cols.size() + col;
  if (!grid.cells[idx].ok)
    throw Error(ErrorKind::CalibrationDiverged, "target cell failed: " + grid.cells[idx].error);

  constexpr int kRatios = 241;
  const double lo = std::log(1e-5), hi = std::log(10.0);
  Trial best;
  std::size_t best_i = 0;
  for (int i = 0; i < kRatios; ++i) {
    const Trial t = try_ratio(grid, idx, base, target.level_dB, std::exp(lo + (hi - lo) * i / (kRatios - 1)));
    if (t.ok && t.margin > best.margin) best = t, best_i = static_cast<std::size_t>(i);
  }
  if (!best.ok) throw Error(ErrorKind::CalibrationDiverged, "no gain reaches the target level at the target cell");

  // Golden-section refinement in log(ratio) between the neighbours.
  const double step = (hi - lo) / (kRatios - 1);
  double a = lo + step * (static_cast<double>(best_i) - 1), b = lo + step * (static_cast<double>(best_i) + 1);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  auto margin_at = [&](double x) {
    const Trial t = try_ratio(grid, idx, base, target.level_dB, std::exp(x));
    if (t.ok && t.margin > best.margin) best = t;
    return t.ok ? t.margin : -std::numeric_limits<double>::infinity();
  };
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = margin_at(c), fd = margin_at(d);
  for (int i = 0; i < 40; ++i) {
    if (fc > fd) {
      b = d, d = c, fd = fc;
      c = b - phi * (b - a);
      fc = margin_at(c);
    } else {
      a = c, c = d, fc = fd;
      d = a + phi * (b - a);
      fd = margin_at(d);
    }
  }

  CalibrationResult out;
  out.params = with(base, best.gain, best.ratio);
  out.margin_dB = best.margin;
  SweepGrid probe = grid;
  apply_noise_model(probe, out.params);
  const auto [r, cc] = probe.argmin();
  out.row = r;
  out.col = cc;
  out.achieved_dB = probe.at(r, cc).noise.min_quadrature_dB;
  out.residual_dB = std::abs(out.achieved_dB - target.level_dB);
  std::ostringstream msg;
  if (r != row || cc != col) {
    msg << "grid optimum at power " << grid.rows[r] << " W, density " << grid.cols[cc]
        << " cm^-3 instead of the target cell (best margin " << best.margin << " dB)";
    throw Error(ErrorKind::CalibrationDiverged, msg.str());
  }
  if (out.residual_dB > target.tolerance_dB) {
    msg << "optimum " << out.achieved_dB << " dB misses the target by " << out.residual_dB << " dB";
    throw Error(ErrorKind::CalibrationDiverged, msg.str());
  }
  return out;
}

}  // namespace oamsq
