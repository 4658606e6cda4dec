#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "oamsq/analysis.hpp"
#include "oamsq/medium.hpp"
#include "oamsq/optics.hpp"
#include "oamsq/quantum.hpp"

namespace oamsq {

// Lens 1 sits at z = 0 with the source (and mask) directly in front of it.
// The cell is centered on the lens-1 focus plus a displacement; lens 2 and
// the camera are placed relative to that focus.
struct TrainSpec {
  double lens1_focal = 0.40;
  double lens2_focal = 0.50;
  double lens2_after_focus = 0.50;
  double camera_after_lens2 = 0.30;
};

struct TrainElement {
  enum class Kind { Lens, Cell, Camera };
  Kind kind;
  double z;                   // lens / camera plane, or cell center
  double focal_length = 0.0;  // lenses only
};

struct OpticalTrain {
  std::vector<TrainElement> elements;  // ascending z; lens 1 first
  double focus_z = 0.0;
  void validate(double cell_length) const;  // ConfigInvalid on a malformed list
};

OpticalTrain build_train(const TrainSpec& spec, const BeamSpec& source, double wavelength, double cell_length,
                         double displacement);

struct SweepConfig {
  Grid grid{1024, 1024, 1.68e-5, 1.68e-5, 795e-9};
  BeamSpec pump;  // power is replaced per cell
  std::optional<PhaseMaskSpec> mask;
  TrainSpec train;
  MediumSpec medium;  // density and cell position are replaced per cell
  int medium_steps = kDefaultMediumSteps;
  std::vector<double> powers;         // W
  std::vector<double> densities;      // atoms / cm^3
  std::vector<double> displacements;  // m, cell center relative to the focus
  double displacement = 0.0;          // m, cell position for power-density sweeps
  NoiseModelParams noise;
  double mode_mismatch_kappa = 0.0;
  bool detuning_scan = false;
  double camera_noise = 0.0;  // additive pixel noise, std as a fraction of the image peak
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path snapshot_dir;  // empty: no camera images written

  BeamModel fit_model() const;
  void validate() const;  // ConfigInvalid
};

inline constexpr double kDetuningScan[] = {0.5, 0.75, 1.0, 1.25, 1.5};

// Everything about one traversal that does not depend on (g0, eps0).
struct CellVariant {
  double detuning = 0.0;
  GainFeatures gain;
  double eta_mode = 1.0;
  FitResult fit;
};

struct SweepCell {
  double power = 0.0;
  double density = 0.0;
  double displacement = 0.0;
  bool ok = false;
  std::string error;
  std::vector<CellVariant> variants;  // one, or one per detuning-scan point
  std::size_t chosen = 0;
  NoiseResult noise;
  double waist_ratio = 1.0;
  const FitResult& fit() const { return variants.at(chosen).fit; }
};

struct SweepGrid {
  enum class Kind { PowerDensity, Displacement };
  Kind kind = Kind::PowerDensity;
  std::vector<double> rows;  // powers (power-density) or displacements
  std::vector<double> cols;  // densities (power-density) or powers
  std::vector<SweepCell> cells;  // row-major
  std::string timestamp;

  const SweepCell& at(std::size_t row, std::size_t col) const { return cells[row * cols.size() + col]; }
  std::size_t failed() const;
  // Row/column of the lowest min_dB among successful cells.
  std::pair<std::size_t, std::size_t> argmin() const;
};

using ProgressCallback = std::function<void(std::size_t done, std::size_t total)>;

// Physical pipeline for one grid point: source, mask, train, cell with
// screen recording, camera image, fit, gain features.
SweepCell run_cell(const SweepConfig& config, double power, double density, double displacement,
                   double linear_waist, std::uint64_t cell_index);

struct CameraRun {
  ComplexField2D camera;
  PumpEvolution evolution;
  OpticalTrain train;
};

// Source through the whole train at the configured detuning.
CameraRun simulate_to_camera(const SweepConfig& config, double power, double density, double displacement,
                             Diagnostics* diag = nullptr);

// Camera-plane waist with an empty cell; power independent.
double linear_camera_waist(const SweepConfig& config, double displacement);

SweepGrid run_power_density_sweep(const SweepConfig& config, const ProgressCallback& progress = {});
SweepGrid run_displacement_sweep(const SweepConfig& config, const ProgressCallback& progress = {});

// Recomputes every cell's NoiseResult (and detuning choice) for new params.
void apply_noise_model(SweepGrid& grid, const NoiseModelParams& params);
NoiseResult evaluate_cell(const SweepCell& cell, const NoiseModelParams& params, std::size_t* chosen = nullptr);

// power_mW, density_per_cm3, displacement_cm, min_dB, r, eta, T, waist_ratio
void write_sweep_csv(const SweepGrid& grid, std::ostream& os);
void write_sweep_csv(const SweepGrid& grid, const std::filesystem::path& path);
void write_error_log(const SweepGrid& grid, const std::filesystem::path& path);
void write_provenance(const SweepGrid& grid, const std::string& config_text, const std::filesystem::path& path);

std::uint64_t fnv1a(std::string_view text);
std::string utc_timestamp();

}  // namespace oamsq
