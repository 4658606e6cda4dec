#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "oamsq/field.hpp"

namespace oamsq {

// Two-level saturable vapor. Detuning is in half-linewidths, so the
// off-resonant Lorentzian factor is 1 + 4 delta^2.
struct MediumSpec {
  double density_per_cm3 = 0.0;
  double cell_length = 0.01;          // m
  double detuning = -4.0;             // delta = Delta / Gamma
  double cross_section = 2e-15;       // sigma0, m^2 (Doppler-folded effective value)
  double saturation_intensity = 4e3;  // I_s, W/m^2
  double cell_center_z = 0.0;         // m

  double density_per_m3() const { return density_per_cm3 * 1e6; }
  double lorentzian() const { return 1.0 + 4.0 * detuning * detuning; }
  // alpha(I) = N sigma0 / (1 + 4 delta^2 + I / I_s), intensity loss per meter.
  double absorption(double intensity) const;
  void validate() const;
};

// One nonlinear screen as seen by an observer, before the screen is applied.
struct ScreenView {
  std::size_t index;
  double z;             // axial position of the screen
  double dz;            // slab thickness it represents
  const Grid& grid;
  std::span<const cplx> amplitude;
  const MediumSpec& medium;
};

using ScreenObserver = std::function<void(const ScreenView&)>;

struct ScreenRecord {
  double z = 0.0;
  double dz = 0.0;
  double optical_depth = 0.0;  // N sigma0 dz / (1 + 4 delta^2)
  double gain_moment = 0.0;    // <s / (1+s)^2>, pump-intensity weighted
  double excess_moment = 0.0;  // <s^2>, pump-intensity weighted
  double power = 0.0;          // pump power entering the screen
};

// Record of a pump traversal through the cell. Per-screen moments are always
// kept; full fields only on request since each is nx*ny complex values.
class PumpEvolution {
 public:
  explicit PumpEvolution(bool keep_fields = false) : keep_fields_(keep_fields) {}

  ScreenObserver recorder();
  void set_transmission(double input_power, double output_power);

  const std::vector<ScreenRecord>& screens() const { return screens_; }
  const std::vector<ComplexField2D>& fields() const { return fields_; }
  double input_power() const { return input_power_; }
  double output_power() const { return output_power_; }
  double transmission() const;
  bool empty() const { return screens_.empty(); }

 private:
  bool keep_fields_;
  std::vector<ScreenRecord> screens_;
  std::vector<ComplexField2D> fields_;
  double input_power_ = 0.0;
  double output_power_ = 0.0;
};

inline constexpr double kMaxScreenPhase = 0.5;  // rad
inline constexpr int kDefaultMediumSteps = 60;
// The cell may run on a centered sub-window: chosen when the power fraction
// in its outer half is below kCropEntranceDark, kept when it is still below
// kCropExitDark after the cell.
inline constexpr double kCropEntranceDark = 1e-24;
inline constexpr double kCropExitDark = 1e-12;
inline constexpr std::size_t kMinCropSamples = 64;

// Symmetric split-step through a cell of length L starting at the field's
// current plane: (D/2 S D/2)^steps with adjacent half steps merged. Each
// screen multiplies by exp(-alpha dz / 2) exp(i dphi), dphi = -delta alpha dz.
// Throws StepTooCoarse when any screen phase exceeds 0.5 rad. Observers may
// see a smaller centered grid than the input (same pitch).
ComplexField2D propagate_medium(const ComplexField2D& field, const MediumSpec& medium, int steps,
                                const ScreenObserver& observer = {}, Diagnostics* diag = nullptr);

// Convenience overload that fills `evolution`, including the transmission.
ComplexField2D propagate_medium(const ComplexField2D& field, const MediumSpec& medium, int steps,
                                PumpEvolution& evolution, Diagnostics* diag = nullptr);

// s(r) = I(r) / (I_s (1 + 4 delta^2)), row-major like the field.
std::vector<double> local_saturation_profile(const ComplexField2D& field, const MediumSpec& medium);

}  // namespace oamsq
