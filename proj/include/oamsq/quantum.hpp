#pragma once

#include "oamsq/field.hpp"
#include "oamsq/medium.hpp"

namespace oamsq {

struct NoiseModelParams {
  double gain_coefficient = 1.0;      // g0
  double excess_coefficient = 0.0;    // eps0
  double detection_efficiency = 0.95;
  double analysis_frequency = 1e6;    // Hz, carried for reporting only
  void validate() const;
};

struct NoiseResult {
  double min_quadrature_dB = 0.0;
  double squeeze_parameter = 0.0;
  double excess = 0.0;
  double mode_overlap = 1.0;
  double transmission = 1.0;
  double efficiency = 0.0;  // eta = eta_mode * eta_det * T
  double variance = 1.0;
};

// |<lo|sq>|^2 / (<lo|lo><sq|sq>); zero if either field is empty.
double mode_overlap(const ComplexField2D& lo, const ComplexField2D& sq);

// Raw per-traversal sums that do not depend on (g0, eps0):
// A = sum d <s/(1+s)^2>, B = sum d <s^2>.
struct GainFeatures {
  double gain_sum = 0.0;
  double excess_sum = 0.0;
  double transmission = 1.0;
};

GainFeatures gain_features(const PumpEvolution& evolution);

struct SqueezeGain {
  double r = 0.0;
  double excess = 0.0;
  double transmission = 1.0;
};

// r = g0 A, eps = eps0 B. Throws EmptyEvolution without recorded screens.
SqueezeGain squeeze_gain(const PumpEvolution& evolution, const NoiseModelParams& params);
SqueezeGain squeeze_gain(const GainFeatures& features, const NoiseModelParams& params);

// V = eta (exp(-2r) + eps) + (1 - eta), eta = eta_mode eta_det T.
NoiseResult measured_noise(double r, double excess, double eta_mode, double transmission,
                           const NoiseModelParams& params);

// V_max = eta (exp(2r) + eps) + (1 - eta), in dB.
double anti_squeezing_dB(const NoiseResult& result);

// Every NoiseResult is expressed relative to the vacuum variance.
constexpr double shot_noise_reference() { return 0.0; }

double variance_to_dB(double variance);

}  // namespace oamsq
