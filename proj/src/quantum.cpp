#include "oamsq/quantum.hpp"

#include <algorithm>
#include <cmath>

namespace oamsq {

void NoiseModelParams::validate() const {
  if (!(gain_coefficient >= 0) || !(excess_coefficient >= 0))
    throw Error(ErrorKind::InvalidArgument, "noise coefficients must be >= 0");
  if (!(detection_efficiency >= 0 && detection_efficiency <= 1))
    throw Error(ErrorKind::InvalidArgument, "detection efficiency must lie in [0, 1]");
}

double mode_overlap(const ComplexField2D& lo, const ComplexField2D& sq) {
  if (!lo.grid().same_geometry(sq.grid()))
    throw Error(ErrorKind::GridMismatch, "mode_overlap: grids differ");
  auto a = lo.amplitude();
  auto b = sq.amplitude();
  cplx inner{0.0, 0.0};
  double na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inner += std::conj(a[i]) * b[i];
    na += std::norm(a[i]);
    nb += std::norm(b[i]);
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(std::norm(inner) / (na * nb), 0.0, 1.0);
}

GainFeatures gain_features(const PumpEvolution& evolution) {
  if (evolution.empty()) throw Error(ErrorKind::EmptyEvolution, "no medium screens were recorded");
  GainFeatures f;
  for (const auto& s : evolution.screens()) {
    f.gain_sum += s.optical_depth * s.gain_moment;
    f.excess_sum += s.optical_depth * s.excess_moment;
  }
  f.transmission = evolution.transmission();
  return f;
}

SqueezeGain squeeze_gain(const GainFeatures& features, const NoiseModelParams& params) {
  params.validate();
  return {params.gain_coefficient * features.gain_sum, params.excess_coefficient * features.excess_sum,
          features.transmission};
}

SqueezeGain squeeze_gain(const PumpEvolution& evolution, const NoiseModelParams& params) {
  return squeeze_gain(gain_features(evolution), params);
}

double variance_to_dB(double variance) { return 10.0 * std::log10(variance); }

NoiseResult measured_noise(double r, double excess, double eta_mode, double transmission,
                           const NoiseModelParams& params) {
  params.validate();
  if (!(r >= 0) || !(excess >= 0) || !std::isfinite(r) || !std::isfinite(excess))
    throw Error(ErrorKind::InvalidArgument, "squeeze parameter and excess must be finite and >= 0");
  if (!(eta_mode >= 0 && eta_mode <= 1) || !(transmission >= 0 && transmission <= 1))
    throw Error(ErrorKind::InvalidArgument, "overlap and transmission must lie in [0, 1]");
  NoiseResult out;
  out.squeeze_parameter = r;
  out.excess = excess;
  out.mode_overlap = eta_mode;
  out.transmission = transmission;
  out.efficiency = eta_mode * params.detection_efficiency * transmission;
  const double eta = out.efficiency;
  if (eta == 0.0) {
    out.variance = 1.0;
    out.min_quadrature_dB = shot_noise_reference();
    return out;
  }
  // 1 + eta (x - 1) keeps the vacuum case exactly at 1
  out.variance = 1.0 + eta * (std::exp(-2.0 * r) + excess - 1.0);
  out.variance = std::max(out.variance, 1.0 - eta);  // rounding guard
  out.min_quadrature_dB = variance_to_dB(out.variance);
  return out;
}

double anti_squeezing_dB(const NoiseResult& res) {
  const double eta = res.efficiency;
  return variance_to_dB(1.0 + eta * (std::exp(2.0 * res.squeeze_parameter) + res.excess - 1.0));
}

}  // namespace oamsq
