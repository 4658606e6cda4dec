#include "oamsq/medium.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace oamsq {

double MediumSpec::absorption(double intensity) const {
  return density_per_m3() * cross_section / (lorentzian() + intensity / saturation_intensity);
}

void MediumSpec::validate() const {
  if (!(density_per_cm3 >= 0) || !std::isfinite(density_per_cm3))
    throw Error(ErrorKind::InvalidArgument, "density must be finite and >= 0");
  if (!(cell_length > 0)) throw Error(ErrorKind::InvalidArgument, "cell length must be > 0");
  if (!(saturation_intensity > 0)) throw Error(ErrorKind::InvalidArgument, "saturation intensity must be > 0");
  if (!(cross_section > 0)) throw Error(ErrorKind::InvalidArgument, "cross section must be > 0");
  if (!std::isfinite(detuning)) throw Error(ErrorKind::InvalidArgument, "detuning must be finite");
}

ScreenObserver PumpEvolution::recorder() {
  return [this](const ScreenView& v) {
    const double isat = v.medium.saturation_intensity * v.medium.lorentzian();
    double weight = 0.0, gain = 0.0, excess = 0.0;
    for (const cplx& a : v.amplitude) {
      const double i = std::norm(a);
      if (i == 0.0) continue;
      const double s = i / isat;
      weight += i;
      gain += i * s / ((1.0 + s) * (1.0 + s));
      excess += i * s * s;
    }
    ScreenRecord rec;
    rec.z = v.z;
    rec.dz = v.dz;
    rec.optical_depth = v.medium.density_per_m3() * v.medium.cross_section * v.dz / v.medium.lorentzian();
    if (weight > 0) {
      rec.gain_moment = gain / weight;
      rec.excess_moment = excess / weight;
    }
    rec.power = weight * v.grid.dx() * v.grid.dy();
    screens_.push_back(rec);
    if (keep_fields_) {
      FieldBuffer copy(v.amplitude.begin(), v.amplitude.end());
      fields_.emplace_back(v.grid, std::move(copy), v.z);
    }
  };
}

void PumpEvolution::set_transmission(double input_power, double output_power) {
  input_power_ = input_power;
  output_power_ = output_power;
}

double PumpEvolution::transmission() const {
  if (input_power_ <= 0) return 1.0;
  return std::clamp(output_power_ / input_power_, 0.0, 1.0);
}

namespace {

void apply_screen(FieldBuffer& data, const MediumSpec& m, double dz) {
  const double alpha_lin = m.density_per_m3() * m.cross_section / m.lorentzian();
  const cplx rate{-0.5, -m.detuning};  // per unit alpha*dz
  const cplx far = std::exp(rate * alpha_lin * dz);
  // Below this saturation the screen differs from the linear one by < 1e-12
  // relative in alpha; most of the window is in that regime.
  const double i_floor = 1e-12 * m.saturation_intensity * m.lorentzian();
  const double nsig = m.density_per_m3() * m.cross_section;
  const double lz = m.lorentzian();
  for (cplx& a : data) {
    const double i = std::norm(a);
    if (i < i_floor) {
      a *= far;
    } else {
      // midpoint intensity keeps the screen second order in dz
      const double a0 = nsig / (lz + i / m.saturation_intensity);
      const double i_mid = i * std::exp(-0.5 * a0 * dz);
      const double alpha = nsig / (lz + i_mid / m.saturation_intensity);
      a *= std::exp(rate * (alpha * dz));
    }
  }
}

}  // namespace

namespace {

// Power outside the centered box holding the middle half of each axis.
double outer_power(std::span<const cplx> data, std::size_t nx, std::size_t ny) {
  double total = 0.0, outside = 0.0;
  for (std::size_t iy = 0; iy < ny; ++iy) {
    const bool row_in = iy >= ny / 4 && iy < ny - ny / 4;
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double i = std::norm(data[iy * nx + ix]);
      total += i;
      if (!row_in || ix < nx / 4 || ix >= nx - nx / 4) outside += i;
    }
  }
  return total > 0 ? outside / total : 0.0;
}

// Centered sub-window of the same pitch; the origin stays on the same sample.
FieldBuffer crop(const FieldBuffer& data, const Grid& g, std::size_t mx, std::size_t my) {
  FieldBuffer out(mx * my);
  const std::size_t x0 = g.nx() / 2 - mx / 2, y0 = g.ny() / 2 - my / 2;
  for (std::size_t iy = 0; iy < my; ++iy)
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>((y0 + iy) * g.nx() + x0), mx,
                out.begin() + static_cast<std::ptrdiff_t>(iy * mx));
  return out;
}

FieldBuffer embed(const FieldBuffer& sub, std::size_t mx, std::size_t my, const Grid& g) {
  FieldBuffer out(g.size(), cplx(0.0));
  const std::size_t x0 = g.nx() / 2 - mx / 2, y0 = g.ny() / 2 - my / 2;
  for (std::size_t iy = 0; iy < my; ++iy)
    std::copy_n(sub.begin() + static_cast<std::ptrdiff_t>(iy * mx), mx,
                out.begin() + static_cast<std::ptrdiff_t>((y0 + iy) * g.nx() + x0));
  return out;
}

void split_step(FieldBuffer& data, const Grid& g, double z0, const MediumSpec& medium, int steps,
                const ScreenObserver& observer) {
  const double dz = medium.cell_length / steps;
  const FreeSpacePropagator half(g, 0.5 * dz);
  const FreeSpacePropagator full(g, dz);
  half.apply(data);
  for (int s = 0; s < steps; ++s) {
    const double z = z0 + (s + 0.5) * dz;
    if (observer) observer(ScreenView{static_cast<std::size_t>(s), z, dz, g, data, medium});
    if (medium.density_per_cm3 > 0) apply_screen(data, medium, dz);
    (s + 1 < steps ? full : half).apply(data);
  }
}

}  // namespace

ComplexField2D propagate_medium(const ComplexField2D& field, const MediumSpec& medium, int steps,
                                const ScreenObserver& observer, Diagnostics* diag) {
  medium.validate();
  if (steps < 1) throw Error(ErrorKind::InvalidArgument, "medium steps must be >= 1");
  const double dz = medium.cell_length / steps;
  // The largest phase sits where the pump is weakest (alpha unsaturated).
  const double max_phase =
      std::abs(medium.detuning) * medium.density_per_m3() * medium.cross_section * dz / medium.lorentzian();
  if (max_phase > kMaxScreenPhase) {
    std::ostringstream msg;
    msg << "screen phase " << max_phase << " rad exceeds " << kMaxScreenPhase << " rad; use more than "
        << steps << " steps";
    throw Error(ErrorKind::StepTooCoarse, msg.str());
  }
  const Grid& g = field.grid();
  FieldBuffer data;
  // A focused pump covers a small patch of the window. Run on the smallest
  // centered sub-window whose outer half is dark at the entrance; keep the
  // result if the outer half is still nearly dark at the exit (wrapped light
  // then perturbs the output by about the square root of that fraction).
  for (std::size_t div = 8; div >= 2; div /= 2) {
    const std::size_t mx = g.nx() / div, my = g.ny() / div;
    if (mx < kMinCropSamples || my < kMinCropSamples) continue;
    FieldBuffer sub = crop(field.buffer(), g, mx, my);
    if (outer_power(sub, mx, my) > kCropEntranceDark) continue;
    const Grid cg(mx, my, g.dx(), g.dy(), g.wavelength());
    // Observers only see the attempt that is kept.
    std::vector<std::pair<ScreenRecord, FieldBuffer>> held;
    ScreenObserver hold;
    if (observer)
      hold = [&held](const ScreenView& v) {
        held.push_back({ScreenRecord{v.z, v.dz}, FieldBuffer(v.amplitude.begin(), v.amplitude.end())});
      };
    split_step(sub, cg, field.z(), medium, steps, hold);
    if (outer_power(sub, mx, my) <= kCropExitDark) {
      for (std::size_t i = 0; i < held.size(); ++i)
        observer(ScreenView{i, held[i].first.z, held[i].first.dz, cg, held[i].second, medium});
      data = embed(sub, mx, my, g);
    }
    break;
  }
  if (data.empty()) {
    data = field.buffer();
    split_step(data, g, field.z(), medium, steps, observer);
  }
  ComplexField2D out(g, std::move(data), field.z() + medium.cell_length);
  if (diag) {
    const double edge = edge_spectral_fraction(out);
    if (edge >= kAliasingThreshold) {
      std::ostringstream msg;
      msg << "spectral power fraction " << edge << " in outermost 10% of frequency window after cell";
      diag->warn(WarningKind::AliasingRisk, msg.str());
    }
  }
  return out;
}

ComplexField2D propagate_medium(const ComplexField2D& field, const MediumSpec& medium, int steps,
                                PumpEvolution& evolution, Diagnostics* diag) {
  ComplexField2D out = propagate_medium(field, medium, steps, evolution.recorder(), diag);
  evolution.set_transmission(total_power(field), total_power(out));
  return out;
}

std::vector<double> local_saturation_profile(const ComplexField2D& field, const MediumSpec& medium) {
  medium.validate();
  const double isat = medium.saturation_intensity * medium.lorentzian();
  std::vector<double> s(field.grid().size());
  auto amp = field.amplitude();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::norm(amp[i]) / isat;
  return s;
}

}  // namespace oamsq
