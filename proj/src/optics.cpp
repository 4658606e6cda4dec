#include "oamsq/optics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

namespace oamsq {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kInterpolationOrder = 6;

// Lagrange weights for nodes base..base+order-1 evaluated at u.
void lagrange_weights(double u, long base, double* w) {
  for (int a = 0; a < kInterpolationOrder; ++a) {
    double num = 1.0, den = 1.0;
    const double xa = static_cast<double>(base + a);
    for (int b = 0; b < kInterpolationOrder; ++b) {
      if (b == a) continue;
      const double xb = static_cast<double>(base + b);
      num *= u - xb;
      den *= xa - xb;
    }
    w[a] = num / den;
  }
}

cplx interpolate(const ComplexField2D& field, double x, double y) {
  const Grid& g = field.grid();
  const double u = x / g.dx() + static_cast<double>(g.nx() / 2);
  const double v = y / g.dy() + static_cast<double>(g.ny() / 2);
  const long bu = static_cast<long>(std::floor(u)) - (kInterpolationOrder / 2 - 1);
  const long bv = static_cast<long>(std::floor(v)) - (kInterpolationOrder / 2 - 1);
  double wu[kInterpolationOrder], wv[kInterpolationOrder];
  lagrange_weights(u, bu, wu);
  lagrange_weights(v, bv, wv);
  auto amp = field.amplitude();
  cplx acc{0.0, 0.0};
  for (int b = 0; b < kInterpolationOrder; ++b) {
    const std::size_t iy = static_cast<std::size_t>(bv + b);
    cplx row{0.0, 0.0};
    for (int a = 0; a < kInterpolationOrder; ++a)
      row += wu[a] * amp[iy * g.nx() + static_cast<std::size_t>(bu + a)];
    acc += wv[b] * row;
  }
  return acc;
}

double wrap_azimuth(double phi) {
  double p = std::fmod(phi, 2.0 * kPi);
  if (p < 0) p += 2.0 * kPi;
  return p;
}

}  // namespace

std::string_view to_string(BeamModel model) {
  return model == BeamModel::Gaussian ? "gaussian" : "lg1";
}

BeamModel parse_beam_model(std::string_view text) {
  if (text == "gaussian") return BeamModel::Gaussian;
  if (text == "lg1") return BeamModel::LG1;
  throw Error(ErrorKind::InvalidArgument, "unknown beam model '" + std::string(text) + "'");
}

double peak_parameter(const BeamSpec& spec) {
  return 2.0 * spec.power / (kPi * spec.waist * spec.waist);
}

ComplexField2D make_beam(const BeamSpec& spec, const Grid& grid, double z) {
  if (!(spec.waist > 0) || !(spec.power >= 0) || !std::isfinite(spec.power))
    throw Error(ErrorKind::InvalidArgument, "beam waist must be > 0 and power >= 0");
  if (std::min(grid.window_x(), grid.window_y()) < 8.0 * spec.waist)
    throw Error(ErrorKind::GridTooSmall, "grid window is smaller than 8 beam waists");
  const double w = spec.waist;
  const double a0 = std::sqrt(peak_parameter(spec));
  const double k = grid.wavenumber();
  FieldBuffer data(grid.size());
  for (std::size_t iy = 0; iy < grid.ny(); ++iy) {
    const double y = grid.y(iy) - spec.center_y;
    for (std::size_t ix = 0; ix < grid.nx(); ++ix) {
      const double x = grid.x(ix) - spec.center_x;
      const double r2 = x * x + y * y;
      cplx v = a0 * std::exp(-r2 / (w * w));
      if (spec.model == BeamModel::LG1) v *= std::numbers::sqrt2 * cplx(x, y) / w;
      if (spec.curvature != 0.0) v *= std::polar(1.0, 0.5 * k * spec.curvature * r2);
      data[grid.index(ix, iy)] = v;
    }
  }
  return ComplexField2D(grid, std::move(data), z);
}

double mask_phase(const PhaseMaskSpec& mask, double phi) {
  const double p = wrap_azimuth(phi);
  if (mask.sectors == kContinuousMask) return mask.charge * p;
  const double n = mask.sectors;
  // Boundary samples belong to the sector that starts there.
  const double sector = std::floor(n * p / (2.0 * kPi) + 1e-9);
  return 2.0 * kPi * mask.charge / n * std::min(sector, n - 1.0);
}

ComplexField2D apply_phase_mask(const ComplexField2D& field, const PhaseMaskSpec& mask) {
  if (mask.sectors != kContinuousMask && mask.sectors < 2)
    throw Error(ErrorKind::InvalidArgument, "stepped mask needs at least 2 sectors");
  const Grid& g = field.grid();
  if (std::abs(mask.center_x) >= 0.5 * g.window_x() || std::abs(mask.center_y) >= 0.5 * g.window_y())
    throw Error(ErrorKind::InvalidArgument, "mask center outside the grid window");
  FieldBuffer out = field.buffer();
  for (std::size_t iy = 0; iy < g.ny(); ++iy) {
    const double y = g.y(iy) - mask.center_y;
    for (std::size_t ix = 0; ix < g.nx(); ++ix) {
      const double x = g.x(ix) - mask.center_x;
      const double phi = (x == 0.0 && y == 0.0) ? 0.0 : std::atan2(y, x);
      out[g.index(ix, iy)] *= std::polar(1.0, mask_phase(mask, phi));
    }
  }
  return ComplexField2D(g, std::move(out), field.z());
}

double OamSpectrum::fraction(int m) const {
  if (m < -max_m || m > max_m) return 0.0;
  return fractions[static_cast<std::size_t>(m + max_m)];
}

OamSpectrum oam_spectrum(const ComplexField2D& field, int max_m) {
  if (max_m < 0) throw Error(ErrorKind::InvalidArgument, "max_m must be >= 0");
  const Grid& g = field.grid();
  const double dr = std::max(g.dx(), g.dy());
  const double margin = kInterpolationOrder / 2 + 1;
  const double r_max = std::min((static_cast<double>(g.nx() / 2) - margin) * g.dx(),
                                (static_cast<double>(g.ny() / 2) - margin) * g.dy());
  const auto rings = static_cast<std::size_t>(std::floor(r_max / dr - 0.5));

  OamSpectrum out;
  out.max_m = max_m;
  out.fractions.assign(static_cast<std::size_t>(2 * max_m + 1), 0.0);
  double total = 0.0, moment = 0.0;
  std::vector<cplx> samples;
  // Each ring of width dr is integrated with 2-point Gauss-Legendre in radius.
  const double node = 0.5 * dr / std::sqrt(3.0);
  for (std::size_t k = 0; k < rings; ++k) {
    for (int q = 0; q < 2; ++q) {
      const double r = (static_cast<double>(k) + 0.5) * dr + (q == 0 ? -node : node);
      const double weight = 0.5 * dr * r;
      const auto wanted = static_cast<std::size_t>(std::ceil(4.0 * kPi * r / dr));
      const std::size_t n_phi = std::max<std::size_t>(64, std::bit_ceil(wanted));
      samples.resize(n_phi);
      for (std::size_t j = 0; j < n_phi; ++j) {
        const double phi = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(n_phi);
        samples[j] = interpolate(field, r * std::cos(phi), r * std::sin(phi));
      }
      fft_1d(samples, true);
      const double norm = weight / (static_cast<double>(n_phi) * static_cast<double>(n_phi));
      for (std::size_t j = 0; j < n_phi; ++j) {
        const double p = std::norm(samples[j]) * norm;
        const long m = fft_frequency_index(j, n_phi);
        total += p;
        moment += static_cast<double>(m) * p;
        if (std::abs(m) <= max_m) out.fractions[static_cast<std::size_t>(m + max_m)] += p;
      }
    }
  }
  if (total > 0) {
    double in_band = 0.0;
    for (auto& f : out.fractions) {
      f /= total;
      in_band += f;
    }
    out.out_of_band = std::max(0.0, 1.0 - in_band);
    out.mean_m = moment / total;
  }
  return out;
}

std::pair<double, double> intensity_centroid(const ComplexField2D& field) {
  const Grid& g = field.grid();
  double sum = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t iy = 0; iy < g.ny(); ++iy)
    for (std::size_t ix = 0; ix < g.nx(); ++ix) {
      const double i = field.intensity_at(ix, iy);
      sum += i;
      sx += i * g.x(ix);
      sy += i * g.y(iy);
    }
  if (sum <= 0) return {0.0, 0.0};
  return {sx / sum, sy / sum};
}

ComplexField2D translate(const ComplexField2D& field, double shift_x, double shift_y) {
  const Grid& g = field.grid();
  FieldBuffer data = field.buffer();
  Fft2D fft(g.nx(), g.ny());
  fft.forward(data);
  for (std::size_t ikx = 0; ikx < g.nx(); ++ikx) {
    const double kx = angular_frequency(ikx, g.nx(), g.dx());
    for (std::size_t iky = 0; iky < g.ny(); ++iky) {
      const double ky = angular_frequency(iky, g.ny(), g.dy());
      data[ikx * g.ny() + iky] *= std::polar(1.0, -(kx * shift_x + ky * shift_y));
    }
  }
  fft.inverse(data);
  return ComplexField2D(g, std::move(data), field.z());
}

ComplexField2D recenter_on_centroid(const ComplexField2D& field) {
  auto [cx, cy] = intensity_centroid(field);
  if (cx == 0.0 && cy == 0.0) return field;
  return translate(field, -cx, -cy);
}

ComplexField2D magnify(const ComplexField2D& field, double factor) {
  if (!(factor > 0) || !std::isfinite(factor)) throw Error(ErrorKind::InvalidArgument, "magnification must be > 0");
  if (factor == 1.0) return field;
  const Grid& g = field.grid();
  const double lim_x = (static_cast<double>(g.nx() / 2) - kInterpolationOrder) * g.dx();
  const double lim_y = (static_cast<double>(g.ny() / 2) - kInterpolationOrder) * g.dy();
  FieldBuffer out(g.size(), cplx{0.0, 0.0});
  for (std::size_t iy = 0; iy < g.ny(); ++iy) {
    const double y = g.y(iy) / factor;
    if (std::abs(y) >= lim_y) continue;
    for (std::size_t ix = 0; ix < g.nx(); ++ix) {
      const double x = g.x(ix) / factor;
      if (std::abs(x) >= lim_x) continue;
      out[g.index(ix, iy)] = interpolate(field, x, y) / factor;
    }
  }
  return ComplexField2D(g, std::move(out), field.z());
}

void write_oam_csv(const OamSpectrum& spectrum, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  os << "m,fraction\n";
  char buf[64];
  for (int m = -spectrum.max_m; m <= spectrum.max_m; ++m) {
    std::snprintf(buf, sizeof buf, "%d,%.12g\n", m, spectrum.fraction(m));
    os << buf;
  }
  if (!os) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

double fwhm_to_waist(double fwhm) { return fwhm / std::sqrt(2.0 * std::log(2.0)); }

double rayleigh_range(double waist, double wavelength) { return kPi * waist * waist / wavelength; }

FocusedBeam focus_through_lens(double waist, double curvature, double wavelength, double focal_length) {
  // E ~ exp(i k r^2 / 2q), 1/q = 1/R + i lambda / (pi w^2)
  const std::complex<double> inv_q{curvature - 1.0 / focal_length, wavelength / (kPi * waist * waist)};
  const std::complex<double> q = 1.0 / inv_q;
  const double distance = -q.real();
  const double zr = -q.imag();  // q = d - i z_R at the new waist
  return {distance, std::sqrt(wavelength * zr / kPi)};
}

double collimated_waist_for_focus(double focus_waist, double wavelength, double focal_length) {
  const double a = wavelength * std::abs(focal_length) / kPi;
  const double w2 = focus_waist * focus_waist;
  const double disc = a * a - 4.0 * w2 * w2;
  if (disc < 0) throw Error(ErrorKind::InvalidArgument, "focus waist not reachable with this lens");
  return std::sqrt((a * a + a * std::sqrt(disc)) / (2.0 * w2));
}

}  // namespace oamsq
