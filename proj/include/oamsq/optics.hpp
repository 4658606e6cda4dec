#pragma once

#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "oamsq/field.hpp"

namespace oamsq {

enum class BeamModel { Gaussian, LG1 };

std::string_view to_string(BeamModel model);
BeamModel parse_beam_model(std::string_view text);

struct BeamSpec {
  BeamModel model = BeamModel::Gaussian;
  double waist = 1e-3;     // w, meters (1/e^2 intensity radius parameter)
  double power = 1e-3;     // P, watts
  double center_x = 0.0;   // meters
  double center_y = 0.0;
  double curvature = 0.0;  // 1/R in 1/m; positive = diverging, 0 = collimated
};

// I0 such that the total power of either model is pi w^2 I0 / 2.
double peak_parameter(const BeamSpec& spec);

// Gaussian:  I = I0 exp(-2 r^2 / w^2)
// LG1:       I = I0 (2 r^2 / w^2) exp(-2 r^2 / w^2), phase exp(i phi)
// Throws GridTooSmall when the window is narrower than 8 w.
ComplexField2D make_beam(const BeamSpec& spec, const Grid& grid, double z = 0.0);

inline constexpr int kContinuousMask = 0;

struct PhaseMaskSpec {
  int charge = 1;              // l, total phase winding in units of 2 pi
  int sectors = 8;             // N >= 2, or kContinuousMask
  double center_x = 0.0;
  double center_y = 0.0;
};

// Mask phase at azimuth phi (any real value): l*phi for a continuous mask,
// (2 pi l / N) floor(N phi / 2 pi) for a stepped one.
double mask_phase(const PhaseMaskSpec& mask, double phi);

ComplexField2D apply_phase_mask(const ComplexField2D& field, const PhaseMaskSpec& mask);

struct OamSpectrum {
  int max_m = 16;
  std::vector<double> fractions;  // index m + max_m
  double out_of_band = 0.0;
  double mean_m = 0.0;            // over every resolved harmonic, not only the band

  double fraction(int m) const;
};

// Azimuthal decomposition about the grid origin on concentric rings of
// width max(dx, dy), weighted by ring area; each ring is resampled at
// uniform azimuth with separable Lagrange interpolation. The caller is
// responsible for centering (see recenter_on_centroid).
OamSpectrum oam_spectrum(const ComplexField2D& field, int max_m = 16);

std::pair<double, double> intensity_centroid(const ComplexField2D& field);

// Band-limited (Fourier shift) translation so the intensity centroid sits
// at the grid origin.
ComplexField2D recenter_on_centroid(const ComplexField2D& field);
ComplexField2D translate(const ComplexField2D& field, double shift_x, double shift_y);

// Scaled copy about the grid origin, out(r) = in(r / m) / m, so power is
// kept while the mode fits inside the window.
ComplexField2D magnify(const ComplexField2D& field, double factor);

void write_oam_csv(const OamSpectrum& spectrum, const std::filesystem::path& path);

// Gaussian-beam helpers.
double fwhm_to_waist(double fwhm);
double rayleigh_range(double waist, double wavelength);

struct FocusedBeam {
  double distance;  // from the lens to the new waist, meters
  double waist;     // new waist, meters
};

// Propagates the q-parameter through a thin lens placed at the input plane.
FocusedBeam focus_through_lens(double waist, double curvature, double wavelength, double focal_length);

// Collimated waist at a lens that produces a focused waist of `focus_waist`.
double collimated_waist_for_focus(double focus_waist, double wavelength, double focal_length);

}  // namespace oamsq
