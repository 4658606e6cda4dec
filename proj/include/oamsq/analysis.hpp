#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "oamsq/field.hpp"
#include "oamsq/optics.hpp"

namespace oamsq {

// Pixel (ix, iy) sits at ((ix - nx/2) pitch, (iy - ny/2) pitch), the same
// convention as Grid, so fits of rendered fields report grid coordinates.
struct IntensityImage {
  std::size_t nx = 0, ny = 0;
  double pitch = 0.0;
  std::vector<double> values;  // row-major, background already removed
  double background = 0.0;

  double x(std::size_t ix) const { return (static_cast<double>(ix) - static_cast<double>(nx / 2)) * pitch; }
  double y(std::size_t iy) const { return (static_cast<double>(iy) - static_cast<double>(ny / 2)) * pitch; }
  double at(std::size_t ix, std::size_t iy) const { return values[iy * nx + ix]; }
  double peak() const;
  void validate() const;
};

IntensityImage image_from_field(const ComplexField2D& field);

// Parameters ordered (I0, w, x0, y0).
using ProfileParams = std::array<double, 4>;

struct FitResult {
  BeamModel model = BeamModel::Gaussian;
  double w = 0.0;
  double I0 = 0.0;
  double x0 = 0.0;
  double y0 = 0.0;
  double residual = 0.0;  // RMS(fit - data) / peak over the fit window
  bool converged = false;
  int iterations = 0;
};

double profile_value(BeamModel model, const ProfileParams& p, double x, double y);
// d(value)/d(I0, w, x0, y0), analytic.
ProfileParams profile_jacobian(BeamModel model, const ProfileParams& p, double x, double y);

inline constexpr int kMaxFitIterations = 200;
inline constexpr double kFitStepTolerance = 1e-6;

// Damped Gauss-Newton on pixels within a window around the initial centroid.
// Throws DegenerateImage when fewer than 100 pixels exceed 5% of the peak.
FitResult fit_profile(const IntensityImage& image, BeamModel model);

double waist_ratio(const FitResult& fit, const FitResult& reference);

// 8/16-bit binary PGM or a CSV matrix (an optional non-numeric header row is
// skipped). `pitch` gives meters per pixel for either format.
IntensityImage ingest_image(const std::filesystem::path& path, double pitch);

void render_image(const ComplexField2D& field, const std::filesystem::path& path);
void render_image(const IntensityImage& image, const std::filesystem::path& path);

void write_fit_csv_header(std::ostream& os);
void write_fit_csv_row(std::ostream& os, const FitResult& fit);
void write_fit_csv(const std::vector<FitResult>& fits, const std::filesystem::path& path);

}  // namespace oamsq
