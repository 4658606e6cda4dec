#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "oamsq/error.hpp"
#include "oamsq/fft.hpp"

namespace oamsq {

// Uniform sampling grid. The optical axis passes through sample (nx/2, ny/2),
// so x(i) = (i - nx/2) * dx.
class Grid {
 public:
  Grid(std::size_t nx, std::size_t ny, double dx, double dy, double wavelength);

  // Square grid whose window is `window_factor` times `fwhm`.
  static Grid square(std::size_t n, double window, double wavelength);
  static Grid for_beam_fwhm(std::size_t n, double fwhm, double window_factor, double wavelength);

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t size() const { return nx_ * ny_; }
  double dx() const { return dx_; }
  double dy() const { return dy_; }
  double wavelength() const { return wavelength_; }
  double wavenumber() const;
  double window_x() const { return static_cast<double>(nx_) * dx_; }
  double window_y() const { return static_cast<double>(ny_) * dy_; }

  double x(std::size_t ix) const { return (static_cast<double>(ix) - static_cast<double>(nx_ / 2)) * dx_; }
  double y(std::size_t iy) const { return (static_cast<double>(iy) - static_cast<double>(ny_ / 2)) * dy_; }
  std::size_t index(std::size_t ix, std::size_t iy) const { return iy * nx_ + ix; }

  bool same_geometry(const Grid& other) const;
  bool operator==(const Grid& other) const = default;

 private:
  std::size_t nx_, ny_;
  double dx_, dy_, wavelength_;
};

// Sampled complex scalar field; |amplitude|^2 is intensity in W/m^2. Values
// are immutable once constructed: every operator returns a new field.
class ComplexField2D {
 public:
  explicit ComplexField2D(Grid grid, double z = 0.0);
  ComplexField2D(Grid grid, FieldBuffer amplitude, double z = 0.0);

  const Grid& grid() const { return grid_; }
  double z() const { return z_; }
  std::span<const cplx> amplitude() const { return data_; }
  cplx at(std::size_t ix, std::size_t iy) const { return data_[grid_.index(ix, iy)]; }
  double intensity_at(std::size_t ix, std::size_t iy) const { return std::norm(at(ix, iy)); }
  std::vector<double> intensity() const;
  double peak_intensity() const;

  FieldBuffer buffer() const { return data_; }
  ComplexField2D at_z(double z) const { return ComplexField2D(grid_, data_, z); }

 private:
  Grid grid_;
  FieldBuffer data_;
  double z_;
};

struct LensSpec {
  double focal_length;  // meters, positive = converging
};

double total_power(const ComplexField2D& field);

// (a*F1 + b*F2) on a shared grid; z taken from F1.
ComplexField2D combine(const ComplexField2D& f1, cplx a, const ComplexField2D& f2, cplx b);

// Relative L2 distance |a - b| / |b|.
double relative_l2(const ComplexField2D& a, const ComplexField2D& b);

// Angular-spectrum propagator with the exact scalar transfer function in the
// co-moving frame, exp(i z (sqrt(k^2 - k_perp^2) - k)); evanescent components
// are zeroed. Building one is the expensive part; applying it is two FFTs.
class FreeSpacePropagator {
 public:
  FreeSpacePropagator(const Grid& grid, double distance);

  double distance() const { return distance_; }
  const Grid& grid() const { return grid_; }

  // Operates in place on a buffer laid out like ComplexField2D::amplitude().
  void apply(FieldBuffer& data) const;
  ComplexField2D operator()(const ComplexField2D& field, Diagnostics* diag = nullptr) const;

 private:
  Grid grid_;
  double distance_;
  Fft2D fft_;
  FieldBuffer transfer_;  // transposed spectral layout
};

// Fraction of spectral power with |kx| or |ky| beyond 90% of Nyquist.
double edge_spectral_fraction(const ComplexField2D& field);
inline constexpr double kAliasingThreshold = 1e-3;

ComplexField2D propagate_free(const ComplexField2D& field, double distance, Diagnostics* diag = nullptr);
ComplexField2D apply_lens(const ComplexField2D& field, const LensSpec& lens);

// Binary container "CF2D": little-endian header (magic, version u32, nx, ny
// u32, dx, dy, wavelength, z f64) followed by row-major interleaved re/im f64.
inline constexpr std::uint32_t kFieldFormatVersion = 1;
void write_field(const ComplexField2D& field, const std::filesystem::path& path);
ComplexField2D read_field(const std::filesystem::path& path);

// 16-bit binary PGM (P5, maxval 65535), linearly scaled to the peak value.
void write_pgm16(std::span<const double> values, std::size_t nx, std::size_t ny,
                 const std::filesystem::path& path);
void write_intensity_pgm(const ComplexField2D& field, const std::filesystem::path& path);

}  // namespace oamsq
