#include "oamsq/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

namespace oamsq {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }


template <typename T>
void put_le(std::ostream& os, T value) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits;
  std::memcpy(&bits, &value, sizeof(T));
  char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  os.write(bytes, sizeof(T));
}

template <typename T>
T get_le(std::istream& is, const std::filesystem::path& path) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw Error(ErrorKind::CorruptFile, "truncated field file " + path.string());
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

}  // namespace

Grid::Grid(std::size_t nx, std::size_t ny, double dx, double dy, double wavelength)
    : nx_(nx), ny_(ny), dx_(dx), dy_(dy), wavelength_(wavelength) {
  if (nx < 16 || ny < 16 || !is_power_of_two(nx) || !is_power_of_two(ny))
    throw Error(ErrorKind::InvalidArgument, "grid dimensions must be powers of two >= 16");
  if (!(dx > 0) || !(dy > 0) || !(wavelength > 0) || !std::isfinite(dx) || !std::isfinite(dy) ||
      !std::isfinite(wavelength))
    throw Error(ErrorKind::InvalidArgument, "grid pitch and wavelength must be positive");
}

Grid Grid::square(std::size_t n, double window, double wavelength) {
  double d = window / static_cast<double>(n);
  return Grid(n, n, d, d, wavelength);
}

Grid Grid::for_beam_fwhm(std::size_t n, double fwhm, double window_factor, double wavelength) {
  return square(n, fwhm * window_factor, wavelength);
}

double Grid::wavenumber() const { return 2.0 * std::numbers::pi / wavelength_; }

bool Grid::same_geometry(const Grid& o) const {
  return nx_ == o.nx_ && ny_ == o.ny_ && dx_ == o.dx_ && dy_ == o.dy_;
}

ComplexField2D::ComplexField2D(Grid grid, double z)
    : grid_(grid), data_(grid.size(), cplx{0.0, 0.0}), z_(z) {}

ComplexField2D::ComplexField2D(Grid grid, FieldBuffer amplitude, double z)
    : grid_(grid), data_(std::move(amplitude)), z_(z) {
  if (data_.size() != grid_.size())
    throw Error(ErrorKind::InvalidArgument, "amplitude size does not match grid");
  for (const auto& v : data_)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw Error(ErrorKind::InvalidArgument, "non-finite field amplitude");
}

std::vector<double> ComplexField2D::intensity() const {
  std::vector<double> out(data_.size());
  std::transform(data_.begin(), data_.end(), out.begin(), [](cplx v) { return std::norm(v); });
  return out;
}

double ComplexField2D::peak_intensity() const {
  double peak = 0.0;
  for (const auto& v : data_) peak = std::max(peak, std::norm(v));
  return peak;
}

double total_power(const ComplexField2D& field) {
  double sum = 0.0;
  for (const auto& v : field.amplitude()) sum += std::norm(v);
  return sum * field.grid().dx() * field.grid().dy();
}

ComplexField2D combine(const ComplexField2D& f1, cplx a, const ComplexField2D& f2, cplx b) {
  if (!f1.grid().same_geometry(f2.grid()))
    throw Error(ErrorKind::GridMismatch, "combine: grids differ");
  FieldBuffer out(f1.grid().size());
  auto s1 = f1.amplitude();
  auto s2 = f2.amplitude();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * s1[i] + b * s2[i];
  return ComplexField2D(f1.grid(), std::move(out), f1.z());
}

double relative_l2(const ComplexField2D& a, const ComplexField2D& b) {
  if (!a.grid().same_geometry(b.grid()))
    throw Error(ErrorKind::GridMismatch, "relative_l2: grids differ");
  double num = 0.0, den = 0.0;
  auto sa = a.amplitude();
  auto sb = b.amplitude();
  for (std::size_t i = 0; i < sa.size(); ++i) {
    num += std::norm(sa[i] - sb[i]);
    den += std::norm(sb[i]);
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

FreeSpacePropagator::FreeSpacePropagator(const Grid& grid, double distance)
    : grid_(grid), distance_(distance), fft_(grid.nx(), grid.ny()), transfer_(grid.size()) {
  const double k = grid.wavenumber();
  const double k2 = k * k;
  const std::size_t nx = grid.nx(), ny = grid.ny();
  for (std::size_t ikx = 0; ikx < nx; ++ikx) {
    const double kx = angular_frequency(ikx, nx, grid.dx());
    for (std::size_t iky = 0; iky < ny; ++iky) {
      const double ky = angular_frequency(iky, ny, grid.dy());
      const double kperp2 = kx * kx + ky * ky;
      cplx h{0.0, 0.0};
      if (kperp2 < k2) {
        // sqrt(k^2 - kp^2) - k written to avoid cancellation for kp << k
        const double dk = -kperp2 / (std::sqrt(k2 - kperp2) + k);
        h = std::polar(1.0, distance * dk);
      }
      transfer_[ikx * ny + iky] = h;
    }
  }
}

void FreeSpacePropagator::apply(FieldBuffer& data) const {
  fft_.forward(data);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] *= transfer_[i];
  fft_.inverse(data);
}

namespace {

double edge_fraction_of_spectrum(const FieldBuffer& spectrum, std::size_t nx, std::size_t ny) {
  const double lim_x = 0.9 * static_cast<double>(nx / 2);
  const double lim_y = 0.9 * static_cast<double>(ny / 2);
  double edge = 0.0, total = 0.0;
  for (std::size_t ikx = 0; ikx < nx; ++ikx) {
    const bool x_edge = std::abs(static_cast<double>(fft_frequency_index(ikx, nx))) > lim_x;
    for (std::size_t iky = 0; iky < ny; ++iky) {
      const double p = std::norm(spectrum[ikx * ny + iky]);
      total += p;
      if (x_edge || std::abs(static_cast<double>(fft_frequency_index(iky, ny))) > lim_y) edge += p;
    }
  }
  return total > 0 ? edge / total : 0.0;
}

void check_aliasing(double fraction, Diagnostics* diag) {
  if (diag && fraction >= kAliasingThreshold) {
    std::ostringstream msg;
    msg << "spectral power fraction " << fraction << " in outermost 10% of frequency window";
    diag->warn(WarningKind::AliasingRisk, msg.str());
  }
}

}  // namespace

ComplexField2D FreeSpacePropagator::operator()(const ComplexField2D& field, Diagnostics* diag) const {
  if (!field.grid().same_geometry(grid_) || field.grid().wavelength() != grid_.wavelength())
    throw Error(ErrorKind::GridMismatch, "propagator built for a different grid");
  FieldBuffer data = field.buffer();
  fft_.forward(data);
  check_aliasing(edge_fraction_of_spectrum(data, grid_.nx(), grid_.ny()), diag);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] *= transfer_[i];
  fft_.inverse(data);
  return ComplexField2D(grid_, std::move(data), field.z() + distance_);
}

double edge_spectral_fraction(const ComplexField2D& field) {
  FieldBuffer data = field.buffer();
  Fft2D(field.grid().nx(), field.grid().ny()).forward(data);
  return edge_fraction_of_spectrum(data, field.grid().nx(), field.grid().ny());
}

ComplexField2D propagate_free(const ComplexField2D& field, double distance, Diagnostics* diag) {
  if (distance == 0.0) return field;
  return FreeSpacePropagator(field.grid(), distance)(field, diag);
}

ComplexField2D apply_lens(const ComplexField2D& field, const LensSpec& lens) {
  if (lens.focal_length == 0.0 || !std::isfinite(lens.focal_length))
    throw Error(ErrorKind::InvalidArgument, "lens focal length must be finite and nonzero");
  const Grid& g = field.grid();
  const double c = -std::numbers::pi / (g.wavelength() * lens.focal_length);
  FieldBuffer out = field.buffer();
  for (std::size_t iy = 0; iy < g.ny(); ++iy) {
    const double y = g.y(iy);
    for (std::size_t ix = 0; ix < g.nx(); ++ix) {
      const double x = g.x(ix);
      out[g.index(ix, iy)] *= std::polar(1.0, c * (x * x + y * y));
    }
  }
  return ComplexField2D(g, std::move(out), field.z());
}

void write_field(const ComplexField2D& field, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  const Grid& g = field.grid();
  os.write("CF2D", 4);
  put_le<std::uint32_t>(os, kFieldFormatVersion);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.nx()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.ny()));
  put_le<double>(os, g.dx());
  put_le<double>(os, g.dy());
  put_le<double>(os, g.wavelength());
  put_le<double>(os, field.z());
  for (const auto& v : field.amplitude()) {
    put_le<double>(os, v.real());
    put_le<double>(os, v.imag());
  }
  if (!os) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

ComplexField2D read_field(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4)) throw Error(ErrorKind::CorruptFile, "truncated field file " + path.string());
  if (std::memcmp(magic, "CF2D", 4) != 0)
    throw Error(ErrorKind::UnsupportedFormat, path.string() + " is not a CF2D container");
  const auto version = get_le<std::uint32_t>(is, path);
  if (version != kFieldFormatVersion)
    throw Error(ErrorKind::UnsupportedFormat, "unsupported CF2D version " + std::to_string(version));
  const auto nx = get_le<std::uint32_t>(is, path);
  const auto ny = get_le<std::uint32_t>(is, path);
  const auto dx = get_le<double>(is, path);
  const auto dy = get_le<double>(is, path);
  const auto wavelength = get_le<double>(is, path);
  const auto z = get_le<double>(is, path);
  Grid grid = [&] {
    try {
      return Grid(nx, ny, dx, dy, wavelength);
    } catch (const Error& e) {
      throw Error(ErrorKind::CorruptFile, std::string("bad CF2D header: ") + e.what());
    }
  }();
  FieldBuffer data(grid.size());
  for (auto& v : data) {
    const double re = get_le<double>(is, path);
    const double im = get_le<double>(is, path);
    v = {re, im};
  }
  try {
    return ComplexField2D(grid, std::move(data), z);
  } catch (const Error& e) {
    throw Error(ErrorKind::CorruptFile, e.what());
  }
}

void write_pgm16(std::span<const double> values, std::size_t nx, std::size_t ny,
                 const std::filesystem::path& path) {
  if (values.size() != nx * ny) throw Error(ErrorKind::InvalidArgument, "pgm size mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  os << "P5\n" << nx << " " << ny << "\n65535\n";
  double peak = 0.0;
  for (double v : values) peak = std::max(peak, v);
  const double scale = peak > 0 ? 65535.0 / peak : 0.0;
  std::vector<char> bytes(2 * values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double q = std::clamp(std::round(std::max(values[i], 0.0) * scale), 0.0, 65535.0);
    const auto s = static_cast<std::uint16_t>(q);
    bytes[2 * i] = static_cast<char>(s >> 8);  // PGM samples are big-endian
    bytes[2 * i + 1] = static_cast<char>(s & 0xFF);
  }
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

void write_intensity_pgm(const ComplexField2D& field, const std::filesystem::path& path) {
  write_pgm16(field.intensity(), field.grid().nx(), field.grid().ny(), path);
}

}  // namespace oamsq
