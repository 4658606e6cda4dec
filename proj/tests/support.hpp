#pragma once

#include <complex>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "oamsq/field.hpp"

namespace testing {

inline constexpr double kPi = 3.14159265358979323846;

// Fresh scratch directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("oamsq_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
}

// Paraxial Gaussian written directly from its complex beam parameter:
// E = amp * (q_ref / q) exp(i k r^2 / (2 q)), with q = q_ref + z.
inline oamsq::ComplexField2D gaussian_from_q(const oamsq::Grid& g, std::complex<double> q_ref, double z,
                                             double amp = 1.0) {
  const double k = 2 * kPi / g.wavelength();
  const std::complex<double> q = q_ref + z;
  const std::complex<double> i(0, 1);
  oamsq::FieldBuffer buf(g.size());
  for (std::size_t iy = 0; iy < g.ny(); ++iy)
    for (std::size_t ix = 0; ix < g.nx(); ++ix) {
      const double r2 = g.x(ix) * g.x(ix) + g.y(iy) * g.y(iy);
      buf[g.index(ix, iy)] = amp * (q_ref / q) * std::exp(i * k * r2 / (2.0 * q));
    }
  return oamsq::ComplexField2D(g, std::move(buf), z);
}

// q at a waist: 1/q = i lambda / (pi w^2).
inline std::complex<double> waist_q(double w, double wavelength) {
  return {0.0, -kPi * w * w / wavelength};
}

}  // namespace testing
