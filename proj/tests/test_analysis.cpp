#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oamsq/analysis.hpp"
#include "support.hpp"

using namespace oamsq;

namespace {

IntensityImage synthetic(BeamModel model, const ProfileParams& p, std::size_t n, double pitch) {
  IntensityImage img;
  img.nx = img.ny = n;
  img.pitch = pitch;
  img.values.resize(n * n);
  for (std::size_t iy = 0; iy < n; ++iy)
    for (std::size_t ix = 0; ix < n; ++ix) img.values[iy * n + ix] = profile_value(model, p, img.x(ix), img.y(iy));
  return img;
}

void add_noise(IntensityImage& img, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  for (double& v : img.values) v += n(rng);
}

}  // namespace

TEST_CASE("profile values") {
  const ProfileParams p{3.0, 2.0, 0.5, -1.0};
  CHECK(profile_value(BeamModel::Gaussian, p, 0.5, -1.0) == 3.0);
  CHECK(profile_value(BeamModel::Gaussian, p, 2.5, -1.0) == doctest::Approx(3.0 * std::exp(-2.0)));
  CHECK(profile_value(BeamModel::LG1, p, 0.5, -1.0) == 0.0);
  const double r = 2.0 / std::sqrt(2.0);
  CHECK(profile_value(BeamModel::LG1, p, 0.5 + r, -1.0) == doctest::Approx(3.0 / std::exp(1.0)));
}

TEST_CASE("analytic jacobians match central differences") {
  const ProfileParams p{1.7, 0.8, 0.1, -0.2};
  for (auto model : {BeamModel::Gaussian, BeamModel::LG1})
    for (auto [x, y] : {std::pair{0.3, 0.1}, std::pair{-0.5, 0.6}, std::pair{1.1, -0.9}, std::pair{0.05, -0.25}}) {
      const auto j = profile_jacobian(model, p, x, y);
      for (int k = 0; k < 4; ++k) {
        const double h = 1e-5 * std::max(1.0, std::abs(p[k]));
        ProfileParams a = p, b = p;
        a[k] += h;
        b[k] -= h;
        const double fd = (profile_value(model, a, x, y) - profile_value(model, b, x, y)) / (2 * h);
        const double scale = std::max(std::abs(fd), 1e-3);
        CHECK(std::abs(j[k] - fd) / scale < 1e-6);
      }
    }
}

TEST_CASE("noiseless images are recovered") {
  const double pitch = 5e-6;
  for (auto model : {BeamModel::Gaussian, BeamModel::LG1}) {
    const ProfileParams truth{2.5e4, 60e-6, 7.3e-6, -4.1e-6};
    const auto fit = fit_profile(synthetic(model, truth, 128, pitch), model);
    CHECK(fit.converged);
    CHECK(fit.model == model);
    CHECK(std::abs(fit.w / truth[1] - 1) < 1e-6);
    CHECK(std::abs(fit.I0 / truth[0] - 1) < 1e-6);
    CHECK(std::abs(fit.x0 - truth[2]) < 1e-6 * truth[1]);
    CHECK(std::abs(fit.y0 - truth[3]) < 1e-6 * truth[1]);
    CHECK(fit.residual < 1e-8);
  }
}

TEST_CASE("one percent noise keeps the waist within two percent") {
  const ProfileParams truth{1.0, 40e-6, 0.0, 0.0};
  int bad = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto img = synthetic(BeamModel::Gaussian, truth, 96, 4e-6);
    add_noise(img, 0.01, seed);
    const auto fit = fit_profile(img, BeamModel::Gaussian);
    if (!fit.converged || std::abs(fit.w / truth[1] - 1) > 0.02) ++bad;
  }
  CHECK(bad == 0);
}

TEST_CASE("degenerate images are rejected") {
  IntensityImage img;
  img.nx = img.ny = 32;
  img.pitch = 1e-6;
  img.values.assign(32 * 32, 0.0);
  CHECK_THROWS_AS(fit_profile(img, BeamModel::Gaussian), Error);
  img.values[100] = 1.0;
  try {
    fit_profile(img, BeamModel::Gaussian);
    FAIL("single hot pixel accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateImage);
  }
  img.values.resize(10);
  CHECK_THROWS_AS(img.validate(), Error);
}

TEST_CASE("waist ratio") {
  FitResult a, b;
  a.w = 3;
  b.w = 2;
  a.converged = b.converged = true;
  CHECK(waist_ratio(a, b) == 1.5);
  b.model = BeamModel::LG1;
  try {
    waist_ratio(a, b);
    FAIL("mixed models accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ModelMismatch);
  }
  b.model = a.model;
  b.converged = false;
  try {
    waist_ratio(a, b);
    FAIL("unconverged fit accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotConverged);
  }
}

TEST_CASE("images from fields keep grid coordinates") {
  const Grid g(128, 128, 10e-6, 10e-6, 795e-9);
  BeamSpec spec{BeamModel::Gaussian, 0.12e-3, 2e-3};
  spec.center_x = 30e-6;
  const auto img = image_from_field(make_beam(spec, g));
  const auto fit = fit_profile(img, BeamModel::Gaussian);
  CHECK(fit.w == doctest::Approx(0.12e-3).epsilon(1e-6));
  CHECK(fit.x0 == doctest::Approx(30e-6).epsilon(1e-6));
  CHECK(fit.I0 == doctest::Approx(peak_parameter(spec)).epsilon(1e-6));
  CHECK_THROWS_AS(image_from_field(ComplexField2D(Grid(16, 16, 1e-6, 2e-6, 1e-6))), Error);
}

TEST_CASE("PGM ingestion") {
  testing::TempDir dir("pgm_in");
  // 8-bit with a comment line and a constant pedestal of 10
  std::string raster;
  for (int i = 0; i < 20 * 20; ++i) raster.push_back(static_cast<char>(10 + (i == 210 ? 100 : 0)));
  testing::spit(dir / "a.pgm", "P5\n# camera frame\n20 20\n255\n" + raster);
  const auto img = ingest_image(dir / "a.pgm", 3e-6);
  CHECK(img.nx == 20);
  CHECK(img.ny == 20);
  CHECK(img.pitch == 3e-6);
  CHECK(img.background == 10.0);
  CHECK(img.values[210] == 100.0);
  CHECK(img.values[0] == 0.0);

  // 16-bit, big-endian samples
  std::string r16;
  for (int i = 0; i < 16 * 16; ++i) {
    const int v = i == 0 ? 40000 : 0;
    r16.push_back(static_cast<char>(v >> 8));
    r16.push_back(static_cast<char>(v & 0xFF));
  }
  testing::spit(dir / "b.pgm", "P5 16 16 65535\n" + r16);
  CHECK(ingest_image(dir / "b.pgm", 1e-6).values[0] == 40000.0);

  testing::spit(dir / "c.pgm", "P5\n16 16\n65535\n" + r16.substr(0, 100));
  try {
    ingest_image(dir / "c.pgm", 1e-6);
    FAIL("truncated raster accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CorruptFile);
  }
  testing::spit(dir / "d.pgm", "P5\nabc\n");
  CHECK_THROWS_AS(ingest_image(dir / "d.pgm", 1e-6), Error);
  CHECK_THROWS_AS(ingest_image(dir / "a.pgm", 0.0), Error);
}

TEST_CASE("CSV ingestion") {
  testing::TempDir dir("csv_in");
  testing::spit(dir / "a.csv", "c0,c1,c2\n1,2,3\n4, 5 ,6\n\n");
  const auto img = ingest_image(dir / "a.csv", 1e-6);
  CHECK(img.nx == 3);
  CHECK(img.ny == 2);
  CHECK(img.background == 1.0);
  CHECK(img.at(2, 1) == 5.0);
  testing::spit(dir / "b.txt", "1,2\n3\n");
  try {
    ingest_image(dir / "b.txt", 1e-6);
    FAIL("ragged matrix accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CorruptFile);
  }
  testing::spit(dir / "c.csv", "1,2\nx,y\n");
  CHECK_THROWS_AS(ingest_image(dir / "c.csv", 1e-6), Error);
  testing::spit(dir / "d.csv", "1,-2\n3,4\n");
  CHECK_THROWS_AS(ingest_image(dir / "d.csv", 1e-6), Error);
  testing::spit(dir / "e.png", "\x89PNG....");
  try {
    ingest_image(dir / "e.png", 1e-6);
    FAIL("png accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnsupportedFormat);
  }
  try {
    ingest_image(dir / "missing.csv", 1e-6);
    FAIL("missing file accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IoError);
  }
}

TEST_CASE("render and re-ingest round trip") {
  testing::TempDir dir("render");
  const ProfileParams truth{1.0, 50e-6, -8e-6, 12e-6};
  const auto img = synthetic(BeamModel::LG1, truth, 128, 4e-6);
  render_image(img, dir / "r.pgm");
  const auto back = ingest_image(dir / "r.pgm", 4e-6);
  const auto fit = fit_profile(back, BeamModel::LG1);
  CHECK(fit.converged);
  CHECK(fit.w == doctest::Approx(50e-6).epsilon(1e-4));
  CHECK(fit.x0 == doctest::Approx(-8e-6).epsilon(1e-3));
}

TEST_CASE("fit CSV") {
  FitResult f;
  f.model = BeamModel::LG1;
  f.w = 1.5e-3;
  f.I0 = 2;
  f.converged = true;
  std::ostringstream os;
  write_fit_csv_header(os);
  write_fit_csv_row(os, f);
  CHECK(os.str() == "model,w_m,I0,x0_m,y0_m,residual,converged\nlg1,0.0015,2,0,0,0,1\n");
}
