#include <doctest.h>

#include <cmath>

#include "oamsq/optics.hpp"
#include "support.hpp"

using namespace oamsq;
using testing::kPi;

namespace {

Grid grid512() { return Grid(512, 512, 8e-6, 8e-6, 795e-9); }

// Azimuthal Fourier power of exp(i Phi(phi)) by a plain Riemann sum.
double mask_fraction_oracle(const PhaseMaskSpec& mask, int m) {
  const int n = 200000;
  cplx s = 0;
  for (int j = 0; j < n; ++j) {
    const double phi = 2 * kPi * (j + 0.5) / n;
    s += std::polar(1.0, mask_phase(mask, phi) - m * phi);
  }
  return std::norm(s / double(n));
}

double second_moment_radius(const ComplexField2D& f) {
  const Grid& g = f.grid();
  double num = 0, den = 0;
  for (std::size_t iy = 0; iy < g.ny(); ++iy)
    for (std::size_t ix = 0; ix < g.nx(); ++ix) {
      const double i = f.intensity_at(ix, iy);
      num += i * (g.x(ix) * g.x(ix) + g.y(iy) * g.y(iy));
      den += i;
    }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("beam models carry the requested power") {
  const Grid g = grid512();
  for (auto model : {BeamModel::Gaussian, BeamModel::LG1}) {
    const BeamSpec spec{model, 0.3e-3, 12e-3};
    CHECK(total_power(make_beam(spec, g)) == doctest::Approx(12e-3).epsilon(1e-10));
  }
  CHECK(peak_parameter({BeamModel::Gaussian, 1e-3, 1.0}) == doctest::Approx(2.0 / (kPi * 1e-6)));
  CHECK_THROWS_AS(make_beam({BeamModel::Gaussian, 0.6e-3, 1e-3}, g), Error);
  try {
    make_beam({BeamModel::Gaussian, 0.6e-3, 1e-3}, g);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::GridTooSmall);
  }
  CHECK_THROWS_AS(make_beam({BeamModel::Gaussian, -1.0, 1e-3}, g), Error);
}

TEST_CASE("Gaussian profile values") {
  const Grid g = grid512();
  const BeamSpec spec{BeamModel::Gaussian, 0.3e-3, 5e-3};
  const auto f = make_beam(spec, g);
  const double i0 = 2 * 5e-3 / (kPi * 0.09e-6);
  CHECK(f.intensity_at(256, 256) == doctest::Approx(i0).epsilon(1e-12));
  const double x = g.x(296);
  CHECK(f.intensity_at(296, 256) == doctest::Approx(i0 * std::exp(-2 * x * x / 0.09e-6)).epsilon(1e-12));
}

TEST_CASE("LG1 ring, vortex and phase") {
  const Grid g = grid512();
  const double w = 0.32e-3;
  const auto f = make_beam({BeamModel::LG1, w, 5e-3}, g);
  CHECK(f.intensity_at(256, 256) == 0.0);
  const double i0 = 2 * 5e-3 / (kPi * w * w);
  CHECK(f.peak_intensity() == doctest::Approx(i0 / std::exp(1.0)).epsilon(1e-3));
  std::size_t best = 256;
  for (std::size_t ix = 256; ix < 512; ++ix)
    if (f.intensity_at(ix, 256) > f.intensity_at(best, 256)) best = ix;
  CHECK(std::abs(g.x(best) - w / std::sqrt(2.0)) <= g.dx());
  CHECK(std::arg(f.at(300, 256)) == doctest::Approx(0.0));
  CHECK(std::arg(f.at(256, 300)) == doctest::Approx(kPi / 2));
  CHECK(std::abs(std::arg(f.at(200, 256))) == doctest::Approx(kPi));
}

TEST_CASE("beam curvature and offset") {
  const Grid g = grid512();
  BeamSpec spec{BeamModel::Gaussian, 0.3e-3, 1e-3};
  spec.center_x = 16 * g.dx();
  spec.center_y = -8 * g.dx();
  const auto f = make_beam(spec, g);
  const auto [cx, cy] = intensity_centroid(f);
  CHECK(cx == doctest::Approx(spec.center_x).epsilon(1e-9));
  CHECK(cy == doctest::Approx(spec.center_y).epsilon(1e-9));

  spec.center_x = spec.center_y = 0;
  spec.curvature = 1.0 / 0.7;
  const auto c = make_beam(spec, g);
  const double x = g.x(300), k = g.wavenumber();
  const double want = std::remainder(k * x * x / (2 * 0.7), 2 * kPi);
  CHECK(std::remainder(std::arg(c.at(300, 256)) - want, 2 * kPi) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("mask phase") {
  const PhaseMaskSpec cont{3, kContinuousMask};
  CHECK(mask_phase(cont, 0.5) == doctest::Approx(1.5));
  const PhaseMaskSpec step{1, 8};
  CHECK(mask_phase(step, 0.1) == 0.0);
  CHECK(mask_phase(step, kPi / 4 + 1e-6) == doctest::Approx(kPi / 4));
  CHECK(mask_phase(step, kPi / 4) == doctest::Approx(kPi / 4));  // boundary joins the next sector
  CHECK(mask_phase(step, 2 * kPi - 1e-6) == doctest::Approx(7 * kPi / 4));
  const double neg = mask_phase(step, -0.1);
  CHECK(std::remainder(neg - 7 * kPi / 4, 2 * kPi) == doctest::Approx(0.0));
  const PhaseMaskSpec two{2, 4};
  CHECK(mask_phase(two, kPi + 0.1) == doctest::Approx(2 * kPi));

  const Grid g = grid512();
  const auto f = make_beam({BeamModel::Gaussian, 0.3e-3, 1e-3}, g);
  CHECK_THROWS_AS(apply_phase_mask(f, {1, 1}), Error);
  CHECK_THROWS_AS(apply_phase_mask(f, {1, 8, 1.0, 0.0}), Error);
  const auto m = apply_phase_mask(f, step);
  CHECK(total_power(m) == doctest::Approx(total_power(f)).epsilon(1e-13));
}

TEST_CASE("pure modes have a single harmonic") {
  const Grid g = grid512();
  const auto gs = oam_spectrum(make_beam({BeamModel::Gaussian, 0.3e-3, 1e-3}, g), 8);
  CHECK(gs.fraction(0) > 1 - 1e-8);
  CHECK(std::abs(gs.mean_m) < 1e-8);
  const auto ls = oam_spectrum(make_beam({BeamModel::LG1, 0.3e-3, 1e-3}, g), 8);
  CHECK(ls.fraction(1) > 1 - 1e-8);
  CHECK(ls.mean_m == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(ls.fraction(99) == 0.0);
  CHECK_THROWS_AS(oam_spectrum(make_beam({BeamModel::LG1, 0.3e-3, 1e-3}, g), -1), Error);
}

TEST_CASE("mixture weights come back as fractions") {
  const Grid g = grid512();
  const auto ga = make_beam({BeamModel::Gaussian, 0.3e-3, 1e-3}, g);
  const auto lg = make_beam({BeamModel::LG1, 0.3e-3, 1e-3}, g);
  const auto mix = combine(ga, std::sqrt(0.7), lg, cplx(0, std::sqrt(0.3)));
  const auto s = oam_spectrum(mix, 4);
  CHECK(s.fraction(0) == doctest::Approx(0.7).epsilon(1e-7));
  CHECK(s.fraction(1) == doctest::Approx(0.3).epsilon(1e-7));
  CHECK(s.mean_m == doctest::Approx(0.3).epsilon(1e-7));
  double total = s.out_of_band;
  for (double v : s.fractions) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("stepped mask spectrum agrees with a direct azimuthal sum") {
  const Grid g = grid512();
  const PhaseMaskSpec mask{1, 8};
  const auto f = apply_phase_mask(make_beam({BeamModel::Gaussian, 0.45e-3, 1e-3}, g), mask);
  const auto s = oam_spectrum(f, 16);
  for (int m : {1, -7, 9, 0, 2}) CHECK(std::abs(s.fraction(m) - mask_fraction_oracle(mask, m)) < 4e-3);
  const double sinc = std::sin(kPi / 8) / (kPi / 8);
  CHECK(mask_fraction_oracle(mask, 1) == doctest::Approx(sinc * sinc).epsilon(1e-6));
}

TEST_CASE("translation and recentering") {
  const Grid g = grid512();
  const auto f = make_beam({BeamModel::LG1, 0.3e-3, 1e-3}, g);
  const auto t = translate(f, 5.5 * g.dx(), -3.25 * g.dx());
  const auto [cx, cy] = intensity_centroid(t);
  CHECK(cx == doctest::Approx(5.5 * g.dx()).epsilon(1e-8));
  CHECK(cy == doctest::Approx(-3.25 * g.dx()).epsilon(1e-8));
  CHECK(total_power(t) == doctest::Approx(total_power(f)).epsilon(1e-12));
  const auto back = recenter_on_centroid(t);
  CHECK(relative_l2(back, f) < 1e-8);
}

TEST_CASE("magnify scales the beam and keeps power") {
  const Grid g = grid512();
  const auto f = make_beam({BeamModel::Gaussian, 0.25e-3, 1e-3}, g);
  const auto m = magnify(f, 1.5);
  CHECK(total_power(m) == doctest::Approx(total_power(f)).epsilon(1e-6));
  CHECK(second_moment_radius(m) == doctest::Approx(1.5 * second_moment_radius(f)).epsilon(1e-6));
  const auto want = make_beam({BeamModel::Gaussian, 0.375e-3, 1e-3}, g);
  CHECK(relative_l2(m, want) < 1e-6);
  CHECK_THROWS_AS(magnify(f, 0.0), Error);
}

TEST_CASE("Gaussian beam helpers") {
  CHECK(fwhm_to_waist(1.0) == doctest::Approx(0.8493218));
  CHECK(rayleigh_range(1e-3, 1e-6) == doctest::Approx(kPi));
  // Collimated input at the lens: textbook waist position and size.
  const double w = 1e-3, lam = 800e-9, f = 0.3;
  const double zr = kPi * w * w / lam;
  const auto out = focus_through_lens(w, 0.0, lam, f);
  CHECK(out.distance == doctest::Approx(f / (1 + (f / zr) * (f / zr))));
  CHECK(out.waist == doctest::Approx(w / std::sqrt(1 + (zr / f) * (zr / f))));
  const double wc = collimated_waist_for_focus(out.waist, lam, f);
  CHECK(wc == doctest::Approx(w).epsilon(1e-9));
  CHECK_THROWS_AS(collimated_waist_for_focus(1e-3, lam, 0.01), Error);
}

TEST_CASE("beam model names") {
  CHECK(parse_beam_model("lg1") == BeamModel::LG1);
  CHECK(to_string(BeamModel::Gaussian) == "gaussian");
  CHECK_THROWS_AS(parse_beam_model("tophat"), Error);
}

TEST_CASE("OAM CSV") {
  testing::TempDir dir("oam");
  OamSpectrum s;
  s.max_m = 1;
  s.fractions = {0.25, 0.5, 0.25};
  write_oam_csv(s, dir / "o.csv");
  CHECK(testing::slurp(dir / "o.csv") == "m,fraction\n-1,0.25\n0,0.5\n1,0.25\n");
}
