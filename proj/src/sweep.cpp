#include "oamsq/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>

#include "oamsq/worker_pool.hpp"

namespace oamsq {

void OpticalTrain::validate(double cell_length) const {
  std::size_t cells = 0, cameras = 0;
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const auto& e = elements[i];
    if (i > 0 && e.z < elements[i - 1].z) throw Error(ErrorKind::ConfigInvalid, "train elements out of order");
    if (e.kind == TrainElement::Kind::Cell) {
      ++cells;
      if (i > 0 && e.z - 0.5 * cell_length < elements[i - 1].z)
        throw Error(ErrorKind::ConfigInvalid, "cell overlaps the preceding element");
      if (i + 1 < elements.size() && e.z + 0.5 * cell_length > elements[i + 1].z)
        throw Error(ErrorKind::ConfigInvalid, "cell overlaps the following element");
    }
    if (e.kind == TrainElement::Kind::Camera) {
      ++cameras;
      if (i + 1 != elements.size()) throw Error(ErrorKind::ConfigInvalid, "camera must be the last element");
    }
    if (e.kind == TrainElement::Kind::Lens && (e.focal_length == 0.0 || !std::isfinite(e.focal_length)))
      throw Error(ErrorKind::ConfigInvalid, "lens focal length must be finite and nonzero");
  }
  if (cells != 1 || cameras != 1)
    throw Error(ErrorKind::ConfigInvalid, "train needs exactly one cell and one camera plane");
}

OpticalTrain build_train(const TrainSpec& spec, const BeamSpec& source, double wavelength, double cell_length,
                         double displacement) {
  const FocusedBeam focus = focus_through_lens(source.waist, source.curvature, wavelength, spec.lens1_focal);
  OpticalTrain t;
  t.focus_z = focus.distance;
  const double lens2 = focus.distance + spec.lens2_after_focus;
  t.elements = {{TrainElement::Kind::Lens, 0.0, spec.lens1_focal},
                {TrainElement::Kind::Cell, focus.distance + displacement, 0.0},
                {TrainElement::Kind::Lens, lens2, spec.lens2_focal},
                {TrainElement::Kind::Camera, lens2 + spec.camera_after_lens2, 0.0}};
  std::stable_sort(t.elements.begin(), t.elements.end(),
                   [](const TrainElement& a, const TrainElement& b) { return a.z < b.z; });
  t.validate(cell_length);
  return t;
}

BeamModel SweepConfig::fit_model() const {
  if (pump.model == BeamModel::LG1) return BeamModel::LG1;
  if (mask && std::abs(mask->charge) == 1) return BeamModel::LG1;
  return BeamModel::Gaussian;
}

void SweepConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorKind::ConfigInvalid, m); };
  if (workers < 1) bad("workers must be >= 1");
  if (medium_steps < 1) bad("medium steps must be >= 1");
  if (!(pump.waist > 0)) bad("pump waist must be > 0");
  if (!(mode_mismatch_kappa >= 0) || !std::isfinite(mode_mismatch_kappa)) bad("kappa must be >= 0");
  if (!(camera_noise >= 0)) bad("camera noise must be >= 0");
  for (double p : powers)
    if (!(p >= 0) || !std::isfinite(p)) bad("sweep powers must be finite and >= 0");
  for (double d : densities)
    if (!(d >= 0) || !std::isfinite(d)) bad("sweep densities must be finite and >= 0");
  for (double d : displacements)
    if (!std::isfinite(d)) bad("sweep displacements must be finite");
  if (!std::isfinite(displacement)) bad("cell displacement must be finite");
  if (mask && mask->sectors != kContinuousMask && mask->sectors < 2) bad("stepped mask needs >= 2 sectors");
  try {
    noise.validate();
    MediumSpec m = medium;
    m.validate();
  } catch (const Error& e) {
    bad(e.message());
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

int steps_for(const MediumSpec& m, int requested) {
  const double total_phase = std::abs(m.detuning) * m.density_per_m3() * m.cross_section * m.cell_length /
                             m.lorentzian();
  const int needed = static_cast<int>(std::ceil(total_phase / (0.98 * kMaxScreenPhase)));
  return std::max(requested, needed);
}

struct Entrance {
  ComplexField2D field;
  OpticalTrain train;
  std::size_t cell_pos = 0;
  MediumSpec medium;
};

Entrance to_cell_entrance(const SweepConfig& config, double power, double density, double displacement,
                          Diagnostics* diag) {
  BeamSpec pump = config.pump;
  pump.power = power;
  ComplexField2D f = make_beam(pump, config.grid, 0.0);
  if (config.mask) f = apply_phase_mask(f, *config.mask);
  OpticalTrain train =
      build_train(config.train, pump, config.grid.wavelength(), config.medium.cell_length, displacement);
  std::size_t cell_pos = 0;
  for (std::size_t i = 0; i < train.elements.size(); ++i) {
    const auto& e = train.elements[i];
    if (e.kind == TrainElement::Kind::Cell) {
      f = propagate_free(f, e.z - 0.5 * config.medium.cell_length - f.z(), diag);
      cell_pos = i;
      break;
    }
    f = propagate_free(f, e.z - f.z(), diag);
    if (e.kind == TrainElement::Kind::Lens) f = apply_lens(f, LensSpec{e.focal_length});
  }
  MediumSpec medium = config.medium;
  medium.density_per_cm3 = density;
  medium.cell_center_z = train.elements[cell_pos].z;
  return {std::move(f), std::move(train), cell_pos, medium};
}

struct Traversal {
  ComplexField2D camera;
  GainFeatures gain;
};

// From the cell entrance to the camera.
ComplexField2D to_camera(ComplexField2D f, const OpticalTrain& train, std::size_t cell_pos, Diagnostics* diag) {
  for (std::size_t i = cell_pos + 1; i < train.elements.size(); ++i) {
    const auto& e = train.elements[i];
    f = propagate_free(f, e.z - f.z(), diag);
    if (e.kind == TrainElement::Kind::Lens) f = apply_lens(f, LensSpec{e.focal_length});
  }
  return f;
}

Traversal through_cell(const ComplexField2D& entrance, const OpticalTrain& train, std::size_t cell_pos,
                       const MediumSpec& medium, int steps) {
  PumpEvolution evolution;
  ComplexField2D f = propagate_medium(entrance, medium, steps, evolution);
  GainFeatures gain = gain_features(evolution);
  return {to_camera(std::move(f), train, cell_pos, nullptr), gain};
}

IntensityImage camera_image(const ComplexField2D& camera, const SweepConfig& config, std::uint64_t cell_index,
                            std::size_t variant) {
  IntensityImage img = image_from_field(camera);
  if (config.camera_noise > 0) {
    std::mt19937_64 rng(splitmix64(config.seed ^ splitmix64(cell_index * 8 + variant)));
    std::normal_distribution<double> gauss(0.0, config.camera_noise * img.peak());
    for (double& v : img.values) v = std::max(0.0, v + gauss(rng));
  }
  return img;
}

}  // namespace

SweepCell run_cell(const SweepConfig& config, double power, double density, double displacement,
                   double linear_waist, std::uint64_t cell_index) {
  SweepCell cell;
  cell.power = power;
  cell.density = density;
  cell.displacement = displacement;
  try {
    Entrance in = to_cell_entrance(config, power, density, displacement, nullptr);
    const OpticalTrain& train = in.train;
    const std::size_t cell_pos = in.cell_pos;
    const ComplexField2D& f = in.field;
    const MediumSpec& medium = in.medium;

    std::vector<double> factors{1.0};
    if (config.detuning_scan) factors.assign(std::begin(kDetuningScan), std::end(kDetuningScan));
    for (std::size_t v = 0; v < factors.size(); ++v) {
      MediumSpec m = medium;
      m.detuning = medium.detuning * factors[v];
      const int steps = config.detuning_scan ? steps_for(m, config.medium_steps) : config.medium_steps;
      Traversal t = through_cell(f, train, cell_pos, m, steps);
      CellVariant var;
      var.detuning = m.detuning;
      var.gain = t.gain;
      const IntensityImage img = camera_image(t.camera, config, cell_index, v);
      if (!config.snapshot_dir.empty() && factors[v] == 1.0) {
        std::ostringstream name;
        name << "camera_" << cell_index << ".pgm";
        render_image(img, config.snapshot_dir / name.str());
      }
      var.fit = fit_profile(img, config.fit_model());
      if (config.mode_mismatch_kappa > 0 && linear_waist > 0) {
        const double expansion = var.fit.w / linear_waist - 1.0;
        const double m_sq = std::max(0.1, 1.0 + config.mode_mismatch_kappa * expansion);
        var.eta_mode = mode_overlap(t.camera, magnify(t.camera, m_sq));
      }
      cell.variants.push_back(std::move(var));
    }
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
    cell.variants.clear();
  }
  return cell;
}

CameraRun simulate_to_camera(const SweepConfig& config, double power, double density, double displacement,
                             Diagnostics* diag) {
  config.validate();
  Entrance in = to_cell_entrance(config, power, density, displacement, diag);
  PumpEvolution evolution;
  ComplexField2D f = propagate_medium(in.field, in.medium, config.medium_steps, evolution, diag);
  return {to_camera(std::move(f), in.train, in.cell_pos, diag), std::move(evolution), std::move(in.train)};
}

double linear_camera_waist(const SweepConfig& config, double displacement) {
  SweepConfig lin = config;
  lin.camera_noise = 0.0;
  lin.mode_mismatch_kappa = 0.0;
  lin.detuning_scan = false;
  lin.snapshot_dir.clear();
  const double power = config.powers.empty() ? 1e-3 : std::max(config.powers.back(), 1e-6);
  SweepCell c = run_cell(lin, power, 0.0, displacement, 0.0, 0);
  if (!c.ok) throw Error(ErrorKind::NotConverged, "linear reference failed: " + c.error);
  return c.fit().w;
}

NoiseResult evaluate_cell(const SweepCell& cell, const NoiseModelParams& params, std::size_t* chosen) {
  NoiseResult best;
  best.min_quadrature_dB = std::numeric_limits<double>::quiet_NaN();
  if (!cell.ok) return best;
  for (std::size_t v = 0; v < cell.variants.size(); ++v) {
    const auto& var = cell.variants[v];
    const SqueezeGain g = squeeze_gain(var.gain, params);
    NoiseResult r = measured_noise(g.r, g.excess, var.eta_mode, g.transmission, params);
    if (v == 0 || r.min_quadrature_dB < best.min_quadrature_dB) {
      best = r;
      if (chosen) *chosen = v;
    }
  }
  return best;
}

void apply_noise_model(SweepGrid& grid, const NoiseModelParams& params) {
  for (auto& c : grid.cells) c.noise = evaluate_cell(c, params, &c.chosen);
}

std::size_t SweepGrid::failed() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const SweepCell& c) { return !c.ok; }));
}

std::pair<std::size_t, std::size_t> SweepGrid::argmin() const {
  std::size_t best = cells.size();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!cells[i].ok || !std::isfinite(cells[i].noise.min_quadrature_dB)) continue;
    if (best == cells.size() || cells[i].noise.min_quadrature_dB < cells[best].noise.min_quadrature_dB) best = i;
  }
  if (best == cells.size()) throw Error(ErrorKind::NotConverged, "sweep has no successful cells");
  return {best / cols.size(), best % cols.size()};
}

namespace {

void fill_waist_ratio(SweepCell& cell, const SweepCell* reference, double linear_waist) {
  cell.waist_ratio = std::numeric_limits<double>::quiet_NaN();
  if (!cell.ok) return;
  try {
    if (reference) {
      if (reference->ok) cell.waist_ratio = waist_ratio(cell.fit(), reference->fit());
    } else if (linear_waist > 0 && cell.fit().converged) {
      cell.waist_ratio = cell.fit().w / linear_waist;
    }
  } catch (const Error&) {
    // ratio stays NaN; the cell itself is still valid
  }
}

void run_grid(SweepGrid& grid, const SweepConfig& config, const std::function<SweepCell(std::size_t)>& body,
              const ProgressCallback& progress) {
  const std::size_t n = grid.rows.size() * grid.cols.size();
  grid.cells.assign(n, SweepCell{});
  std::mutex progress_mutex;
  std::size_t done = 0;
  WorkerPool(config.workers).run(n, [&](std::size_t i) {
    grid.cells[i] = body(i);
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(++done, n);
    }
  });
  grid.timestamp = utc_timestamp();
}

void ensure_snapshot_dir(const SweepConfig& config) {
  if (config.snapshot_dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(config.snapshot_dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + config.snapshot_dir.string());
}

}  // namespace

SweepGrid run_power_density_sweep(const SweepConfig& config, const ProgressCallback& progress) {
  config.validate();
  if (config.powers.empty() || config.densities.empty())
    throw Error(ErrorKind::ConfigInvalid, "power-density sweep needs non-empty power and density lists");
  ensure_snapshot_dir(config);
  const double displacement = config.displacement;
  const double w_lin = config.mode_mismatch_kappa > 0 ? linear_camera_waist(config, displacement) : 0.0;
  SweepGrid grid;
  grid.kind = SweepGrid::Kind::PowerDensity;
  grid.rows = config.powers;
  grid.cols = config.densities;
  run_grid(grid, config, [&](std::size_t i) {
    return run_cell(config, grid.rows[i / grid.cols.size()], grid.cols[i % grid.cols.size()], displacement, w_lin, i);
  }, progress);
  apply_noise_model(grid, config.noise);
  // Reference column: the lowest density at the same power.
  const auto ref_col = static_cast<std::size_t>(
      std::min_element(grid.cols.begin(), grid.cols.end()) - grid.cols.begin());
  for (std::size_t r = 0; r < grid.rows.size(); ++r)
    for (std::size_t c = 0; c < grid.cols.size(); ++c)
      fill_waist_ratio(grid.cells[r * grid.cols.size() + c], &grid.at(r, ref_col), 0.0);
  return grid;
}

SweepGrid run_displacement_sweep(const SweepConfig& config, const ProgressCallback& progress) {
  config.validate();
  if (config.powers.empty() || config.displacements.empty())
    throw Error(ErrorKind::ConfigInvalid, "displacement sweep needs non-empty power and displacement lists");
  ensure_snapshot_dir(config);
  std::vector<double> w_lin(config.displacements.size());
  for (std::size_t d = 0; d < w_lin.size(); ++d) w_lin[d] = linear_camera_waist(config, config.displacements[d]);
  SweepGrid grid;
  grid.kind = SweepGrid::Kind::Displacement;
  grid.rows = config.displacements;
  grid.cols = config.powers;
  const double density = config.medium.density_per_cm3;
  run_grid(grid, config, [&](std::size_t i) {
    const std::size_t r = i / grid.cols.size();
    return run_cell(config, grid.cols[i % grid.cols.size()], density, grid.rows[r], w_lin[r], i);
  }, progress);
  apply_noise_model(grid, config.noise);
  for (std::size_t i = 0; i < grid.cells.size(); ++i)
    fill_waist_ratio(grid.cells[i], nullptr, w_lin[i / grid.cols.size()]);
  return grid;
}

void write_sweep_csv(const SweepGrid& grid, std::ostream& os) {
  os << "power_mW,density_per_cm3,displacement_cm,min_dB,r,eta,T,waist_ratio\n";
  char buf[512];
  for (const auto& c : grid.cells) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const NoiseResult& n = c.noise;
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", c.power * 1e3, c.density,
                  c.displacement * 1e2, c.ok ? n.min_quadrature_dB : nan, c.ok ? n.squeeze_parameter : nan,
                  c.ok ? n.efficiency : nan, c.ok ? n.transmission : nan, c.ok ? c.waist_ratio : nan);
    os << buf;
  }
}

void write_sweep_csv(const SweepGrid& grid, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  write_sweep_csv(grid, os);
  if (!os) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

void write_error_log(const SweepGrid& grid, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  os << "row,col,power_mW,density_per_cm3,displacement_cm,error\n";
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    const auto& c = grid.cells[i];
    if (c.ok) continue;
    std::string msg = c.error;
    std::replace(msg.begin(), msg.end(), '"', '\'');
    os << i / grid.cols.size() << ',' << i % grid.cols.size() << ',' << c.power * 1e3 << ',' << c.density << ','
       << c.displacement * 1e2 << ",\"" << msg << "\"\n";
  }
}

void write_provenance(const SweepGrid& grid, const std::string& config_text, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(config_text)));
  os << "# config_hash_fnv1a64 = " << hash << "\n";
  os << "# timestamp_utc = " << grid.timestamp << "\n";
  os << "# cells = " << grid.cells.size() << ", failed = " << grid.failed() << "\n";
  os << config_text;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace oamsq
