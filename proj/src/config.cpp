#include "oamsq/config.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace oamsq {

RunConfig::RunConfig()
    : powers_mw{2, 4, 6, 8, 10.5, 13, 16, 19, 22},
      densities_per_cm3{0.34e12, 0.8e12, 1.3e12, 1.8e12, 2.25e12, 2.7e12, 3.4e12, 4.5e12, 6.0e12},
      displacements_cm{-6, -4, -2, 0, 2, 4, 6},
      sections_present(config_sections().begin(), config_sections().end()) {}

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorKind::ConfigInvalid, msg); }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& text, const std::string& name) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
    invalid(name + ": expected a finite number, got '" + t + "'");
  return v;
}

long long parse_integer(const std::string& text, const std::string& name) {
  const std::string t = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) invalid(name + ": expected an integer, got '" + t + "'");
  return v;
}

bool parse_bool(const std::string& text, const std::string& name) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  invalid(name + ": expected true or false, got '" + t + "'");
}

std::vector<double> parse_list(const std::string& text, const std::string& name) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item, name));
  if (out.empty()) invalid(name + ": list must not be empty");
  return out;
}

struct Range {
  double lo, hi;
  bool lo_open = false;
};

void check_range(double v, const Range& r, const std::string& name) {
  if (v < r.lo || (r.lo_open && v == r.lo) || v > r.hi) {
    std::ostringstream msg;
    msg << name << " = " << format_double(v) << " outside " << (r.lo_open ? "(" : "[") << format_double(r.lo)
        << ", " << format_double(r.hi) << "]";
    invalid(msg.str());
  }
}

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr Range kAny{-kInf, kInf};
constexpr Range kNonNeg{0.0, kInf};
constexpr Range kPositive{0.0, kInf, true};

ConfigKey number(std::string sec, std::string key, std::string desc, double RunConfig::*m, Range r) {
  const std::string name = sec + "." + key;
  return {sec, key, std::move(desc), [m](const RunConfig& c) { return format_double(c.*m); },
          [m, r, name](RunConfig& c, const std::string& v) {
            const double x = parse_double(v, name);
            check_range(x, r, name);
            c.*m = x;
          }};
}

ConfigKey integer(std::string sec, std::string key, std::string desc, int RunConfig::*m, long long lo, long long hi) {
  const std::string name = sec + "." + key;
  return {sec, key, std::move(desc), [m](const RunConfig& c) { return std::to_string(c.*m); },
          [m, lo, hi, name](RunConfig& c, const std::string& v) {
            const long long x = parse_integer(v, name);
            if (x < lo || x > hi)
              invalid(name + " = " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
            c.*m = static_cast<int>(x);
          }};
}

ConfigKey boolean(std::string sec, std::string key, std::string desc, bool RunConfig::*m) {
  const std::string name = sec + "." + key;
  return {sec, key, std::move(desc), [m](const RunConfig& c) { return std::string(c.*m ? "true" : "false"); },
          [m, name](RunConfig& c, const std::string& v) { c.*m = parse_bool(v, name); }};
}

ConfigKey list(std::string sec, std::string key, std::string desc, std::vector<double> RunConfig::*m, Range r) {
  const std::string name = sec + "." + key;
  return {sec, key, std::move(desc),
          [m](const RunConfig& c) {
            std::string out;
            for (std::size_t i = 0; i < (c.*m).size(); ++i) out += (i ? ", " : "") + format_double((c.*m)[i]);
            return out;
          },
          [m, r, name](RunConfig& c, const std::string& v) {
            auto xs = parse_list(v, name);
            for (double x : xs) check_range(x, r, name);
            c.*m = std::move(xs);
          }};
}

std::vector<ConfigKey> build_keys() {
  std::vector<ConfigKey> k;
  k.push_back(integer("grid", "n", "samples per side (power of two, >= 16)", &RunConfig::grid_n, 16, 1 << 14));
  k.push_back(number("grid", "window_factor", "window width in collimated-beam FWHMs", &RunConfig::window_factor,
                     kPositive));
  k.push_back(number("grid", "wavelength_nm", "vacuum wavelength", &RunConfig::wavelength_nm, kPositive));

  k.push_back({"beam", "model", "pump profile: gaussian or lg1",
               [](const RunConfig& c) { return c.beam_model; },
               [](RunConfig& c, const std::string& v) {
                 const std::string t = trim(v);
                 if (t != "gaussian" && t != "lg1") invalid("beam.model must be gaussian or lg1, got '" + t + "'");
                 c.beam_model = t;
               }});
  k.push_back(number("beam", "power_mw", "pump power", &RunConfig::power_mw, kNonNeg));
  k.push_back(number("beam", "focus_fwhm_mm", "intensity FWHM at the lens-1 focus", &RunConfig::focus_fwhm_mm,
                     kPositive));
  k.push_back(number("beam", "center_x_mm", "pump center offset", &RunConfig::center_x_mm, kAny));
  k.push_back(number("beam", "center_y_mm", "pump center offset", &RunConfig::center_y_mm, kAny));

  k.push_back(boolean("mask", "enabled", "insert the spiral phase mask before lens 1", &RunConfig::mask_enabled));
  k.push_back(integer("mask", "charge", "total phase winding l", &RunConfig::mask_charge, -64, 64));
  k.push_back(integer("mask", "sectors", "number of phase steps (0 = continuous)", &RunConfig::mask_sectors, 0, 4096));
  k.push_back(number("mask", "center_x_mm", "mask center offset", &RunConfig::mask_center_x_mm, kAny));
  k.push_back(number("mask", "center_y_mm", "mask center offset", &RunConfig::mask_center_y_mm, kAny));

  k.push_back(number("train", "lens1_focal_cm", "focusing lens", &RunConfig::lens1_focal_cm, kPositive));
  k.push_back(number("train", "lens2_focal_cm", "recollimating lens", &RunConfig::lens2_focal_cm, kPositive));
  k.push_back(number("train", "lens2_after_focus_cm", "lens 2 distance past the focus",
                     &RunConfig::lens2_after_focus_cm, kPositive));
  k.push_back(number("train", "camera_after_lens2_cm", "camera distance past lens 2",
                     &RunConfig::camera_after_lens2_cm, kNonNeg));

  k.push_back(number("medium", "density_per_cm3", "atomic density", &RunConfig::density_per_cm3, kNonNeg));
  k.push_back(number("medium", "cell_length_mm", "cell length", &RunConfig::cell_length_mm, kPositive));
  k.push_back(number("medium", "detuning", "detuning in half-linewidths", &RunConfig::detuning, kAny));
  k.push_back(number("medium", "cross_section_m2", "effective resonant cross section", &RunConfig::cross_section_m2,
                     kPositive));
  k.push_back(number("medium", "saturation_intensity_w_per_m2", "effective saturation intensity",
                     &RunConfig::saturation_intensity_w_per_m2, kPositive));
  k.push_back(number("medium", "displacement_cm", "cell center offset from the focus", &RunConfig::displacement_cm,
                     kAny));
  k.push_back(integer("medium", "steps", "split-step screens in the cell", &RunConfig::steps, 1, 100000));

  k.push_back(number("noise", "gain_coefficient", "squeezing gain g0", &RunConfig::gain_coefficient, kNonNeg));
  k.push_back(number("noise", "excess_coefficient", "excess noise eps0", &RunConfig::excess_coefficient, kNonNeg));
  k.push_back(number("noise", "detection_efficiency", "homodyne efficiency", &RunConfig::detection_efficiency,
                     Range{0.0, 1.0}));
  k.push_back(number("noise", "analysis_frequency_hz", "analysis frequency (reported only)",
                     &RunConfig::analysis_frequency_hz, kPositive));
  k.push_back(number("noise", "mode_mismatch_kappa", "squeezed-mode extra expansion per unit pump expansion",
                     &RunConfig::mode_mismatch_kappa, kNonNeg));

  k.push_back(list("sweep", "powers_mw", "pump power axis", &RunConfig::powers_mw, kNonNeg));
  k.push_back(list("sweep", "densities_per_cm3", "density axis", &RunConfig::densities_per_cm3, kNonNeg));
  k.push_back(list("sweep", "displacements_cm", "cell displacement axis", &RunConfig::displacements_cm, kAny));
  k.push_back(integer("sweep", "workers", "worker threads", &RunConfig::workers, 1, 1024));
  k.push_back(boolean("sweep", "detuning_scan", "pick the best of five detunings per cell", &RunConfig::detuning_scan));
  k.push_back(number("sweep", "camera_noise", "additive pixel noise, fraction of peak", &RunConfig::camera_noise,
                     kNonNeg));
  k.push_back({"sweep", "seed", "camera noise seed",
               [](const RunConfig& c) { return std::to_string(c.seed); },
               [](RunConfig& c, const std::string& v) {
                 const std::string t = trim(v);
                 std::uint64_t x = 0;
                 const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
                 if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
                   invalid("sweep.seed: expected an unsigned integer, got '" + t + "'");
                 c.seed = x;
               }});

  k.push_back({"io", "out_dir", "output directory", [](const RunConfig& c) { return c.out_dir; },
               [](RunConfig& c, const std::string& v) {
                 const std::string t = trim(v);
                 if (t.empty()) invalid("io.out_dir must not be empty");
                 c.out_dir = t;
               }});
  k.push_back(boolean("io", "snapshots", "write a camera PGM per sweep cell", &RunConfig::snapshots));

  k.push_back(number("calibration", "target_power_mw", "anchor pump power", &RunConfig::target_power_mw, kPositive));
  k.push_back(number("calibration", "target_density_per_cm3", "anchor density", &RunConfig::target_density_per_cm3,
                     kPositive));
  k.push_back(number("calibration", "target_db", "anchor noise level", &RunConfig::target_db, Range{-100.0, 0.0}));
  k.push_back(number("calibration", "tolerance_db", "allowed anchor residual", &RunConfig::tolerance_db, kPositive));
  return k;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

const std::vector<std::string>& config_sections() {
  static const std::vector<std::string> sections{"grid",  "beam",  "mask", "train",      "medium",
                                                 "noise", "sweep", "io",   "calibration"};
  return sections;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

void RunConfig::validate() const {
  if (!std::has_single_bit(static_cast<unsigned>(grid_n))) invalid("grid.n must be a power of two");
  if (mask_enabled && mask_charge == 0) invalid("mask.charge must be nonzero when the mask is enabled");
  if (mask_enabled && mask_sectors == 1) invalid("mask.sectors must be 0 or >= 2");
  if (target_power_mw <= 0 || target_density_per_cm3 <= 0) invalid("calibration targets must be positive");
  const double wc = collimated_waist();
  if (4.0 * wc >= 0.5 * window_factor * wc * std::sqrt(2.0 * std::log(2.0)))
    invalid("grid.window_factor too small for the beam");
}

void RunConfig::require_sections(const std::vector<std::string>& names) const {
  for (const auto& n : names)
    if (!sections_present.count(n)) invalid("missing required section [" + n + "]");
}

double RunConfig::collimated_waist() const {
  try {
    return collimated_waist_for_focus(fwhm_to_waist(focus_fwhm_mm * 1e-3), wavelength_nm * 1e-9,
                                      lens1_focal_cm * 1e-2);
  } catch (const Error& e) {
    invalid("beam.focus_fwhm_mm: " + e.message());
  }
}

Grid RunConfig::grid() const {
  const double fwhm = collimated_waist() * std::sqrt(2.0 * std::log(2.0));
  try {
    return Grid::for_beam_fwhm(static_cast<std::size_t>(grid_n), fwhm, window_factor, wavelength_nm * 1e-9);
  } catch (const Error& e) {
    invalid("[grid]: " + e.message());
  }
}

BeamSpec RunConfig::beam() const {
  BeamSpec b;
  b.model = parse_beam_model(beam_model);
  b.waist = collimated_waist();
  b.power = power_mw * 1e-3;
  b.center_x = center_x_mm * 1e-3;
  b.center_y = center_y_mm * 1e-3;
  return b;
}

NoiseModelParams RunConfig::noise_params() const {
  NoiseModelParams p;
  p.gain_coefficient = gain_coefficient;
  p.excess_coefficient = excess_coefficient;
  p.detection_efficiency = detection_efficiency;
  p.analysis_frequency = analysis_frequency_hz;
  return p;
}

SweepConfig RunConfig::sweep_config() const {
  validate();
  SweepConfig s;
  s.grid = grid();
  s.pump = beam();
  if (mask_enabled)
    s.mask = PhaseMaskSpec{mask_charge, mask_sectors, mask_center_x_mm * 1e-3, mask_center_y_mm * 1e-3};
  s.train = TrainSpec{lens1_focal_cm * 1e-2, lens2_focal_cm * 1e-2, lens2_after_focus_cm * 1e-2,
                      camera_after_lens2_cm * 1e-2};
  s.medium.density_per_cm3 = density_per_cm3;
  s.medium.cell_length = cell_length_mm * 1e-3;
  s.medium.detuning = detuning;
  s.medium.cross_section = cross_section_m2;
  s.medium.saturation_intensity = saturation_intensity_w_per_m2;
  s.medium_steps = steps;
  for (double p : powers_mw) s.powers.push_back(p * 1e-3);
  s.densities = densities_per_cm3;
  for (double d : displacements_cm) s.displacements.push_back(d * 1e-2);
  s.displacement = displacement_cm * 1e-2;
  s.noise = noise_params();
  s.mode_mismatch_kappa = mode_mismatch_kappa;
  s.detuning_scan = detuning_scan;
  s.camera_noise = camera_noise;
  s.seed = seed;
  s.workers = workers;
  if (snapshots) s.snapshot_dir = std::filesystem::path(out_dir) / "snapshots";
  s.validate();
  return s;
}

void parse_config_text(const std::string& text, RunConfig& config, const std::string& origin) {
  std::stringstream ss(text);
  std::string line, section;
  std::set<std::string> seen;
  std::set<std::string> sections_here;
  int lineno = 0;
  const auto& sections = config_sections();
  while (std::getline(ss, line)) {
    ++lineno;
    const auto where = origin + ":" + std::to_string(lineno) + ": ";
    const auto hash = line.find_first_of("#;");
    const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') invalid(where + "malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      if (std::find(sections.begin(), sections.end(), section) == sections.end())
        invalid(where + "unknown section [" + section + "]");
      sections_here.insert(section);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) invalid(where + "expected key = value");
    if (section.empty()) invalid(where + "key outside of any section");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    const auto& keys = config_keys();
    const auto it = std::find_if(keys.begin(), keys.end(),
                                 [&](const ConfigKey& k) { return k.section == section && k.key == key; });
    if (it == keys.end()) invalid(where + "unknown key '" + key + "' in [" + section + "]");
    if (!seen.insert(section + "." + key).second) invalid(where + "duplicate key '" + key + "'");
    try {
      it->set(config, value);
    } catch (const Error& e) {
      invalid(where + e.message());
    }
  }
  config.sections_present.insert(sections_here.begin(), sections_here.end());
}

void parse_config_file(const std::filesystem::path& path, RunConfig& config) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::IoError, "cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  parse_config_text(ss.str(), config, path.string());
}

RunConfig load_config(const std::vector<std::filesystem::path>& paths) {
  RunConfig c;
  if (paths.empty()) return c;
  c.sections_present.clear();
  for (const auto& p : paths) parse_config_file(p, c);
  return c;
}

std::string env_name(const ConfigKey& key) {
  std::string n = "OAMSQ_" + key.section + "_" + key.key;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::toupper(c); });
  return n;
}

std::vector<std::string> apply_env_overrides(RunConfig& config, char** envp) {
  std::vector<std::string> applied;
  if (!envp) return applied;
  for (char** e = envp; *e; ++e) {
    const std::string entry = *e;
    if (entry.rfind("OAMSQ_", 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    const std::string name = entry.substr(0, eq);
    const auto& keys = config_keys();
    const auto it = std::find_if(keys.begin(), keys.end(), [&](const ConfigKey& k) { return env_name(k) == name; });
    if (it == keys.end()) invalid("environment " + name + " does not name a config key");
    try {
      it->set(config, entry.substr(eq + 1));
    } catch (const Error& err) {
      invalid("environment " + name + ": " + err.message());
    }
    applied.push_back(name);
  }
  return applied;
}

std::string serialize_config(const RunConfig& config, const std::vector<std::string>& only) {
  std::ostringstream os;
  std::string current;
  for (const auto& k : config_keys()) {
    if (!only.empty() && std::find(only.begin(), only.end(), k.section) == only.end()) continue;
    if (k.section != current) {
      if (!current.empty()) os << "\n";
      os << "[" << k.section << "]\n";
      current = k.section;
    }
    os << k.key << " = " << k.get(config) << "\n";
  }
  return os.str();
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  for (const auto& k : config_keys())
    if (k.get(a) != k.get(b)) return false;
  return true;
}

}  // namespace oamsq
