#include <doctest.h>

#include <CLI11.hpp>

#include <regex>
#include <sstream>

#include "oamsq/cli.hpp"
#include "oamsq/config.hpp"
#include "oamsq/field.hpp"
#include "support.hpp"

using namespace oamsq;

namespace {

const char* kTinyConfig =
    "[grid]\nn = 256\nwindow_factor = 8\n"
    "[medium]\nsteps = 10\n"
    "[sweep]\npowers_mw = 6, 14\ndensities_per_cm3 = 1e12, 3e12\ndisplacements_cm = -2, 0, 2\n"
    "[calibration]\ntarget_power_mw = 14\ntarget_density_per_cm3 = 3e12\ntarget_db = -1\n";

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args, std::vector<std::string> env = {}) {
  args.insert(args.begin(), "oamsq");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::vector<char*> envp;
  for (auto& e : env) envp.push_back(e.data());
  envp.push_back(nullptr);
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), envp.data(), out, err);
  return {code, out.str(), err.str()};
}

const std::string kDefaults = std::string(OAMSQ_SOURCE_DIR) + "/configs/default.cfg";

}  // namespace

TEST_CASE("every option is described and documented") {
  cli::Options o;
  auto app = cli::build_app(o);
  const std::string readme = testing::slurp(std::filesystem::path(OAMSQ_SOURCE_DIR) / "README.md");
  std::vector<const CLI::App*> apps{app.get()};
  for (const auto* sub : app->get_subcommands([](const CLI::App*) { return true; })) apps.push_back(sub);
  CHECK(apps.size() == 7);
  for (const auto* a : apps) {
    if (a != app.get()) {
      CAPTURE(a->get_name());
      CHECK_FALSE(a->get_description().empty());
      CHECK(readme.find(a->get_name()) != std::string::npos);
    }
    for (const auto* opt : a->get_options()) {
      if (opt->get_name() == "--help") continue;
      CAPTURE(opt->get_name());
      CHECK_FALSE(opt->get_description().empty());
      for (const auto& flag : opt->get_lnames()) CHECK(readme.find("--" + flag) != std::string::npos);
    }
  }
  // and every config key appears in the README table
  for (const auto& k : config_keys()) {
    CAPTURE(k.key);
    CHECK(readme.find("`" + k.key + "`") != std::string::npos);
  }
}

TEST_CASE("exit codes") {
  CHECK(cli::exit_code_for(ErrorKind::ConfigInvalid) == cli::kExitConfig);
  CHECK(cli::exit_code_for(ErrorKind::CorruptFile) == cli::kExitIo);
  CHECK(cli::exit_code_for(ErrorKind::UnsupportedFormat) == cli::kExitIo);
  CHECK(cli::exit_code_for(ErrorKind::IoError) == cli::kExitIo);
  CHECK(cli::exit_code_for(ErrorKind::CalibrationDiverged) == cli::kExitCalibration);
  CHECK(cli::exit_code_for(ErrorKind::StepTooCoarse) == cli::kExitNumeric);

  const auto help = run_cli({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("shift-sweep") != std::string::npos);
  CHECK(run_cli({}).code == cli::kExitConfig);
  CHECK(run_cli({"teleport"}).code == cli::kExitConfig);
  CHECK(run_cli({"--config", "/nonexistent.cfg", "propagate"}).code == cli::kExitConfig);
}

TEST_CASE("config errors map to exit code 2") {
  testing::TempDir dir("cli_cfg");
  testing::spit(dir / "bad.cfg", "[beam]\npower_mw = lots\n");
  const auto r = run_cli({"--config", (dir / "bad.cfg").string(), "propagate"});
  CHECK(r.code == cli::kExitConfig);
  CHECK(r.err.find("error: ConfigInvalid") != std::string::npos);
  CHECK(r.err.find("bad.cfg:2") != std::string::npos);

  // a file that names only some sections cannot drive a sweep
  testing::spit(dir / "partial.cfg", "[beam]\npower_mw = 3\n");
  const auto p = run_cli({"--config", (dir / "partial.cfg").string(), "sweep"});
  CHECK(p.code == cli::kExitConfig);
  CHECK(p.err.find("missing required section") != std::string::npos);

  const auto e = run_cli({"propagate"}, {"OAMSQ_GRID_N=100"});
  CHECK(e.code == cli::kExitConfig);
}

TEST_CASE("propagate, oam and fit") {
  testing::TempDir dir("cli_run");
  testing::spit(dir / "tiny.cfg", kTinyConfig);
  const std::string cfg = (dir / "tiny.cfg").string();
  const auto out = (dir / "out").string();

  const auto p = run_cli({"--config", kDefaults, "--config", cfg, "--out", out, "propagate"},
                         {"OAMSQ_BEAM_MODEL=lg1", "OAMSQ_BEAM_POWER_MW=8"});
  REQUIRE(p.code == 0);
  CHECK(std::filesystem::exists(dir / "out/camera.cf2d"));
  CHECK(std::filesystem::exists(dir / "out/camera.pgm"));
  const std::string fit = testing::slurp(dir / "out/fit.csv");
  CHECK(fit.rfind("model,w_m,I0,x0_m,y0_m,residual,converged\nlg1,", 0) == 0);
  const auto field = read_field(dir / "out/camera.cf2d");
  CHECK(field.grid().nx() == 256);
  CHECK(total_power(field) < 8e-3);
  CHECK(total_power(field) > 1e-3);

  const auto o = run_cli({"--out", out, "oam", (dir / "out/camera.cf2d").string(), "--max-m", "3"});
  REQUIRE(o.code == 0);
  const std::string oam = testing::slurp(dir / "out/oam.csv");
  CHECK(oam.rfind("m,fraction\n-3,", 0) == 0);
  std::smatch m;
  REQUIRE(std::regex_search(oam, m, std::regex("\n1,([0-9.e+-]+)\n")));
  CHECK(std::stod(m[1]) > 0.999);

  const auto f = run_cli({"--config", kDefaults, "--config", cfg, "--out", out, "fit", (dir / "out/camera.pgm").string(), "--model", "lg1",
                          "--pitch-um", "10"});
  CHECK(f.code == 0);
  CHECK(f.out.find("lg1,") != std::string::npos);
  CHECK(run_cli({"fit", (dir / "out/camera.pgm").string(), "--model", "ring"}).code == cli::kExitConfig);

  testing::spit(dir / "frame.bmp", "BM....");
  CHECK(run_cli({"--out", out, "fit", (dir / "frame.bmp").string()}).code == cli::kExitIo);
  testing::spit(dir / "junk.cf2d", "CF2D");
  CHECK(run_cli({"--out", out, "oam", (dir / "junk.cf2d").string()}).code == cli::kExitIo);
}

TEST_CASE("sweeps write CSV and provenance; flags beat the environment") {
  testing::TempDir dir("cli_sweep");
  testing::spit(dir / "tiny.cfg", kTinyConfig);
  const std::string cfg = (dir / "tiny.cfg").string();
  const auto a = run_cli({"--config", kDefaults, "--config", cfg, "--out", (dir / "a").string(), "--quiet", "--workers", "2", "sweep"},
                         {"OAMSQ_SWEEP_WORKERS=1"});
  REQUIRE(a.code == 0);
  CHECK(a.err.empty());
  CHECK(a.out.find("optimum") != std::string::npos);
  const std::string csv = testing::slurp(dir / "a/sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  const std::string prov = testing::slurp(dir / "a/sweep.provenance");
  CHECK(prov.find("workers = 2") != std::string::npos);
  CHECK(prov.find("# config_hash_fnv1a64 = ") == 0);

  const auto b = run_cli({"--config", kDefaults, "--config", cfg, "--out", (dir / "b").string(), "sweep"});
  REQUIRE(b.code == 0);
  CHECK(b.err.find("[sweep] 4/4") != std::string::npos);
  CHECK(testing::slurp(dir / "b/sweep.csv") == csv);

  const auto s = run_cli({"--config", kDefaults, "--config", cfg, "--out", (dir / "s").string(), "--quiet", "shift-sweep"});
  REQUIRE(s.code == 0);
  const std::string shift = testing::slurp(dir / "s/shift_sweep.csv");
  CHECK(std::count(shift.begin(), shift.end(), '\n') == 7);
  CHECK(shift.find("\n6,2.7e+12,-2,") != std::string::npos);
}

TEST_CASE("calibrate writes a noise section or reports divergence") {
  testing::TempDir dir("cli_cal");
  testing::spit(dir / "tiny.cfg", kTinyConfig);
  const std::string cfg = (dir / "tiny.cfg").string();
  const auto c = run_cli({"--config", kDefaults, "--config", cfg, "--out", (dir / "c").string(), "--quiet", "calibrate"});
  REQUIRE(c.code == 0);
  const std::string noise = testing::slurp(dir / "c/calibrated_noise.cfg");
  RunConfig parsed;
  parse_config_text(noise, parsed);
  CHECK(parsed.gain_coefficient > 0);
  CHECK(std::filesystem::exists(dir / "c/calibration_sweep.csv"));

  // below the loss floor set by the detection efficiency
  const auto d = run_cli({"--config", kDefaults, "--config", cfg, "--out", (dir / "d").string(), "--quiet", "calibrate"},
                         {"OAMSQ_CALIBRATION_TARGET_DB=-30"});
  CHECK(d.code == cli::kExitCalibration);
  CHECK(d.err.find("CalibrationDiverged") != std::string::npos);

  const auto e = run_cli({"--config", kDefaults, "--config", cfg, "--out", (dir / "e").string(), "--quiet", "calibrate"},
                         {"OAMSQ_CALIBRATION_TARGET_POWER_MW=7"});
  CHECK(e.code == cli::kExitConfig);
}
