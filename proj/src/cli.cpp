#include "oamsq/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "oamsq/analysis.hpp"
#include "oamsq/calibrate.hpp"
#include "oamsq/config.hpp"
#include "oamsq/sweep.hpp"

namespace oamsq::cli {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigInvalid:
      return kExitConfig;
    case ErrorKind::IoError:
    case ErrorKind::UnsupportedFormat:
    case ErrorKind::CorruptFile:
      return kExitIo;
    case ErrorKind::CalibrationDiverged:
      return kExitCalibration;
    default:
      return kExitNumeric;
  }
}

std::unique_ptr<CLI::App> build_app(Options& o) {
  auto app = std::make_unique<CLI::App>("Squeezed-vacuum OAM simulator: propagation, fitting and parameter sweeps",
                                        "oamsq");
  app->require_subcommand(1);
  app->fallthrough();
  app->add_option("--config", o.configs, "Config file; repeat to layer files, later ones win")
      ->check(CLI::ExistingFile);
  app->add_option("--out", o.out_dir, "Output directory (overrides [io] out_dir)");
  app->add_option("--workers", o.workers, "Sweep worker threads (overrides [sweep] workers)")
      ->check(CLI::PositiveNumber);
  app->add_option("--seed", o.seed, "Camera-noise seed (overrides [sweep] seed)");
  app->add_flag("--quiet", o.quiet, "Suppress progress messages");

  app->add_subcommand("propagate", "Run the optical train once and write the camera field, image and fit");
  auto* fit = app->add_subcommand("fit", "Fit a PGM or CSV image with the gaussian or lg1 profile");
  fit->add_option("image", o.image, "Image file (P5 graymap or CSV matrix)")->required()->check(CLI::ExistingFile);
  fit->add_option("--model", o.model, "Profile model: gaussian, lg1 or auto (from the config)")
      ->check(CLI::IsMember({"auto", "gaussian", "lg1"}));
  fit->add_option("--pitch-um", o.pitch_um, "Pixel pitch in micrometers (default: config grid pitch)")
      ->check(CLI::NonNegativeNumber);
  auto* oam = app->add_subcommand("oam", "Azimuthal (OAM) spectrum of a CF2D field file");
  oam->add_option("field", o.field, "Field file written by propagate")->required()->check(CLI::ExistingFile);
  oam->add_option("--max-m", o.max_m, "Largest |m| reported")->check(CLI::NonNegativeNumber);
  app->add_subcommand("sweep", "Power x density sweep");
  app->add_subcommand("calibrate", "Fit the gain and excess-noise coefficients to the anchor cell");
  app->add_subcommand("shift-sweep", "Cell displacement x power sweep");
  return app;
}

namespace {

struct Context {
  RunConfig config;
  Options options;
  std::filesystem::path out;
  std::ostream& out_stream;
  std::ostream& err;
};

void make_out_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create output directory " + dir.string() + ": " + ec.message());
}

ProgressCallback progress_for(const Context& ctx, const char* label) {
  if (ctx.options.quiet) return {};
  return [&ctx, label](std::size_t done, std::size_t total) {
    ctx.err << "[" << label << "] " << done << "/" << total << "\n";
  };
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

void report_failures(const SweepGrid& grid, const Context& ctx, const std::string& stem) {
  if (grid.failed() == 0) return;
  write_error_log(grid, ctx.out / (stem + "_errors.csv"));
  ctx.err << grid.failed() << " of " << grid.cells.size() << " cells failed; see " << stem << "_errors.csv\n";
}

int cmd_propagate(Context& ctx) {
  ctx.config.require_sections({"grid", "beam", "train", "medium"});
  const SweepConfig sc = ctx.config.sweep_config();
  make_out_dir(ctx.out);
  Diagnostics diag;
  const CameraRun run = simulate_to_camera(sc, ctx.config.power_mw * 1e-3, ctx.config.density_per_cm3,
                                           ctx.config.displacement_cm * 1e-2, &diag);
  write_field(run.camera, ctx.out / "camera.cf2d");
  render_image(run.camera, ctx.out / "camera.pgm");
  const FitResult fit = fit_profile(image_from_field(run.camera), sc.fit_model());
  write_fit_csv({fit}, ctx.out / "fit.csv");
  for (const auto& w : diag.warnings()) ctx.err << "warning: " << w.message << "\n";
  char line[256];
  std::snprintf(line, sizeof line, "camera z = %.6g m, power %.6g W, transmission %.6g, fit %s w = %.6g m (residual %.3g)\n",
                run.camera.z(), total_power(run.camera), run.evolution.transmission(),
                std::string(to_string(fit.model)).c_str(), fit.w, fit.residual);
  ctx.out_stream << line;
  return fit.converged ? kExitOk : kExitNumeric;
}

int cmd_fit(Context& ctx) {
  double pitch = ctx.options.pitch_um * 1e-6;
  if (pitch <= 0) pitch = ctx.config.grid().dx();
  const IntensityImage img = ingest_image(ctx.options.image, pitch);
  BeamModel model = ctx.options.model == "auto" ? ctx.config.sweep_config().fit_model()
                                                : parse_beam_model(ctx.options.model);
  const FitResult fit = fit_profile(img, model);
  make_out_dir(ctx.out);
  write_fit_csv({fit}, ctx.out / "fit.csv");
  write_fit_csv_header(ctx.out_stream);
  write_fit_csv_row(ctx.out_stream, fit);
  return fit.converged ? kExitOk : kExitNumeric;
}

int cmd_oam(Context& ctx) {
  const ComplexField2D field = read_field(ctx.options.field);
  const OamSpectrum spec = oam_spectrum(recenter_on_centroid(field), ctx.options.max_m);
  make_out_dir(ctx.out);
  write_oam_csv(spec, ctx.out / "oam.csv");
  char line[160];
  std::snprintf(line, sizeof line, "fraction(m=1) = %.6f, <m> = %.6f, out of band = %.3g\n", spec.fraction(1),
                spec.mean_m, spec.out_of_band);
  ctx.out_stream << line;
  return kExitOk;
}

int cmd_sweep(Context& ctx) {
  ctx.config.require_sections({"grid", "beam", "train", "medium", "noise", "sweep"});
  const SweepConfig sc = ctx.config.sweep_config();
  make_out_dir(ctx.out);
  const SweepGrid grid = run_power_density_sweep(sc, progress_for(ctx, "sweep"));
  write_sweep_csv(grid, ctx.out / "sweep.csv");
  write_provenance(grid, serialize_config(ctx.config), ctx.out / "sweep.provenance");
  report_failures(grid, ctx, "sweep");
  if (grid.failed() < grid.cells.size()) {
    const auto [r, c] = grid.argmin();
    char line[160];
    std::snprintf(line, sizeof line, "optimum %.4f dB at %.4g mW, %.4g cm^-3\n",
                  grid.at(r, c).noise.min_quadrature_dB, grid.rows[r] * 1e3, grid.cols[c]);
    ctx.out_stream << line;
  }
  return grid.failed() == 0 ? kExitOk : kExitNumeric;
}

int cmd_calibrate(Context& ctx) {
  ctx.config.require_sections({"grid", "beam", "train", "medium", "noise", "sweep", "calibration"});
  const SweepConfig sc = ctx.config.sweep_config();
  make_out_dir(ctx.out);
  SweepGrid grid = run_power_density_sweep(sc, progress_for(ctx, "calibrate"));
  report_failures(grid, ctx, "calibration");
  CalibrationTarget target{ctx.config.target_power_mw * 1e-3, ctx.config.target_density_per_cm3,
                           ctx.config.target_db, ctx.config.tolerance_db};
  const CalibrationResult res = calibrate(grid, target, sc.noise);
  apply_noise_model(grid, res.params);
  RunConfig calibrated = ctx.config;
  calibrated.gain_coefficient = res.params.gain_coefficient;
  calibrated.excess_coefficient = res.params.excess_coefficient;
  write_text(ctx.out / "calibrated_noise.cfg", serialize_config(calibrated, {"noise"}));
  write_sweep_csv(grid, ctx.out / "calibration_sweep.csv");
  write_provenance(grid, serialize_config(calibrated), ctx.out / "calibration_sweep.provenance");
  char line[256];
  std::snprintf(line, sizeof line,
                "gain_coefficient = %.10g, excess_coefficient = %.10g; optimum %.4f dB (residual %.3g dB, "
                "margin %.3g dB)\n",
                res.params.gain_coefficient, res.params.excess_coefficient, res.achieved_dB, res.residual_dB,
                res.margin_dB);
  ctx.out_stream << line;
  return grid.failed() == 0 ? kExitOk : kExitNumeric;
}

int cmd_shift_sweep(Context& ctx) {
  ctx.config.require_sections({"grid", "beam", "train", "medium", "noise", "sweep"});
  const SweepConfig sc = ctx.config.sweep_config();
  make_out_dir(ctx.out);
  const SweepGrid grid = run_displacement_sweep(sc, progress_for(ctx, "shift-sweep"));
  write_sweep_csv(grid, ctx.out / "shift_sweep.csv");
  write_provenance(grid, serialize_config(ctx.config), ctx.out / "shift_sweep.provenance");
  report_failures(grid, ctx, "shift_sweep");
  return grid.failed() == 0 ? kExitOk : kExitNumeric;
}

}  // namespace

int run(int argc, char** argv, char** envp, std::ostream& out, std::ostream& err) {
  Options options;
  auto app = build_app(options);
  try {
    app->parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app->help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app->help();
    return kExitConfig;
  }
  try {
    std::vector<std::filesystem::path> paths(options.configs.begin(), options.configs.end());
    RunConfig config = load_config(paths);
    apply_env_overrides(config, envp);
    if (options.workers) config.workers = *options.workers;
    if (options.seed) config.seed = *options.seed;
    if (!options.out_dir.empty()) config.out_dir = options.out_dir;
    config.validate();
    Context ctx{config, options, config.out_dir, out, err};
    const std::string sub = app->get_subcommands().front()->get_name();
    if (sub == "propagate") return cmd_propagate(ctx);
    if (sub == "fit") return cmd_fit(ctx);
    if (sub == "oam") return cmd_oam(ctx);
    if (sub == "sweep") return cmd_sweep(ctx);
    if (sub == "calibrate") return cmd_calibrate(ctx);
    if (sub == "shift-sweep") return cmd_shift_sweep(ctx);
    err << "error: unknown subcommand " << sub << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace oamsq::cli
