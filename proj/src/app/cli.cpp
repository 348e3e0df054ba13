#include <cmath>
#include <iostream>
#include <ostream>

#include "CLI11.hpp"
#include "app.hpp"
#include "tus/parallel.hpp"

namespace tus::app {

namespace {

json error_object(const std::string& kind, const std::string& message) {
  return json{{"error", {{"kind", kind}, {"message", message}}}};
}

void add_common(CLI::App* cmd, CommonArgs& c, const std::string& out_help) {
  cmd->add_option("--manifest", c.manifest, "Input manifest (JSON)");
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--out", c.out, out_help);
  cmd->add_option("--threads", c.threads, "Worker threads (overrides TUS_THREADS)")->check(CLI::NonNegativeNumber);
}

void add_phantom(CLI::App* cmd, PhantomArgs& p, int& ny) {
  cmd->add_option("--kind", p.kind, "slice | two-layer")->capture_default_str();
  cmd->add_option("--nx", p.nx, "Grid cells along x")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--ny", ny, "Grid cells along y (default: 221/200 of nx)")->check(CLI::PositiveNumber);
  cmd->add_option("--spacing", p.spacing_m, "Grid spacing in metres")->capture_default_str();
  cmd->add_flag("--skin", p.skin, "Add a skin layer outside the skull");
  cmd->add_flag("--no-cerebellum", p.no_cerebellum, "Omit the cerebellum pocket");
}

void finish_phantom(PhantomArgs& p, int ny) {
  p.ny = ny > 0 ? ny : static_cast<int>(std::lround(p.nx * 221.0 / 200.0));
}

void add_acquisition(CLI::App* cmd, AcquisitionArgs& a) {
  cmd->add_option("--mode", a.mode, "full | partial")->capture_default_str();
  cmd->add_option("--sweeps", a.sweeps, "Number of sweeps (views)")->capture_default_str();
  cmd->add_option("--elements", a.elements, "Arc elements (partial) or contour elements (full, 0 = 1 mm pitch)")
      ->capture_default_str();
  cmd->add_option("--offset", a.offset_m, "Transducer distance outside the head, metres")->capture_default_str();
  cmd->add_option("--arc-span", a.arc_span_deg, "Arc span in degrees (partial)")->capture_default_str();
}

void add_wavelet(CLI::App* cmd, WaveletArgs& w) {
  cmd->add_option("--f0", w.f0_hz, "Ricker peak frequency, Hz")->capture_default_str();
  cmd->add_option("--dt", w.dt_s, "Time step, s")->capture_default_str();
  cmd->add_option("--nt", w.nt, "Time samples")->capture_default_str();
}

void add_solver(CLI::App* cmd, SolverConfig& s, std::string& boundary) {
  cmd->add_option("--order", s.spatial_order, "Spatial order (2 or 4)")->capture_default_str();
  cmd->add_option("--boundary", boundary, "sponge | cpml")->capture_default_str();
  cmd->add_option("--boundary-cells", s.boundary_layer_cells, "Absorbing layer width")->capture_default_str();
  cmd->add_option("--cfl-safety", s.cfl_safety, "Fraction of the stability limit")->capture_default_str();
}

void add_imaging(CLI::App* cmd, ImagingArgs& im) {
  cmd->add_option("--background", im.background, "homogeneous | smoothed")->capture_default_str();
  cmd->add_option("--smooth-sigma", im.smooth_sigma_cells, "Smoothing of the background, cells")
      ->capture_default_str();
  cmd->add_option("--band-low", im.low_hz, "Bandpass low edge, Hz")->capture_default_str();
  cmd->add_option("--band-high", im.high_hz, "Bandpass high edge, Hz")->capture_default_str();
  cmd->add_flag("--raw-direct", im.raw_direct, "Keep the direct arrival in the back-propagated data");
  cmd->add_flag("--no-balance", im.no_balance, "Skip per-receiver amplitude balancing");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transcranial ultrasound tomography toolkit", "tus"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  CommonArgs common;
  PhantomArgs phantom;
  int ny = 0;
  AcquisitionArgs acquisition;
  WaveletArgs wavelet;
  SolverConfig solver;
  std::string boundary = "sponge";
  ImagingArgs imaging;
  InvertArgs invert;
  std::string fragments_path;
  std::vector<double> weights;
  std::string kind = "Original";
  int shift_px = 20;
  int rotation = -1;
  double sigma = 0.0;
  double keep = 1.0;
  std::string a_path, b_path, in_path;
  int slices = 1;

  auto* c_phantom = app.add_subcommand("phantom", "Build a head phantom (labels and speed model)");
  add_common(c_phantom, common, "Output directory");
  add_phantom(c_phantom, phantom, ny);

  auto* c_simulate = app.add_subcommand("simulate", "Record channel data for a phantom manifest");
  add_common(c_simulate, common, "Output directory");
  add_acquisition(c_simulate, acquisition);
  add_wavelet(c_simulate, wavelet);
  add_solver(c_simulate, solver, boundary);

  auto* c_migrate = app.add_subcommand("migrate", "Time-reversal images per view, normalized and stacked");
  add_common(c_migrate, common, "Output directory");
  add_imaging(c_migrate, imaging);

  auto* c_stack = app.add_subcommand("stack", "Stack fragments into one image");
  add_common(c_stack, common, "Output directory");
  c_stack->add_option("--fragments", fragments_path, "Fragment tensor (when no manifest is given)");
  c_stack->add_option("--weights", weights, "Per-fragment weights");

  auto* c_invert = app.add_subcommand("invert", "Full-waveform inversion from a simulate manifest");
  add_common(c_invert, common, "Output directory");
  c_invert->add_option("--initial", invert.initial, "smoothed | homogeneous")->capture_default_str();
  c_invert->add_option("--smooth-sigma", invert.smooth_sigma_cells, "Smoothing of the initial model, cells")
      ->capture_default_str();
  c_invert->add_option("--epochs", invert.epochs, "Iterations")->capture_default_str();
  c_invert->add_option("--step-rule", invert.step_rule, "fixed | backtracking")->capture_default_str();
  c_invert->add_option("--initial-step", invert.initial_step, "Relative first step")->capture_default_str();
  c_invert->add_option("--save-every", invert.save_every, "Write the model every k epochs (0 = never)")
      ->capture_default_str();
  bool no_freeze = false;
  c_invert->add_flag("--no-freeze", no_freeze, "Also update the coupling medium");

  auto* c_perturb = app.add_subcommand("perturb", "Shift and/or rotate fragments");
  add_common(c_perturb, common, "Output directory");
  c_perturb->add_option("--fragments", fragments_path, "Fragment tensor (when no manifest is given)");
  c_perturb->add_option("--kind", kind, "Original | PM | RT | MR")->capture_default_str();
  c_perturb->add_option("--shift", shift_px, "Shift in pixels")->capture_default_str();
  c_perturb->add_option("--rotation", rotation, "Fixed rotation in degrees (default: random quarter turn)");

  auto* c_noise = app.add_subcommand("noise", "Add Gaussian noise to [0,1]-normalized fragments");
  add_common(c_noise, common, "Output directory");
  c_noise->add_option("--fragments", fragments_path, "Fragment tensor (when no manifest is given)");
  c_noise->add_option("--sigma", sigma, "Noise standard deviation")->required();

  auto* c_subsample = app.add_subcommand("subsample", "Keep a random subset of fragments");
  add_common(c_subsample, common, "Output directory");
  c_subsample->add_option("--fragments", fragments_path, "Fragment tensor (when no manifest is given)");
  c_subsample->add_option("--keep", keep, "Fraction of fragments to keep")->required();

  auto* c_metrics = app.add_subcommand("metrics", "SSIM and RMSE between two tensors");
  add_common(c_metrics, common, "Optional report file (JSON)");
  c_metrics->add_option("--a", a_path, "Prediction tensor")->required();
  c_metrics->add_option("--b", b_path, "Reference tensor")->required();

  auto* c_export = app.add_subcommand("export-npy", "Convert a tensor file to .npy");
  add_common(c_export, common, "Output .npy file");
  c_export->add_option("--in", in_path, "Input tensor")->required();

  auto* c_dataset = app.add_subcommand("dataset", "Generate phantoms, channel data, fragments and stacks");
  add_common(c_dataset, common, "Output directory");
  c_dataset->add_option("--slices", slices, "Number of slices")->capture_default_str();
  add_phantom(c_dataset, phantom, ny);
  add_acquisition(c_dataset, acquisition);
  add_wavelet(c_dataset, wavelet);
  add_solver(c_dataset, solver, boundary);
  add_imaging(c_dataset, imaging);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << error_object("usage", e.what()).dump() << "\n";
    return 2;
  }

  try {
    if (common.threads > 0) set_thread_count(common.threads);
    solver.boundary_kind = boundary_kind_from_string(boundary);
    finish_phantom(phantom, ny);
    json result;
    if (*c_phantom) {
      result = phantom_command(common, phantom);
    } else if (*c_simulate) {
      result = simulate_command(common, acquisition, wavelet, solver);
    } else if (*c_migrate) {
      result = migrate_command(common, imaging);
    } else if (*c_stack) {
      result = stack_command(common, fragments_path, weights);
    } else if (*c_invert) {
      invert.freeze_background = !no_freeze;
      result = invert_command(common, invert);
    } else if (*c_perturb) {
      PerturbationSpec spec;
      spec.kind = perturbation_kind_from_string(kind);
      spec.shift_px = shift_px;
      if (rotation >= 0) spec.rotation_deg = rotation;
      spec.seed = common.seed;
      result = perturb_command(common, fragments_path, spec);
    } else if (*c_noise) {
      result = noise_command(common, fragments_path, sigma);
    } else if (*c_subsample) {
      result = subsample_command(common, fragments_path, keep);
    } else if (*c_metrics) {
      result = metrics_command(common, a_path, b_path);
    } else if (*c_export) {
      result = export_npy_command(common, in_path);
    } else if (*c_dataset) {
      DatasetArgs d;
      d.slices = slices;
      d.phantom = phantom;
      d.acquisition = acquisition;
      d.wavelet = wavelet;
      d.imaging = imaging;
      result = dataset_command(common, d, solver);
    }
    out << result.dump(2) << "\n";
    return 0;
  } catch (const StabilityViolation& e) {
    json j = error_object("stability", e.what());
    j["error"]["max_dt_s"] = e.report().max_dt_s;
    j["error"]["courant"] = e.report().courant;
    err << j.dump() << "\n";
  } catch (const InstabilityError& e) {
    json j = error_object("instability", e.what());
    j["error"]["step"] = e.step();
    j["error"]["shot"] = e.shot();
    err << j.dump() << "\n";
  } catch (const IoError& e) {
    json j = error_object("io", e.what());
    j["error"]["io_kind"] = to_string(e.kind());
    err << j.dump() << "\n";
  } catch (const std::invalid_argument& e) {
    err << error_object("invalid_argument", e.what()).dump() << "\n";
  } catch (const std::exception& e) {
    err << error_object("runtime", e.what()).dump() << "\n";
  }
  return 1;
}

}  // namespace tus::app
