#include <cmath>
#include <cstdio>
#include <string>

#include "app.hpp"
#include "tus/augment.hpp"
#include "tus/imaging.hpp"
#include "tus/inversion.hpp"
#include "tus/metrics.hpp"

namespace tus::app {

namespace {

fs::path require_out(const CommonArgs& c) {
  if (c.out.empty()) throw std::invalid_argument("--out is required");
  return fs::path(c.out);
}

json new_manifest(const std::string& command, std::uint64_t seed) {
  json m;
  m["schema_version"] = kManifestSchemaVersion;
  m["command"] = command;
  m["seed"] = seed;
  m["files"] = json::object();
  return m;
}

struct Loaded {
  json manifest;
  fs::path dir;

  fs::path file(const std::string& name) const {
    if (!manifest.contains("files") || !manifest["files"].contains(name)) {
      throw IoError(IoErrorKind::Schema, "manifest does not reference a '" + name + "' file");
    }
    return dir / manifest["files"][name].at("path").get<std::string>();
  }
  const json& section(const std::string& name) const {
    if (!manifest.contains(name)) throw IoError(IoErrorKind::Schema, "manifest has no '" + name + "' section");
    return manifest[name];
  }
};

Loaded load_verified(const std::string& path) {
  if (path.empty()) throw std::invalid_argument("--manifest is required");
  Loaded l;
  l.manifest = load_manifest(path);
  l.dir = fs::path(path).parent_path();
  verify_manifest(l.manifest, l.dir);
  return l;
}

/// Copy of the input manifest with file paths made relative to `to`.
json derive_manifest(const Loaded& in, const fs::path& to, const std::string& command, std::uint64_t seed) {
  json m = in.manifest;
  m["command"] = command;
  m["seed"] = seed;
  json files = json::object();
  for (const auto& [name, entry] : in.manifest["files"].items()) {
    json e = entry;
    e["path"] = fs::relative(fs::absolute(in.dir / entry.at("path").get<std::string>()),
                             fs::absolute(to))
                    .generic_string();
    files[name] = e;
  }
  m["files"] = files;
  return m;
}

void add_file(json& manifest, const std::string& name, const fs::path& file, const fs::path& dir) {
  manifest["files"][name] = file_entry(file, dir);
}

TissueMap make_phantom(const PhantomArgs& p, std::uint64_t seed, json& section) {
  section = json::object();
  section["kind"] = p.kind;
  if (p.kind == "slice") {
    PhantomSpec spec;
    spec.nx = p.nx;
    spec.ny = p.ny;
    spec.spacing_m = p.spacing_m;
    spec.seed = seed;
    spec.skin = p.skin;
    spec.cerebellum = !p.no_cerebellum;
    section.update(to_json(spec));
    return build_slice_phantom(spec);
  }
  if (p.kind == "two-layer") {
    section.update(json{{"nx", p.nx}, {"ny", p.ny}, {"spacing_m", p.spacing_m}, {"seed", seed}});
    return build_two_layer_phantom(p.nx, p.ny, p.spacing_m, seed);
  }
  throw std::invalid_argument("unknown phantom kind '" + p.kind + "' (slice, two-layer)");
}

AcquisitionGeometry make_geometry(const TissueMap& map, const AcquisitionArgs& a, json& section) {
  ContourOptions contour;
  contour.offset_m = a.offset_m;
  AcquisitionGeometry g;
  if (a.mode == "partial") {
    ArcOptions arc;
    arc.contour = contour;
    arc.arc_span_deg = a.arc_span_deg;
    g = partial_arc_geometry(map, a.sweeps, a.elements, arc);
  } else if (a.mode == "full") {
    g = a.elements > 0 ? full_contour_geometry_count(map, a.elements, contour, a.sweeps)
                       : full_contour_geometry(map, kDefaultElementSpacing, contour, a.sweeps);
  } else {
    throw std::invalid_argument("unknown acquisition mode '" + a.mode + "' (full, partial)");
  }
  section = to_json(g);
  section["n_sweeps"] = a.sweeps;
  section["sweep_step_deg"] = 360.0 / a.sweeps;
  section["contour_offset_m"] = a.offset_m;
  if (a.mode == "partial") {
    section["arc_elements"] = a.elements;
    section["arc_span_deg"] = a.arc_span_deg;
  }
  return g;
}

json wavelet_section(const WaveletArgs& w) {
  return json{{"type", "ricker"}, {"f0_hz", w.f0_hz}, {"dt_s", w.dt_s}, {"nt", w.nt}};
}

SourceWavelet wavelet_from(const json& j) {
  return ricker(j.at("f0_hz").get<double>(), j.at("dt_s").get<double>(), j.at("nt").get<int>());
}

double spacing_from(const Loaded& l) { return l.section("phantom").at("spacing_m").get<double>(); }

VelocityModel load_model(const Loaded& l, const std::string& name = "model") {
  VelocityModel m;
  m.values = to_image(read_tensor(l.file(name)));
  m.spacing_m = spacing_from(l);
  return m;
}

TissueMap load_labels(const Loaded& l) { return to_tissue_map(read_tensor(l.file("labels")), spacing_from(l)); }

json fragments_section(const FragmentSet& set, int n_total) {
  json ids = json::array(), angles = json::array();
  for (const auto& f : set.fragments) {
    ids.push_back(f.view_id);
    angles.push_back(f.sweep_angle_deg);
  }
  return json{{"view_ids", ids}, {"view_angles_deg", angles}, {"n_views_total", n_total},
              {"background_model_id", set.empty() ? "" : set.fragments.front().background_model_id}};
}

FragmentSet load_fragments(const Loaded& l) {
  const Tensor t = read_tensor(l.file("fragments"));
  if (t.shape.size() != 3) throw IoError(IoErrorKind::BadShape, "fragments must be (n, nx, ny)");
  const json& sec = l.section("fragments");
  const auto ids = sec.at("view_ids").get<std::vector<int>>();
  const auto angles = sec.at("view_angles_deg").get<std::vector<double>>();
  if (ids.size() != t.shape[0] || angles.size() != t.shape[0]) {
    throw IoError(IoErrorKind::ShapeMismatch, "fragment metadata do not match the fragment tensor");
  }
  FragmentSet set;
  set.provenance = l.dir.generic_string();
  const auto nx = static_cast<int>(t.shape[1]);
  const auto ny = static_cast<int>(t.shape[2]);
  const std::size_t plane = static_cast<std::size_t>(nx) * ny;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    TraFragment f;
    f.image = Image(nx, ny);
    std::copy(t.data.begin() + static_cast<std::ptrdiff_t>(k * plane),
              t.data.begin() + static_cast<std::ptrdiff_t>((k + 1) * plane), f.image.values().begin());
    f.view_id = ids[k];
    f.sweep_angle_deg = angles[k];
    f.background_model_id = sec.value("background_model_id", std::string());
    set.fragments.push_back(std::move(f));
  }
  return set;
}

/// Fragments from a manifest, or from a bare tensor with view ids 0..n-1.
std::pair<FragmentSet, std::optional<Loaded>> fragments_input(const CommonArgs& c, const std::string& path) {
  if (!c.manifest.empty()) {
    Loaded l = load_verified(c.manifest);
    FragmentSet set = load_fragments(l);
    return {std::move(set), std::move(l)};
  }
  if (path.empty()) throw std::invalid_argument("--manifest or --fragments is required");
  const Tensor t = read_tensor(path);
  if (t.shape.size() != 3) throw IoError(IoErrorKind::BadShape, "fragments must be (n, nx, ny)");
  FragmentSet set;
  set.provenance = path;
  const auto nx = static_cast<int>(t.shape[1]);
  const auto ny = static_cast<int>(t.shape[2]);
  const std::size_t plane = static_cast<std::size_t>(nx) * ny;
  for (std::size_t k = 0; k < t.shape[0]; ++k) {
    TraFragment f;
    f.image = Image(nx, ny);
    std::copy(t.data.begin() + static_cast<std::ptrdiff_t>(k * plane),
              t.data.begin() + static_cast<std::ptrdiff_t>((k + 1) * plane), f.image.values().begin());
    f.view_id = static_cast<int>(k);
    set.fragments.push_back(std::move(f));
  }
  return {std::move(set), std::nullopt};
}

json fragment_output(const CommonArgs& c, const FragmentSet& set, const std::optional<Loaded>& in,
                     const std::string& command, const std::string& section, const json& details) {
  const fs::path dir = require_out(c);
  json m = in ? derive_manifest(*in, dir, command, c.seed) : new_manifest(command, c.seed);
  const int total = in && in->manifest.contains("fragments")
                        ? in->manifest["fragments"].value("n_views_total", static_cast<int>(set.size()))
                        : static_cast<int>(set.size());
  write_tensor(dir / "fragments.tns", to_tensor(set));
  add_file(m, "fragments", dir / "fragments.tns", dir);
  m["fragments"] = fragments_section(set, total);
  m[section] = details;
  save_manifest(dir / "manifest.json", m);
  return json{{"manifest", (dir / "manifest.json").generic_string()}, {"fragments", set.size()}};
}

VelocityModel background_model(const ImagingArgs& im, const VelocityModel& truth) {
  if (im.background == "homogeneous") {
    return constant_model(truth.nx(), truth.ny(), truth.spacing_m, 1500.0);
  }
  if (im.background == "smoothed") return smooth_model(truth, im.smooth_sigma_cells);
  throw std::invalid_argument("unknown background '" + im.background + "' (homogeneous, smoothed)");
}

json imaging_section(const ImagingArgs& im, const ImagingOptions& o, const Bandpass& b) {
  json j{{"background", im.background}, {"bandpass", to_json(b)}, {"options", to_json(o)}};
  if (im.background == "smoothed") j["smooth_sigma_cells"] = im.smooth_sigma_cells;
  return j;
}

/// Migrates, normalizes and stacks; writes fragments.tns and stack.tns.
void image_into(json& m, const fs::path& dir, const VelocityModel& truth, const ChannelData& data,
                const AcquisitionGeometry& geometry, const SourceWavelet& wavelet,
                const SolverConfig& solver, const ImagingArgs& im) {
  ImagingOptions opts;
  opts.subtract_direct = !im.raw_direct;
  opts.balance_traces = !im.no_balance;
  Bandpass band;
  band.low_hz = im.low_hz;
  band.high_hz = im.high_hz;
  const VelocityModel bg = background_model(im, truth);
  const FragmentSet raw = migrate(bg, data, geometry, wavelet, solver, opts, im.background);
  const FragmentSet frags = normalize_fragments(raw, truth.spacing_m, band);
  const Image stack = stack_fragments(frags);
  write_tensor(dir / "fragments.tns", to_tensor(frags));
  write_tensor(dir / "stack.tns", to_tensor(stack));
  add_file(m, "fragments", dir / "fragments.tns", dir);
  add_file(m, "stack", dir / "stack.tns", dir);
  m["imaging"] = imaging_section(im, opts, band);
  m["fragments"] = fragments_section(frags, static_cast<int>(frags.size()));
}

}  // namespace

json phantom_command(const CommonArgs& c, const PhantomArgs& p) {
  const fs::path dir = require_out(c);
  json m = new_manifest("phantom", c.seed);
  json section;
  const TissueMap map = make_phantom(p, c.seed, section);
  const VelocityModel model = rasterize(map, VelocityTable::brain());
  write_tensor(dir / "labels.tns", to_tensor(map));
  write_tensor(dir / "model.tns", to_tensor(model.values));
  m["phantom"] = section;
  add_file(m, "labels", dir / "labels.tns", dir);
  add_file(m, "model", dir / "model.tns", dir);
  save_manifest(dir / "manifest.json", m);
  return json{{"manifest", (dir / "manifest.json").generic_string()}, {"shape", {map.nx(), map.ny()}}};
}

json simulate_command(const CommonArgs& c, const AcquisitionArgs& a, const WaveletArgs& w,
                      const SolverConfig& solver) {
  const Loaded in = load_verified(c.manifest);
  const fs::path dir = require_out(c);
  solver.validate();
  const TissueMap map = load_labels(in);
  const VelocityModel model = load_model(in);
  const auto report = check_stability(model, w.dt_s, solver.spatial_order, solver.cfl_safety);
  if (!report.ok) throw StabilityViolation(report);
  json m = derive_manifest(in, dir, "simulate", c.seed);
  json acq;
  const AcquisitionGeometry geometry = make_geometry(map, a, acq);
  const SourceWavelet wavelet = ricker(w.f0_hz, w.dt_s, w.nt);
  const ChannelData data = simulate_all(model, geometry, wavelet, solver);
  write_tensor(dir / "data.tns", to_tensor(data));
  m["acquisition"] = acq;
  m["solver"] = to_json(solver);
  m["wavelet"] = wavelet_section(w);
  add_file(m, "data", dir / "data.tns", dir);
  save_manifest(dir / "manifest.json", m);
  return json{{"manifest", (dir / "manifest.json").generic_string()},
              {"data_shape", {data.nt, data.ns, data.nr}}};
}

json migrate_command(const CommonArgs& c, const ImagingArgs& im) {
  const Loaded in = load_verified(c.manifest);
  const fs::path dir = require_out(c);
  const VelocityModel truth = load_model(in);
  const SourceWavelet wavelet = wavelet_from(in.section("wavelet"));
  const ChannelData data = to_channel_data(read_tensor(in.file("data")), wavelet.dt_s);
  const AcquisitionGeometry geometry = geometry_from_json(in.section("acquisition"));
  const SolverConfig solver = solver_config_from_json(in.section("solver"));
  json m = derive_manifest(in, dir, "migrate", c.seed);
  image_into(m, dir, truth, data, geometry, wavelet, solver, im);
  save_manifest(dir / "manifest.json", m);
  return json{{"manifest", (dir / "manifest.json").generic_string()},
              {"fragments", m["fragments"]["view_ids"].size()}};
}

json stack_command(const CommonArgs& c, const std::string& fragments, const std::vector<double>& weights) {
  auto [set, in] = fragments_input(c, fragments);
  const fs::path dir = require_out(c);
  std::optional<std::vector<double>> w;
  if (!weights.empty()) w = weights;
  const Image stack = stack_fragments(set, w);
  json m = in ? derive_manifest(*in, dir, "stack", c.seed) : new_manifest("stack", c.seed);
  write_tensor(dir / "stack.tns", to_tensor(stack));
  add_file(m, "stack", dir / "stack.tns", dir);
  m["stack"] = json{{"weights", weights.empty() ? json(nullptr) : json(weights)}, {"n_fragments", set.size()}};
  save_manifest(dir / "manifest.json", m);
  return json{{"manifest", (dir / "manifest.json").generic_string()}};
}

json invert_command(const CommonArgs& c, const InvertArgs& a) {
  const Loaded in = load_verified(c.manifest);
  const fs::path dir = require_out(c);
  const TissueMap map = load_labels(in);
  const VelocityModel truth = load_model(in);
  const SourceWavelet wavelet = wavelet_from(in.section("wavelet"));
  const ChannelData obs = to_channel_data(read_tensor(in.file("data")), wavelet.dt_s);
  const AcquisitionGeometry geometry = geometry_from_json(in.section("acquisition"));
  const SolverConfig solver = solver_config_from_json(in.section("solver"));

  VelocityModel m0;
  if (a.initial == "smoothed") {
    m0 = smooth_interior(truth, map, a.smooth_sigma_cells);
  } else if (a.initial == "homogeneous") {
    m0 = homogeneous_interior(truth, map, 1500.0);
  } else {
    throw std::invalid_argument("unknown initial model '" + a.initial + "' (smoothed, homogeneous)");
  }
  FwiConfig fc;
  fc.epochs = a.epochs;
  fc.step_rule = step_rule_from_string(a.step_rule);
  fc.initial_step = a.initial_step;
  if (a.freeze_background) {
    Mask freeze(map.nx(), map.ny(), 0);
    for (std::size_t i = 0; i < freeze.size(); ++i) {
      freeze.values()[i] = map.labels.values()[i] == TissueClass::Background ? 1 : 0;
    }
    fc.freeze_mask = freeze;
  }
  if (a.save_every < 0) throw std::invalid_argument("--save-every must be >= 0");
  json m = derive_manifest(in, dir, "invert", c.seed);
  json saved = json::array();
  EpochCallback cb;
  if (a.save_every > 0) {
    cb = [&](int epoch, const VelocityModel& model, double) {
      if (epoch % a.save_every != 0) return;
      char name[64];
      std::snprintf(name, sizeof name, "model_epoch_%04d.tns", epoch);
      write_tensor(dir / name, to_tensor(model.values));
      saved.push_back(name);
    };
  }
  const FwiResult r = fwi_invert(m0, obs, geometry, wavelet, solver, fc, cb);
  write_tensor(dir / "initial.tns", to_tensor(m0.values));
  write_tensor(dir / "inverted.tns", to_tensor(r.model.values));
  add_file(m, "initial", dir / "initial.tns", dir);
  add_file(m, "inverted", dir / "inverted.tns", dir);
  for (const auto& name : saved) add_file(m, name.get<std::string>(), dir / name.get<std::string>(), dir);
  m["inversion"] = json{{"initial", a.initial},
                        {"epochs", a.epochs},
                        {"step_rule", a.step_rule},
                        {"initial_step", a.initial_step},
                        {"freeze_background", a.freeze_background},
                        {"misfit_history", r.misfit_history},
                        {"epochs_run", r.epochs_run},
                        {"stopped_early", r.stopped_early},
                        {"stop_reason", r.stop_reason},
                        {"model_rmse_mps", rmse(r.model.values, truth.values)}};
  save_manifest(dir / "manifest.json", m);
  return json{{"manifest", (dir / "manifest.json").generic_string()},
              {"misfit_initial", r.misfit_history.front()},
              {"misfit_final", r.misfit_history.back()}};
}

json perturb_command(const CommonArgs& c, const std::string& fragments, const PerturbationSpec& spec) {
  auto [set, in] = fragments_input(c, fragments);
  return fragment_output(c, perturb_fragments(set, spec), in, "perturb", "perturbation", to_json(spec));
}

json noise_command(const CommonArgs& c, const std::string& fragments, double sigma) {
  auto [set, in] = fragments_input(c, fragments);
  const FragmentSet noisy = add_noise(normalize01_fragments(set), sigma, c.seed);
  return fragment_output(c, noisy, in, "noise", "noise",
                         json{{"sigma", sigma}, {"seed", c.seed}, {"normalized01", true}});
}

json subsample_command(const CommonArgs& c, const std::string& fragments, double keep) {
  auto [set, in] = fragments_input(c, fragments);
  return fragment_output(c, subsample_fragments(set, keep, c.seed), in, "subsample", "subsample",
                         json{{"keep_fraction", keep}, {"seed", c.seed}});
}

json metrics_command(const CommonArgs& c, const std::string& a, const std::string& b) {
  const Tensor ta = read_tensor(a);
  const Tensor tb = read_tensor(b);
  if (ta.shape != tb.shape) throw IoError(IoErrorKind::ShapeMismatch, "metrics: tensors differ in shape");
  json result;
  if (ta.shape.size() == 2) {
    const MetricReport r = evaluate(to_image(ta), to_image(tb));
    result = json{{"ssim", r.ssim}, {"rmse", r.rmse}};
  } else {
    const auto nx = static_cast<int>(ta.shape[1]);
    const auto ny = static_cast<int>(ta.shape[2]);
    const std::size_t plane = static_cast<std::size_t>(nx) * ny;
    json slices = json::array();
    double s = 0.0, e = 0.0;
    for (std::size_t k = 0; k < ta.shape[0]; ++k) {
      Image ia(nx, ny), ib(nx, ny);
      std::copy(ta.data.begin() + static_cast<std::ptrdiff_t>(k * plane),
                ta.data.begin() + static_cast<std::ptrdiff_t>((k + 1) * plane), ia.values().begin());
      std::copy(tb.data.begin() + static_cast<std::ptrdiff_t>(k * plane),
                tb.data.begin() + static_cast<std::ptrdiff_t>((k + 1) * plane), ib.values().begin());
      const MetricReport r = evaluate(ia, ib);
      slices.push_back(json{{"ssim", r.ssim}, {"rmse", r.rmse}});
      s += r.ssim;
      e += r.rmse;
    }
    const double n = static_cast<double>(ta.shape[0]);
    result = json{{"ssim", s / n}, {"rmse", e / n}, {"per_slice", slices}};
  }
  if (!c.out.empty()) write_text_atomic(c.out, result.dump(2) + "\n");
  return result;
}

json export_npy_command(const CommonArgs& c, const std::string& in) {
  if (in.empty()) throw std::invalid_argument("--in is required");
  const fs::path out = require_out(c);
  const Tensor t = read_tensor(in);
  write_npy(out, t);
  return json{{"npy", out.generic_string()}, {"shape", t.shape}};
}

json dataset_command(const CommonArgs& c, const DatasetArgs& d, const SolverConfig& solver) {
  if (d.slices < 1) throw std::invalid_argument("--slices must be >= 1");
  solver.validate();
  const fs::path root = require_out(c);
  json index = new_manifest("dataset", c.seed);
  index.erase("files");
  index["slices"] = json::array();
  for (int k = 0; k < d.slices; ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "slice_%03d", k);
    const fs::path dir = root / name;
    const std::uint64_t slice_seed = c.seed * 1000003ULL + static_cast<std::uint64_t>(k);
    json m = new_manifest("dataset", c.seed);
    m["slice"] = k;
    json phantom;
    const TissueMap map = make_phantom(d.phantom, slice_seed, phantom);
    const VelocityModel truth = rasterize(map, VelocityTable::brain());
    const auto report = check_stability(truth, d.wavelet.dt_s, solver.spatial_order, solver.cfl_safety);
    if (!report.ok) throw StabilityViolation(report);
    json acq;
    const AcquisitionGeometry geometry = make_geometry(map, d.acquisition, acq);
    const SourceWavelet wavelet = ricker(d.wavelet.f0_hz, d.wavelet.dt_s, d.wavelet.nt);
    const ChannelData data = simulate_all(truth, geometry, wavelet, solver);
    write_tensor(dir / "labels.tns", to_tensor(map));
    write_tensor(dir / "model.tns", to_tensor(truth.values));
    write_tensor(dir / "data.tns", to_tensor(data));
    m["phantom"] = phantom;
    m["acquisition"] = acq;
    m["solver"] = to_json(solver);
    m["wavelet"] = wavelet_section(d.wavelet);
    add_file(m, "labels", dir / "labels.tns", dir);
    add_file(m, "model", dir / "model.tns", dir);
    add_file(m, "data", dir / "data.tns", dir);
    image_into(m, dir, truth, data, geometry, wavelet, solver, d.imaging);
    m["perturbation"] = nullptr;
    m["noise"] = nullptr;
    m["subsample"] = nullptr;
    save_manifest(dir / "manifest.json", m);
    index["slices"].push_back((fs::path(name) / "manifest.json").generic_string());
  }
  save_manifest(root / "dataset.json", index);
  return json{{"index", (root / "dataset.json").generic_string()}, {"slices", d.slices}};
}

}  // namespace tus::app
