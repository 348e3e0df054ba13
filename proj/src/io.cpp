#include "tus/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace tus {

namespace {

constexpr char kMagic[8] = {'T', 'U', 'S', 'T', 'E', 'N', 'S', 'R'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kDtypeF32 = 1;
constexpr std::size_t kHeaderBytes = 64;

void put_u32(unsigned char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}
void put_u64(unsigned char* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}
std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoErrorKind::System, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes_atomic(const fs::path& path, const unsigned char* data, std::size_t n) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(IoErrorKind::System, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) throw IoError(IoErrorKind::System, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError(IoErrorKind::System, "cannot rename into " + path.string() + ": " + ec.message());
}

std::uint64_t checked_numel(const std::vector<std::uint64_t>& shape) {
  std::uint64_t n = 1;
  for (auto d : shape) {
    if (d == 0) throw IoError(IoErrorKind::BadShape, "tensor dimensions must be positive");
    if (n > std::numeric_limits<std::uint64_t>::max() / 4 / d) {
      throw IoError(IoErrorKind::BadShape, "tensor shape overflows");
    }
    n *= d;
  }
  return n;
}

std::vector<std::uint64_t> parse_header(const unsigned char* h, std::size_t file_size) {
  if (file_size < kHeaderBytes) throw IoError(IoErrorKind::Truncated, "file shorter than the tensor header");
  if (std::memcmp(h, kMagic, 8) != 0) throw IoError(IoErrorKind::BadMagic, "not a tensor file");
  if (get_u32(h + 8) != kVersion) {
    throw IoError(IoErrorKind::BadVersion, "unsupported tensor version " + std::to_string(get_u32(h + 8)));
  }
  if (get_u32(h + 12) != kDtypeF32) throw IoError(IoErrorKind::BadDtype, "unsupported tensor dtype");
  const std::uint32_t rank = get_u32(h + 16);
  if (rank != 2 && rank != 3) {
    throw IoError(IoErrorKind::BadShape, "tensor rank must be 2 or 3, got " + std::to_string(rank));
  }
  std::vector<std::uint64_t> shape;
  for (std::uint32_t i = 0; i < 3; ++i) {
    const std::uint64_t d = get_u64(h + 24 + 8 * i);
    if (i < rank) {
      shape.push_back(d);
    } else if (d != 0) {
      throw IoError(IoErrorKind::BadShape, "unused tensor dimensions must be zero");
    }
  }
  checked_numel(shape);
  return shape;
}

}  // namespace

std::string to_string(IoErrorKind k) {
  switch (k) {
    case IoErrorKind::Truncated: return "truncated";
    case IoErrorKind::BadMagic: return "bad_magic";
    case IoErrorKind::BadVersion: return "bad_version";
    case IoErrorKind::BadDtype: return "bad_dtype";
    case IoErrorKind::BadShape: return "bad_shape";
    case IoErrorKind::ShapeMismatch: return "shape_mismatch";
    case IoErrorKind::Checksum: return "checksum";
    case IoErrorKind::Schema: return "schema";
    case IoErrorKind::System: return "system";
  }
  return "system";
}

IoError::IoError(IoErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

std::uint64_t Tensor::numel() const {
  std::uint64_t n = shape.empty() ? 0 : 1;
  for (auto d : shape) n *= d;
  return n;
}

void write_tensor(const fs::path& path, const Tensor& t) {
  if (t.shape.size() != 2 && t.shape.size() != 3) {
    throw IoError(IoErrorKind::BadShape, "tensor rank must be 2 or 3");
  }
  const std::uint64_t n = checked_numel(t.shape);
  if (n != t.data.size()) throw IoError(IoErrorKind::ShapeMismatch, "tensor data do not match its shape");
  std::vector<unsigned char> buf(kHeaderBytes + 4 * n, 0);
  std::memcpy(buf.data(), kMagic, 8);
  put_u32(buf.data() + 8, kVersion);
  put_u32(buf.data() + 12, kDtypeF32);
  put_u32(buf.data() + 16, static_cast<std::uint32_t>(t.shape.size()));
  for (std::size_t i = 0; i < t.shape.size(); ++i) put_u64(buf.data() + 24 + 8 * i, t.shape[i]);
  unsigned char* p = buf.data() + kHeaderBytes;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(p, t.data.data(), 4 * n);
  } else {
    for (std::uint64_t i = 0; i < n; ++i) put_u32(p + 4 * i, std::bit_cast<std::uint32_t>(t.data[i]));
  }
  write_bytes_atomic(path, buf.data(), buf.size());
}

Tensor read_tensor(const fs::path& path) {
  const auto bytes = read_bytes(path);
  Tensor t;
  t.shape = parse_header(bytes.data(), bytes.size());
  const std::uint64_t n = t.numel();
  const std::uint64_t payload = bytes.size() - kHeaderBytes;
  if (payload < 4 * n) {
    throw IoError(IoErrorKind::Truncated, "tensor payload is " + std::to_string(payload) +
                                              " bytes, expected " + std::to_string(4 * n));
  }
  if (payload > 4 * n) {
    throw IoError(IoErrorKind::ShapeMismatch, "tensor payload is longer than its shape implies");
  }
  t.data.resize(n);
  const unsigned char* p = bytes.data() + kHeaderBytes;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(t.data.data(), p, 4 * n);
  } else {
    for (std::uint64_t i = 0; i < n; ++i) t.data[i] = std::bit_cast<float>(get_u32(p + 4 * i));
  }
  return t;
}

std::vector<std::uint64_t> read_tensor_shape(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoErrorKind::System, "cannot open " + path.string());
  std::array<unsigned char, kHeaderBytes> h{};
  in.read(reinterpret_cast<char*>(h.data()), kHeaderBytes);
  return parse_header(h.data(), static_cast<std::size_t>(in.gcount()));
}

Tensor to_tensor(const Image& image) {
  Tensor t;
  t.shape = {static_cast<std::uint64_t>(image.nx()), static_cast<std::uint64_t>(image.ny())};
  t.data.assign(image.values().begin(), image.values().end());
  return t;
}

Image to_image(const Tensor& t) {
  if (t.shape.size() != 2) throw IoError(IoErrorKind::BadShape, "expected a rank-2 tensor");
  Image img(static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]));
  std::copy(t.data.begin(), t.data.end(), img.values().begin());
  return img;
}

Tensor to_tensor(const ChannelData& data) {
  Tensor t;
  t.shape = {static_cast<std::uint64_t>(data.nt), static_cast<std::uint64_t>(data.ns),
             static_cast<std::uint64_t>(data.nr)};
  t.data.assign(data.traces.begin(), data.traces.end());
  return t;
}

ChannelData to_channel_data(const Tensor& t, double dt_s) {
  if (t.shape.size() != 3) throw IoError(IoErrorKind::BadShape, "channel data must be (nt, ns, nr)");
  ChannelData d(static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]),
                static_cast<int>(t.shape[2]), dt_s);
  std::copy(t.data.begin(), t.data.end(), d.traces.begin());
  return d;
}

Tensor to_tensor(const FragmentSet& set) {
  if (set.empty()) throw IoError(IoErrorKind::BadShape, "cannot store an empty fragment set");
  set.validate();
  const auto& first = set.fragments.front().image;
  Tensor t;
  t.shape = {set.size(), static_cast<std::uint64_t>(first.nx()), static_cast<std::uint64_t>(first.ny())};
  t.data.reserve(t.numel());
  for (const auto& f : set.fragments) t.data.insert(t.data.end(), f.image.values().begin(), f.image.values().end());
  return t;
}

Tensor to_tensor(const TissueMap& map) {
  Tensor t;
  t.shape = {static_cast<std::uint64_t>(map.nx()), static_cast<std::uint64_t>(map.ny())};
  t.data.reserve(t.numel());
  for (auto c : map.labels.values()) t.data.push_back(static_cast<float>(static_cast<int>(c)));
  return t;
}

TissueMap to_tissue_map(const Tensor& t, double spacing_m) {
  if (t.shape.size() != 2) throw IoError(IoErrorKind::BadShape, "label map must be rank 2");
  TissueMap map;
  map.spacing_m = spacing_m;
  map.labels = Array2D<TissueClass>(static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]));
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    const float v = t.data[i];
    const int label = static_cast<int>(v);
    if (static_cast<float>(label) != v || !is_valid_tissue_label(label)) {
      throw IoError(IoErrorKind::Schema, "invalid tissue label in label map");
    }
    map.labels.values()[i] = static_cast<TissueClass>(label);
  }
  return map;
}

void write_npy(const fs::path& path, const Tensor& t) {
  if (t.numel() != t.data.size() || t.shape.empty()) {
    throw IoError(IoErrorKind::ShapeMismatch, "tensor data do not match its shape");
  }
  std::ostringstream shape;
  shape << "(";
  for (std::size_t i = 0; i < t.shape.size(); ++i) shape << t.shape[i] << (t.shape.size() == 1 || i + 1 < t.shape.size() ? ", " : "");
  shape << ")";
  std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': " + shape.str() + ", }";
  const std::size_t total = 10 + header.size() + 1;
  header.append((64 - total % 64) % 64, ' ');
  header.push_back('\n');
  std::vector<unsigned char> buf;
  const unsigned char magic[8] = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0};
  buf.insert(buf.end(), magic, magic + 8);
  buf.push_back(static_cast<unsigned char>(header.size() & 0xff));
  buf.push_back(static_cast<unsigned char>(header.size() >> 8));
  buf.insert(buf.end(), header.begin(), header.end());
  const std::size_t off = buf.size();
  buf.resize(off + 4 * t.data.size());
  for (std::size_t i = 0; i < t.data.size(); ++i) put_u32(buf.data() + off + 4 * i, std::bit_cast<std::uint32_t>(t.data[i]));
  write_bytes_atomic(path, buf.data(), buf.size());
}

std::string sha256_hex(const std::vector<unsigned char>& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw IoError(IoErrorKind::System, "SHA-256 computation failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_bytes(path)); }

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_bytes_atomic(path, reinterpret_cast<const unsigned char*>(text.data()), text.size());
}

json file_entry(const fs::path& file, const fs::path& base_dir) {
  json e;
  e["path"] = fs::relative(file, base_dir).generic_string();
  e["sha256"] = sha256_file(file);
  e["shape"] = read_tensor_shape(file);
  return e;
}

void save_manifest(const fs::path& path, const json& manifest) {
  write_text_atomic(path, manifest.dump(2) + "\n");
}

json load_manifest(const fs::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw IoError(IoErrorKind::Schema, "manifest is not valid JSON: " + std::string(e.what()));
  }
}

void verify_manifest(const json& manifest, const fs::path& base_dir) {
  if (!manifest.is_object() || !manifest.contains("schema_version")) {
    throw IoError(IoErrorKind::Schema, "manifest has no schema_version");
  }
  if (manifest["schema_version"] != kManifestSchemaVersion) {
    throw IoError(IoErrorKind::Schema, "unsupported manifest schema version");
  }
  if (!manifest.contains("files")) return;
  for (const auto& [name, entry] : manifest["files"].items()) {
    const fs::path p = base_dir / entry.at("path").get<std::string>();
    if (!fs::exists(p)) throw IoError(IoErrorKind::System, "manifest file '" + name + "' is missing: " + p.string());
    if (sha256_file(p) != entry.at("sha256").get<std::string>()) {
      throw IoError(IoErrorKind::Checksum, "checksum mismatch for '" + name + "' (" + p.string() + ")");
    }
    if (entry.contains("shape") && read_tensor_shape(p) != entry["shape"].get<std::vector<std::uint64_t>>()) {
      throw IoError(IoErrorKind::ShapeMismatch, "shape mismatch for '" + name + "'");
    }
  }
}

json to_json(const PhantomSpec& s) {
  return json{{"nx", s.nx},
              {"ny", s.ny},
              {"spacing_m", s.spacing_m},
              {"seed", s.seed},
              {"layer_eccentricities", s.layer_eccentricities},
              {"skin", s.skin},
              {"cerebellum", s.cerebellum},
              {"clearance_m", s.clearance_m}};
}

PhantomSpec phantom_spec_from_json(const json& j) {
  PhantomSpec s;
  s.nx = j.value("nx", s.nx);
  s.ny = j.value("ny", s.ny);
  s.spacing_m = j.value("spacing_m", s.spacing_m);
  s.seed = j.value("seed", s.seed);
  s.layer_eccentricities = j.value("layer_eccentricities", s.layer_eccentricities);
  s.skin = j.value("skin", s.skin);
  s.cerebellum = j.value("cerebellum", s.cerebellum);
  s.clearance_m = j.value("clearance_m", s.clearance_m);
  return s;
}

json to_json(const SolverConfig& c) {
  return json{{"spatial_order", c.spatial_order},
              {"boundary_layer_cells", c.boundary_layer_cells},
              {"boundary_kind", to_string(c.boundary_kind)},
              {"cfl_safety", c.cfl_safety},
              {"store_stride", c.store_stride}};
}

SolverConfig solver_config_from_json(const json& j) {
  SolverConfig c;
  c.spatial_order = j.value("spatial_order", c.spatial_order);
  c.boundary_layer_cells = j.value("boundary_layer_cells", c.boundary_layer_cells);
  c.boundary_kind = boundary_kind_from_string(j.value("boundary_kind", to_string(c.boundary_kind)));
  c.cfl_safety = j.value("cfl_safety", c.cfl_safety);
  c.store_stride = j.value("store_stride", c.store_stride);
  c.validate();
  return c;
}

json to_json(const AcquisitionGeometry& g) {
  json elements = json::array();
  for (const auto& e : g.elements) elements.push_back({{"index", e.index}, {"x_m", e.position_m.x}, {"y_m", e.position_m.y}});
  json shots = json::array();
  for (const auto& s : g.shots) {
    shots.push_back({{"source", s.source_element},
                     {"receivers", s.receiver_elements},
                     {"sweep_id", s.sweep_id},
                     {"angle_deg", s.angle_deg}});
  }
  return json{{"mode", g.mode == AcquisitionMode::Full ? "full" : "partial"},
              {"elements", elements},
              {"shots", shots}};
}

AcquisitionGeometry geometry_from_json(const json& j) {
  AcquisitionGeometry g;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode != "full" && mode != "partial") throw IoError(IoErrorKind::Schema, "unknown acquisition mode " + mode);
  g.mode = mode == "full" ? AcquisitionMode::Full : AcquisitionMode::Partial;
  for (const auto& e : j.at("elements")) {
    g.elements.push_back({{e.at("x_m").get<double>(), e.at("y_m").get<double>()}, e.at("index").get<int>()});
  }
  for (const auto& s : j.at("shots")) {
    Shot shot;
    shot.source_element = s.at("source").get<int>();
    shot.receiver_elements = s.at("receivers").get<std::vector<int>>();
    shot.sweep_id = s.value("sweep_id", 0);
    shot.angle_deg = s.value("angle_deg", 0.0);
    g.shots.push_back(std::move(shot));
  }
  g.validate();
  return g;
}

json to_json(const PerturbationSpec& p) {
  json j{{"kind", to_string(p.kind)}, {"shift_px", p.shift_px}, {"seed", p.seed}};
  j["rotation_deg"] = p.rotation_deg ? json(*p.rotation_deg) : json(nullptr);
  return j;
}

PerturbationSpec perturbation_spec_from_json(const json& j) {
  PerturbationSpec p;
  p.kind = perturbation_kind_from_string(j.value("kind", std::string("Original")));
  p.shift_px = j.value("shift_px", p.shift_px);
  p.seed = j.value("seed", p.seed);
  if (j.contains("rotation_deg") && !j["rotation_deg"].is_null()) p.rotation_deg = j["rotation_deg"].get<int>();
  p.validate();
  return p;
}

json to_json(const Bandpass& b) {
  return json{{"low_hz", b.low_hz}, {"high_hz", b.high_hz}, {"reference_speed_mps", b.reference_speed_mps}};
}

Bandpass bandpass_from_json(const json& j) {
  Bandpass b;
  b.low_hz = j.value("low_hz", b.low_hz);
  b.high_hz = j.value("high_hz", b.high_hz);
  b.reference_speed_mps = j.value("reference_speed_mps", b.reference_speed_mps);
  return b;
}

json to_json(const ImagingOptions& o) {
  return json{{"subtract_direct", o.subtract_direct}, {"balance_traces", o.balance_traces}};
}

ImagingOptions imaging_options_from_json(const json& j) {
  ImagingOptions o;
  o.subtract_direct = j.value("subtract_direct", o.subtract_direct);
  o.balance_traces = j.value("balance_traces", o.balance_traces);
  return o;
}

}  // namespace tus
