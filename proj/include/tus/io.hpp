#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "tus/acquisition.hpp"
#include "tus/augment.hpp"
#include "tus/imaging.hpp"
#include "tus/phantom.hpp"
#include "tus/solver.hpp"

namespace tus {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

enum class IoErrorKind {
  Truncated,
  BadMagic,
  BadVersion,
  BadDtype,
  BadShape,
  ShapeMismatch,
  Checksum,
  Schema,
  System,
};

std::string to_string(IoErrorKind k);

class IoError : public std::runtime_error {
 public:
  IoError(IoErrorKind kind, const std::string& message);
  IoErrorKind kind() const { return kind_; }

 private:
  IoErrorKind kind_;
};

/// Row-major float32 array of rank 2 or 3.
struct Tensor {
  std::vector<std::uint64_t> shape;
  std::vector<float> data;

  std::uint64_t numel() const;
};

/// 64-byte header: "TUSTENSR", u32 version = 1, u32 dtype = 1 (f32), u32 rank,
/// u32 reserved, u64 dims[3], zero padding; then the little-endian payload.
/// Written to a temporary file and renamed into place.
void write_tensor(const fs::path& path, const Tensor& t);
Tensor read_tensor(const fs::path& path);
/// Shape from the header only.
std::vector<std::uint64_t> read_tensor_shape(const fs::path& path);

Tensor to_tensor(const Image& image);
Image to_image(const Tensor& t);
Tensor to_tensor(const ChannelData& data);
ChannelData to_channel_data(const Tensor& t, double dt_s);
/// (n_fragments, nx, ny).
Tensor to_tensor(const FragmentSet& set);
Tensor to_tensor(const TissueMap& map);
TissueMap to_tissue_map(const Tensor& t, double spacing_m);

/// Writes a NumPy .npy file (format 1.0, '<f4', C order).
void write_npy(const fs::path& path, const Tensor& t);

std::string sha256_hex(const std::vector<unsigned char>& bytes);
std::string sha256_file(const fs::path& path);

/// Writes text through a temporary file and a rename.
void write_text_atomic(const fs::path& path, const std::string& text);

inline constexpr int kManifestSchemaVersion = 1;

/// {"path": relative to base_dir, "sha256", "shape"} for a tensor file.
json file_entry(const fs::path& file, const fs::path& base_dir);

void save_manifest(const fs::path& path, const json& manifest);
json load_manifest(const fs::path& path);
/// Checks the schema version and that every entry under "files" exists and
/// matches its checksum and shape; throws IoError otherwise.
void verify_manifest(const json& manifest, const fs::path& base_dir);

json to_json(const PhantomSpec& s);
PhantomSpec phantom_spec_from_json(const json& j);
json to_json(const SolverConfig& c);
SolverConfig solver_config_from_json(const json& j);
json to_json(const AcquisitionGeometry& g);
AcquisitionGeometry geometry_from_json(const json& j);
json to_json(const PerturbationSpec& p);
PerturbationSpec perturbation_spec_from_json(const json& j);
json to_json(const Bandpass& b);
Bandpass bandpass_from_json(const json& j);
json to_json(const ImagingOptions& o);
ImagingOptions imaging_options_from_json(const json& j);

}  // namespace tus
