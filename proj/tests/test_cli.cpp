#include <fstream>
#include <random>
#include <sstream>

#include "app.hpp"
#include "doctest.h"

using namespace tus;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("tus_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& s) const { return (path / s).string(); }
};

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result tus_run(std::vector<std::string> args) {
  args.insert(args.begin(), "tus");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = app::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<char> bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("metrics of a tensor against itself") {
  TempDir d;
  Tensor t;
  t.shape = {16, 16};
  for (int i = 0; i < 256; ++i) t.data.push_back(static_cast<float>((i * 37) % 17));
  write_tensor(d / "x.t", t);
  const Result r = tus_run({"metrics", "--a", d / "x.t", "--b", d / "x.t", "--out", d / "report.json"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["ssim"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(j["rmse"].get<double>() == 0.0);
  CHECK(json::parse(std::ifstream(d / "report.json")) == j);
}

TEST_CASE("usage errors exit 2 with an error object") {
  const Result r = tus_run({"metrics", "--bogus"});
  CHECK(r.code == 2);
  CHECK(json::parse(r.err)["error"]["kind"] == "usage");
  CHECK(tus_run({}).code == 2);
  CHECK(tus_run({"frobnicate"}).code == 2);
  const Result help = tus_run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("dataset") != std::string::npos);
}

TEST_CASE("missing inputs are reported") {
  TempDir d;
  Result r = tus_run({"simulate", "--out", d / "s"});
  CHECK(r.code == 1);
  CHECK(json::parse(r.err)["error"]["message"].get<std::string>().find("--manifest") != std::string::npos);
  r = tus_run({"metrics", "--a", d / "none.t", "--b", d / "none.t"});
  CHECK(r.code == 1);
  CHECK(json::parse(r.err)["error"]["io_kind"] == "system");
  r = tus_run({"phantom", "--nx", "48", "--ny", "48"});
  CHECK(r.code == 1);
}

TEST_CASE("simulate above the stability limit fails with a violation report") {
  TempDir d;
  REQUIRE(tus_run({"phantom", "--kind", "two-layer", "--nx", "48", "--ny", "48", "--out", d / "p"}).code == 0);
  const Result r = tus_run({"simulate", "--manifest", d / "p/manifest.json", "--dt", "1e-6", "--out", d / "s"});
  CHECK(r.code == 1);
  const json e = json::parse(r.err)["error"];
  CHECK(e["kind"] == "stability");
  CHECK(e["max_dt_s"].get<double>() > 0.0);
  CHECK(e["max_dt_s"].get<double>() < 1e-6);
  CHECK(e["courant"].get<double>() > 1.0);
  CHECK_FALSE(fs::exists(d.path / "s" / "data.tns"));
}

TEST_CASE("phantom, simulate, migrate and the fragment commands chain through manifests") {
  TempDir d;
  REQUIRE(tus_run({"phantom", "--kind", "two-layer", "--nx", "48", "--ny", "48", "--seed", "7", "--out", d / "p"}).code == 0);
  REQUIRE(tus_run({"simulate", "--manifest", d / "p/manifest.json", "--mode", "full", "--elements", "16", "--sweeps",
                   "8", "--dt", "1e-7", "--nt", "300", "--out", d / "s"})
              .code == 0);
  const json sm = load_manifest(d / "s/manifest.json");
  CHECK(sm["files"]["data"]["shape"] == json({300, 16, 16}));
  CHECK(sm["files"]["labels"]["path"] == "../p/labels.tns");
  REQUIRE(tus_run({"migrate", "--manifest", d / "s/manifest.json", "--out", d / "m"}).code == 0);
  const json mm = load_manifest(d / "m/manifest.json");
  CHECK(mm["files"]["fragments"]["shape"] == json({8, 48, 48}));
  CHECK(mm["fragments"]["view_ids"].size() == 8);
  CHECK(mm["imaging"]["options"]["subtract_direct"] == true);

  REQUIRE(tus_run({"subsample", "--manifest", d / "m/manifest.json", "--keep", "0.5", "--seed", "1", "--out", d / "u"}).code == 0);
  const json um = load_manifest(d / "u/manifest.json");
  CHECK(um["fragments"]["view_ids"].size() == 4);
  CHECK(um["fragments"]["n_views_total"] == 8);
  REQUIRE(tus_run({"perturb", "--manifest", d / "u/manifest.json", "--kind", "PM", "--shift", "5", "--out", d / "pm"}).code == 0);
  REQUIRE(tus_run({"noise", "--manifest", d / "pm/manifest.json", "--sigma", "0.05", "--seed", "2", "--out", d / "n"}).code == 0);
  const json nm = load_manifest(d / "n/manifest.json");
  CHECK(nm["noise"]["sigma"] == 0.05);
  CHECK(nm["perturbation"]["kind"] == "PM");
  CHECK(nm["subsample"]["keep_fraction"] == 0.5);
  verify_manifest(nm, d.path / "n");
  REQUIRE(tus_run({"stack", "--manifest", d / "n/manifest.json", "--out", d / "st"}).code == 0);
  REQUIRE(tus_run({"export-npy", "--in", d / "st/stack.tns", "--out", d / "st/stack.npy"}).code == 0);
  CHECK(fs::file_size(d.path / "st/stack.npy") == 128 + 48 * 48 * 4);

  const Result inv = tus_run({"invert", "--manifest", d / "s/manifest.json", "--epochs", "2", "--save-every", "1", "--out", d / "inv"});
  REQUIRE(inv.code == 0);
  const json im = load_manifest(d / "inv/manifest.json");
  CHECK(im["inversion"]["misfit_history"].size() == 3);
  CHECK(im["files"].contains("model_epoch_0002.tns"));

  // Tampering with an input is caught before any work happens.
  std::fstream f(d / "s/data.tns", std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(200);
  f.put('\x7f');
  f.close();
  const Result bad = tus_run({"migrate", "--manifest", d / "s/manifest.json", "--out", d / "m2"});
  CHECK(bad.code == 1);
  CHECK(json::parse(bad.err)["error"]["io_kind"] == "checksum");
}

TEST_CASE("partial dataset at desk scale") {
  TempDir d;
  const Result r = tus_run({"dataset", "--mode", "partial", "--slices", "4", "--nx", "64", "--ny", "64", "--dt", "1e-7",
                            "--nt", "400", "--seed", "3", "--out", d / "ds"});
  REQUIRE(r.code == 0);
  const json index = load_manifest(d / "ds/dataset.json");
  REQUIRE(index["slices"].size() == 4);
  std::vector<std::string> label_hashes;
  for (const auto& rel : index["slices"]) {
    const fs::path mp = d.path / "ds" / rel.get<std::string>();
    const json m = load_manifest(mp);
    verify_manifest(m, mp.parent_path());
    CHECK(m["files"]["data"]["shape"] == json({400, 50, 50}));
    CHECK(m["files"]["fragments"]["shape"] == json({50, 64, 64}));
    CHECK(m["files"]["model"]["shape"] == json({64, 64}));
    CHECK(m["acquisition"]["sweep_step_deg"] == 7.2);
    label_hashes.push_back(m["files"]["labels"]["sha256"]);
  }
  CHECK(label_hashes[0] != label_hashes[1]);

  REQUIRE(tus_run({"dataset", "--mode", "partial", "--slices", "1", "--nx", "64", "--ny", "64", "--dt", "1e-7", "--nt",
                   "400", "--seed", "3", "--out", d / "again"})
              .code == 0);
  for (const char* f : {"labels.tns", "model.tns", "data.tns", "fragments.tns", "stack.tns", "manifest.json"}) {
    CHECK(bytes(d.path / "ds/slice_000" / f) == bytes(d.path / "again/slice_000" / f));
  }
}
