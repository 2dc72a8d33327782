#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support/fixtures.hpp"
#include "vsloc/cli.hpp"
#include "vsloc/config.hpp"
#include "vsloc/dataset.hpp"
#include "vsloc/gllim.hpp"
#include "vsloc/util.hpp"

using namespace vsloc;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "vsloc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("vsloc_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_file(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (char c : line) {
      if (c == '"') quoted = !quoted;
      else if (c == ',' && !quoted) {
        cells.push_back(cell);
        cell.clear();
      } else cell += c;
    }
    cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

// A dataset whose features are an exact affine function of the four
// parameters. The feature config (8-sample window, 4 kHz cutoff) keeps three
// bins, so D = 9.
void write_affine_dataset(const fs::path& dir, std::uint64_t seed) {
  const auto ts = fixture::affine(120, 9, 4, seed);
  AnnotatedDataset ds;
  ds.features = ts.y.cast<float>().cast<double>();
  ds.params = ts.u;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    SceneRecord r;
    r.index = i;
    r.scene.params = {ts.u(i, 0), ts.u(i, 1), ts.u(i, 2), ts.u(i, 3)};
    ds.provenance.push_back(r);
  }
  ds.config_hash = "synthetic";
  ds.config_json = R"({"features": {"sample_rate": 16000, "window_ms": 0.5, "cutoff": 4000}})";
  save_dataset(ds, dir, true);
}

}  // namespace

TEST_CASE("simulate writes a two-channel WAV and a sidecar") {
  const auto dir = scratch("simulate");
  const auto a = run({"--seed", "7", "simulate", "-o", (dir / "a.wav").string()});
  REQUIRE(a.code == 0);
  CHECK(fs::exists(dir / "a.wav.json"));
  const auto meta = parse_json_file(dir / "a.wav.json");
  CHECK(meta["channels"].size() == 2);
  CHECK(meta["seed"] == 7);
  const auto b = run({"--seed", "7", "simulate", "-o", (dir / "b.wav").string()});
  REQUIRE(b.code == 0);
  CHECK(read_file(dir / "a.wav") == read_file(dir / "b.wav"));
  CHECK(run({"--seed", "7", "simulate", "-o", (dir / "a.wav").string()}).code != 0);
  CHECK(run({"--seed", "7", "--force", "simulate", "-o", (dir / "a.wav").string()}).code == 0);
  fs::remove_all(dir);
}

TEST_CASE("simulate names the coordinate of a source outside the room") {
  const auto dir = scratch("outside");
  const auto r = run({"simulate", "-o", (dir / "x.wav").string(), "--azimuth", "0", "--range", "5"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("source x =") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "x.wav"));
  fs::remove_all(dir);
}

TEST_CASE("config files are schema-strict") {
  const auto dir = scratch("config");
  std::ofstream(dir / "bad.json") << R"({"room": {"width": 6, "colour": "red"}})";
  const auto r = run({"--config", (dir / "bad.json").string(), "simulate", "-o", (dir / "x.wav").string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("colour") != std::string::npos);
  std::ofstream(dir / "top.json") << R"({"rooms": {}})";
  CHECK(run({"--config", (dir / "top.json").string(), "dataset", "--dry-run"}).code == kExitUsage);
  std::ofstream(dir / "ok.json") << R"({"scene": {"azimuth": 20, "elevation": 5, "range": 1.3, "material": "Cork tiles on concrete"},
                                       "simulation": {"duration": 0.25, "n_rays": 300}})";
  const auto ok = run({"--config", (dir / "ok.json").string(), "simulate", "-o", (dir / "ok.wav").string()});
  CHECK(ok.code == 0);
  if (ok.code == 0) {
    const auto meta = parse_json_file(dir / "ok.wav.json");
    CHECK(meta["samples"] == 4000);
    CHECK(meta["walls"]["material"] == "Cork tiles on concrete");
  }
  fs::remove_all(dir);
}

TEST_CASE("dataset dry run counts") {
  const auto paper = run({"--scale", "paper", "dataset", "--dry-run"});
  CHECK(paper.code == 0);
  CHECK(paper.out.find("N = 82026") != std::string::npos);
  CHECK(paper.out.find("D = 1443") != std::string::npos);
  const auto desk = run({"dataset", "--dry-run"});
  CHECK(desk.out.find("N = 945") != std::string::npos);
}

TEST_CASE("dataset refuses to overwrite without --force") {
  const auto dir = scratch("dataset");
  std::ofstream(dir / "cfg.json") << R"({"experiment": {"train": {"grid": {"azimuths": [0, 10], "elevations": [0]},
      "ranges": [1.0], "absorptions": [0.4]}}, "simulation": {"duration": 0.2, "n_rays": 100},
      "features": {"noise_duration": 0.3}})";
  const std::vector<std::string> base{"--config", (dir / "cfg.json").string(), "dataset", "-o",
                                      (dir / "ds").string()};
  const auto first = run(base);
  REQUIRE(first.code == 0);
  CHECK(first.out.find("N = 2") != std::string::npos);
  CHECK(run(base).code != 0);
  auto forced = base;
  forced.insert(forced.begin(), "--force");
  CHECK(run(forced).code == 0);
  fs::remove_all(dir);
}

TEST_CASE("train and eval on an exact affine dataset") {
  const auto dir = scratch("train");
  write_affine_dataset(dir / "data", 3);
  const auto model = (dir / "m.gllim").string();
  const auto t = run({"--seed", "4", "train", "-d", (dir / "data").string(), "-m", model, "-K", "1"});
  REQUIRE(t.code == 0);
  const auto trace = read_csv(model + ".loglik.csv");
  REQUIRE(trace.size() >= 2);
  for (std::size_t i = 2; i < trace.size(); ++i)
    CHECK(std::stod(trace[i][1]) >= std::stod(trace[i - 1][1]) - 1e-9 * std::abs(std::stod(trace[i - 1][1])));

  const auto e = run({"eval", "-m", model, "-d", (dir / "data").string(), "-o", (dir / "report").string()});
  REQUIRE(e.code == 0);
  const auto summary = read_csv(dir / "report" / "summary.csv");
  const auto samples = read_csv(dir / "report" / "per_sample.csv");
  REQUIRE(summary.size() == 5);
  for (std::size_t t_row = 1; t_row < summary.size(); ++t_row) {
    const double mean = std::stod(summary[t_row][2]);
    CHECK(mean < 1e-3);
    // summary mean equals the mean of the per-sample error column
    const std::string col = "err_" + summary[t_row][0];
    const auto it = std::find(samples[0].begin(), samples[0].end(), col);
    REQUIRE(it != samples[0].end());
    const auto c = static_cast<std::size_t>(it - samples[0].begin());
    double sum = 0.0;
    for (std::size_t r = 1; r < samples.size(); ++r) sum += std::stod(samples[r][c]);
    CHECK(std::abs(sum / static_cast<double>(samples.size() - 1) - mean) < 1e-9);
  }
  CHECK(fs::exists(dir / "report" / "by_absorption.csv"));
  CHECK(fs::exists(dir / "report" / "by_range.csv"));

  // same seed, same model file
  const auto again = (dir / "m2.gllim").string();
  REQUIRE(run({"--seed", "4", "train", "-d", (dir / "data").string(), "-m", again, "-K", "1"}).code == 0);
  CHECK(read_file(model) == read_file(again));

  // a direction-only mask gives L = 2
  const auto dir_only = (dir / "dir.gllim").string();
  REQUIRE(run({"train", "-d", (dir / "data").string(), "-m", dir_only, "-K", "2", "--mask",
               "azimuth,elevation"}).code == 0);
  CHECK(GllimModel::load(dir_only).L() == 2);
  fs::remove_all(dir);
}

TEST_CASE("eval rejects a model of the wrong dimension") {
  const auto dir = scratch("mismatch");
  write_affine_dataset(dir / "data", 3);
  auto ts = fixture::affine(60, 5, 2, 1);
  ts.param_names = {"azimuth", "elevation"};
  fit_gllim(ts, 1, {}, 1).model.save(dir / "m.gllim");
  const auto e = run({"eval", "-m", (dir / "m.gllim").string(), "-d", (dir / "data").string(), "-o",
                      (dir / "r").string()});
  CHECK(e.code == kExitRuntime);
  CHECK(e.err.find("dimension") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("reproduce lists presets and rejects unknown names") {
  const auto list = run({"reproduce", "--list"});
  CHECK(list.code == 0);
  std::istringstream in(list.out);
  std::vector<std::string> names;
  for (std::string l; std::getline(in, l);) names.push_back(l);
  CHECK(names == std::vector<std::string>{"single-config", "cross-config", "full", "full-no-diffusion",
                                          "direction-only", "dir+absorption", "dir+range"});
  const auto bad = run({"reproduce", "table-9"});
  CHECK(bad.code == kExitUsage);
  CHECK(bad.err.find("dir+range") != std::string::npos);
}

TEST_CASE("usage errors exit with 1") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"--scale", "huge", "dataset", "--dry-run"}).code == kExitUsage);
  CHECK(run({"--help"}).code == 0);
}
