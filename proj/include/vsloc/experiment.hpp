#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vsloc/config.hpp"
#include "vsloc/dataset.hpp"
#include "vsloc/gllim.hpp"

namespace vsloc {

enum class Scale { desk, paper };
Scale parse_scale(const std::string& s);
std::string scale_name(Scale s);

// Which scenes to simulate: directions x ranges x wall materials.
struct SceneSelection {
  DirectionGrid grid;
  std::vector<double> ranges;
  std::vector<MaterialProfile> materials;
  bool diffusion = true;

  std::vector<SceneSpec> scenes() const { return cartesian_scenes(grid, ranges, materials); }
  std::size_t size() const { return grid.size() * ranges.size() * materials.size(); }
  Json to_json() const;
};

// {"grid": {...}, "ranges": [...], "absorptions": [...] | "materials": [...] | "all",
//  "diffusion": bool}; see docs/config.md.
SceneSelection selection_from_json(const Json& j, const std::string& where,
                                   const std::vector<MaterialProfile>& registry);

struct ExperimentSpec {
  std::string name;
  SceneSelection train;
  SceneSelection test;
  std::vector<int> mask{0, 1, 2, 3};  // columns of (azimuth, elevation, range, absorption)
  int K = 8;
  EmConfig em{};
  DatasetConfig base{};  // room, head, simulation and feature settings

  // Throws ConfigError if either selection is empty or they share a scene.
  void validate() const;
  DatasetConfig dataset_config(bool diffusion) const;
};

const std::vector<std::string>& preset_names();
// Throws ConfigError listing the presets for an unknown name.
ExperimentSpec make_preset(const std::string& name, Scale scale,
                           const std::vector<MaterialProfile>& registry);

// Applies "room", "head", "simulation", "features", "gllim" and "experiment"
// sections of a config document on top of `spec`.
void apply_config(ExperimentSpec& spec, const Json& config,
                  const std::vector<MaterialProfile>& registry);

struct SampleError {
  std::size_t index = 0;
  SceneParams truth;
  std::string material;
  std::vector<double> predicted;  // one per estimated target
  std::vector<double> error;      // absolute, in report units
};

// Absolute errors per estimated target. Angles in degrees, range in cm,
// absorption unitless.
class ErrorReport {
 public:
  ErrorReport(std::vector<int> targets, std::vector<SampleError> samples);

  const std::vector<int>& targets() const { return targets_; }
  const std::vector<SampleError>& samples() const { return samples_; }

  struct Stat {
    double mean = 0.0;
    double std = 0.0;
    std::size_t count = 0;
  };
  // Error statistics for a target column (0..3); throws if not estimated.
  Stat stat(int target) const;
  // Error of always predicting the test-set mean of the target.
  Stat baseline(int target) const;

  // summary.csv, per_sample.csv, by_absorption.csv, by_range.csv
  void write(const std::filesystem::path& dir) const;

 private:
  std::vector<int> targets_;
  std::vector<SampleError> samples_;
};

ErrorReport evaluate(const GllimModel& model, const std::vector<int>& mask,
                     const AnnotatedDataset& test, unsigned jobs = 1);

struct RunOptions {
  unsigned jobs = 1;
  bool force = false;
  std::uint64_t seed = 0;
  std::ostream* log = nullptr;
  // Datasets are cached here by content hash and reused when present.
  std::optional<std::filesystem::path> dataset_cache;
};

struct ExperimentResult {
  ErrorReport report;
  std::vector<double> log_likelihood;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::size_t failed_scenes = 0;
};

// dataset -> train -> eval. Writes model.gllim, loglik.csv and the report
// CSVs under out_dir.
ExperimentResult run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir,
                                const RunOptions& opts);

// Published reference numbers for the preset (mean, std per target), if any.
struct ReferenceRow {
  int target;
  double mean;
  double std;
};
std::vector<ReferenceRow> reference_numbers(const std::string& preset);

// comparison.csv and comparison.md for the given preset reports.
void write_comparison(const std::filesystem::path& dir,
                      const std::vector<std::pair<std::string, ErrorReport>>& reports,
                      Scale scale);

// Maps "azimuth,elevation,..." to column indices.
std::vector<int> parse_mask(const std::string& text);

}  // namespace vsloc
