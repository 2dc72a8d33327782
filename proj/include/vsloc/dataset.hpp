#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "vsloc/features.hpp"
#include "vsloc/gllim.hpp"
#include "vsloc/head_model.hpp"
#include "vsloc/render.hpp"
#include "vsloc/room.hpp"
#include "vsloc/scene.hpp"

namespace vsloc {

enum class GridRole { train, test };

struct DirectionGrid {
  std::vector<double> azimuths;
  std::vector<double> elevations;
  GridRole role = GridRole::train;

  std::size_t size() const { return azimuths.size() * elevations.size(); }
  // Azimuth-major list of (azimuth, elevation) pairs.
  std::vector<std::pair<double, double>> directions() const;
  // Keeps every `az_step`-th azimuth and `el_step`-th elevation, starting at
  // the given offsets.
  DirectionGrid subsample(std::size_t az_step, std::size_t el_step, std::size_t az_offset = 0,
                          std::size_t el_offset = 0) const;
};

// train: 3 degree spacing over [-45, 45] x [-30, 30] (31 x 21 = 651).
// test: 6 degree spacing shifted by half a training step (15 x 10 = 150).
DirectionGrid build_grid(GridRole role);

// Evenly spaced n_az x n_el grid spanning [-45, 45] x [-30, 30].
DirectionGrid uniform_grid(std::size_t n_az, std::size_t n_el, GridRole role = GridRole::train);

// {0, 0.05, ..., 1}.
std::vector<double> training_absorptions();

// The six source ranges in metres: {1, 1.3, 1.6, 1.9, 2.2, 2.5}.
std::vector<double> grid_ranges();

struct MaterialProfile {
  std::string name;
  std::vector<double> absorption;  // at the six anchors 125 Hz .. 4 kHz

  static MaterialProfile flat(double value);
  double mean_absorption_above_500() const;
  // Population std over the 500 Hz .. 4 kHz anchors.
  double std_above_500() const;
};

inline constexpr double kMaterialStdLimit = 0.07;

// CSV with header name,a125,a250,a500,a1000,a2000,a4000. Throws FormatError
// on malformed rows, InvalidScene on values outside [0, 1] or (when
// `enforce_flatness`) on a std above 500 Hz of 0.07 or more.
std::vector<MaterialProfile> load_materials(const std::filesystem::path& path,
                                            bool enforce_flatness = true);
std::filesystem::path default_materials_path();
// Floor and ceiling profiles; not subject to the flatness limit.
std::filesystem::path default_surfaces_path();
const MaterialProfile& find_material(const std::vector<MaterialProfile>& registry,
                                     const std::string& name);

struct SceneSpec {
  SceneParams params;
  std::string material;                 // empty for flat training absorptions
  std::vector<double> wall_absorption;  // per anchor, applied to the four walls

  static SceneSpec make(double azimuth, double elevation, double range,
                        const MaterialProfile& material);
};

// Azimuth-major product grid x ranges x materials.
std::vector<SceneSpec> cartesian_scenes(const DirectionGrid& grid,
                                        const std::vector<double>& ranges,
                                        const std::vector<MaterialProfile>& materials);

std::uint64_t scene_seed(std::uint64_t master_seed, std::size_t index, const SceneParams& p);

struct DatasetConfig {
  RoomSpec room = RoomSpec::default_room();  // walls are replaced per scene
  HeadModel head = HeadModel::sphere();
  std::string hrir_directory;  // recorded in the manifest for measured heads
  SimConfig simulation{};
  FeatureConfig features{};

  // Canonical JSON of everything that affects the generated rows.
  std::string canonical_json() const;
  std::string hash() const;  // FNV-1a 64 of canonical_json, hex
};

struct SceneRecord {
  std::size_t index = 0;  // position in the requested scene list
  SceneSpec scene;
  std::uint64_t seed = 0;
};

struct SceneFailure {
  std::size_t index = 0;
  SceneSpec scene;
  std::string message;
};

struct AnnotatedDataset {
  RowMatrix features;  // N x D, values representable as float32
  RowMatrix params;    // N x 4 (azimuth, elevation, range, absorption)
  std::vector<SceneRecord> provenance;
  std::vector<SceneFailure> errors;
  std::uint64_t master_seed = 0;
  std::string config_hash;
  std::string config_json;

  std::size_t size() const { return provenance.size(); }
  // Params restricted to the given columns of (azimuth, elevation, range, absorption).
  TrainingSet training_set(const std::vector<int>& columns) const;
};

// Simulates and featurises one scene with the given derived seed.
FeatureVector generate_scene(const SceneSpec& scene, const DatasetConfig& config,
                             std::uint64_t seed);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

// Fail-soft: scenes that throw are listed in `errors` and skipped. Rows keep
// the input order whatever the worker count.
AnnotatedDataset generate_dataset(const std::vector<SceneSpec>& scenes,
                                  const DatasetConfig& config, std::uint64_t master_seed,
                                  unsigned jobs = 1, const ProgressFn& progress = {});

// Directory container: features.bin, features.json, params.csv,
// provenance.json, errors.json, manifest.json. Refuses to overwrite an
// existing manifest unless `force`.
void save_dataset(const AnnotatedDataset& ds, const std::filesystem::path& dir, bool force);
AnnotatedDataset load_dataset(const std::filesystem::path& dir);

std::string tool_version();

}  // namespace vsloc
