#include "vsloc/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "vsloc/config.hpp"
#include "vsloc/error.hpp"
#include "vsloc/feature_io.hpp"
#include "vsloc/util.hpp"

#ifndef VSLOC_DATA_DIR
#define VSLOC_DATA_DIR "data"
#endif

namespace vsloc {
namespace {

constexpr const char* kVersion = "1.0.0";
const char* kMaterialHeader[] = {"name", "a125", "a250", "a500", "a1000", "a2000", "a4000"};

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

// Splits one CSV line; double quotes protect commas.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json scene_json(const SceneSpec& s) {
  return {{"azimuth", s.params.azimuth},
          {"elevation", s.params.elevation},
          {"range", s.params.range},
          {"absorption", s.params.mean_wall_absorption},
          {"material", s.material},
          {"wall_absorption", s.wall_absorption}};
}

SceneSpec scene_from_json(const Json& j) {
  SceneSpec s;
  s.params.azimuth = j.at("azimuth").get<double>();
  s.params.elevation = j.at("elevation").get<double>();
  s.params.range = j.at("range").get<double>();
  s.params.mean_wall_absorption = j.at("absorption").get<double>();
  s.material = j.at("material").get<std::string>();
  s.wall_absorption = j.at("wall_absorption").get<std::vector<double>>();
  return s;
}

}  // namespace

std::vector<std::pair<double, double>> DirectionGrid::directions() const {
  std::vector<std::pair<double, double>> out;
  out.reserve(size());
  for (double az : azimuths)
    for (double el : elevations) out.emplace_back(az, el);
  return out;
}

DirectionGrid DirectionGrid::subsample(std::size_t az_step, std::size_t el_step,
                                       std::size_t az_offset, std::size_t el_offset) const {
  if (az_step == 0 || el_step == 0) throw std::invalid_argument("subsample: zero step");
  DirectionGrid g;
  g.role = role;
  for (std::size_t i = az_offset; i < azimuths.size(); i += az_step) g.azimuths.push_back(azimuths[i]);
  for (std::size_t i = el_offset; i < elevations.size(); i += el_step)
    g.elevations.push_back(elevations[i]);
  return g;
}

DirectionGrid build_grid(GridRole role) {
  DirectionGrid g;
  g.role = role;
  if (role == GridRole::train) {
    for (int i = 0; i <= 30; ++i) g.azimuths.push_back(-45.0 + 3.0 * i);
    for (int j = 0; j <= 20; ++j) g.elevations.push_back(-30.0 + 3.0 * j);
  } else {
    for (int i = 0; i < 15; ++i) g.azimuths.push_back(-43.5 + 6.0 * i);
    for (int j = 0; j < 10; ++j) g.elevations.push_back(-28.5 + 6.0 * j);
  }
  return g;
}

DirectionGrid uniform_grid(std::size_t n_az, std::size_t n_el, GridRole role) {
  if (n_az < 2 || n_el < 2) throw std::invalid_argument("uniform_grid: need at least 2 x 2");
  DirectionGrid g;
  g.role = role;
  for (std::size_t i = 0; i < n_az; ++i)
    g.azimuths.push_back(-45.0 + 90.0 * static_cast<double>(i) / static_cast<double>(n_az - 1));
  for (std::size_t j = 0; j < n_el; ++j)
    g.elevations.push_back(-30.0 + 60.0 * static_cast<double>(j) / static_cast<double>(n_el - 1));
  return g;
}

std::vector<double> training_absorptions() {
  std::vector<double> v;
  for (int i = 0; i <= 20; ++i) v.push_back(i / 20.0);
  return v;
}

std::vector<double> grid_ranges() { return {1.0, 1.3, 1.6, 1.9, 2.2, 2.5}; }

MaterialProfile MaterialProfile::flat(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "flat %.2f", value);
  return {buf, std::vector<double>(6, value)};
}

double MaterialProfile::mean_absorption_above_500() const {
  if (absorption.size() != 6) throw InvalidScene("material '" + name + "' needs six values");
  return (absorption[2] + absorption[3] + absorption[4] + absorption[5]) / 4.0;
}

double MaterialProfile::std_above_500() const {
  const double m = mean_absorption_above_500();
  double s = 0.0;
  for (std::size_t i = 2; i < 6; ++i) s += (absorption[i] - m) * (absorption[i] - m);
  return std::sqrt(s / 4.0);
}

std::vector<MaterialProfile> load_materials(const std::filesystem::path& path,
                                            bool enforce_flatness) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw FormatError(std::string("materials: ") + e.what());
  }
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  std::vector<MaterialProfile> out;
  const std::string where = path.filename().string();
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    const auto cells = split_csv(line);
    if (!header) {
      if (cells.size() != 7)
        throw FormatError(where + ": header must be name,a125,a250,a500,a1000,a2000,a4000");
      for (int i = 0; i < 7; ++i)
        if (cells[i] != kMaterialHeader[i])
          throw FormatError(where + ": header must be name,a125,a250,a500,a1000,a2000,a4000");
      header = true;
      continue;
    }
    const std::string at = where + " line " + std::to_string(line_no);
    if (cells.size() != 7)
      throw FormatError(at + ": expected 7 fields, got " + std::to_string(cells.size()));
    MaterialProfile m;
    m.name = cells[0];
    if (m.name.empty()) throw FormatError(at + ": empty material name");
    for (int i = 1; i < 7; ++i) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cells[i], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cells[i].size() || cells[i].empty())
        throw FormatError(at + ": '" + cells[i] + "' is not a number");
      if (!(v >= 0.0 && v <= 1.0))
        throw InvalidScene(at + ": absorption " + cells[i] + " of '" + m.name +
                           "' lies outside [0, 1]");
      m.absorption.push_back(v);
    }
    if (enforce_flatness && !(m.std_above_500() < kMaterialStdLimit)) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    ": '%s' has absorption std %.4f over 500 Hz - 4 kHz (limit %.2f)",
                    m.name.c_str(), m.std_above_500(), kMaterialStdLimit);
      throw InvalidScene(at + buf);
    }
    for (const auto& prev : out)
      if (prev.name == m.name) throw FormatError(at + ": duplicate material '" + m.name + "'");
    out.push_back(std::move(m));
  }
  if (!header) throw FormatError(where + ": missing header");
  return out;
}

std::filesystem::path default_materials_path() {
  return std::filesystem::path(VSLOC_DATA_DIR) / "materials.csv";
}

std::filesystem::path default_surfaces_path() {
  return std::filesystem::path(VSLOC_DATA_DIR) / "surfaces.csv";
}

const MaterialProfile& find_material(const std::vector<MaterialProfile>& registry,
                                     const std::string& name) {
  for (const auto& m : registry)
    if (m.name == name) return m;
  std::string names;
  for (const auto& m : registry) names += "\n  " + m.name;
  throw ConfigError("material '" + name + "' is not in the registry; available:" + names);
}

SceneSpec SceneSpec::make(double azimuth, double elevation, double range,
                          const MaterialProfile& material) {
  SceneSpec s;
  s.params = {azimuth, elevation, range, material.mean_absorption_above_500()};
  s.material = material.name;
  s.wall_absorption = material.absorption;
  return s;
}

std::vector<SceneSpec> cartesian_scenes(const DirectionGrid& grid,
                                        const std::vector<double>& ranges,
                                        const std::vector<MaterialProfile>& materials) {
  std::vector<SceneSpec> out;
  out.reserve(grid.size() * ranges.size() * materials.size());
  for (const auto& [az, el] : grid.directions())
    for (double r : ranges)
      for (const auto& m : materials) out.push_back(SceneSpec::make(az, el, r, m));
  return out;
}

std::uint64_t scene_seed(std::uint64_t master_seed, std::size_t index, const SceneParams& p) {
  std::uint64_t s = mix_seed(master_seed, index);
  for (double v : p.as_array()) s = mix_seed(s, double_bits(v));
  return s;
}

std::string DatasetConfig::canonical_json() const {
  Json j;
  j["room"] = to_json(room);
  j["head"] = head_to_json(head, hrir_directory);
  j["simulation"] = to_json(simulation);
  j["features"] = to_json(features);
  return j.dump();
}

std::string DatasetConfig::hash() const { return hex64(fnv1a64(canonical_json())); }

TrainingSet AnnotatedDataset::training_set(const std::vector<int>& columns) const {
  TrainingSet ts;
  ts.y = features;
  ts.u.resize(params.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] < 0 || columns[c] >= 4) throw DimensionMismatch("parameter column out of range");
    ts.u.col(static_cast<Eigen::Index>(c)) = params.col(columns[c]);
    ts.param_names.push_back(kParamNames[static_cast<std::size_t>(columns[c])]);
  }
  return ts;
}

FeatureVector generate_scene(const SceneSpec& scene, const DatasetConfig& config,
                             std::uint64_t seed) {
  RoomSpec room = config.room;
  room.set_walls(scene.wall_absorption);
  const SourceSpec src{scene.params.azimuth, scene.params.elevation, scene.params.range};
  const BinauralRir rir = simulate_brir(room, src, config.head, config.simulation,
                                        mix_seed(seed, 1));
  return scene_to_feature(rir, config.features, mix_seed(seed, 2));
}

AnnotatedDataset generate_dataset(const std::vector<SceneSpec>& scenes,
                                  const DatasetConfig& config, std::uint64_t master_seed,
                                  unsigned jobs, const ProgressFn& progress) {
  config.simulation.validate();
  config.features.validate();
  const std::size_t n = scenes.size();
  const std::size_t d = config.features.dimension();
  std::vector<std::vector<double>> rows(n);
  std::vector<std::string> failures(n);
  std::vector<char> ok(n, 0);
  std::mutex progress_mu;
  std::size_t done = 0;
  parallel_for(n, jobs, [&](std::size_t i) {
    const std::uint64_t seed = scene_seed(master_seed, i, scenes[i].params);
    try {
      const FeatureVector fv = generate_scene(scenes[i], config, seed);
      if (fv.dimension() != d)
        throw DimensionMismatch("feature dimension " + std::to_string(fv.dimension()) +
                                " differs from the configured " + std::to_string(d));
      rows[i] = fv.values;
      ok[i] = 1;
    } catch (const Error& e) {
      failures[i] = e.what();
    }
    if (progress) {
      std::lock_guard lock(progress_mu);
      progress(++done, n);
    }
  });

  AnnotatedDataset ds;
  ds.master_seed = master_seed;
  ds.config_hash = config.hash();
  ds.config_json = config.canonical_json();
  std::size_t good = 0;
  for (char c : ok) good += c ? 1 : 0;
  ds.features.resize(static_cast<Eigen::Index>(good), static_cast<Eigen::Index>(d));
  ds.params.resize(static_cast<Eigen::Index>(good), 4);
  std::size_t r = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!ok[i]) {
      ds.errors.push_back({i, scenes[i], failures[i]});
      continue;
    }
    const auto row = static_cast<Eigen::Index>(r);
    for (std::size_t j = 0; j < d; ++j) ds.features(row, static_cast<Eigen::Index>(j)) = rows[i][j];
    const auto p = scenes[i].params.as_array();
    for (int j = 0; j < 4; ++j) ds.params(row, j) = p[static_cast<std::size_t>(j)];
    ds.provenance.push_back({i, scenes[i], scene_seed(master_seed, i, scenes[i].params)});
    ++r;
  }
  round_to_float32(ds.features);
  return ds;
}

void save_dataset(const AnnotatedDataset& ds, const std::filesystem::path& dir, bool force) {
  if (std::filesystem::exists(dir / "manifest.json") && !force)
    throw Error(dir.string() + " already holds a dataset; pass --force to overwrite");
  std::filesystem::create_directories(dir);
  // The manifest goes last and is removed first, so a directory with a
  // manifest always holds a complete dataset.
  std::filesystem::remove(dir / "manifest.json");

  write_feature_binary(dir / "features.bin", ds.features);
  FeatureLayout layout;
  {
    const Json cfg = Json::parse(ds.config_json);
    FeatureConfig fc = feature_config_from_json(cfg.at("features"));
    layout = FeatureLayout::of(fc);
  }
  if (ds.size() > 0 && layout.dimension() != static_cast<std::size_t>(ds.features.cols()))
    throw DimensionMismatch("features have " + std::to_string(ds.features.cols()) +
                            " columns but the feature config implies " +
                            std::to_string(layout.dimension()));
  write_feature_sidecar(dir / "features.json", layout, ds.size());

  std::string csv = "index,azimuth,elevation,range,absorption,material\n";
  Json prov = Json::array();
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const auto& rec = ds.provenance[r];
    const auto& p = rec.scene.params;
    csv += std::to_string(rec.index) + "," + fmt(p.azimuth) + "," + fmt(p.elevation) + "," +
           fmt(p.range) + "," + fmt(p.mean_wall_absorption) + ",\"" + rec.scene.material + "\"\n";
    Json row = scene_json(rec.scene);
    row["index"] = rec.index;
    row["seed"] = rec.seed;
    prov.push_back(std::move(row));
  }
  write_file_atomic(dir / "params.csv", csv);
  write_file_atomic(dir / "provenance.json", Json{{"rows", prov}}.dump(1) + "\n");

  Json errs = Json::array();
  for (const auto& f : ds.errors) {
    Json row = scene_json(f.scene);
    row["index"] = f.index;
    row["message"] = f.message;
    errs.push_back(std::move(row));
  }
  write_file_atomic(dir / "errors.json", Json{{"failures", errs}}.dump(1) + "\n");

  Json manifest;
  manifest["format"] = "vsloc-dataset";
  manifest["version"] = 1;
  manifest["tool_version"] = tool_version();
  manifest["master_seed"] = ds.master_seed;
  manifest["config_hash"] = ds.config_hash;
  manifest["config"] = Json::parse(ds.config_json);
  manifest["rows"] = ds.size();
  manifest["dimension"] = ds.features.cols();
  manifest["failed"] = ds.errors.size();
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

AnnotatedDataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "manifest.json"))
    throw FormatError(dir.string() + ": no manifest.json (not a dataset directory)");
  AnnotatedDataset ds;
  try {
    const Json manifest = Json::parse(read_file(dir / "manifest.json"));
    if (manifest.value("format", "") != "vsloc-dataset")
      throw FormatError(dir.string() + ": manifest format is not vsloc-dataset");
    ds.master_seed = manifest.at("master_seed").get<std::uint64_t>();
    ds.config_hash = manifest.at("config_hash").get<std::string>();
    ds.config_json = manifest.at("config").dump();
    ds.features = read_feature_binary(dir / "features.bin");
    const Json prov = Json::parse(read_file(dir / "provenance.json"));
    for (const auto& row : prov.at("rows")) {
      SceneRecord rec;
      rec.index = row.at("index").get<std::size_t>();
      rec.seed = row.at("seed").get<std::uint64_t>();
      rec.scene = scene_from_json(row);
      ds.provenance.push_back(std::move(rec));
    }
    const Json errs = Json::parse(read_file(dir / "errors.json"));
    for (const auto& row : errs.at("failures"))
      ds.errors.push_back({row.at("index").get<std::size_t>(), scene_from_json(row),
                           row.at("message").get<std::string>()});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(dir.string() + ": " + e.what());
  }
  if (static_cast<std::size_t>(ds.features.rows()) != ds.provenance.size())
    throw FormatError(dir.string() + ": features.bin and provenance.json disagree on row count");
  ds.params.resize(ds.features.rows(), 4);
  for (std::size_t r = 0; r < ds.provenance.size(); ++r) {
    const auto p = ds.provenance[r].scene.params.as_array();
    for (int j = 0; j < 4; ++j) ds.params(static_cast<Eigen::Index>(r), j) = p[static_cast<std::size_t>(j)];
  }
  return ds;
}

std::string tool_version() { return kVersion; }

}  // namespace vsloc
