#include "vsloc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "vsloc/error.hpp"
#include "vsloc/util.hpp"

namespace vsloc {
namespace {

constexpr std::uint64_t kTrainStream = 0x747261696e;
constexpr std::uint64_t kTestStream = 0x74657374;
constexpr std::uint64_t kFitStream = 0x676c6c696d;
constexpr const char* kUnits[] = {"deg", "deg", "cm", "1"};
constexpr double kUnitScale[] = {1.0, 1.0, 100.0, 1.0};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void log_line(const RunOptions& o, const std::string& s) {
  if (o.log) *o.log << s << std::endl;
}

DirectionGrid grid_from_json(const Json& j, const std::string& where) {
  StrictObject o(j, where);
  DirectionGrid g;
  if (o.has("azimuths") || o.has("elevations")) {
    o.read("azimuths", g.azimuths);
    o.read("elevations", g.elevations);
    std::string role = "train";
    o.read("role", role);
    g.role = role == "test" ? GridRole::test : GridRole::train;
    o.finish();
    if (g.azimuths.empty() || g.elevations.empty())
      throw ConfigError(where + ": azimuths and elevations must both be non-empty");
    return g;
  }
  std::string type = "train";
  o.read("type", type);
  if (type == "train" || type == "test") {
    g = build_grid(type == "train" ? GridRole::train : GridRole::test);
  } else if (type == "uniform") {
    std::size_t n_az = 9, n_el = 7;
    o.read("n_az", n_az);
    o.read("n_el", n_el);
    std::string role = "train";
    o.read("role", role);
    if (n_az < 2 || n_el < 2) throw ConfigError(where + ": uniform grid needs n_az, n_el >= 2");
    g = uniform_grid(n_az, n_el, role == "test" ? GridRole::test : GridRole::train);
  } else {
    throw ConfigError(where + ".type must be train, test or uniform, got '" + type + "'");
  }
  std::size_t az_step = 1, el_step = 1, az_offset = 0, el_offset = 0;
  o.read("az_step", az_step);
  o.read("el_step", el_step);
  o.read("az_offset", az_offset);
  o.read("el_offset", el_offset);
  o.finish();
  if (az_step == 0 || el_step == 0) throw ConfigError(where + ": steps must be >= 1");
  return g.subsample(az_step, el_step, az_offset, el_offset);
}

std::vector<MaterialProfile> sorted_by_mean(std::vector<MaterialProfile> v) {
  std::stable_sort(v.begin(), v.end(), [](const MaterialProfile& a, const MaterialProfile& b) {
    return a.mean_absorption_above_500() < b.mean_absorption_above_500();
  });
  return v;
}

std::vector<MaterialProfile> flat_materials(const std::vector<double>& values) {
  std::vector<MaterialProfile> out;
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("absorption " + fmt(v) + " outside [0, 1]");
    out.push_back(MaterialProfile::flat(v));
  }
  return out;
}

// Every `stride`-th material by increasing mean absorption, from `offset`.
std::vector<MaterialProfile> spread_materials(const std::vector<MaterialProfile>& registry,
                                              std::size_t stride, std::size_t offset) {
  const auto sorted = sorted_by_mean(registry);
  std::vector<MaterialProfile> out;
  for (std::size_t i = offset; i < sorted.size(); i += stride) out.push_back(sorted[i]);
  return out;
}

std::string scene_key(const SceneSpec& s) {
  std::string k = fmt(s.params.azimuth) + "/" + fmt(s.params.elevation) + "/" + fmt(s.params.range);
  for (double a : s.wall_absorption) k += "/" + fmt(a);
  return k;
}

AnnotatedDataset obtain_dataset(const std::string& label, const SceneSelection& sel,
                                const DatasetConfig& cfg, std::uint64_t master,
                                const RunOptions& opts) {
  const auto scenes = sel.scenes();
  std::optional<std::filesystem::path> cache_dir;
  if (opts.dataset_cache) {
    const std::string key =
        cfg.canonical_json() + "|" + sel.to_json().dump() + "|" + std::to_string(master);
    cache_dir = *opts.dataset_cache / ("ds-" + hex64(fnv1a64(key)));
    if (std::filesystem::exists(*cache_dir / "manifest.json")) {
      log_line(opts, label + ": reusing " + cache_dir->string());
      return load_dataset(*cache_dir);
    }
  }
  log_line(opts, label + ": simulating " + std::to_string(scenes.size()) + " scenes");
  AnnotatedDataset ds = generate_dataset(scenes, cfg, master, opts.jobs);
  if (!ds.errors.empty())
    log_line(opts, label + ": " + std::to_string(ds.errors.size()) + " scenes failed");
  if (cache_dir) save_dataset(ds, *cache_dir, true);
  return ds;
}

}  // namespace

Scale parse_scale(const std::string& s) {
  if (s == "desk") return Scale::desk;
  if (s == "paper") return Scale::paper;
  throw ConfigError("--scale must be desk or paper, got '" + s + "'");
}

std::string scale_name(Scale s) { return s == Scale::desk ? "desk" : "paper"; }

Json SceneSelection::to_json() const {
  Json mats = Json::array();
  for (const auto& m : materials) mats.push_back({{"name", m.name}, {"absorption", m.absorption}});
  return {{"azimuths", grid.azimuths},
          {"elevations", grid.elevations},
          {"ranges", ranges},
          {"materials", mats},
          {"diffusion", diffusion}};
}

SceneSelection selection_from_json(const Json& j, const std::string& where,
                                   const std::vector<MaterialProfile>& registry) {
  StrictObject o(j, where);
  SceneSelection s;
  const Json* g = o.child("grid");
  if (!g) throw ConfigError(where + ".grid is required");
  s.grid = grid_from_json(*g, where + ".grid");
  o.read("ranges", s.ranges);
  if (s.ranges.empty()) throw ConfigError(where + ".ranges must be non-empty");
  o.read("diffusion", s.diffusion);
  const bool has_abs = o.has("absorptions");
  const bool has_mat = o.has("materials");
  if (has_abs == has_mat)
    throw ConfigError(where + ": give exactly one of absorptions or materials");
  if (has_abs) {
    std::vector<double> values;
    o.read("absorptions", values);
    s.materials = flat_materials(values);
  } else {
    const Json* m = o.child("materials");
    if (m->is_string() && m->get<std::string>() == "all") {
      std::size_t stride = 1, offset = 0;
      o.read("material_stride", stride);
      o.read("material_offset", offset);
      if (stride == 0) throw ConfigError(where + ".material_stride must be >= 1");
      s.materials = spread_materials(registry, stride, offset);
    } else if (m->is_array()) {
      for (const auto& name : *m) {
        if (!name.is_string()) throw ConfigError(where + ".materials: expected names");
        s.materials.push_back(find_material(registry, name.get<std::string>()));
      }
    } else {
      throw ConfigError(where + ".materials must be \"all\" or a list of names");
    }
  }
  if (s.materials.empty()) throw ConfigError(where + ": no materials selected");
  o.finish();
  return s;
}

void ExperimentSpec::validate() const {
  if (train.size() == 0) throw ConfigError(name + ": training selection is empty");
  if (test.size() == 0) throw ConfigError(name + ": test selection is empty");
  if (mask.empty() || mask.size() > 4) throw ConfigError(name + ": mask needs 1 to 4 targets");
  std::set<int> seen;
  for (int m : mask)
    if (m < 0 || m > 3 || !seen.insert(m).second)
      throw ConfigError(name + ": mask entries must be distinct targets");
  if (K < 1) throw ConfigError(name + ": K must be >= 1");
  std::set<std::string> keys;
  for (const auto& s : train.scenes()) keys.insert(scene_key(s));
  for (const auto& s : test.scenes())
    if (keys.count(scene_key(s)))
      throw ConfigError(name + ": scene (az " + fmt(s.params.azimuth) + ", el " +
                        fmt(s.params.elevation) + ", range " + fmt(s.params.range) +
                        ") appears in both training and test selections");
}

DatasetConfig ExperimentSpec::dataset_config(bool diffusion) const {
  DatasetConfig c = base;
  c.simulation.diffusion = diffusion;
  return c;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{
      "single-config", "cross-config",   "full",     "full-no-diffusion",
      "direction-only", "dir+absorption", "dir+range"};
  return names;
}

ExperimentSpec make_preset(const std::string& name, Scale scale,
                           const std::vector<MaterialProfile>& registry) {
  const auto& names = preset_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string list;
    for (const auto& n : names) list += "\n  " + n;
    throw ConfigError("unknown experiment '" + name + "'; presets:" + list);
  }
  const bool desk = scale == Scale::desk;
  ExperimentSpec s;
  s.name = name;
  s.K = desk ? 8 : 25;
  s.base.simulation.n_rays = desk ? 2000 : 10000;

  if (name == "single-config" || name == "cross-config") {
    const auto& plaster = find_material(registry, "Rockwool backing behind plaster");
    s.train = {build_grid(GridRole::train), {1.0}, {plaster}, true};
    s.mask = {0, 1};
    if (name == "single-config") {
      s.test = {build_grid(GridRole::test), {1.0}, {plaster}, true};
    } else {
      s.test = {build_grid(GridRole::test),
                {2.5},
                {find_material(registry, "Rockwool core fabric panel (8pcf)")},
                true};
    }
    return s;
  }

  if (desk) {
    s.train = {uniform_grid(9, 7), {1.0, 1.6, 2.5}, flat_materials({0.0, 0.25, 0.5, 0.75, 1.0}),
               true};
    s.test = {build_grid(GridRole::test).subsample(2, 2), {1.0, 1.6, 2.5},
              spread_materials(registry, 3, 1), true};
  } else {
    s.train = {build_grid(GridRole::train), grid_ranges(), flat_materials(training_absorptions()),
               true};
    s.test = {build_grid(GridRole::test), grid_ranges(), sorted_by_mean(registry), true};
  }
  if (name == "full-no-diffusion") {
    s.train.diffusion = false;
    s.test.diffusion = false;
  } else if (name == "direction-only") {
    s.mask = {0, 1};
  } else if (name == "dir+absorption") {
    s.mask = {0, 1, 3};
  } else if (name == "dir+range") {
    s.mask = {0, 1, 2};
  }
  return s;
}

void apply_config(ExperimentSpec& spec, const Json& config,
                  const std::vector<MaterialProfile>& registry) {
  if (!config.is_object()) throw ConfigError("config: expected an object");
  if (config.contains("room")) spec.base.room = room_from_json(config.at("room"), spec.base.room);
  if (config.contains("head")) {
    spec.base.head = head_from_json(config.at("head"));
    spec.base.hrir_directory = config.at("head").value("directory", "");
  }
  if (config.contains("simulation"))
    spec.base.simulation = sim_config_from_json(config.at("simulation"), spec.base.simulation);
  if (config.contains("features"))
    spec.base.features = feature_config_from_json(config.at("features"), spec.base.features);
  if (config.contains("gllim")) {
    StrictObject g(config.at("gllim"), "gllim");
    g.read("K", spec.K);
    if (const Json* em = g.child("em")) spec.em = em_config_from_json(*em, spec.em);
    g.finish();
  }
  if (config.contains("experiment")) {
    StrictObject e(config.at("experiment"), "experiment");
    e.read("name", spec.name);
    if (const Json* t = e.child("train")) spec.train = selection_from_json(*t, "experiment.train", registry);
    if (const Json* t = e.child("test")) spec.test = selection_from_json(*t, "experiment.test", registry);
    if (const Json* m = e.child("mask")) {
      if (!m->is_array()) throw ConfigError("experiment.mask must be a list of target names");
      std::string joined;
      for (const auto& v : *m) {
        if (!v.is_string()) throw ConfigError("experiment.mask must be a list of target names");
        joined += (joined.empty() ? "" : ",") + v.get<std::string>();
      }
      spec.mask = parse_mask(joined);
    }
    e.finish();
  }
}

std::vector<int> parse_mask(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int idx = -1;
    for (int i = 0; i < 4; ++i)
      if (item == kParamNames[static_cast<std::size_t>(i)]) idx = i;
    if (idx < 0)
      throw ConfigError("unknown target '" + item +
                        "' (expected azimuth, elevation, range or absorption)");
    if (std::find(out.begin(), out.end(), idx) != out.end())
      throw ConfigError("target '" + item + "' listed twice");
    out.push_back(idx);
  }
  if (out.empty()) throw ConfigError("empty target list");
  return out;
}

ErrorReport::ErrorReport(std::vector<int> targets, std::vector<SampleError> samples)
    : targets_(std::move(targets)), samples_(std::move(samples)) {}

ErrorReport::Stat ErrorReport::stat(int target) const {
  const auto it = std::find(targets_.begin(), targets_.end(), target);
  if (it == targets_.end()) throw Error("target was not estimated");
  const auto col = static_cast<std::size_t>(it - targets_.begin());
  Stat s;
  s.count = samples_.size();
  if (s.count == 0) return s;
  for (const auto& e : samples_) s.mean += e.error[col];
  s.mean /= static_cast<double>(s.count);
  for (const auto& e : samples_) s.std += (e.error[col] - s.mean) * (e.error[col] - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(s.count));
  return s;
}

ErrorReport::Stat ErrorReport::baseline(int target) const {
  Stat s;
  s.count = samples_.size();
  if (s.count == 0) return s;
  auto truth = [&](const SampleError& e) { return e.truth.as_array()[static_cast<std::size_t>(target)]; };
  double mean_truth = 0.0;
  for (const auto& e : samples_) mean_truth += truth(e);
  mean_truth /= static_cast<double>(s.count);
  const double scale = kUnitScale[target];
  for (const auto& e : samples_) s.mean += std::abs(truth(e) - mean_truth) * scale;
  s.mean /= static_cast<double>(s.count);
  for (const auto& e : samples_) {
    const double d = std::abs(truth(e) - mean_truth) * scale - s.mean;
    s.std += d * d;
  }
  s.std = std::sqrt(s.std / static_cast<double>(s.count));
  return s;
}

void ErrorReport::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::string summary = "target,unit,mean,std,count,baseline_mean,baseline_std\n";
  for (int t : targets_) {
    const Stat s = stat(t);
    const Stat b = baseline(t);
    summary += std::string(kParamNames[static_cast<std::size_t>(t)]) + "," + kUnits[t] + "," +
               fmt(s.mean) + "," + fmt(s.std) + "," + std::to_string(s.count) + "," +
               fmt(b.mean) + "," + fmt(b.std) + "\n";
  }
  write_file_atomic(dir / "summary.csv", summary);

  std::string per = "index,material,true_azimuth,true_elevation,true_range,true_absorption";
  for (int t : targets_) {
    per += std::string(",pred_") + kParamNames[static_cast<std::size_t>(t)];
    per += std::string(",err_") + kParamNames[static_cast<std::size_t>(t)];
  }
  per += "\n";
  for (const auto& e : samples_) {
    per += std::to_string(e.index) + ",\"" + e.material + "\"";
    for (double v : e.truth.as_array()) per += "," + fmt(v);
    for (std::size_t c = 0; c < targets_.size(); ++c)
      per += "," + fmt(e.predicted[c]) + "," + fmt(e.error[c]);
    per += "\n";
  }
  write_file_atomic(dir / "per_sample.csv", per);

  auto header = [&](const std::string& lead) {
    std::string h = lead + ",count";
    for (int t : targets_) h += std::string(",") + kParamNames[static_cast<std::size_t>(t)] + "_mean";
    return h + "\n";
  };
  auto group_means = [&](const std::vector<const SampleError*>& g) {
    std::string row = "," + std::to_string(g.size());
    for (std::size_t c = 0; c < targets_.size(); ++c) {
      double m = 0.0;
      for (const auto* e : g) m += e->error[c];
      row += "," + (g.empty() ? std::string("") : fmt(m / static_cast<double>(g.size())));
    }
    return row + "\n";
  };

  std::string by_abs = header("bucket_lo,bucket_hi");
  for (int b = 0; b < 10; ++b) {
    const double lo = b / 10.0, hi = (b + 1) / 10.0;
    std::vector<const SampleError*> g;
    for (const auto& e : samples_) {
      const double a = e.truth.mean_wall_absorption;
      const int bucket = std::min(9, static_cast<int>(std::floor(a * 10.0)));
      if (bucket == b) g.push_back(&e);
    }
    by_abs += fmt(lo) + "," + fmt(hi) + group_means(g);
  }
  write_file_atomic(dir / "by_absorption.csv", by_abs);

  std::map<double, std::vector<const SampleError*>> by_r;
  for (const auto& e : samples_) by_r[e.truth.range].push_back(&e);
  std::string by_range = header("range_m");
  for (const auto& [r, g] : by_r) by_range += fmt(r) + group_means(g);
  write_file_atomic(dir / "by_range.csv", by_range);
}

ErrorReport evaluate(const GllimModel& model, const std::vector<int>& mask,
                     const AnnotatedDataset& test, unsigned jobs) {
  if (model.L() != mask.size())
    throw DimensionMismatch("model predicts " + std::to_string(model.L()) + " targets but " +
                            std::to_string(mask.size()) + " were requested");
  if (static_cast<std::size_t>(test.features.cols()) != model.D())
    throw DimensionMismatch("test features have dimension " +
                            std::to_string(test.features.cols()) + ", model expects " +
                            std::to_string(model.D()));
  std::vector<SampleError> samples(test.size());
  parallel_for(test.size(), jobs, [&](std::size_t r) {
    const auto row = static_cast<Eigen::Index>(r);
    const auto pred = model.inverse_predict(
        {test.features.row(row).data(), static_cast<std::size_t>(test.features.cols())});
    SampleError& e = samples[r];
    e.index = test.provenance[r].index;
    e.truth = test.provenance[r].scene.params;
    e.material = test.provenance[r].scene.material;
    const auto truth = e.truth.as_array();
    for (std::size_t c = 0; c < mask.size(); ++c) {
      const int t = mask[c];
      const double p = pred.u(static_cast<Eigen::Index>(c));
      e.predicted.push_back(p);
      e.error.push_back(std::abs(p - truth[static_cast<std::size_t>(t)]) * kUnitScale[t]);
    }
  });
  return ErrorReport(mask, std::move(samples));
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir,
                                const RunOptions& opts) {
  spec.validate();
  if (std::filesystem::exists(out_dir / "report" / "summary.csv") && !opts.force)
    throw Error(out_dir.string() + " already holds results; pass --force to overwrite");
  std::filesystem::create_directories(out_dir);

  Json resolved;
  resolved["name"] = spec.name;
  resolved["seed"] = opts.seed;
  resolved["K"] = spec.K;
  resolved["mask"] = Json::array();
  for (int m : spec.mask) resolved["mask"].push_back(kParamNames[static_cast<std::size_t>(m)]);
  resolved["em"] = to_json(spec.em);
  resolved["train"] = spec.train.to_json();
  resolved["test"] = spec.test.to_json();
  resolved["dataset"] = Json::parse(spec.base.canonical_json());
  write_file_atomic(out_dir / "experiment.json", resolved.dump(2) + "\n");

  const AnnotatedDataset train =
      obtain_dataset(spec.name + " train", spec.train, spec.dataset_config(spec.train.diffusion),
                     mix_seed(opts.seed, kTrainStream), opts);
  if (train.size() == 0) throw Error(spec.name + ": every training scene failed");

  EmConfig em = spec.em;
  em.jobs = opts.jobs;
  log_line(opts, spec.name + ": fitting GLLiM with K = " + std::to_string(spec.K) + " on " +
                     std::to_string(train.size()) + " rows");
  FitResult fit = fit_gllim(train.training_set(spec.mask), spec.K, em,
                            mix_seed(opts.seed, kFitStream));
  fit.model.save(out_dir / "model.gllim");
  std::string trace = "iteration,log_likelihood\n";
  for (std::size_t i = 0; i < fit.log_likelihood.size(); ++i)
    trace += std::to_string(i + 1) + "," + fmt(fit.log_likelihood[i]) + "\n";
  write_file_atomic(out_dir / "loglik.csv", trace);
  Json fit_info{{"iterations", fit.iterations}, {"converged", fit.converged},
                {"events", fit.events}};
  write_file_atomic(out_dir / "fit.json", fit_info.dump(2) + "\n");
  for (const auto& ev : fit.events) log_line(opts, spec.name + ": " + ev);

  const AnnotatedDataset test =
      obtain_dataset(spec.name + " test", spec.test, spec.dataset_config(spec.test.diffusion),
                     mix_seed(opts.seed, kTestStream), opts);
  if (test.size() == 0) throw Error(spec.name + ": every test scene failed");
  ErrorReport report = evaluate(fit.model, spec.mask, test, opts.jobs);
  report.write(out_dir / "report");
  return {std::move(report), fit.log_likelihood, train.size(), test.size(),
          train.errors.size() + test.errors.size()};
}

std::vector<ReferenceRow> reference_numbers(const std::string& preset) {
  if (preset == "single-config") return {{0, 1.67, 1.22}, {1, 8.78, 7.08}};
  if (preset == "cross-config") return {{0, 1.99, 1.42}, {1, 15.79, 12.39}};
  if (preset == "full") return {{0, 1.78, 1.34}, {1, 7.87, 6.45}, {2, 54.2, 29.65}, {3, 0.18, 0.14}};
  if (preset == "full-no-diffusion")
    return {{0, 2.16, 1.62}, {1, 11.3, 7.95}, {2, 56.8, 34.3}, {3, 0.80, 0.44}};
  if (preset == "direction-only") return {{0, 1.72, 1.43}, {1, 8.81, 7.81}};
  if (preset == "dir+absorption") return {{0, 2.00, 1.51}, {1, 8.45, 6.86}, {3, 0.22, 0.17}};
  if (preset == "dir+range") return {{0, 1.91, 1.52}, {1, 9.44, 7.55}, {2, 58.5, 32.4}};
  return {};
}

void write_comparison(const std::filesystem::path& dir,
                      const std::vector<std::pair<std::string, ErrorReport>>& reports,
                      Scale scale) {
  std::filesystem::create_directories(dir);
  std::string csv = "experiment,target,unit,mean,std,reference_mean,reference_std\n";
  std::string md = "# Results at " + scale_name(scale) + " scale\n\n";
  md += "Reference values were published for a measured dummy-head HRTF set and 82,026 "
        "training scenes. Runs here use the configured head model and grid, so absolute "
        "numbers are not directly comparable; compare the direction of effects between "
        "experiments.\n\n";
  md += "| experiment | target | mean | std | reference mean | reference std |\n";
  md += "|---|---|---|---|---|---|\n";
  for (const auto& [name, report] : reports) {
    const auto ref = reference_numbers(name);
    for (int t : report.targets()) {
      const auto s = report.stat(t);
      std::string rm, rs;
      for (const auto& r : ref)
        if (r.target == t) {
          rm = fmt(r.mean);
          rs = fmt(r.std);
        }
      const char* tn = kParamNames[static_cast<std::size_t>(t)];
      csv += name + "," + tn + "," + kUnits[t] + "," + fmt(s.mean) + "," + fmt(s.std) + "," + rm +
             "," + rs + "\n";
      char line[256];
      std::snprintf(line, sizeof line, "| %s | %s (%s) | %.3f | %.3f | %s | %s |\n", name.c_str(),
                    tn, kUnits[t], s.mean, s.std, rm.empty() ? "-" : rm.c_str(),
                    rs.empty() ? "-" : rs.c_str());
      md += line;
    }
  }
  write_file_atomic(dir / "comparison.csv", csv);
  write_file_atomic(dir / "comparison.md", md);
}

}  // namespace vsloc
