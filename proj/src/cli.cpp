#include "vsloc/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ostream>
#include <set>

#include "vsloc/config.hpp"
#include "vsloc/error.hpp"
#include "vsloc/experiment.hpp"
#include "vsloc/feature_io.hpp"
#include "vsloc/rt60.hpp"
#include "vsloc/util.hpp"
#include "vsloc/wav.hpp"

namespace vsloc {
namespace {

namespace fs = std::filesystem;

struct Globals {
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::string config;
  bool force = false;
  std::string scale = "desk";
};

// Raised when a command finished but some scenes failed.
struct Partial {};

const std::set<std::string> kTopLevelKeys{"room",     "head",  "simulation", "features",
                                          "gllim",    "experiment", "scene"};

Json load_config(const Globals& g) {
  if (g.config.empty()) return Json::object();
  Json j = parse_json_file(g.config);
  if (!j.is_object()) throw ConfigError(g.config + ": expected a JSON object");
  for (const auto& [key, value] : j.items())
    if (!kTopLevelKeys.count(key))
      throw ConfigError(g.config + ": unknown section '" + key +
                        "' (allowed: room, head, simulation, features, gllim, experiment, scene)");
  return j;
}

void refuse_existing(const fs::path& p, bool force) {
  if (fs::exists(p) && !force)
    throw Error(p.string() + " already exists; pass --force to overwrite");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

ExperimentSpec resolve_spec(const Globals& g, const std::string& preset, const Json& config,
                            const std::vector<MaterialProfile>& registry) {
  ExperimentSpec spec = make_preset(preset, parse_scale(g.scale), registry);
  apply_config(spec, config, registry);
  return spec;
}

// --- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string out;
  std::optional<double> azimuth, elevation, range, absorption;
  std::string material;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a, std::ostream& out) {
  const Json config = load_config(g);
  const auto registry = load_materials(default_materials_path());
  ExperimentSpec base;
  apply_config(base, config, registry);
  const DatasetConfig& dc = base.base;

  SourceSpec source;
  double absorption = 0.16;
  std::string material;
  if (config.contains("scene")) {
    StrictObject s(config.at("scene"), "scene");
    s.read("azimuth", source.azimuth);
    s.read("elevation", source.elevation);
    s.read("range", source.range);
    s.read("absorption", absorption);
    s.read("material", material);
    s.finish();
  }
  if (a.azimuth) source.azimuth = *a.azimuth;
  if (a.elevation) source.elevation = *a.elevation;
  if (a.range) source.range = *a.range;
  if (a.absorption) {
    absorption = *a.absorption;
    material.clear();
  }
  if (!a.material.empty()) material = a.material;

  const MaterialProfile mat =
      material.empty() ? MaterialProfile::flat(absorption) : find_material(registry, material);
  RoomSpec room = dc.room;
  room.set_walls(mat.absorption);
  room.validate();

  const fs::path wav_path = a.out;
  fs::path sidecar = wav_path;
  sidecar += ".json";
  refuse_existing(wav_path, g.force);
  refuse_existing(sidecar, g.force);

  const BinauralRir rir = simulate_brir(room, source, dc.head, dc.simulation, g.seed);
  if (wav_path.has_parent_path()) fs::create_directories(wav_path.parent_path());
  wav::write_float32(wav_path, {rir.sample_rate, {rir.left, rir.right}});

  Json meta;
  meta["sample_rate"] = rir.sample_rate;
  meta["samples"] = rir.size();
  meta["channels"] = {"left", "right"};
  meta["seed"] = g.seed;
  meta["source"] = {{"azimuth", source.azimuth},
                    {"elevation", source.elevation},
                    {"range", source.range}};
  meta["walls"] = {{"material", mat.name},
                   {"absorption", mat.absorption},
                   {"mean_absorption", mat.mean_absorption_above_500()}};
  meta["max_order"] = resolve_max_order(room, source_position(room, source), dc.simulation);
  try {
    meta["rt60"] = estimate_rt60(rir);
  } catch (const EstimationUnreliable&) {
    meta["rt60"] = nullptr;
  }
  meta["room"] = to_json(room);
  meta["head"] = head_to_json(dc.head, dc.hrir_directory);
  meta["simulation"] = to_json(dc.simulation);
  meta["version"] = tool_version();
  write_file_atomic(sidecar, meta.dump(2) + "\n");
  out << "wrote " << wav_path.string() << " (" << rir.size() << " samples x 2 channels at "
      << rir.sample_rate << " Hz)\n";
  return kExitOk;
}

// --- dataset --------------------------------------------------------------

struct DatasetArgs {
  std::string out;
  std::string split = "train";
  std::string preset = "full";
  bool dry_run = false;
};

int cmd_dataset(const Globals& g, const DatasetArgs& a, std::ostream& out, std::ostream& err) {
  const Json config = load_config(g);
  const auto registry = load_materials(default_materials_path());
  const ExperimentSpec spec = resolve_spec(g, a.preset, config, registry);
  const SceneSelection& sel = a.split == "train" ? spec.train : spec.test;
  const DatasetConfig dc = spec.dataset_config(sel.diffusion);
  dc.features.validate();
  const std::size_t n = sel.size();
  const std::size_t d = dc.features.dimension();
  if (a.dry_run) {
    out << "N = " << n << "\nD = " << d << "\n";
    return kExitOk;
  }
  if (a.out.empty()) throw ConfigError("dataset: --out is required unless --dry-run is given");
  const fs::path dir = a.out;
  if (fs::exists(dir / "manifest.json") && !g.force)
    throw Error(dir.string() + " already holds a dataset; pass --force to overwrite");

  const auto t0 = std::chrono::steady_clock::now();
  std::size_t next_report = 0;
  const AnnotatedDataset ds = generate_dataset(
      sel.scenes(), dc, g.seed, g.jobs, [&](std::size_t done, std::size_t total) {
        if (done >= next_report || done == total) {
          err << "simulated " << done << "/" << total << "\n";
          next_report = done + std::max<std::size_t>(1, total / 10);
        }
      });
  if (ds.size() == 0) {
    err << "every scene failed; first error: "
        << (ds.errors.empty() ? std::string("none") : ds.errors.front().message) << "\n";
    return kExitRuntime;
  }
  save_dataset(ds, dir, g.force);
  out << "N = " << ds.size() << "\nD = " << ds.features.cols() << "\n"
      << "failed = " << ds.errors.size() << "\n"
      << "time = " << fixed(seconds_since(t0), 1) << " s\n";
  if (!ds.errors.empty()) throw Partial{};
  return kExitOk;
}

// --- train ----------------------------------------------------------------

struct TrainArgs {
  std::string data, model, trace, mask, preset = "full";
  std::optional<int> K;
};

int cmd_train(const Globals& g, const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const Json config = load_config(g);
  const auto registry = load_materials(default_materials_path());
  const ExperimentSpec spec = resolve_spec(g, a.preset, config, registry);
  const std::vector<int> mask = a.mask.empty() ? spec.mask : parse_mask(a.mask);
  const int K = a.K.value_or(spec.K);
  const fs::path model_path = a.model;
  const fs::path trace_path = a.trace.empty() ? fs::path(a.model + ".loglik.csv") : fs::path(a.trace);
  refuse_existing(model_path, g.force);
  refuse_existing(trace_path, g.force);

  const AnnotatedDataset ds = load_dataset(a.data);
  EmConfig em = spec.em;
  em.jobs = g.jobs;
  const auto t0 = std::chrono::steady_clock::now();
  const FitResult fit = fit_gllim(ds.training_set(mask), K, em, g.seed);
  for (const auto& ev : fit.events) err << ev << "\n";
  if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());
  fit.model.save(model_path);
  std::string trace = "iteration,log_likelihood\n";
  for (std::size_t i = 0; i < fit.log_likelihood.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, fit.log_likelihood[i]);
    trace += buf;
  }
  write_file_atomic(trace_path, trace);
  out << "K = " << fit.model.K() << ", D = " << fit.model.D() << ", L = " << fit.model.L()
      << "\niterations = " << fit.iterations << (fit.converged ? " (converged)" : " (not converged)")
      << "\ntime = " << fixed(seconds_since(t0), 1) << " s\n";
  return kExitOk;
}

// --- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string model, data, out;
};

std::vector<int> mask_from_names(const std::vector<std::string>& names) {
  std::string joined;
  for (const auto& n : names) joined += (joined.empty() ? "" : ",") + n;
  return parse_mask(joined);
}

int cmd_eval(const Globals& g, const EvalArgs& a, std::ostream& out) {
  const fs::path dir = a.out;
  if (fs::exists(dir / "summary.csv") && !g.force)
    throw Error(dir.string() + " already holds a report; pass --force to overwrite");
  const GllimModel model = GllimModel::load(a.model);
  const AnnotatedDataset ds = load_dataset(a.data);
  const auto mask = mask_from_names(model.param_names());
  const ErrorReport report = evaluate(model, mask, ds, g.jobs);
  report.write(dir);
  for (int t : report.targets()) {
    const auto s = report.stat(t);
    out << kParamNames[static_cast<std::size_t>(t)] << ": " << fixed(s.mean, 3) << " +- "
        << fixed(s.std, 3) << "\n";
  }
  return kExitOk;
}

// --- reproduce ------------------------------------------------------------

struct ReproduceArgs {
  std::string name;
  std::string out = "results";
  bool list = false;
};

int cmd_reproduce(const Globals& g, const ReproduceArgs& a, std::ostream& out,
                  std::ostream& err) {
  if (a.list) {
    for (const auto& n : preset_names()) out << n << "\n";
    return kExitOk;
  }
  if (a.name.empty()) {
    std::string list;
    for (const auto& n : preset_names()) list += "\n  " + n;
    throw ConfigError("reproduce: name an experiment or 'all'; presets:" + list);
  }
  const Json config = load_config(g);
  const auto registry = load_materials(default_materials_path());
  const Scale scale = parse_scale(g.scale);
  std::vector<std::string> names;
  if (a.name == "all") {
    names = preset_names();
  } else {
    make_preset(a.name, scale, registry);  // rejects unknown names before any work
    names = {a.name};
  }
  const fs::path root = a.out;
  RunOptions opts;
  opts.jobs = g.jobs;
  opts.force = g.force;
  opts.seed = g.seed;
  opts.log = &err;
  opts.dataset_cache = root / "datasets";

  std::vector<std::pair<std::string, ErrorReport>> reports;
  std::size_t failed = 0;
  for (const auto& name : names) {
    ExperimentSpec spec = make_preset(name, scale, registry);
    apply_config(spec, config, registry);
    spec.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentResult r = run_experiment(spec, root / name, opts);
    err << name << ": done in " << fixed(seconds_since(t0), 1) << " s\n";
    failed += r.failed_scenes;
    reports.emplace_back(name, std::move(r.report));
  }
  write_comparison(root, reports, scale);
  out << read_file(root / "comparison.md");
  if (failed > 0) {
    err << failed << " scenes failed; see errors.json in " << (root / "datasets").string() << "\n";
    throw Partial{};
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Binaural room simulation, feature extraction and GLLiM localisation"};
  app.name("vsloc");
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--config", g.config, "JSON config file (see docs/config.md)");
  app.add_flag("--force", g.force, "Overwrite existing outputs");
  app.add_option("--scale", g.scale, "Preset scale")->check(CLI::IsMember({"desk", "paper"}))
      ->capture_default_str();

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Render one binaural RIR to a WAV file");
  sim->add_option("--out,-o", sa.out, "Output WAV path")->required();
  sim->add_option("--azimuth", sa.azimuth, "Source azimuth, degrees");
  sim->add_option("--elevation", sa.elevation, "Source elevation, degrees");
  sim->add_option("--range", sa.range, "Source range, metres");
  auto* abs_opt = sim->add_option("--absorption", sa.absorption, "Flat wall absorption");
  sim->add_option("--material", sa.material, "Wall material from the registry")
      ->excludes(abs_opt);

  DatasetArgs da;
  auto* dset = app.add_subcommand("dataset", "Simulate an annotated feature dataset");
  dset->add_option("--out,-o", da.out, "Output directory");
  dset->add_option("--split", da.split, "Scene selection")->check(CLI::IsMember({"train", "test"}))
      ->capture_default_str();
  dset->add_option("--preset", da.preset, "Experiment preset supplying the selection")
      ->capture_default_str();
  dset->add_flag("--dry-run", da.dry_run, "Print N and D without simulating");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Fit GLLiM on a dataset");
  train->add_option("--data,-d", ta.data, "Dataset directory")->required();
  train->add_option("--model,-m", ta.model, "Output model path")->required();
  train->add_option("--trace", ta.trace, "Log-likelihood trace CSV (default <model>.loglik.csv)");
  train->add_option("--mask", ta.mask, "Targets, e.g. azimuth,elevation");
  train->add_option("-K,--components", ta.K, "Number of mixture components");
  train->add_option("--preset", ta.preset, "Preset supplying defaults for K and mask")
      ->capture_default_str();

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Evaluate a model on a test dataset");
  ev->add_option("--model,-m", ea.model, "Model path")->required();
  ev->add_option("--data,-d", ea.data, "Test dataset directory")->required();
  ev->add_option("--out,-o", ea.out, "Report directory")->required();

  ReproduceArgs ra;
  auto* rep = app.add_subcommand("reproduce", "Run a preset experiment end to end");
  rep->add_option("name", ra.name, "Preset name or 'all'");
  rep->add_option("--out,-o", ra.out, "Results directory")->capture_default_str();
  rep->add_flag("--list", ra.list, "List presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(g, sa, out);
    if (dset->parsed()) return cmd_dataset(g, da, out, err);
    if (train->parsed()) return cmd_train(g, ta, out, err);
    if (ev->parsed()) return cmd_eval(g, ea, out);
    if (rep->parsed()) return cmd_reproduce(g, ra, out, err);
  } catch (const Partial&) {
    return kExitPartial;
  } catch (const InvalidScene& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace vsloc
