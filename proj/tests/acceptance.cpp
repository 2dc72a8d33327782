// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Pass criterion numbers to run a subset.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "vsloc/cli.hpp"
#include "vsloc/dataset.hpp"
#include "vsloc/error.hpp"
#include "vsloc/features.hpp"
#include "vsloc/image_source.hpp"
#include "vsloc/rain_diffusion.hpp"
#include "vsloc/render.hpp"
#include "vsloc/rt60.hpp"
#include "vsloc/util.hpp"

using namespace vsloc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [violated]");
  }
};

std::string num(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path g_work;

int cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "vsloc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  if (code != 0) std::fprintf(stderr, "vsloc exited %d: %s\n", code, e.str().c_str());
  return code;
}

struct SummaryRow {
  double mean = 0.0, baseline = 0.0;
};

std::map<std::string, SummaryRow> read_summary(const fs::path& report_dir) {
  std::map<std::string, SummaryRow> rows;
  std::istringstream in(read_file(report_dir / "summary.csv"));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    rows[cells.at(0)] = {std::stod(cells.at(2)), std::stod(cells.at(5))};
  }
  return rows;
}

// Runs a preset once per (seed, jobs) into its own directory, reusing a
// completed run.
fs::path reproduce(const std::string& preset, std::uint64_t seed, unsigned jobs,
                   const std::string& tag = "") {
  const fs::path dir = g_work / ("seed" + std::to_string(seed) + "_jobs" + std::to_string(jobs) + tag);
  if (fs::exists(dir / preset / "report" / "summary.csv")) return dir / preset;
  const int code = cli({"--seed", std::to_string(seed), "--jobs", std::to_string(jobs), "--force",
                        "reproduce", preset, "--out", dir.string()});
  if (code != 0) throw Error(preset + " run failed with exit code " + std::to_string(code));
  return dir / preset;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

SourceSpec spec_towards(const RoomSpec& room, Vec3 p) {
  const Vec3 d = p - room.receiver;
  const double r = d.norm();
  return {std::atan2(d.y, d.x) * 180.0 / std::numbers::pi,
          std::asin(d.z / r) * 180.0 / std::numbers::pi, r};
}

double energy(const BinauralRir& rir) {
  double e = 0.0;
  for (double v : rir.left) e += v * v;
  for (double v : rir.right) e += v * v;
  return e;
}

// --- criteria ---------------------------------------------------------------

Outcome image_source_oracle() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::size_t mismatched = 0, images = 0;
  double worst = 0.0;
  for (int scene = 0; scene < 20; ++scene) {
    const RoomSpec room = oracle::random_room(rng);
    const Vec3 src = oracle::random_point(room, rng);
    auto got = enumerate_image_sources(room, src, 4);
    auto want = oracle::mirror_images(room, src, 4);
    images += want.size();
    if (got.size() != want.size()) {
      ++mismatched;
      continue;
    }
    auto by_pos = [](const auto& a, const auto& b) {
      return std::tie(a.position.x, a.position.y, a.position.z) <
             std::tie(b.position.x, b.position.y, b.position.z);
    };
    std::sort(got.begin(), got.end(), by_pos);
    std::sort(want.begin(), want.end(), by_pos);
    for (std::size_t i = 0; i < got.size(); ++i) {
      worst = std::max(worst, (got[i].position - want[i].position).norm());
      if (got[i].order != want[i].order) ++mismatched;
    }
  }
  const double dt = seconds_since(t0);
  o.require(mismatched == 0, "count/order mismatches " + std::to_string(mismatched) + " over " +
                                 std::to_string(images) + " images");
  o.require(worst <= 1e-9, "max position error " + sci(worst) + " m");
  o.require(dt < 10.0, "runtime " + num(dt, 2) + " s");
  return o;
}

Outcome energy_properties() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(77);
  double worst_fraction = 0.0;
  for (int scene = 0; scene < 100; ++scene) {
    const RoomSpec room = oracle::random_room(rng);
    Vec3 p = oracle::random_point(room, rng);
    while ((p - room.receiver).norm() < 0.3) p = oracle::random_point(room, rng);
    const auto h = rain_diffusion(room, spec_towards(room, p), room.receiver, 500, 0.5,
                                  static_cast<std::uint64_t>(scene));
    for (std::size_t b = 0; b < h.bands(); ++b) worst_fraction = std::max(worst_fraction, h.band_total(b));
  }
  o.require(worst_fraction <= 1.0, "max deposited/emitted per band " + num(worst_fraction, 4));

  std::size_t violations = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    double prev = std::numeric_limits<double>::infinity();
    for (int step = 0; step < 10; ++step) {
      const RoomSpec room = RoomSpec::default_room(0.1 * step);
      const double e = energy(simulate_brir(room, {30, 10, 1.6}, HeadModel::sphere(), SimConfig{}, seed));
      if (e > prev) ++violations;
      prev = e;
    }
  }
  o.require(violations == 0, "energy increases with absorption: " + std::to_string(violations) + " of 45 steps");
  const double dt = seconds_since(t0);
  o.require(dt < 120.0, "runtime " + num(dt, 1) + " s");
  return o;
}

Outcome rt60_sanity() {
  Outcome o;
  const RoomSpec furnished = RoomSpec::default_room(0.16);
  const double rt = estimate_rt60(simulate_brir(furnished, {20, 0, 1.6}, HeadModel::sphere(), SimConfig{}, 1));
  o.require(rt >= 0.09 && rt <= 1.0, "RT60 with mean-0.16 walls " + num(rt) + " s");

  const RoomSpec half = RoomSpec::default_room(0.5);
  const double measured = estimate_rt60(simulate_brir(half, {20, 0, 1.6}, HeadModel::sphere(), SimConfig{}, 1));
  double sabine_area = 0.0;
  for (int s = 0; s < kSurfaceCount; ++s) {
    const auto& a = half.surfaces[static_cast<std::size_t>(s)].absorption;
    sabine_area += half.surface_area(static_cast<Surface>(s)) *
                   std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
  }
  const double sabine = 0.161 * half.volume() / sabine_area;
  const double ratio = measured / sabine;
  o.require(ratio >= 0.5 && ratio <= 2.0, "alpha 0.5: RT60 " + num(measured) + " s vs Sabine " +
                                              num(sabine) + " s (ratio " + num(ratio, 2) + ")");
  return o;
}

Outcome feature_contract() {
  Outcome o;
  const FeatureConfig cfg;
  o.require(cfg.retained_bins() == 481 && cfg.dimension() == 1443,
            "F' = " + std::to_string(cfg.retained_bins()) + ", D = " + std::to_string(cfg.dimension()));
  // Free field: fully absorbing walls leave only the direct path.
  RoomSpec free_field = RoomSpec::default_room();
  for (auto& surface : free_field.surfaces) surface = SurfaceProfile::flat(1.0);
  const RoomSpec& anechoic = free_field;
  const RoomSpec room = RoomSpec::default_room();
  double worst_free = 0.0, worst_bias = 0.0, worst_modulus = 0.0;
  std::size_t dim = 0;
  auto pair = [&](const RoomSpec& r, double az) {
    return std::pair{
        scene_to_feature(simulate_brir(r, {az, 0, 1.5}, HeadModel::sphere(), SimConfig{}, 3), cfg, 4),
        scene_to_feature(simulate_brir(r, {-az, 0, 1.5}, HeadModel::sphere(), SimConfig{}, 3), cfg, 4)};
  };
  for (double az : {10.0, 20.0, 30.0, 40.0}) {
    for (const RoomSpec* r : {&anechoic, &room}) {
      const auto [fl, fr] = pair(*r, az);
      dim = fl.dimension();
      double abs_sum = 0.0, bias = 0.0;
      for (std::size_t f = 0; f < fl.f_prime; ++f) {
        abs_sum += std::abs(fl.ild()[f] + fr.ild()[f]);
        bias += fl.ild()[f] + fr.ild()[f];
        for (const auto* fv : {&fl, &fr})
          worst_modulus =
              std::max(worst_modulus, std::abs(std::hypot(fv->ipd_real()[f], fv->ipd_imag()[f]) - 1.0));
      }
      const auto bins = static_cast<double>(fl.f_prime);
      if (r == &anechoic) worst_free = std::max(worst_free, abs_sum / bins);
      else worst_bias = std::max(worst_bias, std::abs(bias) / bins);
    }
  }
  o.require(dim == 1443, "scene feature dimension " + std::to_string(dim));
  o.require(worst_free < 0.5, "free-field mean |ILD(+a) + ILD(-a)| " + sci(worst_free) + " dB");
  o.detail += "; in the default room the signed mean is " + num(worst_bias) +
              " dB (independent diffuse tails per ear)";
  o.require(worst_modulus < 1e-6, "IPD | |z| - 1 | max " + sci(worst_modulus));
  return o;
}

Outcome gllim_correctness() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  bool monotone = true;
  auto row = [](const RowMatrix& m, Eigen::Index r) {
    return std::span<const double>(m.row(r).data(), static_cast<std::size_t>(m.cols()));
  };

  const auto affine = fixture::affine(200, 12, 2, 1);
  const auto f1 = fit_gllim(affine, 1, {}, 7);
  monotone = monotone && fixture::non_decreasing(f1.log_likelihood);
  double worst = 0.0;
  for (Eigen::Index r = 0; r < affine.u.rows(); ++r)
    worst = std::max(worst, (f1.model.inverse_predict(row(affine.y, r)).u - affine.u.row(r).transpose())
                                .cwiseAbs()
                                .maxCoeff());
  o.require(worst < 1e-6, "K=1 affine recovery max error " + sci(worst));

  const auto train = fixture::three_component(600, 20, 3, 1);
  const auto test = fixture::three_component(300, 20, 3, 2);
  const auto f3 = fit_gllim(train, 3, {}, 11);
  monotone = monotone && fixture::non_decreasing(f3.log_likelihood);
  double rel = 0.0;
  for (Eigen::Index c = 0; c < 2; ++c) {
    const double range = test.u.col(c).maxCoeff() - test.u.col(c).minCoeff();
    double err = 0.0;
    for (Eigen::Index r = 0; r < test.u.rows(); ++r)
      err += std::abs(f3.model.inverse_predict(row(test.y, r)).u[c] - test.u(r, c));
    rel = std::max(rel, err / static_cast<double>(test.u.rows()) / range);
  }
  o.require(rel < 0.05, "3-component held-out error " + num(100 * rel, 2) + "% of range");

  EmConfig iso;
  iso.covariance = CovarianceType::isotropic;
  monotone = monotone && fixture::non_decreasing(fit_gllim(train, 3, iso, 5).log_likelihood);

  const auto small = fixture::affine(10, 3, 1, 4, 0.3);
  EmConfig sc;
  sc.init_pcs = 2;
  const auto f2 = fit_gllim(small, 2, sc, 5);
  monotone = monotone && fixture::non_decreasing(f2.log_likelihood);
  double oracle_ll = 0.0;
  for (Eigen::Index r = 0; r < small.u.rows(); ++r)
    oracle_ll += oracle::gllim_log_density(f2.model, small.u.row(r).transpose(), small.y.row(r).transpose());
  const double gap = std::abs(f2.model.log_likelihood(small) - oracle_ll);
  o.require(gap < 1e-9 * std::max(1.0, std::abs(oracle_ll)), "log-likelihood vs dense oracle gap " + sci(gap));
  o.require(monotone, "EM log-likelihood non-decreasing on all fixtures");
  const double dt = seconds_since(t0);
  o.require(dt < 60.0, "runtime " + num(dt, 1) + " s");
  return o;
}

Outcome matched_config() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = read_summary(reproduce("single-config", 0, 1) / "report");
  const double dt = seconds_since(t0);
  o.require(s.at("azimuth").mean < 5.0, "azimuth " + num(s.at("azimuth").mean) + " deg");
  o.require(s.at("elevation").mean < 15.0, "elevation " + num(s.at("elevation").mean) + " deg (baseline " +
                                               num(s.at("elevation").baseline) + ")");
  o.require(dt < 900.0, "runtime " + num(dt, 0) + " s");
  return o;
}

Outcome full_training() {
  Outcome o;
  const auto s = read_summary(reproduce("full", 0, 1) / "report");
  const auto& a = s.at("absorption");
  o.require(a.mean < 0.30, "absorption " + num(a.mean));
  o.require(s.at("range").mean < 75.0, "range " + num(s.at("range").mean, 1) + " cm");
  o.require(a.mean < a.baseline, "absorption baseline " + num(a.baseline));
  return o;
}

Outcome diffusion_ablation() {
  Outcome o;
  std::vector<double> d_el, d_abs;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto with = read_summary(reproduce("full", seed, 1) / "report");
    const auto without = read_summary(reproduce("full-no-diffusion", seed, 1) / "report");
    d_el.push_back(without.at("elevation").mean - with.at("elevation").mean);
    d_abs.push_back(without.at("absorption").mean - with.at("absorption").mean);
    per_seed += (seed ? " " : "") + num(d_el.back(), 2) + "/" + num(d_abs.back(), 3);
  }
  o.require(median(d_el) > 0.0, "median elevation gain " + num(median(d_el), 3) + " deg");
  o.require(median(d_abs) > 0.0, "median absorption gain " + num(median(d_abs), 4));
  o.detail += "; per seed el/abs: " + per_seed;
  return o;
}

Outcome determinism() {
  Outcome o;
  auto same_tree = [](const fs::path& a, const fs::path& b) {
    std::size_t files = 0;
    for (const auto& name : {"model.gllim", "loglik.csv", "report/summary.csv", "report/per_sample.csv",
                             "report/by_absorption.csv", "report/by_range.csv"}) {
      if (read_file(a / name) != read_file(b / name)) return std::string("differs in ") + name;
      ++files;
    }
    return std::string();
  };
  for (const std::string preset : {"single-config", "full"}) {
    const auto base = reproduce(preset, 0, 1);
    const auto again = reproduce(preset, 0, 1, "_rerun");
    const auto wide = reproduce(preset, 0, 8);
    const auto r1 = same_tree(base, again);
    const auto r8 = same_tree(base, wide);
    o.require(r1.empty(), preset + " rerun identical" + (r1.empty() ? "" : " (" + r1 + ")"));
    o.require(r8.empty(), preset + " --jobs 8 identical" + (r8.empty() ? "" : " (" + r8 + ")"));
  }
  return o;
}

Outcome counts() {
  Outcome o;
  const auto train = build_grid(GridRole::train);
  const auto test = build_grid(GridRole::test);
  std::set<std::pair<double, double>> a;
  for (auto d : train.directions()) a.insert(d);
  std::size_t shared = 0;
  for (auto d : test.directions()) shared += a.count(d);
  o.require(train.size() == 651 && test.size() == 150,
            std::to_string(train.size()) + " train / " + std::to_string(test.size()) + " test directions");
  o.require(shared == 0, std::to_string(shared) + " shared directions");
  std::string out;
  const int code = cli({"--scale", "paper", "dataset", "--dry-run"}, &out);
  o.require(code == 0 && out.find("N = 82026") != std::string::npos,
            "paper-scale dry run: " + out.substr(0, out.find('\n')));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  g_work = fs::current_path() / "acceptance_work";
  std::set<int> only;
  bool keep = false;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a.rfind("--work=", 0) == 0) g_work = a.substr(7);
    else if (a == "--keep") keep = true;  // reuse finished runs while iterating
    else only.insert(std::stoi(a));
  }
  if (!keep) fs::remove_all(g_work);
  fs::create_directories(g_work);

  const std::vector<std::pair<int, std::pair<std::string, std::function<Outcome()>>>> criteria{
      {1, {"image-source oracle", image_source_oracle}},
      {2, {"energy properties", energy_properties}},
      {3, {"RT60 sanity", rt60_sanity}},
      {4, {"feature contract", feature_contract}},
      {5, {"GLLiM correctness", gllim_correctness}},
      {10, {"grid and dataset counts", counts}},
      {6, {"desk matched-config localisation", matched_config}},
      {7, {"desk full-annotation training", full_training}},
      {8, {"diffusion ablation direction", diffusion_ablation}},
      {9, {"determinism", determinism}},
  };
  int failed = 0;
  std::map<int, std::string> lines;
  for (const auto& [id, c] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.second();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    char head[160];
    std::snprintf(head, sizeof head, "criterion %2d %-34s %s (%.1f s) ", id, c.first.c_str(),
                  out.pass ? "PASS" : "FAIL", seconds_since(t0));
    lines[id] = head + out.detail;
    std::printf("%s\n", lines[id].c_str());
    std::fflush(stdout);
    if (!out.pass) ++failed;
  }
  std::printf("\nsummary\n");
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  std::printf("%d of %zu criteria failed\n", failed, lines.size());
  return failed == 0 ? 0 : 1;
}
