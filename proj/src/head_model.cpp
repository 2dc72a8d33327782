#include "vsloc/head_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>

#include <json.hpp>

#include "vsloc/dsp.hpp"
#include "vsloc/error.hpp"
#include "vsloc/room.hpp"
#include "vsloc/util.hpp"
#include "vsloc/wav.hpp"

namespace vsloc {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;
constexpr int kSphereBandTaps = 65;
constexpr int kSphereSincTaps = 11;

std::string hrir_file_name(double az, double el, char ear) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "az%+04ld_el%+04ld_%c.wav", std::lround(az), std::lround(el), ear);
  return buf;
}

std::vector<double> lerp_filters(const std::vector<double>& a, const std::vector<double>& b,
                                 double t) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - t) * a[i] + t * b[i];
  return out;
}

std::size_t nearest_entry(const HrirSet& set, double az, double el) {
  const Vec3 q = direction_vector(az, el);
  std::size_t best = 0;
  double best_dot = -2.0;
  for (std::size_t i = 0; i < set.entries.size(); ++i) {
    const double d = q.dot(direction_vector(set.entries[i].azimuth, set.entries[i].elevation));
    if (d > best_dot) {
      best_dot = d;
      best = i;
    }
  }
  return best;
}

// Bracketing pair (lo, hi, t) of value v in sorted grid g, clamped at the ends.
struct Bracket {
  std::size_t lo, hi;
  double t;
};
Bracket bracket(const std::vector<double>& g, double v) {
  if (g.size() == 1 || v <= g.front()) return {0, 0, 0.0};
  if (v >= g.back()) return {g.size() - 1, g.size() - 1, 0.0};
  const auto hi = static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), v) - g.begin());
  const std::size_t lo = hi - 1;
  return {lo, hi, (v - g[lo]) / (g[hi] - g[lo])};
}

EarFilters bilinear_filters(const HrirSet& set, double az, double el) {
  std::set<double> azs, els;
  std::map<std::pair<double, double>, std::size_t> index;
  for (std::size_t i = 0; i < set.entries.size(); ++i) {
    azs.insert(set.entries[i].azimuth);
    els.insert(set.entries[i].elevation);
    index[{set.entries[i].azimuth, set.entries[i].elevation}] = i;
  }
  if (index.size() != azs.size() * els.size())
    throw InvalidScene("bilinear HRIR interpolation requires a full azimuth x elevation grid");
  const std::vector<double> ga(azs.begin(), azs.end());
  const std::vector<double> ge(els.begin(), els.end());
  const Bracket ba = bracket(ga, az);
  const Bracket be = bracket(ge, el);
  auto at = [&](std::size_t ia, std::size_t ie) -> const HrirEntry& {
    return set.entries[index.at({ga[ia], ge[ie]})];
  };
  EarFilters f;
  const auto& e00 = at(ba.lo, be.lo);
  const auto& e10 = at(ba.hi, be.lo);
  const auto& e01 = at(ba.lo, be.hi);
  const auto& e11 = at(ba.hi, be.hi);
  f.left = lerp_filters(lerp_filters(e00.left, e10.left, ba.t),
                        lerp_filters(e01.left, e11.left, ba.t), be.t);
  f.right = lerp_filters(lerp_filters(e00.right, e10.right, ba.t),
                         lerp_filters(e01.right, e11.right, ba.t), be.t);
  return f;
}

}  // namespace

void HrirSet::validate() const {
  if (!(sample_rate > 0.0)) throw InvalidScene("HRIR set: sample rate must be positive");
  if (entries.empty()) throw InvalidScene("HRIR set: no entries");
  for (const auto& e : entries) {
    if (e.left.empty() || e.left.size() != e.right.size())
      throw InvalidScene("HRIR set: left/right filters must be non-empty and of equal length");
  }
}

HrirSet load_hrir_set(const std::filesystem::path& dir) {
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(read_file(dir / "index.json"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("HRIR index.json: " + std::string(e.what()));
  }
  if (index.value("format", "") != "vsloc-hrir" || index.value("version", 0) != 1)
    throw FormatError("HRIR index.json: expected format vsloc-hrir version 1");
  HrirSet set;
  set.sample_rate = index.at("sample_rate").get<double>();
  for (const auto& je : index.at("entries")) {
    HrirEntry e;
    e.azimuth = je.at("azimuth").get<double>();
    e.elevation = je.at("elevation").get<double>();
    const auto left = wav::read(dir / je.at("left").get<std::string>());
    const auto right = wav::read(dir / je.at("right").get<std::string>());
    if (left.channels.size() != 1 || right.channels.size() != 1)
      throw FormatError("HRIR WAV files must be mono");
    if (left.sample_rate != set.sample_rate || right.sample_rate != set.sample_rate)
      throw FormatError("HRIR WAV sample rate differs from index.json");
    e.left = left.channels[0];
    e.right = right.channels[0];
    set.entries.push_back(std::move(e));
  }
  set.validate();
  return set;
}

void save_hrir_set(const HrirSet& set, const std::filesystem::path& dir) {
  set.validate();
  std::filesystem::create_directories(dir);
  nlohmann::json index;
  index["format"] = "vsloc-hrir";
  index["version"] = 1;
  index["sample_rate"] = set.sample_rate;
  index["length"] = set.entries.front().left.size();
  index["entries"] = nlohmann::json::array();
  std::set<std::string> names;
  for (const auto& e : set.entries) {
    const std::string l = hrir_file_name(e.azimuth, e.elevation, 'L');
    const std::string r = hrir_file_name(e.azimuth, e.elevation, 'R');
    if (!names.insert(l).second)
      throw InvalidScene("HRIR set: two directions round to the same file name " + l);
    wav::write_float32(dir / l, {set.sample_rate, {e.left}});
    wav::write_float32(dir / r, {set.sample_rate, {e.right}});
    index["entries"].push_back(
        {{"azimuth", e.azimuth}, {"elevation", e.elevation}, {"left", l}, {"right", r}});
  }
  write_file_atomic(dir / "index.json", index.dump(2) + "\n");
}

HeadModel HeadModel::sphere() { return sphere(Sphere{}); }

HeadModel HeadModel::sphere(Sphere params) {
  if (!(params.radius > 0.0)) throw InvalidScene("head radius must be positive");
  if (!(params.speed_of_sound > 0.0)) throw InvalidScene("speed of sound must be positive");
  if (!(params.min_shadow > 0.0 && params.min_shadow <= 1.0))
    throw InvalidScene("min_shadow must be in (0, 1]");
  HeadModel h;
  h.sphere_ = params;
  return h;
}

HeadModel HeadModel::measured(HrirSet set, HrirInterpolation interp) {
  set.validate();
  HeadModel h;
  h.hrir_ = std::make_shared<const HrirSet>(std::move(set));
  h.interp_ = interp;
  return h;
}

double HeadModel::lateral_angle(double azimuth, double elevation) const {
  const Vec3 d = direction_vector(azimuth, elevation);
  const double ea = sphere_.ear_azimuth * kDeg;
  const Vec3 left_ear{std::cos(ea), std::sin(ea), 0.0};
  const Vec3 right_ear{std::cos(ea), -std::sin(ea), 0.0};
  const double lat_l = std::asin(std::clamp(d.dot(left_ear), -1.0, 1.0));
  const double lat_r = std::asin(std::clamp(d.dot(right_ear), -1.0, 1.0));
  return 0.5 * (lat_l - lat_r) / kDeg;
}

double HeadModel::itd(double azimuth, double elevation) const {
  const double theta = lateral_angle(azimuth, elevation) * kDeg;
  const double mag = std::abs(theta);
  const double v = sphere_.radius / sphere_.speed_of_sound * (mag + std::sin(mag));
  return theta >= 0.0 ? v : -v;
}

double HeadModel::shadow_gain(double lateral_deg, double freq) const {
  const double alpha =
      1.0 - (1.0 - sphere_.min_shadow) * std::abs(std::sin(lateral_deg * kDeg));
  const double w0 = sphere_.speed_of_sound / sphere_.radius;
  const double x = 2.0 * kPi * freq / (2.0 * w0);
  return std::sqrt((1.0 + alpha * alpha * x * x) / (1.0 + x * x));
}

SphereEarResponse HeadModel::sphere_response(double azimuth, double elevation,
                                             std::span<const double> anchors) const {
  SphereEarResponse r;
  const double lat = lateral_angle(azimuth, elevation);
  const double mag = std::abs(lat * kDeg);
  const double tau_mag = sphere_.radius / sphere_.speed_of_sound * (mag + std::sin(mag));
  const double tau = lat >= 0.0 ? tau_mag : -tau_mag;
  r.delay_left = -0.5 * tau;
  r.delay_right = 0.5 * tau;
  r.gain_left.assign(anchors.size(), 1.0);
  r.gain_right.assign(anchors.size(), 1.0);
  if (lat != 0.0) {
    auto& far = lat > 0.0 ? r.gain_right : r.gain_left;
    for (std::size_t b = 0; b < anchors.size(); ++b) far[b] = shadow_gain(lat, anchors[b]);
  }
  return r;
}

EarFilters HeadModel::ear_filters(double azimuth, double elevation, double sample_rate) const {
  if (!(sample_rate > 0.0)) throw std::invalid_argument("ear_filters: bad sample rate");
  if (hrir_) {
    EarFilters f = interp_ == HrirInterpolation::bilinear
                       ? bilinear_filters(*hrir_, azimuth, elevation)
                       : EarFilters{hrir_->entries[nearest_entry(*hrir_, azimuth, elevation)].left,
                                    hrir_->entries[nearest_entry(*hrir_, azimuth, elevation)].right,
                                    0};
    if (hrir_->sample_rate != sample_rate) {
      f.left = dsp::resample(f.left, hrir_->sample_rate, sample_rate);
      f.right = dsp::resample(f.right, hrir_->sample_rate, sample_rate);
    }
    return f;
  }
  const auto& anchors = default_anchor_frequencies();
  const auto& bank = dsp::cached_band_filter_bank(anchors, sample_rate, kSphereBandTaps);
  const SphereEarResponse resp = sphere_response(azimuth, elevation, anchors);
  const double max_itd = sphere_.radius / sphere_.speed_of_sound * (kPi / 2.0 + 1.0);
  const int latency = bank.centre() + kSphereSincTaps / 2 + 1 +
                      static_cast<int>(std::ceil(0.5 * max_itd * sample_rate));
  const auto len = static_cast<std::size_t>(2 * latency + 1);
  auto build = [&](double delay, const std::vector<double>& gains) {
    std::vector<double> impulse(len, 0.0);
    dsp::add_fractional_impulse(impulse, latency - bank.centre() + delay * sample_rate, 1.0,
                                kSphereSincTaps);
    auto full = dsp::convolve(impulse, bank.fir_from_gains(gains));
    full.resize(len);
    return full;
  };
  return {build(resp.delay_left, resp.gain_left), build(resp.delay_right, resp.gain_right),
          latency};
}

}  // namespace vsloc
