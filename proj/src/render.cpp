#include "vsloc/render.hpp"

#include <algorithm>
#include <cmath>

#include "vsloc/dsp.hpp"
#include "vsloc/error.hpp"
#include "vsloc/kernels.hpp"
#include "vsloc/util.hpp"

namespace vsloc {
namespace {

// Images whose per-band amplitudes are all equal go into a broadband train
// that needs no band filtering, since the amplitude bands sum to a unit
// impulse.
struct EarTrains {
  std::vector<double> flat;
  std::vector<std::vector<double>> bands;
};

bool all_equal(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

void place(EarTrains& ear, double position, const std::vector<double>& amp, int sinc_taps,
           std::vector<double>& w) {
  const long first = dsp::fractional_kernel(position, sinc_taps, w);
  const auto size = static_cast<long>(ear.flat.size());
  const long lo = std::max(0L, first);
  const long hi = std::min(size, first + sinc_taps + 1);
  if (lo >= hi) return;
  auto add = [&](std::vector<double>& train, double a) {
    for (long m = lo; m < hi; ++m)
      train[static_cast<std::size_t>(m)] += a * w[static_cast<std::size_t>(m - first)];
  };
  if (all_equal(amp)) {
    add(ear.flat, amp.front());
    return;
  }
  for (std::size_t b = 0; b < amp.size(); ++b)
    if (amp[b] != 0.0) add(ear.bands[b], amp[b]);
}

// Collapses the trains into a signal of n samples. Trains are indexed on the
// output axis shifted by the filter centre.
std::vector<double> mix_down(const EarTrains& ear, const dsp::BandFilterBank& bank,
                             std::size_t n) {
  const auto c = static_cast<std::size_t>(bank.centre());
  std::vector<double> full(ear.flat.size() + bank.taps() - 1, 0.0);
  for (std::size_t i = 0; i < ear.flat.size(); ++i) full[i + c] += ear.flat[i];
  for (std::size_t b = 0; b < ear.bands.size(); ++b) {
    if (std::all_of(ear.bands[b].begin(), ear.bands[b].end(), [](double v) { return v == 0.0; }))
      continue;
    kernels::convolve_acc(ear.bands[b], bank.amplitude_band(b), full);
  }
  // full[i + c] lines up with train sample i, i.e. output sample i - c.
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) out[i] = full[i + 2 * c];
  return out;
}

double direct_distance(const std::vector<ImageSource>& images, const RoomSpec& room) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& img : images)
    if (img.order == 0) d = std::min(d, (img.position - room.receiver).norm());
  if (!std::isfinite(d))
    for (const auto& img : images) d = std::min(d, (img.position - room.receiver).norm());
  return d;
}

BinauralRir render_parametric(const std::vector<ImageSource>& images, const RoomSpec& room,
                              const HeadModel& head, double fs, std::size_t n,
                              const RenderOptions& opts) {
  const auto& anchors = room.anchors();
  const auto& bank = dsp::cached_band_filter_bank(anchors, fs, opts.band_taps);
  const int c = bank.centre();
  // Train sample i corresponds to output time (i - c) / fs.
  const std::size_t train_len = n + 2 * static_cast<std::size_t>(c);
  EarTrains ears[2];
  for (auto& e : ears) {
    e.flat.assign(train_len, 0.0);
    e.bands.assign(anchors.size(), std::vector<double>(train_len, 0.0));
  }
  const double horizon = static_cast<double>(train_len) + opts.sinc_taps;
  std::vector<double> amp(anchors.size());
  std::vector<double> w(static_cast<std::size_t>(opts.sinc_taps) + 1);
  for (const auto& img : images) {
    if (img.peak_gain() == 0.0) continue;
    const double dist = (img.position - room.receiver).norm();
    const double t = dist / room.speed_of_sound;
    if (t * fs > horizon) continue;
    const Direction dir = receiver_direction(room, img.position);
    const SphereEarResponse resp = head.sphere_response(dir.azimuth, dir.elevation, anchors);
    for (int e = 0; e < 2; ++e) {
      const auto& g = e == 0 ? resp.gain_left : resp.gain_right;
      const double delay = e == 0 ? resp.delay_left : resp.delay_right;
      for (std::size_t b = 0; b < amp.size(); ++b) amp[b] = img.band_gains[b] * g[b] / dist;
      place(ears[e], (t + delay) * fs + c, amp, opts.sinc_taps, w);
    }
  }
  BinauralRir rir;
  rir.sample_rate = fs;
  rir.left = mix_down(ears[0], bank, n);
  rir.right = mix_down(ears[1], bank, n);
  return rir;
}

BinauralRir render_measured(const std::vector<ImageSource>& images, const RoomSpec& room,
                            const HeadModel& head, double fs, std::size_t n,
                            const RenderOptions& opts) {
  HeadModel local = head;
  if (head.hrir_set()->sample_rate != fs) {
    HrirSet set = *head.hrir_set();
    for (auto& e : set.entries) {
      e.left = dsp::resample(e.left, set.sample_rate, fs);
      e.right = dsp::resample(e.right, set.sample_rate, fs);
    }
    set.sample_rate = fs;
    local = HeadModel::measured(std::move(set), head.interpolation());
  }
  const auto& anchors = room.anchors();
  const auto& bank = dsp::cached_band_filter_bank(anchors, fs, opts.band_taps);
  const int c = bank.centre();
  BinauralRir rir;
  rir.sample_rate = fs;
  rir.left.assign(n, 0.0);
  rir.right.assign(n, 0.0);
  std::vector<double> amp(anchors.size());
  for (const auto& img : images) {
    if (img.peak_gain() == 0.0) continue;
    const double dist = (img.position - room.receiver).norm();
    const double t = dist / room.speed_of_sound;
    if (t * fs > static_cast<double>(n) + opts.sinc_taps) continue;
    const Direction dir = receiver_direction(room, img.position);
    const EarFilters ef = local.ear_filters(dir.azimuth, dir.elevation, fs);
    for (std::size_t b = 0; b < amp.size(); ++b) amp[b] = img.band_gains[b] / dist;
    const auto band = bank.fir_from_gains(amp);
    for (int e = 0; e < 2; ++e) {
      const auto k = dsp::convolve(band, e == 0 ? ef.left : ef.right);
      // Tap j of k sits at j - c - latency samples from the arrival time.
      std::vector<double> frac(static_cast<std::size_t>(opts.sinc_taps + 2), 0.0);
      const double pos = t * fs;
      const double base = std::floor(pos) - opts.sinc_taps / 2 - 1;
      dsp::add_fractional_impulse(frac, pos - base, 1.0, opts.sinc_taps);
      const auto shaped = dsp::convolve(k, frac);
      auto& out = e == 0 ? rir.left : rir.right;
      const long offset = static_cast<long>(base) - c - ef.latency;
      for (std::size_t j = 0; j < shaped.size(); ++j) {
        const long idx = offset + static_cast<long>(j);
        if (idx >= 0 && idx < static_cast<long>(n)) out[static_cast<std::size_t>(idx)] += shaped[j];
      }
    }
  }
  return rir;
}

}  // namespace

void SimConfig::validate() const {
  if (!(sample_rate > 0.0)) throw InvalidScene("sample_rate must be positive");
  if (!(duration > 0.0)) throw InvalidScene("duration must be positive");
  if (max_order_cap < 0) throw InvalidScene("max_order_cap must be >= 0");
  if (!(order_threshold_db > 0.0)) throw InvalidScene("order_threshold_db must be positive");
  if (sinc_taps < 2) throw InvalidScene("sinc_taps must be >= 2");
  if (band_taps < 1 || band_taps % 2 == 0) throw InvalidScene("band_taps must be odd");
  if (n_rays < 0) throw InvalidScene("n_rays must be >= 0");
  if (!(rain.bin_width > 0.0)) throw InvalidScene("rain bin width must be positive");
  if (!(rain.receiver_radius > 0.0)) throw InvalidScene("receiver radius must be positive");
  if (!(rain.energy_floor > 0.0 && rain.energy_floor < 1.0))
    throw InvalidScene("rain energy floor must be in (0, 1)");
}

BinauralRir render_specular_rir(const std::vector<ImageSource>& images, const RoomSpec& room,
                                const HeadModel& head, double sample_rate, double duration,
                                const RenderOptions& opts) {
  if (!(sample_rate > 0.0) || !(duration > 0.0))
    throw InvalidScene("sample rate and duration must be positive");
  if (images.empty()) throw InvalidScene("no image sources to render");
  const double direct = direct_distance(images, room) / room.speed_of_sound;
  if (duration <= direct)
    throw InvalidScene("duration " + std::to_string(duration) +
                       " s ends before the direct path arrives at " + std::to_string(direct) +
                       " s");
  const auto n = static_cast<std::size_t>(std::lround(duration * sample_rate));
  return head.is_parametric() ? render_parametric(images, room, head, sample_rate, n, opts)
                              : render_measured(images, room, head, sample_rate, n, opts);
}

int resolve_max_order(const RoomSpec& room, Vec3 source_pos, const SimConfig& config) {
  if (config.max_order >= 0) return config.max_order;
  const double max_distance = room.speed_of_sound * config.duration;
  return adaptive_max_order(room, source_pos, config.order_threshold_db, max_distance,
                            config.max_order_cap);
}

BinauralRir simulate_brir(const RoomSpec& room, const SourceSpec& source, const HeadModel& head,
                          const SimConfig& config, std::uint64_t seed) {
  config.validate();
  room.validate();
  const Vec3 src = source_position(room, source);
  const int order = resolve_max_order(room, src, config);
  // Margin so images arriving within the last interpolation half-width still
  // contribute their leading taps.
  const double max_distance =
      room.speed_of_sound * (config.duration + config.sinc_taps / config.sample_rate);
  const auto images = enumerate_image_sources(room, src, order, max_distance);
  BinauralRir rir = render_specular_rir(images, room, head, config.sample_rate, config.duration,
                                        {config.sinc_taps, config.band_taps});
  bool any_diffusion = false;
  for (const auto& s : room.surfaces)
    for (double d : s.diffusion) any_diffusion = any_diffusion || d > 0.0;
  if (config.diffusion && any_diffusion && config.n_rays > 0) {
    const auto hist = rain_diffusion(room, source, room.receiver, config.n_rays, config.duration,
                                     mix_seed(seed, 1), config.rain);
    const auto tail =
        synthesize_diffuse_tail(hist, config.sample_rate, mix_seed(seed, 2), config.band_taps);
    const std::size_t m = std::min(rir.size(), tail.size());
    for (std::size_t i = 0; i < m; ++i) {
      rir.left[i] += tail.left[i];
      rir.right[i] += tail.right[i];
    }
  }
  rir.seed = seed;
  return rir;
}

}  // namespace vsloc
