#include "vsloc/rain_diffusion.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "vsloc/dsp.hpp"
#include "vsloc/error.hpp"
#include "vsloc/kernels.hpp"
#include "vsloc/render.hpp"
#include "vsloc/util.hpp"

namespace vsloc {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxBounces = 100000;

Vec3 uniform_direction(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double z = 2.0 * u(rng) - 1.0;
  const double phi = 2.0 * kPi * u(rng);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

// Distance along dir to the first wall and the axis/surface it hits.
double next_wall(const RoomSpec& room, Vec3 p, Vec3 dir, int& axis, Surface& surface) {
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) continue;
    const double target = dir[a] > 0.0 ? room.dimension(a) : 0.0;
    const double t = (target - p[a]) / dir[a];
    if (t < best) {
      best = t;
      axis = a;
      surface = static_cast<Surface>(2 * a + (dir[a] > 0.0 ? 1 : 0));
    }
  }
  return std::max(best, 0.0);
}

}  // namespace

double EnergyHistogram::band_total(std::size_t band) const {
  return std::accumulate(energy.at(band).begin(), energy.at(band).end(), 0.0);
}

double EnergyHistogram::total() const {
  double t = 0.0;
  for (std::size_t b = 0; b < bands(); ++b) t += band_total(b);
  return t;
}

EnergyHistogram rain_diffusion(const RoomSpec& room, const SourceSpec& source,
                               Vec3 receiver_position, int n_rays, double max_time,
                               std::uint64_t seed, const RainOptions& opts) {
  room.validate();
  if (n_rays <= 0) throw InvalidScene("n_rays must be positive");
  if (!(max_time > 0.0)) throw InvalidScene("max_time must be positive");
  if (!(opts.bin_width > 0.0)) throw InvalidScene("bin width must be positive");
  if (!room.contains(receiver_position)) throw InvalidScene("receiver lies outside the room");
  const Vec3 src = source_position(room, source);
  const std::size_t bands = room.anchors().size();
  const auto nbins = static_cast<std::size_t>(std::ceil(max_time / opts.bin_width - 1e-9));

  EnergyHistogram hist;
  hist.bin_width = opts.bin_width;
  hist.receiver_radius = opts.receiver_radius;
  hist.anchor_frequencies = room.anchors();
  hist.energy.assign(bands, std::vector<double>(nbins, 0.0));

  const double c = room.speed_of_sound;
  const double r_det = opts.receiver_radius;
  const double e0 = 1.0 / n_rays;
  std::vector<double> energy(bands);
  for (int ray = 0; ray < n_rays; ++ray) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(ray)));
    Vec3 dir = uniform_direction(rng);
    Vec3 p = src;
    double path = 0.0;
    std::fill(energy.begin(), energy.end(), e0);
    for (int bounce = 0; bounce < kMaxBounces; ++bounce) {
      int axis = 0;
      Surface surf = Surface::x0;
      const double step = next_wall(room, p, dir, axis, surf);
      p = p + step * dir;
      p[axis] = dir[axis] > 0.0 ? room.dimension(axis) : 0.0;
      path += step;
      if (path / c > max_time) break;
      const SurfaceProfile& prof = room.surface(surf);

      const Vec3 to_rx = receiver_position - p;
      const double r = to_rx.norm();
      const double cos_theta = std::abs(to_rx[axis]) / r;
      const double omega = r > r_det
                               ? 2.0 * kPi * (1.0 - std::sqrt(1.0 - (r_det / r) * (r_det / r)))
                               : 2.0 * kPi;
      const double share = std::min(1.0, cos_theta * omega / kPi);
      const auto bin = static_cast<std::size_t>((path + r) / c / opts.bin_width);

      double remaining = 0.0;
      for (std::size_t b = 0; b < bands; ++b) {
        energy[b] *= 1.0 - prof.absorption[b];
        const double sent = energy[b] * prof.diffusion[b];
        if (bin < nbins) hist.energy[b][bin] += sent * share;
        energy[b] -= sent;
        remaining += energy[b];
      }
      if (remaining < opts.energy_floor * e0 * static_cast<double>(bands)) break;
      dir[axis] = -dir[axis];
    }
  }
  return hist;
}

BinauralRir synthesize_diffuse_tail(const EnergyHistogram& hist, double sample_rate,
                                    std::uint64_t seed, int band_taps) {
  if (!(sample_rate > 0.0)) throw InvalidScene("sample rate must be positive");
  const auto n = static_cast<std::size_t>(
      std::lround(static_cast<double>(hist.bins()) * hist.bin_width * sample_rate));
  BinauralRir out;
  out.sample_rate = sample_rate;
  out.left.assign(n, 0.0);
  out.right.assign(n, 0.0);
  out.seed = seed;
  if (hist.bands() == 0 || n == 0) return out;
  const auto& bank = dsp::cached_band_filter_bank(hist.anchor_frequencies, sample_rate, band_taps);
  const auto c = static_cast<std::size_t>(bank.centre());
  // Histogram fractions of the emitted energy become squared pressure at the
  // receiver relative to a unit-amplitude source at 1 m: the detector
  // intercepts pi R^2 of a source radiating 4 pi.
  const double to_pressure = 4.0 / (hist.receiver_radius * hist.receiver_radius);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(n);
  std::vector<double> full(n + bank.taps() - 1);
  for (int ear = 0; ear < 2; ++ear) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(ear)));
    normal.reset();
    auto& dst = ear == 0 ? out.left : out.right;
    for (std::size_t b = 0; b < hist.bands(); ++b) {
      std::fill(x.begin(), x.end(), 0.0);
      bool any = false;
      for (std::size_t t = 0; t < hist.bins(); ++t) {
        const auto lo = static_cast<std::size_t>(
            std::lround(static_cast<double>(t) * hist.bin_width * sample_rate));
        const auto hi = std::min(n, static_cast<std::size_t>(std::lround(
                                        static_cast<double>(t + 1) * hist.bin_width * sample_rate)));
        const double e = hist.energy[b][t];
        if (e <= 0.0 || hi <= lo) continue;
        any = true;
        const double scale = std::sqrt(e * to_pressure / static_cast<double>(hi - lo));
        for (std::size_t i = lo; i < hi; ++i) x[i] = scale * normal(rng);
      }
      if (!any) continue;
      std::fill(full.begin(), full.end(), 0.0);
      kernels::convolve_acc(x, bank.energy_band(b), full);
      for (std::size_t i = 0; i < n; ++i) dst[i] += full[i + c];
    }
  }
  return out;
}

}  // namespace vsloc
