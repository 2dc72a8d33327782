#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vsloc/head_model.hpp"
#include "vsloc/image_source.hpp"
#include "vsloc/rain_diffusion.hpp"
#include "vsloc/room.hpp"
#include "vsloc/scene.hpp"

namespace vsloc {

struct BinauralRir {
  std::vector<double> left;
  std::vector<double> right;
  double sample_rate = 0.0;
  std::optional<SceneParams> params;
  std::uint64_t seed = 0;

  std::size_t size() const { return left.size(); }
};

struct SimConfig {
  double sample_rate = 16000.0;
  double duration = 0.5;  // seconds of impulse response

  int max_order = -1;  // < 0 selects the order adaptively
  int max_order_cap = 200;
  double order_threshold_db = 60.0;

  int sinc_taps = 11;
  int band_taps = 65;

  bool diffusion = true;
  RainOptions rain{};
  int n_rays = 10000;

  void validate() const;
};

struct RenderOptions {
  int sinc_taps = 11;
  int band_taps = 65;
};

// Sums every image's contribution at both ears: 1/distance spreading, the
// per-band reflection gains realised as a zero-phase FIR, the head model's
// direction-dependent filtering and a fractional-sample delay.
// Throws Error if `duration` ends before the direct path arrives.
BinauralRir render_specular_rir(const std::vector<ImageSource>& images, const RoomSpec& room,
                                const HeadModel& head, double sample_rate, double duration,
                                const RenderOptions& opts = {});

// Image-source specular part plus (if enabled) the rain-diffusion tail.
// Deterministic in `seed`.
BinauralRir simulate_brir(const RoomSpec& room, const SourceSpec& source, const HeadModel& head,
                          const SimConfig& config, std::uint64_t seed);

// Image order used by simulate_brir for this scene.
int resolve_max_order(const RoomSpec& room, Vec3 source_pos, const SimConfig& config);

}  // namespace vsloc
