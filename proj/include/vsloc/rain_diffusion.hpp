#pragma once

#include <cstdint>
#include <vector>

#include "vsloc/room.hpp"

namespace vsloc {

struct BinauralRir;

// Per-band energy arriving at the receiver, binned by travel time. Entries
// are fractions of the energy emitted in that band, so each band sums to at
// most 1.
struct EnergyHistogram {
  double bin_width = 1e-3;  // seconds
  double receiver_radius = 0.1;
  std::vector<double> anchor_frequencies;
  std::vector<std::vector<double>> energy;  // [band][bin]

  std::size_t bands() const { return energy.size(); }
  std::size_t bins() const { return energy.empty() ? 0 : energy.front().size(); }
  double band_total(std::size_t band) const;
  double total() const;
};

struct RainOptions {
  double bin_width = 1e-3;
  double energy_floor = 1e-6;    // relative to the ray's initial energy
  double receiver_radius = 0.1;  // metres, detection sphere
};

// Traces n_rays uniformly distributed rays with specular reflection. At every
// impact the ray loses the absorbed fraction, then the diffusely scattered
// fraction d(f) leaves the ray; the share of it that a Lambert scatterer sends
// onto the receiver sphere is deposited at the bin of its total travel time.
EnergyHistogram rain_diffusion(const RoomSpec& room, const SourceSpec& source,
                               Vec3 receiver_position, int n_rays, double max_time,
                               std::uint64_t seed, const RainOptions& opts = {});

// Noise tail whose short-time band energies follow the histogram; independent
// noise per ear.
BinauralRir synthesize_diffuse_tail(const EnergyHistogram& hist, double sample_rate,
                                    std::uint64_t seed, int band_taps = 65);

}  // namespace vsloc
