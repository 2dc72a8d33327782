#pragma once

#include <array>
#include <limits>
#include <vector>

#include "vsloc/room.hpp"

namespace vsloc {

// A mirrored copy of the source. Along each axis the image coordinate is
// (1 - 2 p) * s + 2 n L for lattice index n and mirror flag p; it has met the
// lower wall |n - p| times and the upper wall |n| times.
struct ImageSource {
  Vec3 position;
  int order = 0;
  std::array<int, 3> lattice{};
  std::array<int, 3> mirrored{};
  std::array<int, kSurfaceCount> hits{};
  // Amplitude factor per anchor frequency: product over bounces of
  // sqrt(1 - absorption).
  std::vector<double> band_gains;

  double peak_gain() const;
};

// Surfaces met along the reflected path, in propagation order (source first).
std::vector<Surface> reflection_sequence(const ImageSource& image, const RoomSpec& room);

// All images of order <= max_order, direct source first. Images farther than
// max_distance from the receiver are skipped. Throws InvalidScene.
std::vector<ImageSource> enumerate_image_sources(
    const RoomSpec& room, const SourceSpec& source, int max_order,
    double max_distance = std::numeric_limits<double>::infinity());

std::vector<ImageSource> enumerate_image_sources(
    const RoomSpec& room, Vec3 source_pos, int max_order,
    double max_distance = std::numeric_limits<double>::infinity());

// Smallest order N such that every image of order N + 1 is at least
// threshold_db below the direct path, or lies beyond max_distance. Capped.
int adaptive_max_order(const RoomSpec& room, Vec3 source_pos, double threshold_db,
                       double max_distance, int cap);

}  // namespace vsloc
