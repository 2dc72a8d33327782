#pragma once

#include <array>
#include <string>

namespace vsloc {

// The low-dimensional annotation of one audio scene.
struct SceneParams {
  double azimuth = 0.0;               // degrees
  double elevation = 0.0;             // degrees
  double range = 1.0;                 // metres
  double mean_wall_absorption = 0.0;  // mean over the >= 500 Hz anchors

  std::array<double, 4> as_array() const {
    return {azimuth, elevation, range, mean_wall_absorption};
  }
  friend bool operator==(const SceneParams&, const SceneParams&) = default;
};

inline constexpr std::array<const char*, 4> kParamNames{"azimuth", "elevation", "range",
                                                        "absorption"};

}  // namespace vsloc
