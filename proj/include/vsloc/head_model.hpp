#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

namespace vsloc {

struct HrirEntry {
  double azimuth = 0.0;    // degrees, receiver frame
  double elevation = 0.0;  // degrees
  std::vector<double> left;
  std::vector<double> right;
};

struct HrirSet {
  double sample_rate = 0.0;
  std::vector<HrirEntry> entries;

  // Throws InvalidScene on empty sets or unequal left/right lengths.
  void validate() const;
};

// Directory layout: index.json plus one mono float32 WAV per ear named
// az{+|-}DDD_el{+|-}DDD_{L|R}.wav. See docs/formats.md.
HrirSet load_hrir_set(const std::filesystem::path& dir);
void save_hrir_set(const HrirSet& set, const std::filesystem::path& dir);

struct EarFilters {
  std::vector<double> left;
  std::vector<double> right;
  // Index in both filters that corresponds to arrival at the head centre.
  int latency = 0;
};

// Pure delays and per-anchor magnitudes of the spherical head for one
// direction. Delays are relative to arrival at the head centre.
struct SphereEarResponse {
  double delay_left = 0.0;   // seconds
  double delay_right = 0.0;  // seconds
  std::vector<double> gain_left;
  std::vector<double> gain_right;
};

enum class HrirInterpolation { nearest, bilinear };

class HeadModel {
 public:
  struct Sphere {
    double radius = 0.0875;         // metres
    double ear_azimuth = 90.0;      // degrees; ears sit at +/- this azimuth
    double min_shadow = 0.1;        // far-ear high-frequency gain at 90 deg lateral
    double speed_of_sound = 343.0;  // m/s
  };

  static HeadModel sphere();
  static HeadModel sphere(Sphere params);
  static HeadModel measured(HrirSet set,
                            HrirInterpolation interp = HrirInterpolation::nearest);

  bool is_parametric() const { return !hrir_; }
  const Sphere& sphere_params() const { return sphere_; }
  const HrirSet* hrir_set() const { return hrir_.get(); }
  HrirInterpolation interpolation() const { return interp_; }

  // Lateral angle in the interaural-polar sense, degrees in [-90, 90];
  // positive towards the left ear.
  double lateral_angle(double azimuth, double elevation) const;

  // Woodworth interaural time difference (r/c)(theta + sin theta), seconds.
  // Positive when the source is on the left (the right ear lags).
  double itd(double azimuth, double elevation) const;

  // Far-ear first-order head-shadow magnitude at `freq`.
  double shadow_gain(double lateral_deg, double freq) const;

  SphereEarResponse sphere_response(double azimuth, double elevation,
                                    std::span<const double> anchors) const;

  // Left/right FIRs at `sample_rate`. Measured sets are looked up by nearest
  // direction (or bilinear over a regular grid) and resampled if needed.
  EarFilters ear_filters(double azimuth, double elevation, double sample_rate) const;

 private:
  Sphere sphere_{};
  std::shared_ptr<const HrirSet> hrir_;
  HrirInterpolation interp_ = HrirInterpolation::nearest;
};

}  // namespace vsloc
