#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace vsloc {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  constexpr double operator[](int axis) const { return axis == 0 ? x : axis == 1 ? y : z; }
  constexpr double& operator[](int axis) { return axis == 0 ? x : axis == 1 ? y : z; }

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
  friend constexpr bool operator==(Vec3, Vec3) = default;

  constexpr double dot(Vec3 o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

// Surface ids. x0/x1 are the walls at x = 0 and x = width, y0/y1 at y = 0 and
// y = depth; floor at z = 0, ceiling at z = height.
enum class Surface : int { x0 = 0, x1, y0, y1, floor, ceiling };
inline constexpr int kSurfaceCount = 6;
std::string_view surface_name(Surface s);

inline const std::vector<double>& default_anchor_frequencies() {
  static const std::vector<double> anchors{125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0};
  return anchors;
}

struct SurfaceProfile {
  std::vector<double> anchor_frequencies = default_anchor_frequencies();
  std::vector<double> absorption = std::vector<double>(6, 0.0);
  std::vector<double> diffusion = std::vector<double>(6, 0.0);

  static SurfaceProfile flat(double absorption, double diffusion = 0.0);

  double absorption_at(double freq) const;
  double diffusion_at(double freq) const;
  // Throws InvalidScene naming `what` on malformed lists or values outside [0, 1].
  void validate(std::string_view what) const;
};

struct RoomSpec {
  double width = 6.0;   // x
  double depth = 5.0;   // y
  double height = 3.3;  // z
  Vec3 receiver{2.0, 2.5, 1.6};
  double receiver_yaw = 0.0;  // degrees, rotation of the receiver's front about +z
  std::array<SurfaceProfile, kSurfaceCount> surfaces{};
  double speed_of_sound = 343.0;

  // 6 x 5 x 3.3 m room, receiver at (2, 2.5, 1.6) facing +x, gypsum-board
  // ceiling, thin-carpet floor, walls flat at `wall_absorption`, and the
  // furnished-room diffusion profile on every surface.
  static RoomSpec default_room(double wall_absorption = 0.16);

  double dimension(int axis) const { return axis == 0 ? width : axis == 1 ? depth : height; }
  double volume() const { return width * depth * height; }
  double surface_area(Surface s) const;
  const SurfaceProfile& surface(Surface s) const { return surfaces[static_cast<int>(s)]; }
  SurfaceProfile& surface(Surface s) { return surfaces[static_cast<int>(s)]; }
  const std::vector<double>& anchors() const { return surfaces[0].anchor_frequencies; }

  void set_walls(const std::vector<double>& absorption);
  void set_diffusion(const std::vector<double>& diffusion);

  // Throws InvalidScene.
  void validate() const;
  bool contains(Vec3 p) const;
};

// Direction in the receiver frame: azimuth 0 is the receiver's front,
// positive azimuth turns left (towards +y at zero yaw), positive elevation up.
struct SourceSpec {
  double azimuth = 0.0;    // degrees
  double elevation = 0.0;  // degrees
  double range = 1.0;      // metres
};

Vec3 direction_vector(double azimuth_deg, double elevation_deg);

// Absolute source position; throws InvalidScene naming the offending
// coordinate when it does not lie strictly inside the room.
Vec3 source_position(const RoomSpec& room, const SourceSpec& source);

// Arrival direction of `from` seen by the receiver, in receiver-frame degrees.
struct Direction {
  double azimuth;
  double elevation;
};
Direction receiver_direction(const RoomSpec& room, Vec3 from);

// Default ceiling, floor and diffusion profiles at {125, 250, 500, 1000, 2000, 4000} Hz.
inline const std::vector<double> kGypsumBoardAbsorption{0.45, 0.55, 0.60, 0.90, 0.86, 0.75};
inline const std::vector<double> kThinCarpetAbsorption{0.02, 0.04, 0.08, 0.20, 0.35, 0.40};
inline const std::vector<double> kFurnishedDiffusion{0.003, 0.004, 0.045, 0.077, 0.210, 0.431};

}  // namespace vsloc
