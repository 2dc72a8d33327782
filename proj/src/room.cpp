#include "vsloc/room.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

#include "vsloc/dsp.hpp"
#include "vsloc/error.hpp"

namespace vsloc {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

void check_unit_interval(const std::vector<double>& v, std::string_view what,
                         std::string_view field) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0 && v[i] <= 1.0)) {
      std::ostringstream os;
      os << what << ": " << field << "[" << i << "] = " << v[i] << " is outside [0, 1]";
      throw InvalidScene(os.str());
    }
  }
}

}  // namespace

std::string_view surface_name(Surface s) {
  switch (s) {
    case Surface::x0: return "x0";
    case Surface::x1: return "x1";
    case Surface::y0: return "y0";
    case Surface::y1: return "y1";
    case Surface::floor: return "floor";
    case Surface::ceiling: return "ceiling";
  }
  return "?";
}

SurfaceProfile SurfaceProfile::flat(double absorption, double diffusion) {
  SurfaceProfile p;
  std::fill(p.absorption.begin(), p.absorption.end(), absorption);
  std::fill(p.diffusion.begin(), p.diffusion.end(), diffusion);
  return p;
}

double SurfaceProfile::absorption_at(double freq) const {
  return dsp::interpolate_anchors(anchor_frequencies, absorption, freq);
}

double SurfaceProfile::diffusion_at(double freq) const {
  return dsp::interpolate_anchors(anchor_frequencies, diffusion, freq);
}

void SurfaceProfile::validate(std::string_view what) const {
  if (anchor_frequencies.empty())
    throw InvalidScene(std::string(what) + ": no anchor frequencies");
  for (std::size_t i = 0; i < anchor_frequencies.size(); ++i) {
    if (!(anchor_frequencies[i] > 0.0) ||
        (i > 0 && !(anchor_frequencies[i] > anchor_frequencies[i - 1])))
      throw InvalidScene(std::string(what) +
                         ": anchor frequencies must be positive and strictly increasing");
  }
  if (absorption.size() != anchor_frequencies.size() ||
      diffusion.size() != anchor_frequencies.size())
    throw InvalidScene(std::string(what) +
                       ": absorption/diffusion lists must match the anchor count");
  check_unit_interval(absorption, what, "absorption");
  check_unit_interval(diffusion, what, "diffusion");
}

RoomSpec RoomSpec::default_room(double wall_absorption) {
  RoomSpec room;
  for (auto& s : room.surfaces) s = SurfaceProfile::flat(wall_absorption);
  room.surface(Surface::ceiling).absorption = kGypsumBoardAbsorption;
  room.surface(Surface::floor).absorption = kThinCarpetAbsorption;
  room.set_diffusion(kFurnishedDiffusion);
  return room;
}

double RoomSpec::surface_area(Surface s) const {
  switch (s) {
    case Surface::x0:
    case Surface::x1: return depth * height;
    case Surface::y0:
    case Surface::y1: return width * height;
    case Surface::floor:
    case Surface::ceiling: return width * depth;
  }
  return 0.0;
}

void RoomSpec::set_walls(const std::vector<double>& absorption) {
  for (Surface s : {Surface::x0, Surface::x1, Surface::y0, Surface::y1})
    surface(s).absorption = absorption;
}

void RoomSpec::set_diffusion(const std::vector<double>& diffusion) {
  for (auto& s : surfaces) s.diffusion = diffusion;
}

void RoomSpec::validate() const {
  if (!(width > 0.0) || !(depth > 0.0) || !(height > 0.0))
    throw InvalidScene("room dimensions must be positive");
  if (!(speed_of_sound > 0.0)) throw InvalidScene("speed_of_sound must be positive");
  if (!std::isfinite(receiver_yaw)) throw InvalidScene("receiver_yaw must be finite");
  for (int axis = 0; axis < 3; ++axis) {
    const double v = receiver[axis];
    if (!(v > 0.0 && v < dimension(axis))) {
      std::ostringstream os;
      os << "receiver " << "xyz"[axis] << " = " << v << " m is not strictly inside (0, "
         << dimension(axis) << ")";
      throw InvalidScene(os.str());
    }
  }
  for (int i = 0; i < kSurfaceCount; ++i) {
    const std::string what = "surface " + std::string(surface_name(static_cast<Surface>(i)));
    surfaces[i].validate(what);
    if (surfaces[i].anchor_frequencies != surfaces[0].anchor_frequencies)
      throw InvalidScene(what + ": all surfaces must share the same anchor frequencies");
  }
}

bool RoomSpec::contains(Vec3 p) const {
  return p.x > 0.0 && p.x < width && p.y > 0.0 && p.y < depth && p.z > 0.0 && p.z < height;
}

Vec3 direction_vector(double azimuth_deg, double elevation_deg) {
  const double az = azimuth_deg * kDegToRad;
  const double el = elevation_deg * kDegToRad;
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

Vec3 source_position(const RoomSpec& room, const SourceSpec& source) {
  if (!(source.range > 0.0) || !std::isfinite(source.range))
    throw InvalidScene("source range must be positive");
  if (!std::isfinite(source.azimuth) || !std::isfinite(source.elevation))
    throw InvalidScene("source direction must be finite");
  const Vec3 p = room.receiver +
                 source.range * direction_vector(source.azimuth + room.receiver_yaw,
                                                 source.elevation);
  for (int axis = 0; axis < 3; ++axis) {
    if (!(p[axis] > 0.0 && p[axis] < room.dimension(axis))) {
      std::ostringstream os;
      os << "source " << "xyz"[axis] << " = " << p[axis] << " m lies outside the room (0, "
         << room.dimension(axis) << ") for azimuth " << source.azimuth << " deg, elevation "
         << source.elevation << " deg, range " << source.range << " m";
      throw InvalidScene(os.str());
    }
  }
  return p;
}

Direction receiver_direction(const RoomSpec& room, Vec3 from) {
  const Vec3 d = from - room.receiver;
  const double horiz = std::hypot(d.x, d.y);
  double az = std::atan2(d.y, d.x) / kDegToRad - room.receiver_yaw;
  az = std::remainder(az, 360.0);
  const double el = std::atan2(d.z, horiz) / kDegToRad;
  return {az, el};
}

}  // namespace vsloc
