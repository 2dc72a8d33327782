#include "vsloc/config.hpp"

#include "vsloc/error.hpp"
#include "vsloc/util.hpp"

namespace vsloc {

StrictObject::StrictObject(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
  if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
}

const Json* StrictObject::child(const std::string& key) {
  if (!j_.contains(key)) return nullptr;
  seen_.insert(key);
  return &j_.at(key);
}

void StrictObject::finish() const {
  std::string unknown;
  for (const auto& [key, value] : j_.items()) {
    if (seen_.count(key)) continue;
    if (!unknown.empty()) unknown += ", ";
    unknown += "'" + key + "'";
  }
  if (!unknown.empty()) throw ConfigError(where_ + ": unknown key(s) " + unknown);
}

void StrictObject::throw_type(const std::string& key, const char* got) const {
  throw ConfigError(where_ + "." + key + ": wrong type (" + got + ")");
}

Json to_json(const SurfaceProfile& s) {
  return {{"anchor_frequencies", s.anchor_frequencies},
          {"absorption", s.absorption},
          {"diffusion", s.diffusion}};
}

SurfaceProfile surface_from_json(const Json& j, const std::string& where, SurfaceProfile base) {
  StrictObject o(j, where);
  o.read("anchor_frequencies", base.anchor_frequencies);
  o.read("absorption", base.absorption);
  o.read("diffusion", base.diffusion);
  o.finish();
  try {
    base.validate(where);
  } catch (const InvalidScene& e) {
    throw ConfigError(e.what());
  }
  return base;
}

Json to_json(const RoomSpec& room) {
  Json surfaces = Json::object();
  for (int s = 0; s < kSurfaceCount; ++s)
    surfaces[std::string(surface_name(static_cast<Surface>(s)))] = to_json(room.surfaces[s]);
  return {{"width", room.width},
          {"depth", room.depth},
          {"height", room.height},
          {"receiver", {room.receiver.x, room.receiver.y, room.receiver.z}},
          {"receiver_yaw", room.receiver_yaw},
          {"speed_of_sound", room.speed_of_sound},
          {"surfaces", surfaces}};
}

RoomSpec room_from_json(const Json& j, RoomSpec base) {
  StrictObject o(j, "room");
  o.read("width", base.width);
  o.read("depth", base.depth);
  o.read("height", base.height);
  o.read("receiver_yaw", base.receiver_yaw);
  o.read("speed_of_sound", base.speed_of_sound);
  if (const Json* r = o.child("receiver")) {
    if (!r->is_array() || r->size() != 3 || !(*r)[0].is_number() || !(*r)[1].is_number() ||
        !(*r)[2].is_number())
      throw ConfigError("room.receiver: expected [x, y, z]");
    base.receiver = {(*r)[0].get<double>(), (*r)[1].get<double>(), (*r)[2].get<double>()};
  }
  if (const Json* w = o.child("walls")) {
    // Shorthand: one profile applied to the four walls.
    const SurfaceProfile p = surface_from_json(*w, "room.walls", base.surfaces[0]);
    for (int s = 0; s < 4; ++s) base.surfaces[s] = p;
  }
  if (const Json* s = o.child("surfaces")) {
    StrictObject so(*s, "room.surfaces");
    for (int i = 0; i < kSurfaceCount; ++i) {
      const std::string name(surface_name(static_cast<Surface>(i)));
      if (const Json* p = so.child(name))
        base.surfaces[i] = surface_from_json(*p, "room.surfaces." + name, base.surfaces[i]);
    }
    so.finish();
  }
  o.finish();
  try {
    base.validate();
  } catch (const InvalidScene& e) {
    throw ConfigError(std::string("room: ") + e.what());
  }
  return base;
}

Json head_to_json(const HeadModel& head, const std::string& hrir_directory) {
  if (!head.is_parametric()) {
    return {{"type", "hrir"},
            {"directory", hrir_directory},
            {"interpolation",
             head.interpolation() == HrirInterpolation::nearest ? "nearest" : "bilinear"}};
  }
  const auto& s = head.sphere_params();
  return {{"type", "sphere"},
          {"radius", s.radius},
          {"ear_azimuth", s.ear_azimuth},
          {"min_shadow", s.min_shadow},
          {"speed_of_sound", s.speed_of_sound}};
}

HeadModel head_from_json(const Json& j) {
  StrictObject o(j, "head");
  std::string type = "sphere";
  o.read("type", type);
  if (type == "sphere") {
    HeadModel::Sphere s;
    o.read("radius", s.radius);
    o.read("ear_azimuth", s.ear_azimuth);
    o.read("min_shadow", s.min_shadow);
    o.read("speed_of_sound", s.speed_of_sound);
    o.finish();
    try {
      return HeadModel::sphere(s);
    } catch (const InvalidScene& e) {
      throw ConfigError(std::string("head: ") + e.what());
    }
  }
  if (type == "hrir") {
    std::string dir;
    std::string interp = "nearest";
    o.read("directory", dir);
    o.read("interpolation", interp);
    o.finish();
    if (dir.empty()) throw ConfigError("head.directory is required for type hrir");
    if (interp != "nearest" && interp != "bilinear")
      throw ConfigError("head.interpolation must be nearest or bilinear");
    return HeadModel::measured(load_hrir_set(dir), interp == "nearest"
                                                       ? HrirInterpolation::nearest
                                                       : HrirInterpolation::bilinear);
  }
  throw ConfigError("head.type must be sphere or hrir, got '" + type + "'");
}

Json to_json(const SimConfig& c) {
  return {{"sample_rate", c.sample_rate},
          {"duration", c.duration},
          {"max_order", c.max_order},
          {"max_order_cap", c.max_order_cap},
          {"order_threshold_db", c.order_threshold_db},
          {"sinc_taps", c.sinc_taps},
          {"band_taps", c.band_taps},
          {"diffusion", c.diffusion},
          {"n_rays", c.n_rays},
          {"rain",
           {{"bin_width", c.rain.bin_width},
            {"energy_floor", c.rain.energy_floor},
            {"receiver_radius", c.rain.receiver_radius}}}};
}

SimConfig sim_config_from_json(const Json& j, SimConfig base) {
  StrictObject o(j, "simulation");
  o.read("sample_rate", base.sample_rate);
  o.read("duration", base.duration);
  o.read("max_order", base.max_order);
  o.read("max_order_cap", base.max_order_cap);
  o.read("order_threshold_db", base.order_threshold_db);
  o.read("sinc_taps", base.sinc_taps);
  o.read("band_taps", base.band_taps);
  o.read("diffusion", base.diffusion);
  o.read("n_rays", base.n_rays);
  if (const Json* r = o.child("rain")) {
    StrictObject ro(*r, "simulation.rain");
    ro.read("bin_width", base.rain.bin_width);
    ro.read("energy_floor", base.rain.energy_floor);
    ro.read("receiver_radius", base.rain.receiver_radius);
    ro.finish();
  }
  o.finish();
  try {
    base.validate();
  } catch (const InvalidScene& e) {
    throw ConfigError(std::string("simulation: ") + e.what());
  }
  return base;
}

Json to_json(const FeatureConfig& c) {
  return {{"sample_rate", c.sample_rate},   {"window_ms", c.window_ms},
          {"overlap", c.overlap},           {"cutoff", c.cutoff},
          {"noise_duration", c.noise_duration}, {"epsilon", c.epsilon}};
}

FeatureConfig feature_config_from_json(const Json& j, FeatureConfig base) {
  StrictObject o(j, "features");
  o.read("sample_rate", base.sample_rate);
  o.read("window_ms", base.window_ms);
  o.read("overlap", base.overlap);
  o.read("cutoff", base.cutoff);
  o.read("noise_duration", base.noise_duration);
  o.read("epsilon", base.epsilon);
  o.finish();
  base.validate();
  return base;
}

Json to_json(const EmConfig& c) {
  return {{"max_iter", c.max_iter},
          {"tol", c.tol},
          {"covariance", covariance_name(c.covariance)},
          {"init_pcs", c.init_pcs},
          {"kmeans_iter", c.kmeans_iter},
          {"variance_floor", c.variance_floor}};
}

EmConfig em_config_from_json(const Json& j, EmConfig base) {
  StrictObject o(j, "gllim.em");
  o.read("max_iter", base.max_iter);
  o.read("tol", base.tol);
  std::string cov = covariance_name(base.covariance);
  o.read("covariance", cov);
  base.covariance = parse_covariance(cov);
  o.read("init_pcs", base.init_pcs);
  o.read("kmeans_iter", base.kmeans_iter);
  o.read("variance_floor", base.variance_floor);
  o.finish();
  if (base.max_iter < 1) throw ConfigError("gllim.em.max_iter must be >= 1");
  if (!(base.tol >= 0.0)) throw ConfigError("gllim.em.tol must be >= 0");
  if (!(base.variance_floor > 0.0)) throw ConfigError("gllim.em.variance_floor must be positive");
  return base;
}

Json parse_json_file(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read " + path.string() + ": " + e.what());
  }
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace vsloc
