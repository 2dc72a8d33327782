#pragma once

// JSON (de)serialisation of the configuration types. Readers are strict:
// unknown keys and wrongly typed values raise ConfigError naming the path.

#include <set>
#include <string>

#include <json.hpp>

#include "vsloc/features.hpp"
#include "vsloc/gllim.hpp"
#include "vsloc/head_model.hpp"
#include "vsloc/render.hpp"
#include "vsloc/room.hpp"

namespace vsloc {

using Json = nlohmann::json;

// Tracks which keys of an object were consumed.
class StrictObject {
 public:
  StrictObject(const Json& j, std::string where);

  bool has(const std::string& key) const { return j_.contains(key); }
  const Json* child(const std::string& key);

  template <class T>
  void read(const std::string& key, T& out) {
    const Json* v = child(key);
    if (!v) return;
    try {
      out = v->get<T>();
    } catch (const nlohmann::json::exception&) {
      throw_type(key, v->type_name());
    }
  }

  // Throws ConfigError listing every key not consumed.
  void finish() const;
  const std::string& where() const { return where_; }

 private:
  [[noreturn]] void throw_type(const std::string& key, const char* got) const;

  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

Json to_json(const SurfaceProfile& s);
SurfaceProfile surface_from_json(const Json& j, const std::string& where, SurfaceProfile base);

Json to_json(const RoomSpec& room);
RoomSpec room_from_json(const Json& j, RoomSpec base = RoomSpec::default_room());

// {"type": "sphere", radius, ear_azimuth, min_shadow, speed_of_sound} or
// {"type": "hrir", "directory": path, "interpolation": "nearest" | "bilinear"}.
Json head_to_json(const HeadModel& head, const std::string& hrir_directory = "");
HeadModel head_from_json(const Json& j);

Json to_json(const SimConfig& c);
SimConfig sim_config_from_json(const Json& j, SimConfig base = {});

Json to_json(const FeatureConfig& c);
FeatureConfig feature_config_from_json(const Json& j, FeatureConfig base = {});

Json to_json(const EmConfig& c);
EmConfig em_config_from_json(const Json& j, EmConfig base = {});

Json parse_json_file(const std::filesystem::path& path);

}  // namespace vsloc
