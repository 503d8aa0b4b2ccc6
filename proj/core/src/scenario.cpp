#include "deckland/scenario.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace deckland {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) {
  throw ScenarioError("scenario: " + msg);
}

void check_keys(const json& j, const char* where,
                std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) fail(std::string(where) + " must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (std::string_view k : allowed) known = known || item.key() == k;
    if (!known) fail("unknown key \"" + item.key() + "\" in " + where);
  }
}

double get_num(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number()) fail(std::string(key) + " must be a number");
  return v.get<double>();
}

bool get_bool(const json& j, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_boolean()) fail(std::string(key) + " must be a boolean");
  return v.get<bool>();
}

Eigen::Vector2d get_vec2(const json& v, const char* what) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    fail(std::string(what) + " must be an array of two numbers");
  return {v[0].get<double>(), v[1].get<double>()};
}

void parse_sea(const json& j, Scenario& s) {
  check_keys(j, "sea", {"preset", "components", "randomize_phases"});
  const bool has_preset = j.contains("preset");
  const bool has_components = j.contains("components");
  if (has_preset == has_components)
    fail("sea takes exactly one of \"preset\" or \"components\"");
  if (has_preset) {
    if (!j.at("preset").is_string()) fail("sea preset must be a string");
    s.sea_preset = j.at("preset").get<std::string>();
    try {
      make_sea_preset(s.sea_preset);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    s.sea_components.clear();
  } else {
    s.sea_preset.clear();
    const json& comps = j.at("components");
    if (!comps.is_array() || comps.empty())
      fail("sea components must be a non-empty array");
    for (const json& c : comps) {
      check_keys(c, "sea component",
                 {"amplitude", "period", "direction_deg", "steepness", "phase"});
      if (!c.contains("amplitude") || !c.contains("period"))
        fail("sea component needs amplitude and period");
      try {
        s.sea_components.push_back(make_wave(
            get_num(c, "amplitude", 0.0), get_num(c, "period", 0.0),
            get_num(c, "direction_deg", 0.0) * M_PI / 180.0,
            get_num(c, "steepness", 0.6), get_num(c, "phase", 0.0)));
      } catch (const std::invalid_argument& e) {
        fail(e.what());
      }
    }
  }
  s.randomize_wave_phases = get_bool(j, "randomize_phases", true);
}

void parse_usv(const json& j, Scenario& s) {
  check_keys(j, "usv",
             {"mode", "current", "points", "speed", "capture_radius", "loop"});
  if (!j.contains("mode") || !j.at("mode").is_string())
    fail("usv mode must be \"drift\" or \"waypoints\"");
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "drift") {
    s.usv_mode = UsvMode::kDrift;
    for (const char* k : {"points", "speed", "capture_radius", "loop"})
      if (j.contains(k))
        fail(std::string("\"") + k + "\" is only valid in waypoints mode");
    if (j.contains("current")) s.current = get_vec2(j.at("current"), "current");
  } else if (mode == "waypoints") {
    s.usv_mode = UsvMode::kWaypoints;
    if (j.contains("current")) fail("\"current\" is only valid in drift mode");
    if (!j.contains("points")) fail("waypoints mode needs \"points\"");
    const json& pts = j.at("points");
    if (!pts.is_array() || pts.empty())
      fail("points must be a non-empty array of [x, y] pairs");
    s.waypoints.points.clear();
    for (const json& p : pts)
      s.waypoints.points.push_back(get_vec2(p, "waypoint"));
    s.waypoints.speed = get_num(j, "speed", s.waypoints.speed);
    if (s.waypoints.speed <= 0.0) fail("speed must be positive");
    s.waypoints.capture_radius =
        get_num(j, "capture_radius", s.waypoints.capture_radius);
    s.waypoints.loop = get_bool(j, "loop", s.waypoints.loop);
  } else {
    fail("usv mode must be \"drift\" or \"waypoints\"");
  }
}

void parse_range(const json& v, const char* what, double& lo, double& hi) {
  const Eigen::Vector2d r = get_vec2(v, what);
  if (r(0) > r(1)) fail(std::string(what) + " range must be [min, max]");
  lo = r(0);
  hi = r(1);
}

void parse_start(const json& j, Scenario& s) {
  check_keys(j, "uav_start", {"distance", "altitude"});
  if (j.contains("distance"))
    parse_range(j.at("distance"), "distance", s.start.distance_min,
                s.start.distance_max);
  if (j.contains("altitude"))
    parse_range(j.at("altitude"), "altitude", s.start.altitude_min,
                s.start.altitude_max);
  if (s.start.distance_min <= 0.0) fail("start distance must be positive");
}

void parse_noise(const json& j, Scenario& s) {
  check_keys(j, "noise",
             {"position_rmse", "attitude_rmse", "velocity_rmse", "rate_rmse",
              "dropout_probability"});
  s.noise.position_rmse = get_num(j, "position_rmse", s.noise.position_rmse);
  s.noise.attitude_rmse = get_num(j, "attitude_rmse", s.noise.attitude_rmse);
  s.noise.velocity_rmse = get_num(j, "velocity_rmse", s.noise.velocity_rmse);
  s.noise.rate_rmse = get_num(j, "rate_rmse", s.noise.rate_rmse);
  s.noise.dropout_probability =
      get_num(j, "dropout_probability", s.noise.dropout_probability);
  if (s.noise.dropout_probability < 0.0 || s.noise.dropout_probability >= 1.0)
    fail("dropout_probability must be in [0, 1)");
}

void parse_mpc(const json& j, Scenario& s) {
  check_keys(j, "mpc",
             {"approach_altitude", "tracking_altitude", "approach_speed",
              "descent_rate", "flare_rate", "climb_rate", "rest_deck_height",
              "horizon", "dt"});
  ReferenceConfig& r = s.reference;
  r.approach_altitude = get_num(j, "approach_altitude", r.approach_altitude);
  r.tracking_altitude = get_num(j, "tracking_altitude", r.tracking_altitude);
  r.approach_speed = get_num(j, "approach_speed", r.approach_speed);
  r.descent_rate = get_num(j, "descent_rate", r.descent_rate);
  r.flare_rate = get_num(j, "flare_rate", r.flare_rate);
  r.climb_rate = get_num(j, "climb_rate", r.climb_rate);
  r.rest_deck_height = get_num(j, "rest_deck_height", r.rest_deck_height);
  if (j.contains("horizon")) {
    if (!j.at("horizon").is_number_integer())
      fail("horizon must be an integer");
    r.horizon = j.at("horizon").get<int>();
    if (r.horizon < 2) fail("horizon must be at least 2");
  }
  r.dt = get_num(j, "dt", r.dt);
  if (r.dt <= 0.0) fail("dt must be positive");
}

void parse_limits(const json& j, Scenario& s) {
  check_keys(j, "limits",
             {"max_tilt", "max_horizontal_speed", "max_vertical_speed",
              "max_body_rate", "min_altitude", "slew", "velocity_softness"});
  MpcLimits& l = s.limits;
  l.max_tilt = get_num(j, "max_tilt", l.max_tilt);
  l.max_horizontal_speed =
      get_num(j, "max_horizontal_speed", l.max_horizontal_speed);
  l.max_vertical_speed = get_num(j, "max_vertical_speed", l.max_vertical_speed);
  l.max_body_rate = get_num(j, "max_body_rate", l.max_body_rate);
  l.min_altitude = get_num(j, "min_altitude", l.min_altitude);
  l.slew = get_num(j, "slew", l.slew);
  l.velocity_softness = get_num(j, "velocity_softness", l.velocity_softness);
}

void parse_fsm(const json& j, Scenario& s) {
  check_keys(j, "fsm",
             {"stable_distance", "stable_speed", "descent_distance",
              "flare_height", "measurement_timeout", "altitude_band",
              "visibility_range", "max_deck_attitude", "max_deck_rate"});
  FsmThresholds& f = s.fsm;
  f.stable_distance = get_num(j, "stable_distance", f.stable_distance);
  f.stable_speed = get_num(j, "stable_speed", f.stable_speed);
  f.descent_distance = get_num(j, "descent_distance", f.descent_distance);
  f.flare_height = get_num(j, "flare_height", f.flare_height);
  f.measurement_timeout =
      get_num(j, "measurement_timeout", f.measurement_timeout);
  f.altitude_band = get_num(j, "altitude_band", f.altitude_band);
  f.visibility_range = get_num(j, "visibility_range", f.visibility_range);
  f.max_deck_attitude = get_num(j, "max_deck_attitude", f.max_deck_attitude);
  f.max_deck_rate = get_num(j, "max_deck_rate", f.max_deck_rate);
}

void parse_touchdown(const json& j, Scenario& s) {
  check_keys(j, "touchdown",
             {"thrust_fraction", "accel_spike", "range", "ticks"});
  TouchdownConfig& t = s.touchdown;
  t.thrust_fraction = get_num(j, "thrust_fraction", t.thrust_fraction);
  t.accel_spike = get_num(j, "accel_spike", t.accel_spike);
  t.range = get_num(j, "range", t.range);
  if (j.contains("ticks")) {
    if (!j.at("ticks").is_number_integer()) fail("ticks must be an integer");
    t.ticks = j.at("ticks").get<int>();
    if (t.ticks < 1) fail("ticks must be at least 1");
  }
}

}  // namespace

std::vector<WaveComponent> Scenario::sea() const {
  if (!sea_components.empty()) return sea_components;
  return make_sea_preset(sea_preset);
}

Scenario parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }

  Scenario s;
  try {
    check_keys(j, "scenario",
               {"name", "sea", "usv", "uav_start", "noise", "mpc", "limits",
                "fsm", "touchdown", "timeout", "seed"});
    if (j.contains("name")) {
      if (!j.at("name").is_string()) fail("name must be a string");
      s.name = j.at("name").get<std::string>();
    }
    if (j.contains("sea")) parse_sea(j.at("sea"), s);
    if (j.contains("usv")) parse_usv(j.at("usv"), s);
    if (j.contains("uav_start")) parse_start(j.at("uav_start"), s);
    if (j.contains("noise")) parse_noise(j.at("noise"), s);
    if (j.contains("mpc")) parse_mpc(j.at("mpc"), s);
    if (j.contains("limits")) parse_limits(j.at("limits"), s);
    if (j.contains("fsm")) parse_fsm(j.at("fsm"), s);
    if (j.contains("touchdown")) parse_touchdown(j.at("touchdown"), s);
    s.timeout = get_num(j, "timeout", s.timeout);
    if (s.timeout <= 0.0) fail("timeout must be positive");
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_unsigned())
        fail("seed must be an unsigned integer");
      s.seed = j.at("seed").get<std::uint64_t>();
    }
  } catch (const json::exception& e) {
    fail(e.what());
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str());
}

Scenario make_scenario_preset(std::string_view name) {
  Scenario s;
  s.name = std::string(name);
  if (name == "calm_static") {
    s.sea_preset = "calm";
    s.start = {40.0, 40.0, 5.0, 5.0};
    s.noise.dropout_probability = 0.0;
  } else if (name == "moderate_drift") {
    s.sea_preset = "moderate";
    s.current = {0.3, 0.0};
    s.noise.dropout_probability = 0.02;
  } else if (name == "square_path") {
    s.sea_preset = "moderate";
    s.usv_mode = UsvMode::kWaypoints;
    s.waypoints.points = {{0.0, 0.0}, {40.0, 0.0}, {40.0, 40.0}, {0.0, 40.0}};
    s.waypoints.speed = 2.0;
    s.waypoints.loop = true;
    s.noise.dropout_probability = 0.02;
  } else {
    fail("unknown preset \"" + std::string(name) + "\"");
  }
  return s;
}

}  // namespace deckland
