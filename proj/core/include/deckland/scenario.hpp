#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "deckland/fsm.hpp"
#include "deckland/mpc.hpp"
#include "deckland/sea.hpp"
#include "deckland/usv.hpp"

namespace deckland {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class UsvMode { kDrift, kWaypoints };

// Start pose randomization: the vehicle spawns airborne on an annulus
// around the vessel, bearing and heading uniform.
struct StartRange {
  double distance_min = 40.0;  // m from the vessel
  double distance_max = 90.0;
  double altitude_min = 3.0;   // m above the calm waterline
  double altitude_max = 6.0;
};

// Everything an episode needs besides the seed. Parsed from a JSON file
// whose schema is documented in the repository README; unknown keys are
// rejected so a typo cannot silently fall back to a default.
struct Scenario {
  std::string name = "unnamed";

  // Sea: either a named preset or an explicit component list.
  std::string sea_preset = "moderate";
  std::vector<WaveComponent> sea_components;
  bool randomize_wave_phases = true;

  // Vessel: drifting with the current, or under way between waypoints.
  UsvMode usv_mode = UsvMode::kDrift;
  Eigen::Vector2d current{0.0, 0.0};  // m/s, world frame
  WaypointPlan waypoints;

  StartRange start;
  EstimateNoise noise;

  ReferenceConfig reference;
  MpcLimits limits;
  FsmThresholds fsm;
  TouchdownConfig touchdown;
  UavParams uav;

  double timeout = 180.0;  // s
  std::uint64_t seed = 1;

  // The wave components this scenario actually uses: the explicit list if
  // given, otherwise the named preset.
  std::vector<WaveComponent> sea() const;
};

Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);

// Built-in scenarios: "calm_static", "moderate_drift", "square_path". The
// JSON files shipped under scenarios/ parse to these same configurations.
Scenario make_scenario_preset(std::string_view name);

}  // namespace deckland
