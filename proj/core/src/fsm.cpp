#include "deckland/fsm.hpp"

namespace deckland {

const char* to_string(FlightState s) {
  switch (s) {
    case FlightState::kIdle: return "idle";
    case FlightState::kGetAltitude: return "get_altitude";
    case FlightState::kApproach: return "approach";
    case FlightState::kTracking: return "tracking";
    case FlightState::kTrackingStable: return "tracking_stable";
    case FlightState::kDescent: return "descent";
    case FlightState::kFlare: return "flare";
    case FlightState::kLanded: return "landed";
  }
  return "?";
}

namespace {

StepOutcome stay(FlightState s) { return {s, false, ""}; }

StepOutcome go(FlightState s, const char* guard) { return {s, true, guard}; }

}  // namespace

StepOutcome mission_step(FlightState state, const GuardInputs& in) {
  switch (state) {
    case FlightState::kIdle:
      if (in.uav_ready) return go(FlightState::kGetAltitude, "uav_ready");
      return stay(state);

    case FlightState::kGetAltitude:
      if (in.altitude_reached) return go(FlightState::kApproach, "altitude_reached");
      return stay(state);

    case FlightState::kApproach:
      if (in.usv_visible) return go(FlightState::kTracking, "usv_visible");
      return stay(state);

    case FlightState::kTracking:
      if (in.stable_above) return go(FlightState::kTrackingStable, "stable_above");
      return stay(state);

    case FlightState::kTrackingStable:
      if (in.landing_conditions.all())
        return go(FlightState::kDescent, "landing_conditions");
      return stay(state);

    case FlightState::kDescent:
      // Aborts outrank the flare gate: a descent that loses its conditions
      // at flare height must back off, not commit.
      if (in.measurement_timeout)
        return go(FlightState::kTracking, "measurement_timeout");
      if (!in.landing_conditions.all())
        return go(FlightState::kTracking, "conditions_lost");
      if (in.flare_height_reached)
        return go(FlightState::kFlare, "flare_height_reached");
      return stay(state);

    case FlightState::kFlare:
      // Touchdown outranks aborts: once on the deck, backing off is worse
      // than accepting the landing.
      if (in.touchdown) return go(FlightState::kLanded, "touchdown");
      if (in.measurement_timeout)
        return go(FlightState::kTracking, "measurement_timeout");
      if (!in.usv_visible) return go(FlightState::kTracking, "usv_lost");
      if (!in.landing_conditions.all())
        return go(FlightState::kTracking, "conditions_lost");
      return stay(state);

    case FlightState::kLanded:
      return stay(state);
  }
  return stay(state);
}

bool touchdown_criterion(const TouchdownEvidence& e, const TouchdownConfig& cfg) {
  if (e.range_to_deck >= cfg.range) return false;
  return e.thrust_estimate < cfg.thrust_fraction ||
         e.vertical_accel_spike > cfg.accel_spike;
}

bool TouchdownDetector::update(const TouchdownEvidence& e) {
  if (touchdown_criterion(e, cfg_)) {
    if (streak_ < cfg_.ticks) ++streak_;
  } else {
    streak_ = 0;
  }
  return streak_ >= cfg_.ticks;
}

}  // namespace deckland
