#pragma once

namespace deckland {

// Mission state machine: climb out, transit to the vessel, stabilize over
// the deck, descend when the deck is cooperative, flare, touch down. Abort
// paths lead back to Tracking; Landed is absorbing.
enum class FlightState {
  kIdle,
  kGetAltitude,
  kApproach,
  kTracking,
  kTrackingStable,
  kDescent,
  kFlare,
  kLanded,
};

const char* to_string(FlightState s);

// The descent gate. All three must hold for TrackingStable -> Descent, and
// losing any of them aborts a descent or flare back to Tracking.
struct LandingConditions {
  bool distance_ok = false;         // horizontally within the stable band
  bool prediction_feasible = false; // deck prediction usable and cooperative
  bool covariance_ok = false;       // estimate fresh and trusted

  bool all() const { return distance_ok && prediction_feasible && covariance_ok; }
};

struct GuardInputs {
  bool uav_ready = false;          // airborne and receiving vessel data
  bool altitude_reached = false;   // at the transit altitude band
  bool usv_visible = false;        // estimate valid within the timeout
  bool stable_above = false;       // hovering within the stable band at h_t
  LandingConditions landing_conditions;
  bool flare_height_reached = false;
  bool touchdown = false;
  bool measurement_timeout = false;
};

// Thresholds the episode uses to compute the guard flags. The state machine
// itself consumes only booleans; these live here so every consumer shares
// one tuned set.
struct FsmThresholds {
  double stable_distance = 0.3;      // m horizontal, stable_above band
  double stable_speed = 0.6;         // m/s planar relative to the deck
  double descent_distance = 0.45;    // m horizontal, abort band while descending
  double flare_height = 0.5;         // m above the deck along its normal
  double measurement_timeout = 0.5;  // s without an accepted estimate
  double altitude_band = 1.0;        // m, altitude_reached tolerance
  // The down-facing detector only resolves the deck inside this horizontal
  // range; beyond it the vehicle navigates on the relayed vessel position.
  double visibility_range = 25.0;    // m
  // Descent conditioning: the deck must be near level and slow before a
  // descent starts, which is what keeps touchdown attitude errors small.
  double max_deck_attitude = 0.10;   // rad
  double max_deck_rate = 0.25;       // rad/s
};

struct StepOutcome {
  FlightState next;
  bool transitioned = false;
  const char* guard = "";  // guard that fired, for the episode log
};

// One transition of the mission graph. Pure and total: guard combinations
// that match no edge keep the current state. Where several guards are true
// at once, aborts outrank progress except that touchdown outranks
// everything in Flare.
StepOutcome mission_step(FlightState state, const GuardInputs& in);

// Touchdown is declared from thrust collapse or an accelerometer spike,
// both gated on the range finder, and must persist for a few consecutive
// control ticks.
struct TouchdownEvidence {
  double thrust_estimate = 1.0;      // commanded thrust, fraction of hover
  double vertical_accel_spike = 0.0; // m/s^2 above gravity
  double range_to_deck = 1e9;        // m
};

// The thrust threshold sits above the seated commanded-thrust plateau
// (median ~0.65 of hover, p95 ~0.85 in closed loop) and well below the
// near-hover commands of terminal descent, so the collapse is caught within
// a few ticks without firing in flight.
struct TouchdownConfig {
  double thrust_fraction = 0.75;
  double accel_spike = 6.0;
  double range = 0.15;
  int ticks = 3;
};

bool touchdown_criterion(const TouchdownEvidence& e, const TouchdownConfig& cfg);

class TouchdownDetector {
 public:
  TouchdownDetector() = default;
  explicit TouchdownDetector(TouchdownConfig cfg) : cfg_(cfg) {}

  // True once the criterion has held for cfg.ticks consecutive updates.
  bool update(const TouchdownEvidence& e);
  void reset() { streak_ = 0; }
  int streak() const { return streak_; }
  const TouchdownConfig& config() const { return cfg_; }

 private:
  TouchdownConfig cfg_;
  int streak_ = 0;
};

}  // namespace deckland
