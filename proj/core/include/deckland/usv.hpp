#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "deckland/rng.hpp"
#include "deckland/sea.hpp"

namespace deckland {

using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

// Vessel pose layout: (x, y, z, roll, pitch, yaw) in ENU with world-frame
// pose rates. Heave, roll and pitch are excited by a bank of second-order
// wave oscillators; surge, sway and yaw carry the slow maneuvering dynamics
//
//   pose_dot  = rates
//   rates_dot = -M^-1 (D rates + G (pose - rest_pose))
//               + wave_gain .* osc_accel + M^-1 actuation
//   osc_dot   = block-diag([0 1; -w^2 0]) osc
//
// where osc_accel sums, per degree of freedom, the acceleration output of
// the oscillator blocks routed to it.
struct UsvModelParams {
  Matrix6 M = Matrix6::Identity();   // rigid body + added mass
  Matrix6 D = Matrix6::Zero();       // linear damping
  Matrix6 G = Matrix6::Zero();       // restoring
  Vector6 rest_pose = Vector6::Zero();
  // Diagonal of the wave force output map, one gain per degree of freedom.
  Vector6 wave_gain = Vector6::Zero();
  // Oscillator natural frequencies, one block per (channel, component) pair
  // in channel-major order heave, roll, pitch.
  std::vector<double> wave_omega;
  double deck_height = 1.0;              // deck surface above calm waterline
  Eigen::Vector2d deck_size{2.5, 1.7};   // landing platform footprint, m

  int n_wave_states() const { return 2 * static_cast<int>(wave_omega.size()); }
  int n_components() const { return static_cast<int>(wave_omega.size()) / 3; }
  // A_wave: the block-diagonal oscillator system matrix.
  Eigen::MatrixXd wave_system() const;
};

struct UsvDeckState {
  Vector6 pose = Vector6::Zero();
  Vector6 rates = Vector6::Zero();
  Eigen::VectorXd wave_states;  // [value, rate] per oscillator block
  double t = 0.0;
};

// Default parameter set for a ~180 kg, 5 m catamaran carrying the oscillator
// bank for the given sea. Restoring and damping of the wave-driven channels
// live inside the oscillators, so those rows of D and G are zero.
UsvModelParams make_catamaran_params(const std::vector<WaveComponent>& sea);

UsvDeckState make_deck_state(const UsvModelParams& params);

// One fixed-step Runge-Kutta integration step of the vessel model.
UsvDeckState usv_step(const UsvDeckState& state, const UsvModelParams& params,
                      const Vector6& actuation, double dt);

// Re-anchors the wave-driven channels to the rendered sea at the hull's
// current position: heave to the surface elevation, roll and pitch to the
// directional surface slopes (as angles), rates to their time derivatives,
// and the oscillator bank to the per-component field so an input-free
// roll-out continues the same motion. Idempotent at fixed time.
void sync_deck_to_waves(UsvDeckState& state, const UsvModelParams& params,
                        const std::vector<WaveComponent>& sea);

// Deck attitude convention used by the sync: slope of the surface along the
// hull axes, expressed as angles.
Eigen::Vector2d deck_attitude_from_slope(const Eigen::Vector2d& slope,
                                         double yaw);

// Waypoint steering: PI surge force along the heading plus PD yaw moment
// toward the active waypoint. Produces a generalized force vector for
// usv_step. Holds the small amount of controller state (integrator, active
// waypoint).
struct WaypointPlan {
  std::vector<Eigen::Vector2d> points;
  double speed = 2.0;           // m/s along track
  double capture_radius = 3.0;  // m
  bool loop = true;
};

class WaypointController {
 public:
  WaypointController() = default;
  explicit WaypointController(WaypointPlan plan) : plan_(std::move(plan)) {}

  Vector6 update(const UsvDeckState& state, double dt);
  int active_waypoint() const { return target_; }
  const WaypointPlan& plan() const { return plan_; }

  double surge_kp = 400.0, surge_ki = 60.0;
  double yaw_kp = 800.0, yaw_kd = 1200.0;
  double sway_kd = 300.0;
  double max_force = 800.0, max_moment = 1500.0;

 private:
  WaypointPlan plan_;
  int target_ = 0;
  double integrator_ = 0.0;
};

// N-step constant-rate roll-out of the vessel model, optionally under an
// actuation policy (defaults to input-free). Element k holds the state at
// t + (k+1) dt.
using ActuationPolicy =
    std::function<Vector6(const UsvDeckState&, int step)>;
std::vector<UsvDeckState> usv_predict(const UsvDeckState& state,
                                      const UsvModelParams& params, int steps,
                                      double dt,
                                      const ActuationPolicy& policy = {});

// Measurement emulation for the deck state estimator: per-group Gaussian
// noise at the configured root-mean-square errors, plus dropouts. The
// oscillator states pass through unchanged (they stand in for the filter's
// internal wave states).
struct EstimateNoise {
  double position_rmse = 0.116;   // m
  double attitude_rmse = 0.017;   // rad
  double velocity_rmse = 0.201;   // m/s
  double rate_rmse = 0.004;       // rad/s
  double dropout_probability = 0.0;
};

std::optional<UsvDeckState> emulate_estimate(const UsvDeckState& truth,
                                             const EstimateNoise& noise,
                                             RngStream& rng);

}  // namespace deckland
