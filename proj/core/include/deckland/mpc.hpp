#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "deckland/qp.hpp"
#include "deckland/uav_model.hpp"
#include "deckland/usv.hpp"

namespace deckland {

// Receding-horizon trajectory generation. The discrete hover model is
// augmented with the previous rotor command so the decision variables are
// command increments; penalizing increments instead of commands gives smooth
// rotor profiles and makes the regulator-style cost hover-correct. Rotor
// commands are handled in hover units (omega^2 / hover omega^2 - 1), which
// keeps the increment penalty commensurate with the state weights.

// Augmented prediction model z_{k+1} = A z_k + B v_k with z = [x; u_prev]
// and v the input increment. The first ny entries of z are the costed
// outputs.
struct AugmentedModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  int na = 0;  // augmented state dimension
  int nu = 0;  // input dimension
  int ny = 0;  // costed output dimension (leading block of the state)
  double dt = 0.0;
};

// Wraps a discrete UAV model; inputs are normalized by input_scale (the
// hover rotor speed squared), so B is rescaled accordingly.
AugmentedModel build_augmented(const LinearModel& model, double input_scale);

// Distance-scheduled weight: base * (1 + alpha * exp(-beta * distance)).
// Far from the target this is the base weight; close in it boosts the
// channels that decide touchdown quality.
double faa_weight(double base, double alpha, double beta, double distance);

enum class MpcPhase { kNavigate, kFollow, kLand };

struct MpcWeights {
  Eigen::VectorXd q;        // one weight per costed output
  double du_penalty = 0.1;  // weight on every input increment
};

// Stage weights for the 12-state UAV output. The schedule keys on the
// distance to the landing point, so it engages only near the deck:
//   z     40   * (1 + 250   exp(-20 d))
//   roll   1   * (1 + 50000 exp(-10 d))
//   pitch  1   * (1 + 50000 exp(-10 d))
//   vz   3000  * (1 + 1     exp(-25 d))
// with yaw fixed at 50. Follow and landing raise the planar velocity
// weights to 30 so the vehicle matches the deck's motion, not just its
// position.
MpcWeights build_weights(MpcPhase phase, double distance_to_deck);

struct MpcLimits {
  double max_tilt = 0.7854;            // rad, roll and pitch
  double max_horizontal_speed = 8.0;   // m/s
  double max_vertical_speed = 4.0;     // m/s
  double max_body_rate = 2.0;          // rad/s
  // Altitude floor. Sits below the deepest deck trough: flight above water
  // is the references' job, the box only arrests a runaway descent.
  double min_altitude = -2.0;          // m, lower bound only
  double du_lower = -1.0;              // rotor command box, hover units
  double du_upper = 1.5;
  double slew = 0.3;                   // per-step increment bound, hover units

  // Quadratic penalty on the velocity-box slack variables. The plant never
  // tracks the linear prediction exactly, so the measured speed can sit
  // slightly outside its box; a hard stage constraint would then be
  // infeasible. The speed boxes are therefore soft: exceeding them costs
  // 0.5 * velocity_softness * slack^2, which holds normal operation at the
  // bound to within millimetres per second but lets an out-of-box state
  // buy a recovery plan instead of a solver failure.
  double velocity_softness = 1e7;
};

// Reference geometry shared by the builders.
struct ReferenceConfig {
  double approach_altitude = 15.0;   // m, transit altitude
  double tracking_altitude = 7.0;    // m, hover height above the deck
  double approach_speed = 8.0;       // m/s, planar closing speed on the vessel
  double descent_rate = 1.0;         // m/s relative to the deck
  double flare_rate = 0.5;           // m/s relative to the deck
  double climb_rate = 2.0;           // m/s, altitude changes away from the deck
  double rest_deck_height = 1.0;     // calm-water deck height
  int horizon = 20;
  double dt = 0.1;
};

// A per-stage full-state reference plus the scheduling distance and a
// multiplicative weight mask (zero entries release a channel entirely).
struct FullStateReference {
  Eigen::MatrixXd states;        // horizon x 12
  Eigen::VectorXd weight_scale;  // 12
  double distance_to_deck = 1e9;
};

class InsufficientPrediction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Climb or descend to the transit altitude while holding position; used
// before the vessel is in view, so there is no deck prediction to consume.
FullStateReference build_altitude_reference(const State12& uav,
                                            const ReferenceConfig& cfg);

// Transit toward the predicted vessel position at the transit altitude.
FullStateReference build_approach_reference(
    const State12& uav, const std::vector<UsvDeckState>& deck,
    const ReferenceConfig& cfg);

// Hover at the tracking altitude above the moving deck, matching its
// planar velocity and heading.
FullStateReference build_follow_reference(const State12& uav,
                                          const std::vector<UsvDeckState>& deck,
                                          const ReferenceConfig& cfg);

// Descend onto the deck at the configured rate relative to its heave; the
// flare variant slows to the touchdown rate. Roll, pitch, and the attitude
// rates track the predicted deck motion so the vehicle meets the surface
// aligned with it, which is what the distance-scheduled attitude weights
// are there to enforce.
FullStateReference build_descent_reference(
    const State12& uav, const std::vector<UsvDeckState>& deck,
    const ReferenceConfig& cfg, bool flare);

// One box constraint applied to an augmented-state entry at every predicted
// stage. Indices >= 12 address the carried input command. A soft box gets
// one shared nonnegative slack variable that relaxes both sides at every
// stage and costs 0.5 * softness * slack^2 in the objective.
struct StageBox {
  int index;
  double lower;
  double upper;
  bool soft = false;
  double softness = 1e7;
};

// Dense condensation of the tracking problem into a QP over the stacked
// input increments, followed by one slack variable per soft box. `ref` has
// one row per stage; the terminal stage carries no state weight. Also
// returns the stacked free response and input map so callers can rebuild
// predicted trajectories, plus the objective's constant term.
struct CondensedQp {
  QpProblem qp;
  Eigen::MatrixXd phi;    // (na * N) x na
  Eigen::MatrixXd gamma;  // (na * N) x (nu * N)
  double constant = 0.0;
  int slacks = 0;         // trailing slack variables in qp
};

CondensedQp condense(const AugmentedModel& m, const Eigen::VectorXd& z0,
                     const Eigen::MatrixXd& ref, const MpcWeights& weights,
                     const std::vector<StageBox>& boxes, double slew_limit);

struct TrajectoryPlan {
  Eigen::MatrixXd states;  // horizon x 12, predicted absolute states
  Eigen::MatrixXd inputs;  // horizon x 4, rotor speeds squared
  RotorCommand first;      // inputs row 0 as a command
  bool fallback = false;   // true when this plan is a shifted previous plan
};

class NoFallback : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrajectoryGenerator {
 public:
  explicit TrajectoryGenerator(const UavParams& uav, ReferenceConfig cfg = {},
                               MpcLimits limits = {});

  // Plans from the measured state and the command currently applied. Throws
  // NoFallback after `max_fallbacks` consecutive solver failures.
  TrajectoryPlan generate(const State12& state, const Vector4& prev_omega_sq,
                          MpcPhase phase, const FullStateReference& ref);

  const AugmentedModel& model() const { return aug_; }
  const ReferenceConfig& config() const { return cfg_; }
  MpcLimits& limits() { return limits_; }
  int max_fallbacks = 3;

 private:
  TrajectoryPlan assemble(const Eigen::VectorXd& z0,
                          const Eigen::MatrixXd& du) const;

  UavParams uav_;
  ReferenceConfig cfg_;
  MpcLimits limits_;
  AugmentedModel aug_;
  std::vector<int> warm_;
  Eigen::MatrixXd last_du_;  // horizon x 4, hover units
  bool has_last_ = false;
  int fallbacks_ = 0;
};

}  // namespace deckland
