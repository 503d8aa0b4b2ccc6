#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace deckland {

using State12 = Eigen::Matrix<double, 12, 1>;
using Vector4 = Eigen::Matrix<double, 4, 1>;

// Index layout of the 12-dimensional vehicle state, ENU world frame:
// position, attitude (roll, pitch, yaw), linear velocity, attitude rates.
enum StateIndex : int {
  kPx = 0, kPy = 1, kPz = 2,
  kRoll = 3, kPitch = 4, kYaw = 5,
  kVx = 6, kVy = 7, kVz = 8,
  kWroll = 9, kWpitch = 10, kWyaw = 11,
};

// Thrown when the attitude-rate kinematics loses rank (|pitch| near pi/2).
class PitchSingularity : public std::runtime_error {
 public:
  explicit PitchSingularity(double pitch)
      : std::runtime_error("attitude kinematics singular at pitch " +
                           std::to_string(pitch)),
        pitch(pitch) {}
  double pitch;
};

struct UavParams {
  double mass = 3.5;            // kg
  double arm_length = 0.325;    // m, rotor arm
  double k_thrust = 1.0e-5;     // N per (rad/s)^2, per rotor
  double k_drag = 2.0e-7;       // N m per (rad/s)^2, rotor yaw drag
  Eigen::Vector3d inertia{0.11, 0.11, 0.18};  // kg m^2, body diagonal
  double gravity = 9.81;        // m/s^2
  // Rotor speed-squared ceiling is set so that hover uses this fraction of
  // the total available thrust.
  double hover_thrust_fraction = 0.4;
  // Pitch margin below pi/2 at which the model refuses to evaluate.
  double pitch_margin = 1.0e-3;

  double hover_omega_sq() const { return mass * gravity / (4.0 * k_thrust); }
  double omega_sq_max() const { return hover_omega_sq() / hover_thrust_fraction; }
};

// Rotor command: squared angular rates of the four rotors.
struct RotorCommand {
  Vector4 omega_sq = Vector4::Zero();
};

// Continuous-time linearization about hover plus its zero-order-hold
// discretization. Both matrices act on deviations from the hover point
// (zero attitude and rates, any position, rotors at hover speed).
struct LinearModel {
  Eigen::Matrix<double, 12, 12> Ac;
  Eigen::Matrix<double, 12, 4> Bc;
  Eigen::Matrix<double, 12, 12> A;
  Eigen::Matrix<double, 12, 4> B;
  double dt = 0.0;
};

// Full rigid-body state derivative. Throws PitchSingularity when |pitch| is
// within params.pitch_margin of pi/2.
State12 nonlinear_derivative(const UavParams& params, const State12& x,
                             const RotorCommand& u);

// Body torque produced by the rotor set (shared by the plant and tests).
Eigen::Vector3d rotor_torque(const UavParams& params, const Vector4& omega_sq);

// Per-rotor speed that balances gravity with all four rotors equal.
double hover_rotor_speed(const UavParams& params);

// Jacobian linearization about the symmetric hover point. Only the
// continuous-time pair is filled in; call discretize() for (A, B).
LinearModel linearize_hover(const UavParams& params);

// Zero-order-hold discretization via the matrix exponential of the
// augmented [Ac Bc; 0 0] system.
void discretize(LinearModel& model, double dt);

// Classic fixed-step Runge-Kutta step of the nonlinear model.
State12 rk4_step(const UavParams& params, const State12& x,
                 const RotorCommand& u, double dt);

// Matrix exponential by scaling and squaring of a truncated Taylor series.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& m);

}  // namespace deckland
