#include "deckland/uav_model.hpp"

#include <cmath>

#include "deckland/geometry.hpp"

namespace deckland {

namespace {

// d/droll and d/dpitch of euler_rate_to_body, used for the Coriolis terms.
Eigen::Matrix3d d_rate_map_droll(double roll, double pitch) {
  const double cf = std::cos(roll), sf = std::sin(roll);
  const double ct = std::cos(pitch);
  Eigen::Matrix3d d;
  d << 0, 0, 0,
       0, -sf, cf * ct,
       0, -cf, -sf * ct;
  return d;
}

Eigen::Matrix3d d_rate_map_dpitch(double roll, double pitch) {
  const double cf = std::cos(roll), sf = std::sin(roll);
  const double ct = std::cos(pitch), st = std::sin(pitch);
  Eigen::Matrix3d d;
  d << 0, 0, -ct,
       0, 0, -sf * st,
       0, 0, -cf * st;
  return d;
}

// Generalized inertia in attitude coordinates and its Coriolis companion,
// from the Lagrangian form of the rotational dynamics. The Coriolis matrix
// follows the Christoffel construction, so C * rates vanishes at zero rates
// and the hover equilibrium is exact.
struct AttitudeDynamics {
  Eigen::Matrix3d M;
  Eigen::Matrix3d C;
};

AttitudeDynamics attitude_dynamics(const UavParams& params, double roll,
                                   double pitch,
                                   const Eigen::Vector3d& rates) {
  const Eigen::Matrix3d inertia = params.inertia.asDiagonal();
  const Eigen::Matrix3d t = euler_rate_to_body(roll, pitch);

  AttitudeDynamics out;
  out.M = t.transpose() * inertia * t;

  Eigen::Matrix3d dm[3];
  const Eigen::Matrix3d dtf = d_rate_map_droll(roll, pitch);
  const Eigen::Matrix3d dtt = d_rate_map_dpitch(roll, pitch);
  dm[0] = dtf.transpose() * inertia * t + t.transpose() * inertia * dtf;
  dm[1] = dtt.transpose() * inertia * t + t.transpose() * inertia * dtt;
  dm[2].setZero();  // no yaw dependence

  out.C.setZero();
  for (int k = 0; k < 3; ++k) {
    for (int j = 0; j < 3; ++j) {
      double sum = 0.0;
      for (int i = 0; i < 3; ++i) {
        sum += 0.5 * (dm[i](k, j) + dm[j](k, i) - dm[k](i, j)) * rates(i);
      }
      out.C(k, j) = sum;
    }
  }
  return out;
}

}  // namespace

Eigen::Vector3d rotor_torque(const UavParams& params, const Vector4& omega_sq) {
  const double kl = params.k_thrust * params.arm_length;
  const double b = params.k_drag;
  Eigen::Vector3d tau;
  tau.x() = kl * (-omega_sq(0) - omega_sq(1) + omega_sq(2) + omega_sq(3));
  tau.y() = kl * (-omega_sq(0) + omega_sq(1) + omega_sq(2) - omega_sq(3));
  tau.z() = b * (-omega_sq(0) + omega_sq(1) - omega_sq(2) + omega_sq(3));
  return tau;
}

State12 nonlinear_derivative(const UavParams& params, const State12& x,
                             const RotorCommand& u) {
  const double pitch = wrap_pi(x(kPitch));
  if (std::abs(pitch) >= M_PI / 2.0 - params.pitch_margin) {
    throw PitchSingularity(x(kPitch));
  }
  const double roll = x(kRoll);
  const double yaw = x(kYaw);
  const Eigen::Vector3d rates = x.segment<3>(kWroll);

  State12 dx;
  dx.segment<3>(kPx) = x.segment<3>(kVx);
  dx.segment<3>(kRoll) = rates;

  const double thrust = params.k_thrust * u.omega_sq.sum();
  const Eigen::Vector3d up =
      rot_body_to_world_xyz(roll, pitch, yaw).col(2);
  dx.segment<3>(kVx) =
      Eigen::Vector3d(0, 0, -params.gravity) + up * (thrust / params.mass);

  const AttitudeDynamics att = attitude_dynamics(params, roll, pitch, rates);
  const Eigen::Vector3d tau = rotor_torque(params, u.omega_sq);
  dx.segment<3>(kWroll) = att.M.ldlt().solve(tau - att.C * rates);
  return dx;
}

double hover_rotor_speed(const UavParams& params) {
  return std::sqrt(params.hover_omega_sq());
}

LinearModel linearize_hover(const UavParams& params) {
  LinearModel model;
  model.Ac.setZero();
  model.Bc.setZero();

  model.Ac.block<6, 6>(0, 6).setIdentity();

  // Gravity-tilt coupling: with all four rotors at the hover speed, pitching
  // redirects the hover thrust along world x and rolling along minus world y.
  // The attitude-acceleration rows of the coupling block vanish because the
  // symmetric rotor set produces zero net torque at hover.
  const double g_eff =
      params.k_thrust * 4.0 * params.hover_omega_sq() / params.mass;
  model.Ac(kVx, kPitch) = g_eff;
  model.Ac(kVy, kRoll) = -g_eff;

  const double km = params.k_thrust / params.mass;
  const double kl = params.k_thrust * params.arm_length;
  model.Bc.row(kVz) << km, km, km, km;
  model.Bc.row(kWroll) << -kl, -kl, kl, kl;
  model.Bc.row(kWroll) /= params.inertia.x();
  model.Bc.row(kWpitch) << -kl, kl, kl, -kl;
  model.Bc.row(kWpitch) /= params.inertia.y();
  model.Bc.row(kWyaw) << -params.k_drag, params.k_drag, -params.k_drag,
      params.k_drag;
  model.Bc.row(kWyaw) /= params.inertia.z();
  return model;
}

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& m) {
  const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  }
  const Eigen::MatrixXd scaled = m / std::ldexp(1.0, squarings);

  Eigen::MatrixXd result =
      Eigen::MatrixXd::Identity(m.rows(), m.cols());
  Eigen::MatrixXd term = result;
  for (int k = 1; k <= 16; ++k) {
    term = term * scaled / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-19 * result.cwiseAbs().maxCoeff()) {
      break;
    }
  }
  for (int i = 0; i < squarings; ++i) {
    result = result * result;
  }
  return result;
}

void discretize(LinearModel& model, double dt) {
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(16, 16);
  aug.topLeftCorner<12, 12>() = model.Ac;
  aug.topRightCorner<12, 4>() = model.Bc;
  const Eigen::MatrixXd expm = matrix_exponential(aug * dt);
  model.A = expm.topLeftCorner<12, 12>();
  model.B = expm.topRightCorner<12, 4>();
  model.dt = dt;
}

State12 rk4_step(const UavParams& params, const State12& x,
                 const RotorCommand& u, double dt) {
  const State12 k1 = nonlinear_derivative(params, x, u);
  const State12 k2 = nonlinear_derivative(params, x + 0.5 * dt * k1, u);
  const State12 k3 = nonlinear_derivative(params, x + 0.5 * dt * k2, u);
  const State12 k4 = nonlinear_derivative(params, x + dt * k3, u);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace deckland
