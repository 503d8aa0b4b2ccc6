#include "deckland/usv.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "deckland/geometry.hpp"

namespace deckland {

namespace {

struct VesselDerivative {
  Vector6 dpose;
  Vector6 drates;
  Eigen::VectorXd dwave;
};

// Degree of freedom driven by oscillator channel c (heave, roll, pitch).
constexpr int kChannelDof[3] = {2, 3, 4};

VesselDerivative vessel_derivative(const UsvDeckState& s,
                                   const UsvModelParams& p,
                                   const Vector6& actuation) {
  VesselDerivative d;
  d.dpose = s.rates;

  Vector6 forcing = Vector6::Zero();
  const int n = p.n_components();
  for (int c = 0; c < 3; ++c) {
    double accel = 0.0;
    for (int i = 0; i < n; ++i) {
      const int block = c * n + i;
      const double w = p.wave_omega[block];
      accel += -w * w * s.wave_states(2 * block);
    }
    const int dof = kChannelDof[c];
    forcing(dof) = p.wave_gain(dof) * accel;
  }

  const Vector6 restoring = p.G * (s.pose - p.rest_pose);
  d.drates = p.M.ldlt().solve(actuation - p.D * s.rates - restoring) + forcing;

  d.dwave.resize(s.wave_states.size());
  for (int b = 0; b < static_cast<int>(p.wave_omega.size()); ++b) {
    const double w = p.wave_omega[b];
    d.dwave(2 * b) = s.wave_states(2 * b + 1);
    d.dwave(2 * b + 1) = -w * w * s.wave_states(2 * b);
  }
  return d;
}

}  // namespace

Eigen::MatrixXd UsvModelParams::wave_system() const {
  const int n = static_cast<int>(wave_omega.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int b = 0; b < n; ++b) {
    a(2 * b, 2 * b + 1) = 1.0;
    a(2 * b + 1, 2 * b) = -wave_omega[b] * wave_omega[b];
  }
  return a;
}

UsvModelParams make_catamaran_params(const std::vector<WaveComponent>& sea) {
  UsvModelParams p;
  p.M = Vector6(230.0, 260.0, 300.0, 60.0, 180.0, 120.0).asDiagonal();
  p.D = Vector6(20.0, 40.0, 0.0, 0.0, 0.0, 80.0).asDiagonal();
  p.G = Matrix6::Zero();
  p.deck_height = 1.0;
  p.rest_pose = Vector6::Zero();
  p.rest_pose(2) = p.deck_height;
  p.wave_gain << 0, 0, 1, 1, 1, 0;
  p.wave_omega.clear();
  for (int c = 0; c < 3; ++c) {
    for (const WaveComponent& w : sea) p.wave_omega.push_back(w.omega);
  }
  return p;
}

UsvDeckState make_deck_state(const UsvModelParams& params) {
  UsvDeckState s;
  s.pose(2) = params.deck_height;
  s.wave_states = Eigen::VectorXd::Zero(params.n_wave_states());
  return s;
}

UsvDeckState usv_step(const UsvDeckState& state, const UsvModelParams& params,
                      const Vector6& actuation, double dt) {
  if (state.wave_states.size() != params.n_wave_states()) {
    throw std::invalid_argument("vessel state does not match oscillator bank");
  }
  auto axpy = [](const UsvDeckState& s, const VesselDerivative& d, double h) {
    UsvDeckState r = s;
    r.pose += h * d.dpose;
    r.rates += h * d.drates;
    r.wave_states += h * d.dwave;
    return r;
  };
  const VesselDerivative k1 = vessel_derivative(state, params, actuation);
  const VesselDerivative k2 =
      vessel_derivative(axpy(state, k1, 0.5 * dt), params, actuation);
  const VesselDerivative k3 =
      vessel_derivative(axpy(state, k2, 0.5 * dt), params, actuation);
  const VesselDerivative k4 =
      vessel_derivative(axpy(state, k3, dt), params, actuation);

  UsvDeckState out = state;
  out.pose += (dt / 6.0) * (k1.dpose + 2 * k2.dpose + 2 * k3.dpose + k4.dpose);
  out.rates +=
      (dt / 6.0) * (k1.drates + 2 * k2.drates + 2 * k3.drates + k4.drates);
  out.wave_states +=
      (dt / 6.0) * (k1.dwave + 2 * k2.dwave + 2 * k3.dwave + k4.dwave);
  out.t += dt;
  return out;
}

Eigen::Vector2d deck_attitude_from_slope(const Eigen::Vector2d& slope,
                                         double yaw) {
  const Eigen::Vector2d u_hat(std::cos(yaw), std::sin(yaw));
  const Eigen::Vector2d v_hat(-std::sin(yaw), std::cos(yaw));
  const double s_u = slope.dot(u_hat);
  const double s_v = slope.dot(v_hat);
  // Deck x points up-slope for negative pitch in the z-y-x convention.
  return {std::atan(s_v), -std::atan(s_u)};
}

void sync_deck_to_waves(UsvDeckState& state, const UsvModelParams& params,
                        const std::vector<WaveComponent>& sea) {
  const int n = params.n_components();
  if (static_cast<int>(sea.size()) != n) {
    throw std::invalid_argument("sea does not match the oscillator bank");
  }
  const Eigen::Vector2d xy = state.pose.head<2>();
  const Eigen::Vector2d vel = state.rates.head<2>();
  const double yaw = state.pose(5);
  const double yaw_rate = state.rates(5);

  const SeaSurfaceSample s = sample_sea(sea, xy, state.t, vel);

  state.pose(2) = params.deck_height + s.elevation;
  state.rates(2) = s.elevation_rate;

  const Eigen::Vector2d u_hat(std::cos(yaw), std::sin(yaw));
  const Eigen::Vector2d v_hat(-std::sin(yaw), std::cos(yaw));
  const double s_u = s.slope.dot(u_hat);
  const double s_v = s.slope.dot(v_hat);
  // Slope seen from the hull also turns with the hull.
  const double s_u_dot = s.slope_rate.dot(u_hat) + yaw_rate * s_v;
  const double s_v_dot = s.slope_rate.dot(v_hat) - yaw_rate * s_u;

  const Eigen::Vector2d att = deck_attitude_from_slope(s.slope, yaw);
  state.pose(3) = att.x();
  state.pose(4) = att.y();
  state.rates(3) = s_v_dot / (1.0 + s_v * s_v);
  state.rates(4) = -s_u_dot / (1.0 + s_u * s_u);

  // Per-component field values so an input-free roll-out continues the same
  // motion: heave blocks carry elevation, roll and pitch blocks carry the
  // directional slopes with the attitude sign convention applied.
  for (int i = 0; i < n; ++i) {
    const WaveComponent& w = sea[i];
    const double arg = w.wave_vector.dot(xy) - w.omega * state.t + w.phase;
    const double darg = w.wave_vector.dot(vel) - w.omega;
    const double c = std::cos(arg), sn = std::sin(arg);

    state.wave_states(2 * i) = w.amplitude * c;
    state.wave_states(2 * i + 1) = -w.amplitude * sn * darg;

    const double k_v = w.wave_vector.dot(v_hat);
    state.wave_states(2 * (n + i)) = -w.amplitude * sn * k_v;
    state.wave_states(2 * (n + i) + 1) = -w.amplitude * c * darg * k_v;

    const double k_u = w.wave_vector.dot(u_hat);
    state.wave_states(2 * (2 * n + i)) = w.amplitude * sn * k_u;
    state.wave_states(2 * (2 * n + i) + 1) = w.amplitude * c * darg * k_u;
  }
}

Vector6 WaypointController::update(const UsvDeckState& state, double dt) {
  Vector6 act = Vector6::Zero();
  if (plan_.points.empty()) return act;

  const Eigen::Vector2d xy = state.pose.head<2>();
  Eigen::Vector2d goal = plan_.points[target_];
  if ((goal - xy).norm() < plan_.capture_radius) {
    const int count = static_cast<int>(plan_.points.size());
    if (plan_.loop) {
      target_ = (target_ + 1) % count;
    } else if (target_ + 1 < count) {
      ++target_;
    }
    goal = plan_.points[target_];
  }

  const double yaw = state.pose(5);
  const Eigen::Vector2d u_hat(std::cos(yaw), std::sin(yaw));
  const Eigen::Vector2d v_hat(-std::sin(yaw), std::cos(yaw));
  const double heading_err =
      wrap_pi(std::atan2(goal.y() - xy.y(), goal.x() - xy.x()) - yaw);

  // Slow into turns: command full speed only when pointed at the goal.
  const double v_cmd =
      plan_.speed * std::clamp(std::cos(heading_err), 0.0, 1.0);
  const double speed_along = state.rates.head<2>().dot(u_hat);
  const double verr = v_cmd - speed_along;
  integrator_ += verr * dt;
  integrator_ = std::clamp(integrator_, -max_force / surge_ki,
                           max_force / surge_ki);
  const double force =
      std::clamp(surge_kp * verr + surge_ki * integrator_, -max_force,
                 max_force);
  const double sway = state.rates.head<2>().dot(v_hat);
  act.head<2>() = force * u_hat - sway_kd * sway * v_hat;
  act(5) = std::clamp(yaw_kp * heading_err - yaw_kd * state.rates(5),
                      -max_moment, max_moment);
  return act;
}

std::vector<UsvDeckState> usv_predict(const UsvDeckState& state,
                                      const UsvModelParams& params, int steps,
                                      double dt, const ActuationPolicy& policy) {
  std::vector<UsvDeckState> out;
  out.reserve(steps);
  UsvDeckState s = state;
  for (int k = 0; k < steps; ++k) {
    const Vector6 act = policy ? policy(s, k) : Vector6::Zero();
    s = usv_step(s, params, act, dt);
    out.push_back(s);
  }
  return out;
}

std::optional<UsvDeckState> emulate_estimate(const UsvDeckState& truth,
                                             const EstimateNoise& noise,
                                             RngStream& rng) {
  if (rng.uniform() < noise.dropout_probability) return std::nullopt;
  UsvDeckState e = truth;
  for (int i = 0; i < 3; ++i) e.pose(i) += rng.normal(0.0, noise.position_rmse);
  for (int i = 3; i < 6; ++i) e.pose(i) += rng.normal(0.0, noise.attitude_rmse);
  for (int i = 0; i < 3; ++i) e.rates(i) += rng.normal(0.0, noise.velocity_rmse);
  for (int i = 3; i < 6; ++i) e.rates(i) += rng.normal(0.0, noise.rate_rmse);
  return e;
}

}  // namespace deckland
