#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "deckland/rng.hpp"
#include "deckland/sea.hpp"
#include "deckland/usv.hpp"

using namespace deckland;

namespace {

// Oracle: independent transcription of the vessel equations on a packed
// vector [pose; rates; wave_states], integrated with a hand-rolled RK4.
// Uses an explicit inverse instead of the library's factorization path.
Eigen::VectorXd oracle_derivative(const Eigen::VectorXd& x,
                                  const UsvModelParams& p,
                                  const Vector6& act) {
  const int n = p.n_components();
  const int nw = p.n_wave_states();
  Eigen::VectorXd dx(12 + nw);

  const Vector6 pose = x.segment<6>(0);
  const Vector6 rates = x.segment<6>(6);
  dx.segment<6>(0) = rates;

  Vector6 accel = p.M.inverse() * (act - p.D * rates - p.G * (pose - p.rest_pose));
  const int dof_of_channel[3] = {2, 3, 4};
  for (int c = 0; c < 3; ++c) {
    double osc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double w = p.wave_omega[c * n + i];
      osc -= w * w * x(12 + 2 * (c * n + i));
    }
    accel(dof_of_channel[c]) += p.wave_gain(dof_of_channel[c]) * osc;
  }
  dx.segment<6>(6) = accel;

  for (int b = 0; b < n * 3; ++b) {
    const double w = p.wave_omega[b];
    dx(12 + 2 * b) = x(12 + 2 * b + 1);
    dx(12 + 2 * b + 1) = -w * w * x(12 + 2 * b);
  }
  return dx;
}

Eigen::VectorXd oracle_rk4(const Eigen::VectorXd& x, const UsvModelParams& p,
                           const Vector6& act, double dt) {
  const Eigen::VectorXd k1 = oracle_derivative(x, p, act);
  const Eigen::VectorXd k2 = oracle_derivative(x + 0.5 * dt * k1, p, act);
  const Eigen::VectorXd k3 = oracle_derivative(x + 0.5 * dt * k2, p, act);
  const Eigen::VectorXd k4 = oracle_derivative(x + dt * k3, p, act);
  return x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
}

Eigen::VectorXd pack(const UsvDeckState& s) {
  Eigen::VectorXd x(12 + s.wave_states.size());
  x.segment<6>(0) = s.pose;
  x.segment<6>(6) = s.rates;
  x.tail(s.wave_states.size()) = s.wave_states;
  return x;
}

UsvModelParams random_params(RngStream& rng, int n_components) {
  UsvModelParams p;
  Matrix6 a;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) a(i, j) = rng.normal();
  p.M = a * a.transpose() + 6.0 * Matrix6::Identity();
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      p.D(i, j) = rng.normal(0.0, 2.0);
      p.G(i, j) = rng.normal(0.0, 2.0);
    }
  for (int i = 0; i < 6; ++i) {
    p.rest_pose(i) = rng.normal();
    p.wave_gain(i) = rng.normal();
  }
  for (int b = 0; b < 3 * n_components; ++b)
    p.wave_omega.push_back(rng.uniform(0.5, 2.5));
  return p;
}

UsvDeckState random_state(RngStream& rng, const UsvModelParams& p) {
  UsvDeckState s;
  for (int i = 0; i < 6; ++i) {
    s.pose(i) = rng.normal(0.0, 3.0);
    s.rates(i) = rng.normal();
  }
  s.wave_states = Eigen::VectorXd::Zero(p.n_wave_states());
  for (int i = 0; i < s.wave_states.size(); ++i) s.wave_states(i) = rng.normal();
  s.t = rng.uniform(0.0, 100.0);
  return s;
}

}  // namespace

TEST_CASE("one step matches the transcribed equations of motion") {
  RngStream rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_params(rng, trial % 4);
    const auto s = random_state(rng, p);
    Vector6 act;
    for (int i = 0; i < 6; ++i) act(i) = rng.normal(0.0, 5.0);
    const double dt = rng.uniform(0.002, 0.05);

    const UsvDeckState stepped = usv_step(s, p, act, dt);
    const Eigen::VectorXd expect = oracle_rk4(pack(s), p, act, dt);

    CHECK((pack(stepped) - expect).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(stepped.t == doctest::Approx(s.t + dt).epsilon(1e-14));
  }
}

TEST_CASE("wave_system matches the oscillator blocks and the derivative") {
  RngStream rng(12);
  const auto p = random_params(rng, 2);
  const Eigen::MatrixXd a = p.wave_system();
  REQUIRE(a.rows() == p.n_wave_states());

  Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (int b = 0; b < 6; ++b) {
    expect(2 * b, 2 * b + 1) = 1.0;
    expect(2 * b + 1, 2 * b) = -p.wave_omega[b] * p.wave_omega[b];
  }
  CHECK((a - expect).cwiseAbs().maxCoeff() == 0.0);

  const auto s = random_state(rng, p);
  const Eigen::VectorXd dx = oracle_derivative(pack(s), p, Vector6::Zero());
  CHECK((dx.tail(12) - a * s.wave_states).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("free oscillators conserve their energy over a long run") {
  auto sea = make_sea_preset("moderate");
  auto p = make_catamaran_params(sea);
  auto s = make_deck_state(p);
  RngStream rng(13);
  for (int i = 0; i < s.wave_states.size(); ++i) s.wave_states(i) = rng.normal();

  const int n_blocks = static_cast<int>(p.wave_omega.size());
  std::vector<double> e0(n_blocks);
  auto energy = [&](const UsvDeckState& st, int b) {
    const double w = p.wave_omega[b];
    const double pos = st.wave_states(2 * b), vel = st.wave_states(2 * b + 1);
    return vel * vel + w * w * pos * pos;
  };
  for (int b = 0; b < n_blocks; ++b) e0[b] = energy(s, b);

  const double dt = 0.01;
  for (int k = 0; k < 10000; ++k) s = usv_step(s, p, Vector6::Zero(), dt);
  for (int b = 0; b < n_blocks; ++b) {
    CHECK(energy(s, b) == doctest::Approx(e0[b]).epsilon(1e-6));
  }
}

TEST_CASE("step refuses a state that does not match the oscillator bank") {
  const auto p = make_catamaran_params(make_sea_preset("moderate"));
  UsvDeckState s;
  s.wave_states = Eigen::VectorXd::Zero(4);
  CHECK_THROWS_AS(usv_step(s, p, Vector6::Zero(), 0.01), std::invalid_argument);
}

TEST_CASE("deck attitude from slope follows the hull axes") {
  // Up-slope ahead pitches the bow up (negative pitch in this convention),
  // up-slope to port rolls to port.
  const double s = 0.2;
  Eigen::Vector2d att = deck_attitude_from_slope({s, 0.0}, 0.0);
  CHECK(att.x() == doctest::Approx(0.0));
  CHECK(att.y() == doctest::Approx(-std::atan(s)));

  att = deck_attitude_from_slope({0.0, s}, 0.0);
  CHECK(att.x() == doctest::Approx(std::atan(s)));
  CHECK(att.y() == doctest::Approx(0.0));

  // Rotating slope and hull together leaves the deck attitude unchanged.
  RngStream rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Vector2d slope(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3));
    const double yaw = rng.uniform(-M_PI, M_PI);
    const Eigen::Vector2d rotated(
        std::cos(yaw) * slope.x() - std::sin(yaw) * slope.y(),
        std::sin(yaw) * slope.x() + std::cos(yaw) * slope.y());
    const Eigen::Vector2d a = deck_attitude_from_slope(slope, 0.0);
    const Eigen::Vector2d b = deck_attitude_from_slope(rotated, yaw);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("sync puts the deck on the rendered surface") {
  // A single wave whose crest sits at the origin at t = 0: full elevation,
  // zero slope, zero vertical rate.
  const auto sea = std::vector<WaveComponent>{make_wave(0.4, 5.0, 0.7, 0.6)};
  const auto p = make_catamaran_params(sea);
  auto s = make_deck_state(p);

  sync_deck_to_waves(s, p, sea);
  CHECK(s.pose(2) == doctest::Approx(p.deck_height + 0.4).epsilon(1e-12));
  CHECK(s.rates(2) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.pose(3) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.pose(4) == doctest::Approx(0.0).epsilon(1e-12));

  // Idempotent at fixed time.
  UsvDeckState again = s;
  sync_deck_to_waves(again, p, sea);
  CHECK((pack(again) - pack(s)).cwiseAbs().maxCoeff() < 1e-14);

  // Calm water: deck at rest height, level.
  const auto calm = make_sea_preset("calm");
  const auto pc = make_catamaran_params(calm);
  auto sc = make_deck_state(pc);
  sc.t = 42.0;
  sync_deck_to_waves(sc, pc, calm);
  CHECK(sc.pose(2) == doctest::Approx(pc.deck_height));
  CHECK(sc.pose(3) == doctest::Approx(0.0));
  CHECK(sc.pose(4) == doctest::Approx(0.0));

  // A bank sized for a different sea is rejected.
  CHECK_THROWS_AS(sync_deck_to_waves(sc, pc, sea), std::invalid_argument);
}

TEST_CASE("input-free roll-out continues the rendered sea at a fixed hull") {
  // Gentle two-component sea so the angle channels, which carry the linear
  // slope field, track the arctangent attitudes closely.
  std::vector<WaveComponent> sea = {make_wave(0.25, 4.0, 0.5, 0.6, 1.1),
                                    make_wave(0.15, 6.5, -0.9, 0.6, -2.0)};
  const auto p = make_catamaran_params(sea);
  auto s = make_deck_state(p);
  s.pose(0) = 3.0;
  s.pose(1) = -2.0;
  s.pose(5) = 0.4;
  s.t = 1.3;
  sync_deck_to_waves(s, p, sea);

  const double dt = 0.005;
  double max_heave_err = 0.0, max_rate_err = 0.0, max_angle_err = 0.0;
  for (int k = 0; k < 600; ++k) {
    s = usv_step(s, p, Vector6::Zero(), dt);
    UsvDeckState resampled = s;
    sync_deck_to_waves(resampled, p, sea);
    max_heave_err = std::max(max_heave_err, std::abs(s.pose(2) - resampled.pose(2)));
    max_rate_err = std::max(max_rate_err, std::abs(s.rates(2) - resampled.rates(2)));
    max_angle_err = std::max(
        {max_angle_err, std::abs(s.pose(3) - resampled.pose(3)),
         std::abs(s.pose(4) - resampled.pose(4))});
  }
  CHECK(max_heave_err < 1e-6);
  CHECK(max_rate_err < 1e-6);
  CHECK(max_angle_err < 5e-4);
  // The hull did not move.
  CHECK(s.pose(0) == doctest::Approx(3.0));
  CHECK(s.pose(1) == doctest::Approx(-2.0));
}

TEST_CASE("deck inclination stays moderate in every preset") {
  for (const char* name : {"slight", "moderate", "rough"}) {
    const auto sea = make_sea_preset(name);
    const auto p = make_catamaran_params(sea);
    auto s = make_deck_state(p);
    double worst = 0.0;
    for (double t = 0.0; t < 400.0; t += 0.05) {
      s.t = t;
      sync_deck_to_waves(s, p, sea);
      worst = std::max({worst, std::abs(s.pose(3)), std::abs(s.pose(4))});
    }
    CHECK(worst < 25.0 * M_PI / 180.0);
  }
}

TEST_CASE("catamaran parameters wrap the sea in channel-major order") {
  const auto sea = make_sea_preset("moderate");
  const auto p = make_catamaran_params(sea);
  REQUIRE(p.n_components() == static_cast<int>(sea.size()));
  for (int c = 0; c < 3; ++c)
    for (size_t i = 0; i < sea.size(); ++i)
      CHECK(p.wave_omega[c * sea.size() + i] == doctest::Approx(sea[i].omega));
  // Wave-driven rows have no extra damping or restoring of their own.
  for (int dof : {2, 3, 4}) {
    CHECK(p.D.row(dof).cwiseAbs().maxCoeff() == 0.0);
    CHECK(p.G.row(dof).cwiseAbs().maxCoeff() == 0.0);
    CHECK(p.wave_gain(dof) == 1.0);
  }
  CHECK(make_deck_state(p).pose(2) == doctest::Approx(p.deck_height));
}

TEST_CASE("waypoint steering holds speed on a straight leg") {
  const auto p = make_catamaran_params({});
  auto s = make_deck_state(p);
  WaypointPlan plan;
  plan.points = {{500.0, 0.0}};
  plan.loop = false;
  WaypointController ctl(plan);

  const double dt = 0.02;
  double worst_speed_err = 0.0, worst_cross = 0.0;
  for (int k = 0; k < 3000; ++k) {
    s = usv_step(s, p, ctl.update(s, dt), dt);
    if (k * dt > 30.0) {
      worst_speed_err =
          std::max(worst_speed_err, std::abs(s.rates.head<2>().norm() - plan.speed));
      worst_cross = std::max(worst_cross, std::abs(s.pose(1)));
    }
  }
  CHECK(worst_speed_err < 0.1 * plan.speed);
  CHECK(worst_cross < 0.5);
  CHECK(s.pose(0) > 40.0);
}

TEST_CASE("waypoint steering laps a square") {
  const auto p = make_catamaran_params({});
  auto s = make_deck_state(p);
  WaypointPlan plan;
  plan.points = {{40.0, 0.0}, {40.0, 40.0}, {0.0, 40.0}, {0.0, 0.0}};
  WaypointController ctl(plan);

  std::set<int> visited;
  int switches = 0;
  int last = ctl.active_waypoint();
  const double dt = 0.02;
  for (int k = 0; k < 12000; ++k) {
    s = usv_step(s, p, ctl.update(s, dt), dt);
    if (ctl.active_waypoint() != last) {
      ++switches;
      last = ctl.active_waypoint();
    }
    visited.insert(ctl.active_waypoint());
  }
  CHECK(visited.size() == 4);
  CHECK(switches >= 8);  // more than one full lap
  // Stays in the neighborhood of the square throughout.
  CHECK(s.pose.head<2>().cwiseAbs().maxCoeff() < 60.0);
}

TEST_CASE("prediction reproduces stepping and refines with the step size") {
  const auto sea = make_sea_preset("moderate");
  const auto p = make_catamaran_params(sea);
  auto s = make_deck_state(p);
  s.rates(0) = 1.0;
  sync_deck_to_waves(s, p, sea);

  const double dt = 0.1;
  const auto horizon = usv_predict(s, p, 20, dt);
  REQUIRE(horizon.size() == 20);
  CHECK((pack(horizon[0]) - pack(usv_step(s, p, Vector6::Zero(), dt)))
            .cwiseAbs()
            .maxCoeff() < 1e-14);
  for (int k = 0; k < 20; ++k)
    CHECK(horizon[k].t == doctest::Approx(s.t + (k + 1) * dt).epsilon(1e-12));

  // The same horizon at a five times finer step barely moves the endpoint.
  UsvDeckState fine = s;
  for (int k = 0; k < 100; ++k) fine = usv_step(fine, p, Vector6::Zero(), dt / 5);
  CHECK((pack(horizon.back()) - pack(fine)).cwiseAbs().maxCoeff() < 1e-3);

  // Under a policy the roll-out equals the manual loop with the same forces.
  ActuationPolicy policy = [](const UsvDeckState&, int k) {
    Vector6 u = Vector6::Zero();
    u(0) = 50.0 + 10.0 * k;
    return u;
  };
  const auto driven = usv_predict(s, p, 5, dt, policy);
  UsvDeckState manual = s;
  for (int k = 0; k < 5; ++k) manual = usv_step(manual, p, policy(manual, k), dt);
  CHECK((pack(driven.back()) - pack(manual)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("an undamped hull coasts at constant velocity") {
  UsvModelParams p;  // identity mass, no damping, no restoring, no waves
  UsvDeckState s;
  s.wave_states = Eigen::VectorXd::Zero(0);
  s.rates(0) = 1.5;
  s.rates(1) = -0.5;
  const auto out = usv_predict(s, p, 40, 0.25);
  CHECK(out.back().pose(0) == doctest::Approx(1.5 * 10.0).epsilon(1e-12));
  CHECK(out.back().pose(1) == doctest::Approx(-0.5 * 10.0).epsilon(1e-12));
  CHECK(out.back().rates(0) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("estimate emulation is deterministic and leaves hidden state alone") {
  const auto sea = make_sea_preset("moderate");
  const auto p = make_catamaran_params(sea);
  auto truth = make_deck_state(p);
  truth.t = 7.5;
  sync_deck_to_waves(truth, p, sea);

  EstimateNoise noise;
  RngStream a(99), b(99);
  const auto ea = emulate_estimate(truth, noise, a);
  const auto eb = emulate_estimate(truth, noise, b);
  REQUIRE(ea.has_value());
  REQUIRE(eb.has_value());
  CHECK((pack(*ea) - pack(*eb)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((ea->wave_states - truth.wave_states).cwiseAbs().maxCoeff() == 0.0);
  CHECK(ea->t == truth.t);
  CHECK((pack(*ea) - pack(truth)).segment<6>(0).cwiseAbs().maxCoeff() > 0.0);

  EstimateNoise drop;
  drop.dropout_probability = 1.0;
  RngStream c(1);
  CHECK_FALSE(emulate_estimate(truth, drop, c).has_value());
}

TEST_CASE("estimate errors land at the configured levels") {
  const UsvModelParams p;  // zero-size bank is fine here
  UsvDeckState truth;
  truth.wave_states = Eigen::VectorXd::Zero(0);

  EstimateNoise noise;
  RngStream rng(2024);
  double pos_sq = 0.0, att_sq = 0.0, vel_sq = 0.0, rate_sq = 0.0;
  const int n = 30000;
  for (int k = 0; k < n; ++k) {
    const auto e = emulate_estimate(truth, noise, rng);
    REQUIRE(e.has_value());
    pos_sq += e->pose.head<3>().squaredNorm();
    att_sq += e->pose.tail<3>().squaredNorm();
    vel_sq += e->rates.head<3>().squaredNorm();
    rate_sq += e->rates.tail<3>().squaredNorm();
  }
  CHECK(std::sqrt(pos_sq / (3 * n)) == doctest::Approx(0.116).epsilon(0.02));
  CHECK(std::sqrt(att_sq / (3 * n)) == doctest::Approx(0.017).epsilon(0.02));
  CHECK(std::sqrt(vel_sq / (3 * n)) == doctest::Approx(0.201).epsilon(0.02));
  CHECK(std::sqrt(rate_sq / (3 * n)) == doctest::Approx(0.004).epsilon(0.02));

  // Dropout rate tracks its probability.
  EstimateNoise drop;
  drop.dropout_probability = 0.25;
  int lost = 0;
  for (int k = 0; k < 20000; ++k)
    if (!emulate_estimate(truth, drop, rng).has_value()) ++lost;
  CHECK(lost / 20000.0 == doctest::Approx(0.25).epsilon(0.05));
}
