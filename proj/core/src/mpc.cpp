#include "deckland/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "deckland/geometry.hpp"

namespace deckland {

AugmentedModel build_augmented(const LinearModel& model, double input_scale) {
  const int nx = static_cast<int>(model.A.rows());
  const int nu = static_cast<int>(model.B.cols());
  AugmentedModel m;
  m.na = nx + nu;
  m.nu = nu;
  m.ny = nx;
  m.dt = model.dt;
  m.A = Eigen::MatrixXd::Zero(m.na, m.na);
  m.A.topLeftCorner(nx, nx) = model.A;
  m.A.topRightCorner(nx, nu) = model.B * input_scale;
  m.A.bottomRightCorner(nu, nu).setIdentity();
  m.B = Eigen::MatrixXd::Zero(m.na, nu);
  m.B.topRows(nx) = model.B * input_scale;
  m.B.bottomRows(nu).setIdentity();
  return m;
}

double faa_weight(double base, double alpha, double beta, double distance) {
  return base * (1.0 + alpha * std::exp(-beta * distance));
}

MpcWeights build_weights(MpcPhase phase, double distance_to_deck) {
  MpcWeights w;
  w.q.resize(12);
  const double d = distance_to_deck;
  w.q << 30.0, 30.0, faa_weight(40.0, 250.0, 20.0, d),
      faa_weight(1.0, 50000.0, 10.0, d), faa_weight(1.0, 50000.0, 10.0, d),
      50.0, 1.0, 1.0, faa_weight(3000.0, 1.0, 25.0, d), 1.0, 1.0, 1.0;
  if (phase != MpcPhase::kNavigate) {
    w.q(kVx) = 30.0;
    w.q(kVy) = 30.0;
  }
  return w;
}

namespace {

void require_horizon(const std::vector<UsvDeckState>& deck, int horizon) {
  if (static_cast<int>(deck.size()) < horizon) {
    throw InsufficientPrediction("deck prediction shorter than the horizon");
  }
}

FullStateReference blank_reference(int horizon) {
  FullStateReference r;
  r.states = Eigen::MatrixXd::Zero(horizon, 12);
  r.weight_scale = Eigen::VectorXd::Ones(12);
  return r;
}

double deck_distance(const State12& uav, const UsvDeckState& deck) {
  const Eigen::Vector3d d(uav(kPx) - deck.pose(0), uav(kPy) - deck.pose(1),
                          uav(kPz) - deck.pose(2));
  return d.norm();
}

// Heading references continue the vehicle's own unwrapped yaw so a target
// across the +-pi seam does not read as a full turn.
double unwrap_toward(double reference, double target) {
  return reference + wrap_pi(target - reference);
}

// The pull-in ramp may lead the vehicle's own closing rate by this much.
// Rebuilt from the live state at every replan, a ramp that runs at full
// speed regardless of the vehicle would hold a permanent position error in
// front of the optimizer, which answers by dragging the plan through the
// speed boxes; a bounded lead makes the cruise speed an equilibrium.
constexpr double kPullInLead = 1.5;  // m/s

// Planar pull-in: close on the deck's predicted track, then ride the track
// itself. The velocity rows carry the ramp derivative; a step position
// reference with zero velocity rows makes the optimizer slam the tilt and
// speed boxes instead of cruising.
void pull_in_planar(FullStateReference& r, const State12& uav,
                    const std::vector<UsvDeckState>& deck, double speed,
                    double dt) {
  const double dx = uav(kPx) - deck[0].pose(0);
  const double dy = uav(kPy) - deck[0].pose(1);
  const double range = std::hypot(dx, dy);
  double carrot = 0.0;
  if (range > 1e-9) {
    const double closing = -((uav(kVx) - deck[0].rates(0)) * dx +
                             (uav(kVy) - deck[0].rates(1)) * dy) /
                           range;
    carrot = std::clamp(closing + kPullInLead, kPullInLead, speed);
  }
  for (int k = 0; k < r.states.rows(); ++k) {
    const double frac =
        range > 1e-9 ? std::max(0.0, 1.0 - carrot * dt * (k + 1) / range)
                     : 0.0;
    r.states(k, kPx) = deck[k].pose(0) + dx * frac;
    r.states(k, kPy) = deck[k].pose(1) + dy * frac;
    r.states(k, kVx) =
        deck[k].rates(0) - (frac > 0.0 ? carrot * dx / range : 0.0);
    r.states(k, kVy) =
        deck[k].rates(1) - (frac > 0.0 ? carrot * dy / range : 0.0);
  }
}

// Heading swings get the same treatment as the planar pull-in: the stage
// targets walk from the vehicle's own yaw toward the goal at a bounded
// rate, with the matching rate in the yaw-rate row. Posting a far-off
// bearing at every stage makes the optimizer ride the body-rate box, where
// the hover model underestimates the true rates enough that the measured
// rate can leave the box between replans.
constexpr double kYawRampRate = 1.0;  // rad/s

void fill_yaw_ramp(FullStateReference& r, double yaw0, double dt) {
  double prev = yaw0;
  for (int k = 0; k < r.states.rows(); ++k) {
    const double step = std::clamp(r.states(k, kYaw) - prev,
                                   -kYawRampRate * dt, kYawRampRate * dt);
    r.states(k, kYaw) = prev + step;
    r.states(k, kWyaw) = step / dt;
    prev = r.states(k, kYaw);
  }
}

// The vertical-speed weight is heavy at every range, so altitude changes
// must be commanded as a ramp with a matching climb rate; a step reference
// with vz = 0 would crawl.
void fill_altitude_ramp(FullStateReference& r, double z0, double target,
                        double rate, double dt) {
  const double span = std::abs(target - z0);
  const double direction = (target >= z0) ? 1.0 : -1.0;
  for (int k = 0; k < r.states.rows(); ++k) {
    const double travel = rate * dt * (k + 1);
    if (travel < span) {
      r.states(k, kPz) = z0 + direction * travel;
      r.states(k, kVz) = direction * rate;
    } else {
      r.states(k, kPz) = target;
      r.states(k, kVz) = 0.0;
    }
  }
}

}  // namespace

FullStateReference build_altitude_reference(const State12& uav,
                                            const ReferenceConfig& cfg) {
  FullStateReference r = blank_reference(cfg.horizon);
  for (int k = 0; k < cfg.horizon; ++k) {
    r.states(k, kPx) = uav(kPx);
    r.states(k, kPy) = uav(kPy);
    r.states(k, kYaw) = uav(kYaw);
  }
  fill_altitude_ramp(r, uav(kPz), cfg.approach_altitude, cfg.climb_rate,
                     cfg.dt);
  return r;
}

FullStateReference build_approach_reference(
    const State12& uav, const std::vector<UsvDeckState>& deck,
    const ReferenceConfig& cfg) {
  require_horizon(deck, cfg.horizon);
  FullStateReference r = blank_reference(cfg.horizon);
  const double range = std::hypot(deck[0].pose(0) - uav(kPx),
                                  deck[0].pose(1) - uav(kPy));
  const double bearing = std::atan2(deck[0].pose(1) - uav(kPy),
                                    deck[0].pose(0) - uav(kPx));
  for (int k = 0; k < cfg.horizon; ++k) {
    r.states(k, kYaw) = unwrap_toward(uav(kYaw), bearing);
  }
  fill_yaw_ramp(r, uav(kYaw), cfg.dt);
  pull_in_planar(r, uav, deck, cfg.approach_speed, cfg.dt);
  fill_altitude_ramp(r, uav(kPz), cfg.approach_altitude, cfg.climb_rate,
                     cfg.dt);
  if (range < 3.0) r.weight_scale(kYaw) = 0.0;  // bearing is meaningless here
  r.distance_to_deck = deck_distance(uav, deck[0]);
  return r;
}

FullStateReference build_follow_reference(const State12& uav,
                                          const std::vector<UsvDeckState>& deck,
                                          const ReferenceConfig& cfg) {
  require_horizon(deck, cfg.horizon);
  FullStateReference r = blank_reference(cfg.horizon);
  double yaw_ref = uav(kYaw);
  for (int k = 0; k < cfg.horizon; ++k) {
    yaw_ref = unwrap_toward(yaw_ref, deck[k].pose(5));
    r.states(k, kYaw) = yaw_ref;
  }
  pull_in_planar(r, uav, deck, cfg.approach_speed, cfg.dt);
  fill_altitude_ramp(r, uav(kPz),
                     cfg.rest_deck_height + cfg.tracking_altitude,
                     cfg.climb_rate, cfg.dt);
  r.distance_to_deck = deck_distance(uav, deck[0]);
  return r;
}

FullStateReference build_descent_reference(
    const State12& uav, const std::vector<UsvDeckState>& deck,
    const ReferenceConfig& cfg, bool flare) {
  require_horizon(deck, cfg.horizon);
  FullStateReference r = blank_reference(cfg.horizon);
  const double rate = flare ? cfg.flare_rate : cfg.descent_rate;
  double yaw_ref = uav(kYaw);
  for (int k = 0; k < cfg.horizon; ++k) {
    yaw_ref = unwrap_toward(yaw_ref, deck[k].pose(5));
    const double glide = uav(kPz) - rate * cfg.dt * (k + 1);
    r.states(k, kPx) = deck[k].pose(0);
    r.states(k, kPy) = deck[k].pose(1);
    r.states(k, kPz) = std::max(deck[k].pose(2), glide);
    r.states(k, kRoll) = deck[k].pose(3);
    r.states(k, kPitch) = deck[k].pose(4);
    r.states(k, kYaw) = yaw_ref;
    r.states(k, kVx) = deck[k].rates(0);
    r.states(k, kVy) = deck[k].rates(1);
    r.states(k, kVz) = deck[k].rates(2) - rate;
    r.states(k, kWroll) = deck[k].rates(3);
    r.states(k, kWpitch) = deck[k].rates(4);
    r.states(k, kWyaw) = deck[k].rates(5);
  }
  r.distance_to_deck = deck_distance(uav, deck[0]);
  return r;
}

CondensedQp condense(const AugmentedModel& m, const Eigen::VectorXd& z0,
                     const Eigen::MatrixXd& ref, const MpcWeights& weights,
                     const std::vector<StageBox>& boxes, double slew_limit) {
  const int N = static_cast<int>(ref.rows());
  const int na = m.na, nu = m.nu, ny = m.ny;

  CondensedQp c;
  c.phi.resize(na * N, na);
  c.gamma = Eigen::MatrixXd::Zero(na * N, nu * N);

  std::vector<Eigen::MatrixXd> akb(N);  // A^k B
  akb[0] = m.B;
  for (int k = 1; k < N; ++k) akb[k] = m.A * akb[k - 1];
  Eigen::MatrixXd apow = Eigen::MatrixXd::Identity(na, na);
  for (int k = 0; k < N; ++k) {
    apow = m.A * apow;
    c.phi.middleRows(k * na, na) = apow;
    for (int j = 0; j <= k; ++j) {
      c.gamma.block(k * na, j * nu, na, nu) = akb[k - j];
    }
  }

  // Costed outputs are the leading ny rows of each stage; the terminal
  // stage carries no state weight.
  Eigen::MatrixXd gy(ny * N, nu * N);
  Eigen::VectorXd err(ny * N);
  const Eigen::VectorXd y0 = c.phi * z0;
  for (int k = 0; k < N; ++k) {
    gy.middleRows(k * ny, ny) = c.gamma.middleRows(k * na, ny);
    err.segment(k * ny, ny) =
        y0.segment(k * na, ny) - ref.row(k).transpose();
  }
  Eigen::VectorXd stage_w(ny * N);
  for (int k = 0; k < N; ++k) {
    stage_w.segment(k * ny, ny) =
        (k < N - 1) ? weights.q : Eigen::VectorXd::Zero(ny);
  }
  const Eigen::MatrixXd wg = stage_w.asDiagonal() * gy;

  int slacks = 0;
  for (const StageBox& box : boxes) slacks += box.soft ? 1 : 0;
  c.slacks = slacks;
  const int nv = nu * N + slacks;

  c.qp.H = Eigen::MatrixXd::Zero(nv, nv);
  c.qp.H.topLeftCorner(nu * N, nu * N) = gy.transpose() * wg;
  c.qp.H.topLeftCorner(nu * N, nu * N).diagonal().array() +=
      weights.du_penalty;
  c.qp.g = Eigen::VectorXd::Zero(nv);
  c.qp.g.head(nu * N) = wg.transpose() * err;
  c.constant = 0.5 * err.dot(stage_w.cwiseProduct(err));

  const bool with_slew = std::isfinite(slew_limit);
  int rows = with_slew ? nu * N : 0;
  rows += slacks;  // slack nonnegativity
  for (const StageBox& box : boxes) {
    if (!box.soft) {
      rows += N;
    } else {
      // One row per bounded side per stage; the slack column breaks the
      // two-sided interval apart.
      rows += (std::isfinite(box.upper) ? N : 0) +
              (std::isfinite(box.lower) ? N : 0);
    }
  }
  c.qp.A = Eigen::MatrixXd::Zero(rows, nv);
  c.qp.lower.resize(rows);
  c.qp.upper.resize(rows);
  int r = 0;
  int slack = 0;
  for (const StageBox& box : boxes) {
    const int s = nu * N + slack;
    if (box.soft) {
      c.qp.H(s, s) = box.softness;
      ++slack;
    }
    for (int k = 0; k < N; ++k) {
      const auto dynamics = c.gamma.row(k * na + box.index).head(nu * N);
      const double free_resp = c.phi.row(k * na + box.index).dot(z0);
      if (!box.soft) {
        c.qp.A.row(r).head(nu * N) = dynamics;
        c.qp.lower(r) = box.lower - free_resp;
        c.qp.upper(r) = box.upper - free_resp;
        ++r;
        continue;
      }
      if (std::isfinite(box.upper)) {
        c.qp.A.row(r).head(nu * N) = dynamics;
        c.qp.A(r, s) = -1.0;
        c.qp.lower(r) = -std::numeric_limits<double>::infinity();
        c.qp.upper(r) = box.upper - free_resp;
        ++r;
      }
      if (std::isfinite(box.lower)) {
        c.qp.A.row(r).head(nu * N) = dynamics;
        c.qp.A(r, s) = 1.0;
        c.qp.lower(r) = box.lower - free_resp;
        c.qp.upper(r) = std::numeric_limits<double>::infinity();
        ++r;
      }
    }
  }
  if (with_slew) {
    for (int i = 0; i < nu * N; ++i, ++r) {
      c.qp.A(r, i) = 1.0;
      c.qp.lower(r) = -slew_limit;
      c.qp.upper(r) = slew_limit;
    }
  }
  for (int j = 0; j < slacks; ++j, ++r) {
    c.qp.A(r, nu * N + j) = 1.0;
    c.qp.lower(r) = 0.0;
    c.qp.upper(r) = std::numeric_limits<double>::infinity();
  }
  return c;
}

TrajectoryGenerator::TrajectoryGenerator(const UavParams& uav,
                                         ReferenceConfig cfg, MpcLimits limits)
    : uav_(uav), cfg_(cfg), limits_(limits) {
  LinearModel lin = linearize_hover(uav_);
  discretize(lin, cfg_.dt);
  aug_ = build_augmented(lin, uav_.hover_omega_sq());
  limits_.du_lower = -1.0;
  limits_.du_upper = uav_.omega_sq_max() / uav_.hover_omega_sq() - 1.0;
}

namespace {

std::vector<StageBox> limit_boxes(const MpcLimits& l) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double soft = l.velocity_softness;
  // The hover model underestimates true body rates during large-tilt
  // maneuvers, so the planned boxes keep headroom below the flight limit.
  const double rate = 0.75 * l.max_body_rate;
  std::vector<StageBox> boxes = {
      {kRoll, -l.max_tilt, l.max_tilt},
      {kPitch, -l.max_tilt, l.max_tilt},
      {kVx, -l.max_horizontal_speed, l.max_horizontal_speed, true, soft},
      {kVy, -l.max_horizontal_speed, l.max_horizontal_speed, true, soft},
      {kVz, -l.max_vertical_speed, l.max_vertical_speed, true, soft},
      {kWroll, -rate, rate},
      {kWpitch, -rate, rate},
      {kWyaw, -rate, rate},
      {kPz, l.min_altitude, inf},
  };
  for (int i = 12; i < 16; ++i) boxes.push_back({i, l.du_lower, l.du_upper});
  return boxes;
}

}  // namespace

TrajectoryPlan TrajectoryGenerator::generate(const State12& state,
                                             const Vector4& prev_omega_sq,
                                             MpcPhase phase,
                                             const FullStateReference& ref) {
  if (ref.states.rows() != cfg_.horizon || ref.states.cols() != 12) {
    throw std::invalid_argument("reference does not match the horizon");
  }
  Eigen::VectorXd z0(aug_.na);
  z0.head(12) = state;
  z0.tail(4) = prev_omega_sq.array() / uav_.hover_omega_sq() - 1.0;

  MpcWeights w = build_weights(phase, ref.distance_to_deck);
  w.q = w.q.cwiseProduct(ref.weight_scale);

  const CondensedQp c =
      condense(aug_, z0, ref.states, w, limit_boxes(limits_), limits_.slew);
  // Transit plans ride the velocity and tilt boxes over the whole horizon,
  // which costs the active-set method on the order of a thousand pivots;
  // the budget leaves headroom over the worst case seen in closed loop.
  QpSettings qs;
  qs.max_iterations = 5000;
  const QpSolution sol = solve_qp(c.qp, qs, warm_);

  if (sol.status == QpStatus::kOptimal) {
    warm_ = sol.active;
    fallbacks_ = 0;
    Eigen::MatrixXd du(cfg_.horizon, aug_.nu);
    for (int k = 0; k < cfg_.horizon; ++k) {
      du.row(k) = sol.x.segment(k * aug_.nu, aug_.nu).transpose();
    }
    last_du_ = du;
    has_last_ = true;
    return assemble(z0, du);
  }

  if (!has_last_ || fallbacks_ >= max_fallbacks) {
    throw NoFallback("trajectory solve failed with no plan left to shift");
  }
  ++fallbacks_;
  Eigen::MatrixXd shifted = last_du_;
  shifted.topRows(cfg_.horizon - 1) = last_du_.bottomRows(cfg_.horizon - 1);
  shifted.row(cfg_.horizon - 1).setZero();
  last_du_ = shifted;
  TrajectoryPlan plan = assemble(z0, shifted);
  plan.fallback = true;
  return plan;
}

TrajectoryPlan TrajectoryGenerator::assemble(const Eigen::VectorXd& z0,
                                             const Eigen::MatrixXd& du) const {
  TrajectoryPlan plan;
  plan.states.resize(cfg_.horizon, 12);
  plan.inputs.resize(cfg_.horizon, 4);
  Eigen::VectorXd z = z0;
  for (int k = 0; k < cfg_.horizon; ++k) {
    z = aug_.A * z + aug_.B * du.row(k).transpose();
    plan.states.row(k) = z.head(12).transpose();
    plan.inputs.row(k) =
        ((z.tail(4).array() + 1.0) * uav_.hover_omega_sq())
            .cwiseMax(0.0)
            .cwiseMin(uav_.omega_sq_max())
            .transpose();
  }
  plan.first.omega_sq = plan.inputs.row(0).transpose();
  return plan;
}

}  // namespace deckland
