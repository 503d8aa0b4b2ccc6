#include "deckland/episode.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include "deckland/geometry.hpp"
#include "deckland/mpc.hpp"
#include "deckland/rng.hpp"
#include "json.hpp"

namespace deckland {
namespace {

constexpr double kPlantDt = 0.002;  // 500 Hz physics
constexpr int kTickSteps = 10;      // 50 Hz mission tick
constexpr double kTickDt = kPlantDt * kTickSteps;
constexpr int kNavigateEvery = 5;   // 10 Hz re-plan away from the deck
constexpr double kTipOverDeg = 15.0;
constexpr double kRangeMargin = 0.5;    // rangefinder footprint past the deck
constexpr double kSettleTail = 3.0;     // s of plant-only run after Landed
constexpr int kDistanceDebounce = 5;    // ticks outside the band to abort

double deg(double rad) { return rad * 180.0 / M_PI; }

// Height of the deck plane above the horizontal point (x, y). The pose is
// the landing surface center.
double deck_plane_z(const Vector6& surface, double x, double y) {
  const Eigen::Vector3d n =
      rot_body_to_world_zyx(surface(3), surface(4), surface(5)) *
      Eigen::Vector3d::UnitZ();
  return surface(2) - (n(0) * (x - surface(0)) + n(1) * (y - surface(1))) / n(2);
}

// Horizontal offset expressed in the deck's yaw frame.
Eigen::Vector2d deck_frame_offset(const Vector6& surface, double x, double y) {
  const double dx = x - surface(0), dy = y - surface(1);
  const double c = std::cos(surface(5)), s = std::sin(surface(5));
  return {c * dx + s * dy, -s * dx + c * dy};
}

Vector6 lift_to_surface(const Vector6& hull_pose, double deck_height) {
  Vector6 p = hull_pose;
  p(2) += deck_height;
  return p;
}

bool fast_state(FlightState s) {
  return s == FlightState::kTracking || s == FlightState::kTrackingStable ||
         s == FlightState::kDescent || s == FlightState::kFlare;
}

bool landing_state(FlightState s) {
  return s == FlightState::kDescent || s == FlightState::kFlare ||
         s == FlightState::kLanded;
}

}  // namespace

EpisodeLog run_episode(const Scenario& s, std::uint64_t seed) {
  EpisodeLog log;
  log.seed = seed;
  RngStream rng(seed);

  // Randomization draw order is fixed: wave phases first, then the start
  // annulus (bearing, distance, altitude, heading). Per-tick measurement
  // noise consumes the stream afterwards.
  std::vector<WaveComponent> sea = s.sea();
  if (s.randomize_wave_phases)
    for (WaveComponent& w : sea) w.phase = rng.uniform(0.0, 2.0 * M_PI);

  const UsvModelParams params = make_catamaran_params(sea);
  log.deck_size = params.deck_size;
  UsvDeckState deck = make_deck_state(params);
  if (s.usv_mode == UsvMode::kWaypoints && !s.waypoints.points.empty()) {
    const Eigen::Vector2d leg =
        s.waypoints.points.front() - deck.pose.head<2>();
    if (leg.norm() > 1e-6) deck.pose(5) = std::atan2(leg(1), leg(0));
  }
  sync_deck_to_waves(deck, params, sea);

  const double bearing = rng.uniform(0.0, 2.0 * M_PI);
  const double distance =
      rng.uniform(s.start.distance_min, s.start.distance_max);
  const double altitude =
      rng.uniform(s.start.altitude_min, s.start.altitude_max);
  const double heading = rng.uniform(-M_PI, M_PI);

  State12 uav = State12::Zero();
  uav(kPx) = deck.pose(0) + distance * std::cos(bearing);
  uav(kPy) = deck.pose(1) + distance * std::sin(bearing);
  uav(kPz) = altitude;
  uav(kYaw) = heading;

  TrajectoryGenerator gen(s.uav, s.reference, s.limits);
  WaypointController helm(s.waypoints);
  TouchdownDetector detector(s.touchdown);
  const double hover = s.uav.hover_omega_sq();
  Vector4 cmd = Vector4::Constant(hover);

  // Drift mode: the water drags the hull along at the current velocity, so
  // the steady state of the damping balance is exactly that speed.
  Vector6 current6 = Vector6::Zero();
  current6.head<2>() = s.current;
  const Vector6 drift_force = params.D * current6;
  Vector6 usv_force = s.usv_mode == UsvMode::kDrift ? drift_force
                                                    : Vector6::Zero();

  FlightState fsm = FlightState::kIdle;
  bool have_est = false;
  UsvDeckState est;  // latest accepted estimate, hull frame
  double est_t = -1e9;
  int out_of_band = 0;
  bool solver_exhausted = false;
  bool in_contact = false;
  double spike_max = 0.0;
  State12 ref_head = State12::Zero();
  State12 plan_head = uav;

  auto note = [&](double t, const char* what) {
    log.anomalies.push_back({t, fsm, fsm, what});
  };

  bool done = false;
  for (int tick = 0; !done; ++tick) {
    const double t = tick * kTickDt;
    if (t >= s.timeout) break;

    // Measurement pipeline. The vessel's own navigation solution arrives
    // over comms at every tick unless dropped; "visible" additionally
    // requires the deck inside the down-facing detector's footprint.
    const double true_range = std::hypot(uav(kPx) - deck.pose(0),
                                         uav(kPy) - deck.pose(1));
    bool accepted = false;
    if (const auto sample = emulate_estimate(deck, s.noise, rng)) {
      est = *sample;
      est_t = t;
      have_est = true;
      accepted = true;
    }
    const double est_age = t - est_t;
    const Vector6 est_surface =
        have_est ? lift_to_surface(est.pose, params.deck_height) : Vector6::Zero();

    // Touchdown evidence from the commanded thrust, the impact
    // acceleration accumulated over the last interval, and the rangefinder.
    const Vector6 surface = lift_to_surface(deck.pose, params.deck_height);
    const Eigen::Vector2d off = deck_frame_offset(surface, uav(kPx), uav(kPy));
    const bool in_footprint =
        std::abs(off(0)) <= 0.5 * params.deck_size(0) + kRangeMargin &&
        std::abs(off(1)) <= 0.5 * params.deck_size(1) + kRangeMargin;
    TouchdownEvidence evidence;
    evidence.thrust_estimate = cmd.mean() / hover;
    evidence.vertical_accel_spike = spike_max;
    evidence.range_to_deck =
        in_footprint
            ? std::max(0.0, uav(kPz) - deck_plane_z(surface, uav(kPx), uav(kPy)))
            : 1e9;
    spike_max = 0.0;

    GuardInputs in;
    in.uav_ready = have_est;
    in.altitude_reached =
        std::abs(uav(kPz) - s.reference.approach_altitude) <=
        s.fsm.altitude_band;
    in.usv_visible = have_est && est_age <= s.fsm.measurement_timeout &&
                     true_range <= s.fsm.visibility_range;
    in.measurement_timeout = !in.usv_visible;
    in.touchdown = detector.update(evidence);
    if (have_est) {
      const double horiz = std::hypot(uav(kPx) - est_surface(0),
                                      uav(kPy) - est_surface(1));
      const double follow_z =
          s.reference.rest_deck_height + s.reference.tracking_altitude;
      // A fast pass through the centered band is not station keeping; the
      // speed gate keeps a capture overshoot from triggering a descent the
      // vehicle immediately has to abort.
      const double rel_speed = std::hypot(uav(kVx) - est.rates(0),
                                          uav(kVy) - est.rates(1));
      in.stable_above = horiz <= s.fsm.stable_distance &&
                        rel_speed <= s.fsm.stable_speed &&
                        std::abs(uav(kPz) - follow_z) <= s.fsm.altitude_band;

      // The descent band is wider than the entry band and debounced, so
      // estimate noise cannot abort a healthy descent; a real divergence
      // holds the flag long enough.
      const bool descending =
          fsm == FlightState::kDescent || fsm == FlightState::kFlare;
      if (descending) {
        out_of_band = horiz <= s.fsm.descent_distance ? 0 : out_of_band + 1;
        in.landing_conditions.distance_ok = out_of_band < kDistanceDebounce;
      } else {
        out_of_band = 0;
        in.landing_conditions.distance_ok = horiz <= s.fsm.stable_distance;
      }

      // Deck conditioning gates the commitment to descend; once committed
      // only the estimate's health can call it off.
      const bool deck_calm =
          std::abs(est.pose(3)) <= s.fsm.max_deck_attitude &&
          std::abs(est.pose(4)) <= s.fsm.max_deck_attitude &&
          std::abs(est.rates(3)) <= s.fsm.max_deck_rate &&
          std::abs(est.rates(4)) <= s.fsm.max_deck_rate;
      in.landing_conditions.prediction_feasible =
          in.usv_visible && (descending || deck_calm) && !solver_exhausted;
      in.landing_conditions.covariance_ok =
          est_age <= 0.5 * s.fsm.measurement_timeout;
      in.flare_height_reached =
          uav(kPz) - est_surface(2) <= s.fsm.flare_height;
    }
    solver_exhausted = false;

    const StepOutcome out = mission_step(fsm, in);
    if (out.transitioned) {
      log.events.push_back({t, fsm, out.next, out.guard});
      if (out.next == FlightState::kDescent) out_of_band = 0;
      // An aborted attempt discards its touch-and-go contact; the report
      // describes the landing that actually concluded.
      if (out.next == FlightState::kTracking && landing_state(fsm))
        log.touchdown_time.reset();
    }
    fsm = out.next;

    // Re-plan: 10 Hz in transit, every tick over the deck.
    if (fsm != FlightState::kIdle && fsm != FlightState::kLanded &&
        (fast_state(fsm) || tick % kNavigateEvery == 0)) {
      FullStateReference ref;
      MpcPhase phase = MpcPhase::kNavigate;
      std::vector<UsvDeckState> pred;
      if (have_est && fsm != FlightState::kGetAltitude) {
        UsvDeckState anchor = est;
        pred = usv_predict(anchor, params, s.reference.horizon, s.reference.dt,
                           [&](const UsvDeckState&, int) { return usv_force; });
        for (UsvDeckState& p : pred) p.pose(2) += params.deck_height;
      }
      switch (fsm) {
        case FlightState::kGetAltitude:
          ref = build_altitude_reference(uav, s.reference);
          break;
        case FlightState::kApproach:
          ref = pred.empty() ? build_altitude_reference(uav, s.reference)
                             : build_approach_reference(uav, pred, s.reference);
          break;
        case FlightState::kTracking:
        case FlightState::kTrackingStable:
          ref = build_follow_reference(uav, pred, s.reference);
          phase = MpcPhase::kFollow;
          break;
        case FlightState::kDescent:
        case FlightState::kFlare:
          ref = build_descent_reference(uav, pred, s.reference,
                                        fsm == FlightState::kFlare);
          phase = MpcPhase::kLand;
          break;
        default:
          break;
      }
      try {
        const TrajectoryPlan plan = gen.generate(uav, cmd, phase, ref);
        cmd = plan.first.omega_sq;
        plan_head = plan.states.row(0);
        ref_head = ref.states.row(0);
        if (plan.fallback) ++log.fallback_count;
      } catch (const NoFallback&) {
        // Hold the previous command and force the mission logic to back
        // off to Tracking on the next tick.
        solver_exhausted = true;
        note(t, "solver_exhausted");
      }
    }

    if (s.usv_mode == UsvMode::kWaypoints) usv_force = helm.update(deck, kTickDt);

    EpisodeRecord rec;
    rec.t = t;
    rec.uav = uav;
    rec.deck_pose = surface;
    rec.deck_rates = deck.rates;
    rec.estimate_valid = accepted;
    rec.est_pose = est_surface;
    rec.est_rates = have_est ? est.rates : Vector6::Zero();
    rec.fsm = fsm;
    rec.reference = ref_head;
    rec.plan_head = plan_head;
    rec.rotor_cmd = cmd;
    log.records.push_back(rec);

    if (fsm == FlightState::kLanded) break;

    // Plant integration to the next tick.
    RotorCommand rotor;
    rotor.omega_sq = cmd;
    for (int k = 0; k < kTickSteps && !done; ++k) {
      deck = usv_step(deck, params, usv_force, kPlantDt);
      sync_deck_to_waves(deck, params, sea);
      try {
        uav = rk4_step(s.uav, uav, rotor, kPlantDt);
      } catch (const PitchSingularity&) {
        note(t, "attitude_singularity");
        done = true;
        break;
      }

      const Vector6 surf = lift_to_surface(deck.pose, params.deck_height);
      const Eigen::Vector2d o = deck_frame_offset(surf, uav(kPx), uav(kPy));
      const bool over_deck = std::abs(o(0)) <= 0.5 * params.deck_size(0) &&
                             std::abs(o(1)) <= 0.5 * params.deck_size(1);
      const double zs = deck_plane_z(surf, uav(kPx), uav(kPy));
      if (over_deck && uav(kPz) <= zs) {
        if (!in_contact) {
          in_contact = true;
          if (!landing_state(fsm)) {
            note(t, "contact_outside_landing");
          } else if (!log.touchdown_time) {
            // First contact of the attempt; seated chatter afterwards does
            // not rewrite the impact snapshot.
            log.touchdown_time = t + (k + 1) * kPlantDt;
            log.uav_at_touchdown = uav;
            log.deck_pose_at_touchdown = surf;
            log.deck_rates_at_touchdown = deck.rates;
          }
        }
        // One-sided support: project out of the deck, absorb the normal
        // velocity, and let friction pull the skids along with the deck.
        uav(kPz) = zs;
        if (uav(kVz) < deck.rates(2)) {
          spike_max =
              std::max(spike_max, (deck.rates(2) - uav(kVz)) / kPlantDt);
          uav(kVz) = deck.rates(2);
        }
        const double pull = kPlantDt / 0.2;
        uav(kVx) += (deck.rates(0) - uav(kVx)) * pull;
        uav(kVy) += (deck.rates(1) - uav(kVy)) * pull;
      } else {
        in_contact = false;
        if (!over_deck &&
            uav(kPz) <=
                sample_sea(sea, uav.segment<2>(kPx), deck.t).elevation) {
          note(t, "water_impact");
          done = true;
        }
      }
    }

    if (uav.head<3>().cwiseAbs().maxCoeff() > 500.0) {
      note(t, "runaway");
      done = true;
    }
  }

  // A touchdown declaration a hair before physical contact: let the plant
  // settle so the impact snapshot exists.
  if (fsm == FlightState::kLanded && !log.touchdown_time) {
    RotorCommand rotor;
    rotor.omega_sq = cmd;
    double t = log.records.empty() ? 0.0 : log.records.back().t;
    const double t_end = t + kSettleTail;
    while (t < t_end && !log.touchdown_time) {
      deck = usv_step(deck, params, usv_force, kPlantDt);
      sync_deck_to_waves(deck, params, sea);
      try {
        uav = rk4_step(s.uav, uav, rotor, kPlantDt);
      } catch (const PitchSingularity&) {
        break;
      }
      t += kPlantDt;
      const Vector6 surf = lift_to_surface(deck.pose, params.deck_height);
      const Eigen::Vector2d o = deck_frame_offset(surf, uav(kPx), uav(kPy));
      if (std::abs(o(0)) <= 0.5 * params.deck_size(0) &&
          std::abs(o(1)) <= 0.5 * params.deck_size(1) &&
          uav(kPz) <= deck_plane_z(surf, uav(kPx), uav(kPy))) {
        log.touchdown_time = t;
        log.uav_at_touchdown = uav;
        log.deck_pose_at_touchdown = surf;
        log.deck_rates_at_touchdown = deck.rates;
      }
    }
  }

  log.report = touchdown_metrics(log);
  return log;
}

TouchdownReport touchdown_metrics(const EpisodeLog& log) {
  TouchdownReport r;
  r.seed = log.seed;
  if (!log.touchdown_time) {
    r.total_time = log.records.empty() ? 0.0 : log.records.back().t;
    return r;
  }
  r.touched_down = true;
  const double td = *log.touchdown_time;
  r.total_time = td;

  const State12& u = log.uav_at_touchdown;
  const Vector6& dp = log.deck_pose_at_touchdown;
  const Vector6& dr = log.deck_rates_at_touchdown;
  r.position_dev = std::hypot(u(kPx) - dp(0), u(kPy) - dp(1));
  r.vertical_impact_vel = std::abs(u(kVz) - dr(2));
  r.roll_dev = deg(wrap_pi(u(kRoll) - dp(3)));
  r.pitch_dev = deg(wrap_pi(u(kPitch) - dp(4)));
  r.yaw_dev = deg(wrap_pi(u(kYaw) - dp(5)));

  double entry = 0.0;
  bool seen = false;
  for (const MissionEventRecord& e : log.events) {
    if (e.to == FlightState::kDescent && e.t <= td) {
      entry = e.t;
      seen = true;
    }
  }
  r.landing_duration = seen ? td - entry : 0.0;

  const Eigen::Vector2d off = deck_frame_offset(dp, u(kPx), u(kPy));
  const bool inside = std::abs(off(0)) <= 0.5 * log.deck_size(0) &&
                      std::abs(off(1)) <= 0.5 * log.deck_size(1);
  r.success = inside && std::abs(r.roll_dev) <= kTipOverDeg &&
              std::abs(r.pitch_dev) <= kTipOverDeg;
  return r;
}

NormalFit fit_normal(const std::vector<double>& samples) {
  if (samples.empty()) throw std::invalid_argument("fit_normal: no samples");
  NormalFit f;
  for (double x : samples) f.mu += x;
  f.mu /= static_cast<double>(samples.size());
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double x : samples) ss += (x - f.mu) * (x - f.mu);
    f.sigma = std::sqrt(ss / static_cast<double>(samples.size() - 1));
  }
  return f;
}

StatsReport aggregate_reports(const std::vector<TouchdownReport>& reports) {
  StatsReport s;
  s.n_episodes = static_cast<int>(reports.size());
  std::vector<double> pos, imp, roll, pitch, yaw, dur, total;
  int successes = 0;
  for (const TouchdownReport& r : reports) {
    if (r.success) ++successes;
    if (!r.touched_down) continue;
    ++s.n_touchdowns;
    pos.push_back(r.position_dev);
    imp.push_back(r.vertical_impact_vel);
    roll.push_back(r.roll_dev);
    pitch.push_back(r.pitch_dev);
    yaw.push_back(r.yaw_dev);
    dur.push_back(r.landing_duration);
    total.push_back(r.total_time);
  }
  if (s.n_episodes > 0)
    s.success_rate = static_cast<double>(successes) / s.n_episodes;
  if (s.n_touchdowns > 0) {
    s.position_dev = fit_normal(pos);
    s.vertical_impact_vel = fit_normal(imp);
    s.roll_dev = fit_normal(roll);
    s.pitch_dev = fit_normal(pitch);
    s.yaw_dev = fit_normal(yaw);
    s.landing_duration = fit_normal(dur);
    s.total_time = fit_normal(total);
  }
  return s;
}

MonteCarloResult run_monte_carlo(const Scenario& s, int n,
                                 std::uint64_t base_seed, int jobs) {
  if (n < 1) throw std::invalid_argument("run_monte_carlo: n must be >= 1");
  MonteCarloResult res;
  res.episodes.resize(n);

  jobs = std::clamp(jobs, 1, n);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      res.episodes[i] = run_episode(s, derive_seed(base_seed, i)).report;
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  res.stats = aggregate_reports(res.episodes);
  return res;
}

namespace {

std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

constexpr const char* kCsvHeader =
    "seed,success,touched_down,position_dev,vertical_impact_vel,roll_dev,"
    "pitch_dev,yaw_dev,landing_duration,total_time";

const char* const kMetricNames[7] = {
    "position_dev", "vertical_impact_vel", "roll_dev",  "pitch_dev",
    "yaw_dev",      "landing_duration",    "total_time"};

const NormalFit* metric_slot(const StatsReport& s, int i) {
  const NormalFit* slots[7] = {
      &s.position_dev, &s.vertical_impact_vel, &s.roll_dev,      &s.pitch_dev,
      &s.yaw_dev,      &s.landing_duration,    &s.total_time};
  return slots[i];
}

NormalFit* metric_slot(StatsReport& s, int i) {
  return const_cast<NormalFit*>(metric_slot(std::as_const(s), i));
}

FlightState state_from_string(const std::string& name) {
  for (int i = 0; i < 8; ++i) {
    const FlightState st = static_cast<FlightState>(i);
    if (name == to_string(st)) return st;
  }
  throw std::invalid_argument("unknown flight state \"" + name + "\"");
}

using nlohmann::json;

json report_to_json(const TouchdownReport& r) {
  return json{{"seed", r.seed},
              {"success", r.success},
              {"touched_down", r.touched_down},
              {"position_dev", r.position_dev},
              {"vertical_impact_vel", r.vertical_impact_vel},
              {"roll_dev", r.roll_dev},
              {"pitch_dev", r.pitch_dev},
              {"yaw_dev", r.yaw_dev},
              {"landing_duration", r.landing_duration},
              {"total_time", r.total_time}};
}

TouchdownReport report_from_json(const json& j) {
  TouchdownReport r;
  r.seed = j.at("seed").get<std::uint64_t>();
  r.success = j.at("success").get<bool>();
  r.touched_down = j.at("touched_down").get<bool>();
  r.position_dev = j.at("position_dev").get<double>();
  r.vertical_impact_vel = j.at("vertical_impact_vel").get<double>();
  r.roll_dev = j.at("roll_dev").get<double>();
  r.pitch_dev = j.at("pitch_dev").get<double>();
  r.yaw_dev = j.at("yaw_dev").get<double>();
  r.landing_duration = j.at("landing_duration").get<double>();
  r.total_time = j.at("total_time").get<double>();
  return r;
}

json events_to_json(const std::vector<MissionEventRecord>& events) {
  json arr = json::array();
  for (const MissionEventRecord& e : events)
    arr.push_back(json{{"t", e.t},
                       {"from", to_string(e.from)},
                       {"to", to_string(e.to)},
                       {"guard", e.guard}});
  return arr;
}

std::vector<MissionEventRecord> events_from_json(const json& arr) {
  std::vector<MissionEventRecord> events;
  for (const json& e : arr)
    events.push_back({e.at("t").get<double>(),
                      state_from_string(e.at("from").get<std::string>()),
                      state_from_string(e.at("to").get<std::string>()),
                      e.at("guard").get<std::string>()});
  return events;
}

const char* const kAxis12[12] = {"px", "py", "pz",    "roll",   "pitch", "yaw",
                                 "vx", "vy", "vz",    "wroll",  "wpitch",
                                 "wyaw"};
const char* const kPose6[6] = {"x", "y", "z", "roll", "pitch", "yaw"};

json record_columns() {
  json cols = json::array();
  cols.push_back("t");
  for (const char* a : kAxis12) cols.push_back(std::string("uav_") + a);
  for (const char* a : kPose6) cols.push_back(std::string("deck_") + a);
  for (const char* a : kPose6) cols.push_back(std::string("deckrate_") + a);
  cols.push_back("estimate_valid");
  for (const char* a : kPose6) cols.push_back(std::string("est_") + a);
  for (const char* a : kPose6) cols.push_back(std::string("estrate_") + a);
  cols.push_back("fsm");
  for (const char* a : kAxis12) cols.push_back(std::string("ref_") + a);
  for (const char* a : kAxis12) cols.push_back(std::string("plan_") + a);
  for (int i = 0; i < 4; ++i) cols.push_back("cmd_" + std::to_string(i));
  return cols;
}

json record_to_row(const EpisodeRecord& r) {
  json row = json::array();
  row.push_back(r.t);
  for (int i = 0; i < 12; ++i) row.push_back(r.uav(i));
  for (int i = 0; i < 6; ++i) row.push_back(r.deck_pose(i));
  for (int i = 0; i < 6; ++i) row.push_back(r.deck_rates(i));
  row.push_back(r.estimate_valid ? 1 : 0);
  for (int i = 0; i < 6; ++i) row.push_back(r.est_pose(i));
  for (int i = 0; i < 6; ++i) row.push_back(r.est_rates(i));
  row.push_back(static_cast<int>(r.fsm));
  for (int i = 0; i < 12; ++i) row.push_back(r.reference(i));
  for (int i = 0; i < 12; ++i) row.push_back(r.plan_head(i));
  for (int i = 0; i < 4; ++i) row.push_back(r.rotor_cmd(i));
  return row;
}

EpisodeRecord record_from_row(const json& row) {
  if (!row.is_array() || row.size() != 67)
    throw std::invalid_argument("episode record row has wrong width");
  EpisodeRecord r;
  int c = 0;
  r.t = row[c++].get<double>();
  for (int i = 0; i < 12; ++i) r.uav(i) = row[c++].get<double>();
  for (int i = 0; i < 6; ++i) r.deck_pose(i) = row[c++].get<double>();
  for (int i = 0; i < 6; ++i) r.deck_rates(i) = row[c++].get<double>();
  r.estimate_valid = row[c++].get<int>() != 0;
  for (int i = 0; i < 6; ++i) r.est_pose(i) = row[c++].get<double>();
  for (int i = 0; i < 6; ++i) r.est_rates(i) = row[c++].get<double>();
  r.fsm = static_cast<FlightState>(row[c++].get<int>());
  for (int i = 0; i < 12; ++i) r.reference(i) = row[c++].get<double>();
  for (int i = 0; i < 12; ++i) r.plan_head(i) = row[c++].get<double>();
  for (int i = 0; i < 4; ++i) r.rotor_cmd(i) = row[c++].get<double>();
  return r;
}

}  // namespace

bool operator==(const TouchdownReport& a, const TouchdownReport& b) {
  return a.seed == b.seed && a.success == b.success &&
         a.touched_down == b.touched_down &&
         a.position_dev == b.position_dev &&
         a.vertical_impact_vel == b.vertical_impact_vel &&
         a.roll_dev == b.roll_dev && a.pitch_dev == b.pitch_dev &&
         a.yaw_dev == b.yaw_dev && a.landing_duration == b.landing_duration &&
         a.total_time == b.total_time;
}

bool operator==(const StatsReport& a, const StatsReport& b) {
  auto same = [](const NormalFit& x, const NormalFit& y) {
    return x.mu == y.mu && x.sigma == y.sigma;
  };
  return a.n_episodes == b.n_episodes && a.n_touchdowns == b.n_touchdowns &&
         a.success_rate == b.success_rate &&
         same(a.position_dev, b.position_dev) &&
         same(a.vertical_impact_vel, b.vertical_impact_vel) &&
         same(a.roll_dev, b.roll_dev) && same(a.pitch_dev, b.pitch_dev) &&
         same(a.yaw_dev, b.yaw_dev) &&
         same(a.landing_duration, b.landing_duration) &&
         same(a.total_time, b.total_time);
}

std::string episodes_csv(const std::vector<TouchdownReport>& reports) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const TouchdownReport& r : reports) {
    out += std::to_string(r.seed);
    out += r.success ? ",1" : ",0";
    out += r.touched_down ? ",1" : ",0";
    for (double v : {r.position_dev, r.vertical_impact_vel, r.roll_dev,
                     r.pitch_dev, r.yaw_dev, r.landing_duration,
                     r.total_time}) {
      out += ',';
      out += num17(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<TouchdownReport> parse_episodes_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw std::invalid_argument("episodes csv: bad header");
  std::vector<TouchdownReport> reports;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 10)
      throw std::invalid_argument("episodes csv: bad row \"" + line + "\"");
    TouchdownReport r;
    r.seed = std::strtoull(fields[0].c_str(), nullptr, 10);
    r.success = fields[1] == "1";
    r.touched_down = fields[2] == "1";
    double* slots[7] = {&r.position_dev, &r.vertical_impact_vel, &r.roll_dev,
                        &r.pitch_dev,    &r.yaw_dev,             &r.landing_duration,
                        &r.total_time};
    for (int i = 0; i < 7; ++i) *slots[i] = std::strtod(fields[3 + i].c_str(), nullptr);
    reports.push_back(r);
  }
  return reports;
}

std::string stats_json(const StatsReport& s) {
  json metrics;
  for (int i = 0; i < 7; ++i) {
    const NormalFit* f = metric_slot(s, i);
    metrics[kMetricNames[i]] = json{{"mu", f->mu}, {"sigma", f->sigma}};
  }
  const json j{{"n_episodes", s.n_episodes},
               {"n_touchdowns", s.n_touchdowns},
               {"success_rate", s.success_rate},
               {"metrics", metrics}};
  return j.dump(2) + "\n";
}

StatsReport parse_stats_json(const std::string& text) {
  const json j = json::parse(text);
  StatsReport s;
  s.n_episodes = j.at("n_episodes").get<int>();
  s.n_touchdowns = j.at("n_touchdowns").get<int>();
  s.success_rate = j.at("success_rate").get<double>();
  const json& metrics = j.at("metrics");
  for (int i = 0; i < 7; ++i) {
    NormalFit* f = metric_slot(s, i);
    const json& m = metrics.at(kMetricNames[i]);
    f->mu = m.at("mu").get<double>();
    f->sigma = m.at("sigma").get<double>();
  }
  return s;
}

std::string episode_json(const EpisodeLog& log) {
  json rows = json::array();
  for (const EpisodeRecord& r : log.records) rows.push_back(record_to_row(r));

  json j{{"seed", log.seed},
         {"deck_size", {log.deck_size(0), log.deck_size(1)}},
         {"columns", record_columns()},
         {"records", std::move(rows)},
         {"events", events_to_json(log.events)},
         {"anomalies", events_to_json(log.anomalies)},
         {"fallback_count", log.fallback_count},
         {"report", report_to_json(log.report)}};
  if (log.touchdown_time) {
    json td{{"t", *log.touchdown_time}};
    td["uav"] = json::array();
    for (int i = 0; i < 12; ++i) td["uav"].push_back(log.uav_at_touchdown(i));
    td["deck_pose"] = json::array();
    td["deck_rates"] = json::array();
    for (int i = 0; i < 6; ++i) {
      td["deck_pose"].push_back(log.deck_pose_at_touchdown(i));
      td["deck_rates"].push_back(log.deck_rates_at_touchdown(i));
    }
    j["touchdown"] = std::move(td);
  } else {
    j["touchdown"] = nullptr;
  }
  return j.dump() + "\n";
}

EpisodeLog parse_episode_json(const std::string& text) {
  const json j = json::parse(text);
  EpisodeLog log;
  log.seed = j.at("seed").get<std::uint64_t>();
  log.deck_size(0) = j.at("deck_size").at(0).get<double>();
  log.deck_size(1) = j.at("deck_size").at(1).get<double>();
  for (const json& row : j.at("records"))
    log.records.push_back(record_from_row(row));
  log.events = events_from_json(j.at("events"));
  log.anomalies = events_from_json(j.at("anomalies"));
  log.fallback_count = j.at("fallback_count").get<int>();
  if (!j.at("touchdown").is_null()) {
    const json& td = j.at("touchdown");
    log.touchdown_time = td.at("t").get<double>();
    for (int i = 0; i < 12; ++i)
      log.uav_at_touchdown(i) = td.at("uav").at(i).get<double>();
    for (int i = 0; i < 6; ++i) {
      log.deck_pose_at_touchdown(i) = td.at("deck_pose").at(i).get<double>();
      log.deck_rates_at_touchdown(i) = td.at("deck_rates").at(i).get<double>();
    }
  }
  log.report = report_from_json(j.at("report"));
  return log;
}

AuditResult audit_episode(const EpisodeLog& log, const Scenario& s) {
  AuditResult a;
  auto violate = [&](const std::string& msg) {
    a.ok = false;
    a.violations.push_back(msg);
  };

  for (std::size_t i = 1; i < log.records.size(); ++i)
    if (!(log.records[i].t > log.records[i - 1].t)) {
      violate("timestamps not strictly increasing at index " +
              std::to_string(i));
      break;
    }

  // The event chain must walk the mission graph from Idle.
  static const std::vector<std::pair<FlightState, FlightState>> kLegal = {
      {FlightState::kIdle, FlightState::kGetAltitude},
      {FlightState::kGetAltitude, FlightState::kApproach},
      {FlightState::kApproach, FlightState::kTracking},
      {FlightState::kTracking, FlightState::kTrackingStable},
      {FlightState::kTrackingStable, FlightState::kDescent},
      {FlightState::kDescent, FlightState::kTracking},
      {FlightState::kDescent, FlightState::kFlare},
      {FlightState::kFlare, FlightState::kLanded},
      {FlightState::kFlare, FlightState::kTracking},
  };
  FlightState cur = FlightState::kIdle;
  for (const MissionEventRecord& e : log.events) {
    if (e.from != cur) {
      violate(std::string("event chain breaks: expected from ") +
              to_string(cur) + ", got " + to_string(e.from));
      break;
    }
    const bool legal =
        std::find(kLegal.begin(), kLegal.end(),
                  std::make_pair(e.from, e.to)) != kLegal.end();
    if (!legal)
      violate(std::string("illegal transition ") + to_string(e.from) + " -> " +
              to_string(e.to));
    cur = e.to;
  }

  // Flight limits, checked on the true states up to touchdown. Velocity
  // boxes are soft in the planner, so they get a tolerance; the hard
  // channels get a small numerical allowance.
  const MpcLimits& l = s.limits;
  const double omega_sq_max = s.uav.omega_sq_max();
  for (const EpisodeRecord& r : log.records) {
    if (log.touchdown_time && r.t >= *log.touchdown_time) break;
    const char* what = nullptr;
    if (std::abs(r.uav(kRoll)) > l.max_tilt + 0.02 ||
        std::abs(r.uav(kPitch)) > l.max_tilt + 0.02)
      what = "tilt limit";
    else if (std::abs(r.uav(kWroll)) > l.max_body_rate * 1.1 ||
             std::abs(r.uav(kWpitch)) > l.max_body_rate * 1.1 ||
             std::abs(r.uav(kWyaw)) > l.max_body_rate * 1.1)
      what = "body rate limit";
    else if (std::max(std::abs(r.uav(kVx)), std::abs(r.uav(kVy))) >
             l.max_horizontal_speed * 1.1 + 0.1)
      what = "horizontal speed limit";
    else if (std::abs(r.uav(kVz)) > l.max_vertical_speed * 1.1 + 0.1)
      what = "vertical speed limit";
    else if (r.uav(kPz) < l.min_altitude - 0.05)
      what = "altitude floor";
    else if (r.rotor_cmd.minCoeff() < -1e-9 ||
             r.rotor_cmd.maxCoeff() > omega_sq_max + 1e-6)
      what = "rotor command box";
    if (what) {
      violate(std::string(what) + " violated at t=" + num17(r.t));
      break;
    }
  }
  return a;
}

}  // namespace deckland
