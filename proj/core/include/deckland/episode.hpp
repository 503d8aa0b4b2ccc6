#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "deckland/fsm.hpp"
#include "deckland/scenario.hpp"
#include "deckland/uav_model.hpp"
#include "deckland/usv.hpp"

namespace deckland {

struct MissionEventRecord {
  double t = 0.0;
  FlightState from = FlightState::kIdle;
  FlightState to = FlightState::kIdle;
  std::string guard;
};

// One 50 Hz snapshot of the closed loop. Deck quantities describe the
// landing surface center (hull pose lifted by the deck height).
struct EpisodeRecord {
  double t = 0.0;
  State12 uav = State12::Zero();
  Vector6 deck_pose = Vector6::Zero();
  Vector6 deck_rates = Vector6::Zero();
  bool estimate_valid = false;        // an estimate was accepted this tick
  Vector6 est_pose = Vector6::Zero(); // latest accepted estimate, surface frame
  Vector6 est_rates = Vector6::Zero();
  FlightState fsm = FlightState::kIdle;
  State12 reference = State12::Zero();  // stage-0 reference row
  State12 plan_head = State12::Zero();  // stage-0 predicted state
  Vector4 rotor_cmd = Vector4::Zero();  // applied rotor speeds squared
};

struct TouchdownReport {
  std::uint64_t seed = 0;
  bool success = false;
  bool touched_down = false;
  double position_dev = 0.0;        // m, horizontal, from deck center
  double vertical_impact_vel = 0.0; // m/s, relative to deck heave rate
  double roll_dev = 0.0;            // deg, vehicle minus deck
  double pitch_dev = 0.0;           // deg
  double yaw_dev = 0.0;             // deg
  double landing_duration = 0.0;    // s, descent entry to touchdown
  double total_time = 0.0;          // s
};

bool operator==(const TouchdownReport& a, const TouchdownReport& b);

struct EpisodeLog {
  std::uint64_t seed = 0;
  Eigen::Vector2d deck_size{2.5, 1.7};
  std::vector<EpisodeRecord> records;
  std::vector<MissionEventRecord> events;
  // Non-transition incidents (solver exhaustion, water impact); from == to.
  std::vector<MissionEventRecord> anomalies;
  int fallback_count = 0;
  // Physical contact with the deck, truth at that instant.
  std::optional<double> touchdown_time;
  State12 uav_at_touchdown = State12::Zero();
  Vector6 deck_pose_at_touchdown = Vector6::Zero();
  Vector6 deck_rates_at_touchdown = Vector6::Zero();
  TouchdownReport report;
};

// Closed-loop episode: 500 Hz plant for the vehicle and vessel, estimator
// emulation and mission logic at 50 Hz, trajectory re-planning at 10 Hz in
// transit and 50 Hz over the deck. Runs until Landed, water impact, or the
// scenario timeout; deterministic per (scenario, seed).
EpisodeLog run_episode(const Scenario& s, std::uint64_t seed);

// Deviations between true vehicle and true deck state at the touchdown
// instant; success means on the deck rectangle without tipping over.
TouchdownReport touchdown_metrics(const EpisodeLog& log);

struct NormalFit {
  double mu = 0.0;
  double sigma = 0.0;
};

// Sample mean and unbiased standard deviation; a single sample fits
// sigma = 0. Throws std::invalid_argument when empty.
NormalFit fit_normal(const std::vector<double>& samples);

struct StatsReport {
  int n_episodes = 0;
  int n_touchdowns = 0;
  double success_rate = 0.0;
  NormalFit position_dev;
  NormalFit vertical_impact_vel;
  NormalFit roll_dev;
  NormalFit pitch_dev;
  NormalFit yaw_dev;
  NormalFit landing_duration;
  NormalFit total_time;
};

bool operator==(const StatsReport& a, const StatsReport& b);

// Metric fits cover the episodes that touched down; the success rate
// counts every episode. Order-independent: reports are reduced in the
// order given, which run_monte_carlo fixes to episode index.
StatsReport aggregate_reports(const std::vector<TouchdownReport>& reports);

struct MonteCarloResult {
  StatsReport stats;
  std::vector<TouchdownReport> episodes;  // by episode index
};

// n episodes with seeds derived from base_seed, optionally on several
// threads. Results are byte-identical for any job count.
MonteCarloResult run_monte_carlo(const Scenario& s, int n,
                                 std::uint64_t base_seed, int jobs = 1);

// Artifact serialization. The CSV column order is fixed and numbers carry
// enough digits to round-trip exactly.
std::string episodes_csv(const std::vector<TouchdownReport>& reports);
std::vector<TouchdownReport> parse_episodes_csv(const std::string& text);
std::string stats_json(const StatsReport& stats);
StatsReport parse_stats_json(const std::string& text);
std::string episode_json(const EpisodeLog& log);
EpisodeLog parse_episode_json(const std::string& text);

// Post-hoc check that a finished episode stayed legal: monotone time,
// event chain consistent with the mission graph, flight limits respected
// up to touchdown, rotor commands inside their box.
struct AuditResult {
  bool ok = true;
  std::vector<std::string> violations;
};

AuditResult audit_episode(const EpisodeLog& log, const Scenario& s);

}  // namespace deckland
