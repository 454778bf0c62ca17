#pragma once

// Closed-loop episode execution and Monte-Carlo studies.
//
// Each step of an episode:
//
//  1. The surrounding agents pick their actions by solving the potential game
//     of their TRUE costs (they behave freely per their own game).
//  2. The ego picks its action from the selected controller, which only sees
//     the assumed parameters:
//       pg              joint PSNE of the assumed game, ego plays its slot
//       pcpg            predictor-corrector best response
//       pcpg-certified  pcpg plus a reachable-set safety filter
//       pcca            LQR nominal + shared-QP barrier, unbounded actuation
//       pcca-saturated  same, ego command clipped to its bounds
//  3. Everyone advances one Euler step; the episode stops at its duration or
//     at the first collision (pair distance < d_safe).
//
// Per-step solver seeds derive deterministically from the scenario seed, so
// an episode is a pure function of (scenario, controller, solver config) and
// studies parallelize without changing results.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pcpg/baselines.hpp"
#include "pcpg/corrector.hpp"
#include "pcpg/core.hpp"
#include "pcpg/game.hpp"
#include "pcpg/safety.hpp"
#include "pcpg/scenarios.hpp"

namespace pcpg {

enum class Controller { pg, pcpg, pcpg_certified, pcca, pcca_saturated };
enum class ScenarioFamily { oncoming, intersection };

std::string controller_name(Controller c);
Controller controller_from_name(const std::string& name);
std::string family_name(ScenarioFamily f);
ScenarioFamily family_from_name(const std::string& name);

struct StepRecord {
  std::vector<VehicleState> states;      // before applying the step's actions
  std::vector<Action> applied;           // realized actions, all agents
  std::vector<Action> predicted;         // controller's model of everyone (see README)
  std::vector<Action> corrected;         // deviation-adjusted model
  std::vector<Action> deviation;         // omega(t-1); zeros before the first observation
  std::vector<double> agent_costs;       // true cost of the applied joint per agent
  double ego_solve_seconds = 0.0;        // wall clock of the ego's decision
  bool probe_nonempty = true;            // certified mode: safe probe found a witness
  bool safety_filtered = false;          // certified mode: filter replaced the action
  bool qp_infeasible = false;            // pcca: constraints inconsistent this step
};

struct EpisodeLog {
  Controller controller = Controller::pg;
  std::vector<StepRecord> steps;
  std::vector<VehicleState> final_states;
  std::optional<CollisionRecord> collision;
  double min_distance = 0.0;  // over every visited state
};

struct EpisodeMetrics {
  bool collided = false;
  int steps_run = 0;
  double min_distance = 0.0;
  double ave_velocity_deviation = 0.0;      // signed mean of v_long - v_long_desired
  double max_velocity_deviation = 0.0;      // max |v_long - v_long_desired|
  double ave_abs_velocity_deviation = 0.0;
  double ave_heading_deviation_deg = 0.0;   // signed mean, wrapped to (-180, 180]
  double max_heading_deviation_deg = 0.0;   // max absolute
  double ave_abs_heading_deviation_deg = 0.0;
  double ave_solve_seconds = 0.0;
  double max_solve_seconds = 0.0;
};

struct StudySummary {
  Controller controller = Controller::pg;
  ScenarioFamily family = ScenarioFamily::oncoming;
  int num_scenarios = 0;
  std::uint64_t seed = 0;
  double collision_rate = 0.0;
  double ave_velocity_deviation = 0.0;     // mean over episodes of the episode average
  double max_velocity_deviation = 0.0;     // max over episodes of the episode max
  double ave_heading_deviation_deg = 0.0;
  double max_heading_deviation_deg = 0.0;
  double ave_abs_velocity_deviation = 0.0;
  double ave_abs_heading_deviation_deg = 0.0;
  double ave_solve_seconds = 0.0;
  double max_solve_seconds = 0.0;
  int episodes_failed = 0;  // episodes aborted by solver errors (not collisions)
};

// Optional overrides for the PCCA barrier gains; d_safe always comes from the
// scenario and saturation from the controller choice.
struct CbfGains {
  double l0 = 13.0;
  double l1 = 16.0;
};

EpisodeLog run_episode(const Scenario& scenario, Controller controller,
                       const SolverConfig& solver, const CbfGains& cbf_gains = {});

EpisodeMetrics compute_metrics(const EpisodeLog& log, const Scenario& scenario);

struct StudyResult {
  std::vector<StudySummary> summaries;  // one per controller, input order
  // episode_metrics[c][k]: controller c on scenario k
  std::vector<std::vector<EpisodeMetrics>> episode_metrics;
};

// Runs every controller on the same n sampled scenarios (scenario k derives
// from (seed, k) alone, so pairing is exact).  num_threads > 1 distributes
// scenarios across threads; results are identical to a serial run.
StudyResult run_study(ScenarioFamily family, const std::vector<Controller>& controllers, int n,
                      std::uint64_t seed, const SolverConfig& solver, int num_threads = 1,
                      const CbfGains& cbf_gains = {});

Scenario sample_family(ScenarioFamily family, std::uint64_t study_seed, int index);

// Largest per-step rate of change of the Predictor's surrounding-agent
// predictions (stacked Euclidean norm / dt), maximized over num_rollouts
// closed-loop episodes of the family run under the predictor-corrector
// controller with sampled true parameters.
double estimate_k2(ScenarioFamily family, const SolverConfig& solver, int num_rollouts,
                   std::uint64_t seed);

// Per-step trajectory table: states, applied/predicted/corrected actions per
// agent, and the minimum inter-agent distance.  The last row carries the
// terminal states with zeroed action columns.
void write_trajectory_csv(std::ostream& out, const EpisodeLog& log, const Scenario& scenario);

// Horizon rollouts of the predicted and corrected strategies at every step,
// for plotting prediction fans.
void write_predictions_csv(std::ostream& out, const EpisodeLog& log, const Scenario& scenario);

// Deterministic study summary (byte-identical across reruns with one seed).
// Wall-clock statistics deliberately live in write_timings instead.
void write_summary(std::ostream& out, ScenarioFamily family, int n, std::uint64_t seed,
                   const std::vector<StudySummary>& summaries);

void write_timings(std::ostream& out, const std::vector<StudySummary>& summaries);

}  // namespace pcpg
