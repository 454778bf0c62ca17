// Closed-loop episode and study machinery: determinism, pairing, early
// termination, metric arithmetic (checked against hand-built logs), and the
// CSV/summary writers.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "pcpg/harness.hpp"

using namespace pcpg;

namespace {

std::string trajectory_string(const EpisodeLog& log, const Scenario& s) {
  std::ostringstream out;
  write_trajectory_csv(out, log, s);
  return out.str();
}

std::string summary_string(const StudyResult& r, ScenarioFamily fam, int n, std::uint64_t seed) {
  std::ostringstream out;
  write_summary(out, fam, n, seed, r.summaries);
  return out.str();
}

}  // namespace

TEST_CASE("episodes are a pure function of their inputs") {
  const Scenario s = sample_oncoming(3);
  const SolverConfig solver;
  const EpisodeLog a = run_episode(s, Controller::pcpg, solver);
  const EpisodeLog b = run_episode(s, Controller::pcpg, solver);
  CHECK(trajectory_string(a, s) == trajectory_string(b, s));
  CHECK(a.min_distance == b.min_distance);
}

TEST_CASE("an episode stops at its first collision") {
  // Aggressive oncoming vehicle, naive game-only ego: known to collide.
  const Scenario s = build_oncoming(0.5, 10.0, 102);
  const EpisodeLog log = run_episode(s, Controller::pg, SolverConfig{});
  REQUIRE(log.collision.has_value());
  CHECK(log.collision->step == static_cast<int>(log.steps.size()));
  CHECK(static_cast<int>(log.steps.size()) < s.duration_steps);
  CHECK(log.min_distance < s.safety_spec.d_safe);
  CHECK(log.collision->agent_a == 0);
  CHECK(log.collision->agent_b == 1);
}

TEST_CASE("accurate assumptions leave the corrector idle") {
  // True aggressiveness equals the assumed value, and the surrounding agents
  // solve the same game with the same per-step seed the predictor uses, so
  // every measured deviation is exactly zero.
  const Scenario s = build_oncoming(0.8, 1.0, 77);
  const EpisodeLog log = run_episode(s, Controller::pcpg, SolverConfig{});
  for (const StepRecord& rec : log.steps) {
    for (std::size_t j = 0; j < s.num_agents(); ++j) {
      CHECK(rec.deviation[j].ax == 0.0);
      CHECK(rec.deviation[j].ay == 0.0);
      if (j != s.ego_index) {
        CHECK(rec.corrected[j].ax == rec.predicted[j].ax);
        CHECK(rec.corrected[j].ay == rec.predicted[j].ay);
      }
    }
  }
}

TEST_CASE("metrics wrap headings into (-180, 180] and average post-step states") {
  const Scenario s = build_oncoming(1.0, 1.0, 5);  // ego desired velocity (0, 5)
  EpisodeLog log;
  log.min_distance = 12.0;

  StepRecord r0;
  r0.states = s.initial_states;  // pre-step states are not scored
  r0.ego_solve_seconds = 0.25;
  log.steps.push_back(r0);

  StepRecord r1;
  r1.states = s.initial_states;
  r1.states[0].vx = 5.0;  // heading 0 deg   -> deviation -90
  r1.states[0].vy = 0.0;  // longitudinal deviation -5
  r1.ego_solve_seconds = 0.75;
  log.steps.push_back(r1);

  log.final_states = s.initial_states;
  log.final_states[0].vx = 0.0;
  log.final_states[0].vy = -5.0;  // heading -90 -> raw -180 wraps to +180

  const EpisodeMetrics m = compute_metrics(log, s);
  CHECK(m.steps_run == 2);
  CHECK(!m.collided);
  CHECK(m.min_distance == 12.0);
  CHECK(m.ave_velocity_deviation == doctest::Approx(-7.5).epsilon(1e-15));
  CHECK(m.ave_abs_velocity_deviation == doctest::Approx(7.5).epsilon(1e-15));
  CHECK(m.max_velocity_deviation == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(m.ave_heading_deviation_deg == doctest::Approx(45.0).epsilon(1e-12));
  CHECK(m.ave_abs_heading_deviation_deg == doctest::Approx(135.0).epsilon(1e-12));
  CHECK(m.max_heading_deviation_deg == doctest::Approx(180.0).epsilon(1e-12));
  CHECK(m.ave_solve_seconds == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m.max_solve_seconds == 0.75);
}

TEST_CASE("a locked ego reports exactly zero heading deviation") {
  const Scenario s = build_intersection({1.0, 1.0, 1.0, 1.0}, {5.0, 5.0, 5.0, 5.0}, 8);
  EpisodeLog log;
  log.min_distance = 30.0;
  StepRecord r0;
  r0.states = s.initial_states;
  log.steps.push_back(r0);
  log.final_states = s.initial_states;
  log.final_states[0].vy = -3.0;  // deviation -8 m/s, heading still locked
  const EpisodeMetrics m = compute_metrics(log, s);
  CHECK(m.ave_heading_deviation_deg == 0.0);
  CHECK(m.max_heading_deviation_deg == 0.0);
  CHECK(m.ave_velocity_deviation == doctest::Approx(-8.0).epsilon(1e-15));
}

TEST_CASE("paired studies are thread-invariant and aggregate episode means") {
  const SolverConfig solver;
  const std::vector<Controller> cs{Controller::pg, Controller::pcpg, Controller::pcca};
  const StudyResult serial = run_study(ScenarioFamily::oncoming, cs, 6, 11, solver, 1);
  const StudyResult parallel = run_study(ScenarioFamily::oncoming, cs, 6, 11, solver, 3);
  CHECK(summary_string(serial, ScenarioFamily::oncoming, 6, 11) ==
        summary_string(parallel, ScenarioFamily::oncoming, 6, 11));

  REQUIRE(serial.summaries.size() == 3);
  REQUIRE(serial.episode_metrics.size() == 3);
  for (std::size_t c = 0; c < 3; ++c) {
    REQUIRE(serial.episode_metrics[c].size() == 6);
    double sum = 0.0;
    int collisions = 0;
    for (const EpisodeMetrics& m : serial.episode_metrics[c]) {
      sum += m.ave_velocity_deviation;
      if (m.collided) ++collisions;
    }
    CHECK(serial.summaries[c].ave_velocity_deviation ==
          doctest::Approx(sum / 6.0).epsilon(1e-12));
    CHECK(serial.summaries[c].collision_rate ==
          doctest::Approx(collisions / 6.0).epsilon(1e-15));
    CHECK(serial.summaries[c].episodes_failed == 0);
  }

  // The barrier QP is orders of magnitude cheaper than the game solve, and
  // both finish well inside one control period.
  const double pg_ave = serial.summaries[0].ave_solve_seconds;
  const double pcca_ave = serial.summaries[2].ave_solve_seconds;
  CHECK(pg_ave > 0.0);
  CHECK(pcca_ave > 0.0);
  CHECK(pcca_ave < pg_ave);
  CHECK(pg_ave < 0.5);
}

TEST_CASE("prediction-rate estimation is deterministic and bounded") {
  const SolverConfig solver;
  const double a = estimate_k2(ScenarioFamily::oncoming, solver, 3, 42);
  const double b = estimate_k2(ScenarioFamily::oncoming, solver, 3, 42);
  CHECK(a == b);
  CHECK(a > 0.0);
  // One surrounding agent, actions within [-3,3]^2, dt = 0.5: the stacked
  // rate can never exceed 6*sqrt(2)/0.5.
  CHECK(a < 6.0 * std::sqrt(2.0) / 0.5 + 1e-9);
  CHECK_THROWS_AS(estimate_k2(ScenarioFamily::oncoming, solver, 0, 1), ConfigError);
}

TEST_CASE("names round-trip") {
  for (Controller c : {Controller::pg, Controller::pcpg, Controller::pcpg_certified,
                       Controller::pcca, Controller::pcca_saturated}) {
    CHECK(controller_from_name(controller_name(c)) == c);
  }
  CHECK(controller_from_name("pcca-sat") == Controller::pcca_saturated);
  CHECK(family_from_name(family_name(ScenarioFamily::oncoming)) == ScenarioFamily::oncoming);
  CHECK(family_from_name(family_name(ScenarioFamily::intersection)) ==
        ScenarioFamily::intersection);
  CHECK_THROWS_AS(controller_from_name("mystery"), ConfigError);
  CHECK_THROWS_AS(family_from_name("mystery"), ConfigError);
}

TEST_CASE("trajectory CSV has one row per visited state") {
  const Scenario s = build_oncoming(1.0, 1.0, 21);
  const EpisodeLog log = run_episode(s, Controller::pcca, SolverConfig{});
  const std::string csv = trajectory_string(log, s);

  std::istringstream in(csv);
  std::string header;
  REQUIRE(std::getline(in, header));
  // step, time, ten columns per agent, min_distance.
  const long commas = std::count(header.begin(), header.end(), ',');
  CHECK(commas == 2 + 10 * 2);
  CHECK(header.rfind("step,time", 0) == 0);
  CHECK(header.find("a1_x") != std::string::npos);
  CHECK(header.find("a2_corr_ay") != std::string::npos);
  CHECK(header.find("min_distance") != std::string::npos);

  int rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == static_cast<int>(log.steps.size()) + 1);  // terminal row included

  std::ostringstream pred;
  write_predictions_csv(pred, log, s);
  CHECK(pred.str().rfind("step,agent,tau,pred_x,pred_y,corr_x,corr_y", 0) == 0);
}
