// Corrector layer: deviation bookkeeping, the clamped shift, and the exact
// second-step recovery property — an agent that departs from the prediction
// by a constant interior bias is predicted exactly from the second step
// onward, because the shift replays the bias observed one step earlier.

#include <doctest.h>

#include <cmath>
#include <optional>

#include "pcpg/corrector.hpp"
#include "pcpg/rng.hpp"
#include "pcpg/scenarios.hpp"

using namespace pcpg;

namespace {

Stage stage_of(const Scenario& s) {
  return Stage{s.initial_states, s.dt, s.horizon_steps};
}

}  // namespace

TEST_CASE("deviation is the elementwise gap between realized and predicted") {
  const std::vector<Action> actual{{1.0, 2.0}, {-0.5, 0.25}};
  const std::vector<Action> predicted{{0.25, 2.5}, {-1.0, 0.25}};
  const auto omega = compute_deviation(actual, predicted);
  REQUIRE(omega.size() == 2);
  CHECK(omega[0].ax == 0.75);
  CHECK(omega[0].ay == -0.5);
  CHECK(omega[1].ax == 0.5);
  CHECK(omega[1].ay == 0.0);
  CHECK_THROWS_AS(compute_deviation(actual, {{0, 0}}), ConfigError);
}

TEST_CASE("corrected prediction shifts by omega and clamps to the bounds") {
  std::vector<Strategy> prediction{Strategy{{2.5, -1.0}, 4}, Strategy{{0.0, 0.0}, 4}};
  std::vector<AgentParams> params(2);
  DeviationState dev;
  dev.valid = true;
  dev.omega = {{1.0, 0.5}, {-0.25, 0.0}};
  const auto corrected = corrected_prediction(prediction, dev, params);
  CHECK(corrected[0].action.ax == 3.0);  // 2.5 + 1.0 clamped to the bound
  CHECK(corrected[0].action.ay == -0.5);
  CHECK(corrected[1].action.ax == -0.25);
  CHECK(corrected[1].action.ay == 0.0);
}

TEST_CASE("an invalid deviation leaves the prediction untouched") {
  std::vector<Strategy> prediction{Strategy{{1.5, -0.5}, 4}};
  std::vector<AgentParams> params(1);
  DeviationState dev;  // valid = false
  const auto corrected = corrected_prediction(prediction, dev, params);
  CHECK(corrected[0].action.ax == 1.5);
  CHECK(corrected[0].action.ay == -0.5);
}

TEST_CASE("first corrector step predicts the plain game solve") {
  const Scenario scn = build_oncoming(0.6, 4.0, 21);
  SolverConfig solver;
  solver.seed = 17;
  const CorrectorResult r =
      corrector_step(stage_of(scn), scn.ego_index, std::nullopt, std::nullopt,
                     scn.true_params[scn.ego_index], scn.assumed_params, scn.cost_cfg, solver);
  CHECK(!r.deviation.valid);
  REQUIRE(r.corrected.size() == 2);
  for (std::size_t j = 0; j < r.corrected.size(); ++j) {
    CHECK(r.corrected[j].action.ax == r.pg_prediction[j].action.ax);
    CHECK(r.corrected[j].action.ay == r.pg_prediction[j].action.ay);
  }
}

TEST_CASE("ego slot never receives a deviation shift") {
  const Scenario scn = build_oncoming(0.6, 4.0, 22);
  SolverConfig solver;
  solver.seed = 18;
  const Stage stage = stage_of(scn);
  // Claim a large previous deviation for every agent including the ego.
  std::vector<Action> prev_actions{{2.0, 2.0}, {1.0, -1.0}};
  std::vector<Action> prev_prediction{{0.0, 0.0}, {0.5, 0.0}};
  const CorrectorResult r =
      corrector_step(stage, scn.ego_index, prev_actions, prev_prediction,
                     scn.true_params[scn.ego_index], scn.assumed_params, scn.cost_cfg, solver);
  CHECK(r.deviation.valid);
  CHECK(r.deviation.omega[scn.ego_index].ax == 0.0);
  CHECK(r.deviation.omega[scn.ego_index].ay == 0.0);
  const std::size_t other = 1 - scn.ego_index;
  CHECK(r.deviation.omega[other].ax == 0.5);
  CHECK(r.deviation.omega[other].ay == -1.0);
  CHECK(r.corrected[scn.ego_index].action.ax == r.pg_prediction[scn.ego_index].action.ax);
}

TEST_CASE("constant interior bias is predicted exactly from the second step") {
  // The surrounding vehicle plays prediction + omega with a fixed interior
  // omega.  Step 0 has no observation, so its error equals |omega|; every
  // later corrected prediction must match the realized action to 1e-12.
  const Scenario scn = build_oncoming(0.8, 1.0, 33);
  SolverConfig solver;
  solver.seed = 99;
  const Action bias{0.4, -0.3};
  const std::size_t ego = scn.ego_index;
  const std::size_t other = 1 - ego;

  std::vector<VehicleState> states = scn.initial_states;
  std::optional<std::vector<Action>> prev_actions;
  std::optional<std::vector<Action>> prev_prediction;
  for (int t = 0; t < 6; ++t) {
    Stage stage{states, scn.dt, scn.horizon_steps};
    solver.seed = 1000 + static_cast<std::uint64_t>(t);
    const CorrectorResult r =
        corrector_step(stage, ego, prev_actions, prev_prediction, scn.true_params[ego],
                       scn.assumed_params, scn.cost_cfg, solver);

    std::vector<Action> realized(2);
    realized[ego] = r.ego_strategy.action;
    realized[other] = Action{r.pg_prediction[other].action.ax + bias.ax,
                             r.pg_prediction[other].action.ay + bias.ay};
    REQUIRE(scn.assumed_params[other].action_bounds.contains(realized[other]));

    const double err = std::hypot(realized[other].ax - r.corrected[other].action.ax,
                                  realized[other].ay - r.corrected[other].action.ay);
    if (t == 0) {
      CHECK(err == doctest::Approx(std::hypot(bias.ax, bias.ay)).epsilon(1e-12));
    } else {
      CHECK(err <= 1e-12);
    }

    std::vector<Action> predicted(2);
    predicted[ego] = r.pg_prediction[ego].action;
    predicted[other] = r.pg_prediction[other].action;
    prev_actions = realized;
    prev_prediction = predicted;
    for (std::size_t j = 0; j < 2; ++j) states[j] = step_dynamics(states[j], realized[j], scn.dt);
  }
}

TEST_CASE("ego best response improves on its predicted slot") {
  const Scenario scn = build_oncoming(0.4, 8.0, 44);
  SolverConfig solver;
  solver.seed = 7;
  const Stage stage = stage_of(scn);
  const CorrectorResult r =
      corrector_step(stage, scn.ego_index, std::nullopt, std::nullopt,
                     scn.true_params[scn.ego_index], scn.assumed_params, scn.cost_cfg, solver);
  std::vector<AgentParams> params_for_ego = scn.assumed_params;
  params_for_ego[scn.ego_index] = scn.true_params[scn.ego_index];
  JointStrategy with_br{r.corrected};
  with_br[scn.ego_index] = r.ego_strategy;
  JointStrategy with_pg{r.corrected};
  with_pg[scn.ego_index] = r.pg_prediction[scn.ego_index];
  CHECK(agent_cost(scn.ego_index, with_br, stage, params_for_ego, scn.cost_cfg) <=
        agent_cost(scn.ego_index, with_pg, stage, params_for_ego, scn.cost_cfg) + 1e-9);
}

TEST_CASE("error bound grows linearly in the horizon offset") {
  const ErrorBoundParams p;  // k1 = k2 = 6
  CHECK(error_bound(p, 1, 0.5) == 6.0);
  CHECK(error_bound(p, 3, 0.5) == 18.0);
  const ErrorBoundParams tight{1.5, 0.5};
  CHECK(error_bound(tight, 4, 0.25) == 2.0);
  CHECK_THROWS_AS(error_bound(p, 0, 0.5), ConfigError);
  CHECK_THROWS_AS(error_bound(ErrorBoundParams{-1.0, 0.0}, 1, 0.5), ConfigError);
}

TEST_CASE("previous actions and predictions must arrive together") {
  const Scenario scn = build_oncoming(0.5, 1.0, 55);
  SolverConfig solver;
  std::vector<Action> actions(2);
  CHECK_THROWS_AS(corrector_step(stage_of(scn), 0, actions, std::nullopt,
                                 scn.true_params[0], scn.assumed_params, scn.cost_cfg, solver),
                  ConfigError);
}
