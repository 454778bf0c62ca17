// Solver oracles.  Velocity-only tracking over T=4, dt=0.5 has the closed
// form best response a* = (6/7) (v_desired - v) per axis (minimize
// sum_k |v + a k dt - v_d|^2 over k = 0..3: sum k = 6, sum k^2 = 14, so
// a* = (v_d - v) * 6 / (dt * 14)).  Small two-agent games are checked
// against exhaustive joint grids, and the Nash certificate against
// deliberate perturbations.

#include <doctest.h>

#include <cmath>
#include <vector>

#include "pcpg/costs.hpp"
#include "pcpg/game.hpp"
#include "pcpg/rng.hpp"
#include "pcpg/scenarios.hpp"

using namespace pcpg;

namespace {

Stage stage_of(const Scenario& s) {
  return Stage{s.initial_states, s.dt, s.horizon_steps};
}

double exhaustive_grid_minimum(const Stage& stage, const std::vector<AgentParams>& params,
                               const CostConfig& cfg, int res) {
  // Joint enumeration of res^2 actions per agent, two agents.
  const auto axis_point = [&](const Interval& iv, int i) {
    return iv.lo + iv.width() * (static_cast<double>(i) / static_cast<double>(res - 1));
  };
  double best = std::numeric_limits<double>::infinity();
  JointStrategy joint;
  joint.strategies = {Strategy{{0, 0}, stage.horizon_steps},
                      Strategy{{0, 0}, stage.horizon_steps}};
  for (int a = 0; a < res; ++a)
    for (int b = 0; b < res; ++b)
      for (int c = 0; c < res; ++c)
        for (int d = 0; d < res; ++d) {
          joint[0].action = {axis_point(params[0].action_bounds.ax, a),
                             axis_point(params[0].action_bounds.ay, b)};
          joint[1].action = {axis_point(params[1].action_bounds.ax, c),
                             axis_point(params[1].action_bounds.ay, d)};
          best = std::min(best, potential_value(joint, stage, params, cfg));
        }
  return best;
}

}  // namespace

TEST_CASE("best response matches the analytic velocity-tracking minimizer") {
  Stage stage;
  stage.dt = 0.5;
  stage.horizon_steps = 4;
  stage.states = {{0.0, 0.0, 0.6, 0.4}, {100.0, 100.0, 0.0, 0.0}};

  std::vector<AgentParams> params(2);
  params[0].desired_velocity = {2.0, -1.0};   // a* = (6/7) * (1.4, -1.4) = (1.2, -1.2)
  params[1].desired_velocity = {0.0, 0.0};

  JointStrategy joint;
  joint.strategies = {Strategy{{0, 0}, 4}, Strategy{{0, 0}, 4}};

  const CostConfig cfg;  // the second vehicle is 140+ m away: coupling ~ 3e-3
  const SolverConfig solver;
  const Strategy br = best_response(0, joint, stage, params, cfg, solver);
  CHECK(br.action.ax == doctest::Approx(1.2).epsilon(1e-3));
  CHECK(br.action.ay == doctest::Approx(-1.2).epsilon(1e-3));

  JointStrategy analytic = joint;
  analytic[0].action = {1.2, -1.2};
  CHECK(agent_cost(0, joint, stage, params, cfg) >=
        agent_cost(0, analytic, stage, params, cfg));
  // The solver's response is at least as good as the analytic interior point
  // up to the refinement resolution.
  JointStrategy solved = joint;
  solved[0] = br;
  CHECK(agent_cost(0, solved, stage, params, cfg) <=
        agent_cost(0, analytic, stage, params, cfg) + 1e-6);
}

TEST_CASE("best response lands off-grid via coordinate refinement") {
  Stage stage;
  stage.dt = 0.5;
  stage.horizon_steps = 4;
  stage.states = {{0.0, 0.0, 0.0, 0.0}, {200.0, 0.0, 0.0, 0.0}};
  std::vector<AgentParams> params(2);
  params[0].desired_velocity = {1.0, 0.0};  // a* = 6/7, not on the 21-point grid
  JointStrategy joint;
  joint.strategies = {Strategy{{0, 0}, 4}, Strategy{{0, 0}, 4}};
  const Strategy br = best_response(0, joint, stage, params, CostConfig{}, SolverConfig{});
  CHECK(br.action.ax == doctest::Approx(6.0 / 7.0).epsilon(2e-3));
  CHECK(std::abs(br.action.ay) <= 2e-3);
}

TEST_CASE("potential solve reaches the exhaustive grid minimum") {
  SplitMix64 rng(5);
  for (int instance = 0; instance < 3; ++instance) {
    const Scenario scn =
        build_oncoming(rng.uniform(0.3, 1.5), rng.uniform(1.0, 8.0), 40 + instance);
    const Stage stage = stage_of(scn);
    SolverConfig solver;
    solver.seed = 900 + instance;
    solver.br_grid_resolution = 5;
    const NashResult result =
        solve_potential(stage, scn.assumed_params, scn.cost_cfg, solver);
    const double grid_min =
        exhaustive_grid_minimum(stage, scn.assumed_params, scn.cost_cfg, 5);
    CHECK(result.potential <= grid_min + 1e-3);
    CHECK(result.converged);
    CHECK(result.psne_certificate >= 0.0);
  }
}

TEST_CASE("perturbing one agent off its best response breaks the certificate") {
  const Scenario scn = build_oncoming(0.5, 1.0, 77);
  const Stage stage = stage_of(scn);
  SolverConfig solver;
  solver.seed = 3;
  const NashResult result = solve_potential(stage, scn.assumed_params, scn.cost_cfg, solver);
  CHECK(result.psne_certificate <= 1e-3 * (1.0 + std::abs(result.potential)));

  JointStrategy perturbed = result.joint;
  perturbed[0].action.ax = perturbed[0].action.ax > 0.0 ? -3.0 : 3.0;
  const double cert = verify_psne(perturbed, stage, scn.assumed_params, scn.cost_cfg,
                                  solver.br_grid_resolution);
  CHECK(cert > 1e-2);
}

TEST_CASE("single-agent game certificate vanishes at the analytic optimum") {
  Stage stage;
  stage.dt = 0.5;
  stage.horizon_steps = 4;
  stage.states = {{0.0, 0.0, 0.0, 0.0}};
  std::vector<AgentParams> params(1);
  params[0].desired_velocity = {1.4, 0.0};  // a* = 1.2, a grid point
  JointStrategy joint;
  joint.strategies = {Strategy{{1.2, 0.0}, 4}};
  const double cert = verify_psne(joint, stage, params, CostConfig{}, 21);
  CHECK(cert <= 1e-9);
}

TEST_CASE("best-response dynamics converge and match the potential solve") {
  SplitMix64 rng(13);
  for (int instance = 0; instance < 5; ++instance) {
    const Scenario scn =
        build_oncoming(rng.uniform(0.2, 2.0), rng.uniform(1.0, 10.0), 700 + instance);
    const Stage stage = stage_of(scn);
    SolverConfig solver;
    solver.seed = 41 + instance;
    const NashResult br = solve_br_dynamics(stage, scn.assumed_params, scn.cost_cfg, solver);
    CHECK(br.converged);
    CHECK(br.iterations_used <= solver.max_br_sweeps);
    const NashResult direct = solve_potential(stage, scn.assumed_params, scn.cost_cfg, solver);
    CHECK(br.potential >= direct.potential - 1e-3);
  }
}

TEST_CASE("solvers are deterministic for a fixed seed") {
  const Scenario scn = build_oncoming(0.8, 5.0, 123);
  const Stage stage = stage_of(scn);
  SolverConfig solver;
  solver.seed = 2718;
  const NashResult a = solve_potential(stage, scn.assumed_params, scn.cost_cfg, solver);
  const NashResult b = solve_potential(stage, scn.assumed_params, scn.cost_cfg, solver);
  REQUIRE(a.joint.size() == b.joint.size());
  for (std::size_t i = 0; i < a.joint.size(); ++i) {
    CHECK(a.joint[i].action.ax == b.joint[i].action.ax);
    CHECK(a.joint[i].action.ay == b.joint[i].action.ay);
  }
  CHECK(a.potential == b.potential);
}

TEST_CASE("locked agents keep a structurally zero lateral action") {
  Stage stage;
  stage.dt = 0.5;
  stage.horizon_steps = 4;
  stage.states = {{2.5, -20.0, 0.0, 5.0}, {-20.0, 0.0, 5.0, 0.0}};
  std::vector<AgentParams> params(2);
  params[0].desired_velocity = {0.0, 5.0};
  params[0].lateral_locked = true;  // heading y: ax must stay 0
  params[1].desired_velocity = {8.0, 0.0};
  params[1].lateral_locked = true;  // heading x: ay must stay 0
  SolverConfig solver;
  solver.seed = 55;
  const NashResult result = solve_potential(stage, params, CostConfig{}, solver);
  CHECK(result.joint[0].action.ax == 0.0);
  CHECK(result.joint[1].action.ay == 0.0);

  JointStrategy joint = result.joint;
  const Strategy br = best_response(1, joint, stage, params, CostConfig{}, solver);
  CHECK(br.action.ay == 0.0);
}

TEST_CASE("solutions respect per-agent action bounds") {
  Stage stage;
  stage.dt = 0.5;
  stage.horizon_steps = 4;
  stage.states = {{0.0, 0.0, 0.0, 0.0}, {6.0, 0.0, 0.0, 0.0}};
  std::vector<AgentParams> params(2);
  params[0].desired_velocity = {10.0, 0.0};  // wants a large command
  params[0].action_bounds.ax = {-1.0, 1.0};
  params[0].action_bounds.ay = {-0.5, 0.5};
  params[1].desired_velocity = {-10.0, 0.0};
  SolverConfig solver;
  solver.seed = 8;
  const NashResult result = solve_potential(stage, params, CostConfig{}, solver);
  CHECK(params[0].action_bounds.contains(result.joint[0].action));
  CHECK(params[1].action_bounds.contains(result.joint[1].action));
  CHECK(result.joint[0].action.ax == doctest::Approx(1.0).epsilon(1e-6));
}
