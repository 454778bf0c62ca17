#include "pcpg/corrector.hpp"

namespace pcpg {

std::vector<Action> compute_deviation(const std::vector<Action>& actual,
                                      const std::vector<Action>& predicted) {
  if (actual.size() != predicted.size()) {
    throw ConfigError("compute_deviation: actual and predicted sizes differ");
  }
  std::vector<Action> omega;
  omega.reserve(actual.size());
  for (std::size_t i = 0; i < actual.size(); ++i) {
    omega.push_back({actual[i].ax - predicted[i].ax, actual[i].ay - predicted[i].ay});
  }
  return omega;
}

std::vector<Strategy> corrected_prediction(const std::vector<Strategy>& pg_prediction,
                                           const DeviationState& deviation,
                                           const std::vector<AgentParams>& params) {
  if (pg_prediction.size() != params.size()) {
    throw ConfigError("corrected_prediction: prediction and params sizes differ");
  }
  if (deviation.valid && deviation.omega.size() != pg_prediction.size()) {
    throw ConfigError("corrected_prediction: deviation size mismatch");
  }
  std::vector<Strategy> corrected = pg_prediction;
  if (!deviation.valid) return corrected;
  for (std::size_t j = 0; j < corrected.size(); ++j) {
    Action shifted{corrected[j].action.ax + deviation.omega[j].ax,
                   corrected[j].action.ay + deviation.omega[j].ay};
    corrected[j].action = params[j].action_bounds.clamp(shifted);
  }
  return corrected;
}

CorrectorResult corrector_step(const Stage& stage, std::size_t ego_index,
                               const std::optional<std::vector<Action>>& prev_actions,
                               const std::optional<std::vector<Action>>& prev_prediction,
                               const AgentParams& ego_params,
                               const std::vector<AgentParams>& assumed_params,
                               const CostConfig& cfg, const SolverConfig& solver) {
  const std::size_t n = stage.states.size();
  if (ego_index >= n) throw ConfigError("corrector_step: ego index out of range");
  if (prev_actions.has_value() != prev_prediction.has_value()) {
    throw ConfigError("corrector_step: previous actions and prediction must come together");
  }

  CorrectorResult result;

  // 1. Predictor: PSNE of the assumed game.
  result.predictor = solve_potential(stage, assumed_params, cfg, solver);
  result.pg_prediction = result.predictor.joint.strategies;

  // 2. Deviation of the surrounding agents at the previous step.
  result.deviation.omega.assign(n, Action{0.0, 0.0});
  result.deviation.valid = false;
  if (prev_actions) {
    result.deviation.omega = compute_deviation(*prev_actions, *prev_prediction);
    result.deviation.omega[ego_index] = Action{0.0, 0.0};
    result.deviation.valid = true;
  }

  // 3. Shift the prediction by the deviation.
  result.corrected = corrected_prediction(result.pg_prediction, result.deviation,
                                          assumed_params);

  // 4. Ego best response against the corrected predictions with its true cost.
  std::vector<AgentParams> params_for_ego = assumed_params;
  params_for_ego[ego_index] = ego_params;
  JointStrategy corrected_joint{result.corrected};
  result.ego_strategy = best_response(ego_index, corrected_joint, stage, params_for_ego, cfg,
                                      solver);
  return result;
}

double error_bound(const ErrorBoundParams& params, int step_offset, double dt) {
  if (step_offset < 1) throw ConfigError("error_bound: step offset must be >= 1");
  if (params.k1 < 0.0 || params.k2 < 0.0) {
    throw ConfigError("error_bound: rate bounds must be nonnegative");
  }
  return (params.k1 + params.k2) * static_cast<double>(step_offset) * dt;
}

}  // namespace pcpg
