#pragma once

// Predictor-corrector layer on top of the potential-game solver.
//
// The Predictor solves the assumed game each step and yields the joint PSNE
// a+(t).  Surrounding agents need not follow it: the measurable deviation at
// step t is
//
//   omega_j(t) = a*_j(t) - a+_j(t)
//
// (realized minus predicted first action).  The Corrector shifts the next
// prediction by the latest deviation,
//
//   corrected_j(t) = clamp(a+_j(t) + omega_j(t-1)),
//
// and the ego best-responds to the corrected predictions with its own true
// cost.  When the deviation is constant and strictly inside the action
// bounds, the corrected prediction matches the realized actions exactly from
// the second step onward.  The prediction error accumulated over a horizon is
// bounded by
//
//   |e(tau)| <= (k1 + k2) * (tau - t + 1) * dt,
//
// where k1 bounds the per-step rate of change of the realized actions and k2
// that of the predictions.

#include <cstddef>
#include <optional>
#include <vector>

#include "pcpg/core.hpp"
#include "pcpg/costs.hpp"
#include "pcpg/game.hpp"

namespace pcpg {

// Latest per-agent deviation between realized and predicted actions.  The
// ego's slot is always zero.  `valid` is false before the first observation
// (the deviation is then treated as zero).
struct DeviationState {
  std::vector<Action> omega;
  bool valid = false;
};

// Rate bounds (m/s^3) entering the horizon error bound.
struct ErrorBoundParams {
  double k1 = 6.0;  // realized-action rate bound
  double k2 = 6.0;  // predicted-action rate bound
};

// Elementwise difference actual - predicted.  Sizes must match.
std::vector<Action> compute_deviation(const std::vector<Action>& actual,
                                      const std::vector<Action>& predicted);

// Shifts each agent's predicted strategy by its deviation and clamps the
// result into that agent's action bounds.  Slots with zero deviation (the
// ego's own slot in particular) pass through unchanged.
std::vector<Strategy> corrected_prediction(const std::vector<Strategy>& pg_prediction,
                                           const DeviationState& deviation,
                                           const std::vector<AgentParams>& params);

struct CorrectorResult {
  Strategy ego_strategy;             // corrected best response for the ego
  std::vector<Strategy> pg_prediction;  // Predictor PSNE, all agents
  std::vector<Strategy> corrected;   // deviation-shifted prediction, all agents
  DeviationState deviation;          // omega(t-1) used this step
  NashResult predictor;              // full Predictor solve result
};

// One predictor-corrector step.
//
//  1. Solve the assumed game (Predictor) for the joint PSNE.
//  2. Form omega(t-1) from the previous realized and predicted actions of the
//     surrounding agents (zero before the first observation).
//  3. Shift the prediction by omega(t-1) and clamp to the action bounds.
//  4. Best-respond for the ego against the corrected predictions using the
//     ego's true cost parameters.
//
// `prev_actions` and `prev_prediction` hold one action per agent (the ego
// entries are ignored); pass std::nullopt on the first step.
CorrectorResult corrector_step(const Stage& stage, std::size_t ego_index,
                               const std::optional<std::vector<Action>>& prev_actions,
                               const std::optional<std::vector<Action>>& prev_prediction,
                               const AgentParams& ego_params,
                               const std::vector<AgentParams>& assumed_params,
                               const CostConfig& cfg, const SolverConfig& solver);

// Radius of the prediction-error set `step_offset` steps into the horizon
// (step_offset >= 1): (k1 + k2) * step_offset * dt.
double error_bound(const ErrorBoundParams& params, int step_offset, double dt);

}  // namespace pcpg
