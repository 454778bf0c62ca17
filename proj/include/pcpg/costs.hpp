#pragma once

// Stage costs and the shared potential function.
//
// Each agent i minimizes
//
//   J_i = alpha * theta_i * J_i^self  +  beta * sum_{j != i} J_ij,
//
// where the self cost penalizes tracking error over the horizon,
//
//   J_i^self = sum_{tau = t}^{t+T-1} dX(tau)' Q dX(tau) + dv(tau)' R dv(tau),
//
// and the symmetric interaction cost penalizes proximity,
//
//   J_ij = sum_{tau = t}^{t+T-1} d_desired^2 / (|X_i(tau) - X_j(tau)|^2 + delta).
//
// Because every J_ij is shared symmetrically by both participants, the game
// is an exact potential game with potential
//
//   F = alpha * sum_j theta_j * J_j^self  +  beta * sum_{j < k} J_jk,
//
// i.e. a unilateral strategy change moves J_i and F by exactly the same
// amount.  The sums deliberately include the stage cost at the decision time
// tau = t; it is action-independent, so it never changes a minimizer, and
// keeping it makes the potential bookkeeping exact.

#include <cstddef>
#include <vector>

#include "pcpg/core.hpp"

namespace pcpg {

struct CostConfig {
  double d_desired = 8.0;  // interaction length scale (m)
  double delta = 1e-6;     // proximity singularity guard (m^2)
  double alpha = 1.0;      // weight on the self terms (multiplied by theta_i)
  double beta = 1.0;       // weight on the interaction terms
};

// Tracking cost of one agent along its own constant-action rollout.
double self_cost(const AgentParams& params, const Strategy& strategy,
                 const VehicleState& initial, double dt);

// Symmetric proximity cost of a pair of agents; pair_cost(i, j) == pair_cost(j, i).
double pair_cost(const Strategy& strategy_i, const Strategy& strategy_j,
                 const VehicleState& initial_i, const VehicleState& initial_j,
                 const CostConfig& cfg, double dt);

// Full cost of agent i under the joint strategy.
double agent_cost(std::size_t agent_index, const JointStrategy& joint, const Stage& stage,
                  const std::vector<AgentParams>& params, const CostConfig& cfg);

// Potential of the joint strategy; every interaction pair is counted once.
double potential_value(const JointStrategy& joint, const Stage& stage,
                       const std::vector<AgentParams>& params, const CostConfig& cfg);

}  // namespace pcpg
