#include "pcpg/costs.hpp"

namespace pcpg {

namespace {

// Sum over tau = t .. t+T-1, i.e. the first T entries of a T+1-state rollout.
double self_cost_along(const AgentParams& p, const Trajectory& traj, int horizon_steps) {
  double total = 0.0;
  for (int k = 0; k < horizon_steps; ++k) {
    const VehicleState& s = traj[static_cast<std::size_t>(k)];
    if (p.desired_position) {
      const double dx = s.x - p.desired_position->x;
      const double dy = s.y - p.desired_position->y;
      total += p.q_weights.x * dx * dx + p.q_weights.y * dy * dy;
    }
    const double dvx = s.vx - p.desired_velocity.x;
    const double dvy = s.vy - p.desired_velocity.y;
    total += p.r_weights.x * dvx * dvx + p.r_weights.y * dvy * dvy;
  }
  return total;
}

double pair_cost_along(const Trajectory& ti, const Trajectory& tj, int horizon_steps,
                       const CostConfig& cfg) {
  const double dd2 = cfg.d_desired * cfg.d_desired;
  double total = 0.0;
  for (int k = 0; k < horizon_steps; ++k) {
    const VehicleState& a = ti[static_cast<std::size_t>(k)];
    const VehicleState& b = tj[static_cast<std::size_t>(k)];
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    total += dd2 / (dx * dx + dy * dy + cfg.delta);
  }
  return total;
}

}  // namespace

double self_cost(const AgentParams& params, const Strategy& strategy,
                 const VehicleState& initial, double dt) {
  return self_cost_along(params, rollout_single(initial, strategy, dt), strategy.horizon_steps);
}

double pair_cost(const Strategy& strategy_i, const Strategy& strategy_j,
                 const VehicleState& initial_i, const VehicleState& initial_j,
                 const CostConfig& cfg, double dt) {
  if (strategy_i.horizon_steps != strategy_j.horizon_steps) {
    throw ConfigError("pair_cost: mismatched horizons");
  }
  return pair_cost_along(rollout_single(initial_i, strategy_i, dt),
                         rollout_single(initial_j, strategy_j, dt), strategy_i.horizon_steps,
                         cfg);
}

double agent_cost(std::size_t agent_index, const JointStrategy& joint, const Stage& stage,
                  const std::vector<AgentParams>& params, const CostConfig& cfg) {
  const std::size_t n = stage.states.size();
  if (joint.size() != n || params.size() != n) {
    throw ConfigError("agent_cost: states, joint strategy, and params sizes differ");
  }
  if (agent_index >= n) {
    throw ConfigError("agent_cost: agent index out of range");
  }
  const int T = joint[agent_index].horizon_steps;
  const Trajectory self_traj = rollout_single(stage.states[agent_index], joint[agent_index],
                                              stage.dt);
  double total = cfg.alpha * params[agent_index].theta *
                 self_cost_along(params[agent_index], self_traj, T);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == agent_index) continue;
    const Trajectory other = rollout_single(stage.states[j], joint[j], stage.dt);
    total += cfg.beta * pair_cost_along(self_traj, other, T, cfg);
  }
  return total;
}

double potential_value(const JointStrategy& joint, const Stage& stage,
                       const std::vector<AgentParams>& params, const CostConfig& cfg) {
  const std::size_t n = stage.states.size();
  if (joint.size() != n || params.size() != n) {
    throw ConfigError("potential_value: states, joint strategy, and params sizes differ");
  }
  const std::vector<Trajectory> trajs = rollout(stage.states, joint, stage.dt);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    total += cfg.alpha * params[j].theta *
             self_cost_along(params[j], trajs[j], joint[j].horizon_steps);
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = j + 1; k < n; ++k) {
      total += cfg.beta * pair_cost_along(trajs[j], trajs[k], joint[j].horizon_steps, cfg);
    }
  }
  return total;
}

}  // namespace pcpg
