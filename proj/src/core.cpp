#include "pcpg/core.hpp"

namespace pcpg {

namespace {

bool finite(double v) { return std::isfinite(v); }

}  // namespace

VehicleState step_dynamics(const VehicleState& state, const Action& action, double dt) {
  if (!finite(state.x) || !finite(state.y) || !finite(state.vx) || !finite(state.vy) ||
      !finite(action.ax) || !finite(action.ay) || !finite(dt)) {
    throw NumericError("step_dynamics: non-finite state, action, or dt");
  }
  VehicleState next;
  next.x = state.x + state.vx * dt;  // position uses the pre-update velocity
  next.y = state.y + state.vy * dt;
  next.vx = state.vx + action.ax * dt;
  next.vy = state.vy + action.ay * dt;
  return next;
}

Trajectory rollout_single(const VehicleState& initial, const Strategy& strategy, double dt) {
  Trajectory traj;
  traj.reserve(static_cast<std::size_t>(strategy.horizon_steps) + 1);
  traj.push_back(initial);
  for (int k = 0; k < strategy.horizon_steps; ++k) {
    traj.push_back(step_dynamics(traj.back(), strategy.action, dt));
  }
  return traj;
}

Trajectory rollout_actions(const VehicleState& initial, const std::vector<Action>& actions,
                           double dt) {
  Trajectory traj;
  traj.reserve(actions.size() + 1);
  traj.push_back(initial);
  for (const Action& a : actions) {
    traj.push_back(step_dynamics(traj.back(), a, dt));
  }
  return traj;
}

std::vector<Trajectory> rollout(const std::vector<VehicleState>& initial,
                                const JointStrategy& joint, double dt) {
  if (initial.size() != joint.size()) {
    throw ConfigError("rollout: initial states and joint strategy sizes differ");
  }
  std::vector<Trajectory> trajectories;
  trajectories.reserve(initial.size());
  for (std::size_t i = 0; i < initial.size(); ++i) {
    trajectories.push_back(rollout_single(initial[i], joint[i], dt));
  }
  return trajectories;
}

}  // namespace pcpg
