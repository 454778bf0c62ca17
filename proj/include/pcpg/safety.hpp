#pragma once

// Reachable-set over-approximation and safety certification.
//
// Surrounding agents are predicted to apply their corrected strategies, but
// may deviate; the deviation `step_offset` steps into the horizon lies in a
// ball of radius error_bound(step_offset).  The ball is over-approximated by
// a per-axis interval, added to the corrected action, and intersected with
// the agent's physical action bounds.  Propagating the resulting action
// intervals through the Euler dynamics yields nested axis-aligned position
// boxes: every realizable trajectory is contained in them by construction.
//
// An ego strategy is certified safe when the ego's own rollout keeps at least
// d_safe clearance (closed inequality: tangency is safe) from every box at
// every horizon step.  Certification is conservative: a `true` verdict is
// sound, a `false` verdict may be a false alarm.

#include <cstddef>
#include <optional>
#include <vector>

#include "pcpg/core.hpp"
#include "pcpg/corrector.hpp"

namespace pcpg {

struct SafetySpec {
  double d_safe = 4.0;  // minimum center-to-center distance (m)
  ErrorBoundParams bound_params;
};

struct Box2 {
  Interval x;
  Interval y;
};

// Position boxes per surrounding agent for horizon steps t+1 .. t+T:
// boxes[j][k] covers agent j at step t+k+1.
using ReachBoxes = std::vector<std::vector<Box2>>;

// Distance from a point to an axis-aligned box (zero inside).
double point_box_distance(Vec2 p, const Box2& box);

// Interval propagation of corrected strategies with growing action intervals.
// `states`, `corrected`, and `params` describe the surrounding agents only.
// A locked agent's lateral action interval stays exactly zero.
ReachBoxes reachable_boxes(const std::vector<VehicleState>& states,
                           const std::vector<Strategy>& corrected,
                           const std::vector<AgentParams>& params, const SafetySpec& spec,
                           double dt, int horizon_steps);

// True when the ego rollout keeps >= d_safe clearance from every box at every
// horizon step.
bool is_safe_strategy(const Strategy& ego_strategy, const VehicleState& ego_state,
                      const ReachBoxes& boxes, const SafetySpec& spec, double dt);

struct SafeProbeResult {
  bool nonempty = false;
  std::optional<Strategy> witness;  // first safe grid strategy in index order
};

// Grid-samples the ego action box (grid_resolution points per free axis) and
// reports whether any sampled strategy is certified safe.
SafeProbeResult safe_set_probe(const VehicleState& ego_state, const ReachBoxes& boxes,
                               const AgentParams& ego_params, const SafetySpec& spec, double dt,
                               int horizon_steps, int grid_resolution);

struct CollisionRecord {
  int step = 0;  // state index: time = step * dt
  std::size_t agent_a = 0;
  std::size_t agent_b = 0;
};

// Earliest step at which any pair's center distance drops strictly below
// d_safe; ties resolve to the lowest agent pair.  Trajectories are indexed
// [agent][step] and must share a common length.
std::optional<CollisionRecord> detect_collision(const std::vector<Trajectory>& trajectories,
                                                const SafetySpec& spec);

// Scans the same grid as safe_set_probe and returns the certified-safe
// strategy of lowest cost (ties to the lowest grid index), or nullopt when
// the grid contains no safe strategy.  `cost` maps a Strategy to its value.
template <class CostFn>
std::optional<Strategy> lowest_cost_safe_strategy(const VehicleState& ego_state,
                                                  const ReachBoxes& boxes,
                                                  const AgentParams& ego_params,
                                                  const SafetySpec& spec, double dt,
                                                  int horizon_steps, int grid_resolution,
                                                  CostFn&& cost) {
  if (grid_resolution < 2) {
    throw ConfigError("lowest_cost_safe_strategy: grid resolution must be >= 2");
  }
  std::optional<Strategy> best;
  double best_cost = 0.0;
  const auto consider = [&](Action a) {
    const Strategy s{a, horizon_steps};
    if (!is_safe_strategy(s, ego_state, boxes, spec, dt)) return;
    const double c = cost(s);
    if (!best || c < best_cost) {
      best = s;
      best_cost = c;
    }
  };
  const double denom = static_cast<double>(grid_resolution - 1);
  if (ego_params.lateral_locked) {
    const int axis = ego_params.locked_axis();
    const Interval box =
        axis == 0 ? ego_params.action_bounds.ax : ego_params.action_bounds.ay;
    for (int i = 0; i < grid_resolution; ++i) {
      const double u = box.lo + box.width() * (static_cast<double>(i) / denom);
      consider(axis == 0 ? Action{u, 0.0} : Action{0.0, u});
    }
  } else {
    const Interval bx = ego_params.action_bounds.ax;
    const Interval by = ego_params.action_bounds.ay;
    for (int i = 0; i < grid_resolution; ++i) {
      const double ax = bx.lo + bx.width() * (static_cast<double>(i) / denom);
      for (int j = 0; j < grid_resolution; ++j) {
        const double ay = by.lo + by.width() * (static_cast<double>(j) / denom);
        consider(Action{ax, ay});
      }
    }
  }
  return best;
}

}  // namespace pcpg
