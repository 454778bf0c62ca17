#include "pcpg/safety.hpp"

#include <algorithm>
#include <cmath>

namespace pcpg {

namespace {

Interval intersect(Interval a, Interval b) {
  return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

}  // namespace

double point_box_distance(Vec2 p, const Box2& box) {
  const double dx = std::max({box.x.lo - p.x, 0.0, p.x - box.x.hi});
  const double dy = std::max({box.y.lo - p.y, 0.0, p.y - box.y.hi});
  return std::hypot(dx, dy);
}

ReachBoxes reachable_boxes(const std::vector<VehicleState>& states,
                           const std::vector<Strategy>& corrected,
                           const std::vector<AgentParams>& params, const SafetySpec& spec,
                           double dt, int horizon_steps) {
  const std::size_t n = states.size();
  if (corrected.size() != n || params.size() != n) {
    throw ConfigError("reachable_boxes: states, strategies, and params sizes differ");
  }
  if (horizon_steps < 1) throw ConfigError("reachable_boxes: horizon must be >= 1");

  ReachBoxes boxes(n);
  for (std::size_t j = 0; j < n; ++j) {
    const VehicleState& s = states[j];
    Interval px{s.x, s.x}, py{s.y, s.y};
    Interval vx{s.vx, s.vx}, vy{s.vy, s.vy};
    const Action base = corrected[j].action;
    const bool locked = params[j].lateral_locked;
    const int locked_axis = locked ? params[j].locked_axis() : -1;

    boxes[j].reserve(static_cast<std::size_t>(horizon_steps));
    for (int k = 0; k < horizon_steps; ++k) {
      const double r = error_bound(spec.bound_params, k + 1, dt);
      Interval ax = intersect({base.ax - r, base.ax + r}, params[j].action_bounds.ax);
      Interval ay = intersect({base.ay - r, base.ay + r}, params[j].action_bounds.ay);
      if (locked) {
        // A locked agent cannot accelerate laterally, whatever it deviates to.
        (locked_axis == 0 ? ay : ax) = Interval{0.0, 0.0};
      }
      // Position advances on the pre-update velocity, so the first position
      // box is exact and uncertainty enters through the velocity intervals.
      px = {px.lo + vx.lo * dt, px.hi + vx.hi * dt};
      py = {py.lo + vy.lo * dt, py.hi + vy.hi * dt};
      vx = {vx.lo + ax.lo * dt, vx.hi + ax.hi * dt};
      vy = {vy.lo + ay.lo * dt, vy.hi + ay.hi * dt};
      boxes[j].push_back({px, py});
    }
  }
  return boxes;
}

bool is_safe_strategy(const Strategy& ego_strategy, const VehicleState& ego_state,
                      const ReachBoxes& boxes, const SafetySpec& spec, double dt) {
  if (boxes.empty()) return true;
  const int steps = static_cast<int>(boxes.front().size());
  VehicleState s = ego_state;
  for (int k = 0; k < steps; ++k) {
    s = step_dynamics(s, ego_strategy.action, dt);
    for (const std::vector<Box2>& agent_boxes : boxes) {
      if (static_cast<int>(agent_boxes.size()) != steps) {
        throw ConfigError("is_safe_strategy: ragged reachable boxes");
      }
      if (point_box_distance(s.position(), agent_boxes[static_cast<std::size_t>(k)]) <
          spec.d_safe) {
        return false;
      }
    }
  }
  return true;
}

SafeProbeResult safe_set_probe(const VehicleState& ego_state, const ReachBoxes& boxes,
                               const AgentParams& ego_params, const SafetySpec& spec, double dt,
                               int horizon_steps, int grid_resolution) {
  if (grid_resolution < 2) throw ConfigError("safe_set_probe: grid resolution must be >= 2");
  SafeProbeResult result;
  const auto try_action = [&](Action a) {
    if (result.nonempty) return;
    const Strategy s{a, horizon_steps};
    if (is_safe_strategy(s, ego_state, boxes, spec, dt)) {
      result.nonempty = true;
      result.witness = s;
    }
  };
  const double denom = static_cast<double>(grid_resolution - 1);
  if (ego_params.lateral_locked) {
    const int axis = ego_params.locked_axis();
    const Interval box =
        axis == 0 ? ego_params.action_bounds.ax : ego_params.action_bounds.ay;
    for (int i = 0; i < grid_resolution && !result.nonempty; ++i) {
      const double u = box.lo + box.width() * (static_cast<double>(i) / denom);
      try_action(axis == 0 ? Action{u, 0.0} : Action{0.0, u});
    }
  } else {
    const Interval bx = ego_params.action_bounds.ax;
    const Interval by = ego_params.action_bounds.ay;
    for (int i = 0; i < grid_resolution && !result.nonempty; ++i) {
      const double ax = bx.lo + bx.width() * (static_cast<double>(i) / denom);
      for (int j = 0; j < grid_resolution && !result.nonempty; ++j) {
        const double ay = by.lo + by.width() * (static_cast<double>(j) / denom);
        try_action(Action{ax, ay});
      }
    }
  }
  return result;
}

std::optional<CollisionRecord> detect_collision(const std::vector<Trajectory>& trajectories,
                                                const SafetySpec& spec) {
  if (trajectories.size() < 2) return std::nullopt;
  const std::size_t steps = trajectories.front().size();
  for (const Trajectory& t : trajectories) {
    if (t.size() != steps) throw ConfigError("detect_collision: ragged trajectories");
  }
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
      for (std::size_t j = i + 1; j < trajectories.size(); ++j) {
        const double d = norm(trajectories[i][k].position() - trajectories[j][k].position());
        if (d < spec.d_safe) {
          return CollisionRecord{static_cast<int>(k), i, j};
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace pcpg
