#pragma once

// Vehicle kinematics and the strategy/parameter types shared by every module.
//
// Vehicles are planar point masses integrated with the explicit Euler rule
//
//   X(t+1) = X(t) + v(t) dt,        v(t+1) = v(t) + a(t) dt,
//
// where the position update uses the *pre-update* velocity, so an
// acceleration chosen at step t first moves the position at step t+2.  A
// strategy is a single acceleration held constant over a receding horizon of
// `horizon_steps` samples.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcpg {

// Configuration problems (inconsistent sizes, invalid parameter combinations).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Non-finite state propagation and similar runtime corruption.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double squared_norm(Vec2 v) { return dot(v, v); }
inline double norm(Vec2 v) { return std::sqrt(squared_norm(v)); }

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return lo <= v && v <= hi; }
  double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
  double width() const { return hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
};

struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;

  Vec2 position() const { return {x, y}; }
  Vec2 velocity() const { return {vx, vy}; }
};

struct Action {
  double ax = 0.0;
  double ay = 0.0;
};

// Constant acceleration applied over a receding horizon.
struct Strategy {
  Action action;
  int horizon_steps = 4;
};

struct ActionBounds {
  Interval ax{-3.0, 3.0};
  Interval ay{-3.0, 3.0};

  Action clamp(Action a) const { return {ax.clamp(a.ax), ay.clamp(a.ay)}; }
  bool contains(Action a) const { return ax.contains(a.ax) && ay.contains(a.ay); }
};

// Per-agent cost weights and actuation limits.
//
// `lateral_locked` restricts the agent's acceleration to its heading axis
// (intersection mode: each vehicle controls longitudinal acceleration only,
// lateral acceleration is structurally zero).  The heading axis is derived
// from the desired velocity, which must be axis-aligned and nonzero for a
// locked agent.
struct AgentParams {
  double theta = 1.0;               // aggressiveness: weight on the self cost
  Vec2 q_weights{1.0, 1.0};         // per-axis position tracking weights
  Vec2 r_weights{1.0, 1.0};         // per-axis velocity tracking weights
  std::optional<Vec2> desired_position;  // absent: position terms contribute 0
  Vec2 desired_velocity{0.0, 0.0};
  ActionBounds action_bounds;
  bool lateral_locked = false;

  // Heading axis of a locked agent: 0 = x, 1 = y.
  int locked_axis() const {
    const bool has_x = desired_velocity.x != 0.0;
    const bool has_y = desired_velocity.y != 0.0;
    if (has_x == has_y) {
      throw ConfigError(
          "lateral_locked requires an axis-aligned, nonzero desired velocity");
    }
    return has_x ? 0 : 1;
  }
};

struct JointStrategy {
  std::vector<Strategy> strategies;

  std::size_t size() const { return strategies.size(); }
  Strategy& operator[](std::size_t i) { return strategies[i]; }
  const Strategy& operator[](std::size_t i) const { return strategies[i]; }
};

// Everything a per-step computation needs about the world right now.
struct Stage {
  std::vector<VehicleState> states;
  double dt = 0.5;
  int horizon_steps = 4;
};

using Trajectory = std::vector<VehicleState>;

// One Euler step.  Throws NumericError if any input is non-finite (a
// corrupted state would otherwise propagate silently).
VehicleState step_dynamics(const VehicleState& state, const Action& action, double dt);

// Rollout of a constant-action strategy: returns horizon_steps + 1 states,
// the initial state included.
Trajectory rollout_single(const VehicleState& initial, const Strategy& strategy, double dt);

// Rollout of an explicit per-step action sequence (length K): K + 1 states.
Trajectory rollout_actions(const VehicleState& initial, const std::vector<Action>& actions,
                           double dt);

// Joint rollout: one trajectory per agent, each of length horizon_steps + 1.
std::vector<Trajectory> rollout(const std::vector<VehicleState>& initial,
                                const JointStrategy& joint, double dt);

}  // namespace pcpg
