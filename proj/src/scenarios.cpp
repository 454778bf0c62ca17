#include "pcpg/scenarios.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pcpg/rng.hpp"

namespace pcpg {

namespace {

using nlohmann::json;

// Oncoming family geometry: both vehicles want the shared lane center x = 0
// and start 50 m apart longitudinally.
constexpr double kOncomingSeparation = 50.0;
constexpr double kOncomingSpeed = 5.0;
// Tracking weights calibrated so that gentle early swerves are cheaper than
// the coupling cost of a close pass: lateral velocity is cheap, lane-center
// pull is weak, and longitudinal speed keeping stays firm.
constexpr Vec2 kOncomingQWeights{0.4, 0.0};
constexpr Vec2 kOncomingRWeights{0.02, 0.5};
constexpr double kOncomingPairWeight = 10.0;

// Intersection family geometry.  The ego crosses a wide east-west arterial
// northbound at x = +2.5; the four surrounding vehicles travel east or west
// in parallel lanes spaced 10 m apart, so they can never collide among
// themselves (every recorded collision involves the ego) and the ego can
// always wait safely between two adjacent lanes.  The arm distances are
// calibrated against the ego's unimpeded lane arrival times (4, 6, 8, 10 s):
// at the assumed 5 m/s a crossing vehicle arrives 1.2-1.8 s after the ego has
// cleared its lane, while sampled desired speeds in the 6-8 m/s band arrive
// exactly when the ego does.  A deceived ego therefore believes each window
// is open and keeps driving; the true arrival closes the window unless the
// controller reacts to the observed acceleration mismatch.
constexpr double kEgoLaneX = 2.5;
constexpr double kEgoStartY = -20.0;
constexpr double kIntersectionSpeed = 5.0;
constexpr double kIntersectionPairWeight = 25.0;
// Ego longitudinal-speed weight: cheap enough that yielding (a full stop
// costs 25 * 0.1 = 2.5 per step) undercuts even a 6 m pass (25 * 64 / 36 ≈ 44
// per step), so the standoff distance the solve settles at stays well above
// the 4 m collision radius.
constexpr double kIntersectionEgoSpeedWeight = 0.1;
struct ArmSpec {
  double lane_y;
  double direction;  // +1 eastbound, -1 westbound
  double arm_distance;
};
constexpr ArmSpec kArms[4] = {
    {0.0, +1.0, 26.0},    // vehicle 2: eastbound, first lane the ego crosses
    {+10.0, -1.0, 37.0},  // vehicle 3: westbound
    {+20.0, +1.0, 48.0},  // vehicle 4: eastbound
    {+30.0, -1.0, 59.0},  // vehicle 5: westbound, last lane the ego crosses
};

json vec2_to_json(const Vec2& v) { return json::array({v.x, v.y}); }

Vec2 vec2_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("scenario: expected [x, y] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

json params_to_json(const AgentParams& p) {
  json j;
  j["theta"] = p.theta;
  j["q_weights"] = vec2_to_json(p.q_weights);
  j["r_weights"] = vec2_to_json(p.r_weights);
  j["desired_position"] = p.desired_position ? vec2_to_json(*p.desired_position) : json();
  j["desired_velocity"] = vec2_to_json(p.desired_velocity);
  j["action_bounds"] = {{"ax", json::array({p.action_bounds.ax.lo, p.action_bounds.ax.hi})},
                        {"ay", json::array({p.action_bounds.ay.lo, p.action_bounds.ay.hi})}};
  j["lateral_locked"] = p.lateral_locked;
  return j;
}

AgentParams params_from_json(const json& j) {
  AgentParams p;
  p.theta = j.at("theta").get<double>();
  p.q_weights = vec2_from_json(j.at("q_weights"));
  p.r_weights = vec2_from_json(j.at("r_weights"));
  if (!j.at("desired_position").is_null()) {
    p.desired_position = vec2_from_json(j.at("desired_position"));
  }
  p.desired_velocity = vec2_from_json(j.at("desired_velocity"));
  const json& b = j.at("action_bounds");
  p.action_bounds.ax = {b.at("ax")[0].get<double>(), b.at("ax")[1].get<double>()};
  p.action_bounds.ay = {b.at("ay")[0].get<double>(), b.at("ay")[1].get<double>()};
  p.lateral_locked = j.at("lateral_locked").get<bool>();
  return p;
}

json state_to_json(const VehicleState& s) {
  return json{{"x", s.x}, {"y", s.y}, {"vx", s.vx}, {"vy", s.vy}};
}

VehicleState state_from_json(const json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("vx").get<double>(),
          j.at("vy").get<double>()};
}

}  // namespace

void validate_scenario(const Scenario& s) {
  const std::size_t n = s.initial_states.size();
  if (n < 1) throw ConfigError("scenario: no agents");
  if (s.true_params.size() != n || s.assumed_params.size() != n) {
    throw ConfigError("scenario: parameter list sizes differ from agent count");
  }
  if (s.ego_index >= n) throw ConfigError("scenario: ego index out of range");
  if (s.duration_steps < 1 || s.horizon_steps < 1 || !(s.dt > 0.0)) {
    throw ConfigError("scenario: duration, horizon, and dt must be positive");
  }
  const AgentParams& at = s.true_params[s.ego_index];
  const AgentParams& aa = s.assumed_params[s.ego_index];
  const bool ego_match =
      at.theta == aa.theta && at.q_weights.x == aa.q_weights.x &&
      at.q_weights.y == aa.q_weights.y && at.r_weights.x == aa.r_weights.x &&
      at.r_weights.y == aa.r_weights.y &&
      at.desired_position.has_value() == aa.desired_position.has_value() &&
      (!at.desired_position || (at.desired_position->x == aa.desired_position->x &&
                                at.desired_position->y == aa.desired_position->y)) &&
      at.desired_velocity.x == aa.desired_velocity.x &&
      at.desired_velocity.y == aa.desired_velocity.y &&
      at.lateral_locked == aa.lateral_locked;
  if (!ego_match) {
    throw ConfigError("scenario: the ego's assumed parameters must equal its true parameters");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = norm(s.initial_states[i].position() - s.initial_states[j].position());
      if (d < s.safety_spec.d_safe) {
        throw ConfigError("scenario: initial states closer than d_safe");
      }
    }
  }
}

Scenario build_oncoming(double lateral_offset, double theta2, std::uint64_t seed) {
  Scenario s;
  s.name = "oncoming";
  s.seed = seed;
  s.duration_steps = 30;

  VehicleState ego;
  ego.x = -0.5 * lateral_offset;
  ego.y = 0.0;
  ego.vy = kOncomingSpeed;
  VehicleState other;
  other.x = 0.5 * lateral_offset;
  other.y = kOncomingSeparation;
  other.vy = -kOncomingSpeed;
  s.initial_states = {ego, other};

  s.cost_cfg.beta = kOncomingPairWeight;

  AgentParams ego_params;
  ego_params.theta = 1.0;
  ego_params.q_weights = kOncomingQWeights;  // track own lane center in x only
  ego_params.r_weights = kOncomingRWeights;
  ego_params.desired_position = Vec2{0.0, 0.0};
  ego_params.desired_velocity = {0.0, kOncomingSpeed};

  AgentParams other_params = ego_params;
  other_params.desired_velocity = {0.0, -kOncomingSpeed};
  other_params.theta = theta2;

  AgentParams other_assumed = other_params;
  other_assumed.theta = 1.0;

  s.true_params = {ego_params, other_params};
  s.assumed_params = {ego_params, other_assumed};
  validate_scenario(s);
  return s;
}

Scenario build_intersection(const std::vector<double>& thetas,
                            const std::vector<double>& desired_speeds, std::uint64_t seed) {
  if (thetas.size() != 4 || desired_speeds.size() != 4) {
    throw ConfigError("build_intersection: expected four thetas and four desired speeds");
  }
  Scenario s;
  s.name = "intersection";
  s.seed = seed;
  s.duration_steps = 30;
  s.cost_cfg.beta = kIntersectionPairWeight;

  VehicleState ego;
  ego.x = kEgoLaneX;
  ego.y = kEgoStartY;
  ego.vy = kIntersectionSpeed;
  s.initial_states.push_back(ego);

  AgentParams ego_params;
  ego_params.theta = 1.0;
  ego_params.r_weights = {1.0, kIntersectionEgoSpeedWeight};
  ego_params.desired_velocity = {0.0, kIntersectionSpeed};
  ego_params.lateral_locked = true;
  s.true_params.push_back(ego_params);
  s.assumed_params.push_back(ego_params);

  for (int k = 0; k < 4; ++k) {
    const ArmSpec& arm = kArms[k];
    VehicleState v;
    v.x = kEgoLaneX - arm.direction * arm.arm_distance;
    v.y = arm.lane_y;
    v.vx = arm.direction * kIntersectionSpeed;
    s.initial_states.push_back(v);

    AgentParams true_p;
    true_p.theta = thetas[static_cast<std::size_t>(k)];
    true_p.desired_velocity = {arm.direction * desired_speeds[static_cast<std::size_t>(k)],
                               0.0};
    true_p.lateral_locked = true;
    s.true_params.push_back(true_p);

    AgentParams assumed_p = true_p;
    assumed_p.theta = 1.0;
    assumed_p.desired_velocity = {arm.direction * kIntersectionSpeed, 0.0};
    s.assumed_params.push_back(assumed_p);
  }
  validate_scenario(s);
  return s;
}

Scenario sample_oncoming(std::uint64_t seed) {
  SplitMix64 rng(seed);
  const double offset = rng.uniform(0.2, 2.0);
  const double theta2 = rng.uniform(1.0, 10.0);
  return build_oncoming(offset, theta2, seed);
}

Scenario sample_intersection(std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> thetas(4, 0.0);
  std::vector<double> speeds(4, 0.0);
  for (int k = 0; k < 4; ++k) {
    thetas[static_cast<std::size_t>(k)] = rng.uniform(1.0, 100.0);
    speeds[static_cast<std::size_t>(k)] = rng.uniform(5.0, 15.0);
  }
  return build_intersection(thetas, speeds, seed);
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["ego_index"] = s.ego_index;
  j["duration_steps"] = s.duration_steps;
  j["dt"] = s.dt;
  j["horizon_steps"] = s.horizon_steps;
  j["seed"] = s.seed;
  j["cost"] = {{"d_desired", s.cost_cfg.d_desired},
               {"delta", s.cost_cfg.delta},
               {"alpha", s.cost_cfg.alpha},
               {"beta", s.cost_cfg.beta}};
  j["safety"] = {{"d_safe", s.safety_spec.d_safe},
                 {"k1", s.safety_spec.bound_params.k1},
                 {"k2", s.safety_spec.bound_params.k2}};
  j["agents"] = json::array();
  for (std::size_t i = 0; i < s.num_agents(); ++i) {
    json agent;
    agent["initial_state"] = state_to_json(s.initial_states[i]);
    agent["true_params"] = params_to_json(s.true_params[i]);
    agent["assumed_params"] = params_to_json(s.assumed_params[i]);
    j["agents"].push_back(agent);
  }
  return j.dump(2) + "\n";
}

Scenario scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario: JSON parse error: ") + e.what());
  }
  try {
    Scenario s;
    s.name = j.at("name").get<std::string>();
    s.ego_index = j.at("ego_index").get<std::size_t>();
    s.duration_steps = j.at("duration_steps").get<int>();
    s.dt = j.at("dt").get<double>();
    s.horizon_steps = j.at("horizon_steps").get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    const json& cost = j.at("cost");
    s.cost_cfg.d_desired = cost.at("d_desired").get<double>();
    s.cost_cfg.delta = cost.at("delta").get<double>();
    s.cost_cfg.alpha = cost.at("alpha").get<double>();
    s.cost_cfg.beta = cost.at("beta").get<double>();
    const json& safety = j.at("safety");
    s.safety_spec.d_safe = safety.at("d_safe").get<double>();
    s.safety_spec.bound_params.k1 = safety.at("k1").get<double>();
    s.safety_spec.bound_params.k2 = safety.at("k2").get<double>();
    for (const json& agent : j.at("agents")) {
      s.initial_states.push_back(state_from_json(agent.at("initial_state")));
      s.true_params.push_back(params_from_json(agent.at("true_params")));
      s.assumed_params.push_back(params_from_json(agent.at("assumed_params")));
    }
    validate_scenario(s);
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: malformed document: ") + e.what());
  }
}

void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("save_scenario: cannot open " + path);
  out << scenario_to_json(s);
  if (!out) throw ConfigError("save_scenario: write failed for " + path);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_scenario: cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return scenario_from_json(buffer.str());
}

}  // namespace pcpg
