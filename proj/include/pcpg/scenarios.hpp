#pragma once

// Scenario definitions: initial conditions, true and assumed cost parameters,
// and the two study families.
//
//  * Oncoming: two vehicles approach head-on on a narrow road, 50 m apart
//    longitudinally with a configurable lateral offset between their initial
//    positions.  Both want the shared lane center (x = 0) and +-5 m/s; the
//    ego assumes the other vehicle has aggressiveness 1, while its true
//    aggressiveness is free.
//
//  * Intersection: five vehicles on straight axis-aligned paths (laterally
//    locked, longitudinal control only).  The ego heads north across a wide
//    east-west arterial; four vehicles approach on its parallel lanes, one
//    lane per arm.  The ego assumes everyone tracks 5 m/s with
//    aggressiveness 1; true aggressiveness and desired speeds are free per
//    vehicle.
//
// Scenarios serialize losslessly to structured JSON text (schema in the
// repository README); a sampled scenario is a pure function of its seed.

#include <cstdint>
#include <string>
#include <vector>

#include "pcpg/core.hpp"
#include "pcpg/costs.hpp"
#include "pcpg/safety.hpp"

namespace pcpg {

struct Scenario {
  std::string name;
  std::vector<VehicleState> initial_states;
  std::vector<AgentParams> true_params;
  std::vector<AgentParams> assumed_params;  // assumed[ego] == true[ego]
  std::size_t ego_index = 0;
  int duration_steps = 30;
  double dt = 0.5;
  int horizon_steps = 4;
  CostConfig cost_cfg;
  SafetySpec safety_spec;
  std::uint64_t seed = 0;

  std::size_t num_agents() const { return initial_states.size(); }
};

// Throws ConfigError when sizes disagree, assumed[ego] differs from
// true[ego], or any initial pair is closer than d_safe.
void validate_scenario(const Scenario& scenario);

// Head-on approach with the given initial lateral offset (m) between the two
// vehicles and true aggressiveness theta2 for the oncoming vehicle.
Scenario build_oncoming(double lateral_offset, double theta2, std::uint64_t seed);

// Five-vehicle crossing.  thetas and desired_speeds configure vehicles 2..5
// in index order; the ego is vehicle 1 (index 0).
Scenario build_intersection(const std::vector<double>& thetas,
                            const std::vector<double>& desired_speeds, std::uint64_t seed);

// Random draws: offset ~ U[0.2, 2], theta2 ~ U[1, 10].
Scenario sample_oncoming(std::uint64_t seed);

// Random draws: theta_j ~ U[1, 100], desired speed_j ~ U[5, 15] per vehicle.
Scenario sample_intersection(std::uint64_t seed);

// Lossless JSON round trip.
std::string scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const std::string& text);
void save_scenario(const Scenario& scenario, const std::string& path);
Scenario load_scenario(const std::string& path);

}  // namespace pcpg
