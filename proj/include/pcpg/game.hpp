#pragma once

// Nash-seeking solvers over constant-action strategies.
//
// Two routes to a pure-strategy Nash equilibrium (PSNE) are provided:
//
//  * solve_br_dynamics - iterated best responses in agent index order.  On an
//    exact potential game every accepted response strictly decreases the
//    potential, so the sweep terminates; it may stop in a local potential
//    minimum.
//
//  * solve_potential - direct minimization of the potential over the joint
//    action box with a seeded cross-entropy method followed by deterministic
//    coordinate refinement.  A global potential minimizer is a PSNE, and by
//    the exact-potential identity it is also the social optimum of the
//    potential.
//
// Both report a grid-based certificate from verify_psne: the largest
// unilateral cost improvement any agent could gain by deviating to a grid
// point of its action box (the unchanged strategy is always a candidate, so
// the certificate is never negative).  A certificate near zero certifies an
// approximate PSNE.
//
// Locked agents (lateral_locked) contribute one decision coordinate, free
// agents two; all solvers honor per-agent action bounds.  Every routine is
// deterministic given SolverConfig::seed.

#include <cstdint>
#include <vector>

#include "pcpg/core.hpp"
#include "pcpg/costs.hpp"

namespace pcpg {

struct SolverConfig {
  int population = 64;             // cross-entropy samples per iteration
  double elite_fraction = 0.25;    // fraction of samples refit each iteration
  int iterations = 30;             // cross-entropy iterations
  double init_stddev = 3.0;        // initial sampling stddev (m/s^2), ~half the action range
  std::uint64_t seed = 0;
  double convergence_tol = 1e-6;   // best-response sweep stopping threshold
  int max_br_sweeps = 20;
  int br_grid_resolution = 21;     // points per axis for grids and certificates
  int refine_rounds = 12;          // shrinking coordinate-descent rounds
  int refine_points = 11;          // probes per coordinate per round
};

struct NashResult {
  JointStrategy joint;
  double potential = 0.0;
  bool converged = false;
  int iterations_used = 0;
  double psne_certificate = 0.0;
};

// Minimizes agent_index's cost with every other strategy held fixed: dense
// grid over the agent's action box (br_grid_resolution points per free axis)
// followed by shrinking coordinate descent.  Ties prefer the lowest grid
// index, so the result is deterministic.
Strategy best_response(std::size_t agent_index, const JointStrategy& joint, const Stage& stage,
                       const std::vector<AgentParams>& params, const CostConfig& cfg,
                       const SolverConfig& solver);

// Iterated best responses from the all-zero joint action (clamped into the
// bounds), sweeping agents in index order until no agent improves its own
// cost by more than convergence_tol or max_br_sweeps is reached.
NashResult solve_br_dynamics(const Stage& stage, const std::vector<AgentParams>& params,
                             const CostConfig& cfg, const SolverConfig& solver);

// Minimizes the potential over the joint action box: seeded cross-entropy
// (truncated-Gaussian samples clipped to the bounds, elite refit) followed by
// shrinking coordinate descent on the incumbent.
NashResult solve_potential(const Stage& stage, const std::vector<AgentParams>& params,
                           const CostConfig& cfg, const SolverConfig& solver);

// Largest unilateral improvement any agent can find on a grid of its action
// box (the unchanged strategy included, so the result is >= 0).  A value
// within tolerance of zero certifies an approximate PSNE on that grid.
double verify_psne(const JointStrategy& joint, const Stage& stage,
                   const std::vector<AgentParams>& params, const CostConfig& cfg,
                   int grid_resolution);

}  // namespace pcpg
