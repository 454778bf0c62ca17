#pragma once

// Decoupled baseline controller: per-axis LQR tracking with pairwise control
// barrier function (CBF) constraints solved in one shared quadratic program.
//
// The ego's barrier against agent j uses the relative state X12 = X1 - Xj,
// v12 = v1 - vj and class-K gains l0, l1:
//
//   b = 2 v12'v12 + 2 l1 X12'v12 + l0 (X12'X12 - d_safe^2),   c = 2 X12',
//
// imposing b + c (a1 - aj - omega_tilde_j) >= 0.  The QP decides the ego
// action a1 together with a copy of every other agent's action; the copies
// spread the constraint burden, and the mismatch between a copy and the
// realized action feeds back next step as the robustifying term omega_tilde.
//
// With `saturate` false the returned ego action is the raw QP solution
// (unbounded actuation); with `saturate` true it is clipped to the ego's
// action bounds after solving.

#include <cstddef>
#include <vector>

#include "pcpg/core.hpp"

namespace pcpg {

struct CbfParams {
  double l0 = 13.0;
  double l1 = 16.0;
  double d_safe = 4.0;
  bool saturate = false;
};

// Geometry too degenerate for a barrier constraint (coincident positions).
struct DegenerateGeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CbfRow {
  double b = 0.0;
  Vec2 c{0.0, 0.0};
};

// Barrier row for the ego against one other agent.  Throws
// DegenerateGeometryError when the positions coincide.
CbfRow cbf_row(const VehicleState& ego, const VehicleState& other, const CbfParams& params);

// Tracking controller used as the QP reference: independent per-axis
// infinite-horizon discrete LQR of the double integrator.  Axes with a
// desired position (positive position weight) use full position-velocity
// feedback; axes without use velocity feedback only.  A locked agent's
// lateral axis returns zero.  Gains come from iterating the Riccati
// recursion to a fixed point.
Action nominal_controller(const VehicleState& state, const AgentParams& params, double dt);

struct PccaResult {
  Action ego_action;            // final ego command (saturated when requested)
  Action ego_action_raw;        // QP solution before saturation
  std::vector<Action> copies;   // QP decisions for every agent (ego slot = raw)
  bool feasible = true;         // false: constraints inconsistent, nominal fallback
};

// Shared-QP step.  Decision variables are the ego action and one copy per
// other agent; the objective is |a1 - a1_nominal|^2 + sum_j |a_j|^2 subject
// to one barrier row per (ego, j) pair robustified by omega_tilde[j] (the
// previous realized-minus-copy mismatch; pass zeros initially).  Solved
// exactly by enumerating active sets, which is cheap at these sizes.  When
// the constraints are mutually inconsistent the ego falls back to the
// clipped nominal action and `feasible` is false.
PccaResult pcca_solve(const std::vector<VehicleState>& states, std::size_t ego_index,
                      const std::vector<AgentParams>& params,
                      const std::vector<Action>& omega_tilde, const CbfParams& cbf,
                      double dt);

}  // namespace pcpg
