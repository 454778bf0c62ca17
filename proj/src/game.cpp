#include "pcpg/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pcpg/rng.hpp"

namespace pcpg {

namespace {

// Relative scale for declaring a joint strategy an approximate PSNE.
constexpr double kPsneRelTol = 1e-3;
// Refinement brackets shrink by this factor every coordinate-descent round.
constexpr double kRefineShrink = 0.4;
constexpr double kSigmaFloor = 1e-12;

Action normalize_locked(const AgentParams& p, Action a) {
  if (!p.lateral_locked) return p.action_bounds.clamp(a);
  Action out{0.0, 0.0};
  if (p.locked_axis() == 0) {
    out.ax = p.action_bounds.ax.clamp(a.ax);
  } else {
    out.ay = p.action_bounds.ay.clamp(a.ay);
  }
  return out;
}

// One decision coordinate per free action component.
struct CoordEntry {
  std::size_t agent;
  int axis;  // 0 = x, 1 = y
  Interval box;
};

std::vector<CoordEntry> free_coords(const std::vector<AgentParams>& params) {
  std::vector<CoordEntry> out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const AgentParams& p = params[i];
    if (p.lateral_locked) {
      const int axis = p.locked_axis();
      out.push_back({i, axis, axis == 0 ? p.action_bounds.ax : p.action_bounds.ay});
    } else {
      out.push_back({i, 0, p.action_bounds.ax});
      out.push_back({i, 1, p.action_bounds.ay});
    }
  }
  return out;
}

// Flat, allocation-free cost evaluator.  Rollouts are stored row-major per
// agent and only re-rolled for agents whose action changed, which keeps the
// inner solver loops cheap.
class Evaluator {
 public:
  Evaluator(const Stage& stage, const std::vector<AgentParams>& params, const CostConfig& cfg)
      : stage_(stage), params_(params), cfg_(cfg), n_(stage.states.size()),
        T_(stage.horizon_steps) {
    if (params.size() != n_) {
      throw ConfigError("solver: states and params sizes differ");
    }
    if (n_ == 0) throw ConfigError("solver: empty stage");
    if (T_ < 1) throw ConfigError("solver: horizon must be at least one step");
    if (!(stage.dt > 0.0) || !std::isfinite(stage.dt)) {
      throw ConfigError("solver: dt must be positive and finite");
    }
    for (const VehicleState& s : stage.states) {
      if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.vx) ||
          !std::isfinite(s.vy)) {
        throw NumericError("solver: non-finite vehicle state");
      }
    }
    traj_.resize(n_ * static_cast<std::size_t>(T_ + 1));
    actions_.assign(n_, Action{});
    for (std::size_t i = 0; i < n_; ++i) reroll(i);
  }

  std::size_t agents() const { return n_; }
  int horizon() const { return T_; }
  Action action(std::size_t i) const { return actions_[i]; }

  void set_action(std::size_t i, Action a) {
    actions_[i] = a;
    reroll(i);
  }

  void set_joint(const JointStrategy& joint) {
    for (std::size_t i = 0; i < n_; ++i) set_action(i, joint[i].action);
  }

  double agent_cost_value(std::size_t i) const {
    double total = cfg_.alpha * params_[i].theta * self_term(i);
    for (std::size_t j = 0; j < n_; ++j) {
      if (j != i) total += cfg_.beta * pair_term(i, j);
    }
    return total;
  }

  double potential() const {
    double total = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      total += cfg_.alpha * params_[i].theta * self_term(i);
      for (std::size_t j = i + 1; j < n_; ++j) total += cfg_.beta * pair_term(i, j);
    }
    return total;
  }

  JointStrategy joint() const {
    JointStrategy out;
    out.strategies.reserve(n_);
    for (std::size_t i = 0; i < n_; ++i) out.strategies.push_back({actions_[i], T_});
    return out;
  }

 private:
  const VehicleState* row(std::size_t i) const {
    return &traj_[i * static_cast<std::size_t>(T_ + 1)];
  }

  void reroll(std::size_t i) {
    VehicleState* r = &traj_[i * static_cast<std::size_t>(T_ + 1)];
    r[0] = stage_.states[i];
    const Action a = actions_[i];
    for (int k = 0; k < T_; ++k) {
      const VehicleState& s = r[k];
      r[k + 1] = VehicleState{s.x + s.vx * stage_.dt, s.y + s.vy * stage_.dt,
                              s.vx + a.ax * stage_.dt, s.vy + a.ay * stage_.dt};
    }
  }

  double self_term(std::size_t i) const {
    const AgentParams& p = params_[i];
    const VehicleState* r = row(i);
    double total = 0.0;
    for (int k = 0; k < T_; ++k) {
      const VehicleState& s = r[k];
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

  double pair_term(std::size_t i, std::size_t j) const {
    const double dd2 = cfg_.d_desired * cfg_.d_desired;
    const VehicleState* a = row(i);
    const VehicleState* b = row(j);
    double total = 0.0;
    for (int k = 0; k < T_; ++k) {
      const double dx = a[k].x - b[k].x;
      const double dy = a[k].y - b[k].y;
      total += dd2 / (dx * dx + dy * dy + cfg_.delta);
    }
    return total;
  }

  const Stage& stage_;
  const std::vector<AgentParams>& params_;
  const CostConfig& cfg_;
  std::size_t n_;
  int T_;
  std::vector<VehicleState> traj_;
  std::vector<Action> actions_;
};

void validate_solver(const SolverConfig& s) {
  if (s.population < 2 || s.iterations < 1 || s.elite_fraction <= 0.0 ||
      s.elite_fraction > 1.0 || s.br_grid_resolution < 2 || s.max_br_sweeps < 1 ||
      s.refine_rounds < 0 || s.refine_points < 2 || !(s.init_stddev > 0.0)) {
    throw ConfigError("invalid SolverConfig");
  }
}

void validate_joint(const JointStrategy& joint, const Stage& stage) {
  if (joint.size() != stage.states.size()) {
    throw ConfigError("joint strategy size does not match the stage");
  }
  for (const Strategy& s : joint.strategies) {
    if (s.horizon_steps != stage.horizon_steps) {
      throw ConfigError("joint strategy horizon does not match the stage");
    }
  }
}

// Dense scan over an axis-aligned grid, resolution points per coordinate.
// Candidates are visited in row-major order and improvements are strict, so
// the lowest-index minimizer wins ties.
template <class F>
void grid_scan(F&& f, const std::vector<Interval>& boxes, int resolution,
               std::vector<double>& best_x, double& best_f) {
  const std::size_t dims = boxes.size();
  std::vector<int> idx(dims, 0);
  std::vector<double> x(dims, 0.0);
  const double denom = static_cast<double>(resolution - 1);
  while (true) {
    for (std::size_t d = 0; d < dims; ++d) {
      x[d] = boxes[d].lo + boxes[d].width() * (static_cast<double>(idx[d]) / denom);
    }
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
    std::size_t d = dims;
    while (d > 0) {
      --d;
      if (++idx[d] < resolution) break;
      idx[d] = 0;
      if (d == 0) return;
    }
  }
}

// Shrinking coordinate descent around x.  Each round probes `points` evenly
// spaced candidates per coordinate inside the current bracket (clamped to the
// box) and keeps strict improvements, then shrinks every bracket.
template <class F>
double coordinate_refine(F&& f, std::vector<double>& x, const std::vector<Interval>& boxes,
                         std::vector<double> half_width, int rounds, int points,
                         double current) {
  const std::size_t dims = boxes.size();
  for (int r = 0; r < rounds; ++r) {
    for (std::size_t d = 0; d < dims; ++d) {
      const double center = x[d];
      double best_c = center;
      for (int p = 0; p < points; ++p) {
        const double frac = static_cast<double>(p) / static_cast<double>(points - 1);
        const double cand = boxes[d].clamp(center - half_width[d] + 2.0 * half_width[d] * frac);
        x[d] = cand;
        const double v = f(x);
        if (v < current) {
          current = v;
          best_c = cand;
        }
      }
      x[d] = best_c;
    }
    for (std::size_t d = 0; d < dims; ++d) half_width[d] *= kRefineShrink;
  }
  return current;
}

}  // namespace

Strategy best_response(std::size_t agent_index, const JointStrategy& joint, const Stage& stage,
                       const std::vector<AgentParams>& params, const CostConfig& cfg,
                       const SolverConfig& solver) {
  validate_solver(solver);
  validate_joint(joint, stage);
  if (agent_index >= stage.states.size()) {
    throw ConfigError("best_response: agent index out of range");
  }
  Evaluator ev(stage, params, cfg);
  for (std::size_t j = 0; j < params.size(); ++j) {
    ev.set_action(j, normalize_locked(params[j], joint[j].action));
  }

  std::vector<AgentParams> self_only{params[agent_index]};
  std::vector<CoordEntry> coords = free_coords(self_only);
  std::vector<Interval> boxes;
  for (const CoordEntry& c : coords) boxes.push_back(c.box);

  const auto apply = [&](const std::vector<double>& x) {
    Action a{0.0, 0.0};
    for (std::size_t d = 0; d < coords.size(); ++d) {
      (coords[d].axis == 0 ? a.ax : a.ay) = x[d];
    }
    ev.set_action(agent_index, a);
    return ev.agent_cost_value(agent_index);
  };

  std::vector<double> best_x(boxes.size(), 0.0);
  double best_f = std::numeric_limits<double>::infinity();
  grid_scan(apply, boxes, solver.br_grid_resolution, best_x, best_f);

  std::vector<double> half_width;
  for (const Interval& b : boxes) {
    half_width.push_back(b.width() / static_cast<double>(solver.br_grid_resolution - 1));
  }
  best_f = coordinate_refine(apply, best_x, boxes, half_width, solver.refine_rounds,
                             solver.refine_points, best_f);

  Action a{0.0, 0.0};
  for (std::size_t d = 0; d < coords.size(); ++d) {
    (coords[d].axis == 0 ? a.ax : a.ay) = best_x[d];
  }
  return Strategy{a, stage.horizon_steps};
}

NashResult solve_br_dynamics(const Stage& stage, const std::vector<AgentParams>& params,
                             const CostConfig& cfg, const SolverConfig& solver) {
  validate_solver(solver);
  JointStrategy joint;
  joint.strategies.reserve(params.size());
  for (const AgentParams& p : params) {
    joint.strategies.push_back({normalize_locked(p, Action{0.0, 0.0}), stage.horizon_steps});
  }

  NashResult result;
  result.converged = false;
  for (int sweep = 1; sweep <= solver.max_br_sweeps; ++sweep) {
    double max_improvement = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double before = agent_cost(i, joint, stage, params, cfg);
      const Strategy response = best_response(i, joint, stage, params, cfg, solver);
      JointStrategy candidate = joint;
      candidate[i] = response;
      const double after = agent_cost(i, candidate, stage, params, cfg);
      if (after < before) {
        joint = candidate;
        max_improvement = std::max(max_improvement, before - after);
      }
    }
    result.iterations_used = sweep;
    if (max_improvement <= solver.convergence_tol) {
      result.converged = true;
      break;
    }
  }
  result.joint = joint;
  result.potential = potential_value(joint, stage, params, cfg);
  result.psne_certificate = verify_psne(joint, stage, params, cfg, solver.br_grid_resolution);
  return result;
}

NashResult solve_potential(const Stage& stage, const std::vector<AgentParams>& params,
                           const CostConfig& cfg, const SolverConfig& solver) {
  validate_solver(solver);
  Evaluator ev(stage, params, cfg);
  const std::vector<CoordEntry> coords = free_coords(params);
  const std::size_t dims = coords.size();
  std::vector<Interval> boxes;
  for (const CoordEntry& c : coords) boxes.push_back(c.box);

  const auto apply = [&](const std::vector<double>& x) {
    for (std::size_t d = 0; d < dims; ++d) {
      Action a = ev.action(coords[d].agent);
      (coords[d].axis == 0 ? a.ax : a.ay) = x[d];
      ev.set_action(coords[d].agent, a);
    }
    return ev.potential();
  };

  // Incumbent: the center of the joint box.
  std::vector<double> best_x(dims, 0.0);
  for (std::size_t d = 0; d < dims; ++d) best_x[d] = boxes[d].center();
  for (std::size_t i = 0; i < params.size(); ++i) ev.set_action(i, Action{0.0, 0.0});
  double best_f = apply(best_x);

  std::vector<double> mean = best_x;
  std::vector<double> sigma(dims, solver.init_stddev);
  const int elite_count = std::max(
      2, static_cast<int>(std::lround(solver.elite_fraction * solver.population)));

  SplitMix64 rng(solver.seed);
  std::vector<double> sample(dims, 0.0);
  std::vector<std::vector<double>> population(
      static_cast<std::size_t>(solver.population));
  std::vector<double> values(static_cast<std::size_t>(solver.population), 0.0);
  std::vector<int> order(static_cast<std::size_t>(solver.population), 0);

  for (int iter = 0; iter < solver.iterations; ++iter) {
    for (int p = 0; p < solver.population; ++p) {
      for (std::size_t d = 0; d < dims; ++d) {
        sample[d] = boxes[d].clamp(rng.normal(mean[d], sigma[d]));
      }
      population[static_cast<std::size_t>(p)] = sample;
      const double v = apply(sample);
      values[static_cast<std::size_t>(p)] = v;
      if (v < best_f) {
        best_f = v;
        best_x = sample;
      }
    }
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double va = values[static_cast<std::size_t>(a)];
      const double vb = values[static_cast<std::size_t>(b)];
      return va != vb ? va < vb : a < b;
    });
    for (std::size_t d = 0; d < dims; ++d) {
      double m = 0.0;
      for (int e = 0; e < elite_count; ++e) {
        m += population[static_cast<std::size_t>(order[static_cast<std::size_t>(e)])][d];
      }
      m /= elite_count;
      double var = 0.0;
      for (int e = 0; e < elite_count; ++e) {
        const double dev =
            population[static_cast<std::size_t>(order[static_cast<std::size_t>(e)])][d] - m;
        var += dev * dev;
      }
      var /= elite_count;
      mean[d] = m;
      sigma[d] = std::max(std::sqrt(var), kSigmaFloor);
    }
  }

  std::vector<double> half_width;
  for (const Interval& b : boxes) half_width.push_back(b.width() / 8.0);
  best_f = coordinate_refine(apply, best_x, boxes, half_width, solver.refine_rounds,
                             solver.refine_points, best_f);
  apply(best_x);

  NashResult result;
  result.joint = ev.joint();
  result.potential = best_f;
  result.iterations_used = solver.iterations;
  result.psne_certificate =
      verify_psne(result.joint, stage, params, cfg, solver.br_grid_resolution);
  double max_cost = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    max_cost = std::max(max_cost, std::abs(ev.agent_cost_value(i)));
  }
  result.converged = result.psne_certificate <= kPsneRelTol * (1.0 + max_cost);
  return result;
}

double verify_psne(const JointStrategy& joint, const Stage& stage,
                   const std::vector<AgentParams>& params, const CostConfig& cfg,
                   int grid_resolution) {
  if (grid_resolution < 2) throw ConfigError("verify_psne: grid resolution must be >= 2");
  validate_joint(joint, stage);
  Evaluator ev(stage, params, cfg);
  ev.set_joint(joint);

  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Action original = ev.action(i);
    const double current = ev.agent_cost_value(i);

    std::vector<AgentParams> self_only{params[i]};
    std::vector<CoordEntry> coords = free_coords(self_only);
    std::vector<Interval> boxes;
    for (const CoordEntry& c : coords) boxes.push_back(c.box);

    const auto apply = [&](const std::vector<double>& x) {
      Action a{0.0, 0.0};
      for (std::size_t d = 0; d < coords.size(); ++d) {
        (coords[d].axis == 0 ? a.ax : a.ay) = x[d];
      }
      ev.set_action(i, a);
      return ev.agent_cost_value(i);
    };

    std::vector<double> best_x(boxes.size(), 0.0);
    double best_dev = current;  // the unchanged strategy is always a candidate
    grid_scan(apply, boxes, grid_resolution, best_x, best_dev);
    worst = std::max(worst, current - best_dev);

    ev.set_action(i, original);
  }
  return worst;
}

}  // namespace pcpg
