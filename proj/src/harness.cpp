#include "pcpg/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <thread>

#include "pcpg/costs.hpp"
#include "pcpg/rng.hpp"

namespace pcpg {

namespace {

std::string fmt(double v, const char* spec = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string fmt_exact(double v) { return fmt(v, "%.17g"); }

double wrap_degrees(double a) {
  while (a <= -180.0) a += 360.0;
  while (a > 180.0) a -= 360.0;
  return a;
}

double min_pair_distance(const std::vector<VehicleState>& states) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t j = i + 1; j < states.size(); ++j) {
      best = std::min(best, norm(states[i].position() - states[j].position()));
    }
  }
  return best;
}

std::optional<CollisionRecord> first_violation(const std::vector<VehicleState>& states,
                                               int step, double d_safe) {
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t j = i + 1; j < states.size(); ++j) {
      if (norm(states[i].position() - states[j].position()) < d_safe) {
        return CollisionRecord{step, i, j};
      }
    }
  }
  return std::nullopt;
}

Action project_locked(const AgentParams& p, Action a) {
  if (!p.lateral_locked) return a;
  if (p.locked_axis() == 0) return {a.ax, 0.0};
  return {0.0, a.ay};
}

std::vector<Action> joint_actions(const JointStrategy& joint) {
  std::vector<Action> out;
  out.reserve(joint.size());
  for (const Strategy& s : joint.strategies) out.push_back(s.action);
  return out;
}

// Ego decision under the certified controller: keep the unconstrained
// corrected best response when it certifies safe; otherwise fall back to the
// cheapest certified-safe grid strategy, if one exists.
//
// The certificate window is two steps: the first reachable box is exact
// (positions one step ahead depend only on current states) and the second
// adds one worst-case action step.  A certified step therefore rules out a
// collision at the next state outright.  Longer worst-case windows inflate
// so quickly that no admissible strategy stays clear during a close pass,
// which starves the probe and forces uncertified fallbacks exactly when
// protection matters.
constexpr int kCertifySteps = 2;

Strategy certified_decision(const Scenario& scenario, const Stage& stage,
                            const CorrectorResult& corr, const SolverConfig& solver,
                            bool* probe_nonempty, bool* filtered) {
  const std::size_t ego = scenario.ego_index;
  std::vector<VehicleState> other_states;
  std::vector<Strategy> other_corrected;
  std::vector<AgentParams> other_params;
  for (std::size_t j = 0; j < scenario.num_agents(); ++j) {
    if (j == ego) continue;
    other_states.push_back(stage.states[j]);
    other_corrected.push_back(corr.corrected[j]);
    other_params.push_back(scenario.assumed_params[j]);
  }
  const ReachBoxes boxes =
      reachable_boxes(other_states, other_corrected, other_params, scenario.safety_spec,
                      stage.dt, std::min(kCertifySteps, stage.horizon_steps));

  *filtered = false;
  if (is_safe_strategy(corr.ego_strategy, stage.states[ego], boxes, scenario.safety_spec,
                       stage.dt)) {
    *probe_nonempty = true;
    return corr.ego_strategy;
  }

  std::vector<AgentParams> params_for_ego = scenario.assumed_params;
  params_for_ego[ego] = scenario.true_params[ego];
  const auto ego_cost = [&](const Strategy& candidate) {
    JointStrategy joint{corr.corrected};
    joint[ego] = candidate;
    return agent_cost(ego, joint, stage, params_for_ego, scenario.cost_cfg);
  };
  const std::optional<Strategy> safe =
      lowest_cost_safe_strategy(stage.states[ego], boxes, scenario.true_params[ego],
                                scenario.safety_spec, stage.dt, stage.horizon_steps,
                                solver.br_grid_resolution, ego_cost);
  *probe_nonempty = safe.has_value();
  if (safe) {
    *filtered = true;
    return *safe;
  }
  // Empty safe probe: minimum-loss fallback, keep the unconstrained response.
  return corr.ego_strategy;
}

}  // namespace

std::string controller_name(Controller c) {
  switch (c) {
    case Controller::pg: return "pg";
    case Controller::pcpg: return "pcpg";
    case Controller::pcpg_certified: return "pcpg-certified";
    case Controller::pcca: return "pcca";
    case Controller::pcca_saturated: return "pcca-saturated";
  }
  throw ConfigError("unknown controller");
}

Controller controller_from_name(const std::string& name) {
  if (name == "pg") return Controller::pg;
  if (name == "pcpg") return Controller::pcpg;
  if (name == "pcpg-certified") return Controller::pcpg_certified;
  if (name == "pcca") return Controller::pcca;
  if (name == "pcca-saturated" || name == "pcca-sat") return Controller::pcca_saturated;
  throw ConfigError("unknown controller name: " + name);
}

std::string family_name(ScenarioFamily f) {
  return f == ScenarioFamily::oncoming ? "oncoming" : "intersection";
}

ScenarioFamily family_from_name(const std::string& name) {
  if (name == "oncoming") return ScenarioFamily::oncoming;
  if (name == "intersection") return ScenarioFamily::intersection;
  throw ConfigError("unknown scenario family: " + name);
}

EpisodeLog run_episode(const Scenario& scenario, Controller controller,
                       const SolverConfig& solver, const CbfGains& cbf_gains) {
  validate_scenario(scenario);
  const std::size_t n = scenario.num_agents();
  const std::size_t ego = scenario.ego_index;

  EpisodeLog log;
  log.controller = controller;
  log.min_distance = n > 1 ? min_pair_distance(scenario.initial_states)
                           : std::numeric_limits<double>::infinity();

  std::vector<VehicleState> states = scenario.initial_states;
  std::optional<std::vector<Action>> prev_applied;
  std::optional<std::vector<Action>> prev_predicted;
  std::vector<Action> pcca_prev_copies(n, Action{});
  bool pcca_have_copies = false;

  CbfParams cbf;
  cbf.l0 = cbf_gains.l0;
  cbf.l1 = cbf_gains.l1;
  cbf.d_safe = scenario.safety_spec.d_safe;
  cbf.saturate = controller == Controller::pcca_saturated;

  for (int t = 0; t < scenario.duration_steps; ++t) {
    Stage stage{states, scenario.dt, scenario.horizon_steps};
    SolverConfig step_solver = solver;
    step_solver.seed = SplitMix64::derive(scenario.seed, static_cast<std::uint64_t>(t));

    StepRecord rec;
    rec.states = states;

    // Surrounding agents behave per the PSNE of their true game.
    const NashResult true_game =
        solve_potential(stage, scenario.true_params, scenario.cost_cfg, step_solver);
    rec.applied = joint_actions(true_game.joint);

    // Ego decision (the only computation that counts as controller work).
    const auto t0 = std::chrono::steady_clock::now();
    switch (controller) {
      case Controller::pg: {
        const NashResult assumed_game =
            solve_potential(stage, scenario.assumed_params, scenario.cost_cfg, step_solver);
        rec.predicted = joint_actions(assumed_game.joint);
        rec.corrected = rec.predicted;
        rec.deviation.assign(n, Action{});
        rec.applied[ego] = assumed_game.joint[ego].action;
        break;
      }
      case Controller::pcpg:
      case Controller::pcpg_certified: {
        const CorrectorResult corr = corrector_step(
            stage, ego, prev_applied, prev_predicted, scenario.true_params[ego],
            scenario.assumed_params, scenario.cost_cfg, step_solver);
        rec.predicted = joint_actions(JointStrategy{corr.pg_prediction});
        rec.corrected = joint_actions(JointStrategy{corr.corrected});
        rec.deviation = corr.deviation.omega;
        Strategy ego_strategy = corr.ego_strategy;
        if (controller == Controller::pcpg_certified) {
          ego_strategy = certified_decision(scenario, stage, corr, step_solver,
                                            &rec.probe_nonempty, &rec.safety_filtered);
        }
        rec.applied[ego] = ego_strategy.action;
        rec.corrected[ego] = ego_strategy.action;
        break;
      }
      case Controller::pcca:
      case Controller::pcca_saturated: {
        std::vector<Action> omega_tilde(n, Action{});
        if (pcca_have_copies && prev_applied) {
          for (std::size_t j = 0; j < n; ++j) {
            if (j == ego) continue;
            omega_tilde[j] = Action{(*prev_applied)[j].ax - pcca_prev_copies[j].ax,
                                    (*prev_applied)[j].ay - pcca_prev_copies[j].ay};
          }
        }
        const PccaResult qp =
            pcca_solve(states, ego, scenario.true_params, omega_tilde, cbf, scenario.dt);
        rec.qp_infeasible = !qp.feasible;
        rec.deviation = omega_tilde;
        rec.predicted = qp.copies;
        rec.predicted[ego] = nominal_controller(states[ego], scenario.true_params[ego],
                                                scenario.dt);
        rec.corrected = qp.copies;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == ego) continue;
          rec.corrected[j] = Action{qp.copies[j].ax + omega_tilde[j].ax,
                                    qp.copies[j].ay + omega_tilde[j].ay};
        }
        rec.applied[ego] = project_locked(scenario.true_params[ego], qp.ego_action);
        rec.corrected[ego] = rec.applied[ego];
        // Copies of locked agents keep only their longitudinal component.
        pcca_prev_copies = qp.copies;
        for (std::size_t j = 0; j < n; ++j) {
          pcca_prev_copies[j] = project_locked(scenario.true_params[j], pcca_prev_copies[j]);
        }
        pcca_have_copies = true;
        break;
      }
    }
    rec.ego_solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    // True realized cost of the applied joint action.
    JointStrategy applied_joint;
    for (const Action& a : rec.applied) {
      applied_joint.strategies.push_back({a, scenario.horizon_steps});
    }
    rec.agent_costs.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      rec.agent_costs[j] =
          agent_cost(j, applied_joint, stage, scenario.true_params, scenario.cost_cfg);
    }

    prev_applied = rec.applied;
    prev_predicted = rec.predicted.empty() ? prev_predicted : std::make_optional(rec.predicted);

    for (std::size_t j = 0; j < n; ++j) {
      states[j] = step_dynamics(states[j], rec.applied[j], scenario.dt);
    }
    log.steps.push_back(std::move(rec));
    if (n > 1) log.min_distance = std::min(log.min_distance, min_pair_distance(states));

    const std::optional<CollisionRecord> hit =
        n > 1 ? first_violation(states, t + 1, scenario.safety_spec.d_safe) : std::nullopt;
    if (hit) {
      log.collision = hit;
      break;
    }
  }
  log.final_states = states;
  return log;
}

EpisodeMetrics compute_metrics(const EpisodeLog& log, const Scenario& scenario) {
  EpisodeMetrics m;
  m.collided = log.collision.has_value();
  m.steps_run = static_cast<int>(log.steps.size());
  m.min_distance = log.min_distance;
  if (log.steps.empty()) return m;

  const AgentParams& ego_params = scenario.true_params[scenario.ego_index];
  // Longitudinal axis: the dominant axis of the ego's desired velocity.
  const bool long_is_y =
      std::abs(ego_params.desired_velocity.y) >= std::abs(ego_params.desired_velocity.x);
  const double v_desired =
      long_is_y ? ego_params.desired_velocity.y : ego_params.desired_velocity.x;
  const double heading_desired_deg =
      std::atan2(ego_params.desired_velocity.y, ego_params.desired_velocity.x) * 180.0 / M_PI;

  double sum_dv = 0.0, sum_abs_dv = 0.0, sum_dphi = 0.0, sum_abs_dphi = 0.0;
  double sum_solve = 0.0;
  const int steps = m.steps_run;
  for (int k = 1; k <= steps; ++k) {
    const std::vector<VehicleState>& s =
        k < steps ? log.steps[static_cast<std::size_t>(k)].states : log.final_states;
    const VehicleState& e = s[scenario.ego_index];
    const double dv = (long_is_y ? e.vy : e.vx) - v_desired;
    sum_dv += dv;
    sum_abs_dv += std::abs(dv);
    m.max_velocity_deviation = std::max(m.max_velocity_deviation, std::abs(dv));

    double dphi = 0.0;
    if (!ego_params.lateral_locked) {
      const double phi = std::atan2(e.vy, e.vx) * 180.0 / M_PI;
      dphi = wrap_degrees(phi - heading_desired_deg);
    }
    sum_dphi += dphi;
    sum_abs_dphi += std::abs(dphi);
    m.max_heading_deviation_deg = std::max(m.max_heading_deviation_deg, std::abs(dphi));
  }
  for (const StepRecord& rec : log.steps) {
    sum_solve += rec.ego_solve_seconds;
    m.max_solve_seconds = std::max(m.max_solve_seconds, rec.ego_solve_seconds);
  }
  m.ave_velocity_deviation = sum_dv / steps;
  m.ave_abs_velocity_deviation = sum_abs_dv / steps;
  m.ave_heading_deviation_deg = sum_dphi / steps;
  m.ave_abs_heading_deviation_deg = sum_abs_dphi / steps;
  m.ave_solve_seconds = sum_solve / steps;
  return m;
}

Scenario sample_family(ScenarioFamily family, std::uint64_t study_seed, int index) {
  const std::uint64_t scenario_seed =
      SplitMix64::derive(study_seed, static_cast<std::uint64_t>(index));
  return family == ScenarioFamily::oncoming ? sample_oncoming(scenario_seed)
                                            : sample_intersection(scenario_seed);
}

StudyResult run_study(ScenarioFamily family, const std::vector<Controller>& controllers, int n,
                      std::uint64_t seed, const SolverConfig& solver, int num_threads,
                      const CbfGains& cbf_gains) {
  if (n < 1) throw ConfigError("run_study: need at least one scenario");
  if (controllers.empty()) throw ConfigError("run_study: need at least one controller");

  const std::size_t nc = controllers.size();
  struct Slot {
    EpisodeMetrics metrics;
    bool failed = false;
    bool valid = false;
  };
  std::vector<std::vector<Slot>> slots(nc, std::vector<Slot>(static_cast<std::size_t>(n)));

  std::atomic<int> next{0};
  const auto worker = [&]() {
    for (;;) {
      const int k = next.fetch_add(1);
      if (k >= n) return;
      const Scenario scenario = sample_family(family, seed, k);
      for (std::size_t c = 0; c < nc; ++c) {
        Slot& slot = slots[c][static_cast<std::size_t>(k)];
        try {
          const EpisodeLog log = run_episode(scenario, controllers[c], solver, cbf_gains);
          slot.metrics = compute_metrics(log, scenario);
          slot.valid = true;
        } catch (const std::exception&) {
          slot.failed = true;
        }
      }
    }
  };

  const int threads = std::max(1, std::min(num_threads, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  StudyResult result;
  result.episode_metrics.resize(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    StudySummary s;
    s.controller = controllers[c];
    s.family = family;
    s.num_scenarios = n;
    s.seed = seed;
    int collisions = 0;
    int valid = 0;
    for (const Slot& slot : slots[c]) {
      if (slot.failed) {
        ++s.episodes_failed;
        continue;
      }
      ++valid;
      const EpisodeMetrics& m = slot.metrics;
      result.episode_metrics[c].push_back(m);
      if (m.collided) ++collisions;
      s.ave_velocity_deviation += m.ave_velocity_deviation;
      s.ave_abs_velocity_deviation += m.ave_abs_velocity_deviation;
      s.ave_heading_deviation_deg += m.ave_heading_deviation_deg;
      s.ave_abs_heading_deviation_deg += m.ave_abs_heading_deviation_deg;
      s.ave_solve_seconds += m.ave_solve_seconds;
      s.max_velocity_deviation = std::max(s.max_velocity_deviation, m.max_velocity_deviation);
      s.max_heading_deviation_deg =
          std::max(s.max_heading_deviation_deg, m.max_heading_deviation_deg);
      s.max_solve_seconds = std::max(s.max_solve_seconds, m.max_solve_seconds);
    }
    if (valid > 0) {
      s.ave_velocity_deviation /= valid;
      s.ave_abs_velocity_deviation /= valid;
      s.ave_heading_deviation_deg /= valid;
      s.ave_abs_heading_deviation_deg /= valid;
      s.ave_solve_seconds /= valid;
    }
    s.collision_rate = static_cast<double>(collisions) / static_cast<double>(n);
    result.summaries.push_back(s);
  }
  return result;
}

double estimate_k2(ScenarioFamily family, const SolverConfig& solver, int num_rollouts,
                   std::uint64_t seed) {
  if (num_rollouts < 1) throw ConfigError("estimate_k2: need at least one rollout");
  double k2 = 0.0;
  for (int r = 0; r < num_rollouts; ++r) {
    const Scenario scenario = sample_family(family, seed, r);
    const EpisodeLog log = run_episode(scenario, Controller::pcpg, solver);
    for (std::size_t t = 1; t < log.steps.size(); ++t) {
      const std::vector<Action>& cur = log.steps[t].predicted;
      const std::vector<Action>& prev = log.steps[t - 1].predicted;
      if (cur.empty() || prev.empty()) continue;
      double ss = 0.0;
      for (std::size_t j = 0; j < cur.size(); ++j) {
        if (j == scenario.ego_index) continue;
        const double dx = cur[j].ax - prev[j].ax;
        const double dy = cur[j].ay - prev[j].ay;
        ss += dx * dx + dy * dy;
      }
      k2 = std::max(k2, std::sqrt(ss) / scenario.dt);
    }
  }
  return k2;
}

void write_trajectory_csv(std::ostream& out, const EpisodeLog& log, const Scenario& scenario) {
  const std::size_t n = scenario.num_agents();
  out << "step,time";
  for (std::size_t j = 0; j < n; ++j) {
    const std::string p = "a" + std::to_string(j + 1) + "_";
    out << "," << p << "x," << p << "y," << p << "vx," << p << "vy," << p << "ax," << p << "ay,"
        << p << "pred_ax," << p << "pred_ay," << p << "corr_ax," << p << "corr_ay";
  }
  out << ",min_distance\n";

  const auto write_row = [&](int step, const std::vector<VehicleState>& states,
                             const StepRecord* rec) {
    out << step << "," << fmt(step * scenario.dt);
    for (std::size_t j = 0; j < n; ++j) {
      const VehicleState& s = states[j];
      out << "," << fmt(s.x) << "," << fmt(s.y) << "," << fmt(s.vx) << "," << fmt(s.vy);
      const Action applied = rec ? rec->applied[j] : Action{};
      const Action pred = (rec && !rec->predicted.empty()) ? rec->predicted[j] : Action{};
      const Action corr = (rec && !rec->corrected.empty()) ? rec->corrected[j] : Action{};
      out << "," << fmt(applied.ax) << "," << fmt(applied.ay) << "," << fmt(pred.ax) << ","
          << fmt(pred.ay) << "," << fmt(corr.ax) << "," << fmt(corr.ay);
    }
    out << "," << fmt(n > 1 ? min_pair_distance(states) : 0.0) << "\n";
  };

  for (std::size_t t = 0; t < log.steps.size(); ++t) {
    write_row(static_cast<int>(t), log.steps[t].states, &log.steps[t]);
  }
  write_row(static_cast<int>(log.steps.size()), log.final_states, nullptr);
}

void write_predictions_csv(std::ostream& out, const EpisodeLog& log, const Scenario& scenario) {
  out << "step,agent,tau,pred_x,pred_y,corr_x,corr_y\n";
  for (std::size_t t = 0; t < log.steps.size(); ++t) {
    const StepRecord& rec = log.steps[t];
    if (rec.predicted.empty()) continue;
    for (std::size_t j = 0; j < scenario.num_agents(); ++j) {
      const Trajectory pred = rollout_single(
          rec.states[j], Strategy{rec.predicted[j], scenario.horizon_steps}, scenario.dt);
      const Trajectory corr = rollout_single(
          rec.states[j], Strategy{rec.corrected[j], scenario.horizon_steps}, scenario.dt);
      for (std::size_t k = 0; k < pred.size(); ++k) {
        out << t << "," << (j + 1) << "," << k << "," << fmt(pred[k].x) << "," << fmt(pred[k].y)
            << "," << fmt(corr[k].x) << "," << fmt(corr[k].y) << "\n";
      }
    }
  }
}

void write_summary(std::ostream& out, ScenarioFamily family, int n, std::uint64_t seed,
                   const std::vector<StudySummary>& summaries) {
  out << "study_summary_version: 1\n";
  out << "family: " << family_name(family) << "\n";
  out << "num_scenarios: " << n << "\n";
  out << "seed: " << seed << "\n";
  for (const StudySummary& s : summaries) {
    out << "controller: " << controller_name(s.controller) << "\n";
    out << "  collision_rate: " << fmt_exact(s.collision_rate) << "\n";
    out << "  ave_velocity_deviation_mps: " << fmt_exact(s.ave_velocity_deviation) << "\n";
    out << "  max_velocity_deviation_mps: " << fmt_exact(s.max_velocity_deviation) << "\n";
    out << "  ave_heading_deviation_deg: " << fmt_exact(s.ave_heading_deviation_deg) << "\n";
    out << "  max_heading_deviation_deg: " << fmt_exact(s.max_heading_deviation_deg) << "\n";
    out << "  ave_abs_velocity_deviation_mps: " << fmt_exact(s.ave_abs_velocity_deviation)
        << "\n";
    out << "  ave_abs_heading_deviation_deg: " << fmt_exact(s.ave_abs_heading_deviation_deg)
        << "\n";
    out << "  episodes_failed: " << s.episodes_failed << "\n";
  }
}

void write_timings(std::ostream& out, const std::vector<StudySummary>& summaries) {
  out << "# wall-clock statistics; excluded from the summary so reruns stay byte-identical\n";
  for (const StudySummary& s : summaries) {
    out << "controller: " << controller_name(s.controller) << "\n";
    out << "  ave_solve_seconds: " << fmt(s.ave_solve_seconds) << "\n";
    out << "  max_solve_seconds: " << fmt(s.max_solve_seconds) << "\n";
  }
}

}  // namespace pcpg
