// Command-line front end: run single episodes, Monte-Carlo studies, quick
// property verification, and scenario-file generation.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcpg/baselines.hpp"
#include "pcpg/corrector.hpp"
#include "pcpg/costs.hpp"
#include "pcpg/game.hpp"
#include "pcpg/harness.hpp"
#include "pcpg/rng.hpp"
#include "pcpg/safety.hpp"
#include "pcpg/scenarios.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct SolverOverrides {
  std::optional<int> population;
  std::optional<int> iterations;
  std::optional<double> elite_fraction;
  std::optional<double> init_stddev;
  std::optional<int> br_grid;
  std::optional<std::uint64_t> seed;

  void apply(pcpg::SolverConfig& cfg) const {
    if (population) cfg.population = *population;
    if (iterations) cfg.iterations = *iterations;
    if (elite_fraction) cfg.elite_fraction = *elite_fraction;
    if (init_stddev) cfg.init_stddev = *init_stddev;
    if (br_grid) cfg.br_grid_resolution = *br_grid;
    if (seed) cfg.seed = *seed;
  }
};

void add_solver_options(CLI::App* cmd, SolverOverrides& ov) {
  cmd->add_option("--solver-population", ov.population, "CEM population size");
  cmd->add_option("--solver-iterations", ov.iterations, "CEM iteration count");
  cmd->add_option("--solver-elite-fraction", ov.elite_fraction, "CEM elite fraction");
  cmd->add_option("--solver-init-stddev", ov.init_stddev, "CEM initial sampling stddev");
  cmd->add_option("--solver-br-grid", ov.br_grid, "best-response grid resolution per axis");
  cmd->add_option("--solver-seed", ov.seed, "base seed for the stochastic solver");
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p);
  if (!f) throw pcpg::ConfigError("cannot open for writing: " + p.string());
  return f;
}

int cmd_run(const std::string& scenario_path, const std::string& controller_name,
            const std::string& out_dir, std::optional<double> dt, std::optional<int> horizon,
            const SolverOverrides& ov, double l0, double l1) {
  pcpg::Scenario scenario = pcpg::load_scenario(scenario_path);
  if (dt) scenario.dt = *dt;
  if (horizon) scenario.horizon_steps = *horizon;
  const pcpg::Controller controller = pcpg::controller_from_name(controller_name);
  pcpg::SolverConfig solver;
  ov.apply(solver);
  pcpg::CbfGains gains{l0, l1};

  const pcpg::EpisodeLog log = pcpg::run_episode(scenario, controller, solver, gains);
  const pcpg::EpisodeMetrics m = pcpg::compute_metrics(log, scenario);

  std::filesystem::create_directories(out_dir);
  {
    auto f = open_out(std::filesystem::path(out_dir) / "trajectory.csv");
    pcpg::write_trajectory_csv(f, log, scenario);
  }
  {
    auto f = open_out(std::filesystem::path(out_dir) / "predictions.csv");
    pcpg::write_predictions_csv(f, log, scenario);
  }

  std::cout << "scenario: " << scenario.name << "\n"
            << "controller: " << pcpg::controller_name(controller) << "\n"
            << "steps_run: " << m.steps_run << "\n"
            << "collision: "
            << (log.collision ? "step " + std::to_string(log.collision->step) + " (t=" +
                                    std::to_string(log.collision->step * scenario.dt) +
                                    " s, agents " + std::to_string(log.collision->agent_a + 1) +
                                    "," + std::to_string(log.collision->agent_b + 1) + ")"
                              : "none")
            << "\n"
            << "min_distance_m: " << m.min_distance << "\n"
            << "ave_velocity_deviation_mps: " << m.ave_velocity_deviation << "\n"
            << "max_velocity_deviation_mps: " << m.max_velocity_deviation << "\n"
            << "ave_heading_deviation_deg: " << m.ave_heading_deviation_deg << "\n"
            << "max_heading_deviation_deg: " << m.max_heading_deviation_deg << "\n"
            << "ave_solve_seconds: " << m.ave_solve_seconds << "\n";
  return kExitOk;
}

int cmd_study(const std::string& family_name_str, int n, const std::string& controllers_csv,
              std::uint64_t seed, const std::string& out_dir, int threads,
              const SolverOverrides& ov, double l0, double l1) {
  const pcpg::ScenarioFamily family = pcpg::family_from_name(family_name_str);
  std::vector<pcpg::Controller> controllers;
  std::stringstream ss(controllers_csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) controllers.push_back(pcpg::controller_from_name(item));
  }
  pcpg::SolverConfig solver;
  ov.apply(solver);
  pcpg::CbfGains gains{l0, l1};

  const pcpg::StudyResult result =
      pcpg::run_study(family, controllers, n, seed, solver, threads, gains);

  std::filesystem::create_directories(out_dir);
  {
    auto f = open_out(std::filesystem::path(out_dir) / "summary.txt");
    pcpg::write_summary(f, family, n, seed, result.summaries);
  }
  {
    auto f = open_out(std::filesystem::path(out_dir) / "timings.txt");
    pcpg::write_timings(f, result.summaries);
  }
  pcpg::write_summary(std::cout, family, n, seed, result.summaries);
  int failures = 0;
  for (const pcpg::StudySummary& s : result.summaries) failures += s.episodes_failed;
  return failures == 0 ? kExitOk : kExitRuntime;
}

int cmd_make_scenario(const std::string& family_name_str, std::uint64_t seed, int index,
                      const std::string& out_path) {
  const pcpg::ScenarioFamily family = pcpg::family_from_name(family_name_str);
  const pcpg::Scenario scenario = pcpg::sample_family(family, seed, index);
  pcpg::save_scenario(scenario, out_path);
  std::cout << "wrote " << out_path << " (" << scenario.name << ")\n";
  return kExitOk;
}

bool check(const char* name, bool ok) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
  return ok;
}

// Quick property suite: exact identities and soundness checks on random data.
int cmd_verify() {
  using namespace pcpg;
  bool all = true;
  SplitMix64 rng(20260814u);

  // Unilateral cost change equals potential change, exactly.
  {
    bool ok = true;
    for (int trial = 0; trial < 200 && ok; ++trial) {
      const Scenario sc = sample_oncoming(rng.next_u64());
      Stage stage{sc.initial_states, sc.dt, sc.horizon_steps};
      JointStrategy joint;
      for (std::size_t j = 0; j < sc.num_agents(); ++j) {
        joint.strategies.push_back(
            {{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)}, sc.horizon_steps});
      }
      const std::size_t i = trial % sc.num_agents();
      JointStrategy dev = joint;
      dev[i].action = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
      const double dj = agent_cost(i, dev, stage, sc.true_params, sc.cost_cfg) -
                        agent_cost(i, joint, stage, sc.true_params, sc.cost_cfg);
      const double df = potential_value(dev, stage, sc.true_params, sc.cost_cfg) -
                        potential_value(joint, stage, sc.true_params, sc.cost_cfg);
      ok = std::abs(dj - df) <= 1e-9 * (1.0 + std::abs(dj));
    }
    all &= check("potential-identity", ok);
  }

  // Nash solve yields a non-negative certificate below the acceptance scale.
  {
    const Scenario sc = sample_oncoming(7u);
    Stage stage{sc.initial_states, sc.dt, sc.horizon_steps};
    SolverConfig solver;
    const NashResult nash = solve_potential(stage, sc.true_params, sc.cost_cfg, solver);
    all &= check("psne-certificate", nash.psne_certificate >= 0.0 && nash.converged);
  }

  // Constant deviation is corrected exactly after one observation.
  {
    const Scenario sc = build_oncoming(0.5, 10.0, 11u);
    Stage stage{sc.initial_states, sc.dt, sc.horizon_steps};
    SolverConfig solver;
    const CorrectorResult first = corrector_step(stage, 0, std::nullopt, std::nullopt,
                                                 sc.true_params[0], sc.assumed_params,
                                                 sc.cost_cfg, solver);
    const Action bias{0.4, -0.3};
    std::vector<Action> realized(2);
    realized[1] = {first.pg_prediction[1].action.ax + bias.ax,
                   first.pg_prediction[1].action.ay + bias.ay};
    std::vector<Action> predicted(2);
    predicted[1] = first.pg_prediction[1].action;
    const CorrectorResult second =
        corrector_step(stage, 0, realized, predicted, sc.true_params[0], sc.assumed_params,
                       sc.cost_cfg, solver);
    const double err =
        std::abs(second.corrected[1].action.ax - (second.pg_prediction[1].action.ax + bias.ax)) +
        std::abs(second.corrected[1].action.ay - (second.pg_prediction[1].action.ay + bias.ay));
    all &= check("corrector-shift-exact", err <= 1e-12);
  }

  // Sampled bounded-error rollouts stay inside the reachable boxes.
  {
    bool ok = true;
    const Scenario sc = sample_oncoming(23u);
    const SafetySpec& spec = sc.safety_spec;
    const Strategy base{{0.5, -0.25}, sc.horizon_steps};
    const std::vector<VehicleState> others{sc.initial_states[1]};
    const std::vector<Strategy> strategies{base};
    const std::vector<AgentParams> params{sc.assumed_params[1]};
    const ReachBoxes boxes = reachable_boxes(others, strategies, params, spec, sc.dt, 4);
    for (int trial = 0; trial < 500 && ok; ++trial) {
      VehicleState s = sc.initial_states[1];
      for (int k = 0; k < 4 && ok; ++k) {
        const double r = error_bound(spec.bound_params, k + 1, sc.dt);
        Action a{base.action.ax + rng.uniform(-r, r), base.action.ay + rng.uniform(-r, r)};
        a = params[0].action_bounds.clamp(a);
        s = step_dynamics(s, a, sc.dt);
        ok = boxes[0][static_cast<std::size_t>(k)].x.contains(s.x) &&
             boxes[0][static_cast<std::size_t>(k)].y.contains(s.y);
      }
    }
    all &= check("reachability-containment", ok);
  }

  // Single-constraint QP equals the analytic projection.
  {
    bool ok = true;
    for (int trial = 0; trial < 100 && ok; ++trial) {
      std::vector<VehicleState> states{
          {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-3, 3), rng.uniform(-3, 3)},
          {rng.uniform(6, 15), rng.uniform(6, 15), rng.uniform(-3, 3), rng.uniform(-3, 3)}};
      std::vector<AgentParams> params(2);
      params[0].desired_velocity = {0.0, 5.0};
      params[1].desired_velocity = {0.0, -5.0};
      const std::vector<Action> omega{{}, {rng.uniform(-1, 1), rng.uniform(-1, 1)}};
      CbfParams cbf;
      const PccaResult qp = pcca_solve(states, 0, params, omega, cbf, 0.5);
      const Action nominal = nominal_controller(states[0], params[0], 0.5);
      const CbfRow row = cbf_row(states[0], states[1], cbf);
      // Stack z = (a_ego, copy); project (nominal, 0) onto the half space.
      const double a[4] = {row.c.x, row.c.y, -row.c.x, -row.c.y};
      const double h = -row.b + row.c.x * omega[1].ax + row.c.y * omega[1].ay;
      const double z0[4] = {nominal.ax, nominal.ay, 0.0, 0.0};
      double az0 = 0.0, aa = 0.0;
      for (int k = 0; k < 4; ++k) {
        az0 += a[k] * z0[k];
        aa += a[k] * a[k];
      }
      double z[4];
      const double lift = az0 < h && aa > 0.0 ? (h - az0) / aa : 0.0;
      for (int k = 0; k < 4; ++k) z[k] = z0[k] + lift * a[k];
      ok = qp.feasible && std::abs(qp.ego_action_raw.ax - z[0]) <= 1e-8 &&
           std::abs(qp.ego_action_raw.ay - z[1]) <= 1e-8 &&
           std::abs(qp.copies[1].ax - z[2]) <= 1e-8 &&
           std::abs(qp.copies[1].ay - z[3]) <= 1e-8;
    }
    all &= check("pcca-projection", ok);
  }

  // Deterministic paired study.
  {
    SolverConfig solver;
    const std::vector<Controller> cs{Controller::pcpg};
    const StudyResult a = run_study(ScenarioFamily::oncoming, cs, 3, 99u, solver);
    const StudyResult b = run_study(ScenarioFamily::oncoming, cs, 3, 99u, solver);
    std::ostringstream sa, sb;
    write_summary(sa, ScenarioFamily::oncoming, 3, 99u, a.summaries);
    write_summary(sb, ScenarioFamily::oncoming, 3, 99u, b.summaries);
    all &= check("study-determinism", sa.str() == sb.str());
  }

  std::cout << (all ? "verify: all properties hold\n" : "verify: FAILURES present\n");
  return all ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent driving decision simulator: game-theoretic interaction "
               "prediction with deviation correction, reachability certification, and a "
               "CBF-QP baseline"};
  app.require_subcommand(1);

  std::string scenario_path, controller = "pcpg", out_dir = "out";
  std::optional<double> dt_override;
  std::optional<int> horizon_override;
  SolverOverrides run_ov;
  double run_l0 = 13.0, run_l1 = 16.0;
  CLI::App* run = app.add_subcommand("run", "Run one episode from a scenario file");
  run->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--controller", controller,
                  "pg | pcpg | pcpg-certified | pcca | pcca-saturated");
  run->add_option("--out", out_dir, "output directory for CSV logs");
  run->add_option("--dt", dt_override, "override step length (s)");
  run->add_option("--horizon", horizon_override, "override horizon step count");
  run->add_option("--cbf-l0", run_l0, "CBF class-K gain l0");
  run->add_option("--cbf-l1", run_l1, "CBF class-K gain l1");
  add_solver_options(run, run_ov);

  std::string family = "oncoming", controllers_csv = "pg,pcpg,pcca-saturated";
  std::string study_out = "out";
  int n = 100, threads = 1;
  std::uint64_t study_seed = 1;
  SolverOverrides study_ov;
  double study_l0 = 13.0, study_l1 = 16.0;
  CLI::App* study = app.add_subcommand("study", "Run a Monte-Carlo comparison study");
  study->add_option("--family", family, "oncoming | intersection")->required();
  study->add_option("--n", n, "number of sampled scenarios")->required();
  study->add_option("--controllers", controllers_csv, "comma-separated controller list");
  study->add_option("--seed", study_seed, "study seed");
  study->add_option("--out", study_out, "output directory");
  study->add_option("--threads", threads, "worker threads (results identical to serial)");
  study->add_option("--cbf-l0", study_l0, "CBF class-K gain l0");
  study->add_option("--cbf-l1", study_l1, "CBF class-K gain l1");
  add_solver_options(study, study_ov);

  CLI::App* verify = app.add_subcommand("verify", "Run the quick property suite");

  std::string make_family = "oncoming", make_out = "scenario.json";
  std::uint64_t make_seed = 1;
  int make_index = 0;
  CLI::App* make = app.add_subcommand("make-scenario", "Sample a scenario to a JSON file");
  make->add_option("--family", make_family, "oncoming | intersection")->required();
  make->add_option("--seed", make_seed, "family seed");
  make->add_option("--index", make_index, "scenario index within the seeded stream");
  make->add_option("--out", make_out, "output JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) {
      return cmd_run(scenario_path, controller, out_dir, dt_override, horizon_override, run_ov,
                     run_l0, run_l1);
    }
    if (study->parsed()) {
      return cmd_study(family, n, controllers_csv, study_seed, study_out, threads, study_ov,
                       study_l0, study_l1);
    }
    if (verify->parsed()) return cmd_verify();
    if (make->parsed()) return cmd_make_scenario(make_family, make_seed, make_index, make_out);
  } catch (const pcpg::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
