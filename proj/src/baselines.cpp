#include "pcpg/baselines.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace pcpg {

namespace {

constexpr double kRiccatiTol = 1e-14;
constexpr int kRiccatiMaxIter = 100000;
constexpr double kKktTol = 1e-9;

// Infinite-horizon discrete LQR gain for x' = A x + B u with stage cost
// x'Qx + u'Ru, by fixed-point iteration of the Riccati recursion.
Eigen::RowVector2d lqr_gain_2d(const Eigen::Matrix2d& A, const Eigen::Vector2d& B,
                               const Eigen::Matrix2d& Q, double R) {
  Eigen::Matrix2d P = Q;
  for (int i = 0; i < kRiccatiMaxIter; ++i) {
    const double denom = R + B.dot(P * B);
    const Eigen::RowVector2d K = (B.transpose() * P * A) / denom;
    const Eigen::Matrix2d next = A.transpose() * P * A - A.transpose() * P * B * K + Q;
    const double diff = (next - P).cwiseAbs().maxCoeff();
    P = next;
    if (diff <= kRiccatiTol) break;
  }
  const double denom = R + B.dot(P * B);
  return (B.transpose() * P * A) / denom;
}

// Scalar case (velocity-only axis): v' = v + dt u.
double lqr_gain_1d(double dt, double q, double R) {
  double p = q;
  for (int i = 0; i < kRiccatiMaxIter; ++i) {
    const double k = dt * p / (R + dt * dt * p);
    const double next = p - p * dt * k + q;
    const double diff = std::abs(next - p);
    p = next;
    if (diff <= kRiccatiTol) break;
  }
  return dt * p / (R + dt * dt * p);
}

double axis_command(double pos, double vel, double desired_pos, double desired_vel,
                    double q_weight, double r_weight, bool track_position, double dt) {
  constexpr double kControlWeight = 1.0;
  if (track_position) {
    Eigen::Matrix2d A;
    A << 1.0, dt, 0.0, 1.0;
    const Eigen::Vector2d B(0.0, dt);
    Eigen::Matrix2d Q = Eigen::Matrix2d::Zero();
    Q(0, 0) = q_weight;
    Q(1, 1) = r_weight;
    const Eigen::RowVector2d K = lqr_gain_2d(A, B, Q, kControlWeight);
    return -(K(0) * (pos - desired_pos) + K(1) * (vel - desired_vel));
  }
  if (r_weight <= 0.0) return 0.0;
  const double k = lqr_gain_1d(dt, r_weight, kControlWeight);
  return -k * (vel - desired_vel);
}

}  // namespace

CbfRow cbf_row(const VehicleState& ego, const VehicleState& other, const CbfParams& params) {
  const Vec2 X12 = ego.position() - other.position();
  const Vec2 v12 = ego.velocity() - other.velocity();
  const double d2 = squared_norm(X12);
  if (d2 <= 0.0) {
    throw DegenerateGeometryError("cbf_row: coincident positions give no usable constraint");
  }
  CbfRow row;
  row.b = 2.0 * squared_norm(v12) + 2.0 * params.l1 * dot(X12, v12) +
          params.l0 * (d2 - params.d_safe * params.d_safe);
  row.c = 2.0 * X12;
  return row;
}

Action nominal_controller(const VehicleState& state, const AgentParams& params, double dt) {
  if (!(dt > 0.0)) throw ConfigError("nominal_controller: dt must be positive");
  const bool has_pos = params.desired_position.has_value();
  const double desired_px = has_pos ? params.desired_position->x : 0.0;
  const double desired_py = has_pos ? params.desired_position->y : 0.0;

  Action a;
  a.ax = axis_command(state.x, state.vx, desired_px, params.desired_velocity.x,
                      params.q_weights.x, params.r_weights.x,
                      has_pos && params.q_weights.x > 0.0, dt);
  a.ay = axis_command(state.y, state.vy, desired_py, params.desired_velocity.y,
                      params.q_weights.y, params.r_weights.y,
                      has_pos && params.q_weights.y > 0.0, dt);
  if (params.lateral_locked) {
    (params.locked_axis() == 0 ? a.ay : a.ax) = 0.0;
  }
  return a;
}

PccaResult pcca_solve(const std::vector<VehicleState>& states, std::size_t ego_index,
                      const std::vector<AgentParams>& params,
                      const std::vector<Action>& omega_tilde, const CbfParams& cbf,
                      double dt) {
  const std::size_t n = states.size();
  if (params.size() != n || omega_tilde.size() != n) {
    throw ConfigError("pcca_solve: states, params, and omega_tilde sizes differ");
  }
  if (ego_index >= n) throw ConfigError("pcca_solve: ego index out of range");
  if (n < 1) throw ConfigError("pcca_solve: no agents");

  const Action nominal = nominal_controller(states[ego_index], params[ego_index], dt);

  // Others in index order; variable layout z = [a_ego, copy_0, copy_1, ...].
  std::vector<std::size_t> others;
  for (std::size_t j = 0; j < n; ++j) {
    if (j != ego_index) others.push_back(j);
  }
  const int m = static_cast<int>(others.size());
  const int dim = 2 * (m + 1);

  // Objective |a1 - a1_nominal|^2 + sum |copy_j|^2 => 1/2 z'Hz + g'z with
  // H = 2I, g = [-2 a1_nominal; 0; ...].
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
  g(0) = -2.0 * nominal.ax;
  g(1) = -2.0 * nominal.ay;

  // Barrier rows: c (a1 - copy_j) >= -b + c omega_tilde_j.
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, dim);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(m);
  for (int r = 0; r < m; ++r) {
    const std::size_t j = others[static_cast<std::size_t>(r)];
    const CbfRow row = cbf_row(states[ego_index], states[j], cbf);
    G(r, 0) = row.c.x;
    G(r, 1) = row.c.y;
    G(r, 2 + 2 * r) = -row.c.x;
    G(r, 3 + 2 * r) = -row.c.y;
    h(r) = -row.b + row.c.x * omega_tilde[j].ax + row.c.y * omega_tilde[j].ay;
  }

  // Enumerate active sets in bitmask order; the first optimum found at the
  // lowest objective wins, so ties resolve deterministically.
  double best_objective = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_z;
  bool found = false;
  const int subsets = 1 << m;
  for (int mask = 0; mask < subsets; ++mask) {
    std::vector<int> active;
    for (int r = 0; r < m; ++r) {
      if (mask & (1 << r)) active.push_back(r);
    }
    const int na = static_cast<int>(active.size());

    // Stationarity for >= constraints is Hz + g - A'lambda = 0 with
    // lambda >= 0, so the KKT system is [H -A'; A 0][z; lambda] = [-g; h].
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim + na, dim + na);
    kkt.topLeftCorner(dim, dim) = 2.0 * Eigen::MatrixXd::Identity(dim, dim);
    Eigen::VectorXd rhs(dim + na);
    rhs.head(dim) = -g;
    for (int r = 0; r < na; ++r) {
      kkt.block(dim + r, 0, 1, dim) = G.row(active[static_cast<std::size_t>(r)]);
      kkt.block(0, dim + r, dim, 1) =
          -G.row(active[static_cast<std::size_t>(r)]).transpose();
      rhs(dim + r) = h(active[static_cast<std::size_t>(r)]);
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd z = sol.head(dim);

    // Multipliers of active >= constraints must be nonnegative; inactive
    // constraints must hold.
    bool valid = true;
    for (int r = 0; r < na && valid; ++r) {
      if (sol(dim + r) < -kKktTol) valid = false;
    }
    if (valid && m > 0) {
      const Eigen::VectorXd slack = G * z - h;
      for (int r = 0; r < m && valid; ++r) {
        if (slack(r) < -kKktTol) valid = false;
      }
    }
    if (!valid) continue;

    const double objective =
        (z.head(2) - Eigen::Vector2d(nominal.ax, nominal.ay)).squaredNorm() +
        z.tail(dim - 2).squaredNorm();
    if (objective < best_objective) {
      best_objective = objective;
      best_z = z;
      found = true;
    }
  }

  PccaResult result;
  result.copies.assign(n, Action{0.0, 0.0});
  if (!found) {
    result.feasible = false;
    result.ego_action_raw = nominal;
    result.ego_action = params[ego_index].action_bounds.clamp(nominal);
    result.copies[ego_index] = nominal;
    return result;
  }

  result.feasible = true;
  result.ego_action_raw = Action{best_z(0), best_z(1)};
  result.ego_action = cbf.saturate ? params[ego_index].action_bounds.clamp(result.ego_action_raw)
                                   : result.ego_action_raw;
  result.copies[ego_index] = result.ego_action_raw;
  for (int r = 0; r < m; ++r) {
    result.copies[others[static_cast<std::size_t>(r)]] =
        Action{best_z(2 + 2 * r), best_z(3 + 2 * r)};
  }
  return result;
}

}  // namespace pcpg
