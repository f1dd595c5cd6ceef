#include "teachbot/dynamics.hpp"

#include <cmath>
#include <numbers>

#include "teachbot/error.hpp"

namespace teachbot {

void ArmModel::validate() const {
  if (!(l1 > 0 && l2 > 0 && m1 > 0 && m2 > 0 && g > 0 && dt > 0)) {
    throw InvalidInput("arm model parameters must all be positive");
  }
}

void KinematicModel::validate() const {
  if (!(max_step > 0 && dt > 0)) throw InvalidInput("kinematic model needs max_step > 0 and dt > 0");
}

Vec2 forward_kinematics(const ArmModel& m, const Vec2& q) {
  const double q12 = q[0] + q[1];
  return {m.l1 * std::cos(q[0]) + m.l2 * std::cos(q12), m.l1 * std::sin(q[0]) + m.l2 * std::sin(q12)};
}

Eigen::Matrix2d jacobian(const ArmModel& m, const Vec2& q) {
  const double s1 = std::sin(q[0]), c1 = std::cos(q[0]);
  const double s12 = std::sin(q[0] + q[1]), c12 = std::cos(q[0] + q[1]);
  Eigen::Matrix2d j;
  j << -m.l1 * s1 - m.l2 * s12, -m.l2 * s12,
        m.l1 * c1 + m.l2 * c12,  m.l2 * c12;
  return j;
}

Eigen::Matrix2d mass_matrix(const ArmModel& m, const Vec2& q) {
  const double c2 = std::cos(q[1]);
  const double l2sq = m.m2 * m.l2 * m.l2;
  const double coupling = m.m2 * m.l1 * m.l2 * c2;
  Eigen::Matrix2d mm;
  mm << (m.m1 + m.m2) * m.l1 * m.l1 + l2sq + 2.0 * coupling, l2sq + coupling,
        l2sq + coupling,                                      l2sq;
  return mm;
}

Eigen::Matrix2d coriolis_matrix(const ArmModel& m, const Vec2& q, const Vec2& qdot) {
  const double h = -m.m2 * m.l1 * m.l2 * std::sin(q[1]);
  Eigen::Matrix2d c;
  c << h * qdot[1], h * (qdot[0] + qdot[1]),
       -h * qdot[0], 0.0;
  return c;
}

Eigen::Vector2d gravity_vector(const ArmModel& m, const Vec2& q) {
  const double c1 = std::cos(q[0]), c12 = std::cos(q[0] + q[1]);
  return {(m.m1 + m.m2) * m.g * m.l1 * c1 + m.m2 * m.g * m.l2 * c12, m.m2 * m.g * m.l2 * c12};
}

double potential_energy(const ArmModel& m, const Vec2& q) {
  return (m.m1 + m.m2) * m.g * m.l1 * (1.0 + std::sin(q[0])) + m.m2 * m.g * m.l2 * (1.0 + std::sin(q[0] + q[1]));
}

double total_energy(const ArmModel& m, const JointState& s) {
  return 0.5 * s.qdot.dot(mass_matrix(m, s.q) * s.qdot) + potential_energy(m, s.q);
}

TaskSpaceState task_state(const ArmModel& m, const JointState& s) {
  return {forward_kinematics(m, s.q), jacobian(m, s.q) * s.qdot};
}

JointState inverse_kinematics(const ArmModel& m, const TaskSpaceState& s) {
  m.validate();
  if (!s.position.allFinite() || !s.velocity.allFinite()) throw InvalidInput("task-space state must be finite");
  const double r2 = s.position.squaredNorm();
  const double reach = m.l1 + m.l2;
  const double inner = std::abs(m.l1 - m.l2);
  if (r2 > reach * reach * (1.0 + 1e-12) || r2 < inner * inner * (1.0 - 1e-12)) {
    throw InvalidInput("position is outside the arm's reach");
  }
  const double c2 = std::clamp((r2 - m.l1 * m.l1 - m.l2 * m.l2) / (2.0 * m.l1 * m.l2), -1.0, 1.0);
  JointState js;
  js.q[1] = std::acos(c2);
  js.q[0] = std::atan2(s.position.y(), s.position.x()) -
            std::atan2(m.l2 * std::sin(js.q[1]), m.l1 + m.l2 * std::cos(js.q[1]));
  if (!s.velocity.isZero()) {
    const Eigen::Matrix2d j = jacobian(m, js.q);
    if (std::abs(j.determinant()) < 1e-9) throw InvalidInput("cannot map velocity at a kinematic singularity");
    js.qdot = j.partialPivLu().solve(s.velocity);
  }
  return js;
}

JointState step_torque(const ArmModel& m, const JointState& s, const Vec2& tau) {
  const Eigen::Matrix2d mm = mass_matrix(m, s.q);
  const Vec2 rhs = tau - coriolis_matrix(m, s.q, s.qdot) * s.qdot - gravity_vector(m, s.q);
  // det M >= m1 m2 l1^2 l2^2 > 0 for every configuration.
  const double det = mm.determinant();
  if (!(det > 0.0)) throw InvalidInput("mass matrix is singular");
  const Vec2 qddot = Vec2(mm(1, 1) * rhs[0] - mm(0, 1) * rhs[1], -mm(1, 0) * rhs[0] + mm(0, 0) * rhs[1]) / det;
  JointState next;
  next.qdot = s.qdot + qddot * m.dt;
  next.q = s.q + next.qdot * m.dt;
  return next;
}

JointState step(const ArmModel& m, const JointState& s, const ActionVector& u) {
  return step_torque(m, s, jacobian(m, s.q).transpose() * u);
}

Trajectory rollout(const ArmModel& m, const SkillParameters& params, FeatureMap fm, const TaskSpaceState& start,
                   double duration, int record_every) {
  m.validate();
  if (params.dim() != fm.dim()) throw InvalidInput("parameter dim does not match the feature map");
  if (!(duration >= 0.0) || record_every < 1) throw InvalidInput("invalid rollout duration or record interval");

  JointState js = inverse_kinematics(m, start);
  const auto steps = static_cast<long>(std::llround(duration / m.dt));

  Trajectory traj;
  traj.dt = m.dt * record_every;
  traj.samples.reserve(static_cast<std::size_t>(steps / record_every + 1));
  for (long k = 0;; ++k) {
    const TaskSpaceState ts = task_state(m, js);
    const ActionVector u = policy_action(params, eval_features(fm, ts));
    if (k % record_every == 0) {
      traj.samples.push_back({static_cast<double>(traj.samples.size()) * traj.dt, ts, u});
    }
    if (k == steps) break;

    Vec2 tau = jacobian(m, js.q).transpose() * u;
    if (m.gravity_compensation) tau += gravity_vector(m, js.q);
    js = step_torque(m, js, tau);
    if (!js.q.allFinite() || !js.qdot.allFinite() || js.qdot.cwiseAbs().maxCoeff() > m.max_joint_speed) {
      traj.diverged = true;
      break;
    }
  }
  return traj;
}

Trajectory rollout(const KinematicModel& m, const SkillParameters& params, FeatureMap fm,
                   const TaskSpaceState& start, double duration) {
  m.validate();
  if (params.dim() != fm.dim()) throw InvalidInput("parameter dim does not match the feature map");
  if (!(duration >= 0.0)) throw InvalidInput("invalid rollout duration");
  if (!m.workspace.contains(start.position)) throw InvalidInput("rollout start is outside the workspace");

  const auto steps = static_cast<long>(std::llround(duration / m.dt));
  Trajectory traj;
  traj.dt = m.dt;
  traj.samples.reserve(static_cast<std::size_t>(steps + 1));
  TaskSpaceState ts{start.position, Vec2::Zero()};
  for (long k = 0;; ++k) {
    const ActionVector u = policy_action(params, eval_features(fm, ts));
    traj.samples.push_back({static_cast<double>(k) * m.dt, ts, u});
    if (k == steps) break;
    ts.position = m.workspace.clamp(ts.position + clip_norm(u, m.max_step));
  }
  return traj;
}

}  // namespace teachbot
