#pragma once

#include <Eigen/Dense>

#include <vector>

#include "teachbot/skill.hpp"

namespace teachbot {

/// Planar two-link arm with a point mass at the distal end of each link.
struct ArmModel {
  double l1 = 1.0;  // m
  double l2 = 1.0;
  double m1 = 1.0;  // kg
  double m2 = 1.0;
  double g = 9.81;   // m/s^2
  double dt = 1e-3;  // s
  /// The force controller adds g(q) to the commanded joint torque, so the
  /// demonstrated end-effector force acts on a gravity-free arm.
  bool gravity_compensation = true;
  /// Rollouts stop (and are flagged diverged) above this joint speed [rad/s].
  double max_joint_speed = 1e3;

  void validate() const;
};

struct JointState {
  Vec2 q = Vec2::Zero();
  Vec2 qdot = Vec2::Zero();
};

/// Position-controlled arm: each step moves the end-effector by the commanded
/// delta, clipped to `max_step` and clamped to the workspace.
struct KinematicModel {
  Workspace workspace{Vec2(5.0, -20.0), Vec2(32.0, 20.0)};
  double max_step = 5.0;  // cm
  double dt = 0.05;       // s, 20 steps per second

  void validate() const;
};

struct TrajectorySample {
  double t = 0.0;
  TaskSpaceState state;
  ActionVector action = ActionVector::Zero();
};

struct Trajectory {
  double dt = 0.0;
  std::vector<TrajectorySample> samples;
  bool diverged = false;
};

Vec2 forward_kinematics(const ArmModel& m, const Vec2& q);
Eigen::Matrix2d jacobian(const ArmModel& m, const Vec2& q);
Eigen::Matrix2d mass_matrix(const ArmModel& m, const Vec2& q);
/// Coriolis/centrifugal matrix built from the Christoffel symbols of M, so
/// that Mdot - 2C is skew-symmetric.
Eigen::Matrix2d coriolis_matrix(const ArmModel& m, const Vec2& q, const Vec2& qdot);
Eigen::Vector2d gravity_vector(const ArmModel& m, const Vec2& q);

/// Potential energy, zero with both links hanging straight down.
double potential_energy(const ArmModel& m, const Vec2& q);
double total_energy(const ArmModel& m, const JointState& s);

TaskSpaceState task_state(const ArmModel& m, const JointState& s);

/// Elbow solution with q2 in [0, pi]. Throws InvalidInput if the position is
/// out of reach or the requested velocity cannot be mapped at a singularity.
JointState inverse_kinematics(const ArmModel& m, const TaskSpaceState& s);

/// One semi-implicit Euler step of M qdd + C qd + g = tau.
JointState step_torque(const ArmModel& m, const JointState& s, const Vec2& tau);

/// One step of M qdd + C qd + g = J^T u for an end-effector force u.
JointState step(const ArmModel& m, const JointState& s, const ActionVector& u);

/// Closed-loop playback of u = Theta phi(r, rdot) on the arm. Samples are
/// recorded every `record_every` integration steps, first and last included
/// when they fall on the grid; the trajectory dt is m.dt * record_every.
Trajectory rollout(const ArmModel& m, const SkillParameters& params, FeatureMap fm,
                   const TaskSpaceState& start, double duration, int record_every = 1);

/// Closed-loop playback on the kinematic arm: r+ = clamp(r + clip(u, max_step)).
Trajectory rollout(const KinematicModel& m, const SkillParameters& params, FeatureMap fm,
                   const TaskSpaceState& start, double duration);

}  // namespace teachbot
