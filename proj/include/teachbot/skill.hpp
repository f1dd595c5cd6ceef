#pragma once

#include <Eigen/Dense>

#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace teachbot {

using Vec2 = Eigen::Vector2d;
using FeatureVector = Eigen::VectorXd;

/// End-effector force [N] for the force-controlled arm, desired position
/// delta [cm] for the kinematic arm.
using ActionVector = Vec2;

enum class FeatureKind { ForceControl5, Kinematic3 };

std::string_view to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(std::string_view name);

/// Fixed map from task-space state to regression features. The last feature
/// is always the constant bias 1.
///   ForceControl5: (x, y, vx, vy, 1)
///   Kinematic3:    (x, y, 1)
struct FeatureMap {
  FeatureKind kind = FeatureKind::ForceControl5;

  int dim() const { return kind == FeatureKind::ForceControl5 ? 5 : 3; }
  bool operator==(const FeatureMap&) const = default;
};

struct TaskSpaceState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();

  bool operator==(const TaskSpaceState& o) const {
    return position == o.position && velocity == o.velocity;
  }
};

/// Axis-aligned teaching workspace, optionally intersected with a disc of
/// radius `max_radius` around the base (reachable set of the arm).
struct Workspace {
  Vec2 lower = Vec2::Zero();
  Vec2 upper = Vec2::Zero();
  double max_radius = std::numeric_limits<double>::infinity();

  bool contains(const Vec2& p) const;
  Vec2 clamp(const Vec2& p) const;
  bool operator==(const Workspace& o) const {
    return lower == o.lower && upper == o.upper && max_radius == o.max_radius;
  }
};

/// 2 x dim controller matrix. Row 0 produces u_x, row 1 produces u_y.
/// vec() stacks columns, so for the force skills vec = (k1, k3, k2, k4, d1, d3,
/// d2, d4, tx, ty).
class SkillParameters {
 public:
  using Matrix = Eigen::Matrix<double, 2, Eigen::Dynamic>;

  SkillParameters() = default;
  explicit SkillParameters(Matrix m);

  static SkillParameters zero(int dim);
  static SkillParameters unvec(const Eigen::VectorXd& v);
  static SkillParameters unvec(std::initializer_list<double> v);

  Eigen::VectorXd vec() const;
  int dim() const { return static_cast<int>(m_.cols()); }
  const Matrix& matrix() const { return m_; }

  bool operator==(const SkillParameters& o) const {
    return m_.cols() == o.m_.cols() && m_ == o.m_;
  }

 private:
  Matrix m_;
};

struct Skill {
  std::string id;
  std::string name;
  FeatureMap feature_map;
  SkillParameters target;
  Workspace workspace;
  /// Largest accepted |u| for a submitted demonstration.
  double action_cap = 0.0;
  /// RMS of |u*| over a grid of resting states; the natural unit for teacher noise.
  double action_scale = 1.0;

  bool operator==(const Skill&) const = default;
};

FeatureVector eval_features(FeatureMap fm, const TaskSpaceState& s);
ActionVector policy_action(const SkillParameters& p, const FeatureVector& phi);
ActionVector optimal_action(const Skill& skill, const TaskSpaceState& s);

/// Throws InvalidInput unless `u` is finite and within the skill's action cap.
void validate_action(const Skill& skill, const ActionVector& u);

/// Scales `u` down to norm `cap` if it is longer.
ActionVector clip_norm(const ActionVector& u, double cap);

/// Root-mean-square optimal action magnitude over a 21 x 21 grid of resting
/// states in the workspace (reachable points only).
double nominal_action_scale(const Skill& skill);

namespace skill_ids {
inline constexpr std::string_view kSimPoint = "sim-S1";
inline constexpr std::string_view kSimLine = "sim-S2";
inline constexpr std::string_view kPhysPoint = "phys-S1";
inline constexpr std::string_view kPhysLine = "phys-S2";
}  // namespace skill_ids

/// sim-S1, sim-S2 (force control, metres) and phys-S1, phys-S2 (kinematic, cm).
std::vector<Skill> builtin_skills();

class SkillRegistry {
 public:
  SkillRegistry() = default;
  static const SkillRegistry& builtin();

  void add(Skill skill);
  const Skill& find(std::string_view id) const;
  bool contains(std::string_view id) const;

 private:
  std::map<std::string, Skill, std::less<>> skills_;
};

}  // namespace teachbot
