#include "teachbot/skill.hpp"

#include <cmath>

#include "teachbot/error.hpp"

namespace teachbot {

std::string_view to_string(FeatureKind kind) {
  return kind == FeatureKind::ForceControl5 ? "ForceControl5" : "Kinematic3";
}

FeatureKind feature_kind_from_string(std::string_view name) {
  if (name == "ForceControl5") return FeatureKind::ForceControl5;
  if (name == "Kinematic3") return FeatureKind::Kinematic3;
  throw InvalidInput("unknown feature map '" + std::string(name) + "'");
}

bool Workspace::contains(const Vec2& p) const {
  if (!p.allFinite()) return false;
  if ((p.array() < lower.array()).any() || (p.array() > upper.array()).any()) return false;
  return p.norm() <= max_radius;
}

Vec2 Workspace::clamp(const Vec2& p) const {
  Vec2 c = p.cwiseMax(lower).cwiseMin(upper);
  const double r = c.norm();
  if (r > max_radius) c *= max_radius / r;
  return c;
}

SkillParameters::SkillParameters(Matrix m) : m_(std::move(m)) {
  if (m_.cols() < 1) throw InvalidInput("skill parameters need at least one column");
  if (!m_.allFinite()) throw InvalidInput("skill parameters must be finite");
}

SkillParameters SkillParameters::zero(int dim) {
  return SkillParameters(Matrix::Zero(2, dim));
}

SkillParameters SkillParameters::unvec(const Eigen::VectorXd& v) {
  if (v.size() < 2 || v.size() % 2 != 0) {
    throw InvalidInput("vec length " + std::to_string(v.size()) + " is not a positive multiple of 2");
  }
  // Eigen storage is column-major, so a straight reshape is the un-vec.
  return SkillParameters(Eigen::Map<const Matrix>(v.data(), 2, v.size() / 2));
}

SkillParameters SkillParameters::unvec(std::initializer_list<double> v) {
  Eigen::VectorXd tmp(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) tmp[i++] = x;
  return unvec(tmp);
}

Eigen::VectorXd SkillParameters::vec() const {
  return Eigen::Map<const Eigen::VectorXd>(m_.data(), m_.size());
}

FeatureVector eval_features(FeatureMap fm, const TaskSpaceState& s) {
  if (!s.position.allFinite() || !s.velocity.allFinite()) {
    throw InvalidInput("task-space state must be finite");
  }
  FeatureVector phi(fm.dim());
  if (fm.kind == FeatureKind::ForceControl5) {
    phi << s.position.x(), s.position.y(), s.velocity.x(), s.velocity.y(), 1.0;
  } else {
    phi << s.position.x(), s.position.y(), 1.0;
  }
  return phi;
}

ActionVector policy_action(const SkillParameters& p, const FeatureVector& phi) {
  if (phi.size() != p.dim()) {
    throw InvalidInput("feature length " + std::to_string(phi.size()) + " does not match parameter dim " +
                       std::to_string(p.dim()));
  }
  return p.matrix() * phi;
}

ActionVector optimal_action(const Skill& skill, const TaskSpaceState& s) {
  if (!skill.workspace.contains(s.position)) throw InvalidInput("state outside the skill workspace");
  return policy_action(skill.target, eval_features(skill.feature_map, s));
}

void validate_action(const Skill& skill, const ActionVector& u) {
  if (!u.allFinite()) throw InvalidInput("action must be finite");
  if (u.norm() > skill.action_cap) {
    throw InvalidInput("action magnitude " + std::to_string(u.norm()) + " exceeds cap " +
                       std::to_string(skill.action_cap));
  }
}

ActionVector clip_norm(const ActionVector& u, double cap) {
  const double n = u.norm();
  if (!(n > cap)) return u;
  double scale = cap / n;
  ActionVector out = u * scale;
  while (out.norm() > cap) {
    scale = std::nextafter(scale, 0.0);
    out = u * scale;
  }
  return out;
}

double nominal_action_scale(const Skill& skill) {
  constexpr int kGrid = 21;
  double sum = 0.0;
  int count = 0;
  const Vec2 span = skill.workspace.upper - skill.workspace.lower;
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < kGrid; ++j) {
      TaskSpaceState s;
      s.position = skill.workspace.lower + Vec2(span.x() * i / (kGrid - 1), span.y() * j / (kGrid - 1));
      if (!skill.workspace.contains(s.position)) continue;
      sum += policy_action(skill.target, eval_features(skill.feature_map, s)).squaredNorm();
      ++count;
    }
  }
  return count > 0 ? std::sqrt(sum / count) : 1.0;
}

namespace {

Skill make_skill(std::string_view id, std::string name, FeatureKind kind, SkillParameters target,
                 Workspace ws, double cap) {
  Skill s;
  s.id = std::string(id);
  s.name = std::move(name);
  s.feature_map = FeatureMap{kind};
  s.target = std::move(target);
  s.workspace = ws;
  s.action_cap = cap;
  s.action_scale = nominal_action_scale(s);
  return s;
}

}  // namespace

std::vector<Skill> builtin_skills() {
  // Reachable half-disc of the two 1 m links above the base.
  const Workspace sim_ws{Vec2(-2.0, 0.0), Vec2(2.0, 2.0), 2.0};
  const Workspace phys_ws{Vec2(5.0, -20.0), Vec2(32.0, 20.0)};
  constexpr double kSimCap = 20.0;   // N
  constexpr double kPhysCap = 10.0;  // cm

  std::vector<Skill> out;
  out.push_back(make_skill(skill_ids::kSimPoint, "reach target point (0.8, 1.2) m", FeatureKind::ForceControl5,
                           SkillParameters::unvec({-1, 0, 0, -1, -1, 0, 0, -1, 0.8, 1.2}), sim_ws, kSimCap));
  out.push_back(make_skill(skill_ids::kSimLine, "reach target line x = 0.8 m", FeatureKind::ForceControl5,
                           SkillParameters::unvec({-1, 0, 0, 0, -1, 0, 0, -1, 0.8, 0}), sim_ws, kSimCap));
  out.push_back(make_skill(skill_ids::kPhysPoint, "reach target point (23, 11) cm", FeatureKind::Kinematic3,
                           SkillParameters::unvec({-0.2, 0, 0, -0.2, 4.6, 2.2}), phys_ws, kPhysCap));
  out.push_back(make_skill(skill_ids::kPhysLine, "reach target line y = x/2", FeatureKind::Kinematic3,
                           SkillParameters::unvec({-0.04, 0.08, 0.08, -0.16, 0, 0}), phys_ws, kPhysCap));
  return out;
}

const SkillRegistry& SkillRegistry::builtin() {
  static const SkillRegistry registry = [] {
    SkillRegistry r;
    for (auto& s : builtin_skills()) r.add(std::move(s));
    return r;
  }();
  return registry;
}

void SkillRegistry::add(Skill skill) {
  if (skill.target.dim() != skill.feature_map.dim()) {
    throw InvalidInput("skill '" + skill.id + "' target dim does not match its feature map");
  }
  std::string key = skill.id;
  skills_.insert_or_assign(std::move(key), std::move(skill));
}

const Skill& SkillRegistry::find(std::string_view id) const {
  auto it = skills_.find(id);
  if (it == skills_.end()) throw UnknownSkill(std::string(id));
  return it->second;
}

bool SkillRegistry::contains(std::string_view id) const { return skills_.find(id) != skills_.end(); }

}  // namespace teachbot
