#include <doctest.h>

#include <cmath>
#include <random>

#include "support/test_util.hpp"
#include "teachbot/error.hpp"
#include "teachbot/skill.hpp"

using namespace teachbot;

namespace {

const Skill& skill(std::string_view id) { return SkillRegistry::builtin().find(id); }

TaskSpaceState at(double x, double y, double vx = 0, double vy = 0) { return {Vec2(x, y), Vec2(vx, vy)}; }

}  // namespace

TEST_CASE("feature maps") {
  CHECK(eval_features(FeatureMap{FeatureKind::ForceControl5}, at(0, 0)) == FeatureVector::Unit(5, 4));

  FeatureVector k(3);
  k << 4, 2, 1;
  CHECK(eval_features(FeatureMap{FeatureKind::Kinematic3}, at(4, 2)) == k);

  FeatureVector f(5);
  f << 0.8, 1.2, -0.1, 0.2, 1;
  CHECK(eval_features(FeatureMap{FeatureKind::ForceControl5}, at(0.8, 1.2, -0.1, 0.2)) == f);

  CHECK_THROWS_AS(eval_features(FeatureMap{FeatureKind::Kinematic3}, at(NAN, 0)), InvalidInput);
  CHECK_THROWS_AS(eval_features(FeatureMap{FeatureKind::ForceControl5}, at(0, 0, INFINITY, 0)), InvalidInput);
}

TEST_CASE("bias feature is always one") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-50, 50);
  for (int i = 0; i < 200; ++i) {
    const auto s = at(d(rng), d(rng), d(rng), d(rng));
    CHECK(eval_features(FeatureMap{FeatureKind::ForceControl5}, s)(4) == 1.0);
    CHECK(eval_features(FeatureMap{FeatureKind::Kinematic3}, s)(2) == 1.0);
  }
}

TEST_CASE("policy action") {
  const Skill& s1 = skill(skill_ids::kSimPoint);
  const FeatureMap fm = s1.feature_map;
  CHECK(policy_action(s1.target, eval_features(fm, at(0.8, 1.2))).isZero(0.0));
  const ActionVector u0 = policy_action(s1.target, eval_features(fm, at(0, 0)));
  CHECK(u0.x() == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(u0.y() == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(policy_action(SkillParameters::zero(5), eval_features(fm, at(0.3, -0.7, 1, 2))).isZero(0.0));
  CHECK_THROWS_AS(policy_action(s1.target, FeatureVector::Ones(3)), InvalidInput);
}

TEST_CASE("policy action is linear in the features") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const SkillParameters p(testutil::random_matrix(rng, 2, 5, -3, 3));
    const FeatureVector a = testutil::random_matrix(rng, 5, 1);
    const FeatureVector b = testutil::random_matrix(rng, 5, 1);
    const double ca = 1.7, cb = -0.4;
    const ActionVector lhs = policy_action(p, ca * a + cb * b);
    const ActionVector rhs = ca * policy_action(p, a) + cb * policy_action(p, b);
    CHECK((lhs - rhs).norm() <= 1e-12 * std::max(1.0, rhs.norm()));
  }
}

TEST_CASE("optimal action at equilibria") {
  CHECK(optimal_action(skill(skill_ids::kSimPoint), at(0.8, 1.2)).isZero(0.0));
  CHECK(optimal_action(skill(skill_ids::kPhysPoint), at(23, 11)).norm() < 1e-14);
  for (double x : {6.0, 10.0, 17.5, 30.0}) {
    CHECK(optimal_action(skill(skill_ids::kPhysLine), at(x, x / 2)).norm() < 1e-14);
  }
  CHECK_THROWS_AS(optimal_action(skill(skill_ids::kPhysPoint), at(0, 0)), InvalidInput);
}

TEST_CASE("built-in skills decode the published vectors column-major") {
  const auto all = builtin_skills();
  REQUIRE(all.size() == 4);

  const Skill& s1 = skill(skill_ids::kSimPoint);
  Eigen::VectorXd v1(10);
  v1 << -1, 0, 0, -1, -1, 0, 0, -1, 0.8, 1.2;
  CHECK(s1.target.vec() == v1);
  CHECK(s1.target.matrix().col(4) == Vec2(0.8, 1.2));
  CHECK(s1.target.matrix().leftCols(2) == -Eigen::Matrix2d::Identity());
  CHECK(s1.target.matrix().middleCols(2, 2) == -Eigen::Matrix2d::Identity());

  const Skill& s2 = skill(skill_ids::kSimLine);
  Eigen::Matrix2d k2;
  k2 << -1, 0, 0, 0;
  CHECK(s2.target.matrix().leftCols(2) == k2);
  CHECK(s2.target.matrix().middleCols(2, 2) == -Eigen::Matrix2d::Identity());
  CHECK(s2.target.matrix().col(4) == Vec2(0.8, 0));
  Eigen::VectorXd v2(10);
  v2 << -1, 0, 0, 0, -1, 0, 0, -1, 0.8, 0;
  CHECK(SkillParameters::unvec(v2) == s2.target);

  Eigen::VectorXd p1(6);
  p1 << -0.2, 0, 0, -0.2, 4.6, 2.2;
  CHECK(skill(skill_ids::kPhysPoint).target.vec() == p1);
  Eigen::VectorXd p2(6);
  p2 << -0.04, 0.08, 0.08, -0.16, 0, 0;
  CHECK(skill(skill_ids::kPhysLine).target.vec() == p2);

  for (const auto& s : all) {
    CHECK(s.target.dim() == s.feature_map.dim());
    CHECK(s.action_scale > 0.0);
  }
}

TEST_CASE("vec and unvec") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10000; ++i) {
    const int dim = i % 2 == 0 ? 5 : 3;
    const SkillParameters p(testutil::random_matrix(rng, 2, dim, -10, 10));
    const auto v = p.vec();
    CHECK(v(0) == p.matrix()(0, 0));
    CHECK(v(1) == p.matrix()(1, 0));
    CHECK(v(2) == p.matrix()(0, 1));
    CHECK(SkillParameters::unvec(v) == p);
  }
  CHECK(SkillParameters::zero(3).vec() == Eigen::VectorXd::Zero(6));
  CHECK_THROWS_AS(SkillParameters::unvec(Eigen::VectorXd::Zero(7)), InvalidInput);
}

TEST_CASE("action validation and clipping") {
  const Skill& s1 = skill(skill_ids::kSimPoint);
  CHECK_NOTHROW(validate_action(s1, ActionVector(3, 4)));
  CHECK_THROWS_AS(validate_action(s1, ActionVector(NAN, 0)), InvalidInput);
  CHECK_THROWS_AS(validate_action(s1, ActionVector(s1.action_cap, 1)), InvalidInput);

  CHECK(clip_norm(ActionVector(3, 4), 10) == ActionVector(3, 4));
  CHECK(clip_norm(ActionVector(3, 4), 1).norm() == doctest::Approx(1.0));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(-100, 100);
  for (int i = 0; i < 10000; ++i) {
    const ActionVector u(d(rng), d(rng));
    const double cap = std::abs(d(rng)) + 0.1;
    CHECK(clip_norm(u, cap).norm() <= cap);
  }
}

TEST_CASE("workspaces") {
  const Skill& sim = skill(skill_ids::kSimPoint);
  CHECK(sim.workspace.contains(Vec2(0.8, 1.2)));
  CHECK_FALSE(sim.workspace.contains(Vec2(1.9, 1.9)));  // beyond two links of reach
  CHECK_FALSE(sim.workspace.contains(Vec2(0, -0.1)));
  const Skill& phys = skill(skill_ids::kPhysPoint);
  CHECK(phys.workspace.contains(Vec2(23, 11)));
  CHECK(phys.workspace.clamp(Vec2(100, -100)) == Vec2(32, -20));
}

TEST_CASE("registry") {
  CHECK(SkillRegistry::builtin().contains(skill_ids::kPhysLine));
  CHECK_THROWS_AS(SkillRegistry::builtin().find("nope"), UnknownSkill);
  SkillRegistry reg;
  Skill s = skill(skill_ids::kSimPoint);
  s.id = "custom";
  reg.add(s);
  CHECK(reg.find("custom").target == s.target);
  Skill bad = s;
  bad.target = SkillParameters::zero(3);
  CHECK_THROWS_AS(reg.add(bad), InvalidInput);
}

TEST_CASE("feature kind names round-trip") {
  for (auto k : {FeatureKind::ForceControl5, FeatureKind::Kinematic3}) {
    CHECK(feature_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(feature_kind_from_string("Quadratic7"), InvalidInput);
}
