#include "teachbot/query_gen.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "teachbot/error.hpp"

namespace teachbot {

Eigen::MatrixXd feature_matrix(FeatureMap fm, std::span<const TaskSpaceState> states) {
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(states.size()), fm.dim());
  for (std::size_t i = 0; i < states.size(); ++i) {
    phi.row(static_cast<Eigen::Index>(i)) = eval_features(fm, states[i]).transpose();
  }
  return phi;
}

double condition_number(const Eigen::MatrixXd& m) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd& s = svd.singularValues();
  if (s.size() == 0 || m.rows() < m.cols() || s.minCoeff() <= 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return s.maxCoeff() / s.minCoeff();
}

QueryBatch generate_query_states(const Skill& skill, std::uint64_t seed, double kappa_max) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(skill.workspace.lower.x(), skill.workspace.upper.x());
  std::uniform_real_distribution<double> uy(skill.workspace.lower.y(), skill.workspace.upper.y());
  std::uniform_real_distribution<double> uv(-1.0, 1.0);
  const bool with_velocity = skill.feature_map.kind == FeatureKind::ForceControl5;

  CandidateSource source = [&]() {
    TaskSpaceState s;
    s.position = Vec2(ux(rng), uy(rng));
    if (with_velocity) s.velocity = Vec2(uv(rng), uv(rng));
    return s;
  };
  return generate_query_states(skill, seed, kappa_max, source);
}

QueryBatch generate_query_states(const Skill& skill, std::uint64_t seed, double kappa_max,
                                 const CandidateSource& source) {
  if (!(kappa_max > 1.0)) throw InvalidInput("kappa_max must exceed 1");
  const FeatureMap fm = skill.feature_map;
  const int n = fm.dim();

  QueryBatch batch;
  batch.seed = seed;
  batch.feature_map = fm;
  batch.states.reserve(static_cast<std::size_t>(n));
  Eigen::MatrixXd phi(0, n);

  int restarts = 0;
  while (static_cast<int>(batch.states.size()) < n) {
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxCandidateAttempts && !accepted; ++attempt) {
      const TaskSpaceState cand = source();
      if (!skill.workspace.contains(cand.position) || !cand.velocity.allFinite()) continue;

      Eigen::MatrixXd trial(phi.rows() + 1, n);
      trial.topRows(phi.rows()) = phi;
      trial.row(phi.rows()) = eval_features(fm, cand).transpose();

      const Eigen::JacobiSVD<Eigen::MatrixXd> svd(trial);
      const Eigen::VectorXd& sv = svd.singularValues();
      const double floor = std::numeric_limits<double>::epsilon() * sv.maxCoeff();
      if (!(sv.minCoeff() > (sv.maxCoeff() + floor) / kappa_max)) continue;

      phi = std::move(trial);
      batch.states.push_back(cand);
      accepted = true;
    }
    if (accepted) continue;
    // The earlier rows can leave no room for an acceptable next one; start over.
    if (++restarts > kMaxBatchRestarts) {
      throw GenerationExhausted("no acceptable query state after " + std::to_string(kMaxCandidateAttempts) +
                                " candidates (row " + std::to_string(batch.states.size() + 1) + ", " +
                                std::to_string(kMaxBatchRestarts) + " restarts)");
    }
    batch.states.clear();
    phi.resize(0, n);
  }
  batch.condition_number = condition_number(phi);
  return batch;
}

}  // namespace teachbot
