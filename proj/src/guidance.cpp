#include "teachbot/guidance.hpp"

#include "teachbot/error.hpp"
#include "teachbot/learner.hpp"

namespace teachbot {

GuidanceFrame build_guidance(const Skill& skill, const QueryBatch& batch, std::span<const ActionVector> submitted) {
  if (submitted.size() > batch.states.size()) {
    throw InvalidInput("more actions submitted than query states in the batch");
  }
  const auto n = static_cast<Eigen::Index>(submitted.size());
  Eigen::MatrixX2d user(n, 2), optimal(n, 2);

  GuidanceFrame frame;
  frame.effort_budget = skill.feature_map.dim();
  frame.effort_used = static_cast<int>(n);
  frame.per_state.reserve(submitted.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    GuidanceRecord rec;
    rec.state = batch.states[idx];
    rec.user_action = submitted[idx];
    rec.optimal_action = optimal_action(skill, rec.state);
    user.row(i) = rec.user_action.transpose();
    optimal.row(i) = rec.optimal_action.transpose();
    frame.per_state.push_back(rec);
  }
  const Eigen::VectorXd residuals = residual_norms(user, optimal);
  for (Eigen::Index i = 0; i < n; ++i) frame.per_state[static_cast<std::size_t>(i)].residual_norm = residuals[i];
  frame.episode_r2 = risk_factor_r2(user, optimal);
  return frame;
}

}  // namespace teachbot
