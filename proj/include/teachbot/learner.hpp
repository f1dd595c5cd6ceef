#pragma once

#include <Eigen/Dense>

#include <string>

#include "teachbot/skill.hpp"

namespace teachbot {

/// Demonstrations for one episode. Row n of `features` is phi(x_n)^T and row n
/// of `actions` is u_n^T.
struct DemonstrationSet {
  Eigen::MatrixXd features;
  Eigen::MatrixX2d actions;
  std::string skill_id;
};

struct LearnerConfig {
  double lambda = 1e-6;
};

/// Ridge regression, one column of actions at a time:
///   w = (Phi^T Phi + lambda I)^{-1} Phi^T u
/// solved with a Cholesky factorization of the regularized Gram matrix.
/// Throws RankDeficient when lambda = 0 and Phi^T Phi is singular.
SkillParameters fit(const DemonstrationSet& demos, const LearnerConfig& cfg);

/// l2 distance between vec(learnt) and vec(target).
double teaching_risk(const SkillParameters& learnt, const SkillParameters& target);

/// Spectral norm of (Phi^T Phi + lambda I)^{-1} Phi^T, i.e. the largest
/// sigma / (sigma^2 + lambda) over the singular values of Phi.
double risk_factor_r1(const Eigen::MatrixXd& features, double lambda);

/// Frobenius norm of U - U*.
double risk_factor_r2(const Eigen::MatrixX2d& actions, const Eigen::MatrixX2d& optimal);

/// Per-demonstration residual norms |u_n - u*_n|.
Eigen::VectorXd residual_norms(const Eigen::MatrixX2d& actions, const Eigen::MatrixX2d& optimal);

}  // namespace teachbot
