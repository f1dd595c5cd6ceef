#include "teachbot/learner.hpp"

#include <cmath>
#include <limits>

#include "teachbot/error.hpp"

namespace teachbot {

namespace {

void check_lambda(double lambda) {
  if (!std::isfinite(lambda) || lambda < 0.0) throw InvalidInput("lambda must be finite and non-negative");
}

// A Gram matrix whose reciprocal condition estimate falls below this is
// treated as singular when no regularization is applied.
constexpr double kSingularRcond = 1e3 * std::numeric_limits<double>::epsilon();

}  // namespace

SkillParameters fit(const DemonstrationSet& demos, const LearnerConfig& cfg) {
  check_lambda(cfg.lambda);
  const auto& phi = demos.features;
  const auto& u = demos.actions;
  if (phi.rows() < 1) throw InvalidInput("at least one demonstration is required");
  if (phi.rows() != u.rows()) throw InvalidInput("feature and action row counts differ");
  if (!phi.allFinite() || !u.allFinite()) throw InvalidInput("demonstrations must be finite");

  const Eigen::Index dim = phi.cols();
  if (cfg.lambda == 0.0 && phi.rows() < dim) {
    throw RankDeficient("unregularized fit needs at least " + std::to_string(dim) + " demonstrations");
  }

  Eigen::MatrixXd gram = phi.transpose() * phi;
  gram.diagonal().array() += cfg.lambda;
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success || (cfg.lambda == 0.0 && llt.rcond() < kSingularRcond)) {
    throw RankDeficient("Phi^T Phi + lambda I is singular");
  }
  const Eigen::MatrixX2d weights = llt.solve(phi.transpose() * u);  // dim x 2
  return SkillParameters(weights.transpose());
}

double teaching_risk(const SkillParameters& learnt, const SkillParameters& target) {
  if (learnt.dim() != target.dim()) throw InvalidInput("parameter dimensions differ");
  return (learnt.vec() - target.vec()).norm();
}

double risk_factor_r1(const Eigen::MatrixXd& features, double lambda) {
  check_lambda(lambda);
  if (features.size() == 0) throw InvalidInput("empty feature matrix");
  if (!features.allFinite()) throw InvalidInput("features must be finite");

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(features);
  const Eigen::VectorXd& sigma = svd.singularValues();
  if (lambda == 0.0) {
    const double tol = sigma.maxCoeff() * static_cast<double>(std::max(features.rows(), features.cols())) *
                       std::numeric_limits<double>::epsilon();
    if (features.rows() < features.cols() || sigma.minCoeff() <= tol) {
      throw RankDeficient("Phi is rank deficient and lambda = 0");
    }
  }
  double best = 0.0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    const double s = sigma[i];
    if (s == 0.0) continue;
    best = std::max(best, s / (s * s + lambda));
  }
  return best;
}

double risk_factor_r2(const Eigen::MatrixX2d& actions, const Eigen::MatrixX2d& optimal) {
  if (actions.rows() != optimal.rows()) throw InvalidInput("action matrices differ in shape");
  return (actions - optimal).norm();
}

Eigen::VectorXd residual_norms(const Eigen::MatrixX2d& actions, const Eigen::MatrixX2d& optimal) {
  if (actions.rows() != optimal.rows()) throw InvalidInput("action matrices differ in shape");
  return (actions - optimal).rowwise().norm();
}

}  // namespace teachbot
