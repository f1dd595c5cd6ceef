#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "teachbot/skill.hpp"

namespace teachbot {

struct QueryBatch {
  std::vector<TaskSpaceState> states;
  std::uint64_t seed = 0;
  FeatureMap feature_map;
  double condition_number = 0.0;

  bool operator==(const QueryBatch& o) const {
    return states == o.states && seed == o.seed && feature_map == o.feature_map &&
           condition_number == o.condition_number;
  }
};

inline constexpr double kDefaultKappaMax = 100.0;
inline constexpr int kMaxCandidateAttempts = 10'000;
inline constexpr int kMaxBatchRestarts = 8;

/// Produces candidate query states; the default draws uniformly from the
/// skill workspace with velocities uniform in [-1, 1] m/s (force skills only).
using CandidateSource = std::function<TaskSpaceState()>;

/// Stacks phi(x_n)^T as rows.
Eigen::MatrixXd feature_matrix(FeatureMap fm, std::span<const TaskSpaceState> states);

/// sigma_max / sigma_min, +inf for rank-deficient input.
double condition_number(const Eigen::MatrixXd& m);

/// Picks dim(phi) query states one at a time. A candidate is kept only if the
/// partial feature matrix with the candidate appended stays within
/// `kappa_max` in condition number. Deterministic in (skill, seed).
/// A row that finds no candidate within kMaxCandidateAttempts draws restarts
/// the batch; GenerationExhausted after kMaxBatchRestarts restarts.
QueryBatch generate_query_states(const Skill& skill, std::uint64_t seed, double kappa_max = kDefaultKappaMax);

/// Same acceptance rule over an arbitrary candidate stream.
QueryBatch generate_query_states(const Skill& skill, std::uint64_t seed, double kappa_max,
                                 const CandidateSource& source);

}  // namespace teachbot
