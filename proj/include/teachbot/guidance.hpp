#pragma once

#include <span>
#include <vector>

#include "teachbot/query_gen.hpp"
#include "teachbot/skill.hpp"

namespace teachbot {

struct GuidanceRecord {
  TaskSpaceState state;
  ActionVector user_action = ActionVector::Zero();
  ActionVector optimal_action = ActionVector::Zero();
  double residual_norm = 0.0;
};

/// Post-demonstration feedback: provided vs optimal action for every
/// demonstration given so far in the episode, plus effort progress.
struct GuidanceFrame {
  std::vector<GuidanceRecord> per_state;
  double episode_r2 = 0.0;
  int effort_used = 0;
  int effort_budget = 0;
};

/// Pairs each submitted action with u* at the same query state. Vectors are
/// raw (unscaled); display scaling belongs to the client.
GuidanceFrame build_guidance(const Skill& skill, const QueryBatch& batch, std::span<const ActionVector> submitted);

}  // namespace teachbot
