#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "teachbot/dynamics.hpp"
#include "teachbot/guidance.hpp"
#include "teachbot/learner.hpp"
#include "teachbot/query_gen.hpp"
#include "teachbot/skill.hpp"

namespace teachbot {

enum class Group { Target, Control };
enum class Embodiment { SimArm, KinematicArm };

/// P1 skill 1 baseline, P2 skill 2 baseline, P3 skill 1 training (guidance
/// for the target group), P4 skill 1 retention, P5 skill 2 transfer.
enum class Phase { P1 = 1, P2 = 2, P3 = 3, P4 = 4, P5 = 5 };

enum class SessionStatus {
  AwaitingAction,
  /// Guidance for the latest demonstration is on screen; the next query state
  /// is pending and the next action is accepted.
  ShowingGuidance,
  ShowingReplay,
  Finished,
};

std::string_view to_string(Group g);
std::string_view to_string(Embodiment e);
std::string_view to_string(Phase p);
std::string_view to_string(SessionStatus s);
Group group_from_string(std::string_view s);
Embodiment embodiment_from_string(std::string_view s);
Phase phase_from_string(std::string_view s);

int episodes_in(Phase p);
inline constexpr int kEpisodesPerSession = 12;

/// Query-batch seed for an episode; fixed offsets keep phases disjoint.
std::uint64_t episode_seed(std::uint64_t session_seed, Phase p, int episode);

FeatureMap feature_map_for(Embodiment e);

struct SessionConfig {
  Group group = Group::Target;
  Embodiment embodiment = Embodiment::SimArm;
  std::uint64_t seed = 0;
  double lambda = 1e-6;
  double kappa_max = kDefaultKappaMax;
  std::string skill1_id;
  std::string skill2_id;
  /// Fixed start and length of the skill-reproduction playback.
  TaskSpaceState replay_start;
  double replay_duration = 10.0;

  /// Built-in skills, replay start and duration for the embodiment.
  static SessionConfig defaults(Embodiment e, Group g, std::uint64_t seed);
};

/// Integration steps per stored sample for the sim arm (1 kHz -> 50 Hz).
inline constexpr int kSimReplayDecimation = 20;

/// Plays back learnt parameters from the configured start.
Trajectory reproduce_skill(const SessionConfig& cfg, const SkillParameters& learnt);

struct EpisodeRecord {
  Phase phase = Phase::P1;
  int episode = 1;
  std::string skill_id;
  QueryBatch batch;
  std::vector<ActionVector> actions;
  SkillParameters learnt;
  double error_e = 0.0;
  Trajectory replay;
  bool guidance_shown = false;
  std::int64_t started_at_ms = 0;
  std::vector<std::int64_t> action_times_ms;
  std::int64_t finished_at_ms = 0;
};

struct SummaryRow {
  Phase phase = Phase::P1;
  int episode = 1;
  double error_e = 0.0;

  bool operator==(const SummaryRow&) const = default;
};

/// Milliseconds since the Unix epoch.
using Clock = std::function<std::int64_t()>;
std::int64_t system_clock_ms();

/// One participant's pass through P1..P5. Transitions either complete or
/// throw without changing the session.
class Session {
 public:
  /// Begins at P1 E1 with a fresh query batch for skill 1.
  explicit Session(SessionConfig cfg, const SkillRegistry& skills = SkillRegistry::builtin(),
                   Clock clock = system_clock_ms);

  /// Restores a session from stored episodes, positioned at the start of the
  /// episode after the last record.
  static Session restore(SessionConfig cfg, std::vector<EpisodeRecord> records,
                         const SkillRegistry& skills = SkillRegistry::builtin(), Clock clock = system_clock_ms);

  const SessionConfig& config() const { return cfg_; }
  Phase phase() const { return phase_; }
  int episode() const { return episode_; }
  int demo_index() const { return static_cast<int>(actions_.size()); }
  int effort_budget() const { return skill1_.feature_map.dim(); }
  SessionStatus status() const { return status_; }
  const QueryBatch& current_batch() const { return batch_; }
  /// The query state awaiting an action. Throws ProtocolOrderError otherwise.
  const TaskSpaceState& pending_state() const;
  std::string_view current_skill_id() const;
  bool guidance_active() const { return cfg_.group == Group::Target && phase_ == Phase::P3; }

  const std::vector<EpisodeRecord>& records() const { return records_; }

  /// Records one demonstration. Returns guidance only for target-group P3
  /// episodes; the last demonstration of an episode triggers learning and
  /// playback and moves to ShowingReplay.
  std::optional<GuidanceFrame> submit(const ActionVector& u);

  /// Leaves the replay screen for the next episode, the next phase or Finished.
  void acknowledge_replay();

  std::vector<SummaryRow> summary() const;

 private:
  Session(SessionConfig cfg, Skill s1, Skill s2, Clock clock);
  const Skill& current_skill() const;
  void start_episode();

  SessionConfig cfg_;
  Skill skill1_;
  Skill skill2_;
  Clock clock_;
  Phase phase_ = Phase::P1;
  int episode_ = 1;
  SessionStatus status_ = SessionStatus::AwaitingAction;
  QueryBatch batch_;
  std::vector<ActionVector> actions_;
  std::vector<std::int64_t> action_times_;
  std::int64_t episode_started_ms_ = 0;
  std::vector<EpisodeRecord> records_;
};

std::vector<SummaryRow> session_summary(const Session& s);

/// Stacks an episode's query states and actions into a learner data set.
DemonstrationSet episode_demonstrations(const EpisodeRecord& rec, const Skill& skill);

/// Re-derives error_e for a stored episode from its batch and actions.
double recompute_error(const EpisodeRecord& rec, const Skill& skill, double lambda);

}  // namespace teachbot
