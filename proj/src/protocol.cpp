#include "teachbot/protocol.hpp"

#include <chrono>
#include <cmath>

#include "teachbot/error.hpp"

namespace teachbot {

std::string_view to_string(Group g) { return g == Group::Target ? "Target" : "Control"; }

std::string_view to_string(Embodiment e) { return e == Embodiment::SimArm ? "SimArm" : "KinematicArm"; }

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::P1: return "P1";
    case Phase::P2: return "P2";
    case Phase::P3: return "P3";
    case Phase::P4: return "P4";
    case Phase::P5: return "P5";
  }
  return "?";
}

std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::AwaitingAction: return "AwaitingAction";
    case SessionStatus::ShowingGuidance: return "ShowingGuidance";
    case SessionStatus::ShowingReplay: return "ShowingReplay";
    case SessionStatus::Finished: return "Finished";
  }
  return "?";
}

Group group_from_string(std::string_view s) {
  if (s == "Target") return Group::Target;
  if (s == "Control") return Group::Control;
  throw InvalidInput("unknown group '" + std::string(s) + "'");
}

Embodiment embodiment_from_string(std::string_view s) {
  if (s == "SimArm") return Embodiment::SimArm;
  if (s == "KinematicArm") return Embodiment::KinematicArm;
  throw InvalidInput("unknown embodiment '" + std::string(s) + "'");
}

Phase phase_from_string(std::string_view s) {
  for (Phase p : {Phase::P1, Phase::P2, Phase::P3, Phase::P4, Phase::P5}) {
    if (to_string(p) == s) return p;
  }
  throw InvalidInput("unknown phase '" + std::string(s) + "'");
}

int episodes_in(Phase p) { return p == Phase::P3 ? 8 : 1; }

std::uint64_t episode_seed(std::uint64_t session_seed, Phase p, int episode) {
  return session_seed + static_cast<std::uint64_t>(p) * 10007u + static_cast<std::uint64_t>(episode);
}

FeatureMap feature_map_for(Embodiment e) {
  return FeatureMap{e == Embodiment::SimArm ? FeatureKind::ForceControl5 : FeatureKind::Kinematic3};
}

SessionConfig SessionConfig::defaults(Embodiment e, Group g, std::uint64_t seed) {
  SessionConfig c;
  c.group = g;
  c.embodiment = e;
  c.seed = seed;
  if (e == Embodiment::SimArm) {
    c.skill1_id = std::string(skill_ids::kSimPoint);
    c.skill2_id = std::string(skill_ids::kSimLine);
    c.replay_start.position = Vec2(0.0, 1.5);
  } else {
    c.skill1_id = std::string(skill_ids::kPhysPoint);
    c.skill2_id = std::string(skill_ids::kPhysLine);
    c.replay_start.position = Vec2(10.0, -5.0);
  }
  c.replay_duration = 10.0;
  return c;
}

Trajectory reproduce_skill(const SessionConfig& cfg, const SkillParameters& learnt) {
  const FeatureMap fm = feature_map_for(cfg.embodiment);
  if (cfg.embodiment == Embodiment::SimArm) {
    return rollout(ArmModel{}, learnt, fm, cfg.replay_start, cfg.replay_duration, kSimReplayDecimation);
  }
  return rollout(KinematicModel{}, learnt, fm, cfg.replay_start, cfg.replay_duration);
}

std::int64_t system_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

namespace {

const Skill& resolve(const SkillRegistry& skills, const std::string& id, Embodiment e) {
  const Skill& s = skills.find(id);
  if (!(s.feature_map == feature_map_for(e))) {
    throw InvalidInput("skill '" + id + "' does not match embodiment " + std::string(to_string(e)));
  }
  return s;
}

void validate_config(const SessionConfig& cfg) {
  if (!std::isfinite(cfg.lambda) || cfg.lambda < 0.0) throw InvalidInput("lambda must be non-negative");
  if (!(cfg.kappa_max > 1.0)) throw InvalidInput("kappa_max must exceed 1");
  if (!(cfg.replay_duration >= 0.0)) throw InvalidInput("replay duration must be non-negative");
}

}  // namespace

Session::Session(SessionConfig cfg, Skill s1, Skill s2, Clock clock)
    : cfg_(std::move(cfg)), skill1_(std::move(s1)), skill2_(std::move(s2)), clock_(std::move(clock)) {}

Session::Session(SessionConfig cfg, const SkillRegistry& skills, Clock clock)
    : Session(cfg, resolve(skills, cfg.skill1_id, cfg.embodiment), resolve(skills, cfg.skill2_id, cfg.embodiment),
              std::move(clock)) {
  validate_config(cfg_);
  start_episode();
}

Session Session::restore(SessionConfig cfg, std::vector<EpisodeRecord> records, const SkillRegistry& skills,
                         Clock clock) {
  Session s(std::move(cfg), skills, std::move(clock));
  if (records.size() > kEpisodesPerSession) throw InvalidInput("more episode records than the protocol allows");
  Phase p = Phase::P1;
  int ep = 1;
  for (const auto& r : records) {
    if (r.phase != p || r.episode != ep) throw InvalidInput("stored episodes are out of protocol order");
    if (ep < episodes_in(p)) {
      ++ep;
    } else if (p != Phase::P5) {
      p = static_cast<Phase>(static_cast<int>(p) + 1);
      ep = 1;
    }
  }
  s.records_ = std::move(records);
  if (s.records_.size() == kEpisodesPerSession) {
    s.phase_ = Phase::P5;
    s.episode_ = 1;
    s.status_ = SessionStatus::Finished;
    s.actions_.clear();
    s.action_times_.clear();
  } else {
    s.phase_ = p;
    s.episode_ = ep;
    s.start_episode();
  }
  return s;
}

const Skill& Session::current_skill() const {
  return (phase_ == Phase::P2 || phase_ == Phase::P5) ? skill2_ : skill1_;
}

std::string_view Session::current_skill_id() const { return current_skill().id; }

const TaskSpaceState& Session::pending_state() const {
  if (status_ != SessionStatus::AwaitingAction && status_ != SessionStatus::ShowingGuidance) {
    throw ProtocolOrderError("no query state is pending in status " + std::string(to_string(status_)));
  }
  return batch_.states[actions_.size()];
}

void Session::start_episode() {
  batch_ = generate_query_states(current_skill(), episode_seed(cfg_.seed, phase_, episode_), cfg_.kappa_max);
  actions_.clear();
  action_times_.clear();
  episode_started_ms_ = clock_();
  status_ = SessionStatus::AwaitingAction;
}

std::optional<GuidanceFrame> Session::submit(const ActionVector& u) {
  if (status_ != SessionStatus::AwaitingAction && status_ != SessionStatus::ShowingGuidance) {
    throw ProtocolOrderError("cannot submit an action in status " + std::string(to_string(status_)));
  }
  const Skill& skill = current_skill();
  validate_action(skill, u);

  std::vector<ActionVector> actions = actions_;
  actions.push_back(u);
  std::vector<std::int64_t> times = action_times_;
  times.push_back(clock_());

  std::optional<GuidanceFrame> guidance;
  if (guidance_active()) guidance = build_guidance(skill, batch_, actions);

  if (static_cast<int>(actions.size()) < effort_budget()) {
    actions_ = std::move(actions);
    action_times_ = std::move(times);
    status_ = guidance ? SessionStatus::ShowingGuidance : SessionStatus::AwaitingAction;
    return guidance;
  }

  EpisodeRecord rec;
  rec.phase = phase_;
  rec.episode = episode_;
  rec.skill_id = skill.id;
  rec.batch = batch_;
  rec.actions = std::move(actions);
  rec.guidance_shown = guidance.has_value();
  rec.learnt = fit(episode_demonstrations(rec, skill), LearnerConfig{cfg_.lambda});
  rec.error_e = teaching_risk(rec.learnt, skill.target);
  rec.replay = reproduce_skill(cfg_, rec.learnt);
  rec.started_at_ms = episode_started_ms_;
  rec.action_times_ms = std::move(times);
  rec.finished_at_ms = clock_();

  records_.push_back(std::move(rec));
  actions_ = records_.back().actions;
  action_times_ = records_.back().action_times_ms;
  status_ = SessionStatus::ShowingReplay;
  return guidance;
}

void Session::acknowledge_replay() {
  if (status_ != SessionStatus::ShowingReplay) {
    throw ProtocolOrderError("no replay to acknowledge in status " + std::string(to_string(status_)));
  }
  if (episode_ < episodes_in(phase_)) {
    ++episode_;
  } else if (phase_ == Phase::P5) {
    status_ = SessionStatus::Finished;
    return;
  } else {
    phase_ = static_cast<Phase>(static_cast<int>(phase_) + 1);
    episode_ = 1;
  }
  start_episode();
}

std::vector<SummaryRow> Session::summary() const {
  std::vector<SummaryRow> rows;
  rows.reserve(records_.size());
  for (const auto& r : records_) rows.push_back({r.phase, r.episode, r.error_e});
  return rows;
}

std::vector<SummaryRow> session_summary(const Session& s) { return s.summary(); }

DemonstrationSet episode_demonstrations(const EpisodeRecord& rec, const Skill& skill) {
  if (rec.actions.size() != rec.batch.states.size()) throw InvalidInput("episode actions do not match its batch");
  const auto n = static_cast<Eigen::Index>(rec.actions.size());
  Eigen::MatrixX2d u(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) u.row(i) = rec.actions[static_cast<std::size_t>(i)].transpose();
  return DemonstrationSet{feature_matrix(skill.feature_map, rec.batch.states), std::move(u), skill.id};
}

double recompute_error(const EpisodeRecord& rec, const Skill& skill, double lambda) {
  return teaching_risk(fit(episode_demonstrations(rec, skill), LearnerConfig{lambda}), skill.target);
}

}  // namespace teachbot
