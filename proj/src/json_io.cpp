#include "teachbot/json_io.hpp"

#include <cmath>
#include <limits>

#include "teachbot/error.hpp"

namespace teachbot {

json vec2_to_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

Vec2 vec2_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidInput("expected a 2-vector");
  return {j[0].get<double>(), j[1].get<double>()};
}

void to_json(json& j, const TaskSpaceState& s) {
  j = json{{"position", vec2_to_json(s.position)}, {"velocity", vec2_to_json(s.velocity)}};
}

void from_json(const json& j, TaskSpaceState& s) {
  s.position = vec2_from_json(j.at("position"));
  s.velocity = j.contains("velocity") ? vec2_from_json(j.at("velocity")) : Vec2::Zero();
}

void to_json(json& j, const Workspace& w) {
  j = json{{"lower", vec2_to_json(w.lower)}, {"upper", vec2_to_json(w.upper)}};
  j["max_radius"] = std::isinf(w.max_radius) ? json(nullptr) : json(w.max_radius);
}

void from_json(const json& j, Workspace& w) {
  w.lower = vec2_from_json(j.at("lower"));
  w.upper = vec2_from_json(j.at("upper"));
  const auto& r = j.at("max_radius");
  w.max_radius = r.is_null() ? std::numeric_limits<double>::infinity() : r.get<double>();
}

namespace {

json params_to_json(const SkillParameters& p) {
  const Eigen::VectorXd v = p.vec();
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

SkillParameters params_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return SkillParameters::unvec(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

}  // namespace

void to_json(json& j, const Skill& s) {
  j = json{{"id", s.id},
           {"name", s.name},
           {"feature_map", to_string(s.feature_map.kind)},
           {"target_vec", params_to_json(s.target)},
           {"workspace", s.workspace},
           {"action_cap", s.action_cap},
           {"action_scale", s.action_scale}};
}

void from_json(const json& j, Skill& s) {
  s.id = j.at("id").get<std::string>();
  s.name = j.value("name", std::string{});
  s.feature_map = FeatureMap{feature_kind_from_string(j.at("feature_map").get<std::string>())};
  s.target = params_from_json(j.at("target_vec"));
  s.workspace = j.at("workspace").get<Workspace>();
  s.action_cap = j.at("action_cap").get<double>();
  s.action_scale = j.at("action_scale").get<double>();
  if (s.target.dim() != s.feature_map.dim()) throw InvalidInput("skill '" + s.id + "' has mismatched dims");
}

void to_json(json& j, const QueryBatch& b) {
  j = json{{"seed", b.seed},
           {"feature_map", to_string(b.feature_map.kind)},
           {"condition_number", b.condition_number},
           {"states", b.states}};
}

void from_json(const json& j, QueryBatch& b) {
  b.seed = j.at("seed").get<std::uint64_t>();
  b.feature_map = FeatureMap{feature_kind_from_string(j.at("feature_map").get<std::string>())};
  b.condition_number = j.at("condition_number").get<double>();
  b.states = j.at("states").get<std::vector<TaskSpaceState>>();
}

void to_json(json& j, const Trajectory& t) {
  json samples = json::array();
  for (const auto& s : t.samples) {
    samples.push_back({s.t, s.state.position.x(), s.state.position.y(), s.state.velocity.x(), s.state.velocity.y(),
                       s.action.x(), s.action.y()});
  }
  j = json{{"dt", t.dt}, {"diverged", t.diverged}, {"samples", std::move(samples)}};
}

void from_json(const json& j, Trajectory& t) {
  t.dt = j.at("dt").get<double>();
  t.diverged = j.value("diverged", false);
  t.samples.clear();
  for (const auto& row : j.at("samples")) {
    if (!row.is_array() || row.size() != 7) throw InvalidInput("trajectory sample must have 7 entries");
    TrajectorySample s;
    s.t = row[0].get<double>();
    s.state.position = Vec2(row[1].get<double>(), row[2].get<double>());
    s.state.velocity = Vec2(row[3].get<double>(), row[4].get<double>());
    s.action = Vec2(row[5].get<double>(), row[6].get<double>());
    t.samples.push_back(s);
  }
}

void to_json(json& j, const GuidanceFrame& g) {
  json recs = json::array();
  for (const auto& r : g.per_state) {
    recs.push_back(json{{"state", r.state},
                        {"user_action", vec2_to_json(r.user_action)},
                        {"optimal_action", vec2_to_json(r.optimal_action)},
                        {"residual_norm", r.residual_norm}});
  }
  j = json{{"per_state", std::move(recs)},
           {"episode_r2", g.episode_r2},
           {"effort_used", g.effort_used},
           {"effort_budget", g.effort_budget}};
}

void from_json(const json& j, GuidanceFrame& g) {
  g.per_state.clear();
  for (const auto& r : j.at("per_state")) {
    GuidanceRecord rec;
    rec.state = r.at("state").get<TaskSpaceState>();
    rec.user_action = vec2_from_json(r.at("user_action"));
    rec.optimal_action = vec2_from_json(r.at("optimal_action"));
    rec.residual_norm = r.at("residual_norm").get<double>();
    g.per_state.push_back(rec);
  }
  g.episode_r2 = j.at("episode_r2").get<double>();
  g.effort_used = j.at("effort_used").get<int>();
  g.effort_budget = j.at("effort_budget").get<int>();
}

void to_json(json& j, const SessionConfig& c) {
  j = json{{"group", to_string(c.group)},
           {"embodiment", to_string(c.embodiment)},
           {"seed", c.seed},
           {"lambda", c.lambda},
           {"kappa_max", c.kappa_max},
           {"skill1_id", c.skill1_id},
           {"skill2_id", c.skill2_id},
           {"replay_start", c.replay_start},
           {"replay_duration", c.replay_duration}};
}

void from_json(const json& j, SessionConfig& c) {
  c.group = group_from_string(j.at("group").get<std::string>());
  c.embodiment = embodiment_from_string(j.at("embodiment").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.lambda = j.at("lambda").get<double>();
  c.kappa_max = j.at("kappa_max").get<double>();
  c.skill1_id = j.at("skill1_id").get<std::string>();
  c.skill2_id = j.at("skill2_id").get<std::string>();
  c.replay_start = j.at("replay_start").get<TaskSpaceState>();
  c.replay_duration = j.at("replay_duration").get<double>();
}

void to_json(json& j, const EpisodeRecord& r) {
  json actions = json::array();
  for (const auto& u : r.actions) actions.push_back(vec2_to_json(u));
  j = json{{"phase", to_string(r.phase)},
           {"episode", r.episode},
           {"skill_id", r.skill_id},
           {"batch", r.batch},
           {"actions", std::move(actions)},
           {"learnt", params_to_json(r.learnt)},
           {"error_e", r.error_e},
           {"guidance_shown", r.guidance_shown},
           {"replay", r.replay},
           {"timestamps",
            {{"started_at_ms", r.started_at_ms},
             {"action_times_ms", r.action_times_ms},
             {"finished_at_ms", r.finished_at_ms}}}};
}

void from_json(const json& j, EpisodeRecord& r) {
  r.phase = phase_from_string(j.at("phase").get<std::string>());
  r.episode = j.at("episode").get<int>();
  r.skill_id = j.at("skill_id").get<std::string>();
  r.batch = j.at("batch").get<QueryBatch>();
  r.actions.clear();
  for (const auto& u : j.at("actions")) r.actions.push_back(vec2_from_json(u));
  r.learnt = params_from_json(j.at("learnt"));
  r.error_e = j.at("error_e").get<double>();
  r.guidance_shown = j.at("guidance_shown").get<bool>();
  r.replay = j.at("replay").get<Trajectory>();
  const auto& ts = j.at("timestamps");
  r.started_at_ms = ts.at("started_at_ms").get<std::int64_t>();
  r.action_times_ms = ts.at("action_times_ms").get<std::vector<std::int64_t>>();
  r.finished_at_ms = ts.at("finished_at_ms").get<std::int64_t>();
}

}  // namespace teachbot
