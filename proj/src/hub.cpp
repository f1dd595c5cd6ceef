#include "teachbot/hub.hpp"

#include <fmt/format.h>

#include "teachbot/error.hpp"
#include "teachbot/session_log.hpp"
#include "teachbot/teacher.hpp"

namespace teachbot {

std::string_view to_string(Assignment a) {
  switch (a) {
    case Assignment::Alternate: return "alternate";
    case Assignment::AllTarget: return "target";
    case Assignment::AllControl: return "control";
  }
  return "?";
}

Assignment assignment_from_string(std::string_view s) {
  if (s == "alternate") return Assignment::Alternate;
  if (s == "target") return Assignment::AllTarget;
  if (s == "control") return Assignment::AllControl;
  throw InvalidInput("unknown assignment '" + std::string(s) + "'");
}

HubConfig hub_config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!j.is_object()) throw ParseError("config must be a JSON object", 0);
  HubConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.lambda = j.value("lambda", c.lambda);
    c.kappa_max = j.value("kappa_max", c.kappa_max);
    if (j.contains("embodiments") && !j["embodiments"].empty()) {
      c.default_embodiment = embodiment_from_string(j["embodiments"][0].get<std::string>());
    }
    if (j.contains("assignment")) c.assignment = assignment_from_string(j["assignment"].get<std::string>());
    if (j.contains("log_dir")) c.log_dir = j["log_dir"].get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("server config: ") + e.what(), std::string::npos);
  }
  return c;
}

json error_message(std::string_view session_id, std::string_view code, std::string_view message) {
  return json{{"type", "Error"}, {"session_id", session_id}, {"payload", {{"code", code}, {"message", message}}}};
}

json query_state_message(std::string_view session_id, const Session& s) {
  return json{{"type", "QueryState"},
              {"session_id", session_id},
              {"payload",
               {{"phase", to_string(s.phase())},
                {"episode", s.episode()},
                {"index", s.demo_index()},
                {"state", s.pending_state()},
                {"effort_used", s.demo_index()},
                {"effort_budget", s.effort_budget()}}}};
}

json replay_message(std::string_view session_id, const EpisodeRecord& rec) {
  return json{{"type", "Replay"},
              {"session_id", session_id},
              {"payload", {{"phase", to_string(rec.phase)}, {"episode", rec.episode}, {"trajectory", rec.replay}}}};
}

namespace {

json phase_changed(std::string_view id, const Session& s) {
  return json{{"type", "PhaseChanged"},
              {"session_id", id},
              {"payload",
               {{"phase", to_string(s.phase())},
                {"episode", s.episode()},
                {"skill_id", s.current_skill_id()},
                {"episodes_in_phase", episodes_in(s.phase())}}}};
}

json session_started(std::string_view id, const Session& s) {
  const auto& c = s.config();
  const SkillRegistry& reg = SkillRegistry::builtin();
  // Deliberately omits the group.
  return json{{"type", "SessionStarted"},
              {"session_id", id},
              {"payload",
               {{"embodiment", to_string(c.embodiment)},
                {"skills",
                 {{{"id", c.skill1_id}, {"name", reg.find(c.skill1_id).name}},
                  {{"id", c.skill2_id}, {"name", reg.find(c.skill2_id).name}}}},
                {"effort_budget", s.effort_budget()},
                {"episodes_total", kEpisodesPerSession},
                {"replay_start", c.replay_start},
                {"replay_duration", c.replay_duration}}}};
}

json session_finished(std::string_view id, const Session& s) {
  return json{{"type", "SessionFinished"},
              {"session_id", id},
              {"payload", {{"episodes", static_cast<int>(s.records().size())}}}};
}

std::string error_code(const Error& e) { return std::string(to_string(e.kind())); }

}  // namespace

SessionHub::SessionHub(HubConfig cfg, Clock clock) : cfg_(std::move(cfg)), clock_(std::move(clock)) {}

std::size_t SessionHub::session_count() const {
  const std::lock_guard lock(mutex_);
  return sessions_.size();
}

std::optional<Group> SessionHub::group_of(std::string_view session_id) const {
  const std::lock_guard lock(mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second->session.config().group;
}

std::shared_ptr<SessionHub::Entry> SessionHub::find(const std::string& id) const {
  const std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

void SessionHub::persist(const Entry& e) const {
  if (cfg_.log_dir.empty()) return;
  SessionLog log;
  log.session_id = e.id;
  log.created_at = e.created_at;
  log.config = e.session.config();
  const SkillRegistry& reg = SkillRegistry::builtin();
  log.skills = {reg.find(log.config.skill1_id), reg.find(log.config.skill2_id)};
  log.episodes = e.session.records();
  save_session(log, session_path(cfg_.log_dir, e.id));
}

std::shared_ptr<SessionHub::Entry> SessionHub::load_from_disk(const std::string& id) {
  if (cfg_.log_dir.empty() || id.empty() || id.find_first_of("/\\.") != std::string::npos) return nullptr;
  const auto path = session_path(cfg_.log_dir, id);
  if (!std::filesystem::exists(path)) return nullptr;
  auto log = load_session(path);
  auto entry = std::make_shared<Entry>(id, log.created_at,
                                       Session::restore(log.config, std::move(log.episodes), SkillRegistry::builtin(), clock_));
  const std::lock_guard lock(mutex_);
  auto [it, inserted] = sessions_.try_emplace(id, entry);
  return it->second;
}

std::vector<json> SessionHub::handle_text(Connection& conn, std::string_view line) {
  json msg;
  try {
    msg = json::parse(line.begin(), line.end());
  } catch (const json::parse_error& e) {
    return {error_message(conn.session_id, to_string(ErrorKind::Parse), fmt::format("malformed JSON at byte {}", e.byte))};
  }
  return handle(conn, msg);
}

std::vector<json> SessionHub::handle(Connection& conn, const json& msg) {
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
    return {error_message(conn.session_id, "invalid-input", "message needs a string 'type'")};
  }
  const std::string type = msg["type"].get<std::string>();
  const json payload = msg.contains("payload") ? msg["payload"] : json::object();
  if (!payload.is_object()) return {error_message(conn.session_id, "invalid-input", "payload must be an object")};

  try {
    if (type == "StartSession") return start(conn, payload);
    if (type == "Resume") {
      std::string id;
      if (msg.contains("session_id") && msg["session_id"].is_string()) id = msg["session_id"].get<std::string>();
      if (payload.contains("session_id") && payload["session_id"].is_string()) id = payload["session_id"].get<std::string>();
      return resume(conn, id);
    }
    if (type != "SubmitAction" && type != "AcknowledgeReplay") {
      return {error_message(conn.session_id, "invalid-input", "unknown message type '" + type + "'")};
    }
    if (conn.session_id.empty()) {
      return {error_message("", "protocol-order", type + " before StartSession or Resume")};
    }
    if (msg.contains("session_id") && msg["session_id"].is_string() &&
        msg["session_id"].get<std::string>() != conn.session_id) {
      return {error_message(conn.session_id, "protocol-order", "message addressed to another session")};
    }
    auto entry = find(conn.session_id);
    if (!entry) return {error_message(conn.session_id, "protocol-order", "session no longer exists")};
    const std::lock_guard lock(entry->mutex);
    return type == "SubmitAction" ? submit(*entry, payload) : acknowledge(*entry);
  } catch (const Error& e) {
    return {error_message(conn.session_id, error_code(e), e.what())};
  } catch (const json::exception& e) {
    return {error_message(conn.session_id, "invalid-input", e.what())};
  } catch (const std::exception& e) {
    return {error_message(conn.session_id, "internal", e.what())};
  }
}

std::vector<json> SessionHub::start(Connection& conn, const json& payload) {
  if (!conn.session_id.empty()) {
    return {error_message(conn.session_id, "protocol-order", "connection already has a session")};
  }
  if (payload.contains("group")) {
    return {error_message("", "invalid-input", "group is assigned by the server")};
  }
  Embodiment emb = cfg_.default_embodiment;
  if (payload.contains("embodiment")) emb = embodiment_from_string(payload["embodiment"].get<std::string>());

  std::uint64_t n = 0;
  {
    const std::lock_guard lock(mutex_);
    n = started_++;
  }
  Group group = Group::Target;
  switch (cfg_.assignment) {
    case Assignment::Alternate: group = n % 2 == 0 ? Group::Target : Group::Control; break;
    case Assignment::AllTarget: group = Group::Target; break;
    case Assignment::AllControl: group = Group::Control; break;
  }
  const std::uint64_t seed = mix_seed(cfg_.seed + n);
  SessionConfig sc = SessionConfig::defaults(emb, group, seed);
  sc.lambda = cfg_.lambda;
  sc.kappa_max = cfg_.kappa_max;

  std::string id = fmt::format("s{:016x}", mix_seed(seed));
  auto entry = std::make_shared<Entry>(id, iso8601_now(), Session(sc, SkillRegistry::builtin(), clock_));
  {
    const std::lock_guard lock(mutex_);
    sessions_.emplace(id, entry);
  }
  conn.session_id = id;
  const std::lock_guard lock(entry->mutex);
  persist(*entry);
  return {session_started(id, entry->session), phase_changed(id, entry->session), query_state_message(id, entry->session)};
}

std::vector<json> SessionHub::resume(Connection& conn, const std::string& id) {
  if (id.empty()) return {error_message(conn.session_id, "invalid-input", "Resume needs a session_id")};
  if (!conn.session_id.empty() && conn.session_id != id) {
    return {error_message(conn.session_id, "protocol-order", "connection already has a different session")};
  }
  auto entry = find(id);
  if (!entry) entry = load_from_disk(id);
  if (!entry) return {error_message(id, "unknown-session", "no session with id '" + id + "'")};
  conn.session_id = id;

  const std::lock_guard lock(entry->mutex);
  const Session& s = entry->session;
  std::vector<json> out{session_started(id, s), phase_changed(id, s)};
  switch (s.status()) {
    case SessionStatus::AwaitingAction:
    case SessionStatus::ShowingGuidance: out.push_back(query_state_message(id, s)); break;
    case SessionStatus::ShowingReplay: out.push_back(replay_message(id, s.records().back())); break;
    case SessionStatus::Finished: out.push_back(session_finished(id, s)); break;
  }
  return out;
}

std::vector<json> SessionHub::submit(Entry& e, const json& payload) {
  if (!payload.contains("u")) throw InvalidInput("SubmitAction needs payload.u");
  const ActionVector u = vec2_from_json(payload["u"]);
  Session& s = e.session;
  const auto guidance = s.submit(u);
  std::vector<json> out;
  if (guidance) out.push_back(json{{"type", "Guidance"}, {"session_id", e.id}, {"payload", *guidance}});
  if (s.status() == SessionStatus::ShowingReplay) {
    persist(e);
    out.push_back(replay_message(e.id, s.records().back()));
  } else {
    out.push_back(query_state_message(e.id, s));
  }
  return out;
}

std::vector<json> SessionHub::acknowledge(Entry& e) {
  Session& s = e.session;
  const Phase before = s.phase();
  s.acknowledge_replay();
  if (s.status() == SessionStatus::Finished) return {session_finished(e.id, s)};
  std::vector<json> out;
  if (s.phase() != before) out.push_back(phase_changed(e.id, s));
  out.push_back(query_state_message(e.id, s));
  return out;
}

}  // namespace teachbot
