#include "teachbot/session_log.hpp"

#include <zlib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include "teachbot/error.hpp"
#include "teachbot/json_io.hpp"

namespace teachbot {

namespace fs = std::filesystem;

std::string iso8601_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

SessionLog make_session_log(const Session& session, std::string session_id, std::string created_at) {
  SessionLog log;
  log.session_id = std::move(session_id);
  log.created_at = std::move(created_at);
  log.config = session.config();
  const SkillRegistry& reg = SkillRegistry::builtin();
  for (const auto& id : {session.config().skill1_id, session.config().skill2_id}) {
    if (reg.contains(id)) log.skills.push_back(reg.find(id));
  }
  log.episodes = session.records();
  return log;
}

std::string serialize_session(const SessionLog& log) {
  const json j{{"format_version", log.format_version},
               {"session_id", log.session_id},
               {"created_at", log.created_at},
               {"config", log.config},
               {"skills", log.skills},
               {"episodes", log.episodes}};
  return j.dump();
}

SessionLog parse_session(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!j.is_object() || !j.contains("format_version") || !j["format_version"].is_number_integer()) {
    throw ParseError("session log has no integer format_version", 0);
  }
  const int version = j["format_version"].get<int>();
  if (version != kSessionLogFormatVersion) throw UnsupportedVersion(version);

  try {
    SessionLog log;
    log.format_version = version;
    log.session_id = j.at("session_id").get<std::string>();
    log.created_at = j.value("created_at", std::string{});
    log.config = j.at("config").get<SessionConfig>();
    if (j.contains("skills")) log.skills = j.at("skills").get<std::vector<Skill>>();
    log.episodes = j.at("episodes").get<std::vector<EpisodeRecord>>();
    return log;
  } catch (const json::exception& e) {
    throw ParseError(std::string("session log schema: ") + e.what(), std::string::npos);
  } catch (const InvalidInput& e) {
    throw ParseError(std::string("session log schema: ") + e.what(), std::string::npos);
  }
}

std::string read_file(const fs::path& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) throw IoError("cannot open " + path.string());
  std::string out;
  char buf[1 << 16];
  int n = 0;
  while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
  int errnum = 0;
  const char* msg = gzerror(f, &errnum);
  const bool failed = n < 0 || (errnum != Z_OK && errnum != Z_BUF_ERROR);
  const std::string err = msg ? msg : "";
  gzclose(f);
  if (failed) throw IoError("read failed for " + path.string() + ": " + err);
  return out;
}

void write_file_atomic(const fs::path& path, std::string_view data) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  if (path.extension() == ".gz") {
    gzFile f = gzopen(tmp.c_str(), "wb");
    if (f == nullptr) throw IoError("cannot write " + tmp.string());
    const bool ok = data.empty() || gzwrite(f, data.data(), static_cast<unsigned>(data.size())) > 0;
    if (gzclose(f) != Z_OK || !ok) throw IoError("gzip write failed for " + tmp.string());
  } else {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.close();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void save_session(const SessionLog& log, const fs::path& path) { write_file_atomic(path, serialize_session(log)); }

SessionLog load_session(const fs::path& path) { return parse_session(read_file(path)); }

fs::path session_path(const fs::path& root, std::string_view session_id, bool gzip) {
  return root / "sessions" / (std::string(session_id) + (gzip ? ".json.gz" : ".json"));
}

double ReplayReport::max_delta() const {
  return std::max({max_error_delta, max_parameter_delta, max_trajectory_delta});
}

namespace {

double trajectory_delta(const Trajectory& a, const Trajectory& b) {
  if (a.samples.size() != b.samples.size() || a.diverged != b.diverged) {
    return std::numeric_limits<double>::infinity();
  }
  double d = std::abs(a.dt - b.dt);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const auto& x = a.samples[i];
    const auto& y = b.samples[i];
    d = std::max({d, std::abs(x.t - y.t), (x.state.position - y.state.position).cwiseAbs().maxCoeff(),
                  (x.state.velocity - y.state.velocity).cwiseAbs().maxCoeff(),
                  (x.action - y.action).cwiseAbs().maxCoeff()});
  }
  return d;
}

}  // namespace

ReplayReport replay_verify(const SessionLog& log) {
  SkillRegistry skills;
  for (const auto& s : builtin_skills()) skills.add(s);
  for (const auto& s : log.skills) skills.add(s);

  constexpr double kInf = std::numeric_limits<double>::infinity();
  ReplayReport report;
  for (const auto& rec : log.episodes) {
    EpisodeDelta d;
    d.phase = rec.phase;
    d.episode = rec.episode;
    d.stored_error = rec.error_e;
    try {
      const Skill& skill = skills.find(rec.skill_id);
      const SkillParameters learnt = fit(episode_demonstrations(rec, skill), LearnerConfig{log.config.lambda});
      d.recomputed_error = teaching_risk(learnt, skill.target);
      d.error_delta = std::abs(d.recomputed_error - d.stored_error);
      d.parameter_delta = learnt.dim() == rec.learnt.dim()
                              ? (learnt.vec() - rec.learnt.vec()).cwiseAbs().maxCoeff()
                              : kInf;
      d.trajectory_delta = trajectory_delta(reproduce_skill(log.config, learnt), rec.replay);
    } catch (const Error&) {
      d.recomputed_error = std::numeric_limits<double>::quiet_NaN();
      d.error_delta = d.parameter_delta = d.trajectory_delta = kInf;
    }
    if (std::isnan(d.error_delta)) d.error_delta = kInf;
    report.max_error_delta = std::max(report.max_error_delta, d.error_delta);
    report.max_parameter_delta = std::max(report.max_parameter_delta, d.parameter_delta);
    report.max_trajectory_delta = std::max(report.max_trajectory_delta, d.trajectory_delta);
    report.episodes.push_back(d);
  }
  return report;
}

}  // namespace teachbot
