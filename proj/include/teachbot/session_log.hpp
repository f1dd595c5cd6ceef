#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "teachbot/protocol.hpp"
#include "teachbot/skill.hpp"

namespace teachbot {

inline constexpr int kSessionLogFormatVersion = 1;

/// Everything needed to replay a session offline: configuration, the skill
/// definitions used, and every completed episode.
struct SessionLog {
  int format_version = kSessionLogFormatVersion;
  std::string session_id;
  std::string created_at;  // ISO-8601 UTC
  SessionConfig config;
  std::vector<Skill> skills;
  std::vector<EpisodeRecord> episodes;
};

std::string iso8601_now();

SessionLog make_session_log(const Session& session, std::string session_id, std::string created_at = iso8601_now());

std::string serialize_session(const SessionLog& log);

/// Throws ParseError (with byte offset) for malformed JSON,
/// UnsupportedVersion for an unknown format_version. Unknown fields are ignored.
SessionLog parse_session(std::string_view text);

/// Writes via a temporary file and rename. A ".gz" suffix selects gzip.
void save_session(const SessionLog& log, const std::filesystem::path& path);
SessionLog load_session(const std::filesystem::path& path);

/// `sessions/<session-id>.json` (or `.json.gz`) under `root`.
std::filesystem::path session_path(const std::filesystem::path& root, std::string_view session_id, bool gzip = false);

struct EpisodeDelta {
  Phase phase = Phase::P1;
  int episode = 1;
  double stored_error = 0.0;
  double recomputed_error = 0.0;
  double error_delta = 0.0;
  double parameter_delta = 0.0;   // max |stored - recomputed| over vec(learnt)
  double trajectory_delta = 0.0;  // max abs difference over all replay samples
};

struct ReplayReport {
  std::vector<EpisodeDelta> episodes;
  double max_error_delta = 0.0;
  double max_parameter_delta = 0.0;
  double max_trajectory_delta = 0.0;

  double max_delta() const;
};

/// Refits every episode from its stored batch and actions and replays the
/// recomputed parameters; reports how far stored values are from the
/// recomputation.
ReplayReport replay_verify(const SessionLog& log);

/// Reads raw bytes, transparently handling gzip.
std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

}  // namespace teachbot
