#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "teachbot/json_io.hpp"
#include "teachbot/protocol.hpp"

namespace teachbot {

/// How StartSession picks a group; the client never chooses.
enum class Assignment { Alternate, AllTarget, AllControl };

std::string_view to_string(Assignment a);
Assignment assignment_from_string(std::string_view s);

struct HubConfig {
  std::uint64_t seed = 1;
  double lambda = 1e-6;
  double kappa_max = kDefaultKappaMax;
  Embodiment default_embodiment = Embodiment::SimArm;
  Assignment assignment = Assignment::Alternate;
  /// Session logs go to log_dir/sessions/<id>.json; empty disables persistence.
  std::filesystem::path log_dir;
};

/// Reads "server" settings from an experiment config file. Unknown keys are
/// ignored so one file can drive both `batch` and `serve`.
HubConfig hub_config_from_json(std::string_view text);

/// Per-connection state: the session the connection is attached to.
struct Connection {
  std::string session_id;
};

/// Owns all live sessions and translates protocol messages into session
/// operations. Messages for one session are serialized; distinct sessions
/// proceed in parallel.
class SessionHub {
 public:
  explicit SessionHub(HubConfig cfg, Clock clock = system_clock_ms);

  /// Handles one message and returns the replies in order. Never throws for
  /// client mistakes; those come back as Error messages.
  std::vector<json> handle(Connection& conn, const json& msg);
  std::vector<json> handle_text(Connection& conn, std::string_view line);

  std::size_t session_count() const;
  const HubConfig& config() const { return cfg_; }

  /// Hidden from clients; exposed for tests and operators.
  std::optional<Group> group_of(std::string_view session_id) const;

 private:
  struct Entry {
    std::mutex mutex;
    std::string id;
    std::string created_at;
    Session session;
    Entry(std::string i, std::string c, Session s) : id(std::move(i)), created_at(std::move(c)), session(std::move(s)) {}
  };

  std::vector<json> start(Connection& conn, const json& payload);
  std::vector<json> resume(Connection& conn, const std::string& id);
  std::vector<json> submit(Entry& e, const json& payload);
  std::vector<json> acknowledge(Entry& e);
  std::shared_ptr<Entry> find(const std::string& id) const;
  std::shared_ptr<Entry> load_from_disk(const std::string& id);
  void persist(const Entry& e) const;

  HubConfig cfg_;
  Clock clock_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>, std::less<>> sessions_;
  std::uint64_t started_ = 0;
};

/// Builders for server-to-client messages.
json error_message(std::string_view session_id, std::string_view code, std::string_view message);
json query_state_message(std::string_view session_id, const Session& s);
json replay_message(std::string_view session_id, const EpisodeRecord& rec);

}  // namespace teachbot
