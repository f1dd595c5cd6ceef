#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "teachbot/metrics.hpp"
#include "teachbot/protocol.hpp"
#include "teachbot/teacher.hpp"

namespace teachbot {

/// Declarative description of a synthetic batch experiment. Loaded from the
/// same JSON dialect as session logs; missing keys take the defaults below.
struct ExperimentConfig {
  std::uint64_t seed = 20240611;
  int n_target = 32;
  int n_control = 32;
  std::vector<Embodiment> embodiments{Embodiment::SimArm};
  double lambda = 1e-6;
  double kappa_max = kDefaultKappaMax;
  TeacherPrior teacher;
  bool write_session_logs = true;
  bool gzip = false;
  int jobs = 1;

  void validate() const;
};

ExperimentConfig experiment_config_from_json(std::string_view text);
std::string experiment_config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// One line of episodes.csv.
struct EpisodeRow {
  std::string subject_id;
  Group group = Group::Target;
  Embodiment embodiment = Embodiment::SimArm;
  Phase phase = Phase::P1;
  int episode = 1;
  std::string skill_id;
  double error_e = 0.0;
  bool guidance_shown = false;
  std::uint64_t seed = 0;
};

std::vector<EpisodeRow> episode_rows(const SubjectResult& r);
std::string episodes_csv(const std::vector<EpisodeRow>& rows);
std::vector<EpisodeRow> parse_episodes_csv(std::string_view text);

/// Groups rows by subject, preserving first-appearance order.
std::vector<SubjectSummary> summaries_from_rows(const std::vector<EpisodeRow>& rows);

struct GroupResult {
  Embodiment embodiment = Embodiment::SimArm;
  Group group = Group::Target;
  std::vector<SubjectSummary> subjects;
  GroupStats stats;
};

/// Splits summaries by (embodiment, group) and aggregates each cell.
/// Cells are ordered sim before kinematic, target before control.
std::vector<GroupResult> analyze(const std::vector<SubjectSummary>& summaries);

std::string group_stats_csv(const GroupResult& g);
std::string subject_percentages_csv(const std::vector<GroupResult>& groups);

/// Deltas, percentages and Welch tests for every cell in plain text.
std::string render_report(const std::vector<GroupResult>& groups);

struct BatchOutcome {
  std::vector<GroupResult> groups;
  std::vector<std::string> violations;
  std::string report;
  int exit_code() const { return violations.empty() ? 0 : 1; }
};

/// Runs every (embodiment, group) cell, checks protocol invariants on the
/// results and writes sessions/, episodes.csv, group_stats_*.csv,
/// subject_percentages.csv and report.txt under `out_dir`.
BatchOutcome run_batch(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct ReportOutcome {
  int exit_code = 0;
  std::string text;
};

/// Rebuilds the report from episodes.csv in `dir`, or failing that from the
/// session logs under dir/sessions. Exit code 2 when neither exists.
ReportOutcome report_from_dir(const std::filesystem::path& dir);

}  // namespace teachbot
