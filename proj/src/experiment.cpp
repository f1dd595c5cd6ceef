#include "teachbot/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "teachbot/error.hpp"
#include "teachbot/json_io.hpp"
#include "teachbot/session_log.hpp"

namespace teachbot {

namespace fs = std::filesystem;

void ExperimentConfig::validate() const {
  if (n_target < 0 || n_control < 0 || n_target + n_control == 0) {
    throw InvalidInput("experiment needs at least one subject");
  }
  if (embodiments.empty()) throw InvalidInput("experiment needs at least one embodiment");
  if (!std::isfinite(lambda) || lambda < 0.0) throw InvalidInput("lambda must be non-negative");
  if (!(kappa_max > 1.0)) throw InvalidInput("kappa_max must exceed 1");
  if (!(teacher.gain_scale.first > 0.0) || teacher.gain_scale.second < teacher.gain_scale.first) {
    throw InvalidInput("teacher gain_scale range must be positive and ordered");
  }
  if (teacher.angular_bias.second < teacher.angular_bias.first) {
    throw InvalidInput("teacher angular_bias range must be ordered");
  }
  if (!(teacher.noise_sigma >= 0.0)) throw InvalidInput("teacher noise_sigma must be non-negative");
  if (!(teacher.adapt_rate >= 0.0 && teacher.adapt_rate <= 1.0)) {
    throw InvalidInput("teacher adapt_rate must lie in [0, 1]");
  }
  if (jobs < 1) throw InvalidInput("jobs must be at least 1");
}

namespace {

std::pair<double, double> range_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidInput("expected a [low, high] range");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

ExperimentConfig experiment_config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!j.is_object()) throw ParseError("experiment config must be a JSON object", 0);

  ExperimentConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.n_target = j.value("n_target", c.n_target);
    c.n_control = j.value("n_control", c.n_control);
    if (j.contains("embodiments")) {
      c.embodiments.clear();
      for (const auto& e : j["embodiments"]) c.embodiments.push_back(embodiment_from_string(e.get<std::string>()));
    }
    c.lambda = j.value("lambda", c.lambda);
    c.kappa_max = j.value("kappa_max", c.kappa_max);
    if (j.contains("teacher")) {
      const auto& t = j["teacher"];
      if (t.contains("gain_scale")) c.teacher.gain_scale = range_from_json(t["gain_scale"]);
      if (t.contains("angular_bias")) c.teacher.angular_bias = range_from_json(t["angular_bias"]);
      c.teacher.noise_sigma = t.value("noise_sigma", c.teacher.noise_sigma);
      c.teacher.adapt_rate = t.value("adapt_rate", c.teacher.adapt_rate);
    }
    c.write_session_logs = j.value("write_session_logs", c.write_session_logs);
    c.gzip = j.value("gzip", c.gzip);
    c.jobs = j.value("jobs", c.jobs);
  } catch (const json::exception& e) {
    throw ParseError(std::string("experiment config: ") + e.what(), std::string::npos);
  }
  c.validate();
  return c;
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
  json emb = json::array();
  for (auto e : c.embodiments) emb.push_back(to_string(e));
  const json j{{"seed", c.seed},
               {"n_target", c.n_target},
               {"n_control", c.n_control},
               {"embodiments", emb},
               {"lambda", c.lambda},
               {"kappa_max", c.kappa_max},
               {"teacher",
                {{"gain_scale", {c.teacher.gain_scale.first, c.teacher.gain_scale.second}},
                 {"angular_bias", {c.teacher.angular_bias.first, c.teacher.angular_bias.second}},
                 {"noise_sigma", c.teacher.noise_sigma},
                 {"adapt_rate", c.teacher.adapt_rate}}},
               {"write_session_logs", c.write_session_logs},
               {"gzip", c.gzip},
               {"jobs", c.jobs}};
  return j.dump(2) + "\n";
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  return experiment_config_from_json(read_file(path));
}

std::vector<EpisodeRow> episode_rows(const SubjectResult& r) {
  std::vector<EpisodeRow> rows;
  for (const auto& rec : r.records) {
    rows.push_back({r.subject_id, r.group, r.embodiment, rec.phase, rec.episode, rec.skill_id, rec.error_e,
                    rec.guidance_shown, r.session_seed});
  }
  return rows;
}

namespace {

constexpr std::string_view kEpisodesHeader =
    "subject_id,group,embodiment,phase,episode,skill_id,error_e,guidance_shown,seed";

std::string num(double x) { return std::isnan(x) ? std::string("nan") : fmt::format("{}", x); }

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string cell_name(Embodiment e, Group g) { return lower(to_string(e)) + "_" + lower(to_string(g)); }

}  // namespace

std::string episodes_csv(const std::vector<EpisodeRow>& rows) {
  std::string out(kEpisodesHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.subject_id, to_string(r.group), to_string(r.embodiment),
                       to_string(r.phase), r.episode, r.skill_id, num(r.error_e), r.guidance_shown ? 1 : 0, r.seed);
  }
  return out;
}

std::vector<EpisodeRow> parse_episodes_csv(std::string_view text) {
  std::vector<EpisodeRow> rows;
  std::size_t offset = 0;
  bool header = true;
  while (offset < text.size()) {
    auto end = text.find('\n', offset);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(offset, end - offset);
    const std::size_t line_start = offset;
    offset = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line != kEpisodesHeader) throw ParseError("unexpected episodes.csv header", line_start);
      header = false;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 9) throw ParseError("episodes.csv row must have 9 fields", line_start);
    try {
      EpisodeRow r;
      r.subject_id = f[0];
      r.group = group_from_string(f[1]);
      r.embodiment = embodiment_from_string(f[2]);
      r.phase = phase_from_string(f[3]);
      r.episode = std::stoi(f[4]);
      r.skill_id = f[5];
      r.error_e = std::stod(f[6]);
      r.guidance_shown = f[7] == "1";
      r.seed = std::stoull(f[8]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error& e) {
      throw ParseError(std::string("bad episodes.csv field: ") + e.what(), line_start);
    }
  }
  return rows;
}

std::vector<SubjectSummary> summaries_from_rows(const std::vector<EpisodeRow>& rows) {
  std::vector<SubjectSummary> out;
  std::map<std::string, std::size_t> index;
  for (const auto& r : rows) {
    auto [it, inserted] = index.try_emplace(r.subject_id, out.size());
    if (inserted) out.push_back({r.subject_id, r.group, r.embodiment, r.seed, {}});
    auto& s = out[it->second];
    if (s.group != r.group || s.embodiment != r.embodiment) {
      throw InvalidInput("subject '" + r.subject_id + "' appears in more than one cell");
    }
    s.rows.push_back({r.phase, r.episode, r.error_e});
  }
  return out;
}

std::vector<GroupResult> analyze(const std::vector<SubjectSummary>& summaries) {
  std::vector<GroupResult> out;
  for (auto e : {Embodiment::SimArm, Embodiment::KinematicArm}) {
    for (auto g : {Group::Target, Group::Control}) {
      GroupResult cell;
      cell.embodiment = e;
      cell.group = g;
      for (const auto& s : summaries) {
        if (s.embodiment == e && s.group == g) cell.subjects.push_back(s);
      }
      if (cell.subjects.empty()) continue;
      cell.stats = aggregate(cell.subjects);
      out.push_back(std::move(cell));
    }
  }
  return out;
}

std::string group_stats_csv(const GroupResult& g) {
  const auto& s = g.stats;
  std::string out = "metric,mean,std\n";
  out += fmt::format("subjects,{},\n", s.subjects);
  for (int i = 0; i < kEpisodesPerSession; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out += fmt::format("e_{},{},{}\n", slot_label(i), num(s.per_episode_mean[k]), num(s.per_episode_std[k]));
  }
  out += fmt::format("delta_improvement,{},{}\n", num(s.improvement.mean), num(s.improvement.std));
  out += fmt::format("delta_retention,{},{}\n", num(s.retention.mean), num(s.retention.std));
  out += fmt::format("delta_generalisation,{},{}\n", num(s.generalisation.mean), num(s.generalisation.std));
  out += fmt::format("percent_improvement,{},\n", num(s.percent_improvement));
  out += fmt::format("percent_retention,{},\n", num(s.percent_retention));
  out += fmt::format("percent_generalisation,{},\n", num(s.percent_generalisation));
  return out;
}

std::string subject_percentages_csv(const std::vector<GroupResult>& groups) {
  std::string out = "subject_id,group,embodiment,improvement,retention,generalisation\n";
  for (const auto& g : groups) {
    for (const auto& p : g.stats.per_subject) {
      out += fmt::format("{},{},{},{},{},{}\n", p.subject_id, to_string(g.group), to_string(g.embodiment),
                         num(p.improvement), num(p.retention), num(p.generalisation));
    }
  }
  return out;
}

namespace {

struct DeltaSpec {
  const char* name;
  int after;
  int before;
};

constexpr DeltaSpec kDeltas[] = {
    {"improvement (P3E8 vs P1E1)", 9, 0},
    {"retention (P4E1 vs P1E1)", 10, 0},
    {"generalisation (P5E1 vs P2E1)", 11, 1},
};

}  // namespace

std::string render_report(const std::vector<GroupResult>& groups) {
  std::ostringstream os;
  for (const auto& g : groups) {
    const auto& s = g.stats;
    os << "== " << to_string(g.embodiment) << " / " << to_string(g.group) << " (n=" << s.subjects << ")\n";
    if (!s.std_defined) os << "warning: std undefined with a single subject; tests skipped\n";
    os << "mean e per episode:\n";
    for (int i = 0; i < kEpisodesPerSession; ++i) {
      const auto k = static_cast<std::size_t>(i);
      os << fmt::format("  {:<5} {:>10.4f}", slot_label(i), s.per_episode_mean[k]);
      if (s.std_defined) os << fmt::format(" +- {:.4f}", s.per_episode_std[k]);
      os << '\n';
    }
    const MeanStd* deltas[] = {&s.improvement, &s.retention, &s.generalisation};
    const double percents[] = {s.percent_improvement, s.percent_retention, s.percent_generalisation};
    for (int d = 0; d < 3; ++d) {
      const auto& spec = kDeltas[d];
      os << fmt::format("{:<31} delta {:+.4f}", spec.name, deltas[d]->mean);
      if (s.std_defined) os << fmt::format(" +- {:.4f}", deltas[d]->std);
      os << fmt::format("  ({:.2f}% reduction)", percents[d]);
      if (s.std_defined) {
        const auto after = slot_values(g.subjects, spec.after);
        const auto before = slot_values(g.subjects, spec.before);
        const auto w = welch_t_test(after, before, Alternative::Less);
        const double pooled = pooled_std(after, before);
        os << fmt::format("  t={:.3f} df={:.1f} p(one-sided)={:.3g} |delta|/pooled SD={:.3f}", w.t, w.df, w.p,
                          std::abs(mean(after) - mean(before)) / pooled);
      }
      os << '\n';
    }
    os << '\n';
  }

  for (auto e : {Embodiment::SimArm, Embodiment::KinematicArm}) {
    const GroupResult* t = nullptr;
    const GroupResult* c = nullptr;
    for (const auto& g : groups) {
      if (g.embodiment != e) continue;
      (g.group == Group::Target ? t : c) = &g;
    }
    if (t == nullptr || c == nullptr || !t->stats.std_defined || !c->stats.std_defined) continue;
    const auto w = welch_t_test(slot_values(t->subjects, 0), slot_values(c->subjects, 0));
    os << fmt::format("{} baseline P1E1 target vs control: t={:.3f} df={:.1f} p(two-sided)={:.3g}\n",
                      to_string(e), w.t, w.df, w.p);
  }
  return os.str();
}

namespace {

void check_subject(const SubjectResult& r, const SessionConfig& cfg, std::vector<std::string>& violations) {
  auto fail = [&](const std::string& what) { violations.push_back(r.subject_id + ": " + what); };
  if (r.records.size() != kEpisodesPerSession) {
    fail(fmt::format("{} episodes recorded, expected {}", r.records.size(), kEpisodesPerSession));
    return;
  }
  const SkillRegistry& skills = SkillRegistry::builtin();
  int guided = 0;
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    const auto& rec = r.records[i];
    if (episode_slot(rec.phase, rec.episode) != static_cast<int>(i)) fail("episodes out of protocol order");
    const bool should_guide = r.group == Group::Target && rec.phase == Phase::P3;
    if (rec.guidance_shown != should_guide) fail("guidance shown outside target P3 or missing");
    guided += rec.guidance_shown ? 1 : 0;
    if (!std::isfinite(rec.error_e) || rec.error_e < 0.0) fail("non-finite or negative error");
    const double again = recompute_error(rec, skills.find(rec.skill_id), cfg.lambda);
    if (std::abs(again - rec.error_e) > 1e-12) fail("stored error does not match recomputation");
  }
  if (r.teacher_updates != guided) {
    fail(fmt::format("teacher updated {} times after {} guided episodes", r.teacher_updates, guided));
  }
}

void write_text(const fs::path& path, const std::string& text) { write_file_atomic(path, text); }

}  // namespace

BatchOutcome run_batch(const ExperimentConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);

  BatchOutcome outcome;
  std::vector<EpisodeRow> rows;
  std::vector<SubjectSummary> summaries;
  for (auto e : cfg.embodiments) {
    for (auto g : {Group::Target, Group::Control}) {
      const int n = g == Group::Target ? cfg.n_target : cfg.n_control;
      if (n == 0) continue;
      GroupRunOptions opts;
      opts.base = SessionConfig::defaults(e, g, 0);
      opts.base.lambda = cfg.lambda;
      opts.base.kappa_max = cfg.kappa_max;
      opts.prior = cfg.teacher;
      opts.jobs = cfg.jobs;
      const auto results = run_group(n, cfg.seed, opts);
      for (const auto& r : results) {
        SessionConfig scfg = opts.base;
        scfg.seed = r.session_seed;
        check_subject(r, scfg, outcome.violations);
        auto er = episode_rows(r);
        rows.insert(rows.end(), er.begin(), er.end());
        summaries.push_back({r.subject_id, r.group, r.embodiment, r.session_seed, r.summary});
        if (cfg.write_session_logs) {
          SessionLog log;
          log.session_id = r.subject_id;
          log.created_at = iso8601_now();
          log.config = scfg;
          log.skills = {SkillRegistry::builtin().find(scfg.skill1_id), SkillRegistry::builtin().find(scfg.skill2_id)};
          log.episodes = r.records;
          save_session(log, session_path(out_dir, log.session_id, cfg.gzip));
        }
      }
    }
  }

  try {
    outcome.groups = analyze(summaries);
  } catch (const InvalidInput& e) {
    outcome.violations.push_back(e.what());
  }

  write_text(out_dir / "episodes.csv", episodes_csv(rows));
  for (const auto& g : outcome.groups) {
    write_text(out_dir / ("group_stats_" + cell_name(g.embodiment, g.group) + ".csv"), group_stats_csv(g));
  }
  write_text(out_dir / "subject_percentages.csv", subject_percentages_csv(outcome.groups));

  outcome.report = render_report(outcome.groups);
  if (!outcome.violations.empty()) {
    outcome.report += "\ninvariant violations:\n";
    for (const auto& v : outcome.violations) outcome.report += "  " + v + "\n";
  }
  write_text(out_dir / "report.txt", outcome.report);
  return outcome;
}

ReportOutcome report_from_dir(const fs::path& dir) {
  std::vector<SubjectSummary> summaries;
  const fs::path csv = dir / "episodes.csv";
  if (fs::is_regular_file(csv)) {
    summaries = summaries_from_rows(parse_episodes_csv(read_file(csv)));
  } else if (fs::is_directory(dir / "sessions")) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir / "sessions")) {
      const auto name = entry.path().filename().string();
      if (name.ends_with(".json") || name.ends_with(".json.gz")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const auto log = load_session(f);
      SubjectSummary s{log.session_id, log.config.group, log.config.embodiment, log.config.seed, {}};
      for (const auto& rec : log.episodes) s.rows.push_back({rec.phase, rec.episode, rec.error_e});
      summaries.push_back(std::move(s));
    }
  }
  if (summaries.empty()) return {2, "no sessions found in " + dir.string() + "\n"};
  return {0, render_report(analyze(summaries))};
}

}  // namespace teachbot
