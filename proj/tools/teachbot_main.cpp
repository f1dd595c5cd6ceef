#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <thread>

#include "teachbot/error.hpp"
#include "teachbot/experiment.hpp"
#include "teachbot/hub.hpp"
#include "teachbot/server.hpp"
#include "teachbot/session_log.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

int cmd_serve(const std::string& bind, const std::string& config_path, const std::string& log_dir,
              std::optional<std::uint64_t> seed) {
  teachbot::HubConfig cfg;
  if (!config_path.empty()) cfg = teachbot::hub_config_from_json(teachbot::read_file(config_path));
  if (seed) cfg.seed = *seed;
  if (!log_dir.empty()) cfg.log_dir = log_dir;

  teachbot::SessionHub hub(cfg);
  teachbot::Server server(hub, teachbot::parse_bind_address(bind));
  server.start();
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "listening on port " << server.bound_port() << std::endl;
  while (!g_stop && server.running()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return 0;
}

int cmd_batch(const std::string& config_path, const std::string& out, std::optional<std::uint64_t> seed,
              std::optional<int> jobs) {
  teachbot::ExperimentConfig cfg;
  if (!config_path.empty()) cfg = teachbot::load_experiment_config(config_path);
  if (seed) cfg.seed = *seed;
  if (jobs) cfg.jobs = *jobs;
  const auto outcome = teachbot::run_batch(cfg, out);
  std::cout << outcome.report;
  if (outcome.exit_code() != 0) std::cerr << outcome.violations.size() << " invariant violation(s)\n";
  return outcome.exit_code();
}

int cmd_replay_verify(const std::string& file, double tolerance) {
  const auto log = teachbot::load_session(file);
  const auto report = teachbot::replay_verify(log);
  bool ok = true;
  for (const auto& e : report.episodes) {
    const bool bad = e.error_delta > tolerance || e.parameter_delta > tolerance || e.trajectory_delta > tolerance;
    ok = ok && !bad;
    std::printf("%s%s E%d  stored=%.17g recomputed=%.17g  error_delta=%.3g param_delta=%.3g traj_delta=%.3g\n",
                bad ? "MISMATCH " : "", std::string(teachbot::to_string(e.phase)).c_str(), e.episode, e.stored_error,
                e.recomputed_error, e.error_delta, e.parameter_delta, e.trajectory_delta);
  }
  std::printf("%zu episodes, max delta %.3g (tolerance %.3g): %s\n", report.episodes.size(), report.max_delta(),
              tolerance, ok ? "ok" : "FAILED");
  return ok ? 0 : 1;
}

int cmd_report(const std::string& dir) {
  const auto r = teachbot::report_from_dir(dir);
  (r.exit_code == 0 ? std::cout : std::cerr) << r.text;
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Teaching-by-demonstration experiment server and batch tools"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed, "Override the master seed")->check(CLI::NonNegativeNumber);

  auto* serve = app.add_subcommand("serve", "Run the session server");
  std::string bind = "127.0.0.1:8765", serve_config, log_dir;
  serve->add_option("--bind", bind, "host:port to listen on")->capture_default_str();
  serve->add_option("--config", serve_config, "Experiment config (seed, lambda, kappa_max, assignment, log_dir)")
      ->check(CLI::ExistingFile);
  serve->add_option("--log-dir", log_dir, "Directory for sessions/<id>.json");

  auto* batch = app.add_subcommand("batch", "Run synthetic-teacher groups and write CSVs and a report");
  std::string batch_config, out;
  std::optional<int> jobs;
  batch->add_option("--config", batch_config, "Experiment config JSON")->check(CLI::ExistingFile);
  batch->add_option("--out", out, "Output directory")->required();
  batch->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("replay-verify", "Recompute a session log and compare with stored values");
  std::string log_file;
  double tolerance = 1e-12;
  verify->add_option("file", log_file, "Session log (.json or .json.gz)")->required()->check(CLI::ExistingFile);
  verify->add_option("--tolerance", tolerance, "Largest accepted delta")->capture_default_str();

  auto* report = app.add_subcommand("report", "Summarise episodes.csv or session logs in a directory");
  std::string report_dir;
  report->add_option("dir", report_dir, "Output directory of a batch run or server log directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) return cmd_serve(bind, serve_config, log_dir, seed);
    if (*batch) return cmd_batch(batch_config, out, seed, jobs);
    if (*verify) return cmd_replay_verify(log_file, tolerance);
    if (*report) return cmd_report(report_dir);
  } catch (const teachbot::Error& e) {
    std::cerr << "error (" << teachbot::to_string(e.kind()) << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
