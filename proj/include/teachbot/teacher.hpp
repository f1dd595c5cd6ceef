#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "teachbot/guidance.hpp"
#include "teachbot/protocol.hpp"
#include "teachbot/skill.hpp"

namespace teachbot {

/// Behavioural model of a novice teacher. Actions are the optimal action
/// scaled by `gain_scale`, rotated by `angular_bias` and perturbed by
/// isotropic Gaussian noise with standard deviation
/// `noise_sigma * skill.action_scale`.
struct TeacherModel {
  double gain_scale = 1.0;
  double angular_bias = 0.0;  // rad
  double noise_sigma = 0.0;   // fraction of the skill's action scale
  double adapt_rate = 0.35;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Ranges the novice parameters are drawn from.
struct TeacherPrior {
  std::pair<double, double> gain_scale{1.5, 3.0};
  std::pair<double, double> angular_bias{-0.5, 0.5};
  double noise_sigma = 0.15;
  double adapt_rate = 0.35;
};

/// A teacher with its private random stream.
class SyntheticTeacher {
 public:
  explicit SyntheticTeacher(TeacherModel model);
  /// Novice drawn from `prior` using `seed` for both the draw and the stream.
  static SyntheticTeacher sample(const TeacherPrior& prior, std::uint64_t seed);

  const TeacherModel& model() const { return model_; }
  int updates() const { return updates_; }

  ActionVector act(const Skill& skill, const TaskSpaceState& state);
  void update(const GuidanceFrame& g);

 private:
  TeacherModel model_;
  std::mt19937_64 rng_;
  int updates_ = 0;
};

/// u = gain * Rot(bias) * u*(state) + noise, norm-clipped to the skill's
/// action cap. Draws from `rng` only when noise_sigma > 0.
ActionVector teacher_act(const TeacherModel& t, const Skill& skill, const TaskSpaceState& state,
                         std::mt19937_64& rng);

/// Guidance uptake: gain and bias relax toward the optimum, noise shrinks.
TeacherModel teacher_update(const TeacherModel& t, const GuidanceFrame& g);

/// SplitMix64 finalizer; derives independent sub-seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t x);

struct SubjectResult {
  std::string subject_id;
  Group group = Group::Target;
  Embodiment embodiment = Embodiment::SimArm;
  std::uint64_t session_seed = 0;
  TeacherModel initial;
  TeacherModel final_model;
  int teacher_updates = 0;
  std::vector<EpisodeRecord> records;
  std::vector<SummaryRow> summary;
};

struct GroupRunOptions {
  SessionConfig base;  // group, embodiment, lambda, kappa_max, skills, replay
  TeacherPrior prior;
  /// Worker threads; results are identical for any value.
  int jobs = 1;
};

/// Runs `n` synthetic participants through the full protocol. Each teacher's
/// parameters persist across phases and skills and are updated once per
/// episode in which guidance was received.
std::vector<SubjectResult> run_group(int n, Group group, Embodiment embodiment, std::uint64_t master_seed,
                                     const TeacherPrior& prior = {}, int jobs = 1);
std::vector<SubjectResult> run_group(int n, std::uint64_t master_seed, const GroupRunOptions& opts);

/// One participant; exposed for tests and for the batch runner.
SubjectResult run_subject(const SessionConfig& cfg, SyntheticTeacher teacher, std::string subject_id);

}  // namespace teachbot
