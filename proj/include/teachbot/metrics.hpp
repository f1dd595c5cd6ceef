#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "teachbot/protocol.hpp"

namespace teachbot {

/// Per-participant view of a finished session, as exported to CSV.
struct SubjectSummary {
  std::string subject_id;
  Group group = Group::Target;
  Embodiment embodiment = Embodiment::SimArm;
  std::uint64_t seed = 0;
  std::vector<SummaryRow> rows;
};

/// Position of (phase, episode) in the fixed 12-slot protocol order.
int episode_slot(Phase p, int episode);
std::string slot_label(int slot);  // "P3E4"

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, NaN for one subject
};

struct SubjectPercentages {
  std::string subject_id;
  double improvement = 0.0;     // 100 (e(P1) - e(P3E8)) / e(P1)
  double retention = 0.0;       // 100 (e(P1) - e(P4)) / e(P1)
  double generalisation = 0.0;  // 100 (e(P2) - e(P5)) / e(P2)
};

struct GroupStats {
  int subjects = 0;
  bool std_defined = false;
  std::array<double, kEpisodesPerSession> per_episode_mean{};
  std::array<double, kEpisodesPerSession> per_episode_std{};
  MeanStd improvement;     // e(P3E8) - e(P1E1)
  MeanStd retention;       // e(P4E1) - e(P1E1)
  MeanStd generalisation;  // e(P5E1) - e(P2E1)
  /// Reductions relative to the baseline group means, in percent.
  double percent_improvement = 0.0;
  double percent_retention = 0.0;
  double percent_generalisation = 0.0;
  std::vector<SubjectPercentages> per_subject;
};

/// Throws InvalidInput for an empty list or any summary without the full
/// 12 episodes.
GroupStats aggregate(std::span<const SubjectSummary> summaries);

/// Error values of every subject at one slot, in input order.
std::vector<double> slot_values(std::span<const SubjectSummary> summaries, int slot);

double mean(std::span<const double> x);
/// Sample (n - 1) standard deviation.
double sample_std(std::span<const double> x);
double pooled_std(std::span<const double> a, std::span<const double> b);

enum class Alternative {
  TwoSided,
  Less,     // mean(a) < mean(b)
  Greater,  // mean(a) > mean(b)
};

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  Alternative alternative = Alternative::TwoSided;
  bool one_sided() const { return alternative != Alternative::TwoSided; }
};

/// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of
/// freedom; p from the regularized incomplete beta function. Both samples
/// constant: p = 1 if the means agree, otherwise t = +-inf and p is 0 or 1.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b,
                         Alternative alt = Alternative::TwoSided);

/// Student-t CDF via I_x(df/2, 1/2).
double student_t_cdf(double t, double df);

}  // namespace teachbot
