#include "teachbot/metrics.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <limits>
#include <numeric>

#include "teachbot/error.hpp"

namespace teachbot {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr int kSlotP1 = 0;
constexpr int kSlotP2 = 1;
constexpr int kSlotP3E8 = 9;
constexpr int kSlotP4 = 10;
constexpr int kSlotP5 = 11;

double percent_drop(double before, double after) { return 100.0 * (before - after) / before; }

MeanStd mean_std(std::span<const double> x) {
  return {mean(x), x.size() >= 2 ? sample_std(x) : kNaN};
}

}  // namespace

int episode_slot(Phase p, int episode) {
  if (episode < 1 || episode > episodes_in(p)) throw InvalidInput("episode index out of range for phase");
  switch (p) {
    case Phase::P1: return 0;
    case Phase::P2: return 1;
    case Phase::P3: return 1 + episode;
    case Phase::P4: return 10;
    case Phase::P5: return 11;
  }
  return -1;
}

std::string slot_label(int slot) {
  if (slot < 0 || slot >= kEpisodesPerSession) throw InvalidInput("slot out of range");
  if (slot == 0) return "P1E1";
  if (slot == 1) return "P2E1";
  if (slot <= 9) return "P3E" + std::to_string(slot - 1);
  return slot == 10 ? "P4E1" : "P5E1";
}

double mean(std::span<const double> x) {
  if (x.empty()) return kNaN;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_std(std::span<const double> x) {
  if (x.size() < 2) return kNaN;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double pooled_std(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) return kNaN;
  const double va = sample_std(a), vb = sample_std(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  return std::sqrt(((na - 1) * va * va + (nb - 1) * vb * vb) / (na + nb - 2));
}

std::vector<double> slot_values(std::span<const SubjectSummary> summaries, int slot) {
  std::vector<double> v;
  v.reserve(summaries.size());
  for (const auto& s : summaries) v.push_back(s.rows.at(static_cast<std::size_t>(slot)).error_e);
  return v;
}

GroupStats aggregate(std::span<const SubjectSummary> summaries) {
  if (summaries.empty()) throw InvalidInput("no subjects to aggregate");
  for (const auto& s : summaries) {
    if (s.rows.size() != kEpisodesPerSession) {
      throw InvalidInput("subject '" + s.subject_id + "' has " + std::to_string(s.rows.size()) +
                         " episodes, expected 12");
    }
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
      if (episode_slot(s.rows[i].phase, s.rows[i].episode) != static_cast<int>(i)) {
        throw InvalidInput("subject '" + s.subject_id + "' episodes are out of protocol order");
      }
    }
  }

  GroupStats g;
  g.subjects = static_cast<int>(summaries.size());
  g.std_defined = g.subjects >= 2;
  for (int slot = 0; slot < kEpisodesPerSession; ++slot) {
    const auto v = slot_values(summaries, slot);
    const auto ms = mean_std(v);
    g.per_episode_mean[static_cast<std::size_t>(slot)] = ms.mean;
    g.per_episode_std[static_cast<std::size_t>(slot)] = ms.std;
  }

  std::vector<double> imp, ret, gen;
  for (const auto& s : summaries) {
    const double p1 = s.rows[kSlotP1].error_e, p2 = s.rows[kSlotP2].error_e;
    const double p3e8 = s.rows[kSlotP3E8].error_e, p4 = s.rows[kSlotP4].error_e, p5 = s.rows[kSlotP5].error_e;
    imp.push_back(p3e8 - p1);
    ret.push_back(p4 - p1);
    gen.push_back(p5 - p2);
    g.per_subject.push_back({s.subject_id, percent_drop(p1, p3e8), percent_drop(p1, p4), percent_drop(p2, p5)});
  }
  g.improvement = mean_std(imp);
  g.retention = mean_std(ret);
  g.generalisation = mean_std(gen);

  const auto& m = g.per_episode_mean;
  g.percent_improvement = percent_drop(m[kSlotP1], m[kSlotP3E8]);
  g.percent_retention = percent_drop(m[kSlotP1], m[kSlotP4]);
  g.percent_generalisation = percent_drop(m[kSlotP2], m[kSlotP5]);
  return g;
}

double student_t_cdf(double t, double df) {
  if (std::isnan(t) || !(df > 0.0)) return kNaN;
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = df / (df + t * t);
  const double tail = 0.5 * boost::math::ibeta(0.5 * df, 0.5, x);
  return t > 0 ? 1.0 - tail : tail;
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b, Alternative alt) {
  if (a.size() < 2 || b.size() < 2) throw InvalidInput("each sample needs at least two values");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = mean(a), mb = mean(b);
  const double sa = sample_std(a), sb = sample_std(b);
  const double va = sa * sa / na, vb = sb * sb / nb;

  WelchResult r;
  r.alternative = alt;
  const double se2 = va + vb;
  if (se2 == 0.0) {
    r.df = na + nb - 2.0;
    if (ma == mb) {
      r.t = 0.0;
      r.p = 1.0;
      return r;
    }
    r.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  } else {
    r.t = (ma - mb) / std::sqrt(se2);
    r.df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  }

  if (std::isinf(r.t)) {
    const bool pos = r.t > 0;
    switch (alt) {
      case Alternative::TwoSided: r.p = 0.0; break;
      case Alternative::Less: r.p = pos ? 1.0 : 0.0; break;
      case Alternative::Greater: r.p = pos ? 0.0 : 1.0; break;
    }
    return r;
  }

  // Two-sided tail from I_x(df/2, 1/2) directly keeps precision for large |t|.
  const double x = r.df / (r.df + r.t * r.t);
  const double two_sided = boost::math::ibeta(0.5 * r.df, 0.5, x);
  switch (alt) {
    case Alternative::TwoSided: r.p = two_sided; break;
    case Alternative::Less: r.p = r.t < 0 ? 0.5 * two_sided : 1.0 - 0.5 * two_sided; break;
    case Alternative::Greater: r.p = r.t > 0 ? 0.5 * two_sided : 1.0 - 0.5 * two_sided; break;
  }
  return r;
}

}  // namespace teachbot
