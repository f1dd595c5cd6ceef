#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "teachbot/error.hpp"
#include "teachbot/metrics.hpp"

using namespace teachbot;

namespace {

const std::vector<double> kA{4.1, 3.7, 5.2, 4.8, 3.9, 4.4, 5.0};
const std::vector<double> kB{3.2, 2.9, 3.8, 3.1, 3.5, 2.7, 3.3, 3.0, 3.6};

// Student-t CDF by composite Simpson integration of the density.
double t_cdf_quadrature(double t, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
  auto pdf = [&](double x) { return c * std::pow(1 + x * x / df, -(df + 1) / 2); };
  const double a = 0.0, b = std::abs(t);
  const int n = 20000;
  const double h = (b - a) / n;
  double s = pdf(a) + pdf(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * pdf(a + i * h);
  const double half = s * h / 3;
  return t >= 0 ? 0.5 + half : 0.5 - half;
}

SubjectSummary subject(const std::string& id, std::vector<double> errors) {
  static const std::vector<std::pair<Phase, int>> order{
      {Phase::P1, 1}, {Phase::P2, 1}, {Phase::P3, 1}, {Phase::P3, 2}, {Phase::P3, 3}, {Phase::P3, 4},
      {Phase::P3, 5}, {Phase::P3, 6}, {Phase::P3, 7}, {Phase::P3, 8}, {Phase::P4, 1}, {Phase::P5, 1}};
  SubjectSummary s;
  s.subject_id = id;
  for (std::size_t i = 0; i < errors.size(); ++i) s.rows.push_back({order[i].first, order[i].second, errors[i]});
  return s;
}

}  // namespace

TEST_CASE("welch test against reference values") {
  const auto two = welch_t_test(kA, kB);
  CHECK(two.t == doctest::Approx(4.898675776475487).epsilon(1e-12));
  CHECK(two.df == doctest::Approx(9.44605553102236).epsilon(1e-12));
  CHECK(two.p == doctest::Approx(0.0007374271754458988).epsilon(1e-9));
  CHECK(welch_t_test(kA, kB, Alternative::Less).p == doctest::Approx(0.999631286412277).epsilon(1e-12));
  CHECK(welch_t_test(kA, kB, Alternative::Greater).p == doctest::Approx(0.0003687135877229494).epsilon(1e-9));

  const std::vector<double> c{1, 2, 3, 4}, d{1.5, 2.5, 2.0, 3.5, 2.8};
  const auto r = welch_t_test(c, d);
  CHECK(r.t == doctest::Approx(0.05477567933746569).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(0.9585958898760036).epsilon(1e-10));
}

TEST_CASE("student t cdf") {
  CHECK(student_t_cdf(0, 5) == 0.5);
  CHECK(student_t_cdf(1, 3) == doctest::Approx(0.8044988905221148).epsilon(1e-13));
  CHECK(student_t_cdf(-2.5, 10.5) == doctest::Approx(0.015213136320544267).epsilon(1e-12));
  CHECK(student_t_cdf(4, 1) == doctest::Approx(0.9220208696226307).epsilon(1e-13));
  CHECK(student_t_cdf(12, 30) == doctest::Approx(0.999999999999721).epsilon(1e-14));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> t(-6, 6), df(1.5, 60);
  for (int i = 0; i < 200; ++i) {
    const double x = t(rng), v = df(rng);
    CHECK(student_t_cdf(x, v) == doctest::Approx(t_cdf_quadrature(x, v)).epsilon(1e-9));
  }
  CHECK(std::isnan(student_t_cdf(1, 0)));
}

TEST_CASE("welch edge cases") {
  const std::vector<double> same{1, 2, 3};
  const auto r = welch_t_test(same, same);
  CHECK(r.t == 0.0);
  CHECK(r.p == 1.0);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n0(0, 1), n1(1, 1);
  std::vector<double> a, b;
  for (int i = 0; i < 1000; ++i) {
    a.push_back(n0(rng));
    b.push_back(n1(rng));
  }
  const auto ab = welch_t_test(a, b);
  CHECK(ab.p < 1e-10);
  const auto ba = welch_t_test(b, a);
  CHECK(ba.t == doctest::Approx(-ab.t));
  CHECK(ba.p == doctest::Approx(ab.p));
  CHECK(welch_t_test(a, b, Alternative::Less).p < 1e-10);

  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(welch_t_test(one, same), InvalidInput);
}

TEST_CASE("p is in (0, 1] and decreases with |t|") {
  std::vector<double> base{0.1, 0.4, -0.3, 0.2, 0.0, -0.1};
  double last = 2.0;
  for (double shift = 0.0; shift < 3.0; shift += 0.25) {
    std::vector<double> moved = base;
    for (double& x : moved) x += shift;
    const double p = welch_t_test(moved, base).p;
    CHECK(p > 0.0);
    CHECK(p <= 1.0);
    CHECK(p < last);
    last = p;
  }
}

TEST_CASE("aggregate on hand-built summaries") {
  std::vector<double> e(12, 1.5);
  e[0] = 2.0;   // P1
  e[1] = 4.0;   // P2
  e[9] = 1.0;   // P3E8
  e[10] = 1.5;  // P4
  e[11] = 3.0;  // P5
  const std::vector<SubjectSummary> one{subject("a", e)};
  const auto g = aggregate(one);
  CHECK(g.subjects == 1);
  CHECK_FALSE(g.std_defined);
  CHECK(g.improvement.mean == -1.0);
  CHECK(std::isnan(g.improvement.std));
  CHECK(g.retention.mean == -0.5);
  CHECK(g.generalisation.mean == -1.0);
  CHECK(g.percent_improvement == 50.0);
  CHECK(g.percent_retention == 25.0);
  CHECK(g.percent_generalisation == 25.0);
  REQUIRE(g.per_subject.size() == 1);
  CHECK(g.per_subject[0].improvement == 50.0);

  std::vector<double> e2 = e;
  e2[9] = 0.0;
  const std::vector<SubjectSummary> two{subject("a", e), subject("b", e2)};
  const auto g2 = aggregate(two);
  CHECK(g2.std_defined);
  CHECK(g2.improvement.mean == -1.5);
  CHECK(g2.improvement.std == doctest::Approx(std::sqrt(0.5)));
  CHECK(g2.per_episode_mean[9] == 0.5);
  CHECK(g2.percent_improvement == 75.0);
}

TEST_CASE("aggregate invariances") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.5, 5.0);
  std::vector<SubjectSummary> subs, scaled;
  for (int i = 0; i < 10; ++i) {
    std::vector<double> e(12), f(12);
    for (int k = 0; k < 12; ++k) {
      e[static_cast<std::size_t>(k)] = u(rng);
      f[static_cast<std::size_t>(k)] = 7.0 * e[static_cast<std::size_t>(k)];
    }
    subs.push_back(subject("s" + std::to_string(i), e));
    scaled.push_back(subject("s" + std::to_string(i), f));
  }
  const auto g = aggregate(subs);
  const auto gs = aggregate(scaled);
  CHECK(gs.percent_improvement == doctest::Approx(g.percent_improvement).epsilon(1e-12));
  CHECK(gs.percent_generalisation == doctest::Approx(g.percent_generalisation).epsilon(1e-12));
  CHECK(gs.improvement.mean == doctest::Approx(7.0 * g.improvement.mean).epsilon(1e-12));

  auto shuffled = subs;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto gp = aggregate(shuffled);
  CHECK(gp.improvement.mean == doctest::Approx(g.improvement.mean).epsilon(1e-13));
  CHECK(gp.improvement.std == doctest::Approx(g.improvement.std).epsilon(1e-13));
  CHECK(gp.percent_retention == doctest::Approx(g.percent_retention).epsilon(1e-13));
}

TEST_CASE("incomplete or misordered summaries are rejected") {
  const std::vector<SubjectSummary> short_one{subject("x", std::vector<double>(11, 1.0))};
  CHECK_THROWS_AS(aggregate(short_one), InvalidInput);
  auto s = subject("y", std::vector<double>(12, 1.0));
  std::swap(s.rows[0], s.rows[1]);
  const std::vector<SubjectSummary> bad{s};
  CHECK_THROWS_AS(aggregate(bad), InvalidInput);
  CHECK_THROWS_AS(aggregate(std::vector<SubjectSummary>{}), InvalidInput);
}

TEST_CASE("slots and labels") {
  CHECK(episode_slot(Phase::P1, 1) == 0);
  CHECK(episode_slot(Phase::P3, 8) == 9);
  CHECK(episode_slot(Phase::P5, 1) == 11);
  CHECK_THROWS_AS(episode_slot(Phase::P3, 9), InvalidInput);
  CHECK(slot_label(5) == "P3E4");
  CHECK(slot_label(10) == "P4E1");
}

TEST_CASE("pooled std") {
  const std::vector<double> a{1, 2, 3}, b{2, 4, 6, 8};
  // Sample variances 1 and 20/3 with 2 and 3 degrees of freedom.
  CHECK(pooled_std(a, b) == doctest::Approx(std::sqrt((2 * 1.0 + 3 * 20.0 / 3) / 5)));
}
