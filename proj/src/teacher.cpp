#include "teachbot/teacher.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "teachbot/error.hpp"

namespace teachbot {

void TeacherModel::validate() const {
  if (!(gain_scale > 0.0) || !std::isfinite(gain_scale)) throw InvalidInput("gain_scale must be positive");
  if (!(adapt_rate >= 0.0 && adapt_rate <= 1.0)) throw InvalidInput("adapt_rate must lie in [0, 1]");
  if (!(noise_sigma >= 0.0) || !std::isfinite(angular_bias)) throw InvalidInput("invalid teacher noise or bias");
}

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

ActionVector teacher_act(const TeacherModel& t, const Skill& skill, const TaskSpaceState& state,
                         std::mt19937_64& rng) {
  const ActionVector opt = optimal_action(skill, state);
  const double c = std::cos(t.angular_bias), s = std::sin(t.angular_bias);
  ActionVector u(t.gain_scale * (c * opt.x() - s * opt.y()), t.gain_scale * (s * opt.x() + c * opt.y()));
  if (t.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, t.noise_sigma * skill.action_scale);
    const double nx = noise(rng);
    const double ny = noise(rng);
    u += ActionVector(nx, ny);
  }
  return clip_norm(u, skill.action_cap);
}

TeacherModel teacher_update(const TeacherModel& t, const GuidanceFrame& /*g*/) {
  TeacherModel next = t;
  next.gain_scale = t.gain_scale + t.adapt_rate * (1.0 - t.gain_scale);
  next.angular_bias = (1.0 - t.adapt_rate) * t.angular_bias;
  next.noise_sigma = (1.0 - t.adapt_rate / 2.0) * t.noise_sigma;
  return next;
}

SyntheticTeacher::SyntheticTeacher(TeacherModel model) : model_(model), rng_(model.rng_seed) { model_.validate(); }

SyntheticTeacher SyntheticTeacher::sample(const TeacherPrior& prior, std::uint64_t seed) {
  std::mt19937_64 draw(mix_seed(seed));
  std::uniform_real_distribution<double> gain(prior.gain_scale.first, prior.gain_scale.second);
  std::uniform_real_distribution<double> bias(prior.angular_bias.first, prior.angular_bias.second);
  TeacherModel m;
  m.gain_scale = gain(draw);
  m.angular_bias = bias(draw);
  m.noise_sigma = prior.noise_sigma;
  m.adapt_rate = prior.adapt_rate;
  m.rng_seed = seed;
  return SyntheticTeacher(m);
}

ActionVector SyntheticTeacher::act(const Skill& skill, const TaskSpaceState& state) {
  return teacher_act(model_, skill, state, rng_);
}

void SyntheticTeacher::update(const GuidanceFrame& g) {
  model_ = teacher_update(model_, g);
  ++updates_;
}

SubjectResult run_subject(const SessionConfig& cfg, SyntheticTeacher teacher, std::string subject_id) {
  SubjectResult out;
  out.subject_id = std::move(subject_id);
  out.group = cfg.group;
  out.embodiment = cfg.embodiment;
  out.session_seed = cfg.seed;
  out.initial = teacher.model();

  const SkillRegistry& skills = SkillRegistry::builtin();
  Session session(cfg, skills, [] { return std::int64_t{0}; });
  std::optional<GuidanceFrame> latest;
  while (session.status() != SessionStatus::Finished) {
    if (session.status() == SessionStatus::ShowingReplay) {
      // Guidance is taken on board between episodes, once the whole episode's
      // arrows have been seen.
      if (latest) teacher.update(*latest);
      latest.reset();
      session.acknowledge_replay();
      continue;
    }
    const Skill& skill = skills.find(session.current_skill_id());
    if (auto g = session.submit(teacher.act(skill, session.pending_state()))) latest = std::move(g);
  }

  out.final_model = teacher.model();
  out.teacher_updates = teacher.updates();
  out.summary = session.summary();
  out.records = session.records();
  return out;
}

namespace {

std::string subject_name(Embodiment e, Group g, int index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s-%s-%03d", e == Embodiment::SimArm ? "sim" : "kin",
                g == Group::Target ? "target" : "control", index + 1);
  return buf;
}

}  // namespace

std::vector<SubjectResult> run_group(int n, std::uint64_t master_seed, const GroupRunOptions& opts) {
  if (n < 1) throw InvalidInput("group size must be at least 1");
  const auto tag = static_cast<std::uint64_t>(opts.base.embodiment) * 2u + static_cast<std::uint64_t>(opts.base.group);
  const std::uint64_t stream = mix_seed(master_seed ^ mix_seed(tag + 1));

  std::vector<SubjectResult> results(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        const std::uint64_t subject_seed = mix_seed(stream + static_cast<std::uint64_t>(i));
        SessionConfig cfg = opts.base;
        cfg.seed = subject_seed;
        auto teacher = SyntheticTeacher::sample(opts.prior, mix_seed(subject_seed ^ 0x7eac4e5ULL));
        results[static_cast<std::size_t>(i)] =
            run_subject(cfg, std::move(teacher), subject_name(cfg.embodiment, cfg.group, i));
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };

  const int jobs = std::max(1, std::min(opts.jobs, n));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  return results;
}

std::vector<SubjectResult> run_group(int n, Group group, Embodiment embodiment, std::uint64_t master_seed,
                                     const TeacherPrior& prior, int jobs) {
  GroupRunOptions opts;
  opts.base = SessionConfig::defaults(embodiment, group, 0);
  opts.prior = prior;
  opts.jobs = jobs;
  return run_group(n, master_seed, opts);
}

}  // namespace teachbot
