// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset, e.g. `acceptance 1 2 10`.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cgym/baselines.hpp"
#include "cgym/gradcheck.hpp"
#include "cgym/harness.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cgym;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Verdict reward_formula() {
  const double a = std::round(success_reward(18, 640) * 1e4) / 1e4;
  const double b = std::round(success_reward(28, 640) * 1e4) / 1e4;
  return {a == 0.9747 && b == 0.9606, "18/640 -> " + fmt(a) + ", 28/640 -> " + fmt(b)};
}

Verdict gradient_oracle() {
  const GradCheckReport r = run_gradcheck(50, 2024);
  std::ostringstream s;
  s << r.networks << " networks, largest " << r.max_parameters << " params, max rel err " << r.max_relative_error;
  return {r.networks == 50 && r.max_parameters <= 5000 && r.max_relative_error <= 1e-5, s.str()};
}

// PPO with the default student settings on Empty-5x5, evaluated on 100
// fresh episodes after every 25k environment steps, for at most 500k steps.
Verdict ppo_convergence() {
  CmdpConfig c;
  c.tasks = {{TaskId::parse("Empty-5x5")}, 0};
  c.student = PpoConfig::student();
  c.teacher_steps = 20;
  c.student_steps_per_action = 25000;
  c.eval_episodes = 100;
  int reached = 0;
  std::ostringstream s;
  for (std::uint64_t seed : {1, 2, 3}) {
    CurriculumEnv env(c, seed);
    double best = 0.0;
    std::int64_t at = -1;
    for (int t = 0; t < c.teacher_steps && env.total_env_steps() < 500000; ++t) {
      const double mean = env.step(0).report.means[0];
      best = std::max(best, mean);
      if (mean >= 0.90) {
        at = env.total_env_steps();
        break;
      }
    }
    reached += at >= 0;
    s << "seed " << seed << ": " << (at >= 0 ? ">=0.90 at " + std::to_string(at) + " steps" : "best " + fmt(best, 3))
      << "; ";
  }
  s << reached << "/3 seeds";
  return {reached >= 2, s.str()};
}

Verdict curriculum_vs_uniform() {
  ExperimentConfig rl = ExperimentConfig::desk();
  rl.deterministic = true;
  ExperimentConfig uni = rl;
  uni.teacher_kind = "uniform";
  std::vector<double> rl_final, uni_final;
  std::ostringstream s;
  for (std::uint64_t seed : {1, 2, 3}) {
    const SeedOutcome a = run_seed(rl, seed, "");
    const SeedOutcome b = run_seed(uni, seed, "");
    if (a.failed || b.failed) return {false, "seed " + std::to_string(seed) + " diverged"};
    rl_final.push_back(a.log.records.back().total_mean_return);
    uni_final.push_back(b.log.records.back().total_mean_return);
    s << "seed " << seed << ": rl " << fmt(rl_final.back(), 3) << " uniform " << fmt(uni_final.back(), 3) << "; ";
  }
  const double m_rl = median(rl_final), m_uni = median(uni_final);
  s << "median rl " << fmt(m_rl, 3) << " vs uniform " << fmt(m_uni, 3);
  return {m_rl >= m_uni, s.str()};
}

Verdict observation_oracles() {
  Rng rng(5);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double alpha = 0.01 + 0.99 * rand_unit(rng);
    const double fast = 0.5 + 0.5 * rand_unit(rng), slow = 0.01 + 0.48 * rand_unit(rng);
    TaskHistory h(1, EmaSettings{alpha, fast, slow});
    const int len = rand_int(rng, 1, 1001);
    std::vector<double> x;
    x.reserve(static_cast<std::size_t>(len));
    for (int t = 0; t < len; ++t) {
      x.push_back(rand_unit(rng));
      h.record(0, std::span<const double>(&x.back(), 1));
    }
    worst = std::max(worst, std::abs(observe(ObservationKind::Ema, h, len)(0) - oracle::ema_unrolled(x, alpha)));
    const double fs = oracle::ema_unrolled(x, fast) - oracle::ema_unrolled(x, slow);
    worst = std::max(worst, std::abs(observe(ObservationKind::FastSlowEma, h, len)(0) - fs));
  }
  bool alp_ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rand_int(rng, 1, 19));
    TaskHistory h(n);
    const int steps = rand_int(rng, 0, 8);
    for (int t = 0; t < steps; ++t) {
      std::vector<double> means(n);
      for (double& m : means) m = rand_unit(rng);
      h.record(static_cast<std::size_t>(rand_int(rng, 0, static_cast<int>(n))), means);
    }
    const Eigen::VectorXd lp = observe(ObservationKind::LearningProgress, h, 8);
    const Eigen::VectorXd alp = observe(ObservationKind::AbsoluteLearningProgress, h, 8);
    alp_ok = alp_ok && alp == lp.cwiseAbs();
  }
  bool dims_ok = true;
  for (std::size_t n : {1u, 5u, 18u}) {
    TaskHistory h(n);
    h.record(0, std::vector<double>(n, 0.5));
    const std::array<std::pair<ObservationKind, std::size_t>, 6> table{{
        {ObservationKind::RewardHistory, 2 * n},
        {ObservationKind::PreviousTaskReward, n + 1},
        {ObservationKind::LearningProgress, n},
        {ObservationKind::AbsoluteLearningProgress, n},
        {ObservationKind::Ema, n},
        {ObservationKind::FastSlowEma, n},
    }};
    for (const auto& [kind, dim] : table) {
      dims_ok = dims_ok && observation_dim(kind, n) == dim && static_cast<std::size_t>(observe(kind, h, 1).size()) == dim;
    }
  }
  std::ostringstream s;
  s << "max EMA/FS-EMA deviation " << worst << ", ALP=|LP| " << (alp_ok ? "yes" : "no") << ", dims "
    << (dims_ok ? "ok" : "wrong");
  return {worst <= 1e-12 && alp_ok && dims_ok, s.str()};
}

std::size_t first_argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

Verdict window_regression() {
  Rng rng(6);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = rand_int(rng, 2, 200);
    std::vector<double> x(static_cast<std::size_t>(n)), y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = static_cast<double>(i);
      y[i] = rand_unit(rng);
    }
    const double expect = oracle::slope_closed_form(x, y);
    worst = std::max(worst, std::abs(ols_slope(x, y) - expect));
  }
  int agree = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t tasks = static_cast<std::size_t>(rand_int(rng, 2, 19));
    TaskHistory h(tasks);
    const int steps = rand_int(rng, 2, 30);
    for (int t = 0; t < steps; ++t) {
      std::vector<double> means(tasks);
      for (double& m : means) m = rand_unit(rng);
      h.record(static_cast<std::size_t>(rand_int(rng, 0, static_cast<int>(tasks))), means);
    }
    Rng a(static_cast<std::uint64_t>(trial)), b(static_cast<std::uint64_t>(trial));
    const bool same = first_argmax(window_slopes(h, 2)) == first_argmax(learning_progress(h)) &&
                      select_window(h, 2, a) == select_lp(h, b);
    agree += same;
  }
  std::ostringstream s;
  s << "max slope deviation " << worst << ", two-point argmax agreement " << agree << "/1000";
  return {worst <= 1e-9 && agree == 1000, s.str()};
}

Verdict transfer_exactness() {
  const NetworkSpec spec = NetworkSpec::student();
  StudentState st{initialize<float>(spec, 31), AdamState<float>(parameter_count(spec)), std::nullopt};
  auto fresh = [&] { return initialize<float>(spec, 32); };

  // Train briefly so the weights are not at their initial values.
  {
    ActorPool pool = make_grid_pool(TaskId::parse("Empty-5x5"), 4, 1);
    Rng rng(1);
    for (int u = 0; u < 3; ++u) ppo_update(st.params, st.adam, collect(st.params, pool, 64), PpoConfig::student(), rng);
  }
  Matrix<float> batch(6, kObservationSize);
  for (int i = 0; i < 6; ++i) {
    encode_into(generate(TaskId::parse("DoorKey-6x6"), static_cast<std::uint64_t>(i)),
                std::span<float>(batch.row(i).data(), kObservationSize));
  }
  const auto before = forward(st.params, batch);
  const auto policy_shaper = apply_transfer({TransferMethod::Policy, true, std::nullopt}, 2, st, fresh);
  const auto after = forward(st.params, batch);
  const bool identical = !policy_shaper && before.logits == after.logits && before.values == after.values;

  const TransferSettings shaping{TransferMethod::RewardShaping, true, std::nullopt};
  const auto first = apply_transfer(shaping, 1, st, fresh);
  fixture::RecordingPool rp = fixture::recording_pool(TaskId::parse("Empty-6x6"), 4, 2);
  const RolloutBuffer b1 = collect(st.params, rp.pool, 64, first ? &*first : nullptr);
  const bool step1_exact = !first && b1.rewards == b1.env_rewards;

  const ParameterBlock<float> frozen = st.params;
  const auto second = apply_transfer(shaping, 2, st, fresh);
  double residual = 1.0;
  if (second) {
    const RolloutBuffer b2 = collect(st.params, rp.pool, 64, &*second);
    residual = fixture::shaping_residual(b2, rp, frozen);
  }
  std::ostringstream s;
  s << "policy transfer bit-identical " << (identical ? "yes" : "no") << ", step-1 shaping exact "
    << (step1_exact ? "yes" : "no") << ", step-2 shaping residual " << residual;
  return {identical && step1_exact && residual <= 1e-6, s.str()};
}

Verdict protocol_accounting() {
  ExperimentConfig c = ExperimentConfig::desk();
  c.cmdp.teacher_steps = 10;
  c.teacher = PpoConfig::teacher(10);
  c.cmdp.student_steps_per_action = 600;
  c.cmdp.eval_episodes = 4;
  c.deterministic = true;
  std::int64_t episodes = -1;
  const TeacherRun run = run_teacher_training(c.cmdp, c.teacher, 8, [&](const TeacherLogRow&, const CurriculumEnv& env) {
    episodes = env.eval_episodes_run();
  });
  const SeedOutcome outcome = run_seed(c, 8, "");
  const std::int64_t expected = 10 * 5 * 4;

  const ParameterBlock<float> params = run.student;
  const std::string bytes = serialize(params);
  evaluate(params, c.cmdp.tasks, 5, 3);
  const bool untouched = serialize(params) == bytes;

  std::ostringstream s;
  s << "eval episodes " << episodes << "/" << expected << ", records " << outcome.log.records.size() << "/10"
    << ", evaluation leaves parameters " << (untouched ? "unchanged" : "modified");
  return {episodes == expected && outcome.log.records.size() == 10 && run.rows.size() == 10 && untouched, s.str()};
}

struct Counts {
  std::array<int, 8 * kColorCount> n{};
  friend bool operator==(const Counts&, const Counts&) = default;
};

Counts count_objects(const WorldState& s) {
  Counts c;
  for (const Tile& t : s.grid) ++c.n[static_cast<std::size_t>(t.object) * kColorCount + static_cast<std::size_t>(t.color)];
  if (s.carried) ++c.n[static_cast<std::size_t>(s.carried->object) * kColorCount + static_cast<std::size_t>(s.carried->color)];
  c.n[static_cast<std::size_t>(ObjectType::Empty) * kColorCount] = 0;  // empty cells change as objects move
  return c;
}

Verdict environment_properties() {
  std::vector<std::vector<TaskId>> families(5);
  for (const auto& info : task_catalog()) families[static_cast<std::size_t>(info.id.family)].push_back(info.id);
  Rng rng(9);
  long long episodes = 0, unsolvable = 0, overrun = 0, leaks = 0, bad_rewards = 0;
  for (const auto& tasks : families) {
    for (int e = 0; e < 10000; ++e) {
      const TaskId& task = tasks[static_cast<std::size_t>(e) % tasks.size()];
      WorldState s = generate(task, derive_seed(0xACCE, static_cast<std::uint64_t>(episodes)));
      ++episodes;
      if (!oracle::solvable(s)) ++unsolvable;
      const Counts start = count_objects(s);
      int nonzero = 0;
      while (!s.done) {
        const int a = rand_int(rng, 0, kActionCount);
        const bool touches = a >= 3;
        const MoveResult r = advance(s, action_from_index(a));
        if (r.reward != 0.0) {
          ++nonzero;
          if (r.reward < 0.1 || r.reward >= 1.0) ++bad_rewards;
        }
        if (touches && !(count_objects(s) == start)) ++leaks;
      }
      if (s.step_count > s.max_steps) ++overrun;
      if (!(count_objects(s) == start)) ++leaks;
      if (nonzero > 1) ++bad_rewards;
    }
  }
  std::ostringstream s;
  s << episodes << " episodes: unsolvable " << unsolvable << ", over step limit " << overrun << ", conservation breaks "
    << leaks << ", bad rewards " << bad_rewards;
  return {unsolvable == 0 && overrun == 0 && leaks == 0 && bad_rewards == 0, s.str()};
}

Verdict clip_invariant() {
  Rng rng(10);
  std::normal_distribution<double> normal;
  long long violations = 0, unequal = 0;
  for (int i = 0; i < 1000000; ++i) {
    const double ratio = std::exp(normal(rng));
    const double adv = 3.0 * normal(rng);
    const double eps = 0.01 + 0.5 * rand_unit(rng);
    if (clipped_objective(ratio, adv, eps) > ratio * adv) ++violations;
    if (clipped_objective(1.0, adv, eps) != adv) ++unequal;
  }
  return {violations == 0 && unequal == 0,
          "10^6 triples: " + std::to_string(violations) + " above unclipped, " + std::to_string(unequal) +
              " unequal at ratio 1"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"reward formula", reward_formula},
      {"gradient oracle", gradient_oracle},
      {"PPO convergence on Empty-5x5", ppo_convergence},
      {"curriculum vs uniform (desk)", curriculum_vs_uniform},
      {"observation builders", observation_oracles},
      {"window regression", window_regression},
      {"transfer exactness", transfer_exactness},
      {"protocol accounting", protocol_accounting},
      {"environment properties", environment_properties},
      {"clip invariant", clip_invariant},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto started = std::chrono::steady_clock::now();
    Verdict v{false, ""};
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::cout << (v.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[k].first << ": " << v.detail << " ("
              << fmt(secs, 1) << " s)" << std::endl;
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}
