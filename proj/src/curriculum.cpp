#include "cgym/curriculum.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cgym {

void TaskSet::validate() const {
  if (tasks.empty()) throw std::invalid_argument("task set is empty");
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    for (std::size_t j = i + 1; j < tasks.size(); ++j) {
      if (tasks[i] == tasks[j]) throw std::invalid_argument("duplicate task " + tasks[i].name());
    }
  }
  if (target && *target >= tasks.size()) throw std::invalid_argument("target task index out of range");
}

ObservationKind parse_observation_kind(const std::string& name) {
  if (name == "rh") return ObservationKind::RewardHistory;
  if (name == "ptr") return ObservationKind::PreviousTaskReward;
  if (name == "lp") return ObservationKind::LearningProgress;
  if (name == "alp") return ObservationKind::AbsoluteLearningProgress;
  if (name == "ema") return ObservationKind::Ema;
  if (name == "fs-ema" || name == "fsema") return ObservationKind::FastSlowEma;
  throw std::invalid_argument("unknown observation kind: " + name);
}

TeacherRewardKind parse_reward_kind(const std::string& name) {
  if (name == "source" || name == "source-task") return TeacherRewardKind::SourceTask;
  if (name == "target" || name == "target-task") return TeacherRewardKind::TargetTask;
  throw std::invalid_argument("unknown teacher reward: " + name);
}

TransferMethod parse_transfer_method(const std::string& name) {
  if (name == "policy") return TransferMethod::Policy;
  if (name == "reward-shaping" || name == "shaping") return TransferMethod::RewardShaping;
  if (name == "both") return TransferMethod::Both;
  throw std::invalid_argument("unknown transfer method: " + name);
}

std::string to_string(ObservationKind kind) {
  switch (kind) {
    case ObservationKind::RewardHistory: return "rh";
    case ObservationKind::PreviousTaskReward: return "ptr";
    case ObservationKind::LearningProgress: return "lp";
    case ObservationKind::AbsoluteLearningProgress: return "alp";
    case ObservationKind::Ema: return "ema";
    case ObservationKind::FastSlowEma: return "fs-ema";
  }
  return "?";
}

std::string to_string(TeacherRewardKind kind) {
  return kind == TeacherRewardKind::SourceTask ? "source" : "target";
}

std::string to_string(TransferMethod method) {
  switch (method) {
    case TransferMethod::Policy: return "policy";
    case TransferMethod::RewardShaping: return "reward-shaping";
    case TransferMethod::Both: return "both";
  }
  return "?";
}

void EmaSettings::validate() const {
  auto ok = [](double a) { return a > 0.0 && a <= 1.0; };
  if (!ok(alpha) || !ok(fast_alpha) || !ok(slow_alpha)) throw std::invalid_argument("EMA alphas must be in (0, 1]");
  if (!(fast_alpha > slow_alpha)) throw std::invalid_argument("fast EMA alpha must exceed slow alpha");
}

TaskHistory::TaskHistory(std::size_t task_count, EmaSettings ema)
    : settings_(ema),
      series_(task_count),
      last_sampled_(task_count, 0),
      ema_(task_count, 0.0),
      ema_fast_(task_count, 0.0),
      ema_slow_(task_count, 0.0) {
  settings_.validate();
  if (task_count == 0) throw std::invalid_argument("history needs at least one task");
}

void TaskHistory::record(std::size_t selected, std::span<const double> means) {
  if (means.size() != task_count()) throw std::invalid_argument("history: one mean per task required");
  if (selected >= task_count()) throw std::out_of_range("history: selected task out of range");
  const bool first = step_ == 0;
  ++step_;
  for (std::size_t m = 0; m < task_count(); ++m) {
    series_[m].push_back(means[m]);
    ema_[m] = ema_step(ema_[m], means[m], settings_.alpha, first);
    ema_fast_[m] = ema_step(ema_fast_[m], means[m], settings_.fast_alpha, first);
    ema_slow_[m] = ema_step(ema_slow_[m], means[m], settings_.slow_alpha, first);
  }
  last_sampled_[selected] = step_;
  last_task_ = selected;
}

double TaskHistory::latest(std::size_t task) const {
  const auto& s = series_[task];
  return s.empty() ? 0.0 : s.back();
}

double TaskHistory::previous(std::size_t task) const {
  const auto& s = series_[task];
  return s.size() < 2 ? 0.0 : s[s.size() - 2];
}

std::size_t observation_dim(ObservationKind kind, std::size_t task_count) {
  switch (kind) {
    case ObservationKind::RewardHistory: return 2 * task_count;
    case ObservationKind::PreviousTaskReward: return task_count + 1;
    default: return task_count;
  }
}

std::vector<double> learning_progress(const TaskHistory& history) {
  std::vector<double> lp(history.task_count(), 0.0);
  if (history.current_step() == 0) return lp;
  for (std::size_t m = 0; m < lp.size(); ++m) lp[m] = history.latest(m) - history.previous(m);
  return lp;
}

Eigen::VectorXd observe(ObservationKind kind, const TaskHistory& history, int total_teacher_steps) {
  const std::size_t n = history.task_count();
  Eigen::VectorXd obs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(observation_dim(kind, n)));
  if (history.current_step() == 0) return obs;
  const double horizon = std::max(total_teacher_steps, 1);
  switch (kind) {
    case ObservationKind::RewardHistory:
      for (std::size_t m = 0; m < n; ++m) {
        obs(static_cast<Eigen::Index>(2 * m)) = history.latest(m);
        obs(static_cast<Eigen::Index>(2 * m + 1)) = history.last_sampled(m) / horizon;
      }
      break;
    case ObservationKind::PreviousTaskReward: {
      const std::size_t last = *history.last_task();
      obs(static_cast<Eigen::Index>(last)) = 1.0;
      obs(static_cast<Eigen::Index>(n)) = history.latest(last);
      break;
    }
    case ObservationKind::LearningProgress:
    case ObservationKind::AbsoluteLearningProgress: {
      const std::vector<double> lp = learning_progress(history);
      for (std::size_t m = 0; m < n; ++m) {
        obs(static_cast<Eigen::Index>(m)) = kind == ObservationKind::LearningProgress ? lp[m] : std::abs(lp[m]);
      }
      break;
    }
    case ObservationKind::Ema:
      for (std::size_t m = 0; m < n; ++m) obs(static_cast<Eigen::Index>(m)) = history.ema(m);
      break;
    case ObservationKind::FastSlowEma:
      for (std::size_t m = 0; m < n; ++m) obs(static_cast<Eigen::Index>(m)) = history.ema_fast(m) - history.ema_slow(m);
      break;
  }
  return obs;
}

double EvalReport::total() const { return std::accumulate(means.begin(), means.end(), 0.0); }

double teacher_reward(TeacherRewardKind kind, const EvalReport& report, std::optional<std::size_t> target) {
  if (kind == TeacherRewardKind::SourceTask) return report.total();
  if (!target) throw std::invalid_argument("target-task reward needs a designated target task");
  if (*target >= report.means.size()) throw std::out_of_range("target task missing from report");
  return report.means[*target];
}

EvalReport evaluate(const ParameterBlock<float>& params, const TaskSet& tasks, int episodes, std::uint64_t seed,
                    bool greedy) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  EvalReport report;
  report.episodes = episodes;
  report.means.reserve(tasks.size());
  const int obs_size = params.spec.input_dim;
  for (std::size_t m = 0; m < tasks.size(); ++m) {
    const std::uint64_t task_seed = derive_seed(seed, m);
    Rng sampler(derive_seed(task_seed, 0xE7A1));
    std::vector<WorldState> worlds;
    worlds.reserve(static_cast<std::size_t>(episodes));
    for (int e = 0; e < episodes; ++e) {
      worlds.push_back(generate(tasks.tasks[m], derive_seed(task_seed, static_cast<std::uint64_t>(e) + 1)));
    }
    std::vector<double> returns(static_cast<std::size_t>(episodes), 0.0);
    std::vector<std::size_t> active(static_cast<std::size_t>(episodes));
    std::iota(active.begin(), active.end(), std::size_t{0});
    Matrix<float> batch;
    // Episodes advance in lockstep so each forward pass covers every live episode.
    while (!active.empty()) {
      batch.resize(static_cast<Eigen::Index>(active.size()), obs_size);
      for (std::size_t k = 0; k < active.size(); ++k) {
        encode_into(worlds[active[k]],
                    std::span<float>(batch.row(static_cast<Eigen::Index>(k)).data(), static_cast<std::size_t>(obs_size)));
      }
      const Matrix<float> logp = log_softmax(forward(params, batch).logits);
      std::vector<std::size_t> still;
      still.reserve(active.size());
      for (std::size_t k = 0; k < active.size(); ++k) {
        const auto row = static_cast<Eigen::Index>(k);
        int a = 0;
        if (greedy) {
          logp.row(row).maxCoeff(&a);
        } else {
          a = sample_action(std::span<const float>(logp.row(row).data(), static_cast<std::size_t>(logp.cols())), sampler);
        }
        const MoveResult moved = advance(worlds[active[k]], action_from_index(a));
        returns[active[k]] += moved.reward;
        if (!moved.done) still.push_back(active[k]);
      }
      active.swap(still);
    }
    report.means.push_back(std::accumulate(returns.begin(), returns.end(), 0.0) / episodes);
  }
  return report;
}

std::optional<RewardShaper> apply_transfer(const TransferSettings& settings, int teacher_step, StudentState& student,
                                           const std::function<ParameterBlock<float>()>& fresh) {
  // Frozen copy of the weights at the switch instant.
  student.snapshot = copy_parameters(student.params);
  std::optional<RewardShaper> shaper;
  if (teacher_step <= 1) return shaper;
  if (settings.method != TransferMethod::Policy) shaper.emplace(*student.snapshot, settings.shaping_clamp);
  if (settings.method == TransferMethod::RewardShaping && settings.shaping_reinitializes) {
    student.params = fresh();
    student.adam = AdamState<float>(student.params.size());
  }
  return shaper;
}

void CmdpConfig::validate() const {
  tasks.validate();
  student.validate();
  ema.validate();
  if (teacher_steps < 1) throw std::invalid_argument("teacher_steps must be >= 1");
  if (student_steps_per_action < 1) throw std::invalid_argument("student_steps_per_action must be >= 1");
  if (eval_episodes < 1) throw std::invalid_argument("eval_episodes must be >= 1");
  if (reward == TeacherRewardKind::TargetTask && !tasks.target) {
    throw std::invalid_argument("target-task reward needs a designated target task");
  }
}

CurriculumEnv::CurriculumEnv(CmdpConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      seed_(seed),
      student_spec_{kObservationSize, config_.student_hidden, kActionCount, true},
      history_(config_.tasks.size(), config_.ema),
      shuffle_rng_(derive_seed(seed, 0x5A0F)) {
  config_.validate();
  student_.params = fresh_student(0);
  student_.adam = AdamState<float>(student_.params.size());
}

ParameterBlock<float> CurriculumEnv::fresh_student(std::uint64_t stream) const {
  return initialize<float>(student_spec_, derive_seed(derive_seed(seed_, 0x1417), stream));
}

Eigen::VectorXd CurriculumEnv::observation() const {
  return observe(config_.observation, history_, config_.teacher_steps);
}

TeacherStepResult CurriculumEnv::step(std::size_t task) {
  if (task >= config_.tasks.size()) throw std::out_of_range("teacher action outside the task set");
  const int t = history_.current_step() + 1;
  const std::uint64_t step_seed = derive_seed(seed_, static_cast<std::uint64_t>(t));

  std::optional<RewardShaper> shaper =
      apply_transfer(config_.transfer, t, student_, [&] { return fresh_student(static_cast<std::uint64_t>(t)); });

  // Train on the chosen task; the final rollout is shortened so that exactly
  // ceil(steps / actors) * actors environment steps are consumed.
  const PpoConfig& cfg = config_.student;
  ActorPool pool = make_grid_pool(config_.tasks.tasks[task], cfg.num_actors, derive_seed(step_seed, 1));
  TeacherStepResult result;
  result.task = task;
  const std::int64_t per_unroll = static_cast<std::int64_t>(cfg.num_actors) * cfg.unroll_length;
  while (result.env_steps < config_.student_steps_per_action) {
    const std::int64_t remaining = config_.student_steps_per_action - result.env_steps;
    int unroll = cfg.unroll_length;
    if (remaining < per_unroll) unroll = static_cast<int>((remaining + cfg.num_actors - 1) / cfg.num_actors);
    const RolloutBuffer buffer = collect(student_.params, pool, unroll, shaper ? &*shaper : nullptr);
    result.last_update = ppo_update(student_.params, student_.adam, buffer, cfg, shuffle_rng_, total_env_steps_);
    result.env_steps += static_cast<std::int64_t>(buffer.size());
    total_env_steps_ += static_cast<std::int64_t>(buffer.size());
  }

  const std::uint64_t eval_seed = config_.paired_eval ? derive_seed(seed_, 0xE7A1) : derive_seed(step_seed, 2);
  result.report = evaluate(student_.params, config_.tasks, config_.eval_episodes, eval_seed, config_.greedy_eval);
  eval_episodes_run_ += static_cast<std::int64_t>(config_.tasks.size()) * config_.eval_episodes;
  history_.record(task, result.report.means);
  result.reward = teacher_reward(config_.reward, result.report, config_.tasks.target);
  result.observation = observation();
  return result;
}

TeacherRun run_teacher_training(const CmdpConfig& config, const PpoConfig& teacher_config, std::uint64_t seed,
                                 const TeacherCallback& on_step) {
  teacher_config.validate();
  CurriculumEnv env(config, seed);
  const auto task_count = static_cast<int>(config.tasks.size());
  const auto obs_dim = static_cast<int>(observation_dim(config.observation, config.tasks.size()));
  TeacherRun run;
  run.teacher = initialize<float>(NetworkSpec::teacher(obs_dim, task_count), derive_seed(seed, 0x7EAC));
  AdamState<float> adam(run.teacher.size());
  Rng sampler(derive_seed(seed, 0x5A3E));
  Rng shuffle(derive_seed(seed, 0x5A3F));

  const int unroll = teacher_config.unroll_length;
  RolloutBuffer buffer(1, unroll, obs_dim);
  int filled = 0;
  std::int64_t steps_done = 0;
  Eigen::VectorXd obs = env.observation();

  for (int t = 1; t <= config.teacher_steps; ++t) {
    const auto started = std::chrono::steady_clock::now();
    Matrix<float> input = obs.transpose().cast<float>();
    const ForwardResult<float> fwd = forward(run.teacher, input);
    const Matrix<float> logp = log_softmax(fwd.logits);
    const int action =
        sample_action(std::span<const float>(logp.row(0).data(), static_cast<std::size_t>(logp.cols())), sampler);

    const TeacherStepResult result = env.step(static_cast<std::size_t>(action));

    const auto row = static_cast<Eigen::Index>(filled);
    buffer.observations.row(row) = input.row(0);
    buffer.actions[static_cast<std::size_t>(filled)] = action;
    buffer.rewards(row) = result.reward;
    buffer.env_rewards(row) = result.reward;
    buffer.dones[static_cast<std::size_t>(filled)] = 0;
    buffer.log_probs(row) = logp(0, action);
    buffer.values(row) = fwd.values(0);
    ++filled;
    obs = result.observation;

    if (filled == unroll || t == config.teacher_steps) {
      RolloutBuffer batch = buffer;
      if (filled < unroll) {
        RolloutBuffer partial(1, filled, obs_dim);
        partial.observations = buffer.observations.topRows(filled);
        partial.actions.assign(buffer.actions.begin(), buffer.actions.begin() + filled);
        partial.dones.assign(buffer.dones.begin(), buffer.dones.begin() + filled);
        partial.rewards = buffer.rewards.head(filled);
        partial.env_rewards = buffer.env_rewards.head(filled);
        partial.log_probs = buffer.log_probs.head(filled);
        partial.values = buffer.values.head(filled);
        batch = std::move(partial);
      }
      Matrix<float> next = obs.transpose().cast<float>();
      batch.bootstrap_values(0) = forward(run.teacher, next).values(0);
      ppo_update(run.teacher, adam, batch, teacher_config, shuffle, steps_done);
      steps_done += filled;
      filled = 0;
    }

    TeacherLogRow log;
    log.teacher_step = t;
    log.task = result.task;
    log.reward = result.reward;
    log.report = result.report;
    log.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    run.rows.push_back(log);
    if (on_step) on_step(log, env);
  }
  run.student = env.student().params;
  return run;
}

}  // namespace cgym
