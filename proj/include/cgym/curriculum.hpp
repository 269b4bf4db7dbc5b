#ifndef CGYM_CURRICULUM_HPP_
#define CGYM_CURRICULUM_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cgym/gridworld.hpp"
#include "cgym/network.hpp"
#include "cgym/ppo.hpp"

namespace cgym {

// The teacher's MDP: actions pick a task, the student trains on it, and the
// student's evaluation on every task becomes the teacher's observation and
// reward.

struct TaskSet {
  std::vector<TaskId> tasks;
  std::optional<std::size_t> target;

  std::size_t size() const { return tasks.size(); }
  void validate() const;
};

enum class ObservationKind { RewardHistory, PreviousTaskReward, LearningProgress, AbsoluteLearningProgress, Ema, FastSlowEma };
enum class TeacherRewardKind { SourceTask, TargetTask };
enum class TransferMethod { Policy, RewardShaping, Both };

ObservationKind parse_observation_kind(const std::string& name);
TeacherRewardKind parse_reward_kind(const std::string& name);
TransferMethod parse_transfer_method(const std::string& name);
std::string to_string(ObservationKind kind);
std::string to_string(TeacherRewardKind kind);
std::string to_string(TransferMethod method);

struct EmaSettings {
  double alpha = 0.5;
  double fast_alpha = 0.9;
  double slow_alpha = 0.1;

  void validate() const;
};

/// ema_1 = x_1, ema_t = alpha x_t + (1 - alpha) ema_{t-1}.
inline double ema_step(double previous, double x, double alpha, bool first) {
  return first ? x : alpha * x + (1.0 - alpha) * previous;
}

class TaskHistory {
 public:
  explicit TaskHistory(std::size_t task_count, EmaSettings ema = {});

  /// Appends one teacher step: `selected` was trained, `means` is the new
  /// evaluation (one entry per task).
  void record(std::size_t selected, std::span<const double> means);

  std::size_t task_count() const { return series_.size(); }
  int current_step() const { return step_; }
  const std::vector<double>& series(std::size_t task) const { return series_[task]; }
  double latest(std::size_t task) const;
  double previous(std::size_t task) const;
  int last_sampled(std::size_t task) const { return last_sampled_[task]; }
  std::optional<std::size_t> last_task() const { return last_task_; }
  double ema(std::size_t task) const { return ema_[task]; }
  double ema_fast(std::size_t task) const { return ema_fast_[task]; }
  double ema_slow(std::size_t task) const { return ema_slow_[task]; }
  const EmaSettings& ema_settings() const { return settings_; }

 private:
  EmaSettings settings_;
  int step_ = 0;
  std::vector<std::vector<double>> series_;
  std::vector<int> last_sampled_;
  std::vector<double> ema_, ema_fast_, ema_slow_;
  std::optional<std::size_t> last_task_;
};

std::size_t observation_dim(ObservationKind kind, std::size_t task_count);

/// Learning progress per task: latest minus previous mean (previous = 0 at t = 1).
std::vector<double> learning_progress(const TaskHistory& history);

/// Teacher observation. `total_teacher_steps` scales RH's last-sampled step into [0, 1].
Eigen::VectorXd observe(ObservationKind kind, const TaskHistory& history, int total_teacher_steps);

struct EvalReport {
  std::vector<double> means;
  int episodes = 0;

  double total() const;
};

double teacher_reward(TeacherRewardKind kind, const EvalReport& report, std::optional<std::size_t> target);

/// Runs `episodes` fresh episodes per task; parameters are only read.
EvalReport evaluate(const ParameterBlock<float>& params, const TaskSet& tasks, int episodes, std::uint64_t seed,
                    bool greedy = false);

struct StudentState {
  ParameterBlock<float> params;
  AdamState<float> adam;
  std::optional<ParameterBlock<float>> snapshot;  // taken at the latest switch
};

struct TransferSettings {
  TransferMethod method = TransferMethod::Policy;
  bool shaping_reinitializes = true;
  std::optional<double> shaping_clamp;
};

/// Prepares the student for teacher step `teacher_step` (1-based) and
/// returns the reward shaper to use, if any. `fresh` supplies re-initialized
/// parameters when the method calls for them.
std::optional<RewardShaper> apply_transfer(const TransferSettings& settings, int teacher_step, StudentState& student,
                                           const std::function<ParameterBlock<float>()>& fresh);

struct CmdpConfig {
  TaskSet tasks;
  ObservationKind observation = ObservationKind::PreviousTaskReward;
  TeacherRewardKind reward = TeacherRewardKind::SourceTask;
  TransferSettings transfer;
  PpoConfig student = PpoConfig::student();
  std::vector<int> student_hidden = {200, 128};
  int teacher_steps = 100;
  std::int64_t student_steps_per_action = 5000;
  int eval_episodes = 20;
  EmaSettings ema;
  bool paired_eval = false;
  bool greedy_eval = false;

  void validate() const;
};

struct TeacherStepResult {
  std::size_t task = 0;
  Eigen::VectorXd observation;
  double reward = 0.0;
  EvalReport report;
  std::int64_t env_steps = 0;
  UpdateStats last_update;
};

class CurriculumEnv {
 public:
  CurriculumEnv(CmdpConfig config, std::uint64_t seed);

  Eigen::VectorXd observation() const;
  TeacherStepResult step(std::size_t task);

  const CmdpConfig& config() const { return config_; }
  const TaskHistory& history() const { return history_; }
  const StudentState& student() const { return student_; }
  int teacher_step() const { return history_.current_step(); }
  std::int64_t total_env_steps() const { return total_env_steps_; }
  std::int64_t eval_episodes_run() const { return eval_episodes_run_; }

 private:
  ParameterBlock<float> fresh_student(std::uint64_t stream) const;

  CmdpConfig config_;
  std::uint64_t seed_;
  NetworkSpec student_spec_;
  TaskHistory history_;
  StudentState student_;
  Rng shuffle_rng_;
  std::int64_t total_env_steps_ = 0;
  std::int64_t eval_episodes_run_ = 0;
};

struct TeacherLogRow {
  int teacher_step = 0;
  std::size_t task = 0;
  double reward = 0.0;
  EvalReport report;
  double wall_ms = 0.0;
};

using TeacherCallback = std::function<void(const TeacherLogRow&, const CurriculumEnv&)>;

struct TeacherRun {
  std::vector<TeacherLogRow> rows;
  ParameterBlock<float> teacher;
  ParameterBlock<float> student;
};

/// PPO teacher trained online over one continuing CMDP episode.
TeacherRun run_teacher_training(const CmdpConfig& config, const PpoConfig& teacher_config, std::uint64_t seed,
                                 const TeacherCallback& on_step = {});

}  // namespace cgym

#endif  // CGYM_CURRICULUM_HPP_
