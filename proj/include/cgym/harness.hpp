#ifndef CGYM_HARNESS_HPP_
#define CGYM_HARNESS_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cgym/baselines.hpp"
#include "cgym/curriculum.hpp"

namespace cgym {

enum class ExperimentMode { SingleTask, Curriculum };

struct ExperimentConfig {
  ExperimentMode mode = ExperimentMode::Curriculum;
  CmdpConfig cmdp;
  PpoConfig teacher = PpoConfig::teacher(100);
  std::string teacher_kind = "rl";  // rl | uniform | lp | thompson | window
  int window_size = 0;              // 0 = whole history
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string output_dir = "runs";
  bool deterministic = false;
  double threshold = 0.9;

  /// 5 tasks, 100 x 5'000 student steps, 20 evaluation episodes, 8 actors.
  static ExperimentConfig desk();
  /// 18 tasks, 1'000 x 10'000 student steps, 100 evaluation episodes, 40 actors.
  static ExperimentConfig paper();
  static ExperimentConfig profile(const std::string& name);

  void validate() const;
};

/// Overlays INI text onto `config`. Sections: [experiment], [curriculum],
/// [student], [teacher]; PPO keys follow the hyperparameter table rows
/// (learning_rate, discount, entropy_loss_coefficient, ...).
void apply_config_text(ExperimentConfig& config, const std::string& ini_text);
void apply_config_file(ExperimentConfig& config, const std::string& path);

struct RunRecord {
  int teacher_step = 0;
  std::string selected_task;
  double teacher_reward = 0.0;
  std::vector<double> means;
  double total_mean_return = 0.0;
  double wall_ms = 0.0;

  bool failed() const { return selected_task == kFailedMarker; }
  static constexpr const char* kFailedMarker = "!diverged";
};

struct RunLog {
  std::vector<std::string> task_names;
  std::vector<RunRecord> records;

  /// Records excluding failure sentinels.
  std::vector<RunRecord> completed() const;
};

std::string csv_header(const std::vector<std::string>& task_names);
std::string csv_row(const RunRecord& record);
RunLog parse_run_csv(const std::string& text);
RunLog read_run_csv(const std::string& path);

struct Metrics {
  double total_mean_return = 0.0;
  double percent_solved = 0.0;
  // Zero-based index of the first record whose tracked mean reaches the threshold.
  std::optional<int> time_to_threshold;
  std::optional<double> jumpstart;
  std::optional<double> asymptotic;
};

/// The tracked series is the target task's mean when `target` is set, else
/// the total mean return. Jumpstart/asymptotic need a comparison run.
Metrics compute_metrics(const RunLog& log, double threshold, std::optional<std::size_t> target = std::nullopt,
                        const RunLog* comparison = nullptr);
std::string metrics_json(const Metrics& metrics);

/// Learning curves: total mean return plus one line per task.
std::string emit_curves(const RunLog& log);

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::string directory;
  bool failed = false;
  std::string failure;
  RunLog log;
  Metrics metrics;
};

/// Runs every configured seed; writes run.csv, student.ckpt, teacher.ckpt
/// (RL teacher only), metrics.json and curves.svg under
/// <output_dir>/seed_<n>/.
std::vector<SeedOutcome> run_experiment(const ExperimentConfig& config, std::ostream* progress = nullptr);

/// Same, for a single seed and explicit directory ("" = keep in memory only).
SeedOutcome run_seed(const ExperimentConfig& config, std::uint64_t seed, const std::string& directory,
                     std::ostream* progress = nullptr);

}  // namespace cgym

#endif  // CGYM_HARNESS_HPP_
