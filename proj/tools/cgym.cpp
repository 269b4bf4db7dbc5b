#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cgym/gradcheck.hpp"
#include "cgym/harness.hpp"

namespace fs = std::filesystem;
using namespace cgym;

namespace {

struct Common {
  std::string profile = "desk";
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::string output_dir;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--profile", c.profile, "Built-in profile")->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--config", c.config_path, "INI file overlaid on the profile")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Run a single seed instead of the configured list");
  cmd->add_flag("--deterministic", c.deterministic, "Zero wall-clock columns so reruns are byte-identical");
  cmd->add_option("--output-dir", c.output_dir, "Where seed_<n>/ directories are written");
}

ExperimentConfig build_config(const Common& c) {
  ExperimentConfig config = ExperimentConfig::profile(c.profile);
  if (!c.config_path.empty()) apply_config_file(config, c.config_path);
  if (c.seed) config.seeds = {*c.seed};
  if (c.deterministic) config.deterministic = true;
  if (!c.output_dir.empty()) config.output_dir = c.output_dir;
  return config;
}

void set_target(ExperimentConfig& config, const std::string& name) {
  const TaskId id = TaskId::parse(name);
  auto& tasks = config.cmdp.tasks.tasks;
  auto it = std::find(tasks.begin(), tasks.end(), id);
  if (it == tasks.end()) {
    tasks.push_back(id);
    it = tasks.end() - 1;
  }
  config.cmdp.tasks.target = static_cast<std::size_t>(it - tasks.begin());
}

int run(const ExperimentConfig& config) {
  const auto outcomes = run_experiment(config, &std::cout);
  int failed = 0;
  for (const auto& o : outcomes) {
    std::cout << "seed " << o.seed << ": ";
    if (o.failed) {
      std::cout << "FAILED (" << o.failure << ")\n";
      ++failed;
    } else {
      std::cout << "total_mean_return " << o.metrics.total_mean_return << ", solved " << o.metrics.percent_solved
                << "%, output " << o.directory << "\n";
    }
  }
  return failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Teacher-student curriculum learning on grid worlds"};
  app.require_subcommand(1);

  Common train_opts;
  std::string train_task;
  auto* train = app.add_subcommand("train", "Train PPO on a single task, evaluating every task set member");
  add_common(train, train_opts);
  train->add_option("--task", train_task, "Task to train on (defaults to the target or the first task)");

  Common cur_opts;
  std::string teacher_kind;
  auto* curriculum = app.add_subcommand("curriculum", "Run a teacher-student curriculum");
  add_common(curriculum, cur_opts);
  curriculum->add_option("--teacher", teacher_kind, "rl, uniform, lp, thompson or window");

  Common eval_opts;
  std::string checkpoint;
  int episodes = 100;
  bool greedy = false;
  auto* eval = app.add_subcommand("eval", "Evaluate a student checkpoint on the task set");
  add_common(eval, eval_opts);
  eval->add_option("checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  eval->add_option("--episodes", episodes, "Episodes per task")->check(CLI::PositiveNumber);
  eval->add_flag("--greedy", greedy, "Take the most likely action instead of sampling");

  int networks = 50;
  std::uint64_t grad_seed = 1;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the PPO loss gradient");
  gradcheck->add_option("--networks", networks)->check(CLI::PositiveNumber);
  gradcheck->add_option("--seed", grad_seed);

  std::string metrics_dir, metrics_target;
  double threshold = 0.9;
  auto* metrics = app.add_subcommand("metrics", "Recompute metrics.json from a run directory");
  metrics->add_option("run-dir", metrics_dir)->required()->check(CLI::ExistingDirectory);
  metrics->add_option("--target", metrics_target, "Task column tracked for time to threshold");
  metrics->add_option("--threshold", threshold);

  std::string plot_dir;
  auto* plot = app.add_subcommand("plot", "Write curves.svg for a run directory");
  plot->add_option("run-dir", plot_dir)->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      ExperimentConfig config = build_config(train_opts);
      config.mode = ExperimentMode::SingleTask;
      if (!train_task.empty()) set_target(config, train_task);
      return run(config);
    }
    if (*curriculum) {
      ExperimentConfig config = build_config(cur_opts);
      config.mode = ExperimentMode::Curriculum;
      if (!teacher_kind.empty()) config.teacher_kind = teacher_kind;
      return run(config);
    }
    if (*eval) {
      const ExperimentConfig config = build_config(eval_opts);
      const ParameterBlock<float> params = load_checkpoint(checkpoint);
      const EvalReport report =
          evaluate(params, config.cmdp.tasks, episodes, eval_opts.seed.value_or(config.seeds.front()), greedy);
      for (std::size_t m = 0; m < report.means.size(); ++m) {
        std::cout << config.cmdp.tasks.tasks[m].name() << " " << report.means[m] << "\n";
      }
      std::cout << "total " << report.total() << "\n";
      return 0;
    }
    if (*gradcheck) {
      const GradCheckReport report = run_gradcheck(networks, grad_seed);
      std::cout << "networks " << report.networks << ", largest " << report.max_parameters
                << " parameters, max relative error " << report.max_relative_error << "\n";
      return report.max_relative_error <= 1e-5 ? 0 : 1;
    }
    if (*metrics) {
      const RunLog log = read_run_csv((fs::path(metrics_dir) / "run.csv").string());
      std::optional<std::size_t> target;
      if (!metrics_target.empty()) {
        const auto it = std::find(log.task_names.begin(), log.task_names.end(), metrics_target);
        if (it == log.task_names.end()) throw std::invalid_argument("no column named " + metrics_target);
        target = static_cast<std::size_t>(it - log.task_names.begin());
      }
      const std::string json = metrics_json(compute_metrics(log, threshold, target));
      std::ofstream(fs::path(metrics_dir) / "metrics.json") << json;
      std::cout << json;
      return 0;
    }
    if (*plot) {
      const RunLog log = read_run_csv((fs::path(plot_dir) / "run.csv").string());
      const fs::path out = fs::path(plot_dir) / "curves.svg";
      std::ofstream(out) << emit_curves(log);
      std::cout << out.string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
