#include "cgym/harness.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include "json.hpp"
#include <sstream>

namespace cgym {

namespace {

namespace fs = std::filesystem;
using boost::property_tree::ptree;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) throw std::invalid_argument("bad number in CSV: " + text);
  return v;
}

void apply_ppo(PpoConfig& c, const ptree& section) {
  auto num = [&](const char* key, double& dst) {
    if (auto v = section.get_optional<double>(key)) dst = *v;
  };
  auto integer = [&](const char* key, int& dst) {
    if (auto v = section.get_optional<int>(key)) dst = *v;
  };
  auto flag = [&](const char* key, bool& dst) {
    if (auto v = section.get_optional<bool>(key)) dst = *v;
  };
  num("learning_rate", c.learning_rate);
  flag("linear_learning_rate_schedule", c.linear_lr_schedule);
  num("discount", c.discount);
  num("entropy_loss_coefficient", c.entropy_coef);
  num("value_loss_coefficient", c.value_coef);
  num("gradient_norm_clip", c.grad_clip);
  num("gae_lambda", c.gae_lambda);
  num("clipping_range", c.clip_range);
  flag("normalize_advantage", c.normalize_advantage);
  integer("minibatches", c.minibatches);
  integer("epochs", c.epochs);
  integer("unroll_length", c.unroll_length);
  integer("number_of_actors", c.num_actors);
}

std::vector<TaskId> desk_tasks() {
  return {TaskId::parse("Empty-5x5"), TaskId::parse("Empty-6x6"), TaskId::parse("Empty-8x8"),
          TaskId::parse("DoorKey-5x5"), TaskId::parse("FourRooms")};
}

}  // namespace

ExperimentConfig ExperimentConfig::desk() {
  ExperimentConfig c;
  c.cmdp.tasks.tasks = desk_tasks();
  c.cmdp.teacher_steps = 100;
  c.cmdp.student_steps_per_action = 5000;
  c.cmdp.eval_episodes = 20;
  c.cmdp.student.num_actors = 8;
  c.teacher = PpoConfig::teacher(c.cmdp.teacher_steps);
  c.output_dir = "runs/desk";
  return c;
}

ExperimentConfig ExperimentConfig::paper() {
  ExperimentConfig c;
  c.cmdp.tasks.tasks.clear();
  for (const TaskInfo& info : task_catalog()) c.cmdp.tasks.tasks.push_back(info.id);
  c.cmdp.teacher_steps = 1000;
  c.cmdp.student_steps_per_action = 10000;
  c.cmdp.eval_episodes = 100;
  c.cmdp.student.num_actors = 40;
  c.teacher = PpoConfig::teacher(c.cmdp.teacher_steps);
  c.output_dir = "runs/paper";
  return c;
}

ExperimentConfig ExperimentConfig::profile(const std::string& name) {
  if (name == "desk") return desk();
  if (name == "paper") return paper();
  throw std::invalid_argument("unknown profile: " + name);
}

void ExperimentConfig::validate() const {
  cmdp.validate();
  teacher.validate();
  if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
  if (teacher_kind != "rl") parse_baseline_kind(teacher_kind);
  if (window_size == 1 || window_size < 0) throw std::invalid_argument("window_size must be >= 2 or 0 (whole history)");
}

void apply_config_text(ExperimentConfig& config, const std::string& ini_text) {
  ptree tree;
  std::istringstream in(ini_text);
  boost::property_tree::ini_parser::read_ini(in, tree);

  const ptree empty;
  const ptree& exp = tree.get_child("experiment", empty);
  if (auto v = exp.get_optional<std::string>("mode")) {
    if (*v == "single-task") {
      config.mode = ExperimentMode::SingleTask;
    } else if (*v == "curriculum") {
      config.mode = ExperimentMode::Curriculum;
    } else {
      throw std::invalid_argument("unknown mode: " + *v);
    }
  }
  if (auto v = exp.get_optional<std::string>("tasks")) {
    config.cmdp.tasks.tasks.clear();
    for (const auto& name : split_list(*v)) config.cmdp.tasks.tasks.push_back(TaskId::parse(name));
    config.cmdp.tasks.target.reset();
  }
  if (auto v = exp.get_optional<std::string>("target")) {
    if (v->empty() || *v == "none") {
      config.cmdp.tasks.target.reset();
    } else {
      const TaskId id = TaskId::parse(*v);
      const auto& tasks = config.cmdp.tasks.tasks;
      const auto it = std::find(tasks.begin(), tasks.end(), id);
      if (it == tasks.end()) throw std::invalid_argument("target " + *v + " is not in the task set");
      config.cmdp.tasks.target = static_cast<std::size_t>(it - tasks.begin());
    }
  }
  if (auto v = exp.get_optional<std::string>("teacher")) config.teacher_kind = *v;
  if (auto v = exp.get_optional<std::string>("observation")) config.cmdp.observation = parse_observation_kind(*v);
  if (auto v = exp.get_optional<std::string>("reward")) config.cmdp.reward = parse_reward_kind(*v);
  if (auto v = exp.get_optional<std::string>("transfer")) config.cmdp.transfer.method = parse_transfer_method(*v);
  if (auto v = exp.get_optional<int>("teacher_steps")) config.cmdp.teacher_steps = *v;
  if (auto v = exp.get_optional<std::int64_t>("student_steps_per_action")) config.cmdp.student_steps_per_action = *v;
  if (auto v = exp.get_optional<int>("eval_episodes")) config.cmdp.eval_episodes = *v;
  if (auto v = exp.get_optional<std::string>("seeds")) {
    config.seeds.clear();
    for (const auto& s : split_list(*v)) config.seeds.push_back(std::stoull(s));
  }
  if (auto v = exp.get_optional<std::string>("output_dir")) config.output_dir = *v;
  if (auto v = exp.get_optional<bool>("deterministic")) config.deterministic = *v;
  if (auto v = exp.get_optional<double>("threshold")) config.threshold = *v;

  const ptree& cur = tree.get_child("curriculum", empty);
  if (auto v = cur.get_optional<double>("ema_alpha")) config.cmdp.ema.alpha = *v;
  if (auto v = cur.get_optional<double>("ema_fast_alpha")) config.cmdp.ema.fast_alpha = *v;
  if (auto v = cur.get_optional<double>("ema_slow_alpha")) config.cmdp.ema.slow_alpha = *v;
  if (auto v = cur.get_optional<int>("window_size")) config.window_size = *v;
  if (auto v = cur.get_optional<bool>("paired_eval")) config.cmdp.paired_eval = *v;
  if (auto v = cur.get_optional<bool>("greedy_eval")) config.cmdp.greedy_eval = *v;
  if (auto v = cur.get_optional<bool>("shaping_reinitializes")) config.cmdp.transfer.shaping_reinitializes = *v;
  if (auto v = cur.get_optional<std::string>("shaping_clamp")) {
    if (*v == "none" || v->empty()) {
      config.cmdp.transfer.shaping_clamp.reset();
    } else {
      config.cmdp.transfer.shaping_clamp = std::stod(*v);
    }
  }
  if (auto v = cur.get_optional<std::string>("student_hidden")) {
    config.cmdp.student_hidden.clear();
    for (const auto& s : split_list(*v)) config.cmdp.student_hidden.push_back(std::stoi(s));
  }

  apply_ppo(config.cmdp.student, tree.get_child("student", empty));
  apply_ppo(config.teacher, tree.get_child("teacher", empty));
  config.teacher.schedule_steps = config.cmdp.teacher_steps;
}

void apply_config_file(ExperimentConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::ostringstream text;
  text << in.rdbuf();
  apply_config_text(config, text.str());
}

std::vector<RunRecord> RunLog::completed() const {
  std::vector<RunRecord> out;
  for (const auto& r : records) {
    if (!r.failed()) out.push_back(r);
  }
  return out;
}

std::string csv_header(const std::vector<std::string>& task_names) {
  std::string out = "teacher_step,selected_task,teacher_reward";
  for (const auto& n : task_names) out += "," + n;
  out += ",total_mean_return,wall_ms\n";
  return out;
}

std::string csv_row(const RunRecord& r) {
  std::string out = std::to_string(r.teacher_step) + "," + r.selected_task + "," + format_double(r.teacher_reward);
  for (double m : r.means) out += "," + format_double(m);
  out += "," + format_double(r.total_mean_return) + "," + format_double(r.wall_ms) + "\n";
  return out;
}

RunLog parse_run_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty run log");
  std::vector<std::string> header = split_list(line);
  if (header.size() < 5 || header[0] != "teacher_step" || header[1] != "selected_task" ||
      header[2] != "teacher_reward" || header[header.size() - 2] != "total_mean_return" || header.back() != "wall_ms") {
    throw std::invalid_argument("run log header does not match the expected schema");
  }
  RunLog log;
  log.task_names.assign(header.begin() + 3, header.end() - 2);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells = split_list(line);
    if (cells.size() != header.size()) throw std::invalid_argument("run log row has the wrong column count");
    RunRecord r;
    r.teacher_step = std::stoi(cells[0]);
    r.selected_task = cells[1];
    r.teacher_reward = parse_double(cells[2]);
    for (std::size_t i = 3; i + 2 < cells.size(); ++i) r.means.push_back(parse_double(cells[i]));
    r.total_mean_return = parse_double(cells[cells.size() - 2]);
    r.wall_ms = parse_double(cells.back());
    log.records.push_back(std::move(r));
  }
  return log;
}

RunLog read_run_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_csv(text.str());
}

namespace {

double tracked(const RunRecord& r, std::optional<std::size_t> target) {
  return target ? r.means.at(*target) : r.total_mean_return;
}

}  // namespace

Metrics compute_metrics(const RunLog& log, double threshold, std::optional<std::size_t> target,
                        const RunLog* comparison) {
  const std::vector<RunRecord> records = log.completed();
  if (records.empty()) throw std::invalid_argument("compute_metrics: no completed records");
  Metrics m;
  const RunRecord& last = records.back();
  m.total_mean_return = 0.0;
  int solved = 0;
  for (double v : last.means) {
    m.total_mean_return += v;
    if (v > 0.0) ++solved;
  }
  m.percent_solved = last.means.empty() ? 0.0 : 100.0 * solved / static_cast<double>(last.means.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (tracked(records[i], target) >= threshold) {
      m.time_to_threshold = static_cast<int>(i);
      break;
    }
  }
  if (comparison) {
    const std::vector<RunRecord> other = comparison->completed();
    if (!other.empty()) {
      m.jumpstart = tracked(records.front(), target) - tracked(other.front(), target);
      m.asymptotic = tracked(records.back(), target) - tracked(other.back(), target);
    }
  }
  return m;
}

std::string metrics_json(const Metrics& m) {
  nlohmann::json j;
  j["total_mean_return"] = m.total_mean_return;
  j["percent_solved"] = m.percent_solved;
  j["time_to_threshold"] = m.time_to_threshold ? nlohmann::json(*m.time_to_threshold) : nlohmann::json(nullptr);
  j["jumpstart"] = m.jumpstart ? nlohmann::json(*m.jumpstart) : nlohmann::json(nullptr);
  j["asymptotic"] = m.asymptotic ? nlohmann::json(*m.asymptotic) : nlohmann::json(nullptr);
  return j.dump(2) + "\n";
}

std::string emit_curves(const RunLog& log) {
  const std::vector<RunRecord> records = log.completed();
  if (records.size() < 2) throw std::invalid_argument("emit_curves: need at least two records");

  constexpr double kWidth = 800, kHeight = 480, kLeft = 60, kRight = 180, kTop = 30, kBottom = 50;
  static const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                   "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

  std::vector<std::pair<std::string, std::vector<double>>> series;
  series.emplace_back("total", std::vector<double>{});
  for (const auto& name : log.task_names) series.emplace_back(name, std::vector<double>{});
  for (const auto& r : records) {
    series[0].second.push_back(r.total_mean_return);
    for (std::size_t i = 0; i < r.means.size() && i + 1 < series.size(); ++i) series[i + 1].second.push_back(r.means[i]);
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& [name, ys] : series) {
    for (double y : ys) {
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
  }
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double x0 = records.front().teacher_step;
  const double x1 = records.back().teacher_step == records.front().teacher_step ? x0 + 1 : records.back().teacher_step;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * plot_w; };
  auto py = [&](double y) { return kTop + (hi - y) / (hi - lo) * plot_h; };

  std::ostringstream svg;
  svg << std::setprecision(6);
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" "
      << "data-ymin=\"" << lo << "\" data-ymax=\"" << hi << "\">\n"
      << "  <rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
      << "  <line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << kTop + plot_h << "\" stroke=\"black\"/>\n"
      << "  <line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
      << "\" stroke=\"black\"/>\n"
      << "  <text x=\"" << kLeft << "\" y=\"" << kHeight - 15 << "\" font-size=\"12\">teacher step " << x0 << " .. "
      << records.back().teacher_step << "</text>\n"
      << "  <text x=\"5\" y=\"" << kTop << "\" font-size=\"11\">" << hi << "</text>\n"
      << "  <text x=\"5\" y=\"" << kTop + plot_h << "\" font-size=\"11\">" << lo << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& [name, ys] = series[s];
    const char* color = s == 0 ? "black" : kPalette[(s - 1) % 10];
    svg << "  <path class=\"series\" data-name=\"" << name << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"" << (s == 0 ? 2.5 : 1.2) << "\" d=\"";
    for (std::size_t i = 0; i < ys.size(); ++i) {
      svg << (i == 0 ? "M" : " L") << px(records[i].teacher_step) << " " << py(ys[i]);
    }
    svg << "\"/>\n";
    svg << "  <text x=\"" << kLeft + plot_w + 10 << "\" y=\"" << kTop + 15 * (s + 1) << "\" font-size=\"11\" fill=\""
        << color << "\">" << name << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

namespace {

class RunWriter {
 public:
  RunWriter(const std::string& directory, std::vector<std::string> names, bool deterministic, std::ostream* progress)
      : deterministic_(deterministic), progress_(progress) {
    log_.task_names = std::move(names);
    if (!directory.empty()) {
      fs::create_directories(directory);
      csv_.open(fs::path(directory) / "run.csv", std::ios::trunc);
      if (!csv_) throw std::runtime_error("cannot write run.csv in " + directory);
      csv_ << csv_header(log_.task_names);
      csv_.flush();
    }
  }

  void add(int step, const std::string& task, double reward, const EvalReport& report, double wall_ms) {
    RunRecord r;
    r.teacher_step = step;
    r.selected_task = task;
    r.teacher_reward = reward;
    r.means = report.means;
    r.total_mean_return = report.total();
    r.wall_ms = deterministic_ ? 0.0 : std::round(wall_ms);
    append(r);
    if (progress_) {
      *progress_ << "step " << step << " task " << task << " reward " << reward << " total " << r.total_mean_return
                 << "\n";
      progress_->flush();
    }
  }

  void fail(int step) {
    RunRecord r;
    r.teacher_step = step;
    r.selected_task = RunRecord::kFailedMarker;
    r.teacher_reward = std::numeric_limits<double>::quiet_NaN();
    r.means.assign(log_.task_names.size(), std::numeric_limits<double>::quiet_NaN());
    r.total_mean_return = std::numeric_limits<double>::quiet_NaN();
    append(r);
  }

  const RunLog& log() const { return log_; }

 private:
  void append(const RunRecord& r) {
    log_.records.push_back(r);
    if (csv_.is_open()) {
      csv_ << csv_row(r);
      csv_.flush();
    }
  }

  bool deterministic_;
  std::ostream* progress_;
  std::ofstream csv_;
  RunLog log_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

SeedOutcome run_seed(const ExperimentConfig& config, std::uint64_t seed, const std::string& directory,
                     std::ostream* progress) {
  config.validate();
  std::vector<std::string> names;
  for (const TaskId& t : config.cmdp.tasks.tasks) names.push_back(t.name());
  RunWriter writer(directory, names, config.deterministic, progress);
  SeedOutcome outcome;
  outcome.seed = seed;
  outcome.directory = directory;

  std::optional<ParameterBlock<float>> student;
  std::optional<ParameterBlock<float>> teacher;
  int step = 0;
  try {
    if (config.mode == ExperimentMode::Curriculum && config.teacher_kind == "rl") {
      TeacherRun run = run_teacher_training(config.cmdp, config.teacher, seed,
                                            [&](const TeacherLogRow& row, const CurriculumEnv&) {
                                              step = row.teacher_step;
                                              writer.add(row.teacher_step, names[row.task], row.reward, row.report,
                                                         row.wall_ms);
                                            });
      student = std::move(run.student);
      teacher = std::move(run.teacher);
    } else {
      CmdpConfig cmdp = config.cmdp;
      std::optional<BaselineKind> baseline;
      std::size_t fixed_task = cmdp.tasks.target.value_or(0);
      if (config.mode == ExperimentMode::SingleTask) {
        cmdp.transfer.method = TransferMethod::Policy;
      } else {
        baseline = parse_baseline_kind(config.teacher_kind);
      }
      CurriculumEnv env(cmdp, seed);
      Rng rng(derive_seed(seed, 0xBA5E));
      for (int t = 1; t <= cmdp.teacher_steps; ++t) {
        step = t;
        const auto started = std::chrono::steady_clock::now();
        const std::size_t task =
            baseline ? select_baseline(*baseline, env.history(), config.window_size, rng) : fixed_task;
        const TeacherStepResult result = env.step(task);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
        writer.add(t, names[task], result.reward, result.report, ms);
      }
      student = env.student().params;
    }
  } catch (const DivergenceError& e) {
    writer.fail(step + 1);
    outcome.failed = true;
    outcome.failure = e.what();
  }

  outcome.log = writer.log();
  if (!outcome.log.completed().empty()) {
    outcome.metrics = compute_metrics(outcome.log, config.threshold, config.cmdp.tasks.target);
  }
  if (!directory.empty()) {
    const fs::path dir(directory);
    if (student) save_checkpoint(*student, (dir / "student.ckpt").string());
    if (teacher) save_checkpoint(*teacher, (dir / "teacher.ckpt").string());
    if (!outcome.log.completed().empty()) write_text(dir / "metrics.json", metrics_json(outcome.metrics));
    if (outcome.log.completed().size() >= 2) write_text(dir / "curves.svg", emit_curves(outcome.log));
  }
  return outcome;
}

std::vector<SeedOutcome> run_experiment(const ExperimentConfig& config, std::ostream* progress) {
  config.validate();
  std::vector<SeedOutcome> out;
  for (std::uint64_t seed : config.seeds) {
    const std::string dir = config.output_dir.empty()
                                ? std::string()
                                : (fs::path(config.output_dir) / ("seed_" + std::to_string(seed))).string();
    if (progress) *progress << "== seed " << seed << " ==\n";
    out.push_back(run_seed(config, seed, dir, progress));
  }
  return out;
}

}  // namespace cgym
