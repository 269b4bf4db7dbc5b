#include "cgym/baselines.hpp"

#include <stdexcept>

namespace cgym {

BaselineKind parse_baseline_kind(const std::string& name) {
  if (name == "uniform") return BaselineKind::Uniform;
  if (name == "lp") return BaselineKind::LearningProgress;
  if (name == "thompson") return BaselineKind::Thompson;
  if (name == "window") return BaselineKind::Window;
  throw std::invalid_argument("unknown baseline: " + name);
}

std::size_t argmax_random_tie(std::span<const double> values, Rng& rng) {
  if (values.empty()) throw std::invalid_argument("argmax of an empty set");
  double best = values[0];
  for (double v : values) best = std::max(best, v);
  std::vector<std::size_t> ties;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == best) ties.push_back(i);
  }
  if (ties.size() == 1) return ties.front();
  return ties[static_cast<std::size_t>(rand_int(rng, 0, static_cast<int>(ties.size())))];
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("ols_slope: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

std::vector<double> window_slopes(const TaskHistory& history, int window) {
  std::vector<double> slopes(history.task_count(), 0.0);
  const int t = history.current_step();
  const int count = window > 0 ? std::min(window, t) : t;
  if (count < 2) return slopes;
  std::vector<double> x(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) x[static_cast<std::size_t>(i)] = t - count + 1 + i;
  for (std::size_t m = 0; m < slopes.size(); ++m) {
    const auto& s = history.series(m);
    slopes[m] = ols_slope(x, std::span<const double>(s).last(static_cast<std::size_t>(count)));
  }
  return slopes;
}

std::size_t select_uniform(std::size_t task_count, Rng& rng) {
  if (task_count == 0) throw std::invalid_argument("select_uniform: no tasks");
  return static_cast<std::size_t>(rand_int(rng, 0, static_cast<int>(task_count)));
}

std::size_t select_lp(const TaskHistory& history, Rng& rng) {
  const std::vector<double> lp = learning_progress(history);
  return argmax_random_tie(lp, rng);
}

std::size_t select_thompson(const TaskHistory& history, Rng& rng) {
  std::vector<double> latest(history.task_count());
  for (std::size_t m = 0; m < latest.size(); ++m) latest[m] = history.latest(m);
  return argmax_random_tie(latest, rng);
}

std::size_t select_window(const TaskHistory& history, int window, Rng& rng) {
  const std::vector<double> slopes = window_slopes(history, window);
  return argmax_random_tie(slopes, rng);
}

std::size_t select_baseline(BaselineKind kind, const TaskHistory& history, int window, Rng& rng) {
  switch (kind) {
    case BaselineKind::Uniform: return select_uniform(history.task_count(), rng);
    case BaselineKind::LearningProgress: return select_lp(history, rng);
    case BaselineKind::Thompson: return select_thompson(history, rng);
    case BaselineKind::Window: return select_window(history, window, rng);
  }
  return 0;
}

}  // namespace cgym
