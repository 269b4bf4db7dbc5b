#ifndef CGYM_BASELINES_HPP_
#define CGYM_BASELINES_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cgym/curriculum.hpp"
#include "cgym/random.hpp"

namespace cgym {

// Heuristic task sequencers. All of them read the same TaskHistory as the
// RL teacher and break exact ties uniformly at random.

enum class BaselineKind { Uniform, LearningProgress, Thompson, Window };

BaselineKind parse_baseline_kind(const std::string& name);

/// Index drawn uniformly from the positions holding the maximum value.
std::size_t argmax_random_tie(std::span<const double> values, Rng& rng);

/// Ordinary least-squares slope of y on x; 0 for fewer than two points or
/// constant x.
double ols_slope(std::span<const double> x, std::span<const double> y);

/// Per-task slope over the last `window` entries (0 = whole history).
std::vector<double> window_slopes(const TaskHistory& history, int window);

std::size_t select_uniform(std::size_t task_count, Rng& rng);
std::size_t select_lp(const TaskHistory& history, Rng& rng);
// Named after the bandit method but greedy on the latest mean returns.
std::size_t select_thompson(const TaskHistory& history, Rng& rng);
std::size_t select_window(const TaskHistory& history, int window, Rng& rng);

std::size_t select_baseline(BaselineKind kind, const TaskHistory& history, int window, Rng& rng);

}  // namespace cgym

#endif  // CGYM_BASELINES_HPP_
