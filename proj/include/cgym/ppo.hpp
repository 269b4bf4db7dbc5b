#ifndef CGYM_PPO_HPP_
#define CGYM_PPO_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cgym/gridworld.hpp"
#include "cgym/network.hpp"
#include "cgym/random.hpp"

namespace cgym {

struct PpoConfig {
  double learning_rate = 3e-4;
  double discount = 0.999;
  double gae_lambda = 0.95;
  double clip_range = 0.2;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double grad_clip = 0.5;
  int epochs = 2;
  int minibatches = 1;
  int unroll_length = 256;
  int num_actors = 8;
  bool normalize_advantage = true;
  bool linear_lr_schedule = false;
  // Horizon of the linear schedule, in the caller's step units.
  std::int64_t schedule_steps = 1;

  void validate() const;

  /// Grid-world student defaults at desk scale (8 actors instead of 40).
  static PpoConfig student();
  /// Teacher defaults; `teacher_steps` sets the linear schedule horizon.
  static PpoConfig teacher(std::int64_t teacher_steps);

  double learning_rate_at(std::int64_t steps_done) const;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Environments and rollout collection.

struct EnvStep {
  double reward = 0.0;
  bool done = false;
  bool success = false;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual int observation_size() const = 0;
  virtual int action_count() const = 0;
  virtual void reset(std::span<float> observation) = 0;
  // Writes the post-step observation (before any reset) into `observation`.
  virtual EnvStep step(int action, std::span<float> observation) = 0;
};

/// Grid world task; every reset draws a fresh layout from its own stream.
class GridEnv : public Environment {
 public:
  GridEnv(TaskId task, std::uint64_t seed) : task_(task), rng_(seed) {}

  int observation_size() const override { return kObservationSize; }
  int action_count() const override { return kActionCount; }
  void reset(std::span<float> observation) override;
  EnvStep step(int action, std::span<float> observation) override;

  const WorldState& state() const { return state_; }

 private:
  TaskId task_;
  Rng rng_;
  WorldState state_;
};

/// Frozen value function whose output is added to every training reward.
class RewardShaper {
 public:
  explicit RewardShaper(ParameterBlock<float> snapshot, std::optional<double> clamp = std::nullopt)
      : snapshot_(std::move(snapshot)), clamp_(clamp) {}

  Vector<double> bonus(const Matrix<float>& observations) const;
  const ParameterBlock<float>& snapshot() const { return snapshot_; }

 private:
  ParameterBlock<float> snapshot_;
  std::optional<double> clamp_;
};

class ActorPool {
 public:
  ActorPool(std::vector<std::unique_ptr<Environment>> envs, std::uint64_t seed);

  std::size_t size() const { return envs_.size(); }
  int observation_size() const { return static_cast<int>(observations_.cols()); }
  Environment& env(std::size_t i) { return *envs_[i]; }
  Rng& sampler(std::size_t i) { return samplers_[i]; }
  Matrix<float>& observations() { return observations_; }

  // Bookkeeping updated by collect().
  std::int64_t env_steps = 0;
  std::vector<double> finished_returns;
  std::vector<double> running_returns;

 private:
  std::vector<std::unique_ptr<Environment>> envs_;
  std::vector<Rng> samplers_;
  Matrix<float> observations_;
};

ActorPool make_grid_pool(const TaskId& task, int num_actors, std::uint64_t seed);

struct Transition {
  std::span<const float> observation;
  int action;
  double reward;
  bool done;
  double log_prob;
  double value;
};

// Sample (actor, t) lives at row actor * unroll_length + t.
struct RolloutBuffer {
  int num_actors = 0;
  int unroll_length = 0;
  Matrix<float> observations;
  std::vector<int> actions;
  std::vector<std::uint8_t> dones;
  Vector<double> rewards;
  Vector<double> env_rewards;
  Vector<double> log_probs;
  Vector<double> values;
  Vector<double> bootstrap_values;

  RolloutBuffer() = default;
  RolloutBuffer(int actors, int unroll, int observation_size);

  std::size_t size() const { return actions.size(); }
  std::size_t index(int actor, int t) const {
    return static_cast<std::size_t>(actor) * static_cast<std::size_t>(unroll_length) + static_cast<std::size_t>(t);
  }
  Transition transition(int actor, int t) const;
};

/// Categorical draw from one row of log-probabilities.
int sample_action(std::span<const float> log_probs, Rng& rng);

RolloutBuffer collect(const ParameterBlock<float>& params, ActorPool& pool, int unroll_length,
                      const RewardShaper* shaper = nullptr);

// ---------------------------------------------------------------------------
// Advantage estimation.

struct GaeResult {
  Vector<double> advantages;
  Vector<double> returns;
};

/// One actor's sequence; `dones[t]` marks the end of an episode after step t.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double bootstrap, double discount, double lambda);

/// GAE over every actor of the buffer, laid out like the buffer.
GaeResult compute_gae(const RolloutBuffer& buffer, double discount, double lambda);

/// Shifts to mean 0 and scales to unit (population) std with a 1e-8 guard.
template <typename Derived>
void normalize_advantages(Eigen::MatrixBase<Derived>& adv) {
  using Scalar = typename Derived::Scalar;
  if (adv.size() < 2) return;
  const double mean = adv.template cast<double>().mean();
  const double var = (adv.template cast<double>().array() - mean).square().mean();
  adv = ((adv.template cast<double>().array() - mean) / (std::sqrt(var) + 1e-8)).template cast<Scalar>().matrix();
}

// ---------------------------------------------------------------------------
// Clipped surrogate loss.

inline double clipped_objective(double ratio, double advantage, double clip_range) {
  const double clipped = std::clamp(ratio, 1.0 - clip_range, 1.0 + clip_range);
  return std::min(ratio * advantage, clipped * advantage);
}

template <typename Scalar>
struct PpoBatch {
  Matrix<Scalar> observations;
  std::vector<int> actions;
  Vector<Scalar> old_log_probs;
  Vector<Scalar> advantages;
  Vector<Scalar> returns;

  std::size_t size() const { return actions.size(); }
};

template <typename Scalar>
struct PpoLoss {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy_loss = 0.0;
  double total = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  Matrix<Scalar> grad_logits;
  Vector<Scalar> grad_values;
  ForwardTrace<Scalar> trace;
};

/// Mean-reduced PPO loss and its gradients w.r.t. the network outputs:
///   -mean(min(r A, clip(r) A)) + c1 mean((V - R)^2) - c2 mean(H).
/// Advantages are used as given (normalize beforehand if configured).
template <typename Scalar>
PpoLoss<Scalar> ppo_loss(const ParameterBlock<Scalar>& params, const PpoBatch<Scalar>& batch,
                         const PpoConfig& config) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (n == 0) throw std::invalid_argument("ppo_loss: empty batch");
  ForwardResult<Scalar> fwd = forward(params, batch.observations);
  const Matrix<Scalar> logp = log_softmax(fwd.logits);
  const Matrix<Scalar> prob = logp.array().exp().matrix();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double eps = config.clip_range;

  PpoLoss<Scalar> out;
  out.grad_logits = Matrix<Scalar>::Zero(n, fwd.logits.cols());
  out.grad_values = Vector<Scalar>::Zero(n);
  double surrogate = 0.0, value_err = 0.0, entropy = 0.0, clipped = 0.0, kl = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = batch.actions[static_cast<std::size_t>(i)];
    const double new_lp = static_cast<double>(logp(i, a));
    const double ratio = std::exp(new_lp - static_cast<double>(batch.old_log_probs(i)));
    const double adv = static_cast<double>(batch.advantages(i));
    const double unclipped_obj = ratio * adv;
    const double clipped_obj = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
    surrogate += std::min(unclipped_obj, clipped_obj);
    if (std::abs(ratio - 1.0) > eps) clipped += 1.0;
    kl += static_cast<double>(batch.old_log_probs(i)) - new_lp;

    // d(-obj/n)/d logp[a]; zero where the clipped branch is the active minimum.
    const double g_logp = unclipped_obj <= clipped_obj ? -ratio * adv * inv_n : 0.0;
    double h = 0.0;
    for (Eigen::Index j = 0; j < logp.cols(); ++j) h -= static_cast<double>(prob(i, j) * logp(i, j));
    entropy += h;
    for (Eigen::Index j = 0; j < logp.cols(); ++j) {
      const double p = static_cast<double>(prob(i, j));
      double g = -g_logp * p;
      if (j == a) g += g_logp;
      g += config.entropy_coef * inv_n * p * (static_cast<double>(logp(i, j)) + h);
      out.grad_logits(i, j) = static_cast<Scalar>(g);
    }
    const double diff = static_cast<double>(fwd.values(i)) - static_cast<double>(batch.returns(i));
    value_err += diff * diff;
    out.grad_values(i) = static_cast<Scalar>(2.0 * config.value_coef * diff * inv_n);
  }
  out.policy_loss = -surrogate * inv_n;
  out.value_loss = config.value_coef * value_err * inv_n;
  out.entropy = entropy * inv_n;
  out.entropy_loss = -config.entropy_coef * out.entropy;
  out.total = out.policy_loss + out.value_loss + out.entropy_loss;
  out.clip_fraction = clipped * inv_n;
  out.approx_kl = kl * inv_n;
  if (!std::isfinite(out.total)) throw DivergenceError("non-finite PPO loss");
  out.trace = std::move(fwd.trace);
  return out;
}

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double grad_norm = 0.0;
  double learning_rate = 0.0;
};

/// Epochs of shuffled minibatch Adam steps on the buffer. `steps_done` feeds
/// the linear learning-rate schedule when enabled.
UpdateStats ppo_update(ParameterBlock<float>& params, AdamState<float>& adam, const RolloutBuffer& buffer,
                       const PpoConfig& config, Rng& rng, std::int64_t steps_done = 0);

}  // namespace cgym

#endif  // CGYM_PPO_HPP_
