#include "cgym/ppo.hpp"

#include <numeric>

namespace cgym {

void PpoConfig::validate() const {
  if (!(discount >= 0.0 && discount <= 1.0)) throw std::invalid_argument("discount must be in [0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw std::invalid_argument("gae_lambda must be in [0, 1]");
  if (!(clip_range > 0.0)) throw std::invalid_argument("clip_range must be positive");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (minibatches < 1) throw std::invalid_argument("minibatches must be >= 1");
  if (unroll_length < 1) throw std::invalid_argument("unroll_length must be >= 1");
  if (num_actors < 1) throw std::invalid_argument("num_actors must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(grad_clip > 0.0)) throw std::invalid_argument("grad_clip must be positive");
  if (linear_lr_schedule && schedule_steps < 1) throw std::invalid_argument("schedule_steps must be >= 1");
}

PpoConfig PpoConfig::student() { return PpoConfig{}; }

PpoConfig PpoConfig::teacher(std::int64_t teacher_steps) {
  PpoConfig c;
  c.learning_rate = 0.03;
  c.linear_lr_schedule = true;
  c.schedule_steps = teacher_steps;
  c.discount = 1.0;
  c.entropy_coef = 0.01;
  c.value_coef = 0.5;
  c.grad_clip = 0.5;
  c.gae_lambda = 0.95;
  c.clip_range = 0.2;
  c.normalize_advantage = true;
  c.minibatches = 1;
  c.epochs = 4;
  c.unroll_length = 4;
  c.num_actors = 1;
  return c;
}

double PpoConfig::learning_rate_at(std::int64_t steps_done) const {
  if (!linear_lr_schedule) return learning_rate;
  const double frac = 1.0 - static_cast<double>(steps_done) / static_cast<double>(schedule_steps);
  return learning_rate * std::max(frac, 0.0);
}

void GridEnv::reset(std::span<float> observation) {
  state_ = generate(task_, rng_());
  encode_into(state_, observation);
}

EnvStep GridEnv::step(int action, std::span<float> observation) {
  const MoveResult moved = advance(state_, action_from_index(action));
  encode_into(state_, observation);
  return {moved.reward, moved.done, moved.reason == Termination::Success};
}

Vector<double> RewardShaper::bonus(const Matrix<float>& observations) const {
  Vector<double> v = forward(snapshot_, observations).values.cast<double>();
  if (clamp_) v = v.cwiseMax(-*clamp_).cwiseMin(*clamp_);
  return v;
}

ActorPool::ActorPool(std::vector<std::unique_ptr<Environment>> envs, std::uint64_t seed) : envs_(std::move(envs)) {
  if (envs_.empty()) throw std::invalid_argument("ActorPool needs at least one environment");
  const int obs = envs_.front()->observation_size();
  observations_ = Matrix<float>::Zero(static_cast<Eigen::Index>(envs_.size()), obs);
  running_returns.assign(envs_.size(), 0.0);
  for (std::size_t i = 0; i < envs_.size(); ++i) {
    samplers_.emplace_back(derive_seed(seed, i));
    envs_[i]->reset(std::span<float>(observations_.row(static_cast<Eigen::Index>(i)).data(),
                                     static_cast<std::size_t>(obs)));
  }
}

ActorPool make_grid_pool(const TaskId& task, int num_actors, std::uint64_t seed) {
  std::vector<std::unique_ptr<Environment>> envs;
  for (int i = 0; i < num_actors; ++i) {
    envs.push_back(std::make_unique<GridEnv>(task, derive_seed(seed, 1000 + static_cast<std::uint64_t>(i))));
  }
  return ActorPool(std::move(envs), derive_seed(seed, 7));
}

RolloutBuffer::RolloutBuffer(int actors, int unroll, int observation_size)
    : num_actors(actors),
      unroll_length(unroll),
      observations(Matrix<float>::Zero(static_cast<Eigen::Index>(actors) * unroll, observation_size)),
      actions(static_cast<std::size_t>(actors * unroll), 0),
      dones(static_cast<std::size_t>(actors * unroll), 0),
      rewards(Vector<double>::Zero(actors * unroll)),
      env_rewards(Vector<double>::Zero(actors * unroll)),
      log_probs(Vector<double>::Zero(actors * unroll)),
      values(Vector<double>::Zero(actors * unroll)),
      bootstrap_values(Vector<double>::Zero(actors)) {}

Transition RolloutBuffer::transition(int actor, int t) const {
  const std::size_t i = index(actor, t);
  const auto row = static_cast<Eigen::Index>(i);
  return {std::span<const float>(observations.row(row).data(), static_cast<std::size_t>(observations.cols())),
          actions[i],
          rewards(row),
          dones[i] != 0,
          log_probs(row),
          values(row)};
}

int sample_action(std::span<const float> log_probs, Rng& rng) {
  const double u = rand_unit(rng);
  double acc = 0.0;
  for (std::size_t a = 0; a < log_probs.size(); ++a) {
    acc += std::exp(static_cast<double>(log_probs[a]));
    if (u < acc) return static_cast<int>(a);
  }
  return static_cast<int>(log_probs.size()) - 1;
}

RolloutBuffer collect(const ParameterBlock<float>& params, ActorPool& pool, int unroll_length,
                      const RewardShaper* shaper) {
  const int actors = static_cast<int>(pool.size());
  const int obs_size = pool.observation_size();
  RolloutBuffer buffer(actors, unroll_length, obs_size);
  Matrix<float> next(actors, obs_size);
  std::vector<EnvStep> steps(static_cast<std::size_t>(actors));

  for (int t = 0; t < unroll_length; ++t) {
    const ForwardResult<float> fwd = forward(params, pool.observations());
    const Matrix<float> logp = log_softmax(fwd.logits);
    for (int i = 0; i < actors; ++i) {
      const std::size_t k = buffer.index(i, t);
      const auto row = static_cast<Eigen::Index>(k);
      const int a = sample_action(std::span<const float>(logp.row(i).data(), static_cast<std::size_t>(logp.cols())),
                                  pool.sampler(static_cast<std::size_t>(i)));
      buffer.observations.row(row) = pool.observations().row(i);
      buffer.actions[k] = a;
      buffer.log_probs(row) = logp(i, a);
      buffer.values(row) = fwd.values(i);
      steps[static_cast<std::size_t>(i)] =
          pool.env(static_cast<std::size_t>(i))
              .step(a, std::span<float>(next.row(i).data(), static_cast<std::size_t>(obs_size)));
    }
    Vector<double> bonus;
    if (shaper) bonus = shaper->bonus(next);
    for (int i = 0; i < actors; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const auto row = static_cast<Eigen::Index>(buffer.index(i, t));
      const EnvStep& s = steps[ui];
      buffer.env_rewards(row) = s.reward;
      buffer.rewards(row) = shaper ? s.reward + bonus(i) : s.reward;
      buffer.dones[buffer.index(i, t)] = s.done ? 1 : 0;
      pool.running_returns[ui] += s.reward;
      if (s.done) {
        pool.finished_returns.push_back(pool.running_returns[ui]);
        pool.running_returns[ui] = 0.0;
        pool.env(ui).reset(std::span<float>(next.row(i).data(), static_cast<std::size_t>(obs_size)));
      }
    }
    pool.observations() = next;
    pool.env_steps += actors;
  }
  buffer.bootstrap_values = forward(params, pool.observations()).values.cast<double>();
  return buffer;
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double bootstrap, double discount, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw std::invalid_argument("compute_gae: misaligned arrays");
  GaeResult out{Vector<double>::Zero(static_cast<Eigen::Index>(n)), Vector<double>::Zero(static_cast<Eigen::Index>(n))};
  double running = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double next_value = k + 1 < n ? values[k + 1] : bootstrap;
    const double live = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + discount * next_value * live - values[k];
    running = delta + discount * lambda * live * running;
    out.advantages(static_cast<Eigen::Index>(k)) = running;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    out.returns(i) = out.advantages(i) + values[k];
  }
  return out;
}

GaeResult compute_gae(const RolloutBuffer& buffer, double discount, double lambda) {
  const auto n = static_cast<Eigen::Index>(buffer.size());
  GaeResult out{Vector<double>::Zero(n), Vector<double>::Zero(n)};
  const auto t = static_cast<std::size_t>(buffer.unroll_length);
  for (int a = 0; a < buffer.num_actors; ++a) {
    const std::size_t start = buffer.index(a, 0);
    const GaeResult one = compute_gae(
        std::span<const double>(buffer.rewards.data() + start, t), std::span<const double>(buffer.values.data() + start, t),
        std::span<const std::uint8_t>(buffer.dones.data() + start, t), buffer.bootstrap_values(a), discount, lambda);
    out.advantages.segment(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(t)) = one.advantages;
    out.returns.segment(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(t)) = one.returns;
  }
  return out;
}

UpdateStats ppo_update(ParameterBlock<float>& params, AdamState<float>& adam, const RolloutBuffer& buffer,
                       const PpoConfig& config, Rng& rng, std::int64_t steps_done) {
  config.validate();
  const std::size_t n = buffer.size();
  if (n == 0) throw std::invalid_argument("ppo_update: empty buffer");
  if (adam.first_moment.size() != params.values.size()) adam = AdamState<float>(params.size());
  const GaeResult gae = compute_gae(buffer, config.discount, config.gae_lambda);
  const double lr = config.learning_rate_at(steps_done);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t per_batch = std::max<std::size_t>(1, n / static_cast<std::size_t>(config.minibatches));

  UpdateStats stats;
  stats.learning_rate = lr;
  int updates = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int mb = 0; mb < config.minibatches; ++mb) {
      const std::size_t begin = static_cast<std::size_t>(mb) * per_batch;
      const std::size_t end = mb + 1 == config.minibatches ? n : std::min(n, begin + per_batch);
      if (begin >= end) continue;
      const auto m = static_cast<Eigen::Index>(end - begin);
      PpoBatch<float> batch;
      batch.observations.resize(m, buffer.observations.cols());
      batch.actions.resize(static_cast<std::size_t>(m));
      batch.old_log_probs.resize(m);
      batch.advantages.resize(m);
      batch.returns.resize(m);
      for (Eigen::Index r = 0; r < m; ++r) {
        const std::size_t src = order[begin + static_cast<std::size_t>(r)];
        const auto s = static_cast<Eigen::Index>(src);
        batch.observations.row(r) = buffer.observations.row(s);
        batch.actions[static_cast<std::size_t>(r)] = buffer.actions[src];
        batch.old_log_probs(r) = static_cast<float>(buffer.log_probs(s));
        batch.advantages(r) = static_cast<float>(gae.advantages(s));
        batch.returns(r) = static_cast<float>(gae.returns(s));
      }
      if (config.normalize_advantage) normalize_advantages(batch.advantages);

      PpoLoss<float> loss = ppo_loss(params, batch, config);
      Vector<float> grads = backward(params, loss.trace, loss.grad_logits, loss.grad_values);
      if (!grads.allFinite()) throw DivergenceError("non-finite gradient");
      stats.grad_norm += clip_global_norm(grads, config.grad_clip);
      adam_update(params.values, grads, adam, lr);

      stats.policy_loss += loss.policy_loss;
      stats.value_loss += loss.value_loss;
      stats.entropy += loss.entropy;
      stats.clip_fraction += loss.clip_fraction;
      stats.approx_kl += loss.approx_kl;
      ++updates;
    }
  }
  const double k = updates > 0 ? 1.0 / updates : 0.0;
  stats.policy_loss *= k;
  stats.value_loss *= k;
  stats.entropy *= k;
  stats.clip_fraction *= k;
  stats.approx_kl *= k;
  stats.grad_norm *= k;
  return stats;
}

}  // namespace cgym
