#ifndef CGYM_TESTS_FIXTURES_HPP_
#define CGYM_TESTS_FIXTURES_HPP_

#include <memory>
#include <vector>

#include "cgym/curriculum.hpp"
#include "cgym/ppo.hpp"

namespace fixture {

// Grid environment that keeps a copy of every post-step observation.
class RecordingEnv : public cgym::Environment {
 public:
  RecordingEnv(cgym::TaskId task, std::uint64_t seed) : inner_(task, seed) {}
  int observation_size() const override { return inner_.observation_size(); }
  int action_count() const override { return inner_.action_count(); }
  void reset(std::span<float> obs) override { inner_.reset(obs); }
  cgym::EnvStep step(int action, std::span<float> obs) override {
    const cgym::EnvStep s = inner_.step(action, obs);
    seen.emplace_back(obs.begin(), obs.end());
    return s;
  }
  std::vector<std::vector<float>> seen;

 private:
  cgym::GridEnv inner_;
};

struct RecordingPool {
  cgym::ActorPool pool;
  std::vector<RecordingEnv*> envs;
};

inline RecordingPool recording_pool(const cgym::TaskId& task, int actors, std::uint64_t seed) {
  std::vector<std::unique_ptr<cgym::Environment>> envs;
  std::vector<RecordingEnv*> raw;
  for (int i = 0; i < actors; ++i) {
    auto e = std::make_unique<RecordingEnv>(task, cgym::derive_seed(seed, static_cast<std::uint64_t>(i)));
    raw.push_back(e.get());
    envs.push_back(std::move(e));
  }
  return {cgym::ActorPool(std::move(envs), seed), raw};
}

// Largest |(training - environment reward) - snapshot value of the
// post-step observation| over a buffer collected from `rp`.
inline double shaping_residual(const cgym::RolloutBuffer& buf, const RecordingPool& rp,
                               const cgym::ParameterBlock<float>& snapshot) {
  double worst = 0.0;
  for (int a = 0; a < buf.num_actors; ++a) {
    const auto& seen = rp.envs[static_cast<std::size_t>(a)]->seen;
    const std::size_t offset = seen.size() - static_cast<std::size_t>(buf.unroll_length);
    cgym::Matrix<float> post(buf.unroll_length, cgym::kObservationSize);
    for (int t = 0; t < buf.unroll_length; ++t) {
      const auto& o = seen[offset + static_cast<std::size_t>(t)];
      for (int j = 0; j < cgym::kObservationSize; ++j) post(t, j) = o[static_cast<std::size_t>(j)];
    }
    const cgym::Vector<float> v = cgym::forward(snapshot, post).values;
    for (int t = 0; t < buf.unroll_length; ++t) {
      const auto row = static_cast<Eigen::Index>(buf.index(a, t));
      const double diff = buf.rewards(row) - buf.env_rewards(row);
      worst = std::max(worst, std::abs(diff - static_cast<double>(v(t))));
    }
  }
  return worst;
}

}  // namespace fixture

#endif  // CGYM_TESTS_FIXTURES_HPP_
