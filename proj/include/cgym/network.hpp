#ifndef CGYM_NETWORK_HPP_
#define CGYM_NETWORK_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgym {

// Shared-torso actor-critic MLP: ReLU hidden layers, a linear policy head
// emitting logits and a linear scalar value head. Batches are row-major
// (one sample per row). Everything is templated on the scalar so that the
// float training path and the double gradient oracle share one code path.

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct NetworkSpec {
  int input_dim = 1;
  std::vector<int> hidden;
  int action_dim = 1;
  bool has_value_head = true;

  static NetworkSpec student(int input_dim = 1875, int action_dim = 6) {
    return {input_dim, {200, 128}, action_dim, true};
  }
  static NetworkSpec teacher(int observation_dim, int task_count) {
    return {observation_dim, {64, 128, 64}, task_count, true};
  }

  void validate() const {
    if (input_dim < 1 || action_dim < 1) throw std::invalid_argument("network widths must be >= 1");
    for (int h : hidden) {
      if (h < 1) throw std::invalid_argument("network widths must be >= 1");
    }
  }

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// One weight matrix (rows = out, cols = in) or bias vector (cols = 1).
struct ParameterSlot {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

// Order: torso layers (weight, bias), policy head, value head.
inline std::vector<ParameterSlot> parameter_layout(const NetworkSpec& spec) {
  std::vector<ParameterSlot> layout;
  std::size_t offset = 0;
  auto add = [&](std::string name, int rows, int cols) {
    layout.push_back({std::move(name), rows, cols, offset});
    offset += layout.back().size();
  };
  int in = spec.input_dim;
  for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
    add("torso." + std::to_string(i) + ".weight", spec.hidden[i], in);
    add("torso." + std::to_string(i) + ".bias", spec.hidden[i], 1);
    in = spec.hidden[i];
  }
  add("policy.weight", spec.action_dim, in);
  add("policy.bias", spec.action_dim, 1);
  if (spec.has_value_head) {
    add("value.weight", 1, in);
    add("value.bias", 1, 1);
  }
  return layout;
}

inline std::size_t parameter_count(const NetworkSpec& spec) {
  std::size_t total = 0;
  for (const auto& slot : parameter_layout(spec)) total += slot.size();
  return total;
}

template <typename Scalar>
struct ParameterBlock {
  using WeightMap = Eigen::Map<Matrix<Scalar>>;
  using ConstWeightMap = Eigen::Map<const Matrix<Scalar>>;
  using BiasMap = Eigen::Map<Vector<Scalar>>;
  using ConstBiasMap = Eigen::Map<const Vector<Scalar>>;

  NetworkSpec spec;
  std::vector<ParameterSlot> layout;
  Vector<Scalar> values;

  ParameterBlock() = default;
  explicit ParameterBlock(NetworkSpec s) : spec(std::move(s)), layout(parameter_layout(spec)) {
    spec.validate();
    values = Vector<Scalar>::Zero(static_cast<Eigen::Index>(parameter_count(spec)));
  }

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  std::size_t layer_count() const { return spec.hidden.size() + 1 + (spec.has_value_head ? 1 : 0); }

  // Layer k: torso layers first, then policy head, then value head.
  WeightMap weight(std::size_t k) { return map_weight(layout[2 * k]); }
  ConstWeightMap weight(std::size_t k) const { return map_weight(layout[2 * k]); }
  BiasMap bias(std::size_t k) { return map_bias(layout[2 * k + 1]); }
  ConstBiasMap bias(std::size_t k) const { return map_bias(layout[2 * k + 1]); }

  std::size_t policy_layer() const { return spec.hidden.size(); }
  std::size_t value_layer() const { return spec.hidden.size() + 1; }

  template <typename Other>
  ParameterBlock<Other> cast() const {
    ParameterBlock<Other> out(spec);
    out.values = values.template cast<Other>();
    return out;
  }

 private:
  WeightMap map_weight(const ParameterSlot& s) {
    return WeightMap(values.data() + s.offset, s.rows, s.cols);
  }
  ConstWeightMap map_weight(const ParameterSlot& s) const {
    return ConstWeightMap(values.data() + s.offset, s.rows, s.cols);
  }
  BiasMap map_bias(const ParameterSlot& s) { return BiasMap(values.data() + s.offset, s.rows); }
  ConstBiasMap map_bias(const ParameterSlot& s) const { return ConstBiasMap(values.data() + s.offset, s.rows); }
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> orthogonal(int rows, int cols, double gain, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const int big = std::max(rows, cols);
  const int small = std::min(rows, cols);
  Eigen::MatrixXd a(big, small);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(small).template triangularView<Eigen::Upper>();
  for (int j = 0; j < small; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  Eigen::MatrixXd w = rows >= cols ? q : Eigen::MatrixXd(q.transpose());
  return (gain * w).cast<Scalar>();
}

}  // namespace detail

/// Orthogonal weights (gain sqrt(2) torso, 0.01 policy, 1 value), zero biases.
template <typename Scalar>
ParameterBlock<Scalar> initialize(const NetworkSpec& spec, std::uint64_t seed) {
  ParameterBlock<Scalar> params(spec);
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < params.layer_count(); ++k) {
    double gain = std::sqrt(2.0);
    if (k == params.policy_layer()) gain = 0.01;
    if (k == params.value_layer()) gain = 1.0;
    auto w = params.weight(k);
    w = detail::orthogonal<Scalar>(static_cast<int>(w.rows()), static_cast<int>(w.cols()), gain, rng);
  }
  return params;
}

template <typename Scalar>
ParameterBlock<Scalar> copy_parameters(const ParameterBlock<Scalar>& src) {
  return src;
}

template <typename Scalar>
struct ForwardTrace {
  // activations[0] is the input batch; activations[k+1] the k-th hidden output.
  std::vector<Matrix<Scalar>> activations;
};

template <typename Scalar>
struct ForwardResult {
  Matrix<Scalar> logits;
  Vector<Scalar> values;
  ForwardTrace<Scalar> trace;
};

template <typename Scalar, typename Derived>
ForwardResult<Scalar> forward(const ParameterBlock<Scalar>& params, const Eigen::MatrixBase<Derived>& batch) {
  if (batch.cols() != params.spec.input_dim) {
    throw std::invalid_argument("batch has " + std::to_string(batch.cols()) + " columns, network expects " +
                                std::to_string(params.spec.input_dim));
  }
  ForwardResult<Scalar> out;
  auto& acts = out.trace.activations;
  acts.reserve(params.spec.hidden.size() + 1);
  acts.emplace_back(batch);
  for (std::size_t k = 0; k < params.spec.hidden.size(); ++k) {
    Matrix<Scalar> z = acts.back() * params.weight(k).transpose();
    z.rowwise() += params.bias(k).transpose();
    acts.emplace_back(z.cwiseMax(Scalar(0)));
  }
  const Matrix<Scalar>& top = acts.back();
  const std::size_t p = params.policy_layer();
  out.logits = top * params.weight(p).transpose();
  out.logits.rowwise() += params.bias(p).transpose();
  if (params.spec.has_value_head) {
    const std::size_t v = params.value_layer();
    out.values = top * params.weight(v).row(0).transpose();
    out.values.array() += params.bias(v)(0);
  } else {
    out.values = Vector<Scalar>::Zero(batch.rows());
  }
  return out;
}

/// Gradient of a scalar loss given its gradients w.r.t. logits and values.
template <typename Scalar>
Vector<Scalar> backward(const ParameterBlock<Scalar>& params, const ForwardTrace<Scalar>& trace,
                        const Matrix<Scalar>& grad_logits, const Vector<Scalar>& grad_values) {
  const auto& acts = trace.activations;
  const Eigen::Index batch = acts.front().rows();
  if (grad_logits.rows() != batch || grad_logits.cols() != params.spec.action_dim ||
      grad_values.size() != batch) {
    throw std::invalid_argument("output gradients do not match the forward batch");
  }
  ParameterBlock<Scalar> grads(params.spec);
  const Matrix<Scalar>& top = acts.back();
  const std::size_t p = params.policy_layer();
  grads.weight(p).noalias() = grad_logits.transpose() * top;
  grads.bias(p) = grad_logits.colwise().sum().transpose();
  Matrix<Scalar> grad_hidden = grad_logits * params.weight(p);
  if (params.spec.has_value_head) {
    const std::size_t v = params.value_layer();
    grads.weight(v).row(0).noalias() = grad_values.transpose() * top;
    grads.bias(v)(0) = grad_values.sum();
    grad_hidden.noalias() += grad_values * params.weight(v).row(0);
  }
  for (std::size_t k = params.spec.hidden.size(); k-- > 0;) {
    const Matrix<Scalar>& out = acts[k + 1];
    Matrix<Scalar> grad_z = grad_hidden.cwiseProduct((out.array() > Scalar(0)).template cast<Scalar>().matrix());
    grads.weight(k).noalias() = grad_z.transpose() * acts[k];
    grads.bias(k) = grad_z.colwise().sum().transpose();
    if (k > 0) grad_hidden.noalias() = grad_z * params.weight(k);
  }
  return std::move(grads.values);
}

template <typename Scalar>
Matrix<Scalar> log_softmax(const Matrix<Scalar>& logits) {
  Matrix<Scalar> out = logits;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const Scalar m = out.row(i).maxCoeff();
    const Scalar lse = m + std::log((out.row(i).array() - m).exp().sum());
    out.row(i).array() -= lse;
  }
  return out;
}

template <typename Scalar>
Matrix<Scalar> softmax(const Matrix<Scalar>& logits) {
  return log_softmax(logits).array().exp().matrix();
}

template <typename Scalar>
struct AdamState {
  Vector<Scalar> first_moment;
  Vector<Scalar> second_moment;
  std::int64_t step = 0;

  AdamState() = default;
  explicit AdamState(std::size_t n)
      : first_moment(Vector<Scalar>::Zero(static_cast<Eigen::Index>(n))),
        second_moment(Vector<Scalar>::Zero(static_cast<Eigen::Index>(n))) {}
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
void adam_update(Vector<Scalar>& params, const Vector<Scalar>& grads, AdamState<Scalar>& state, double lr,
                 const AdamHyper& hyper = {}) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw std::invalid_argument("adam_update: length mismatch");
  }
  ++state.step;
  const auto b1 = static_cast<Scalar>(hyper.beta1);
  const auto b2 = static_cast<Scalar>(hyper.beta2);
  state.first_moment = b1 * state.first_moment + (Scalar(1) - b1) * grads;
  state.second_moment = b2 * state.second_moment + (Scalar(1) - b2) * grads.cwiseAbs2();
  const double t = static_cast<double>(state.step);
  const auto c1 = static_cast<Scalar>(1.0 - std::pow(hyper.beta1, t));
  const auto c2 = static_cast<Scalar>(1.0 - std::pow(hyper.beta2, t));
  const auto eps = static_cast<Scalar>(hyper.epsilon);
  params.array() -= static_cast<Scalar>(lr) * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + eps);
}

/// Rescales `grads` in place so that its L2 norm is at most `max_norm`;
/// returns the norm before clipping.
template <typename Scalar>
double clip_global_norm(Vector<Scalar>& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("max_norm must be positive");
  const double norm = std::sqrt(grads.template cast<double>().squaredNorm());
  if (norm > max_norm) grads *= static_cast<Scalar>(max_norm / norm);
  return norm;
}

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// "CGYM1", u32 input_dim, u32 action_dim, u32 has_value_head, u32 hidden
// count, u32 per hidden width, u64 parameter count, then float32 values in
// layout order. All integers and floats little-endian.
std::string serialize(const ParameterBlock<float>& params);
ParameterBlock<float> deserialize(const std::string& bytes);
ParameterBlock<float> deserialize(const std::string& bytes, const NetworkSpec& expected);

void save_checkpoint(const ParameterBlock<float>& params, const std::string& path);
ParameterBlock<float> load_checkpoint(const std::string& path);

}  // namespace cgym

#endif  // CGYM_NETWORK_HPP_
