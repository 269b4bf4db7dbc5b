#include "cgym/gradcheck.hpp"

#include <random>

#include "cgym/random.hpp"

namespace cgym {

namespace {

// Smallest distance of any hidden pre-activation of `x` to zero.
double relu_margin(const ParameterBlock<double>& params, const Vector<double>& x) {
  double margin = std::numeric_limits<double>::infinity();
  Vector<double> h = x;
  for (std::size_t k = 0; k < params.spec.hidden.size(); ++k) {
    Vector<double> z = params.weight(k) * h + params.bias(k);
    margin = std::min(margin, z.cwiseAbs().minCoeff());
    h = z.cwiseMax(0.0);
  }
  return margin;
}

}  // namespace

GradCheckCase random_gradcheck_case(std::uint64_t seed, std::size_t max_params, double kink_margin) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  NetworkSpec spec;
  do {
    spec.input_dim = rand_int(rng, 2, 16);
    spec.hidden.assign(static_cast<std::size_t>(rand_int(rng, 1, 4)), 0);
    for (int& w : spec.hidden) w = rand_int(rng, 2, 32);
    spec.action_dim = rand_int(rng, 2, 7);
  } while (parameter_count(spec) > max_params);

  GradCheckCase c;
  c.params = ParameterBlock<double>(spec);
  for (Eigen::Index i = 0; i < c.params.values.size(); ++i) c.params.values(i) = 0.5 * normal(rng);
  c.config = PpoConfig::student();
  c.config.clip_range = 0.2;

  const int batch = rand_int(rng, 4, 17);
  c.batch.observations.resize(batch, spec.input_dim);
  c.batch.actions.resize(static_cast<std::size_t>(batch));
  c.batch.old_log_probs.resize(batch);
  c.batch.advantages.resize(batch);
  c.batch.returns.resize(batch);
  const double eps = c.config.clip_range;
  for (int r = 0; r < batch; ++r) {
    for (;;) {
      Vector<double> x(spec.input_dim);
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
      if (relu_margin(c.params, x) < kink_margin) continue;
      Matrix<double> row = x.transpose();
      const Matrix<double> logp = log_softmax(forward(c.params, row).logits);
      const int a = rand_int(rng, 0, spec.action_dim);
      const double old_lp = logp(0, a) + 0.3 * normal(rng);
      const double ratio = std::exp(logp(0, a) - old_lp);
      if (std::abs(ratio - (1.0 - eps)) < kink_margin || std::abs(ratio - (1.0 + eps)) < kink_margin) continue;
      c.batch.observations.row(r) = row;
      c.batch.actions[static_cast<std::size_t>(r)] = a;
      c.batch.old_log_probs(r) = old_lp;
      c.batch.advantages(r) = normal(rng);
      c.batch.returns(r) = normal(rng);
      break;
    }
  }
  return c;
}

Vector<double> central_differences(const std::function<double(const Vector<double>&)>& f, const Vector<double>& x,
                                   double h) {
  Vector<double> grad(x.size());
  Vector<double> probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

double relative_error(const Vector<double>& analytic, const Vector<double>& numeric) {
  const double scale = numeric.cwiseAbs().maxCoeff();
  const double diff = (analytic - numeric).cwiseAbs().maxCoeff();
  if (scale == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / scale;
}

GradCheckReport run_gradcheck(int networks, std::uint64_t seed, double h) {
  GradCheckReport report;
  for (int k = 0; k < networks; ++k) {
    GradCheckCase c = random_gradcheck_case(derive_seed(seed, static_cast<std::uint64_t>(k)));
    const PpoLoss<double> loss = ppo_loss(c.params, c.batch, c.config);
    const Vector<double> analytic = backward(c.params, loss.trace, loss.grad_logits, loss.grad_values);
    ParameterBlock<double> probe = c.params;
    const Vector<double> numeric = central_differences(
        [&](const Vector<double>& v) {
          probe.values = v;
          return ppo_loss(probe, c.batch, c.config).total;
        },
        c.params.values, h);
    report.max_relative_error = std::max(report.max_relative_error, relative_error(analytic, numeric));
    report.max_parameters = std::max(report.max_parameters, c.params.size());
    ++report.networks;
  }
  return report;
}

}  // namespace cgym
