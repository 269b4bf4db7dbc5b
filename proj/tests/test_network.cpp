#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "cgym/gradcheck.hpp"
#include "cgym/network.hpp"
#include "cgym/random.hpp"

using namespace cgym;

namespace {

Matrix<double> random_batch(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Matrix<double> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

}  // namespace

TEST_CASE("student network has 401,831 parameters") {
  // 1875*200+200 + 200*128+128 + 128*6+6 + 128*1+1
  CHECK(parameter_count(NetworkSpec::student()) == 401831);
  const auto layout = parameter_layout(NetworkSpec::student());
  REQUIRE(layout.size() == 8);
  CHECK(layout.front().rows == 200);
  CHECK(layout.front().cols == 1875);
  CHECK(layout.back().offset + layout.back().size() == 401831);
}

TEST_CASE("teacher network shape") {
  const NetworkSpec spec = NetworkSpec::teacher(6, 5);
  CHECK(spec.hidden == std::vector<int>{64, 128, 64});
  CHECK(parameter_count(spec) == (6 * 64 + 64) + (64 * 128 + 128) + (128 * 64 + 64) + (64 * 5 + 5) + (64 + 1));
}

TEST_CASE("initialization: orthogonal weights with the stated gains, zero biases") {
  const NetworkSpec spec{12, {16, 8}, 4, true};
  const auto p = initialize<double>(spec, 3);
  const Matrix<double> w0 = p.weight(0);  // 16x12: orthonormal columns scaled by sqrt 2
  CHECK((w0.transpose() * w0 - 2.0 * Matrix<double>::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-9);
  const Matrix<double> wp = p.weight(p.policy_layer());  // 4x8: orthonormal rows scaled by 0.01
  CHECK((wp * wp.transpose() - 1e-4 * Matrix<double>::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
  const Matrix<double> wv = p.weight(p.value_layer());
  CHECK(wv.norm() == doctest::Approx(1.0));
  for (std::size_t k = 0; k < p.layer_count(); ++k) CHECK(p.bias(k).cwiseAbs().maxCoeff() == 0.0);
  CHECK(initialize<double>(spec, 3).values == p.values);
  CHECK(initialize<double>(spec, 4).values != p.values);
}

TEST_CASE("all-zero parameters give zero logits and values") {
  const NetworkSpec spec{10, {7, 5}, 3, true};
  ParameterBlock<double> p(spec);
  p.values.setZero();
  const auto out = forward(p, random_batch(4, 10, 1));
  CHECK(out.logits.cwiseAbs().maxCoeff() == 0.0);
  CHECK(out.values.cwiseAbs().maxCoeff() == 0.0);
  const Matrix<double> probs = softmax(out.logits);
  CHECK((probs.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);
}

TEST_CASE("a batch is the stack of single-row forwards") {
  const NetworkSpec spec{9, {11, 6}, 4, true};
  const auto p = initialize<double>(spec, 5);
  const Matrix<double> x = random_batch(7, 9, 2);
  const auto all = forward(p, x);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Matrix<double> row = x.row(r);
    const auto one = forward(p, row);
    CHECK((one.logits.row(0) - all.logits.row(r)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(one.values(0) - all.values(r)) < 1e-12);
  }
  CHECK_THROWS_AS(forward(p, random_batch(2, 8, 3)), std::invalid_argument);
}

TEST_CASE("forward matches a hand-written evaluation") {
  const NetworkSpec spec{3, {4}, 2, true};
  const auto p = initialize<double>(spec, 8);
  Matrix<double> x(1, 3);
  x << 0.3, -1.2, 0.7;
  std::vector<double> h(4);
  for (int i = 0; i < 4; ++i) {
    double z = p.bias(0)(i);
    for (int j = 0; j < 3; ++j) z += p.weight(0)(i, j) * x(0, j);
    h[static_cast<std::size_t>(i)] = z > 0 ? z : 0;
  }
  const auto out = forward(p, x);
  for (int a = 0; a < 2; ++a) {
    double z = p.bias(1)(a);
    for (int j = 0; j < 4; ++j) z += p.weight(1)(a, j) * h[static_cast<std::size_t>(j)];
    CHECK(out.logits(0, a) == doctest::Approx(z).epsilon(1e-12));
  }
}

TEST_CASE("backward agrees with finite differences of a linear functional") {
  const NetworkSpec spec{5, {6, 4}, 3, true};
  auto p = initialize<double>(spec, 11);
  p.values += 0.1 * random_batch(static_cast<int>(p.size()), 1, 12);
  const Matrix<double> x = random_batch(6, 5, 13);
  const Matrix<double> gl = random_batch(6, 3, 14);
  const Vector<double> gv = random_batch(6, 1, 15);
  auto f = [&](const Vector<double>& v) {
    ParameterBlock<double> q = p;
    q.values = v;
    const auto out = forward(q, x);
    return (out.logits.array() * gl.array()).sum() + out.values.dot(gv);
  };
  const auto out = forward(p, x);
  const Vector<double> analytic = backward(p, out.trace, gl, gv);
  const Vector<double> numeric = central_differences(f, p.values, 1e-5);
  CHECK(relative_error(analytic, numeric) < 1e-6);
}

TEST_CASE("log_softmax is stable for large logits") {
  Matrix<double> z(1, 3);
  z << 1000.0, 1001.0, 999.0;
  const Matrix<double> lp = log_softmax(z);
  CHECK(lp.allFinite());
  CHECK(std::exp(lp(0, 0)) + std::exp(lp(0, 1)) + std::exp(lp(0, 2)) == doctest::Approx(1.0));
  CHECK(lp(0, 1) - lp(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("first Adam step moves each parameter by lr against its gradient sign") {
  Vector<double> w(4);
  w << 1.0, -2.0, 0.5, 3.0;
  Vector<double> g(4);
  g << 0.3, -7.0, 1e-3, 0.0;
  AdamState<double> st(4);
  const Vector<double> before = w;
  adam_update(w, g, st, 0.01);
  CHECK(w(0) == doctest::Approx(before(0) - 0.01).epsilon(1e-6));
  CHECK(w(1) == doctest::Approx(before(1) + 0.01).epsilon(1e-6));
  CHECK(w(2) == doctest::Approx(before(2) - 0.01).epsilon(1e-4));
  CHECK(w(3) == before(3));
  CHECK(st.step == 1);
}

TEST_CASE("Adam second step against a hand recursion") {
  Vector<double> w = Vector<double>::Constant(1, 0.0);
  AdamState<double> st(1);
  const double g1 = 0.5, g2 = -0.25, lr = 0.1;
  adam_update(w, Vector<double>(Vector<double>::Constant(1, g1)), st, lr);
  adam_update(w, Vector<double>(Vector<double>::Constant(1, g2)), st, lr);
  const double m1 = 0.1 * g1, v1 = 0.001 * g1 * g1;
  const double step1 = lr * (m1 / 0.1) / (std::sqrt(v1 / 0.001) + 1e-8);
  const double m2 = 0.9 * m1 + 0.1 * g2, v2 = 0.999 * v1 + 0.001 * g2 * g2;
  const double step2 = lr * (m2 / (1 - 0.81)) / (std::sqrt(v2 / (1 - 0.999 * 0.999)) + 1e-8);
  CHECK(w(0) == doctest::Approx(-step1 - step2).epsilon(1e-12));
}

TEST_CASE("global norm clipping") {
  Vector<double> g(2);
  g << 3.0, 4.0;
  CHECK(clip_global_norm(g, 0.5) == doctest::Approx(5.0));
  CHECK(g.norm() == doctest::Approx(0.5));
  CHECK(g(0) / g(1) == doctest::Approx(0.75));
  Vector<double> small(2);
  small << 0.1, 0.2;
  const Vector<double> copy = small;
  clip_global_norm(small, 0.5);
  CHECK(small == copy);
  CHECK_THROWS(clip_global_norm(small, 0.0));
}

TEST_CASE("copies are independent") {
  auto p = initialize<float>(NetworkSpec{4, {3}, 2, true}, 1);
  auto q = copy_parameters(p);
  q.values(0) += 1.0f;
  CHECK(p.values(0) != q.values(0));
}

TEST_CASE("checkpoint round trip is bit exact") {
  const auto p = initialize<float>(NetworkSpec::teacher(6, 5), 21);
  const std::string bytes = serialize(p);
  const auto q = deserialize(bytes);
  CHECK(q.spec == p.spec);
  CHECK(q.values == p.values);
  CHECK(serialize(q) == bytes);
  CHECK_THROWS_AS(deserialize(bytes, NetworkSpec::teacher(6, 4)), CheckpointError);

  const auto path = (std::filesystem::temp_directory_path() / "cgym_test.ckpt").string();
  save_checkpoint(p, path);
  CHECK(load_checkpoint(path).values == p.values);
  std::remove(path.c_str());
}

TEST_CASE("corrupt checkpoints are rejected") {
  const auto p = initialize<float>(NetworkSpec{4, {3}, 2, true}, 1);
  std::string bytes = serialize(p);
  CHECK_THROWS_AS(deserialize(bytes.substr(0, bytes.size() - 1)), CheckpointError);
  CHECK_THROWS_AS(deserialize(bytes + "x"), CheckpointError);
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize(bad), CheckpointError);
  CHECK_THROWS_AS(deserialize(""), CheckpointError);
  CHECK_THROWS(load_checkpoint("/nonexistent/dir/x.ckpt"));
}
