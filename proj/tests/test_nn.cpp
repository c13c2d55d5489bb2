#include "afe/nn.hpp"
#include "gradcheck.hpp"
#include "testing.hpp"

#include <doctest.h>

using namespace afe;

namespace {

Matrix random_inputs(Rng& rng, Eigen::Index rows, Eigen::Index width) {
  return Matrix::NullaryExpr(rows, width, [&] { return rng.uniform(); });
}

Labels cycle_labels(Eigen::Index n) {
  Labels y;
  for (Eigen::Index i = 0; i < n; ++i) y.push_back(emotion_from_code(static_cast<int>(i % 3)));
  return y;
}

// multiclass perceptron; returns true once it fits every row
bool perceptron_separates(const Matrix& x, const Labels& y) {
  Matrix w = Matrix::Zero(3, x.cols() + 1);
  for (int epoch = 0; epoch < 1000; ++epoch) {
    int mistakes = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      Vector xi(x.cols() + 1);
      xi << x.row(i).transpose(), 1.0;
      Eigen::Index pred;
      (w * xi).maxCoeff(&pred);
      const int truth = code(y[static_cast<std::size_t>(i)]);
      if (pred != truth) {
        w.row(truth) += xi.transpose();
        w.row(pred) -= xi.transpose();
        ++mistakes;
      }
    }
    if (mistakes == 0) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("layer shape algebra") {
  const auto cnn = cnn_arch(60);
  const auto s = cnn.shapes();
  // dense 30 -> conv 26x29 -> pool 26x14 -> conv 16x13 -> pool 16x6 -> conv 16x5 -> pool 16x2
  CHECK(s[0] == Shape{1, 30});
  CHECK(s[2] == Shape{26, 29});
  CHECK(s[4] == Shape{26, 14});
  CHECK(s[7] == Shape{16, 6});
  CHECK(s[10] == Shape{16, 2});
  const auto& dense = cnn.layers[12];
  CHECK(dense.kind == LayerKind::Dense);
  CHECK(init_model(cnn, 1).params[12].weight.cols() == s[11].channels * s[11].length);
  CHECK(cnn.output_size() == 3);

  const auto bp = bpnn_arch(60);
  const auto b = bp.shapes();
  CHECK(b[0] == Shape{1, 30});
  CHECK(b[2] == Shape{1, 41});
  CHECK(b[4] == Shape{1, 20});
  CHECK(b[5] == Shape{1, 10});
  CHECK(bp.output_size() == 3);

  CHECK_NOTHROW(cnn_arch(30));
  CHECK_THROWS_AS(cnn_arch(29), ConfigError);
  NnArch bad{"bad", 10, {LayerSpec::dense(5), LayerSpec::dense(3, 7)}};
  CHECK_THROWS_AS(bad.shapes(), ConfigError);
  NnArch pool{"pool", 5, {LayerSpec::maxpool(2)}};
  CHECK(pool.shapes().back() == Shape{1, 2});
}

TEST_CASE("hand-built convolution") {
  NnArch a{"conv", 3, {LayerSpec::conv1d(1, 2)}};
  auto m = init_model(a, 0);
  m.params[0].weight << 1, -1;
  m.params[0].bias << 0;
  Vector x(3);
  x << 3, 1, 4;
  const Vector out = m.forward(x);
  REQUIRE(out.size() == 2);
  CHECK(out(0) == 2.0);
  CHECK(out(1) == -3.0);
}

TEST_CASE("zero parameters give zero output") {
  auto m = init_model(cnn_arch(40), 3);
  for (auto& p : m.params) {
    p.weight.setZero();
    p.bias.setZero();
  }
  Rng rng(1);
  CHECK(m.forward(random_inputs(rng, 1, 40).row(0).transpose()) == Vector::Zero(3));
}

TEST_CASE("outputs are non-negative and eval mode is deterministic") {
  Rng rng(2);
  for (const auto& arch : {cnn_arch(50), bpnn_arch(50)}) {
    const auto m = init_model(arch, 4);
    for (int t = 0; t < 50; ++t) {
      const Vector x = random_inputs(rng, 1, 50).row(0).transpose() * 3 - Vector::Ones(50);
      const Vector a = m.forward(x), b = m.forward(x);
      CHECK(a == b);
      CHECK(a.minCoeff() >= 0.0);
      Rng drop(t);
      CHECK(m.forward(x, Mode::Train, &drop).minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("inverted dropout is unbiased") {
  NnArch a{"drop", 5, {LayerSpec::dense(12), LayerSpec::dropout(0.3), LayerSpec::dense(3)}};
  const auto m = init_model(a, 5);
  Vector x(5);
  x << 0.2, 0.9, 0.4, 0.7, 0.1;
  const Vector eval = m.forward(x);
  Vector sum = Vector::Zero(3);
  Rng rng(6);
  const int passes = 20000;
  for (int i = 0; i < passes; ++i) sum += m.forward(x, Mode::Train, &rng);
  const Vector mean = sum / passes;
  for (int k = 0; k < 3; ++k) CHECK(std::abs(mean(k) - eval(k)) <= 0.02 * std::abs(eval(k)));
}

TEST_CASE("analytic gradients match finite differences") {
  Rng rng(7);
  for (const auto& arch : {cnn_arch(60), bpnn_arch(60)}) {
    CAPTURE(arch.name);
    const auto m = init_model(arch, 8);
    const Matrix x = random_inputs(rng, 6, 60);
    const Labels y = cycle_labels(6);
    const auto check = testing::finite_difference_check(m, x, y, 120, 9);
    CHECK(check.checked == 120);
    CHECK(check.nonzero >= 50);
    CHECK(check.worst < 1e-4);
  }
}

TEST_CASE("gradient is zero at a symmetric stationary point") {
  auto m = init_model(bpnn_arch(12), 1);
  for (auto& p : m.params) {
    p.weight.setZero();
    p.bias.setZero();
  }
  Rng rng(2);
  const auto g = nn_gradients(m, random_inputs(rng, 3, 12), cycle_labels(3));
  CHECK(g.loss == doctest::Approx(std::log(3.0)));
  for (const auto& p : g.grads) {
    if (p.weight.size()) CHECK(p.weight.cwiseAbs().maxCoeff() == 0.0);
    if (p.bias.size()) CHECK(p.bias.cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("a duplicated batch has the same mean gradient") {
  Rng rng(3);
  const auto m = init_model(cnn_arch(40), 2);
  const Matrix x = random_inputs(rng, 4, 40);
  const Labels y = cycle_labels(4);
  Matrix xx(8, 40);
  xx << x, x;
  Labels yy = y;
  yy.insert(yy.end(), y.begin(), y.end());
  const auto g1 = nn_gradients(m, x, y), g2 = nn_gradients(m, xx, yy);
  CHECK(g1.loss == doctest::Approx(g2.loss).epsilon(1e-14));
  for (std::size_t l = 0; l < g1.grads.size(); ++l) {
    if (g1.grads[l].weight.size()) CHECK((g1.grads[l].weight - g2.grads[l].weight).cwiseAbs().maxCoeff() < 1e-14);
  }
  CHECK_THROWS_AS(nn_gradients(m, Matrix(0, 40), {}), DataError);
}

TEST_CASE("training snapshots and determinism") {
  const auto train = testing::blobs(12, 40, 0.3, 1);
  const auto val = testing::blobs(4, 40, 0.3, 2);
  TrainConfig cfg;
  cfg.max_epochs = 30;
  cfg.stop_epochs = {10, 20, 30};
  cfg.seed = 5;
  const auto a = nn_train(bpnn_arch(40), train.x, train.y, cfg, val.x, val.y);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a[i].model.epochs_trained == cfg.stop_epochs[i]);
    CHECK(a[i].curve.size() == static_cast<std::size_t>(cfg.stop_epochs[i]));
    CHECK(a[i].curve.val_accuracy.size() == a[i].curve.size());
  }
  const auto b = nn_train(bpnn_arch(40), train.x, train.y, cfg, val.x, val.y);
  for (std::size_t l = 0; l < a[2].model.params.size(); ++l) CHECK(a[2].model.params[l].weight == b[2].model.params[l].weight);

  TrainConfig full;
  CHECK(full.stop_epochs == std::vector<int>{140, 200, 300});
  CHECK(full.batch_size == 16);

  CHECK_THROWS_AS(nn_train(bpnn_arch(40), Matrix(0, 40), {}, cfg, val.x, val.y), TrainingError);
  CHECK_THROWS_AS(nn_train(bpnn_arch(40), train.x, train.y, cfg, train.x, train.y), DataError);
  TrainConfig bad = cfg;
  bad.stop_epochs = {20, 10};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.stop_epochs = {10, 40};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("a separable two-feature problem is learned to full accuracy") {
  Rng rng(4);
  Matrix x(60, 2);
  Labels y;
  for (int i = 0; i < 60; ++i) {
    const int c = i % 3;
    const double angle = 2 * std::numbers::pi * c / 3;
    x(i, 0) = std::cos(angle) + 0.15 * rng.normal();
    x(i, 1) = std::sin(angle) + 0.15 * rng.normal();
    y.push_back(emotion_from_code(c));
  }
  REQUIRE(perceptron_separates(x, y));
  // a softmax-linear stack: separability guarantees this model class can fit the data
  NnArch a{"toy", 2, {LayerSpec::dense(3)}};
  TrainConfig cfg;
  cfg.seed = 3;
  const auto snaps = nn_train(a, x, y, cfg, Matrix(0, 2), {});
  CHECK(snaps.back().curve.train_accuracy.back() == 1.0);
  CHECK(snaps.back().model.predict_rows(x) == y);
}
