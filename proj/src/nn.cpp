#include "afe/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace afe {

std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv1d: return "conv1d";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Relu: return "relu";
  }
  return "?";
}

std::vector<Shape> NnArch::shapes() const {
  if (input_width < 1) throw ConfigError(name + ": input width must be positive");
  std::vector<Shape> out;
  Shape s{1, input_width};
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& spec = layers[l];
    const std::string where = name + " layer " + std::to_string(l) + " (" + std::string(to_string(spec.kind)) + ")";
    switch (spec.kind) {
      case LayerKind::Dense:
        if (spec.units < 1) throw ConfigError(where + ": needs a positive width");
        if (spec.declared_in != 0 && spec.declared_in != s.size())
          throw ConfigError(where + ": declared input width " + std::to_string(spec.declared_in) +
                            " but the previous layers produce " + std::to_string(s.size()));
        s = {1, spec.units};
        break;
      case LayerKind::Conv1d:
        if (spec.units < 1 || spec.kernel < 1) throw ConfigError(where + ": needs channels and kernel >= 1");
        s = {spec.units, s.length - spec.kernel + 1};
        break;
      case LayerKind::MaxPool:
        if (spec.kernel < 1) throw ConfigError(where + ": needs kernel >= 1");
        s = {s.channels, s.length / spec.kernel};
        break;
      case LayerKind::Dropout:
        if (!(spec.rate >= 0.0 && spec.rate < 1.0)) throw ConfigError(where + ": rate must lie in [0, 1)");
        break;
      case LayerKind::Relu: break;
    }
    if (s.length < 1)
      throw ConfigError(where + ": input of width " + std::to_string(input_width) + " leaves no activations");
    out.push_back(s);
  }
  return out;
}

int NnArch::output_size() const {
  const auto s = shapes();
  return s.empty() ? input_width : s.back().size();
}

NnArch cnn_arch(int input_width) {
  NnArch a;
  a.name = "cnn";
  a.input_width = input_width;
  a.layers = {LayerSpec::dense(input_width / 2, input_width), LayerSpec::dropout(0.2),
              LayerSpec::conv1d(26, 2),  LayerSpec::dropout(0.3), LayerSpec::maxpool(2),
              LayerSpec::conv1d(16, 2),  LayerSpec::dropout(0.4), LayerSpec::maxpool(2),
              LayerSpec::conv1d(16, 2),  LayerSpec::dropout(0.1), LayerSpec::maxpool(2),
              LayerSpec::dropout(0.2),   LayerSpec::dense(3),     LayerSpec::relu()};
  a.shapes();
  return a;
}

NnArch bpnn_arch(int input_width) {
  NnArch a;
  a.name = "bpnn";
  a.input_width = input_width;
  a.layers = {LayerSpec::dense(input_width / 2, input_width), LayerSpec::dropout(0.2),
              LayerSpec::dense(41), LayerSpec::dropout(0.2), LayerSpec::maxpool(2),
              LayerSpec::dense(10), LayerSpec::dropout(0.2),
              LayerSpec::dense(5),  LayerSpec::dropout(0.1),
              LayerSpec::dense(3),  LayerSpec::relu()};
  a.shapes();
  return a;
}

namespace {

Vector flatten(const Matrix& a) {
  Vector v(a.size());
  for (Eigen::Index c = 0; c < a.rows(); ++c)
    for (Eigen::Index t = 0; t < a.cols(); ++t) v(c * a.cols() + t) = a(c, t);
  return v;
}

Matrix unflatten(const Vector& v, Shape s) {
  Matrix a(s.channels, s.length);
  for (Eigen::Index c = 0; c < a.rows(); ++c)
    for (Eigen::Index t = 0; t < a.cols(); ++t) a(c, t) = v(c * a.cols() + t);
  return a;
}

// im2col: row i*k + j, column t holds a(i, t + j)
Matrix patches(const Matrix& a, int k) {
  const Eigen::Index out_len = a.cols() - k + 1;
  Matrix p(a.rows() * k, out_len);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (int j = 0; j < k; ++j) p.row(i * k + j) = a.row(i).segment(j, out_len);
  return p;
}

struct LayerCache {
  Matrix input;
  Matrix aux;  // conv patches or dropout mask
  Eigen::MatrixXi argmax;
};

Matrix run_forward(const NnModel& m, const Eigen::Ref<const Vector>& x, Mode mode, Rng* rng,
                   std::vector<LayerCache>* cache) {
  if (x.size() != m.arch.input_width)
    throw DataError(m.arch.name + " expects " + std::to_string(m.arch.input_width) + " features, got " +
                    std::to_string(x.size()));
  const auto shapes = m.arch.shapes();
  Matrix a = x.transpose();
  if (cache) cache->assign(m.arch.layers.size(), {});
  for (std::size_t l = 0; l < m.arch.layers.size(); ++l) {
    const auto& spec = m.arch.layers[l];
    const auto& p = m.params[l];
    LayerCache* lc = cache ? &(*cache)[l] : nullptr;
    if (lc) lc->input = a;
    switch (spec.kind) {
      case LayerKind::Dense: {
        Vector z = p.weight * flatten(a) + p.bias;
        a = z.transpose();
        break;
      }
      case LayerKind::Conv1d: {
        Matrix pt = patches(a, spec.kernel);
        a = (p.weight * pt).colwise() + p.bias;
        if (lc) lc->aux = std::move(pt);
        break;
      }
      case LayerKind::MaxPool: {
        const Shape s = shapes[l];
        Matrix out(s.channels, s.length);
        Eigen::MatrixXi arg(s.channels, s.length);
        for (int c = 0; c < s.channels; ++c)
          for (int t = 0; t < s.length; ++t) {
            Eigen::Index best = t * spec.kernel;
            for (int j = 1; j < spec.kernel; ++j)
              if (a(c, t * spec.kernel + j) > a(c, best)) best = t * spec.kernel + j;
            out(c, t) = a(c, best);
            arg(c, t) = static_cast<int>(best);
          }
        a = std::move(out);
        if (lc) lc->argmax = std::move(arg);
        break;
      }
      case LayerKind::Dropout: {
        if (mode == Mode::Train && spec.rate > 0.0) {
          if (!rng) throw std::logic_error("dropout in train mode needs an rng");
          const double keep = 1.0 - spec.rate;
          Matrix mask(a.rows(), a.cols());
          for (Eigen::Index i = 0; i < mask.size(); ++i) mask(i) = rng->uniform() < keep ? 1.0 / keep : 0.0;
          a = a.cwiseProduct(mask);
          if (lc) lc->aux = std::move(mask);
        }
        break;
      }
      case LayerKind::Relu: a = a.cwiseMax(0.0); break;
    }
  }
  return a;
}

void run_backward(const NnModel& m, const std::vector<LayerCache>& cache, Matrix grad,
                  std::vector<LayerParams>& acc) {
  for (std::size_t l = m.arch.layers.size(); l-- > 0;) {
    const auto& spec = m.arch.layers[l];
    const auto& lc = cache[l];
    switch (spec.kind) {
      case LayerKind::Dense: {
        const Vector in = flatten(lc.input);
        const Vector g = flatten(grad);
        acc[l].weight.noalias() += g * in.transpose();
        acc[l].bias += g;
        const Vector gin = m.params[l].weight.transpose() * g;
        grad = unflatten(gin, {static_cast<int>(lc.input.rows()), static_cast<int>(lc.input.cols())});
        break;
      }
      case LayerKind::Conv1d: {
        acc[l].weight.noalias() += grad * lc.aux.transpose();
        acc[l].bias += grad.rowwise().sum();
        const Matrix gp = m.params[l].weight.transpose() * grad;
        Matrix gin = Matrix::Zero(lc.input.rows(), lc.input.cols());
        const Eigen::Index out_len = grad.cols();
        for (Eigen::Index i = 0; i < lc.input.rows(); ++i)
          for (int j = 0; j < spec.kernel; ++j) gin.row(i).segment(j, out_len) += gp.row(i * spec.kernel + j);
        grad = std::move(gin);
        break;
      }
      case LayerKind::MaxPool: {
        Matrix gin = Matrix::Zero(lc.input.rows(), lc.input.cols());
        for (Eigen::Index c = 0; c < grad.rows(); ++c)
          for (Eigen::Index t = 0; t < grad.cols(); ++t) gin(c, lc.argmax(c, t)) += grad(c, t);
        grad = std::move(gin);
        break;
      }
      case LayerKind::Dropout:
        if (lc.aux.size() > 0) grad = grad.cwiseProduct(lc.aux);
        break;
      case LayerKind::Relu:
        grad = grad.cwiseProduct((lc.input.array() > 0.0).cast<double>().matrix());
        break;
    }
  }
}

// softmax cross-entropy of the flattened output; returns loss, writes dL/dz
double softmax_xent(const Vector& z, int target, Vector& dz) {
  const double mx = z.maxCoeff();
  const Vector e = (z.array() - mx).exp();
  const double s = e.sum();
  dz = e / s;
  const double loss = -(z(target) - mx - std::log(s));
  dz(target) -= 1.0;
  return loss;
}

std::vector<LayerParams> zero_like(const NnModel& m) {
  std::vector<LayerParams> g(m.params.size());
  for (std::size_t l = 0; l < m.params.size(); ++l) {
    g[l].weight = Matrix::Zero(m.params[l].weight.rows(), m.params[l].weight.cols());
    g[l].bias = Vector::Zero(m.params[l].bias.size());
  }
  return g;
}

Emotion argmax_class(const Vector& v) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < v.size(); ++c)
    if (v(c) > v(best)) best = c;
  return emotion_from_code(static_cast<int>(best));
}

double accuracy_of(const NnModel& m, const Matrix& x, const Labels& y) {
  if (x.rows() == 0) return 0.0;
  std::size_t hit = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    if (m.predict(Vector(x.row(i).transpose())) == y[static_cast<std::size_t>(i)]) ++hit;
  return static_cast<double>(hit) / static_cast<double>(x.rows());
}

}  // namespace

Vector NnModel::forward(const Eigen::Ref<const Vector>& x, Mode mode, Rng* rng) const {
  return flatten(run_forward(*this, x, mode, rng, nullptr));
}

Vector3 NnModel::scores(const Eigen::Ref<const Vector>& x) const {
  const Vector out = forward(x);
  if (out.size() != kClassCount) throw DataError(arch.name + ": output width is not 3");
  return out;
}

Emotion NnModel::predict(const Eigen::Ref<const Vector>& x) const { return argmax_class(scores(x)); }

Labels NnModel::predict_rows(const Matrix& x) const {
  Labels out;
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.push_back(predict(Vector(x.row(i).transpose())));
  return out;
}

std::size_t NnModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += static_cast<std::size_t>(p.weight.size() + p.bias.size());
  return n;
}

NnModel init_model(const NnArch& arch, std::uint64_t seed) {
  const auto shapes = arch.shapes();
  NnModel m;
  m.arch = arch;
  m.seed = seed;
  m.params.resize(arch.layers.size());
  Rng rng(seed);
  Shape in{1, arch.input_width};
  for (std::size_t l = 0; l < arch.layers.size(); ++l) {
    const auto& spec = arch.layers[l];
    int rows = 0, cols = 0;
    if (spec.kind == LayerKind::Dense) {
      rows = spec.units;
      cols = in.size();
    } else if (spec.kind == LayerKind::Conv1d) {
      rows = spec.units;
      cols = in.channels * spec.kernel;
    }
    if (rows > 0) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
      auto& p = m.params[l];
      p.weight.resize(rows, cols);
      p.bias.resize(rows);
      for (Eigen::Index i = 0; i < p.weight.size(); ++i) p.weight(i) = rng.uniform(-bound, bound);
      for (Eigen::Index i = 0; i < p.bias.size(); ++i) p.bias(i) = rng.uniform(-bound, bound);
    }
    in = shapes[l];
  }
  return m;
}

GradientResult nn_gradients(const NnModel& m, const Matrix& x, const Labels& y, Mode mode, Rng* rng) {
  if (x.rows() == 0) throw DataError("nn_gradients: empty batch");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw DataError("nn_gradients: label count mismatch");
  GradientResult res;
  res.grads = zero_like(m);
  std::vector<LayerCache> cache;
  Vector dz;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Matrix out = run_forward(m, x.row(i).transpose(), mode, rng, &cache);
    res.loss += softmax_xent(flatten(out), code(y[static_cast<std::size_t>(i)]), dz);
    run_backward(m, cache, unflatten(dz, {static_cast<int>(out.rows()), static_cast<int>(out.cols())}), res.grads);
  }
  const double inv = 1.0 / static_cast<double>(x.rows());
  res.loss *= inv;
  for (auto& g : res.grads) {
    g.weight *= inv;
    g.bias *= inv;
  }
  return res;
}

double nn_loss(const NnModel& m, const Matrix& x, const Labels& y) {
  double loss = 0.0;
  Vector dz;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    loss += softmax_xent(m.forward(x.row(i).transpose()), code(y[static_cast<std::size_t>(i)]), dz);
  return loss / static_cast<double>(x.rows());
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (max_epochs < 1) throw ConfigError("max epochs must be at least 1");
  if (stop_epochs.empty()) throw ConfigError("at least one stop epoch is required");
  if (!std::is_sorted(stop_epochs.begin(), stop_epochs.end()) ||
      std::adjacent_find(stop_epochs.begin(), stop_epochs.end()) != stop_epochs.end())
    throw ConfigError("stop epochs must be strictly ascending");
  if (stop_epochs.front() < 1 || stop_epochs.back() > max_epochs)
    throw ConfigError("stop epochs must lie in [1, max_epochs]");
}

std::vector<NnSnapshot> nn_train(const NnArch& arch, const Matrix& x, const Labels& y, const TrainConfig& cfg,
                                 const Matrix& x_val, const Labels& y_val) {
  cfg.validate();
  if (x.rows() == 0) throw TrainingError(arch.name + ": empty training set");
  if (static_cast<std::size_t>(x.rows()) != y.size() || static_cast<std::size_t>(x_val.rows()) != y_val.size())
    throw DataError(arch.name + ": label count mismatch");
  {
    std::unordered_set<std::uint64_t> train_rows;
    for (Eigen::Index i = 0; i < x.rows(); ++i) train_rows.insert(hash_row(x.row(i)));
    for (Eigen::Index i = 0; i < x_val.rows(); ++i)
      if (train_rows.contains(hash_row(x_val.row(i))))
        throw DataError(arch.name + ": validation row " + std::to_string(i) + " also appears in training data");
  }

  NnModel model = init_model(arch, derive_seed(cfg.seed, "init"));
  Rng rng(derive_seed(cfg.seed, "sgd"));
  LearningCurve curve;
  std::vector<NnSnapshot> snapshots;
  std::vector<std::size_t> order(static_cast<std::size_t>(x.rows()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t next_stop = 0;

  for (int epoch = 1; epoch <= cfg.stop_epochs.back(); ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      const auto g = nn_gradients(model, take_rows(x, rows), take(y, rows), Mode::Train, &rng);
      for (std::size_t l = 0; l < model.params.size(); ++l) {
        model.params[l].weight -= cfg.learning_rate * g.grads[l].weight;
        model.params[l].bias -= cfg.learning_rate * g.grads[l].bias;
      }
      loss_sum += g.loss;
      ++batches;
    }
    model.epochs_trained = epoch;
    curve.loss.push_back(loss_sum / batches);
    curve.train_accuracy.push_back(accuracy_of(model, x, y));
    curve.val_accuracy.push_back(accuracy_of(model, x_val, y_val));
    if (next_stop < cfg.stop_epochs.size() && epoch == cfg.stop_epochs[next_stop]) {
      snapshots.push_back({model, curve});
      ++next_stop;
    }
  }
  return snapshots;
}

}  // namespace afe
