#ifndef AFE_NN_HPP
#define AFE_NN_HPP

#include "afe/core.hpp"

#include <optional>
#include <string>
#include <vector>

namespace afe {

enum class LayerKind : std::uint8_t { Dense = 0, Conv1d = 1, MaxPool = 2, Dropout = 3, Relu = 4 };

std::string_view to_string(LayerKind k);

/// One layer of a feed-forward stack. `units` is the output width of a dense
/// layer or the output channel count of a convolution; `kernel` is the
/// convolution or pooling window; `rate` the dropout probability.
/// `declared_in`, when non-zero, is an expected input width that must match
/// the computed one.
struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  int units = 0;
  int kernel = 0;
  double rate = 0.0;
  int declared_in = 0;

  static LayerSpec dense(int units, int declared_in = 0) { return {LayerKind::Dense, units, 0, 0.0, declared_in}; }
  static LayerSpec conv1d(int channels, int kernel) { return {LayerKind::Conv1d, channels, kernel, 0.0, 0}; }
  static LayerSpec maxpool(int kernel) { return {LayerKind::MaxPool, 0, kernel, 0.0, 0}; }
  static LayerSpec dropout(double rate) { return {LayerKind::Dropout, 0, 0, rate, 0}; }
  static LayerSpec relu() { return {LayerKind::Relu, 0, 0, 0.0, 0}; }
};

/// Activation shape: channels × length. Dense outputs are a single channel.
struct Shape {
  int channels = 1;
  int length = 0;

  int size() const { return channels * length; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

struct NnArch {
  std::string name;
  int input_width = 0;
  std::vector<LayerSpec> layers;

  /// Output shape of every layer; throws ConfigError if the stack does not
  /// compose (non-positive lengths, declared widths that disagree, ...).
  std::vector<Shape> shapes() const;
  int output_size() const;
};

/// Convolutional learner: dense(w/2) -> three conv(k=2)+maxpool(2) blocks with
/// 26, 16, 16 channels -> dense(3) -> ReLU, with the per-layer dropout rates.
NnArch cnn_arch(int input_width);
/// Fully connected learner: dense(w/2) -> dense(41) -> maxpool(2) -> dense(10)
/// -> dense(5) -> dense(3) -> ReLU.
NnArch bpnn_arch(int input_width);

struct LayerParams {
  Matrix weight;
  Vector bias;
};

enum class Mode { Train, Eval };

struct NnModel {
  NnArch arch;
  std::vector<LayerParams> params;  // one per layer, empty for parameter-free layers
  std::uint64_t seed = 0;
  int epochs_trained = 0;

  /// Output activations. Dropout is only applied in Train mode and then
  /// draws its masks from `rng`.
  Vector forward(const Eigen::Ref<const Vector>& x, Mode mode = Mode::Eval, Rng* rng = nullptr) const;
  Vector3 scores(const Eigen::Ref<const Vector>& x) const;
  Emotion predict(const Eigen::Ref<const Vector>& x) const;
  Labels predict_rows(const Matrix& x) const;

  std::size_t parameter_count() const;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation.
NnModel init_model(const NnArch& arch, std::uint64_t seed);

struct GradientResult {
  double loss = 0.0;  // batch-mean softmax cross-entropy
  std::vector<LayerParams> grads;
};

/// Analytic gradient of the batch-mean softmax cross-entropy of the output
/// activations. In Train mode dropout masks are drawn from `rng`.
GradientResult nn_gradients(const NnModel& m, const Matrix& x, const Labels& y, Mode mode = Mode::Eval,
                            Rng* rng = nullptr);

/// Batch-mean loss only.
double nn_loss(const NnModel& m, const Matrix& x, const Labels& y);

struct TrainConfig {
  int batch_size = 16;
  double learning_rate = 0.01;
  int max_epochs = 300;
  std::vector<int> stop_epochs{140, 200, 300};
  std::uint64_t seed = 0;

  void validate() const;
};

struct LearningCurve {
  std::vector<double> train_accuracy;
  std::vector<double> val_accuracy;
  std::vector<double> loss;

  std::size_t size() const { return loss.size(); }
};

struct NnSnapshot {
  NnModel model;
  LearningCurve curve;
};

/// Mini-batch SGD with per-epoch reshuffling; one snapshot per stop epoch.
std::vector<NnSnapshot> nn_train(const NnArch& arch, const Matrix& x, const Labels& y, const TrainConfig& cfg,
                                 const Matrix& x_val, const Labels& y_val);

}  // namespace afe

#endif  // AFE_NN_HPP
