#ifndef AFE_SVM_HPP
#define AFE_SVM_HPP

#include "afe/core.hpp"

#include <cmath>

namespace afe {

/// Penalty C and RBF width gamma, with K(a, b) = exp(-gamma |a - b|^2).
struct SvmHyper {
  double c = 1.0;
  double gamma = 1.0;

  void validate() const;
  friend bool operator==(const SvmHyper&, const SvmHyper&) = default;
};

template <typename DerivedA, typename DerivedB>
double rbf_kernel(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b, double gamma) {
  if (a.size() != b.size()) throw DataError("rbf_kernel: dimension mismatch");
  double d2 = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = a.derived().coeff(i) - b.derived().coeff(i);
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

/// Gram matrix of the rows of `x`.
Matrix rbf_gram(const Matrix& x, double gamma);

/// One trained two-class machine: f(x) = sum_i coef_i K(sv_i, x) + bias.
struct BinarySvm {
  Matrix support_vectors;
  Vector dual_coef;  // alpha_i * y_i
  double bias = 0.0;
  double gamma = 1.0;

  double decision(const Eigen::Ref<const Vector>& x) const;
};

struct SmoOptions {
  double tol = 1e-3;
  long max_iterations = 10'000'000;
};

struct SmoResult {
  BinarySvm machine;
  Vector alpha;  // one per training row
  long iterations = 0;
  bool converged = false;
  double objective = 0.0;  // sum(alpha) - 1/2 alpha' Q alpha
};

/// Dual objective for labels `y` (+-1) and kernel matrix `k`.
double dual_objective(const Matrix& k, const Vector& y, const Vector& alpha);

/// SMO with the maximal-violating-pair working set. `y` holds +1 / -1.
SmoResult svm_train(const Matrix& x, const Vector& y, const SvmHyper& h, const SmoOptions& opt = {});

/// Three one-vs-one machines over (Bad,Neutral), (Bad,Good), (Neutral,Good);
/// in each pair the first class is the +1 side.
struct SvmModel {
  static constexpr std::array<std::pair<Emotion, Emotion>, 3> kPairs{
      {{Emotion::Bad, Emotion::Neutral}, {Emotion::Bad, Emotion::Good}, {Emotion::Neutral, Emotion::Good}}};

  SvmHyper hyper;
  std::array<BinarySvm, 3> machines;
  Eigen::Index input_dim = 0;
  std::uint64_t data_hash = 0;

  std::array<double, 3> decisions(const Eigen::Ref<const Vector>& x) const;
  /// Per-class sum of signed decision values towards that class.
  Vector3 scores(const Eigen::Ref<const Vector>& x) const;
  /// Majority vote; ties go to the larger summed |decision| of the machines
  /// that voted for the class, then to the lower class code.
  Emotion predict(const Eigen::Ref<const Vector>& x) const;
  Labels predict_rows(const Matrix& x) const;
};

/// Resolves the one-vs-one vote from raw pair decisions (exposed for tests).
Emotion vote(const std::array<double, 3>& decisions);

SvmModel svm_train_multiclass(const Matrix& x, const Labels& y, const SvmHyper& h,
                              const SmoOptions& opt = {});

std::uint64_t training_hash(const Matrix& x, const Labels& y);

}  // namespace afe

#endif  // AFE_SVM_HPP
