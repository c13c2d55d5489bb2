#include "afe/svm.hpp"

#include <algorithm>
#include <limits>

namespace afe {

void SvmHyper::validate() const {
  if (!(c > 0.0) || !(gamma > 0.0)) throw ConfigError("SVM requires C > 0 and gamma > 0");
}

Matrix rbf_gram(const Matrix& x, double gamma) {
  const Eigen::Index n = x.rows();
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) k(i, j) = k(j, i) = rbf_kernel(x.row(i), x.row(j), gamma);
  }
  return k;
}

double BinarySvm::decision(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != support_vectors.cols())
    throw DataError("SVM expects " + std::to_string(support_vectors.cols()) + " features, got " +
                    std::to_string(x.size()));
  double f = bias;
  for (Eigen::Index i = 0; i < support_vectors.rows(); ++i)
    f += dual_coef(i) * rbf_kernel(support_vectors.row(i), x, gamma);
  return f;
}

double dual_objective(const Matrix& k, const Vector& y, const Vector& alpha) {
  const Vector ay = alpha.cwiseProduct(y);
  return alpha.sum() - 0.5 * ay.dot(k * ay);
}

SmoResult svm_train(const Matrix& x, const Vector& y, const SvmHyper& h, const SmoOptions& opt) {
  h.validate();
  const Eigen::Index n = x.rows();
  if (y.size() != n) throw DataError("svm_train: label count mismatch");
  bool has_pos = false, has_neg = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y(i) == 1.0) has_pos = true;
    else if (y(i) == -1.0) has_neg = true;
    else throw DataError("svm_train: labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) throw TrainingError("svm_train: both classes must be present");

  const Matrix k = rbf_gram(x, h.gamma);
  const Matrix q = (y * y.transpose()).cwiseProduct(k);
  const double c = h.c;
  constexpr double kTau = 1e-12;

  Vector alpha = Vector::Zero(n);
  Vector grad = Vector::Constant(n, -1.0);  // Q alpha - 1

  auto in_up = [&](Eigen::Index t) { return (y(t) > 0 && alpha(t) < c) || (y(t) < 0 && alpha(t) > 0); };
  auto in_low = [&](Eigen::Index t) { return (y(t) > 0 && alpha(t) > 0) || (y(t) < 0 && alpha(t) < c); };

  SmoResult res;
  long iter = 0;
  for (; iter < opt.max_iterations; ++iter) {
    Eigen::Index i = -1, j = -1;
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      const double v = -y(t) * grad(t);
      if (in_up(t) && v > g_max) { g_max = v; i = t; }
      if (in_low(t) && v < g_min) { g_min = v; j = t; }
    }
    if (i < 0 || j < 0 || g_max - g_min < opt.tol) {
      res.converged = true;
      break;
    }

    const double old_ai = alpha(i), old_aj = alpha(j);
    if (y(i) != y(j)) {
      double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0) {
        if (alpha(j) < 0) { alpha(j) = 0; alpha(i) = diff; }
      } else {
        if (alpha(i) < 0) { alpha(i) = 0; alpha(j) = -diff; }
      }
      if (diff > 0) {
        if (alpha(i) > c) { alpha(i) = c; alpha(j) = c - diff; }
      } else {
        if (alpha(j) > c) { alpha(j) = c; alpha(i) = c + diff; }
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > c) {
        if (alpha(i) > c) { alpha(i) = c; alpha(j) = sum - c; }
      } else {
        if (alpha(j) < 0) { alpha(j) = 0; alpha(i) = sum; }
      }
      if (sum > c) {
        if (alpha(j) > c) { alpha(j) = c; alpha(i) = sum - c; }
      } else {
        if (alpha(i) < 0) { alpha(i) = 0; alpha(j) = sum; }
      }
    }
    const double di = alpha(i) - old_ai, dj = alpha(j) - old_aj;
    grad += q.col(i) * di + q.col(j) * dj;
  }
  res.iterations = iter;

  // offset from free vectors, else the midpoint of the feasible interval
  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  int free_count = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y(t) * grad(t);
    if (alpha(t) >= c) {
      if (y(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha(t) <= 0) {
      if (y(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / free_count : (ub + lb) / 2.0;

  std::vector<Eigen::Index> sv;
  for (Eigen::Index t = 0; t < n; ++t)
    if (alpha(t) > 0) sv.push_back(t);
  res.machine.gamma = h.gamma;
  res.machine.bias = -rho;
  res.machine.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
  res.machine.dual_coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t s = 0; s < sv.size(); ++s) {
    res.machine.support_vectors.row(static_cast<Eigen::Index>(s)) = x.row(sv[s]);
    res.machine.dual_coef(static_cast<Eigen::Index>(s)) = alpha(sv[s]) * y(sv[s]);
  }
  res.alpha = alpha;
  res.objective = dual_objective(k, y, alpha);
  return res;
}

std::array<double, 3> SvmModel::decisions(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != input_dim)
    throw DataError("SVM expects " + std::to_string(input_dim) + " features, got " + std::to_string(x.size()));
  return {machines[0].decision(x), machines[1].decision(x), machines[2].decision(x)};
}

Vector3 SvmModel::scores(const Eigen::Ref<const Vector>& x) const {
  const auto d = decisions(x);
  Vector3 s = Vector3::Zero();
  for (std::size_t p = 0; p < 3; ++p) {
    s(code(kPairs[p].first)) += d[p];
    s(code(kPairs[p].second)) -= d[p];
  }
  return s;
}

Emotion vote(const std::array<double, 3>& decisions) {
  std::array<int, kClassCount> votes{};
  std::array<double, kClassCount> strength{};
  for (std::size_t p = 0; p < 3; ++p) {
    const Emotion winner = decisions[p] > 0 ? SvmModel::kPairs[p].first : SvmModel::kPairs[p].second;
    ++votes[static_cast<std::size_t>(code(winner))];
    strength[static_cast<std::size_t>(code(winner))] += std::abs(decisions[p]);
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < kClassCount; ++c)
    if (votes[c] > votes[best] || (votes[c] == votes[best] && strength[c] > strength[best])) best = c;
  return static_cast<Emotion>(best);
}

Emotion SvmModel::predict(const Eigen::Ref<const Vector>& x) const { return vote(decisions(x)); }

Labels SvmModel::predict_rows(const Matrix& x) const {
  Labels out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.push_back(predict(Vector(x.row(i).transpose())));
  return out;
}

std::uint64_t training_hash(const Matrix& x, const Labels& y) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    h = hash_row(x.row(i)) ^ (h * 0x100000001b3ULL);
    const unsigned char lab = static_cast<unsigned char>(code(y[static_cast<std::size_t>(i)]));
    h = fnv1a({&lab, 1}, h);
  }
  return h;
}

SvmModel svm_train_multiclass(const Matrix& x, const Labels& y, const SvmHyper& h, const SmoOptions& opt) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw DataError("svm_train_multiclass: label count mismatch");
  const auto counts = class_counts(y);
  for (auto e : kAllEmotions)
    if (counts[static_cast<std::size_t>(code(e))] == 0)
      throw TrainingError("svm_train_multiclass: class '" + std::string(to_string(e)) + "' is missing");
  SvmModel m;
  m.hyper = h;
  m.input_dim = x.cols();
  m.data_hash = training_hash(x, y);
  for (std::size_t p = 0; p < 3; ++p) {
    const auto [pos, neg] = SvmModel::kPairs[p];
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == pos || y[i] == neg) rows.push_back(i);
    Vector yy(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) yy(static_cast<Eigen::Index>(r)) = y[rows[r]] == pos ? 1.0 : -1.0;
    m.machines[p] = svm_train(take_rows(x, rows), yy, h, opt).machine;
  }
  return m;
}

}  // namespace afe
