#include "afe/preprocess.hpp"

#include <algorithm>
#include <cmath>

namespace afe {

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

OutlierModel fit_outlier_bounds(const Matrix& x, double fence_multiplier) {
  if (x.rows() < 4) throw DataError("outlier fences need at least 4 training rows");
  const Eigen::Index d = x.cols();
  OutlierModel m;
  m.fence_multiplier = fence_multiplier;
  m.q1.resize(d);
  m.q3.resize(d);
  m.median.resize(d);
  m.lower.resize(d);
  m.upper.resize(d);
  std::vector<double> col(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) col[static_cast<std::size_t>(i)] = x(i, j);
    std::sort(col.begin(), col.end());
    m.q1(j) = quantile_sorted(col, 0.25);
    m.median(j) = quantile_sorted(col, 0.5);
    m.q3(j) = quantile_sorted(col, 0.75);
    const double iqr = m.q3(j) - m.q1(j);
    m.lower(j) = m.q1(j) - fence_multiplier * iqr;
    m.upper(j) = m.q3(j) + fence_multiplier * iqr;
  }
  return m;
}

Matrix repair_outliers(const OutlierModel& m, const Matrix& x) {
  if (x.cols() != m.dimension())
    throw DataError("outlier model expects " + std::to_string(m.dimension()) + " features, got " +
                    std::to_string(x.cols()));
  Matrix out = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (out(i, j) < m.lower(j) || out(i, j) > m.upper(j)) out(i, j) = m.median(j);
  return out;
}

Scaler fit_scaler(const Matrix& x) {
  if (x.rows() < 1) throw DataError("scaler needs at least one training row");
  return {x.colwise().minCoeff().transpose(), x.colwise().maxCoeff().transpose()};
}

Matrix scale(const Scaler& s, const Matrix& x) {
  if (x.cols() != s.dimension())
    throw DataError("scaler expects " + std::to_string(s.dimension()) + " features, got " +
                    std::to_string(x.cols()));
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double span = s.max(j) - s.min(j);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      out(i, j) = span > 0.0 ? std::clamp((x(i, j) - s.min(j)) / span, 0.0, 1.0) : 0.0;
  }
  return out;
}

std::uint64_t state_hash(const OutlierModel& m, std::uint64_t h) {
  for (const Vector* v : {&m.q1, &m.q3, &m.median, &m.lower, &m.upper})
    h = hash_doubles({v->data(), static_cast<std::size_t>(v->size())}, h);
  return hash_doubles({&m.fence_multiplier, 1}, h);
}

std::uint64_t state_hash(const Scaler& s, std::uint64_t h) {
  h = hash_doubles({s.min.data(), static_cast<std::size_t>(s.min.size())}, h);
  return hash_doubles({s.max.data(), static_cast<std::size_t>(s.max.size())}, h);
}

}  // namespace afe
