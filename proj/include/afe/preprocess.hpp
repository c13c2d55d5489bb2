#ifndef AFE_PREPROCESS_HPP
#define AFE_PREPROCESS_HPP

#include "afe/core.hpp"

namespace afe {

/// Per-feature Tukey fences fitted on training rows.
struct OutlierModel {
  Vector q1, q3, median;
  Vector lower, upper;
  double fence_multiplier = 1.5;

  Eigen::Index dimension() const { return median.size(); }
};

/// Per-feature training minimum and maximum for min-max scaling.
struct Scaler {
  Vector min, max;

  Eigen::Index dimension() const { return min.size(); }
};

/// Linear interpolation between closest ranks (Hyndman-Fan type 7).
/// `sorted` must be ascending and non-empty.
double quantile_sorted(const std::vector<double>& sorted, double p);

OutlierModel fit_outlier_bounds(const Matrix& x, double fence_multiplier = 1.5);

/// Values outside [lower, upper] become the feature's training median.
Matrix repair_outliers(const OutlierModel& m, const Matrix& x);

Scaler fit_scaler(const Matrix& x);

/// (x - min) / (max - min), 0 for constant features, clamped to [0, 1].
Matrix scale(const Scaler& s, const Matrix& x);

std::uint64_t state_hash(const OutlierModel& m, std::uint64_t h);
std::uint64_t state_hash(const Scaler& s, std::uint64_t h);

}  // namespace afe

#endif  // AFE_PREPROCESS_HPP
