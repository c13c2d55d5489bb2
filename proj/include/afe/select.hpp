#ifndef AFE_SELECT_HPP
#define AFE_SELECT_HPP

#include "afe/core.hpp"

#include <string>
#include <vector>

namespace afe {

/// Which filter removed a feature (Kept for survivors).
enum class FilterStage : std::uint8_t { Kept = 0, Variance = 1, ChiSquare = 2, KdeDrift = 3, Spearman = 4 };

std::string_view to_string(FilterStage s);

struct FilterBankConfig {
  double variance_threshold = 0.02;
  int chi2_k = 60;
  double kde_overlap = 0.75;
  int kde_grid = 512;
  double spearman_threshold = 0.08;

  void validate() const;
};

/// Result of the filter bank: which input columns survive and why the others
/// were dropped. Scores are NaN for stages a feature never reached.
struct SelectionMask {
  std::vector<bool> keep;
  std::vector<FilterStage> dropped_by;
  Vector variance, chi2, overlap, spearman;
  /// Survivor counts: input, after variance, chi2, KDE and Spearman.
  std::array<std::size_t, 5> survivors{};

  Eigen::Index dimension() const { return static_cast<Eigen::Index>(keep.size()); }
  std::size_t kept_count() const;
  std::vector<std::size_t> kept_indices() const;
  Matrix apply(const Matrix& x) const;
  Vector apply(const Vector& x) const;
};

Vector population_variance(const Matrix& x);
std::vector<bool> variance_filter(const Matrix& x, double threshold = 0.02);

/// Chi-square of each non-negative feature against the class labels, using
/// per-class feature sums as observed counts.
Vector chi2_scores(const Matrix& x, const Labels& y);
/// Top-k by score, ties to the lower column index.
std::vector<bool> chi2_filter(const Matrix& x, const Labels& y, int k = 60);

/// Silverman's rule 0.9 min(sd, IQR / 1.34) n^(-1/5); 0 for a constant sample.
double silverman_bandwidth(const Vector& samples);
/// Gaussian-kernel density estimate at `x`.
double kde_estimate(const Vector& samples, double h, double x);
/// Overlap coefficient (integral of min of the two densities) in [0, 1].
double kde_overlap(const Vector& a, const Vector& b, int grid_points = 512);
std::vector<bool> kde_overlap_filter(const Matrix& x_train, const Matrix& x_test,
                                     double threshold = 0.75, int grid_points = 512);

/// 1-based ranks with ties sharing their average rank.
Vector average_ranks(const Vector& v);
double spearman(const Vector& a, const Vector& b);
Vector spearman_scores(const Matrix& x, const Labels& y);
std::vector<bool> spearman_filter(const Matrix& x, const Labels& y, double threshold = 0.08);

/// variance -> chi2 -> KDE drift -> Spearman, each stage seeing only the
/// previous stage's survivors.
SelectionMask run_filter_bank(const Matrix& x_train, const Labels& y_train, const Matrix& x_test,
                              const FilterBankConfig& cfg = {});

/// One line per input feature: name, stage scores, kept/dropped-by.
std::string mask_report(const SelectionMask& m, const std::vector<std::string>& names);

std::uint64_t state_hash(const SelectionMask& m, std::uint64_t h);

}  // namespace afe

#endif  // AFE_SELECT_HPP
