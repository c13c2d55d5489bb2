#ifndef AFE_TUNING_HPP
#define AFE_TUNING_HPP

#include "afe/eval.hpp"
#include "afe/svm.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace afe {

struct Grid {
  std::vector<double> c_values;
  std::vector<double> gamma_values;

  /// Non-empty, positive, strictly ascending on both axes.
  void validate() const;
  std::size_t size() const { return c_values.size() * gamma_values.size(); }
  /// Combination `i` in canonical order: C outer, gamma inner.
  SvmHyper at(std::size_t i) const;

  /// The wide first-round grid over [0.1, 10], denser at the low end.
  static Grid coarse();
  /// Meta-learner grid over [0.1, 3] on both axes.
  static Grid meta();
  static Grid single(SvmHyper h) { return {{h.c}, {h.gamma}}; }

  friend bool operator==(const Grid&, const Grid&) = default;
};

struct ComboScore {
  SvmHyper hyper;
  double accuracy = 0.0;
};

enum class CvKind { KFold, Nested, Loocv };
std::string_view to_string(CvKind k);

struct CvSpec {
  CvKind kind = CvKind::KFold;
  int k = 5;        // k-fold
  int k_outer = 5;  // nested
  int k_inner = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One search round. For k-fold rounds `scores` holds the mean fold
/// accuracy of every combination and `best_accuracy` its maximum. For nested
/// rounds `scores` holds inner accuracies averaged over the outer folds and
/// `best_accuracy` the outer (unbiased) estimate.
struct GridRound {
  int round = 0;
  CvKind kind = CvKind::KFold;
  Grid grid;
  std::vector<ComboScore> scores;
  SvmHyper best;
  double best_accuracy = 0.0;
  /// Pooled held-out predictions of the chosen combination.
  ConfusionMatrix cm;
  std::size_t fits = 0;
};

struct GridLedger {
  std::string name;
  std::vector<GridRound> rounds;

  std::size_t total_fits() const;
  /// Round / scopes / chosen parameters / per-class P R F1 / accuracy.
  std::string to_text() const;
};

using Folds = std::vector<std::vector<std::size_t>>;

/// Shuffled folds of size floor(n/k) or ceil(n/k); the first n mod k folds
/// are the larger ones.
Folds kfold_split(std::size_t n, int k, std::uint64_t seed);
/// Stratified: each class is shuffled and dealt round-robin, continuing from
/// the fold where the previous class stopped, so fold sizes stay balanced.
Folds kfold_split(const Labels& y, int k, std::uint64_t seed);

/// Train on the first pair, predict the second. Used as the unit of work
/// (and the unit of counting) for every protocol below.
using FitPredictFn =
    std::function<Labels(const Matrix& x_train, const Labels& y_train, const Matrix& x_eval, const SvmHyper& h)>;

FitPredictFn svm_fit_predict(SmoOptions opt = {});

struct CvOutcome {
  double accuracy = 0.0;  // mean over folds
  ConfusionMatrix cm;     // pooled over folds
  std::size_t fits = 0;
};

CvOutcome cross_validate(const Matrix& x, const Labels& y, const Folds& folds, const SvmHyper& h,
                         const FitPredictFn& fit);

/// Exhaustive search; ties resolve to the smaller C, then the smaller gamma.
/// A failing fit is rethrown as TrainingError naming the combination.
GridRound grid_search(const Grid& grid, const Matrix& x, const Labels& y, const Folds& folds,
                      const FitPredictFn& fit);

struct ShrinkSpec {
  double span_fraction = 0.25;  // half-width of the first refinement, relative to the incumbent
  double decay = 0.5;           // half-width factor per further round
  int points = 3;               // odd, so the incumbent sits in the middle
  double c_epsilon = 1e-3;
  double gamma_epsilon = 1e-3;

  void validate() const;
};

/// Next grid bracketing the ledger's latest best. An axis whose span drops
/// below its epsilon collapses to the incumbent; nullopt once both have.
std::optional<Grid> refine_grid(const GridLedger& ledger, const ShrinkSpec& shrink = {});

struct NestedResult {
  std::vector<SvmHyper> fold_best;
  std::vector<double> inner_best_accuracy;
  std::vector<double> outer_accuracy;
  std::vector<double> mean_inner_scores;  // per combination, averaged over outer folds
  double mean_accuracy = 0.0;
  ConfusionMatrix cm;
  /// Most frequent per-fold choice; ties to the higher inner accuracy, then
  /// smaller C, then smaller gamma.
  SvmHyper chosen;
  std::size_t fits = 0;
};

/// Inner grid search on each outer-training split, scored on the outer fold.
/// Performs k_outer * k_inner * |grid| + k_outer fits.
NestedResult nested_cv(const Matrix& x, const Labels& y, const Grid& grid, int k_outer, int k_inner,
                       std::uint64_t seed, const FitPredictFn& fit);

/// Exactly n fits, each holding out one row.
CvOutcome loocv(const Matrix& x, const Labels& y, const SvmHyper& h, const FitPredictFn& fit);

/// Grid search scored by LOOCV (|grid| * n fits).
GridRound loocv_grid_search(const Grid& grid, const Matrix& x, const Labels& y, const FitPredictFn& fit);

struct SearchSpec {
  Grid initial = Grid::coarse();
  int rounds = 4;
  ShrinkSpec shrink;
  CvSpec cv;
};

/// Iterated k-fold search: one ledger round per requested round. Once the
/// refinement signals convergence, further rounds reuse the incumbent alone.
GridLedger run_kfold_search(const Matrix& x, const Labels& y, const SearchSpec& spec, const FitPredictFn& fit);
/// Same iteration with nested CV as the round evaluator.
GridLedger run_nested_search(const Matrix& x, const Labels& y, const SearchSpec& spec, const FitPredictFn& fit);

}  // namespace afe

#endif  // AFE_TUNING_HPP
