#ifndef AFE_ENSEMBLE_HPP
#define AFE_ENSEMBLE_HPP

#include "afe/dataio.hpp"
#include "afe/features.hpp"
#include "afe/nn.hpp"
#include "afe/preprocess.hpp"
#include "afe/select.hpp"
#include "afe/svm.hpp"
#include "afe/tuning.hpp"

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace afe {

/// Frozen input transform: extraction settings, outlier repair, scaling and
/// the feature mask, all fitted on training rows.
struct PreprocState {
  FeatureConfig features;
  double window_seconds = 7.0;
  int sample_rate = kEngineSampleRate;
  OutlierModel outliers;
  Scaler scaler;
  SelectionMask mask;

  std::uint64_t hash() const;
  /// Raw 195-wide feature rows -> repaired, scaled, masked rows.
  Matrix transform(const Matrix& raw) const;
  Vector transform(const Vector& raw) const;
  /// Segment -> model input row.
  Vector transform(const Segment& s) const;
};

inline constexpr std::array<std::string_view, 15> kCanonicalTags{
    "svm-kfold-r1",  "svm-kfold-r2",  "svm-kfold-r3",  "svm-kfold-r4", "svm-nested-r1",
    "svm-nested-r2", "svm-nested-r3", "svm-nested-r4", "svm-nested-r5", "bpnn-e140",
    "bpnn-e200",     "bpnn-e300",     "cnn-e140",      "cnn-e200",     "cnn-e300"};

struct BaseLearner {
  std::string tag;
  std::variant<SvmModel, NnModel> model;
  std::uint64_t preproc_hash = 0;
  /// Hashes of the (model-space) rows the learner was fitted on.
  std::vector<std::uint64_t> train_rows;

  Eigen::Index input_dim() const;
  /// Three per-class scores in class-code order.
  Vector3 scores(const Eigen::Ref<const Vector>& x) const;
  Emotion predict(const Eigen::Ref<const Vector>& x) const;
};

struct BaseBank {
  std::vector<BaseLearner> learners;

  std::size_t size() const { return learners.size(); }
  /// Exactly the canonical tags in canonical order and one shared input
  /// width; the error names the first missing or misplaced slot.
  void validate() const;
};

std::vector<std::uint64_t> row_hashes(const Matrix& x);

/// 3 * |bank| scores per row, learners in bank order.
Vector meta_row(const BaseBank& bank, const Eigen::Ref<const Vector>& x);

struct MetaDataset {
  Matrix x;
  Labels y;
  std::vector<std::uint64_t> source_rows;  // hashes of the base-level holdout rows

  Eigen::Index width() const { return x.cols(); }
};

/// Throws DataError when a holdout row was used to fit any base learner.
MetaDataset build_meta_dataset(const BaseBank& bank, const Matrix& x_holdout, const Labels& y_holdout);

struct MetaTraining {
  SvmModel model;
  GridRound search;  // LOOCV-scored grid
};

/// LOOCV-scored grid search over `grid`, then a final fit on every meta row.
MetaTraining train_meta(const MetaDataset& md, const Grid& grid = Grid::meta(),
                        const FitPredictFn& fit = svm_fit_predict());

struct EnsembleModel {
  PreprocState preproc;
  BaseBank bank;
  SvmModel meta;
  std::vector<std::uint64_t> meta_rows;

  /// Input already in model space (after preproc.transform).
  Emotion predict_model_row(const Eigen::Ref<const Vector>& x) const;
  Labels predict_model_rows(const Matrix& x) const;
  /// Raw 195-wide feature vector.
  Emotion predict_raw(const Vector& raw) const;
  Emotion predict(const Segment& s) const;
};

/// Checks the bank, the meta width (3 per learner), that every learner
/// carries the preprocessing hash and that the meta rows are disjoint from
/// all base training rows.
EnsembleModel assemble(BaseBank bank, SvmModel meta, PreprocState preproc, std::vector<std::uint64_t> meta_rows = {});

/// Plain majority vote over the base predictions, ties to the lower class
/// code. Baseline only; the ensemble never uses it.
Emotion majority_vote(const BaseBank& bank, const Eigen::Ref<const Vector>& x);

}  // namespace afe

#endif  // AFE_ENSEMBLE_HPP
