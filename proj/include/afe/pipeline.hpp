#ifndef AFE_PIPELINE_HPP
#define AFE_PIPELINE_HPP

#include "afe/balance.hpp"
#include "afe/config.hpp"
#include "afe/ensemble.hpp"
#include "afe/eval.hpp"

#include <filesystem>
#include <functional>
#include <string>

namespace afe {

using LogFn = std::function<void(const std::string&)>;

/// Raw feature vectors for every segment, in dataset order.
FeatureTable extract_table(const Dataset& d, const FeatureConfig& cfg);

/// Stratified holdout: round-half-up(fraction * class count) rows of every
/// class, drawn by seeded shuffle. Returns sorted row indices.
std::vector<std::size_t> stratified_holdout(const Labels& y, double fraction, std::uint64_t seed);

struct LearnerScore {
  std::string tag;
  double holdout_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct TrainArtifacts {
  EnsembleModel model;
  GridLedger kfold_ledger;
  GridLedger nested_ledger;
  GridRound meta_search;
  LearningCurve bpnn_curve;
  LearningCurve cnn_curve;
  BalanceReport balance;
  std::string mask_report;
  EvaluationReport test_report;
  EvaluationReport vote_report;  // majority-vote baseline, reported only
  std::vector<LearnerScore> learners;
  double meta_training_accuracy = 0.0;
  std::size_t train_rows = 0, test_rows = 0, holdout_rows = 0, base_rows = 0;
  /// True when no test row hash appears in any learner's training rows or
  /// the meta rows.
  bool test_split_clean = false;

  double best_base_test_accuracy() const;
};

/// Everything after extraction: repair, scaling, selection, holdout split,
/// balancing, base training, meta training and test evaluation.
TrainArtifacts train_from_features(const FeatureTable& train, const FeatureTable& test, const RunConfig& cfg,
                                   std::uint64_t seed, const LogFn& log = {});

/// Extraction and the seeded test partition, then train_from_features.
TrainArtifacts train_from_dataset(const Dataset& d, const RunConfig& cfg, std::uint64_t seed, const LogFn& log = {});

/// bundle.afe, report.txt, report.json, ledgers, meta search, learning
/// curves, mask and balance reports, learner scores.
void write_artifacts(const TrainArtifacts& a, const std::vector<std::string>& feature_names,
                     const std::filesystem::path& out_dir);

}  // namespace afe

#endif  // AFE_PIPELINE_HPP
