#ifndef AFE_TESTS_FIXTURES_HPP
#define AFE_TESTS_FIXTURES_HPP

// Small but complete ensembles built without running the training pipeline.

#include "afe/ensemble.hpp"
#include "testing.hpp"

#include <limits>

namespace afe::testing {

/// Preprocessing fitted on random raw rows; the mask keeps the first `kept`
/// of 195 columns.
inline PreprocState tiny_preproc(std::uint64_t seed, int kept = 40) {
  Rng rng(seed);
  const Matrix raw = Matrix::NullaryExpr(30, 195, [&] { return rng.normal() * 10; });
  PreprocState p;
  p.window_seconds = 1.0;
  p.outliers = fit_outlier_bounds(raw);
  p.scaler = fit_scaler(repair_outliers(p.outliers, raw));
  auto& m = p.mask;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  m.variance = Vector::Constant(195, 0.1);
  m.chi2 = Vector::Constant(195, nan);
  m.overlap = Vector::Constant(195, nan);
  m.spearman = Vector::Constant(195, nan);
  for (int j = 0; j < 195; ++j) {
    m.keep.push_back(j < kept);
    m.dropped_by.push_back(j < kept ? FilterStage::Kept : FilterStage::Variance);
  }
  m.survivors = {195, static_cast<std::size_t>(kept), static_cast<std::size_t>(kept), static_cast<std::size_t>(kept),
                 static_cast<std::size_t>(kept)};
  return p;
}

struct TinyEnsemble {
  EnsembleModel model;
  Blobs train, holdout;
  MetaTraining meta;
};

/// Nine SVMs with distinct hyperparameters plus six freshly initialised
/// networks, all on `kept`-wide blobs, and a meta SVM trained on a disjoint
/// holdout.
inline TinyEnsemble tiny_ensemble(std::uint64_t seed, int kept = 40) {
  TinyEnsemble t;
  const PreprocState prep = tiny_preproc(seed, kept);
  const auto h = prep.hash();
  t.train = blobs(8, kept, 0.5, seed * 3 + 1);
  t.holdout = blobs(4, kept, 0.5, seed * 3 + 2);
  const auto rows = row_hashes(t.train.x);
  BaseBank bank;
  for (std::size_t i = 0; i < kCanonicalTags.size(); ++i) {
    BaseLearner l;
    l.tag = std::string(kCanonicalTags[i]);
    l.preproc_hash = h;
    l.train_rows = rows;
    if (i < 9) {
      l.model = svm_train_multiclass(t.train.x, t.train.y, {0.5 + 0.25 * static_cast<double>(i), 0.05});
    } else {
      const bool cnn = i >= 12;
      l.model = init_model(cnn ? cnn_arch(kept) : bpnn_arch(kept), seed + i);
    }
    bank.learners.push_back(std::move(l));
  }
  const auto md = build_meta_dataset(bank, t.holdout.x, t.holdout.y);
  t.meta = train_meta(md, {{0.5, 1}, {0.1, 0.5}});
  t.model = assemble(std::move(bank), t.meta.model, prep, md.source_rows);
  return t;
}

}  // namespace afe::testing

#endif  // AFE_TESTS_FIXTURES_HPP
