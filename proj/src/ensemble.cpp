#include "afe/ensemble.hpp"

#include <algorithm>
#include <unordered_set>

namespace afe {

std::uint64_t PreprocState::hash() const {
  const int ints[] = {features.frames.frame_length, features.frames.hop, static_cast<int>(features.frames.window),
                      features.mfcc_filters,        features.mfcc_coeffs, features.mel_bands, sample_rate};
  std::uint64_t h = fnv1a({reinterpret_cast<const unsigned char*>(ints), sizeof ints});
  const double reals[] = {features.rolloff_fraction, features.log_floor, window_seconds};
  h = hash_doubles(reals, h);
  h = state_hash(outliers, h);
  h = state_hash(scaler, h);
  return state_hash(mask, h);
}

Matrix PreprocState::transform(const Matrix& raw) const {
  if (raw.cols() != outliers.dimension())
    throw DataError("preprocess: expected " + std::to_string(outliers.dimension()) + " raw features, got " +
                    std::to_string(raw.cols()));
  return mask.apply(scale(scaler, repair_outliers(outliers, raw)));
}

Vector PreprocState::transform(const Vector& raw) const {
  return transform(Matrix(raw.transpose())).row(0).transpose();
}

Vector PreprocState::transform(const Segment& s) const {
  if (s.sample_rate != sample_rate)
    throw DataError("segment '" + s.source_id + "' is at " + std::to_string(s.sample_rate) + " Hz, model expects " +
                    std::to_string(sample_rate));
  Vector raw;
  try {
    raw = extract_features(s.samples, s.sample_rate, features);
  } catch (const DataError& e) {
    throw DataError("feature extraction of '" + s.source_id + "': " + e.what());
  }
  return transform(raw);
}

Eigen::Index BaseLearner::input_dim() const {
  return std::visit(
      [](const auto& m) -> Eigen::Index {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, SvmModel>) return m.input_dim;
        else return m.arch.input_width;
      },
      model);
}

Vector3 BaseLearner::scores(const Eigen::Ref<const Vector>& x) const {
  return std::visit([&](const auto& m) -> Vector3 { return m.scores(x); }, model);
}

Emotion BaseLearner::predict(const Eigen::Ref<const Vector>& x) const {
  return std::visit([&](const auto& m) { return m.predict(x); }, model);
}

void BaseBank::validate() const {
  for (std::size_t i = 0; i < kCanonicalTags.size(); ++i) {
    if (i >= learners.size()) throw ConfigError("base bank is missing learner '" + std::string(kCanonicalTags[i]) + "'");
    if (learners[i].tag != kCanonicalTags[i])
      throw ConfigError("base bank slot " + std::to_string(i) + " holds '" + learners[i].tag + "', expected '" +
                        std::string(kCanonicalTags[i]) + "'");
  }
  if (learners.size() > kCanonicalTags.size())
    throw ConfigError("base bank has " + std::to_string(learners.size()) + " learners, expected " +
                      std::to_string(kCanonicalTags.size()));
  for (const auto& l : learners)
    if (l.input_dim() != learners.front().input_dim())
      throw ConfigError("learner '" + l.tag + "' takes " + std::to_string(l.input_dim()) + " inputs, '" +
                        learners.front().tag + "' takes " + std::to_string(learners.front().input_dim()));
}

std::vector<std::uint64_t> row_hashes(const Matrix& x) {
  std::vector<std::uint64_t> h;
  h.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) h.push_back(hash_row(x.row(i)));
  return h;
}

Vector meta_row(const BaseBank& bank, const Eigen::Ref<const Vector>& x) {
  Vector out(3 * static_cast<Eigen::Index>(bank.size()));
  for (std::size_t l = 0; l < bank.size(); ++l) {
    const auto& learner = bank.learners[l];
    if (x.size() != learner.input_dim())
      throw DataError("learner '" + learner.tag + "' expects " + std::to_string(learner.input_dim()) +
                      " inputs, got " + std::to_string(x.size()));
    out.segment(3 * static_cast<Eigen::Index>(l), 3) = learner.scores(x);
  }
  return out;
}

MetaDataset build_meta_dataset(const BaseBank& bank, const Matrix& x_holdout, const Labels& y_holdout) {
  if (static_cast<std::size_t>(x_holdout.rows()) != y_holdout.size())
    throw DataError("build_meta_dataset: label count mismatch");
  MetaDataset md;
  md.source_rows = row_hashes(x_holdout);
  const std::unordered_set<std::uint64_t> holdout(md.source_rows.begin(), md.source_rows.end());
  for (const auto& l : bank.learners)
    for (auto h : l.train_rows)
      if (holdout.contains(h)) throw DataError("holdout row was used to train learner '" + l.tag + "'");
  md.x.resize(x_holdout.rows(), 3 * static_cast<Eigen::Index>(bank.size()));
  for (Eigen::Index i = 0; i < x_holdout.rows(); ++i) md.x.row(i) = meta_row(bank, x_holdout.row(i).transpose());
  md.y = y_holdout;
  return md;
}

MetaTraining train_meta(const MetaDataset& md, const Grid& grid, const FitPredictFn& fit) {
  const auto counts = class_counts(md.y);
  for (auto e : kAllEmotions)
    if (counts[code(e)] < 2)
      throw TrainingError("meta training needs at least 2 rows of class '" + std::string(to_string(e)) + "', have " +
                          std::to_string(counts[code(e)]));
  MetaTraining out;
  out.search = loocv_grid_search(grid, md.x, md.y, fit);
  out.model = svm_train_multiclass(md.x, md.y, out.search.best);
  return out;
}

Emotion EnsembleModel::predict_model_row(const Eigen::Ref<const Vector>& x) const {
  return meta.predict(meta_row(bank, x));
}

Labels EnsembleModel::predict_model_rows(const Matrix& x) const {
  Labels out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.push_back(predict_model_row(x.row(i).transpose()));
  return out;
}

Emotion EnsembleModel::predict_raw(const Vector& raw) const { return predict_model_row(preproc.transform(raw)); }

Emotion EnsembleModel::predict(const Segment& s) const { return predict_model_row(preproc.transform(s)); }

EnsembleModel assemble(BaseBank bank, SvmModel meta, PreprocState preproc, std::vector<std::uint64_t> meta_rows) {
  bank.validate();
  const Eigen::Index width = 3 * static_cast<Eigen::Index>(bank.size());
  if (meta.input_dim != width)
    throw ConfigError("meta learner takes " + std::to_string(meta.input_dim) + " inputs, bank produces " +
                      std::to_string(width));
  if (static_cast<std::size_t>(bank.learners.front().input_dim()) != preproc.mask.kept_count())
    throw ConfigError("base learners take " + std::to_string(bank.learners.front().input_dim()) +
                      " inputs but the feature mask keeps " + std::to_string(preproc.mask.kept_count()));
  const std::uint64_t h = preproc.hash();
  for (const auto& l : bank.learners)
    if (l.preproc_hash != h) throw ConfigError("learner '" + l.tag + "' was trained under different preprocessing");
  const std::unordered_set<std::uint64_t> meta_set(meta_rows.begin(), meta_rows.end());
  for (const auto& l : bank.learners)
    for (auto r : l.train_rows)
      if (meta_set.contains(r)) throw ConfigError("meta training rows overlap the training rows of '" + l.tag + "'");
  return {std::move(preproc), std::move(bank), std::move(meta), std::move(meta_rows)};
}

Emotion majority_vote(const BaseBank& bank, const Eigen::Ref<const Vector>& x) {
  std::array<int, kClassCount> votes{};
  for (const auto& l : bank.learners) ++votes[code(l.predict(x))];
  return emotion_from_code(static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin()));
}

}  // namespace afe
