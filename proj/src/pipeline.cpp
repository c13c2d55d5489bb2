#include "afe/pipeline.hpp"

#include "afe/bundle.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace afe {

namespace {

void note(const LogFn& log, const std::string& msg) {
  if (log) log(msg);
}

double fraction_correct(const Labels& truth, const Labels& pred) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == pred[i];
  return truth.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(truth.size());
}

Labels learner_predictions(const BaseLearner& l, const Matrix& x) {
  Labels out;
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.push_back(l.predict(x.row(i).transpose()));
  return out;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
}

std::string curve_csv(const LearningCurve& c) {
  std::ostringstream os;
  os << "epoch,train_accuracy,val_accuracy,loss\n";
  for (std::size_t e = 0; e < c.size(); ++e)
    os << e + 1 << ',' << c.train_accuracy[e] << ',' << c.val_accuracy[e] << ',' << c.loss[e] << '\n';
  return os.str();
}

// wraps stage failures so the CLI can say where the run stopped
template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(name) + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string(name) + ": " + e.what());
  } catch (const TrainingError& e) {
    throw TrainingError(std::string(name) + ": " + e.what());
  }
}

}  // namespace

FeatureTable extract_table(const Dataset& d, const FeatureConfig& cfg) {
  FeatureTable t;
  t.x.resize(static_cast<Eigen::Index>(d.size()), cfg.vector_length());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& s = d.segments[i];
    t.x.row(static_cast<Eigen::Index>(i)) = extract_features(s.samples, s.sample_rate, cfg).transpose();
    if (!s.label) throw DataError("segment '" + s.source_id + "' has no label");
    t.y.push_back(*s.label);
    t.ids.push_back(s.source_id);
  }
  return t;
}

std::vector<std::size_t> stratified_holdout(const Labels& y, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> out;
  Rng rng(seed);
  for (auto e : kAllEmotions) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == e) members.push_back(i);
    if (members.empty()) continue;
    rng.shuffle(members);
    const std::size_t take_n = test_count(members.size(), fraction);
    out.insert(out.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take_n));
  }
  std::sort(out.begin(), out.end());
  return out;
}

double TrainArtifacts::best_base_test_accuracy() const {
  double best = 0.0;
  for (const auto& l : learners) best = std::max(best, l.test_accuracy);
  return best;
}

TrainArtifacts train_from_features(const FeatureTable& train, const FeatureTable& test, const RunConfig& cfg,
                                   std::uint64_t seed, const LogFn& log) {
  cfg.validate();
  if (train.x.cols() != cfg.features.vector_length() || test.x.cols() != train.x.cols())
    throw DataError("feature tables have " + std::to_string(train.x.cols()) + "/" + std::to_string(test.x.cols()) +
                    " columns, expected " + std::to_string(cfg.features.vector_length()));
  if (test.x.rows() == 0) throw DataError("empty test split");
  TrainArtifacts a;
  a.train_rows = static_cast<std::size_t>(train.x.rows());
  a.test_rows = static_cast<std::size_t>(test.x.rows());

  PreprocState prep;
  prep.features = cfg.features;
  prep.window_seconds = cfg.window_seconds;
  prep.sample_rate = cfg.sample_rate;

  const auto [x_train, x_test] = stage("preprocess", [&] {
    prep.outliers = fit_outlier_bounds(train.x, cfg.fence_multiplier);
    const Matrix tr = repair_outliers(prep.outliers, train.x);
    prep.scaler = fit_scaler(tr);
    return std::pair{scale(prep.scaler, tr), scale(prep.scaler, repair_outliers(prep.outliers, test.x))};
  });
  stage("select", [&] { prep.mask = run_filter_bank(x_train, train.y, x_test, cfg.select); });
  const Matrix xs_train = prep.mask.apply(x_train);
  const Matrix xs_test = prep.mask.apply(x_test);
  note(log, "selected " + std::to_string(prep.mask.kept_count()) + " of " + std::to_string(prep.mask.dimension()) +
                " features");

  const auto hold = stratified_holdout(train.y, cfg.meta_fraction, derive_seed(seed, "meta-holdout"));
  std::vector<std::size_t> base_idx;
  {
    std::size_t h = 0;
    for (std::size_t i = 0; i < train.y.size(); ++i) {
      if (h < hold.size() && hold[h] == i) ++h;
      else base_idx.push_back(i);
    }
  }
  const Matrix x_hold = take_rows(xs_train, hold);
  const Labels y_hold = take(train.y, hold);
  a.holdout_rows = hold.size();

  const BalancedSet bal = stage("balance", [&] {
    return near_miss(take_rows(xs_train, base_idx), take(train.y, base_idx), cfg.neighbors);
  });
  a.balance = bal.report;
  a.base_rows = bal.rows.size();
  note(log, "balanced base-training set: " + std::to_string(bal.rows.size()) + " rows");

  const std::uint64_t prep_hash = prep.hash();
  const auto base_hashes = row_hashes(bal.x);
  BaseBank bank;
  auto add_svm = [&](std::string tag, const SvmHyper& h) {
    BaseLearner l;
    l.tag = std::move(tag);
    l.model = svm_train_multiclass(bal.x, bal.y, h);
    l.preproc_hash = prep_hash;
    l.train_rows = base_hashes;
    bank.learners.push_back(std::move(l));
  };

  SearchSpec search;
  search.shrink = cfg.shrink;
  search.cv.k = cfg.k;
  search.cv.k_outer = cfg.k_outer;
  search.cv.k_inner = cfg.k_inner;
  const auto fit = svm_fit_predict();

  stage("k-fold search", [&] {
    search.rounds = 4;
    search.cv.seed = derive_seed(seed, "kfold-search");
    a.kfold_ledger = run_kfold_search(bal.x, bal.y, search, fit);
    for (const auto& r : a.kfold_ledger.rounds) add_svm("svm-kfold-r" + std::to_string(r.round), r.best);
  });
  note(log, "k-fold search done (" + std::to_string(a.kfold_ledger.total_fits()) + " fits)");
  stage("nested search", [&] {
    search.rounds = 5;
    search.cv.seed = derive_seed(seed, "nested-search");
    a.nested_ledger = run_nested_search(bal.x, bal.y, search, fit);
    for (const auto& r : a.nested_ledger.rounds) add_svm("svm-nested-r" + std::to_string(r.round), r.best);
  });
  note(log, "nested search done (" + std::to_string(a.nested_ledger.total_fits()) + " fits)");

  const int width = static_cast<int>(prep.mask.kept_count());
  auto add_nets = [&](const NnArch& arch, const char* prefix, LearningCurve& curve) {
    const auto snaps = nn_train(arch, bal.x, bal.y, cfg.nn_config(derive_seed(seed, prefix)), x_hold, y_hold);
    static constexpr std::array<const char*, 3> kSlots{"e140", "e200", "e300"};
    for (std::size_t s = 0; s < snaps.size(); ++s) {
      BaseLearner l;
      l.tag = std::string(prefix) + "-" + kSlots[s];
      l.model = snaps[s].model;
      l.preproc_hash = prep_hash;
      l.train_rows = base_hashes;
      bank.learners.push_back(std::move(l));
    }
    curve = snaps.back().curve;
  };
  stage("bpnn training", [&] { add_nets(bpnn_arch(width), "bpnn", a.bpnn_curve); });
  stage("cnn training", [&] { add_nets(cnn_arch(width), "cnn", a.cnn_curve); });
  note(log, "networks trained");

  const MetaDataset md = stage("meta dataset", [&] { return build_meta_dataset(bank, x_hold, y_hold); });
  const MetaTraining meta = stage("meta training", [&] { return train_meta(md, Grid::meta(), fit); });
  a.meta_search = meta.search;
  a.meta_training_accuracy = fraction_correct(md.y, meta.model.predict_rows(md.x));
  a.model = stage("assemble", [&] { return assemble(std::move(bank), meta.model, std::move(prep), md.source_rows); });
  note(log, "meta learner C=" + std::to_string(meta.search.best.c) + " gamma=" + std::to_string(meta.search.best.gamma));

  // test split: ensemble, each base learner, majority vote
  const Labels pred = a.model.predict_model_rows(xs_test);
  a.test_report = evaluate(test.y, pred, "ensemble", a.model.preproc.hash());
  Labels vote;
  for (Eigen::Index i = 0; i < xs_test.rows(); ++i) vote.push_back(majority_vote(a.model.bank, xs_test.row(i).transpose()));
  a.vote_report = evaluate(test.y, vote, "majority-vote baseline", a.model.preproc.hash());
  for (const auto& l : a.model.bank.learners)
    a.learners.push_back({l.tag, fraction_correct(y_hold, learner_predictions(l, x_hold)),
                          fraction_correct(test.y, learner_predictions(l, xs_test))});

  std::unordered_set<std::uint64_t> used(a.model.meta_rows.begin(), a.model.meta_rows.end());
  for (const auto& l : a.model.bank.learners) used.insert(l.train_rows.begin(), l.train_rows.end());
  a.test_split_clean = true;
  for (auto h : row_hashes(xs_test)) a.test_split_clean = a.test_split_clean && !used.contains(h);
  return a;
}

TrainArtifacts train_from_dataset(const Dataset& d, const RunConfig& cfg, std::uint64_t seed, const LogFn& log) {
  if (d.size() == 0) throw DataError("dataset is empty");
  const FeatureTable all = stage("extract", [&] { return extract_table(d, cfg.features); });
  note(log, "extracted " + std::to_string(all.x.rows()) + " x " + std::to_string(all.x.cols()) + " features");
  const auto counts = class_counts(all.y);
  for (auto e : kAllEmotions)
    if (counts[code(e)] == 0) throw DataError("partition: no samples of class '" + std::string(to_string(e)) + "'");
  const auto test_idx = sample_test_indices(d.size(), cfg.test_fraction, derive_seed(seed, "partition"));
  std::vector<std::size_t> train_idx;
  {
    std::size_t t = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (t < test_idx.size() && test_idx[t] == i) ++t;
      else train_idx.push_back(i);
    }
  }
  auto subset = [&](const std::vector<std::size_t>& idx) {
    FeatureTable t;
    t.x = take_rows(all.x, idx);
    t.y = take(all.y, idx);
    for (auto i : idx) t.ids.push_back(all.ids[i]);
    return t;
  };
  return train_from_features(subset(train_idx), subset(test_idx), cfg, seed, log);
}

void write_artifacts(const TrainArtifacts& a, const std::vector<std::string>& feature_names,
                     const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  save_bundle(a.model, out_dir / "bundle.afe");
  write_text(out_dir / "report.txt", a.test_report.to_text());
  write_text(out_dir / "report.json", a.test_report.to_json());
  write_text(out_dir / "baseline_vote.txt", a.vote_report.to_text());
  write_text(out_dir / "ledger_kfold.txt", a.kfold_ledger.to_text());
  write_text(out_dir / "ledger_nested.txt", a.nested_ledger.to_text());
  {
    GridLedger meta;
    meta.name = "meta learner LOOCV grid search";
    meta.rounds.push_back(a.meta_search);
    meta.rounds.back().round = 1;
    std::ostringstream os;
    os << meta.to_text() << "\nper-combination LOOCV accuracy\nC\tgamma\taccuracy\n";
    for (const auto& s : a.meta_search.scores) os << s.hyper.c << '\t' << s.hyper.gamma << '\t' << s.accuracy << '\n';
    os << "meta training accuracy: " << fixed2(a.meta_training_accuracy) << '\n';
    write_text(out_dir / "meta_search.txt", os.str());
  }
  write_text(out_dir / "curve_bpnn.csv", curve_csv(a.bpnn_curve));
  write_text(out_dir / "curve_cnn.csv", curve_csv(a.cnn_curve));
  write_text(out_dir / "mask.txt", mask_report(a.model.preproc.mask, feature_names));
  write_text(out_dir / "balance.txt", a.balance.to_text());
  std::ostringstream os;
  os << "split: train " << a.train_rows << ", test " << a.test_rows << ", meta holdout " << a.holdout_rows
     << ", balanced base " << a.base_rows << '\n';
  os << "test split disjoint from all training provenance: " << (a.test_split_clean ? "yes" : "NO") << '\n';
  os << "learner\tholdout_acc\ttest_acc\n";
  for (const auto& l : a.learners) os << l.tag << '\t' << fixed2(l.holdout_accuracy) << '\t' << fixed2(l.test_accuracy) << '\n';
  os << "ensemble\t-\t" << fixed2(a.test_report.accuracy) << '\n';
  os << "majority vote (baseline)\t-\t" << fixed2(a.vote_report.accuracy) << '\n';
  write_text(out_dir / "learners.txt", os.str());
}

}  // namespace afe
