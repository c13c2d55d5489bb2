#include "afe/bundle.hpp"
#include "afe/corpus.hpp"
#include "afe/pipeline.hpp"
#include "testing.hpp"

#include <doctest.h>

#include <fstream>
#include <iterator>

using namespace afe;
using namespace afe::testing;

namespace {

RunConfig small_config() {
  RunConfig cfg;
  cfg.window_seconds = 2.0;
  cfg.stop_epochs = {20, 30, 40};
  return cfg;
}

Dataset small_corpus(std::uint64_t seed) {
  ToneCorpusSpec spec;
  spec.per_class = 20;
  spec.seconds = 2.0;
  return tone_dataset(spec, seed);
}

// one run shared by the cases below; training dominates the cost
const TrainArtifacts& shared_run() {
  static const TrainArtifacts a = train_from_dataset(small_corpus(4), small_config(), 4);
  return a;
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("stratified holdout takes round-half-up of every class") {
  Labels y;
  for (int i = 0; i < 17; ++i) y.push_back(Emotion::Bad);
  for (int i = 0; i < 10; ++i) y.push_back(Emotion::Neutral);
  for (int i = 0; i < 3; ++i) y.push_back(Emotion::Good);
  const auto h = stratified_holdout(y, 0.25, 9);
  CHECK(std::is_sorted(h.begin(), h.end()));
  std::array<int, kClassCount> n{};
  for (auto i : h) ++n[code(y[i])];
  CHECK(n[code(Emotion::Bad)] == 4);      // 4.25
  CHECK(n[code(Emotion::Neutral)] == 3);  // 2.5 rounds up
  CHECK(n[code(Emotion::Good)] == 1);     // 0.75
  CHECK(h == stratified_holdout(y, 0.25, 9));
}

TEST_CASE("end-to-end run on a small tone corpus") {
  const auto& a = shared_run();
  CHECK(a.train_rows + a.test_rows == 60);
  CHECK(a.test_rows == 9);
  CHECK(a.test_split_clean);
  CHECK(a.learners.size() == 15);
  CHECK(a.model.meta.input_dim == 45);
  CHECK(a.model.meta_rows.size() == a.holdout_rows);
  CHECK(a.kfold_ledger.rounds.size() == 4);
  CHECK(a.nested_ledger.rounds.size() == 5);
  CHECK(a.bpnn_curve.size() == 40);
  CHECK(a.cnn_curve.size() == 40);
  CHECK(a.model.preproc.mask.kept_count() >= 30);
  CHECK(a.test_report.accuracy >= 0.8);
  CHECK(a.best_base_test_accuracy() >= 0.8);
}

TEST_CASE("artifacts are written and the bundle reloads") {
  const auto& a = shared_run();
  const auto dir = scratch_dir("pipeline-out");
  write_artifacts(a, feature_names(a.model.preproc.features), dir);
  for (const char* f : {"bundle.afe", "report.txt", "report.json", "baseline_vote.txt", "ledger_kfold.txt",
                        "ledger_nested.txt", "meta_search.txt", "curve_bpnn.csv", "curve_cnn.csv", "mask.txt",
                        "balance.txt", "learners.txt"}) {
    CAPTURE(f);
    CHECK(std::filesystem::file_size(dir / f) > 0);
  }
  const auto m = load_bundle(dir / "bundle.afe");
  const auto d = small_corpus(4);
  for (std::size_t i = 0; i < d.size(); i += 7) CHECK(m.predict(d.segments[i]) == a.model.predict(d.segments[i]));
  CHECK(file_bytes(dir / "report.txt") == a.test_report.to_text());
}

TEST_CASE("same seed, same bundle bytes") {
  const auto again = train_from_dataset(small_corpus(4), small_config(), 4);
  CHECK(serialize(again.model) == serialize(shared_run().model));
}

TEST_CASE("pipeline failures are typed") {
  auto d = small_corpus(2);
  std::erase_if(d.segments, [](const Segment& s) { return s.label == Emotion::Good; });
  CHECK_THROWS_AS(train_from_dataset(d, small_config(), 1), DataError);
  CHECK_THROWS_AS(train_from_dataset(Dataset{}, small_config(), 1), DataError);
  FeatureTable t;
  t.x = Matrix::Zero(4, 10);
  t.y.assign(4, Emotion::Bad);
  CHECK_THROWS_AS(train_from_features(t, t, small_config(), 1), DataError);
}
