#include "afe/ensemble.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <numeric>

using namespace afe;

TEST_CASE("bank of 15 with canonical tags and a 45-wide meta learner") {
  const auto t = testing::tiny_ensemble(1);
  const auto& bank = t.model.bank;
  CHECK(bank.size() == 15);
  for (std::size_t i = 0; i < 15; ++i) CHECK(bank.learners[i].tag == kCanonicalTags[i]);
  CHECK(t.model.meta.input_dim == 45);
  CHECK_NOTHROW(bank.validate());
  CHECK(meta_row(bank, t.holdout.x.row(0).transpose()).size() == 45);
}

TEST_CASE("meta dataset layout") {
  const auto t = testing::tiny_ensemble(2);
  const auto& bank = t.model.bank;
  const auto md = build_meta_dataset(bank, t.holdout.x, t.holdout.y);
  CHECK(md.x.rows() == t.holdout.x.rows());
  CHECK(md.width() == 45);
  CHECK(md.y == t.holdout.y);
  for (Eigen::Index i = 0; i < md.x.rows(); ++i)
    for (std::size_t l = 0; l < 15; ++l) {
      const Vector3 s = bank.learners[l].scores(t.holdout.x.row(i).transpose());
      CHECK(md.x.block(i, 3 * static_cast<Eigen::Index>(l), 1, 3) == s.transpose());
    }

  // a stub learner whose scores never change contributes constant columns
  BaseBank stub = bank;
  auto& nn = std::get<NnModel>(stub.learners[9].model);
  for (auto& p : nn.params) {
    p.weight.setZero();
    p.bias.setZero();
  }
  nn.params[nn.params.size() - 2].bias << 1, 2, 3;  // the dense layer before the final ReLU
  const auto ms = build_meta_dataset(stub, t.holdout.x, t.holdout.y);
  for (int c = 0; c < 3; ++c) CHECK((ms.x.col(27 + c).array() == ms.x(0, 27 + c)).all());

  CHECK_THROWS_AS(build_meta_dataset(bank, t.train.x, t.train.y), DataError);
  CHECK_THROWS_AS(build_meta_dataset(bank, Matrix::Zero(2, 39), Labels(2, Emotion::Bad)), DataError);
}

TEST_CASE("meta training counts LOOCV fits and ignores row order") {
  const auto t = testing::tiny_ensemble(3);
  const auto md = build_meta_dataset(t.model.bank, t.holdout.x, t.holdout.y);
  std::size_t calls = 0;
  const auto base = svm_fit_predict();
  FitPredictFn counted = [&](const Matrix& a, const Labels& b, const Matrix& c, const SvmHyper& h) {
    ++calls;
    return base(a, b, c, h);
  };
  const auto single = train_meta(md, Grid::single({0.1, 0.1}), counted);
  CHECK(calls == static_cast<std::size_t>(md.x.rows()));
  CHECK(single.search.fits == calls);
  CHECK(single.model.input_dim == 45);
  CHECK(single.model.hyper == SvmHyper{0.1, 0.1});

  const auto full = train_meta(md, Grid::meta());
  std::vector<std::size_t> perm(md.y.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(4);
  rng.shuffle(perm);
  MetaDataset shuffled{take_rows(md.x, perm), take(md.y, perm), {}};
  CHECK(train_meta(shuffled, Grid::meta()).search.best == full.search.best);

  MetaDataset thin = md;
  thin.y.assign(thin.y.size(), Emotion::Bad);
  thin.y[0] = Emotion::Good;
  CHECK_THROWS_AS(train_meta(thin), TrainingError);
}

TEST_CASE("prediction is the composition of its stages") {
  const auto t = testing::tiny_ensemble(4);
  const auto& m = t.model;
  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    Vector raw(195);
    for (auto& v : raw) v = rng.normal() * 10;
    const Vector x = m.preproc.transform(raw);
    CHECK(x.size() == 40);
    const Emotion e = m.predict_raw(raw);
    CHECK(e == m.meta.predict(meta_row(m.bank, x)));
    CHECK(e == m.predict_raw(raw));
  }
  Segment s;
  s.sample_rate = kEngineSampleRate;
  s.samples = Vector::NullaryExpr(22050, [&] { return rng.uniform(-0.5, 0.5); });
  s.source_id = "noise";
  CHECK(m.predict(s) == m.predict_model_row(m.preproc.transform(s)));
  s.sample_rate = 16000;
  CHECK_THROWS_AS(m.predict(s), DataError);
  CHECK_THROWS_AS(m.predict_raw(Vector::Zero(10)), DataError);
}

TEST_CASE("assembly rejects inconsistent parts") {
  const auto t = testing::tiny_ensemble(5);
  const auto& m = t.model;

  BaseBank short_bank = m.bank;
  short_bank.learners.erase(short_bank.learners.begin() + 13);
  try {
    assemble(short_bank, m.meta, m.preproc, m.meta_rows);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("cnn-e200") != std::string::npos);
  }
  BaseBank missing_tail = m.bank;
  missing_tail.learners.pop_back();
  try {
    assemble(missing_tail, m.meta, m.preproc, m.meta_rows);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("cnn-e300") != std::string::npos);
  }

  PreprocState other = m.preproc;
  other.scaler.max(0) += 1.0;
  CHECK_THROWS_AS(assemble(m.bank, m.meta, other, m.meta_rows), ConfigError);

  SvmModel narrow = m.meta;
  narrow.input_dim = 42;
  CHECK_THROWS_AS(assemble(m.bank, narrow, m.preproc, m.meta_rows), ConfigError);

  auto overlap = m.meta_rows;
  overlap.push_back(m.bank.learners[0].train_rows[0]);
  CHECK_THROWS_AS(assemble(m.bank, m.meta, m.preproc, overlap), ConfigError);
}

TEST_CASE("majority vote baseline") {
  const auto t = testing::tiny_ensemble(6);
  // a bank whose nine SVMs agree outvotes the six networks
  const Vector x = t.train.x.row(0).transpose();
  const Emotion svm = t.model.bank.learners[0].predict(x);
  int agree = 0;
  for (std::size_t i = 0; i < 9; ++i) agree += t.model.bank.learners[i].predict(x) == svm;
  if (agree == 9) CHECK(majority_vote(t.model.bank, x) == svm);
}
