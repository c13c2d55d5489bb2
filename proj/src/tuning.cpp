#include "afe/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace afe {

namespace {

void check_axis(const std::vector<double>& v, const char* axis) {
  if (v.empty()) throw ConfigError(std::string("grid axis ") + axis + " is empty");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0) || !std::isfinite(v[i])) throw ConfigError(std::string("grid axis ") + axis + " must be positive");
    if (i > 0 && !(v[i] > v[i - 1])) throw ConfigError(std::string("grid axis ") + axis + " must be strictly ascending");
  }
}

std::string list(const std::vector<double>& v) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ']';
  return os.str();
}

// strict preference of a over b on equal accuracy
bool simpler(const SvmHyper& a, const SvmHyper& b) {
  if (a.c != b.c) return a.c < b.c;
  return a.gamma < b.gamma;
}

std::vector<std::size_t> complement(std::size_t n, const std::vector<std::size_t>& held) {
  std::vector<bool> out(n, false);
  for (auto i : held) out[i] = true;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i)
    if (!out[i]) rest.push_back(i);
  return rest;
}

double fraction_correct(const Labels& truth, const Labels& pred) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == pred[i];
  return truth.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(truth.size());
}

std::string describe(const SvmHyper& h) {
  std::ostringstream os;
  os << "C=" << h.c << " gamma=" << h.gamma;
  return os.str();
}

}  // namespace

void Grid::validate() const {
  check_axis(c_values, "C");
  check_axis(gamma_values, "gamma");
}

SvmHyper Grid::at(std::size_t i) const {
  if (i >= size()) throw std::out_of_range("grid index");
  return {c_values[i / gamma_values.size()], gamma_values[i % gamma_values.size()]};
}

Grid Grid::coarse() {
  const std::vector<double> axis{0.1, 0.5, 1, 2, 3, 5, 7, 10};
  return {axis, axis};
}

Grid Grid::meta() {
  const std::vector<double> axis{0.1, 0.5, 1, 1.5, 2, 2.5, 3};
  return {axis, axis};
}

std::string_view to_string(CvKind k) {
  switch (k) {
    case CvKind::KFold: return "kfold";
    case CvKind::Nested: return "nested";
    case CvKind::Loocv: return "loocv";
  }
  return "?";
}

void CvSpec::validate() const {
  if (kind == CvKind::KFold && k < 2) throw ConfigError("k-fold CV needs k >= 2");
  if (kind == CvKind::Nested && (k_outer < 2 || k_inner < 2)) throw ConfigError("nested CV needs k_outer, k_inner >= 2");
}

std::size_t GridLedger::total_fits() const {
  std::size_t n = 0;
  for (const auto& r : rounds) n += r.fits;
  return n;
}

std::string GridLedger::to_text() const {
  std::ostringstream os;
  os << name << '\n';
  os << "Round\tScope of C\tScope of gamma\tParameters\tEmotion\tP\tR\tF1\n";
  for (const auto& r : rounds) {
    for (std::size_t i = 0; i < kReportOrder.size(); ++i) {
      const Emotion e = kReportOrder[i];
      const auto m = precision_recall_f1(r.cm, e);
      if (i == 0)
        os << r.round << (r.kind == CvKind::Nested ? "*" : "") << '\t' << list(r.grid.c_values) << '\t'
           << list(r.grid.gamma_values) << '\t' << describe(r.best);
      else
        os << "\t\t\t";
      os << '\t' << short_name(e) << '\t' << fixed2(m.precision) << '\t' << fixed2(m.recall) << '\t' << fixed2(m.f1)
         << '\n';
    }
    os << "\t\t\t\tAccuracy: " << fixed2(r.best_accuracy) << " (fits " << r.fits << ")\n";
  }
  return os.str();
}

Folds kfold_split(std::size_t n, int k, std::uint64_t seed) {
  if (k < 1) throw ConfigError("kfold_split: k must be positive");
  if (static_cast<std::size_t>(k) > n)
    throw DataError("kfold_split: " + std::to_string(k) + " folds for " + std::to_string(n) + " rows");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  Folds folds(static_cast<std::size_t>(k));
  const std::size_t base = n / static_cast<std::size_t>(k), extra = n % static_cast<std::size_t>(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    folds[f].assign(idx.begin() + static_cast<std::ptrdiff_t>(pos), idx.begin() + static_cast<std::ptrdiff_t>(pos + len));
    std::sort(folds[f].begin(), folds[f].end());
    pos += len;
  }
  return folds;
}

Folds kfold_split(const Labels& y, int k, std::uint64_t seed) {
  if (k < 1) throw ConfigError("kfold_split: k must be positive");
  if (static_cast<std::size_t>(k) > y.size())
    throw DataError("kfold_split: " + std::to_string(k) + " folds for " + std::to_string(y.size()) + " rows");
  Rng rng(seed);
  Folds folds(static_cast<std::size_t>(k));
  std::size_t next = 0;
  for (auto e : kAllEmotions) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == e) members.push_back(i);
    rng.shuffle(members);
    for (auto i : members) {
      folds[next].push_back(i);
      next = (next + 1) % folds.size();
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

FitPredictFn svm_fit_predict(SmoOptions opt) {
  return [opt](const Matrix& xt, const Labels& yt, const Matrix& xe, const SvmHyper& h) {
    return svm_train_multiclass(xt, yt, h, opt).predict_rows(xe);
  };
}

CvOutcome cross_validate(const Matrix& x, const Labels& y, const Folds& folds, const SvmHyper& h,
                         const FitPredictFn& fit) {
  if (folds.empty()) throw ConfigError("cross_validate: no folds");
  CvOutcome out;
  double sum = 0.0;
  for (const auto& held : folds) {
    if (held.empty()) throw DataError("cross_validate: empty fold");
    const auto rest = complement(static_cast<std::size_t>(x.rows()), held);
    const Labels truth = take(y, held);
    const Labels pred = fit(take_rows(x, rest), take(y, rest), take_rows(x, held), h);
    if (pred.size() != truth.size())
      throw TrainingError("learner returned " + std::to_string(pred.size()) + " predictions for " +
                          std::to_string(truth.size()) + " rows");
    ++out.fits;
    sum += fraction_correct(truth, pred);
    out.cm += confusion_matrix(truth, pred);
  }
  out.accuracy = sum / static_cast<double>(folds.size());
  return out;
}

GridRound grid_search(const Grid& grid, const Matrix& x, const Labels& y, const Folds& folds,
                      const FitPredictFn& fit) {
  grid.validate();
  GridRound r;
  r.kind = CvKind::KFold;
  r.grid = grid;
  std::size_t best = 0;
  ConfusionMatrix best_cm;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const SvmHyper h = grid.at(i);
    CvOutcome o;
    try {
      o = cross_validate(x, y, folds, h, fit);
    } catch (const std::exception& e) {
      throw TrainingError("grid search failed at " + describe(h) + ": " + e.what());
    }
    r.fits += o.fits;
    r.scores.push_back({h, o.accuracy});
    if (i == 0 || o.accuracy > r.scores[best].accuracy ||
        (o.accuracy == r.scores[best].accuracy && simpler(h, r.scores[best].hyper))) {
      best = i;
      best_cm = o.cm;
    }
  }
  r.best = r.scores[best].hyper;
  r.best_accuracy = r.scores[best].accuracy;
  r.cm = best_cm;
  return r;
}

void ShrinkSpec::validate() const {
  if (!(span_fraction > 0.0)) throw ConfigError("refinement span must be positive");
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("refinement decay must lie in (0, 1]");
  if (points < 1 || points % 2 == 0) throw ConfigError("refinement points must be odd and positive");
  if (!(c_epsilon > 0.0) || !(gamma_epsilon > 0.0)) throw ConfigError("refinement epsilons must be positive");
}

std::optional<Grid> refine_grid(const GridLedger& ledger, const ShrinkSpec& shrink) {
  shrink.validate();
  if (ledger.rounds.empty()) throw ConfigError("refine_grid needs at least one completed round");
  const SvmHyper best = ledger.rounds.back().best;
  const double factor = shrink.span_fraction * std::pow(shrink.decay, static_cast<double>(ledger.rounds.size() - 1));

  auto axis = [&](double centre, double eps) -> std::optional<std::vector<double>> {
    const double half = factor * centre;
    if (2.0 * half < eps || shrink.points == 1) return std::nullopt;
    const int mid = shrink.points / 2;
    std::vector<double> v;
    for (int i = 0; i < shrink.points; ++i) {
      const double x = i == mid ? centre : centre + half * static_cast<double>(i - mid) / mid;
      if (x > 0.0) v.push_back(x);
    }
    return v;
  };
  const auto c = axis(best.c, shrink.c_epsilon);
  const auto g = axis(best.gamma, shrink.gamma_epsilon);
  if (!c && !g) return std::nullopt;
  Grid out{c.value_or(std::vector<double>{best.c}), g.value_or(std::vector<double>{best.gamma})};
  out.validate();
  return out;
}

NestedResult nested_cv(const Matrix& x, const Labels& y, const Grid& grid, int k_outer, int k_inner,
                       std::uint64_t seed, const FitPredictFn& fit) {
  grid.validate();
  if (k_outer < 2 || k_inner < 2) throw ConfigError("nested CV needs k_outer, k_inner >= 2");
  const auto n = static_cast<std::size_t>(x.rows());
  if (static_cast<std::size_t>(k_outer) * static_cast<std::size_t>(k_inner) > n)
    throw DataError("nested CV: " + std::to_string(k_outer) + "x" + std::to_string(k_inner) + " folds exceed " +
                    std::to_string(n) + " rows");
  NestedResult res;
  res.mean_inner_scores.assign(grid.size(), 0.0);
  const Folds outer = kfold_split(y, k_outer, derive_seed(seed, "outer"));
  for (std::size_t f = 0; f < outer.size(); ++f) {
    const auto rest = complement(n, outer[f]);
    const Matrix xr = take_rows(x, rest);
    const Labels yr = take(y, rest);
    const Folds inner = kfold_split(yr, k_inner, derive_seed(seed, "inner-" + std::to_string(f)));
    const GridRound r = grid_search(grid, xr, yr, inner, fit);
    res.fits += r.fits;
    for (std::size_t i = 0; i < grid.size(); ++i) res.mean_inner_scores[i] += r.scores[i].accuracy / outer.size();
    res.fold_best.push_back(r.best);
    res.inner_best_accuracy.push_back(r.best_accuracy);

    const Labels truth = take(y, outer[f]);
    Labels pred;
    try {
      pred = fit(xr, yr, take_rows(x, outer[f]), r.best);
    } catch (const std::exception& e) {
      throw TrainingError("nested CV outer fit failed at " + describe(r.best) + ": " + e.what());
    }
    if (pred.size() != truth.size()) throw TrainingError("nested CV outer fit returned the wrong prediction count");
    ++res.fits;
    res.outer_accuracy.push_back(fraction_correct(truth, pred));
    res.cm += confusion_matrix(truth, pred);
  }
  double s = 0.0;
  for (double a : res.outer_accuracy) s += a;
  res.mean_accuracy = s / static_cast<double>(res.outer_accuracy.size());

  // most frequent per-fold choice
  struct Tally {
    int count = 0;
    double best_inner = -1.0;
  };
  std::vector<std::pair<SvmHyper, Tally>> tallies;
  for (std::size_t f = 0; f < res.fold_best.size(); ++f) {
    auto it = std::find_if(tallies.begin(), tallies.end(), [&](const auto& t) { return t.first == res.fold_best[f]; });
    if (it == tallies.end()) {
      tallies.push_back({res.fold_best[f], {}});
      it = tallies.end() - 1;
    }
    ++it->second.count;
    it->second.best_inner = std::max(it->second.best_inner, res.inner_best_accuracy[f]);
  }
  const auto winner = std::min_element(tallies.begin(), tallies.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    if (a.second.best_inner != b.second.best_inner) return a.second.best_inner > b.second.best_inner;
    return simpler(a.first, b.first);
  });
  res.chosen = winner->first;
  return res;
}

CvOutcome loocv(const Matrix& x, const Labels& y, const SvmHyper& h, const FitPredictFn& fit) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n < 2) throw DataError("LOOCV needs at least 2 rows");
  Folds folds(n);
  for (std::size_t i = 0; i < n; ++i) folds[i] = {i};
  return cross_validate(x, y, folds, h, fit);
}

GridRound loocv_grid_search(const Grid& grid, const Matrix& x, const Labels& y, const FitPredictFn& fit) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n < 2) throw DataError("LOOCV needs at least 2 rows");
  Folds folds(n);
  for (std::size_t i = 0; i < n; ++i) folds[i] = {i};
  GridRound r = grid_search(grid, x, y, folds, fit);
  r.kind = CvKind::Loocv;
  return r;
}

namespace {

template <typename Evaluate>
GridLedger iterate_rounds(std::string name, const SearchSpec& spec, Evaluate&& evaluate) {
  if (spec.rounds < 1) throw ConfigError("search needs at least one round");
  GridLedger ledger;
  ledger.name = std::move(name);
  Grid grid = spec.initial;
  for (int r = 1; r <= spec.rounds; ++r) {
    GridRound round = evaluate(grid, r);
    round.round = r;
    ledger.rounds.push_back(std::move(round));
    if (r < spec.rounds) grid = refine_grid(ledger, spec.shrink).value_or(Grid::single(ledger.rounds.back().best));
  }
  return ledger;
}

}  // namespace

GridLedger run_kfold_search(const Matrix& x, const Labels& y, const SearchSpec& spec, const FitPredictFn& fit) {
  CvSpec cv = spec.cv;
  cv.kind = CvKind::KFold;
  cv.validate();
  const Folds folds = kfold_split(y, cv.k, derive_seed(cv.seed, "kfold"));
  return iterate_rounds("k-fold grid search", spec,
                        [&](const Grid& g, int) { return grid_search(g, x, y, folds, fit); });
}

GridLedger run_nested_search(const Matrix& x, const Labels& y, const SearchSpec& spec, const FitPredictFn& fit) {
  CvSpec cv = spec.cv;
  cv.kind = CvKind::Nested;
  cv.validate();
  return iterate_rounds("nested grid search", spec, [&](const Grid& g, int r) {
    const auto res = nested_cv(x, y, g, cv.k_outer, cv.k_inner, derive_seed(cv.seed, "nested-" + std::to_string(r)), fit);
    GridRound round;
    round.kind = CvKind::Nested;
    round.grid = g;
    for (std::size_t i = 0; i < g.size(); ++i) round.scores.push_back({g.at(i), res.mean_inner_scores[i]});
    round.best = res.chosen;
    round.best_accuracy = res.mean_accuracy;
    round.cm = res.cm;
    round.fits = res.fits;
    return round;
  });
}

}  // namespace afe
