#include "afe/select.hpp"

#include "afe/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace afe {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Matrix columns(const Matrix& x, const std::vector<std::size_t>& cols) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(cols[j]));
  return out;
}

std::vector<double> sorted_copy(const Vector& v) {
  std::vector<double> s(v.data(), v.data() + v.size());
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

std::string_view to_string(FilterStage s) {
  switch (s) {
    case FilterStage::Kept: return "kept";
    case FilterStage::Variance: return "variance";
    case FilterStage::ChiSquare: return "chi2";
    case FilterStage::KdeDrift: return "kde";
    case FilterStage::Spearman: return "spearman";
  }
  return "?";
}

void FilterBankConfig::validate() const {
  if (variance_threshold < 0.0) throw ConfigError("variance threshold must be non-negative");
  if (chi2_k < 1) throw ConfigError("chi2 k must be at least 1");
  if (!(kde_overlap >= 0.0 && kde_overlap <= 1.0)) throw ConfigError("KDE overlap threshold must lie in [0, 1]");
  if (kde_grid < 2) throw ConfigError("KDE grid needs at least 2 points");
  if (!(spearman_threshold >= 0.0 && spearman_threshold <= 1.0))
    throw ConfigError("Spearman threshold must lie in [0, 1]");
}

std::size_t SelectionMask::kept_count() const {
  return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
}

std::vector<std::size_t> SelectionMask::kept_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < keep.size(); ++j)
    if (keep[j]) idx.push_back(j);
  return idx;
}

Matrix SelectionMask::apply(const Matrix& x) const {
  if (x.cols() != dimension())
    throw DataError("selection mask expects " + std::to_string(dimension()) + " features, got " +
                    std::to_string(x.cols()));
  return columns(x, kept_indices());
}

Vector SelectionMask::apply(const Vector& x) const {
  if (x.size() != dimension())
    throw DataError("selection mask expects " + std::to_string(dimension()) + " features, got " +
                    std::to_string(x.size()));
  const auto idx = kept_indices();
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out(static_cast<Eigen::Index>(j)) = x(static_cast<Eigen::Index>(idx[j]));
  return out;
}

Vector population_variance(const Matrix& x) {
  if (x.rows() == 0) throw DataError("variance of an empty matrix");
  const Eigen::RowVectorXd mean = x.colwise().mean();
  return ((x.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(x.rows()))
      .transpose();
}

std::vector<bool> variance_filter(const Matrix& x, double threshold) {
  const Vector v = population_variance(x);
  std::vector<bool> keep(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) keep[static_cast<std::size_t>(j)] = v(j) >= threshold;
  return keep;
}

Vector chi2_scores(const Matrix& x, const Labels& y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw DataError("chi2: label count mismatch");
  if (x.size() > 0 && x.minCoeff() < 0.0) throw DataError("chi2 requires non-negative features");
  const auto counts = class_counts(y);
  const double n = static_cast<double>(y.size());
  Vector scores(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    std::array<double, kClassCount> observed{};
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      observed[static_cast<std::size_t>(code(y[static_cast<std::size_t>(i)]))] += x(i, j);
    const double total = observed[0] + observed[1] + observed[2];
    double chi = 0.0;
    for (std::size_t c = 0; c < kClassCount; ++c) {
      const double expected = static_cast<double>(counts[c]) / n * total;
      if (expected > 0.0) chi += (observed[c] - expected) * (observed[c] - expected) / expected;
    }
    scores(j) = chi;
  }
  return scores;
}

std::vector<bool> chi2_filter(const Matrix& x, const Labels& y, int k) {
  if (k < 1) throw ConfigError("chi2 k must be at least 1");
  const Vector s = chi2_scores(x, y);
  std::vector<std::size_t> order(static_cast<std::size_t>(x.cols()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return s(static_cast<Eigen::Index>(a)) > s(static_cast<Eigen::Index>(b));
  });
  std::vector<bool> keep(order.size(), false);
  for (std::size_t r = 0; r < order.size() && r < static_cast<std::size_t>(k); ++r) keep[order[r]] = true;
  return keep;
}

double silverman_bandwidth(const Vector& samples) {
  const auto n = samples.size();
  if (n < 2) return 0.0;
  const double mean = samples.mean();
  const double sd = std::sqrt((samples.array() - mean).square().sum() / static_cast<double>(n - 1));
  const auto sorted = sorted_copy(samples);
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

double kde_estimate(const Vector& samples, double h, double x) {
  if (!(h > 0.0)) throw DataError("KDE bandwidth must be positive");
  if (samples.size() == 0) throw DataError("KDE of an empty sample");
  const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  return norm * ((samples.array() - x) / h).square().unaryExpr([](double u) { return std::exp(-0.5 * u); }).sum();
}

double kde_overlap(const Vector& a, const Vector& b, int grid_points) {
  if (a.size() == 0 || b.size() == 0) throw DataError("KDE overlap of an empty sample");
  double ha = silverman_bandwidth(a);
  double hb = silverman_bandwidth(b);
  const double lo = std::min(a.minCoeff(), b.minCoeff());
  const double hi = std::max(a.maxCoeff(), b.maxCoeff());
  if (!(ha > 0.0) && !(hb > 0.0)) return hi == lo ? 1.0 : 0.0;
  // a constant side borrows the other side's bandwidth
  if (!(ha > 0.0)) ha = hb;
  if (!(hb > 0.0)) hb = ha;

  const double pad = 3.0 * std::max(ha, hb);
  const double g_lo = lo - pad, g_hi = hi + pad;
  const double dx = (g_hi - g_lo) / (grid_points - 1);
  Vector fa(grid_points), fb(grid_points);
  for (int g = 0; g < grid_points; ++g) {
    const double x = g_lo + dx * g;
    fa(g) = kde_estimate(a, ha, x);
    fb(g) = kde_estimate(b, hb, x);
  }
  // normalise on the grid so identical samples overlap exactly
  fa /= fa.sum() * dx;
  fb /= fb.sum() * dx;
  return std::clamp(fa.cwiseMin(fb).sum() * dx, 0.0, 1.0);
}

std::vector<bool> kde_overlap_filter(const Matrix& x_train, const Matrix& x_test, double threshold,
                                     int grid_points) {
  if (x_train.cols() != x_test.cols()) throw DataError("KDE filter: train/test width mismatch");
  std::vector<bool> keep(static_cast<std::size_t>(x_train.cols()));
  for (Eigen::Index j = 0; j < x_train.cols(); ++j)
    keep[static_cast<std::size_t>(j)] = kde_overlap(x_train.col(j), x_test.col(j), grid_points) >= threshold;
  return keep;
}

Vector average_ranks(const Vector& v) {
  const auto n = static_cast<std::size_t>(v.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return v(static_cast<Eigen::Index>(a)) < v(static_cast<Eigen::Index>(b));
  });
  Vector ranks(v.size());
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v(static_cast<Eigen::Index>(order[j + 1])) == v(static_cast<Eigen::Index>(order[i]))) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks(static_cast<Eigen::Index>(order[t])) = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DataError("spearman: length mismatch");
  if (a.size() < 2) return 0.0;
  const Vector ra = average_ranks(a).array() - (static_cast<double>(a.size()) + 1.0) / 2.0;
  const Vector rb = average_ranks(b).array() - (static_cast<double>(b.size()) + 1.0) / 2.0;
  const double den = std::sqrt(ra.squaredNorm() * rb.squaredNorm());
  return den > 0.0 ? ra.dot(rb) / den : 0.0;
}

Vector spearman_scores(const Matrix& x, const Labels& y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw DataError("spearman: label count mismatch");
  Vector codes(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) codes(i) = code(y[static_cast<std::size_t>(i)]);
  Vector out(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) out(j) = spearman(x.col(j), codes);
  return out;
}

std::vector<bool> spearman_filter(const Matrix& x, const Labels& y, double threshold) {
  const Vector r = spearman_scores(x, y);
  std::vector<bool> keep(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) keep[static_cast<std::size_t>(j)] = std::abs(r(j)) >= threshold;
  return keep;
}

SelectionMask run_filter_bank(const Matrix& x_train, const Labels& y_train, const Matrix& x_test,
                              const FilterBankConfig& cfg) {
  cfg.validate();
  if (x_train.cols() != x_test.cols()) throw DataError("filter bank: train/test width mismatch");
  if (x_train.rows() == 0) throw DataError("filter bank: empty training matrix");
  const auto d = static_cast<std::size_t>(x_train.cols());

  SelectionMask m;
  m.keep.assign(d, true);
  m.dropped_by.assign(d, FilterStage::Kept);
  m.variance = Vector::Constant(static_cast<Eigen::Index>(d), kNaN);
  m.chi2 = m.variance;
  m.overlap = m.variance;
  m.spearman = m.variance;

  std::vector<std::size_t> alive(d);
  std::iota(alive.begin(), alive.end(), 0);
  m.survivors[0] = d;

  auto run_stage = [&](FilterStage stage, Vector& score_out, const Vector& scores,
                       const std::vector<bool>& stage_keep) {
    std::vector<std::size_t> next;
    for (std::size_t j = 0; j < alive.size(); ++j) {
      score_out(static_cast<Eigen::Index>(alive[j])) = scores(static_cast<Eigen::Index>(j));
      if (stage_keep[j]) {
        next.push_back(alive[j]);
      } else {
        m.keep[alive[j]] = false;
        m.dropped_by[alive[j]] = stage;
      }
    }
    alive = std::move(next);
  };

  {
    const Matrix xs = columns(x_train, alive);
    run_stage(FilterStage::Variance, m.variance, population_variance(xs),
              variance_filter(xs, cfg.variance_threshold));
    m.survivors[1] = alive.size();
  }
  {
    const Matrix xs = columns(x_train, alive);
    run_stage(FilterStage::ChiSquare, m.chi2, chi2_scores(xs, y_train), chi2_filter(xs, y_train, cfg.chi2_k));
    m.survivors[2] = alive.size();
  }
  {
    const Matrix xs = columns(x_train, alive);
    const Matrix ts = columns(x_test, alive);
    Vector overlap(xs.cols());
    std::vector<bool> keep(static_cast<std::size_t>(xs.cols()));
    for (Eigen::Index j = 0; j < xs.cols(); ++j) {
      overlap(j) = kde_overlap(xs.col(j), ts.col(j), cfg.kde_grid);
      keep[static_cast<std::size_t>(j)] = overlap(j) >= cfg.kde_overlap;
    }
    run_stage(FilterStage::KdeDrift, m.overlap, overlap, keep);
    m.survivors[3] = alive.size();
  }
  {
    const Matrix xs = columns(x_train, alive);
    run_stage(FilterStage::Spearman, m.spearman, spearman_scores(xs, y_train),
              spearman_filter(xs, y_train, cfg.spearman_threshold));
    m.survivors[4] = alive.size();
  }
  if (alive.empty())
    throw TrainingError("feature selection kept no features; relax the filter thresholds");
  return m;
}

std::string mask_report(const SelectionMask& m, const std::vector<std::string>& names) {
  std::ostringstream os;
  os << "# survivors: input " << m.survivors[0] << ", variance " << m.survivors[1] << ", chi2 "
     << m.survivors[2] << ", kde " << m.survivors[3] << ", spearman " << m.survivors[4] << '\n';
  os << "feature\tvariance\tchi2\toverlap\tspearman\tstatus\n";
  for (std::size_t j = 0; j < m.keep.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    os << (j < names.size() ? names[j] : "f" + std::to_string(j)) << '\t' << m.variance(jj) << '\t'
       << m.chi2(jj) << '\t' << m.overlap(jj) << '\t' << m.spearman(jj) << '\t'
       << (m.keep[j] ? std::string("kept") : "dropped:" + std::string(to_string(m.dropped_by[j]))) << '\n';
  }
  return os.str();
}

std::uint64_t state_hash(const SelectionMask& m, std::uint64_t h) {
  for (std::size_t j = 0; j < m.keep.size(); ++j) {
    const unsigned char b[2] = {static_cast<unsigned char>(m.keep[j]), static_cast<unsigned char>(m.dropped_by[j])};
    h = fnv1a(b, h);
  }
  return h;
}

}  // namespace afe
