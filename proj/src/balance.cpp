#include "afe/balance.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace afe {

std::string BalanceReport::to_text() const {
  std::ostringstream os;
  os << "class\tbefore\tafter\tremoved\n";
  for (auto e : kAllEmotions) {
    const auto c = static_cast<std::size_t>(code(e));
    os << to_string(e) << '\t' << before[c] << '\t' << after[c] << '\t' << removed[c].size() << '\n';
  }
  return os.str();
}

BalancedSet near_miss(const Matrix& x, const Labels& y, int neighbors) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw DataError("near_miss: label count mismatch");
  if (neighbors < 1) throw ConfigError("near_miss needs at least one neighbour");
  BalancedSet out;
  out.report.before = class_counts(y);
  for (auto e : kAllEmotions)
    if (out.report.before[static_cast<std::size_t>(code(e))] == 0)
      throw DataError("near_miss: class '" + std::string(to_string(e)) + "' has no samples");

  const auto& before = out.report.before;
  const std::size_t minority_class =
      static_cast<std::size_t>(std::min_element(before.begin(), before.end()) - before.begin());
  const std::size_t target = before[minority_class];

  std::vector<std::size_t> minority_rows;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (static_cast<std::size_t>(code(y[i])) == minority_class) minority_rows.push_back(i);
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(neighbors), minority_rows.size());

  std::vector<bool> removed(y.size(), false);
  for (std::size_t c = 0; c < kClassCount; ++c) {
    if (before[c] <= target) continue;
    std::vector<std::pair<double, std::size_t>> ranked;
    std::vector<double> dist(minority_rows.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (static_cast<std::size_t>(code(y[i])) != c) continue;
      for (std::size_t m = 0; m < minority_rows.size(); ++m)
        dist[m] = (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(minority_rows[m]))).norm();
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
      const double mean = std::accumulate(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), 0.0) /
                          static_cast<double>(k);
      ranked.emplace_back(mean, i);
    }
    std::sort(ranked.begin(), ranked.end());
    const std::size_t drop = before[c] - target;
    for (std::size_t r = 0; r < drop; ++r) {
      removed[ranked[r].second] = true;
      out.report.removed[c].push_back(ranked[r].second);
    }
  }

  for (std::size_t i = 0; i < y.size(); ++i)
    if (!removed[i]) out.rows.push_back(i);
  out.x = take_rows(x, out.rows);
  out.y = take(y, out.rows);
  out.report.after = class_counts(out.y);
  return out;
}

}  // namespace afe
