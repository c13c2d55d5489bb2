#ifndef AFE_BALANCE_HPP
#define AFE_BALANCE_HPP

#include "afe/core.hpp"

#include <string>

namespace afe {

struct BalanceReport {
  std::array<std::size_t, kClassCount> before{};
  std::array<std::size_t, kClassCount> after{};
  /// Removed row indices (into the input matrix) per class, in removal order.
  std::array<std::vector<std::size_t>, kClassCount> removed;

  std::string to_text() const;
};

struct BalancedSet {
  Matrix x;
  Labels y;
  /// Input row index of every output row, ascending.
  std::vector<std::size_t> rows;
  BalanceReport report;
};

/// NearMiss undersampling. Every class is cut down to the minority count; in
/// each larger class the rows with the smallest mean Euclidean distance to
/// their `neighbors` nearest minority rows are removed first (ties: lower row
/// index first).
BalancedSet near_miss(const Matrix& x, const Labels& y, int neighbors = 3);

}  // namespace afe

#endif  // AFE_BALANCE_HPP
