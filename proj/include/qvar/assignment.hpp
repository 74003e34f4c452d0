#pragma once

#include <span>
#include <vector>

namespace qvar {

/// Minimum-cost perfect assignment on a dense k x k cost matrix (row-major).
/// Returns the total cost; assignment[row] receives the chosen column.
double hungarian_assign(std::span<const double> cost, int k,
                        std::span<int> assignment);

/// All permutations of {0..k-1} in lexicographic order, cached per k.
const std::vector<std::vector<int>>& permutations(int k);

}  // namespace qvar
