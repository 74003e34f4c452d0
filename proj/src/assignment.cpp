#include "qvar/assignment.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>

namespace qvar {

double hungarian_assign(std::span<const double> cost, int k,
                        std::span<int> assignment) {
  // Shortest augmenting path with potentials, 1-based internal indexing.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(k + 1, 0.0), v(k + 1, 0.0), minv(k + 1);
  std::vector<int> p(k + 1, 0), way(k + 1, 0);
  std::vector<char> used(k + 1);
  for (int i = 1; i <= k; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= k; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * k + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= k; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (int j = 1; j <= k; ++j) {
    assignment[p[j] - 1] = j - 1;
  }
  for (int i = 0; i < k; ++i) total += cost[i * k + assignment[i]];
  return total;
}

const std::vector<std::vector<int>>& permutations(int k) {
  static std::mutex mu;
  static std::map<int, std::vector<std::vector<int>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(k);
  if (it != cache.end()) return it->second;
  std::vector<std::vector<int>> all;
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    all.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return cache.emplace(k, std::move(all)).first->second;
}

}  // namespace qvar
