#pragma once

#include <cstddef>
#include <functional>

namespace qvar {

/// Worker count: QVAR_THREADS if set, otherwise set_thread_count, else 1.
int thread_count();
void set_thread_count(int n);

/// Runs body(begin, end) over disjoint chunks of [0, n).
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body);

/// Sum of term(i) over [0, n). Terms are grouped into fixed-size blocks and
/// the block sums are combined by a pairwise tree, so the result does not
/// depend on the number of threads.
double deterministic_sum(std::size_t n, const std::function<double(std::size_t)>& term);

/// Pairwise (tree) sum of a vector.
double pairwise_sum(const double* x, std::size_t n);

}  // namespace qvar
