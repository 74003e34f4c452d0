#include "qvar/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace qvar {

namespace {
std::atomic<int> g_threads{0};
constexpr std::size_t kBlock = 1024;
}  // namespace

int thread_count() {
  if (const char* env = std::getenv("QVAR_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const int v = g_threads.load();
  return v > 0 ? v : 1;
}

void set_thread_count(int n) { g_threads.store(n); }

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  for (auto& t : pool) t.join();
}

double pairwise_sum(const double* x, std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

double deterministic_sum(std::size_t n, const std::function<double(std::size_t)>& term) {
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(blocks, 0.0);
  parallel_for(blocks, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      const std::size_t lo = b * kBlock;
      const std::size_t hi = std::min(n, lo + kBlock);
      double s = 0.0;
      for (std::size_t i = lo; i < hi; ++i) s += term(i);
      partial[b] = s;
    }
  });
  return pairwise_sum(partial.data(), partial.size());
}

}  // namespace qvar
