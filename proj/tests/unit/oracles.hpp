#pragma once
// Independent reference computations shared by the unit tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

// G by enumerating every pairing with std::next_permutation.
inline double brute_g(const std::vector<double>& s, const std::vector<double>& t, int q, int n) {
  std::vector<int> p(q);
  std::iota(p.begin(), p.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (int l = 0; l < q; ++l)
      for (int a = 0; a < n; ++a) {
        const double d = s[l * n + a] - t[p[l] * n + a];
        c += d * d;
      }
    best = std::min(best, c);
  } while (std::next_permutation(p.begin(), p.end()));
  return std::sqrt(best);
}

inline std::vector<double> random_values(std::mt19937_64& rng, int count, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(count);
  for (double& x : v) x = u(rng);
  return v;
}

// Composite Gauss-Legendre (3 points) on [a, b] with k panels.
template <class F>
double integrate(F f, double a, double b, int k = 2000) {
  static const double xs[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static const double ws[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const double w = (b - a) / k;
  double s = 0.0;
  for (int i = 0; i < k; ++i) {
    const double c = a + (i + 0.5) * w;
    for (int j = 0; j < 3; ++j) s += ws[j] * f(c + 0.5 * w * xs[j]);
  }
  return 0.5 * w * s;
}

inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t k = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < k; ++i) mx += std::log(x[i]), my += std::log(y[i]);
  mx /= k;
  my /= k;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < k; ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

}  // namespace oracle
