#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qvar/aq.hpp"
#include "qvar/assignment.hpp"

using namespace qvar;

namespace {

QPoint pt(int q, int n, std::vector<double> v) { return QPoint(q, n, std::move(v)); }

SplitScheme two_centers() {
  SplitScheme s;
  s.centers = {{0.0}, {10.0}};
  s.multiplicities = {1, 1};
  s.scale = 1.0;
  return s;
}

}  // namespace

TEST_CASE("matching metric on small examples") {
  const double p[2] = {1.0, 0.0};
  CHECK(g_dist(QPoint::repeated(2, p), QPoint::repeated(2, p)) == 0.0);
  CHECK(g_dist(pt(2, 1, {0, 2}), pt(2, 1, {1, 3})) == doctest::Approx(std::sqrt(2.0)));
  // Pairings are unordered: swapping stored order changes nothing.
  CHECK(g_dist(pt(2, 1, {2, 0}), pt(2, 1, {1, 3})) == doctest::Approx(std::sqrt(2.0)));
  const double a = 0.75;
  CHECK(g_dist(pt(2, 1, {0, 0}), pt(2, 1, {-a, a})) == doctest::Approx(a * std::sqrt(2.0)));
  CHECK(g_norm(pt(3, 2, {3, 4, 0, 0, 0, 0})) == doctest::Approx(5.0));
  CHECK_THROWS_AS(g_dist(pt(2, 1, {0, 1}), pt(2, 2, {0, 1, 2, 3})), DimensionError);
  CHECK_THROWS_AS(g_dist(pt(2, 1, {0, 1}), pt(3, 1, {0, 1, 2})), DimensionError);
  CHECK_THROWS_AS(QPoint(2, 2, {1.0, 2.0}), DimensionError);
}

TEST_CASE("matching metric agrees with enumeration of all pairings") {
  std::mt19937_64 rng(7);
  for (int q = 1; q <= 7; ++q)
    for (int n = 1; n <= 3; ++n)
      for (int trial = 0; trial < (q == 7 ? 5 : 40); ++trial) {
        const auto s = oracle::random_values(rng, q * n, 2.0);
        const auto t = oracle::random_values(rng, q * n, 2.0);
        const double want = oracle::brute_g(s, t, q, n);
        CHECK(g_dist(pt(q, n, s), pt(q, n, t)) == doctest::Approx(want).epsilon(1e-12));
      }
}

TEST_CASE("hungarian assignment matches enumeration") {
  std::mt19937_64 rng(11);
  for (int k = 2; k <= 7; ++k) {
    const auto cost = oracle::random_values(rng, k * k, 1.0);
    std::vector<int> asg(k);
    const double got = hungarian_assign(cost, k, asg);
    double best = 1e300;
    for (const auto& p : permutations(k)) {
      double c = 0.0;
      for (int i = 0; i < k; ++i) c += cost[i * k + p[i]];
      best = std::min(best, c);
    }
    CHECK(got == doctest::Approx(best).epsilon(1e-12));
    double c = 0.0;
    for (int i = 0; i < k; ++i) c += cost[i * k + asg[i]];
    CHECK(c == doctest::Approx(got).epsilon(1e-12));
  }
}

TEST_CASE("metric axioms on random inputs") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const int q = 1 + trial % 5, n = 1 + trial % 3;
    const auto s = pt(q, n, oracle::random_values(rng, q * n, 1.0));
    const auto t = pt(q, n, oracle::random_values(rng, q * n, 1.0));
    const auto u = pt(q, n, oracle::random_values(rng, q * n, 1.0));
    CHECK(g_dist(s, t) == g_dist(t, s));
    CHECK(g_dist(s, s) == 0.0);
    CHECK(g_dist(s, u) <= g_dist(s, t) + g_dist(t, u) + 1e-12);
    std::vector<double> v(n, 0.37);
    CHECK(g_dist(ominus(s, v), ominus(t, v)) == doctest::Approx(g_dist(s, t)).epsilon(1e-12));
  }
}

TEST_CASE("mean, shifts, separation and diameter") {
  const auto t = pt(3, 1, {1, 2, 6});
  CHECK(eta(t)[0] == doctest::Approx(3.0));
  CHECK(mean_free(t).same_multiset(pt(3, 1, {-2, -1, 3})));
  const double v = 1.0;
  CHECK(ominus(t, std::span<const double>(&v, 1)).same_multiset(pt(3, 1, {0, 1, 5})));
  CHECK(separation(t) == doctest::Approx(1.0));
  CHECK(diameter(t) == doctest::Approx(5.0));
  const double p[2] = {0.3, -0.2};
  CHECK(separation(QPoint::repeated(2, p)) == 0.0);
  CHECK(diameter(QPoint::repeated(2, p)) == 0.0);
  CHECK(separation(pt(3, 1, {0, 0, 4})) == doctest::Approx(4.0));
}

TEST_CASE("split retraction") {
  const auto s = two_centers();
  auto parts = split_retraction(pt(2, 1, {9.8, 0.5}), s);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0].value(0)[0] == 0.5);
  CHECK(parts[1].value(0)[0] == 9.8);
  parts = split_retraction(s.anchor(), s);
  CHECK(parts[0].value(0)[0] == 0.0);
  CHECK(parts[1].value(0)[0] == 10.0);

  // Far parts are shrunk onto the ball of radius 2s about Q_j[[p_j]].
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto t = pt(2, 1, oracle::random_values(rng, 2, 40.0));
    const auto ps = split_retraction(t, s);
    for (std::size_t j = 0; j < ps.size(); ++j) {
      const auto center = QPoint::repeated(1, s.centers[j]);
      CHECK(g_dist(ps[j], center) <= 2.0 * s.scale + 1e-12);
    }
  }

  // Near the anchor the parts resum to the input.
  for (int trial = 0; trial < 200; ++trial) {
    auto t = s.anchor();
    const auto d = oracle::random_values(rng, 2, 0.7);
    t.flat()[0] += d[0];
    t.flat()[1] += d[1];
    CHECK(concat(split_retraction(t, s)).same_multiset(t));
  }

  SplitScheme bad = s;
  bad.multiplicities = {1, 2};
  CHECK_THROWS_AS(split_retraction(pt(2, 1, {0, 10}), bad), SchemeError);
  bad = s;
  bad.centers = {{0.0}, {3.0}};
  CHECK_THROWS_AS(split_retraction(pt(2, 1, {0, 3}), bad), SchemeError);
}

TEST_CASE("projection and recovery") {
  SplitScheme one;
  one.centers = {{0.0}};
  one.multiplicities = {2};
  const auto lifted = projection_map(pt(2, 1, {0.25, -0.5}), one);
  CHECK(lifted.same_multiset(pt(2, 2, {1, 0.25, 1, -0.5})));

  // Partition of unity: weights sum to 1 on [1, N] and vanish off (j - 2/3, j + 2/3).
  for (double y = 1.0; y <= 4.0; y += 0.01) {
    double s = 0.0;
    for (int j = 1; j <= 4; ++j) s += partition_weight(j, y);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK(partition_weight(2, 2.0 + 2.0 / 3.0 + 1e-9) == 0.0);
  CHECK(partition_weight(2, 2.3) == 1.0);

  SplitScheme s;
  s.centers = {{0.0, 0.0}, {10.0, 1.0}, {-3.0, 9.0}};
  s.multiplicities = {2, 1, 1};
  s.scale = 1.0;
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    auto t = s.anchor();
    for (double& x : t.flat()) x += std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
    const auto y = projection_map(t, s);
    CHECK(g_dist(recovery_map(y, s), t) <= 1e-12);
    CHECK(g_dist(projection_map(recovery_map(y, s), s), y) <= 1e-12);
  }
  CHECK_THROWS_AS(recovery_map(pt(1, 1, {1.0}), s), DimensionError);
}
