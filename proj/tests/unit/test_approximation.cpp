#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "qvar/approximation.hpp"
#include "qvar/catalog.hpp"
#include "qvar/testfields.hpp"

using namespace qvar;

namespace {

const double kOrigin[3] = {0.0, 0.0, 0.0};

QMap planes(double a, double b, int q) {
  QMap f;
  f.m = 2;
  f.q = q;
  f.n = 1;
  f.branch_consistent = true;
  f.eval = [a, b, q](std::span<const double> x, std::span<double> v) {
    for (int l = 0; l < q; ++l) v[l] = a * x[0] + b * x[1] + l;
  };
  f.jacobian = [a, b, q](std::span<const double>, std::span<double> j) {
    for (int l = 0; l < q; ++l) {
      j[2 * l] = a;
      j[2 * l + 1] = b;
    }
  };
  return f;
}

QField zfield(double h) {
  return sample(make_catalog("branch_sqrt").map, Grid::centered_box(2, 1.0, h));
}

// Direct maximal function: every lattice ball that fits and contains the node.
// Node (x, y) has index x * ny + y.
std::vector<double> brute_maximal(int nx, int ny, const std::vector<double>& w, int rho_max) {
  std::vector<double> M(w);
  for (int rho = 1; rho <= rho_max; ++rho)
    for (int cy = rho; cy + rho < ny; ++cy)
      for (int cx = rho; cx + rho < nx; ++cx) {
        double s = 0.0;
        int cnt = 0;
        for (int y = cy - rho; y <= cy + rho; ++y)
          for (int x = cx - rho; x <= cx + rho; ++x)
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= rho * rho) s += w[x * ny + y], ++cnt;
        for (int y = cy - rho; y <= cy + rho; ++y)
          for (int x = cx - rho; x <= cx + rho; ++x)
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= rho * rho)
              M[x * ny + y] = std::max(M[x * ny + y], s / cnt);
      }
  return M;
}

}  // namespace

TEST_CASE("cylindrical excess") {
  const QField flat = sample(planes(0.0, 0.0, 2), Grid::centered_box(2, 1.0, 1.0 / 32));
  const auto e0 = cyl_excess(flat, std::span(kOrigin, 2), 0.5);
  CHECK(e0.E == 0.0);
  CHECK(e0.height == doctest::Approx(1.0));

  QMap line;
  line.m = 1;
  const double s = 0.7;
  line.eval = [s](std::span<const double> x, std::span<double> v) { v[0] = s * x[0]; };
  const QField l = sample(line, Grid::centered_box(1, 1.0, 1.0 / 64));
  // (omega_1 r)^{-1} 2r sqrt(1+s^2) s^2 / (1+s^2).
  CHECK(cyl_excess(l, std::span(kOrigin, 1), 0.5).E == doctest::Approx(s * s / std::sqrt(1 + s * s)).epsilon(1e-12));

  const QField z = zfield(1.0 / 64);
  std::vector<double> lam, ex;
  for (double t : {0.04, 0.02, 0.01}) {
    lam.push_back(t);
    ex.push_back(cyl_excess(z.scaled(t), std::span(kOrigin, 2), 0.5).E);
  }
  CHECK(oracle::slope(lam, ex) == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("point cloud diameter") {
  CHECK(point_cloud_diameter({0, 0, 3, 4, 1, 1, -1, 0.5}, 2) == doctest::Approx(std::sqrt(28.25)));
  CHECK(point_cloud_diameter({2, -1, 0.5}, 1) == doctest::Approx(3.0));
}

TEST_CASE("maximal function") {
  const Grid g({0.0, 0.0}, 0.1, {15, 13});
  std::vector<double> c(g.size(), 2.5);
  for (double v : maximal_function(g, c, 5)) CHECK(v == doctest::Approx(2.5));

  std::mt19937_64 rng(4);
  auto w = oracle::random_values(rng, static_cast<int>(g.size()), 1.0);
  for (double& v : w) v = std::abs(v);
  w[7 * 15 + 7] = 40.0;
  const auto got = maximal_function(g, w, 5);
  const auto want = brute_maximal(15, 13, w, 5);
  for (std::size_t k = 0; k < w.size(); ++k) {
    CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-12));
    CHECK(got[k] >= w[k]);
  }
}

TEST_CASE("Lipschitz truncation") {
  const Grid g = Grid::centered_box(2, 0.5, 1.0 / 64);
  TruncationOptions opt;
  opt.r = 0.25;
  opt.eps = 1.0;

  // |Df|^2 = 0.01 <= E^{1/2}: every ball node is good and nothing moves.
  const QField f = sample(planes(0.1, 0.0, 2), g);
  const auto res = lipschitz_truncate(f, 0.25, opt);
  CHECK(res.stats.bad_nodes == 0);
  CHECK(res.fhat.values() == f.values());
  CHECK(res.stats.l2_gap == 0.0);

  // A spike of fixed slope is cut out, and the cut shrinks with its support.
  double prev = 1e9;
  for (double width : {0.08, 0.04, 0.02}) {
    QMap sp;
    sp.m = 2;
    sp.eval = [width](std::span<const double> x, std::span<double> v) {
      const double c[2] = {0.05, 0.0};
      v[0] = 0.1 * x[0] + width * radial_bump(x, c, width, {});
    };
    const auto r = lipschitz_truncate(sample(sp, g), 0.25, opt);
    CHECK(r.stats.bad_nodes > 0);
    CHECK_FALSE(r.K[g.nearest(std::vector<double>{0.05 + width / 2, 0.0})]);
    CHECK(r.stats.bad_measure < prev);
    prev = r.stats.bad_measure;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (r.K[k]) CHECK(g_dist(r.fhat.at(k), sample(sp, g).at(k)) == 0.0);
  }

  TruncationOptions tight = opt;
  tight.eps = 1e-6;
  CHECK_THROWS_AS(lipschitz_truncate(f, 0.25, tight), ExcessTooLarge);
  CHECK_THROWS_AS(lipschitz_truncate(f, 0.6, opt), UsageError);
}

TEST_CASE("reverse Holder ratio") {
  const QField c = sample(planes(0.6, 0.8, 1), Grid::centered_box(2, 1.0, 1.0 / 64));
  const auto fam = ball_family(std::span(kOrigin, 2), 20, 0.2, 0.3);
  CHECK(reverse_holder_check(c, 1.25, fam) == doctest::Approx(1.0).epsilon(1e-9));

  // |Df|^2 = 9|z|: mean over B_r of (9|z|)^p against mean over B_2r of 9|z|.
  const double p = 1.25, r = 0.3;
  auto mean_pow = [](double R, double pw) {
    return oracle::integrate([&](double s) { return std::pow(9.0 * s, pw) * 2.0 * s; }, 0.0, R) / (R * R);
  };
  const double want = std::pow(mean_pow(r, p), 1.0 / p) / mean_pow(2 * r, 1.0);
  const std::vector<Ball> one = {{{0.0, 0.0}, r}};
  CHECK(reverse_holder_check(zfield(1.0 / 128), p, one) == doctest::Approx(want).epsilon(0.02));

  const QField zero = sample(planes(0.0, 0.0, 1), c.grid());
  CHECK(reverse_holder_check(zero, p, one) == 0.0);
  CHECK_THROWS_AS(reverse_holder_check(c, p, {}), EstimationError);
}

TEST_CASE("key estimate") {
  const QField c = sample(planes(0.6, 0.8, 2), Grid::centered_box(2, 1.0, 1.0 / 64));
  const auto fam = ball_family(std::span(kOrigin, 2), 20, 0.05, 0.04);
  CHECK(std::abs(key_estimate_check(c, fam, 1.0).worst_slack) <= 1e-12);
  CHECK(key_estimate_check(c, fam, 1.0).M == 10.0);
  CHECK(key_estimate_check(zfield(1.0 / 128), fam, 1.0).worst_slack >= -1e-3);
}

TEST_CASE("mass ratio") {
  const double p[3] = {0.0, 0.0, 0.0};
  CHECK(mass_ratio(planes(0.0, 0.0, 1), p, 0.5) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(mass_ratio(planes(0.3, -0.4, 1), p, 0.5) == doctest::Approx(1.0).epsilon(1e-6));
  QMap dbl = planes(0.0, 0.0, 2);
  dbl.eval = [](std::span<const double>, std::span<double> v) { v[0] = v[1] = 0.0; };
  CHECK(mass_ratio(dbl, p, 0.5) == doctest::Approx(2.0).epsilon(1e-9));
  const auto z = make_catalog("branch_sqrt").map;
  const double p4[4] = {0.0, 0.0, 0.0, 0.0};
  CHECK(density_estimate(z, p4, {0.01, 0.02, 0.04}) == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("persistence of collapsed values") {
  const QField z = zfield(1.0 / 128);
  const std::size_t y0 = z.grid().nearest(std::vector<double>{0.0, 0.0});
  const auto rep = persistence_check(z, y0, {0.05, 0.1, 0.2});
  // sup_{B_r} G(f, 2[[0]])^2 = 2 r^3.
  CHECK(rep.lhs_slope == doctest::Approx(3.0).epsilon(0.05));
  for (std::size_t k = 0; k < rep.radii.size(); ++k)
    CHECK(rep.lhs[k] == doctest::Approx(2.0 * std::pow(rep.radii[k], 3.0)).epsilon(0.05));
  CHECK(rep.C_spread <= 1.5);

  const QField c = sample(planes(0.0, 0.0, 2), z.grid());
  QField flat(c.grid(), 2, 1, std::vector<double>(2 * c.size(), 0.5));
  const auto rc = persistence_check(flat, y0, {0.05, 0.1});
  for (double v : rc.lhs) CHECK(v == 0.0);
  CHECK_THROWS_AS(persistence_check(c, y0, {0.05, 0.1}), PreconditionError);
}

TEST_CASE("sup against L2 mean") {
  const QField z = zfield(1.0 / 128);
  // sup_{B_R} 2|z|^3 over mean_{B_2R} 2|z|^3 = 2 R^3 / (6.4 R^3).
  CHECK(linfty_l2_check(z, std::span(kOrigin, 2), 0.25) == doctest::Approx(2.0 / 6.4).epsilon(0.02));
  QField flat(z.grid(), 2, 1, std::vector<double>(2 * z.size(), 0.5));
  CHECK(linfty_l2_check(flat, std::span(kOrigin, 2), 0.25) == 0.0);
  const QField a = sample(planes(0.6, 0.8, 1), z.grid());
  CHECK(linfty_l2_check(a, std::span(kOrigin, 2), 0.25) <= 4.0);
}

TEST_CASE("harmonic comparison") {
  const QField f = sample(planes(0.6, 0.8, 1), Grid::centered_box(2, 1.0, 1.0 / 64));
  const auto self = harmonic_compare(f, f, std::span(kOrigin, 2), 0.5);
  CHECK(self.e_l2 == 0.0);
  CHECK(self.e_grad == 0.0);
  CHECK(self.e_avg == 0.0);
  const double c = 0.1;
  const auto shifted = harmonic_compare(f, f.shifted(std::vector<double>{c}), std::span(kOrigin, 2), 0.5);
  CHECK(shifted.e_l2 == doctest::Approx(std::numbers::pi * c * c).epsilon(1e-3));
  CHECK(shifted.e_grad <= 1e-20);
  CHECK(shifted.e_avg <= 1e-20);
  const QField other = sample(planes(0.6, 0.8, 1), Grid::centered_box(2, 1.0, 1.0 / 32));
  CHECK_THROWS_AS(harmonic_compare(f, other, std::span(kOrigin, 2), 0.5), DimensionError);
}
