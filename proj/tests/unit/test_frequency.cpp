#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qvar/catalog.hpp"
#include "qvar/frequency.hpp"

using namespace qvar;

namespace {

const double kOrigin[2] = {0.0, 0.0};
const std::span<const double> kOrigin1(kOrigin, 1);

QField cone(double h) {
  return sample(make_catalog("cone_1d").map, Grid::centered_box(1, 1.0, h));
}

QField zfield(double h) {
  return sample(make_catalog("branch_sqrt").map, Grid::centered_box(2, 1.0, h));
}

std::vector<double> geometric(double lo, double hi, int count) {
  std::vector<double> r(count);
  for (int k = 0; k < count; ++k) r[k] = lo * std::pow(hi / lo, double(k) / (count - 1));
  return r;
}

}  // namespace

TEST_CASE("cutoff profile") {
  const Cutoff c;
  CHECK(c.phi(0.0) == 1.0);
  CHECK(c.phi(0.5) == 1.0);
  CHECK(c.phi(1.0) == 0.0);
  CHECK(c.phi(1.7) == 0.0);
  const double e = 1e-6;
  for (double t = 0.01; t < 1.2; t += 0.01) {
    CHECK(c.dphi(t) <= 0.0);
    CHECK(c.psi(t) >= 0.0);
    CHECK(c.psi(t) <= 16.0);
    CHECK(c.dphi(t) == doctest::Approx((c.phi(t + e) - c.phi(t - e)) / (2 * e)).epsilon(1e-6).scale(1.0));
  }
  // C^2 at the joins: second differences of phi' across 1/2 and 1 are small.
  for (double t : {0.5, 1.0}) {
    const double d2l = (c.dphi(t) - c.dphi(t - e)) / e;
    const double d2r = (c.dphi(t + e) - c.dphi(t)) / e;
    CHECK(std::abs(d2l - d2r) <= 1e-3);
  }
}

TEST_CASE("frequency of homogeneous fields") {
  const QField c = cone(1.0 / 1024);
  for (double r : geometric(0.125, 0.5, 5)) CHECK(frequency(c, kOrigin1, r).I == doctest::Approx(1.0).epsilon(0.01));
  const QField z = zfield(1.0 / 128);
  CHECK(frequency(z, kOrigin, 0.5).I == doctest::Approx(1.5).epsilon(0.02));
}

TEST_CASE("frequency is invariant under scaling of values") {
  const QField z = zfield(1.0 / 64);
  const auto a = frequency(z, kOrigin, 0.5);
  const auto b = frequency(z.scaled(3.7), kOrigin, 0.5);
  CHECK(b.I == doctest::Approx(a.I).epsilon(1e-12));
  CHECK(b.D == doctest::Approx(3.7 * 3.7 * a.D).epsilon(1e-12));
}

TEST_CASE("derivative identity for H") {
  const auto pc = frequency_profile(cone(1.0 / 1024), kOrigin1, geometric(0.1, 0.5, 10));
  CHECK(derivative_identity_check(pc) <= 1e-3);
  const QField z = zfield(1.0 / 256);
  const auto pz = frequency_profile(z, kOrigin, default_ladder(z, kOrigin, 10));
  CHECK(derivative_identity_check(pz) <= 1e-2);
  const auto ps = frequency_profile(z.scaled(0.01), kOrigin, default_ladder(z, kOrigin, 10));
  CHECK(derivative_identity_check(ps) == doctest::Approx(derivative_identity_check(pz)).epsilon(1e-9));
  CHECK(std::abs(monotonicity_check(pz)) <= 0.05);

  // ln H(R) - ln H(r) = int 2 I(s)/s ds.
  const auto ih = integration_h_check(pz);
  CHECK(ih.derived_max_error <= 1e-2);

  FrequencyProfile tiny = pz;
  tiny.radii.resize(2);
  tiny.D.resize(2);
  tiny.H.resize(2);
  tiny.I.resize(2);
  tiny.dH_check.resize(2);
  CHECK_THROWS_AS(derivative_identity_check(tiny), EstimationError);
}

TEST_CASE("homogeneity degree") {
  const auto fc = homogeneity_degree(cone(1.0 / 256), std::vector<double>{0.0});
  CHECK(fc.alpha == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fc.misfit <= 1e-10);
  const auto fz = homogeneity_degree(zfield(1.0 / 128), kOrigin);
  CHECK(fz.alpha == doctest::Approx(1.5).epsilon(0.01));
  CHECK(fz.misfit <= 1e-6);

  QMap affine;
  affine.m = 1;
  affine.eval = [](std::span<const double> x, std::span<double> v) { v[0] = 1.0 + x[0]; };
  const auto fa = homogeneity_degree(sample(affine, Grid::centered_box(1, 1.0, 1.0 / 128)), std::vector<double>{0.0});
  CHECK(fa.misfit > 0.02);
}

TEST_CASE("frequency blow-up is normalized") {
  const QField z = zfield(1.0 / 64);
  const QField b = frequency_blowup(z, kOrigin, 0.5);
  CHECK(frequency(b, kOrigin, 1.0).H == doctest::Approx(1.0).epsilon(1e-6));
  // For a homogeneous map the blow-up is a multiple of the map.
  const double H = frequency(z, kOrigin, 0.5).H;
  const QField want = sample(make_catalog("branch_sqrt").map, b.grid()).scaled(std::pow(0.5, 1.5) / std::sqrt(H));
  CHECK(l2_distance(b, want) <= 1e-10);
}

TEST_CASE("one-dimensional cone classification") {
  const auto v = classify_1d(cone(1.0 / 64));
  CHECK(v.is_two_cone);
  CHECK(v.T_plus.same_multiset(QPoint(2, 2, {1, 0, -1, 0})));
  CHECK(v.T_minus.same_multiset(QPoint(2, 2, {0, 1, 0, -1})));

  const auto g = classify_1d(sample(make_catalog("appendix_g").map, Grid::centered_box(1, 1.0, 1.0 / 64)));
  CHECK_FALSE(g.is_two_cone);
  CHECK(g.misfit <= 1e-12);
  CHECK(g.norm_gap == doctest::Approx(std::sqrt(3.0) * std::sqrt(2.0)));

  // Uniform noise of size eps gives a misfit of order eps.
  const double eps = 1e-3;
  QField c = cone(1.0 / 64);
  std::vector<double> vals = c.values();
  std::mt19937_64 rng(2);
  const auto noise = oracle::random_values(rng, static_cast<int>(vals.size()), eps);
  for (std::size_t k = 0; k < vals.size(); ++k) vals[k] += noise[k];
  const auto nv = classify_1d(QField(c.grid(), 2, 2, vals));
  CHECK_FALSE(nv.is_two_cone);
  CHECK(nv.misfit <= eps);
  CHECK(nv.misfit >= 0.1 * eps);
}

TEST_CASE("frequency errors") {
  QMap zero;
  zero.m = 2;
  zero.q = 2;
  zero.eval = [](std::span<const double>, std::span<double> v) { v[0] = v[1] = 0.0; };
  const QField z = sample(zero, Grid::centered_box(2, 1.0, 1.0 / 32));
  CHECK_THROWS_AS(frequency(z, kOrigin, 0.5), VanishingH);
  CHECK_THROWS_AS(frequency(zfield(1.0 / 32), kOrigin, 1.5), DomainError);
}
