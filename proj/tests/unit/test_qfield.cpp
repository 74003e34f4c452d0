#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "qvar/catalog.hpp"
#include "qvar/qfield.hpp"

using namespace qvar;

namespace {

QMap constant_pair(double c) {
  QMap f;
  f.m = 2;
  f.q = 2;
  f.n = 1;
  f.eval = [c](std::span<const double>, std::span<double> v) { v[0] = v[1] = c; };
  return f;
}

QMap single(std::function<double(double, double)> u) {
  QMap f;
  f.m = 2;
  f.q = 1;
  f.n = 1;
  f.branch_consistent = true;
  f.eval = [u](std::span<const double> x, std::span<double> v) { v[0] = u(x[0], x[1]); };
  return f;
}

QField catalog(const std::string& id, const Grid& g, const nlohmann::json& p = nlohmann::json::object()) {
  return sample(make_catalog(id, p).map, g);
}

// Square ring of nodes at Chebyshev radius k about node (i0, j0).
std::vector<std::size_t> ring(const Grid& g, int i0, int j0, int k) {
  std::vector<std::size_t> loop;
  for (int i = -k; i < k; ++i) loop.push_back(g.index({i0 + i, j0 - k, 0}));
  for (int j = -k; j < k; ++j) loop.push_back(g.index({i0 + k, j0 + j, 0}));
  for (int i = k; i > -k; --i) loop.push_back(g.index({i0 + i, j0 + k, 0}));
  for (int j = k; j > -k; --j) loop.push_back(g.index({i0 - k, j0 + j, 0}));
  return loop;
}

}  // namespace

TEST_CASE("constant map") {
  const Grid g = Grid::centered_box(2, 1.0, 1.0 / 16);
  const QField f = sample(constant_pair(0.0), g);
  for (std::size_t k = 0; k < f.size(); ++k) {
    CHECK(f.at(k).data[0] == 0.0);
    CHECK(f.at(k).data[1] == 0.0);
    CHECK(f.gradient().energy_density(k) == 0.0);
  }
  CHECK(dirichlet_energy(f) == 0.0);
  DecomposeReport rep;
  branch_decompose(f, 0.0, &rep);
  CHECK(rep.collapsed_nodes == f.size());
}

TEST_CASE("linear pair is sampled and differentiated exactly") {
  const Grid g = Grid::centered_box(2, 1.0, 1.0 / 16);
  const QField f = catalog("linear_pair", g, {{"A", {1.0, 0.5}}, {"B", {-0.25, 2.0}}});
  std::vector<double> x(2);
  for (std::size_t k = 0; k < f.size(); ++k) {
    g.coords(k, x);
    const QPoint want(2, 1, {x[0] + 0.5 * x[1], -0.25 * x[0] + 2.0 * x[1]});
    CHECK(g_dist(f.at(k), want) <= 1e-15);
  }
  // Interpolation reproduces the linear branches inside a cell away from the crossing.
  const double y[2] = {0.53125 + 0.01, -0.71875 + 0.02};
  const QPoint want(2, 1, {y[0] + 0.5 * y[1], -0.25 * y[0] + 2.0 * y[1]});
  CHECK(g_dist(interpolate(f, y), want) <= 1e-14);
}

TEST_CASE("discrete Lipschitz constant of the crossing pair") {
  // {x, -x} against {x + h, -x - h}: sqrt(2) h along the first axis.
  const Grid g = Grid::centered_box(2, 1.0, 1.0 / 16);
  const QField f = catalog("linear_pair", g);
  CHECK(discrete_lipschitz(f) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("collapsed nodes of z^{3/2} sit next to the branch point") {
  const double h = 1.0 / 64;
  const Grid g = Grid::centered_box(2, 1.0, h);
  const QField f = catalog("branch_sqrt", g);
  // sep = 2|z|^{3/2}, max_l |Df_l| = sqrt(2) (3/2) |z|^{1/2}.
  std::vector<double> x(2);
  for (std::size_t k = 0; k < f.size(); ++k) {
    g.coords(k, x);
    const double r = std::hypot(x[0], x[1]);
    const bool want = 2.0 * r <= h * std::sqrt(2.0) * 1.5 + 1e-15;
    CHECK(f.collapsed(k) == want);
    if (f.collapsed(k)) CHECK(r <= 1.5 * h);
  }
  CHECK(f.collapsed(g.nearest(std::vector<double>{0.0, 0.0})));
}

TEST_CASE("branch decomposition and monodromy") {
  const double h = 1.0 / 32;
  // Half plane away from the crossing line: separation >= 0.5 everywhere.
  const Grid g({0.25, -0.5}, h, {25, 33});
  const QField f = catalog("linear_pair", g);
  DecomposeReport rep;
  const QField lab = branch_decompose(f, 0.4, &rep);
  CHECK(rep.collapsed_nodes == 0);
  CHECK(rep.components == 1);
  CHECK(rep.cut_edges == 0);
  // Two global branches, x and -x.
  const double s0 = lab.branch_value(0, 0)[0] > 0 ? 1.0 : -1.0;
  std::vector<double> x(2);
  for (std::size_t k = 0; k < lab.size(); ++k) {
    g.coords(k, x);
    CHECK(lab.branch_value(k, 0)[0] == doctest::Approx(s0 * x[0]));
    CHECK(lab.branch_value(k, 1)[0] == doctest::Approx(-s0 * x[0]));
  }

  const Grid gs = Grid::centered_box(2, 1.0, h);
  const QField z = catalog("branch_sqrt", gs);
  const auto c = gs.multi(gs.nearest(std::vector<double>{0.0, 0.0}));
  const auto around = ring(gs, c[0], c[1], 8);
  CHECK(loop_monodromy(z, around) == std::vector<int>{1, 0});
  const auto away = ring(gs, c[0] + 16, c[1] + 16, 6);
  CHECK(loop_monodromy(z, away) == std::vector<int>{0, 1});
}

TEST_CASE("Dirichlet energy of z^{3/2} on the unit disk") {
  const auto e = make_catalog("branch_sqrt");
  // Polar quadrature of sum_l |Df_l|^2 from the analytic Jacobian.
  auto density = [&](double r, double t) {
    const double x[2] = {r * std::cos(t), r * std::sin(t)};
    std::vector<double> jac(8);
    e.map.jacobian(x, jac);
    double s = 0.0;
    for (double v : jac) s += v * v;
    return s;
  };
  const double want = oracle::integrate(
      [&](double r) {
        return r * oracle::integrate([&](double t) { return density(r, t); }, -std::numbers::pi,
                                     std::numbers::pi, 64);
      },
      0.0, 1.0, 64);
  CHECK(want == doctest::Approx(6.0 * std::numbers::pi).epsilon(1e-6));
  double prev = 1e9;
  for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
    const QField f = sample(e.map, Grid::centered_box(2, 1.25, h));
    const double err = std::abs(dirichlet_energy(f, Region::ball({0.0, 0.0}, 1.0)) - want);
    CHECK(err <= 2.0 * h);
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("energy of a single linear branch") {
  const Grid g({0.0, 0.0}, 1.0 / 16, {17, 17});
  const QField f = sample(single([](double x, double y) { return 0.75 * x - 1.5 * y; }), g);
  CHECK(dirichlet_energy(f) == doctest::Approx(0.75 * 0.75 + 1.5 * 1.5).epsilon(1e-12));
  CHECK(l2_distance(f, f) == 0.0);
}

TEST_CASE("rescaling") {
  const double h = 1.0 / 64;
  const Grid g = Grid::centered_box(2, 1.0, h);
  const double o[2] = {0.0, 0.0};

  // One-homogeneous pair: f^{1/r}_{0,r} = f.
  const QField lp = catalog("linear_pair", g);
  const QField lr = rescale(lp, o, 0.5, 2.0);
  CHECK(l2_distance(lr, sample(make_catalog("linear_pair").map, lr.grid())) <= 1e-12);

  // z^{3/2}: f^{r^{-3/2}}_{0,r} = f, on aligned and non-aligned radii.
  const auto z = make_catalog("branch_sqrt");
  const QField zf = sample(z.map, g);
  const QField zr = rescale(zf, o, 0.5, std::pow(0.5, -1.5));
  CHECK(l2_distance(zr, sample(z.map, zr.grid())) <= 1e-12);
  const QField zs = rescale(zf, o, 0.37, std::pow(0.37, -1.5), Grid::centered_box(2, 1.0, h));
  CHECK(l2_distance(zs, sample(z.map, zs.grid())) <= 4.0 * h);

  const double far[2] = {0.9, 0.0};
  CHECK_THROWS_AS(rescale(zf, far, 0.5, 1.0), DomainError);
}

TEST_CASE("collapsed set dimension") {
  const double h = 1.0 / 128;
  const Grid g = Grid::centered_box(2, 1.0, h);
  const std::vector<double> scales = {1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32};
  const QField lp = catalog("linear_pair", g);
  CHECK(box_dimension(lp, collapsed_set(lp, 1e-12), scales) == doctest::Approx(1.0).epsilon(0.1));
  const QField c = sample(constant_pair(1.0), g);
  CHECK(box_dimension(c, collapsed_set(c, 1e-12), scales) == doctest::Approx(2.0).epsilon(0.1));
  const QField z = catalog("branch_sqrt", g);
  CHECK(std::abs(box_dimension(z, collapsed_set(z, 1e-12), scales)) <= 0.1);
  CHECK_THROWS_AS(box_dimension(z, collapsed_set(z, 1e-12), {0.5, 0.25}), EstimationError);
}

TEST_CASE("harmonicity residual of the average") {
  const double h = 1.0 / 32;
  const Grid g = Grid::centered_box(2, 1.0, h);
  CHECK(average_harmonicity_residual(sample(single([](double x, double y) { return 0.5 * x - 0.25 * y + 1; }), g)) == 0.0);
  CHECK(average_harmonicity_residual(sample(single([](double x, double y) { return x * x - y * y; }), g)) <= 1e-15);
  // Second differences of x^2 + y^2 sum to 4 h^2.
  CHECK(average_harmonicity_residual(sample(single([](double x, double y) { return x * x + y * y; }), g)) ==
        doctest::Approx(4.0 * h * h).epsilon(1e-9));
  CHECK(average_harmonicity_residual(catalog("branch_sqrt", g)) <= 1e-12);
  CHECK(average_harmonicity_residual(catalog("appendix_fa", Grid::centered_box(1, 1.0, h), {{"a", 1.0}})) <=
        1e-12);
}

TEST_CASE("translating values leaves the energy unchanged") {
  const QField z = catalog("branch_sqrt", Grid::centered_box(2, 1.0, 1.0 / 32));
  const double v[2] = {3.0, -1.0};
  CHECK(dirichlet_energy(z.shifted(v)) == doctest::Approx(dirichlet_energy(z)).epsilon(1e-12));
}
