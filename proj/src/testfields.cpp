#include "qvar/testfields.hpp"

#include <cmath>
#include <random>

#include "qvar/errors.hpp"

namespace qvar {

int TestField::out_dim() const {
  switch (kind) {
    case Kind::Scalar:
      return 1;
    case Kind::Inner:
      return m;
    case Kind::Outer:
      return n;
  }
  return 1;
}

double radial_bump(std::span<const double> x, std::span<const double> c, double r,
                   std::span<double> grad) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += (x[i] - c[i]) * (x[i] - c[i]);
  s /= r * r;
  if (s >= 1.0) {
    for (double& g : grad) g = 0.0;
    return 0.0;
  }
  const double v = std::exp(1.0 - 1.0 / (1.0 - s));
  // d/ds exp(1 - 1/(1-s)) = -v / (1-s)^2 ; ds/dx_i = 2 (x_i - c_i) / r^2
  const double dvds = -v / ((1.0 - s) * (1.0 - s));
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = dvds * 2.0 * (x[i] - c[i]) / (r * r);
  return v;
}

TestField scalar_bump(std::vector<double> center, double radius, std::string id) {
  TestField t;
  t.id = std::move(id);
  t.kind = TestField::Kind::Scalar;
  t.m = static_cast<int>(center.size());
  t.center = center;
  t.radius = radius;
  t.eval = [center, radius](std::span<const double> x, std::span<const double>,
                            std::span<double> value, std::span<double> dx, std::span<double>) {
    value[0] = radial_bump(x, center, radius, dx);
  };
  return t;
}

TestField inner_field(std::vector<double> center, double radius, std::vector<double> a,
                      std::vector<double> B, std::string id) {
  const int m = static_cast<int>(center.size());
  if (static_cast<int>(a.size()) != m || static_cast<int>(B.size()) != m * m)
    throw DimensionError("inner_field coefficients have wrong size");
  TestField t;
  t.id = std::move(id);
  t.kind = TestField::Kind::Inner;
  t.m = m;
  t.center = center;
  t.radius = radius;
  t.eval = [=](std::span<const double> x, std::span<const double>, std::span<double> value,
               std::span<double> dx, std::span<double>) {
    double gb[3];
    const double b = radial_bump(x, center, radius, std::span<double>(gb, m));
    for (int j = 0; j < m; ++j) {
      double lin = a[j];
      for (int k = 0; k < m; ++k) lin += B[j * m + k] * (x[k] - center[k]);
      value[j] = b * lin;
      for (int i = 0; i < m; ++i) dx[j * m + i] = gb[i] * lin + b * B[j * m + i];
    }
  };
  return t;
}

TestField outer_field(std::vector<double> center, double radius, std::vector<double> a,
                      std::vector<double> B, std::vector<double> u0, double u_radius,
                      std::string id) {
  const int m = static_cast<int>(center.size());
  const int n = static_cast<int>(a.size());
  if (static_cast<int>(B.size()) != n * m) throw DimensionError("outer_field B must be n x m");
  if (u_radius > 0.0 && static_cast<int>(u0.size()) != n)
    throw DimensionError("outer_field u-center must have dimension n");
  TestField t;
  t.id = std::move(id);
  t.kind = TestField::Kind::Outer;
  t.m = m;
  t.n = n;
  t.center = center;
  t.radius = radius;
  t.depends_on_u = u_radius > 0.0;
  t.eval = [=](std::span<const double> x, std::span<const double> u, std::span<double> value,
               std::span<double> dx, std::span<double> du) {
    double gb[3];
    const double b = radial_bump(x, center, radius, std::span<double>(gb, m));
    std::vector<double> gw(n, 0.0);
    const double w = u_radius > 0.0 ? radial_bump(u, u0, u_radius, gw) : 1.0;
    for (int al = 0; al < n; ++al) {
      double lin = a[al];
      for (int k = 0; k < m; ++k) lin += B[al * m + k] * (x[k] - center[k]);
      value[al] = b * lin * w;
      for (int i = 0; i < m; ++i) dx[al * m + i] = (gb[i] * lin + b * B[al * m + i]) * w;
      if (!du.empty())
        for (int be = 0; be < n; ++be) du[al * n + be] = b * lin * gw[be];
    }
  };
  return t;
}

std::vector<TestField> canonical_family(TestField::Kind kind, int m, int n,
                                        const TestFamilyOptions& opt) {
  std::mt19937_64 rng(opt.seed + 7919u * static_cast<unsigned>(kind) + 31u * m + n);
  std::uniform_real_distribution<double> unit(-1.0, 1.0), frac(0.0, 1.0);
  std::vector<TestField> out;
  for (int k = 0; k < 5; ++k) {
    std::vector<double> c(m);
    // First instance is centered at the origin.
    for (double& v : c) v = k == 0 ? 0.0 : opt.spread * unit(rng);
    const double r = opt.r_lo + (opt.r_hi - opt.r_lo) * frac(rng);
    const std::string tag = std::to_string(k);
    switch (kind) {
      case TestField::Kind::Scalar:
        out.push_back(scalar_bump(c, r, "scalar" + tag));
        break;
      case TestField::Kind::Inner: {
        std::vector<double> a(m), B(m * m);
        for (double& v : a) v = unit(rng);
        for (double& v : B) v = unit(rng);
        out.push_back(inner_field(c, r, a, B, "inner" + tag));
        break;
      }
      case TestField::Kind::Outer: {
        std::vector<double> a(n), B(n * m), u0(n);
        for (double& v : a) v = unit(rng);
        for (double& v : B) v = unit(rng);
        for (double& v : u0) v = 0.5 * unit(rng);
        out.push_back(outer_field(c, r, a, B, u0, opt.u_radius, "outer" + tag));
        break;
      }
    }
  }
  return out;
}

}  // namespace qvar
