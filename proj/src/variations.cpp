#include "qvar/variations.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "qvar/parallel.hpp"

namespace qvar {

namespace {

Eigen::MatrixXd as_matrix(std::span<const double> Df, int n, int m) {
  Eigen::MatrixXd D(n, m);
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < m; ++i) D(a, i) = Df[a * m + i];
  return D;
}

void require_support_inside(const Grid& g, const TestField& t) {
  if (t.m != g.m) throw DimensionError("test field dimension differs from grid");
  for (int i = 0; i < g.m; ++i)
    if (t.center[i] - t.radius <= g.lo(i) || t.center[i] + t.radius >= g.hi(i))
      throw DomainError("support of test field '" + t.id + "' leaves the grid");
}

// Sum over support nodes of integrand(node, x) times h^m.
template <class F>
double integrate_support(const QField& f, const TestField& t, bool* used_collapsed, F&& integrand) {
  const Grid& g = f.grid();
  require_support_inside(g, t);
  const double r2 = t.radius * t.radius;
  std::vector<char> touched(g.size(), 0);
  const double s = deterministic_sum(g.size(), [&](std::size_t idx) {
    double x[3];
    g.coords(idx, std::span<double>(x, g.m));
    double d = 0.0;
    for (int i = 0; i < g.m; ++i) d += (x[i] - t.center[i]) * (x[i] - t.center[i]);
    if (d >= r2) return 0.0;
    if (f.collapsed(idx)) touched[idx] = 1;
    return integrand(idx, std::span<const double>(x, g.m));
  });
  if (used_collapsed)
    *used_collapsed = std::any_of(touched.begin(), touched.end(), [](char c) { return c != 0; });
  return s * g.cell_volume();
}

template <class F>
Residual with_error(const QField& f, F&& functional) {
  Residual r;
  r.value = functional(f, &r.used_collapsed);
  const QField c = coarsen(f);
  r.quadrature_error = std::abs(r.value - functional(c, nullptr));
  return r;
}

}  // namespace

BranchMetric branch_metric(std::span<const double> Df, int n, int m) {
  const Eigen::MatrixXd D = as_matrix(Df, n, m);
  BranchMetric b;
  b.g = Eigen::MatrixXd::Identity(m, m) + D.transpose() * D;
  const Eigen::LLT<Eigen::MatrixXd> llt(b.g);
  assert(llt.info() == Eigen::Success);
  b.ginv = llt.solve(Eigen::MatrixXd::Identity(m, m));
  b.det = b.g.determinant();
  return b;
}

MetricTensors metric_tensors(const QField& field) {
  const auto& gr = field.gradient();
  MetricTensors out;
  out.q = field.q();
  out.data.resize(field.size() * field.q());
  for (std::size_t idx = 0; idx < field.size(); ++idx)
    for (int l = 0; l < field.q(); ++l)
      out.data[idx * field.q() + l] = branch_metric(gr.at(idx, l), field.n(), field.m());
  return out;
}

LipBoundsReport lip_bounds_check(const QField& field) {
  const auto& gr = field.gradient();
  const int m = field.m(), n = field.n();
  LipBoundsReport rep;
  for (std::size_t idx = 0; idx < field.size(); ++idx)
    for (int l = 0; l < field.q(); ++l) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(as_matrix(gr.at(idx, l), n, m));
      rep.lip = std::max(rep.lip, svd.singularValues()(0));
    }
  const double L2 = 1.0 + rep.lip * rep.lip;
  const double lo2 = 1.0 / std::sqrt(L2), hi2 = std::pow(L2, 0.5 * (m - 1));
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < field.size(); ++idx)
    for (int l = 0; l < field.q(); ++l) {
      const BranchMetric b = branch_metric(gr.at(idx, l), n, m);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(b.g);
      const double gmin = e1.eigenvalues().minCoeff(), gmax = e1.eigenvalues().maxCoeff();
      worst = std::max({worst, 1.0 - gmin, gmax - L2});
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e2(std::sqrt(b.det) * b.ginv);
      const double amin = e2.eigenvalues().minCoeff(), amax = e2.eigenvalues().maxCoeff();
      worst = std::max({worst, lo2 - amin, amax - hi2});
    }
  rep.worst_violation = worst;
  return rep;
}

double area(const QField& field, const Region& region) {
  const auto w = region_weights(field.grid(), region);
  const auto& gr = field.gradient();
  const int m = field.m(), n = field.n();
  return deterministic_sum(field.size(),
                           [&](std::size_t idx) {
                             if (w[idx] == 0.0) return 0.0;
                             double s = 0.0;
                             for (int l = 0; l < field.q(); ++l)
                               s += std::sqrt(branch_metric(gr.at(idx, l), n, m).det);
                             return w[idx] * s;
                           }) *
         field.grid().cell_volume();
}

Residual outer_variation_area(const QField& field, const TestField& psi) {
  if (psi.kind != TestField::Kind::Outer) throw UsageError("outer area variation needs an outer test field");
  if (psi.n != field.n()) throw DimensionError("test field value dimension differs from n");
  auto fn = [&psi](const QField& f, bool* flag) {
    const int m = f.m(), n = f.n();
    const auto& gr = f.gradient();
    return integrate_support(f, psi, flag, [&](std::size_t idx, std::span<const double> x) {
      std::vector<double> val(n), dx(n * m), du(n * n);
      double s = 0.0;
      for (int l = 0; l < f.q(); ++l) {
        const auto Df = gr.at(idx, l);
        psi.eval(x, f.value(idx, l), val, dx, du);
        const BranchMetric b = branch_metric(Df, n, m);
        const double sg = std::sqrt(b.det);
        // d_j [psi^a(x, f(x))] = dx_j psi^a + du_b psi^a d_j f^b
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j) {
            const double gij = b.ginv(i, j);
            if (gij == 0.0) continue;
            for (int a = 0; a < n; ++a) {
              double dj = dx[a * m + j];
              for (int c = 0; c < n; ++c) dj += du[a * n + c] * Df[c * m + j];
              s += sg * gij * Df[a * m + i] * dj;
            }
          }
      }
      return s;
    });
  };
  return with_error(field, fn);
}

Residual inner_variation_area(const QField& field, const TestField& phi) {
  if (phi.kind != TestField::Kind::Inner) throw UsageError("inner area variation needs an inner test field");
  auto fn = [&phi](const QField& f, bool* flag) {
    const int m = f.m(), n = f.n();
    const auto& gr = f.gradient();
    return integrate_support(f, phi, flag, [&](std::size_t idx, std::span<const double> x) {
      std::vector<double> val(m), dx(m * m);
      phi.eval(x, {}, val, dx, {});
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
      for (int l = 0; l < f.q(); ++l) {
        const BranchMetric b = branch_metric(gr.at(idx, l), n, m);
        A += std::sqrt(b.det) * b.ginv;
      }
      double s = 0.0;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) s += A(i, j) * dx[j * m + i];
      return s;
    });
  };
  return with_error(field, fn);
}

Residual dirichlet_outer(const QField& field, const TestField& phi) {
  if (phi.kind != TestField::Kind::Scalar) throw UsageError("residual O needs a scalar test field");
  auto fn = [&phi](const QField& f, bool* flag) {
    const int m = f.m(), n = f.n();
    const auto& gr = f.gradient();
    return integrate_support(f, phi, flag, [&](std::size_t idx, std::span<const double> x) {
      double val = 0.0, dx[3];
      phi.eval(x, {}, std::span<double>(&val, 1), std::span<double>(dx, m), {});
      double s = 0.0;
      for (int l = 0; l < f.q(); ++l) {
        const auto Df = gr.at(idx, l);
        const auto v = f.value(idx, l);
        for (int i = 0; i < m; ++i) {
          double dfi_f = 0.0;
          for (int a = 0; a < n; ++a) dfi_f += Df[a * m + i] * v[a];
          s += dfi_f * dx[i];
        }
        double e = 0.0;
        for (double d : Df) e += d * d;
        s += e * val;
      }
      return s;
    });
  };
  return with_error(field, fn);
}

Residual dirichlet_inner(const QField& field, const TestField& phi) {
  if (phi.kind != TestField::Kind::Inner) throw UsageError("residual I needs an inner test field");
  auto fn = [&phi](const QField& f, bool* flag) {
    const int m = f.m(), n = f.n();
    const auto& gr = f.gradient();
    return integrate_support(f, phi, flag, [&](std::size_t idx, std::span<const double> x) {
      std::vector<double> val(m), dx(m * m);
      phi.eval(x, {}, val, dx, {});
      double s = 0.0;
      for (int l = 0; l < f.q(); ++l) {
        const auto Df = gr.at(idx, l);
        double e = 0.0;
        for (double d : Df) e += d * d;
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j) {
            double dij = 0.0;
            for (int a = 0; a < n; ++a) dij += Df[a * m + i] * Df[a * m + j];
            s += (2.0 * dij - (i == j ? e : 0.0)) * dx[j * m + i];
          }
      }
      return s;
    });
  };
  return with_error(field, fn);
}

Residual dirichlet_strong_outer(const QField& field, const TestField& psi) {
  if (psi.kind != TestField::Kind::Outer) throw UsageError("residual S needs an outer test field");
  if (psi.n != field.n()) throw DimensionError("test field value dimension differs from n");
  auto fn = [&psi](const QField& f, bool* flag) {
    const int m = f.m(), n = f.n();
    const auto& gr = f.gradient();
    return integrate_support(f, psi, flag, [&](std::size_t idx, std::span<const double> x) {
      std::vector<double> val(n), dx(n * m), du(n * n);
      double s = 0.0;
      for (int l = 0; l < f.q(); ++l) {
        const auto Df = gr.at(idx, l);
        psi.eval(x, f.value(idx, l), val, dx, du);
        for (int i = 0; i < m; ++i)
          for (int a = 0; a < n; ++a) {
            s += Df[a * m + i] * dx[a * m + i];
            for (int b = 0; b < n; ++b) s += Df[a * m + i] * Df[b * m + i] * du[a * n + b];
          }
      }
      return s;
    });
  };
  return with_error(field, fn);
}

Residual dirichlet_average(const QField& field, const TestField& psi) {
  if (psi.kind != TestField::Kind::Outer) throw UsageError("residual avg needs an outer test field");
  if (psi.depends_on_u) throw UsageError("residual avg needs a test field independent of u");
  if (psi.n != field.n()) throw DimensionError("test field value dimension differs from n");
  auto fn = [&psi](const QField& f, bool* flag) {
    const int m = f.m(), n = f.n();
    const auto& gr = f.gradient();
    return integrate_support(f, psi, flag, [&](std::size_t idx, std::span<const double> x) {
      std::vector<double> val(n), dx(n * m), zero(n, 0.0);
      psi.eval(x, zero, val, dx, {});
      double s = 0.0;
      for (int a = 0; a < n; ++a)
        for (int i = 0; i < m; ++i) {
          double mean = 0.0;
          for (int l = 0; l < f.q(); ++l) mean += gr.at(idx, l)[a * m + i];
          s += mean / f.q() * dx[a * m + i];
        }
      return s;
    });
  };
  return with_error(field, fn);
}

DirichletResiduals dirichlet_variations(const QField& field, const TestField& scalar,
                                        const TestField& inner, const TestField& outer,
                                        const TestField& outer_x_only) {
  DirichletResiduals r;
  r.O = dirichlet_outer(field, scalar);
  r.I = dirichlet_inner(field, inner);
  r.S = dirichlet_strong_outer(field, outer);
  r.avg = dirichlet_average(field, outer_x_only);
  return r;
}

std::pair<double, double> tilt_excess_sides(std::span<const double> Df, int n, int m) {
  const Eigen::MatrixXd D = as_matrix(Df, n, m);
  Eigen::MatrixXd J(m + n, m);
  J.topRows(m) = Eigen::MatrixXd::Identity(m, m);
  J.bottomRows(n) = D;
  // Orthonormal basis of the tangent plane, independent of the metric formula.
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(J);
  const Eigen::MatrixXd Qb = qr.householderQ() * Eigen::MatrixXd::Identity(m + n, m);
  const Eigen::MatrixXd pi = Qb * Qb.transpose();
  Eigen::MatrixXd pi0 = Eigen::MatrixXd::Zero(m + n, m + n);
  pi0.topLeftCorner(m, m) = Eigen::MatrixXd::Identity(m, m);
  const double lhs = 0.5 * (pi - pi0).squaredNorm();
  const BranchMetric b = branch_metric(Df, n, m);
  const double rhs = (b.ginv * D.transpose() * D).trace();
  return {lhs, rhs};
}

double tilt_excess_identity_check(const QField& field, const Region& region) {
  const auto& gr = field.gradient();
  const Grid& g = field.grid();
  double worst = 0.0;
  std::vector<double> x(g.m);
  for (std::size_t idx = 0; idx < field.size(); ++idx) {
    g.coords(idx, x);
    if (!region.contains(x)) continue;
    for (int l = 0; l < field.q(); ++l) {
      const auto [lhs, rhs] = tilt_excess_sides(gr.at(idx, l), field.n(), field.m());
      const double scale = std::max(std::abs(lhs), std::abs(rhs));
      if (scale < 1e-300) continue;
      worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
  }
  return worst;
}

QField coarsen(const QField& field) {
  const Grid& g = field.grid();
  std::vector<int> ext(g.m);
  for (int i = 0; i < g.m; ++i) ext[i] = (g.extents[i] + 1) / 2;
  Grid c(g.origin, 2.0 * g.h, ext);
  const std::size_t blk = static_cast<std::size_t>(field.q()) * field.n();
  std::vector<double> v(c.size() * blk);
  for (std::size_t idx = 0; idx < c.size(); ++idx) {
    auto k = c.multi(idx);
    for (int i = 0; i < g.m; ++i) k[i] *= 2;
    const auto src = field.at(g.index(k)).data;
    std::copy(src.begin(), src.end(), v.begin() + idx * blk);
  }
  QField out(c, field.q(), field.n(), std::move(v));
  resolve_collapsed(out);
  return out;
}

}  // namespace qvar
