#include "qvar/catalog.hpp"

#include <cmath>

namespace qvar {

using nlohmann::json;

namespace {

std::vector<double> get_vec(const json& p, const char* key, std::vector<double> def) {
  if (!p.contains(key)) return def;
  return p.at(key).get<std::vector<double>>();
}

double get_num(const json& p, const char* key, double def) {
  if (!p.contains(key)) return def;
  return p.at(key).get<double>();
}

// a + ib for the complex derivative, as the real 2x2 Jacobian [[a,-b],[b,a]].
void conformal_block(double a, double b, std::span<double> J) {
  J[0] = a;
  J[1] = -b;
  J[2] = b;
  J[3] = a;
}

CatalogEntry linear_pair(const json& p) {
  const int m = p.value("m", 2);
  const int n = p.value("n", 1);
  std::vector<double> A = get_vec(p, "A", {}), B = get_vec(p, "B", {});
  if (A.empty()) {
    A.assign(n * m, 0.0);
    B.assign(n * m, 0.0);
    A[0] = 1.0;
    B[0] = -1.0;
  }
  if (static_cast<int>(A.size()) != n * m || static_cast<int>(B.size()) != n * m)
    throw UsageError("linear_pair: A and B must have n*m entries");
  CatalogEntry e;
  e.id = "linear_pair";
  e.params = {{"m", m}, {"n", n}, {"A", A}, {"B", B}};
  e.map.m = m;
  e.map.q = 2;
  e.map.n = n;
  e.map.branch_consistent = true;
  e.map.eval = [=](std::span<const double> x, std::span<double> v) {
    for (int a = 0; a < n; ++a) {
      double sa = 0.0, sb = 0.0;
      for (int i = 0; i < m; ++i) {
        sa += A[a * m + i] * x[i];
        sb += B[a * m + i] * x[i];
      }
      v[a] = sa;
      v[n + a] = sb;
    }
  };
  e.map.jacobian = [=](std::span<const double>, std::span<double> J) {
    std::copy(A.begin(), A.end(), J.begin());
    std::copy(B.begin(), B.end(), J.begin() + n * m);
  };
  e.props = {1.0, true, true, true, true};
  e.base_point.assign(m, 0.0);
  return e;
}

CatalogEntry cone_1d(const json& p) {
  const int q = p.value("q", 2);
  const int n = p.value("n", 2);
  std::vector<double> tp = get_vec(p, "T_plus", {}), tm = get_vec(p, "T_minus", {});
  if (tp.empty()) {
    if (q != 2 || n != 2) throw UsageError("cone_1d: give T_plus and T_minus for non-default q, n");
    tp = {1.0, 0.0, -1.0, 0.0};
    tm = {0.0, 1.0, 0.0, -1.0};
  }
  if (static_cast<int>(tp.size()) != q * n || static_cast<int>(tm.size()) != q * n)
    throw UsageError("cone_1d: T_plus and T_minus must have q*n entries");
  CatalogEntry e;
  e.id = "cone_1d";
  e.params = {{"q", q}, {"n", n}, {"T_plus", tp}, {"T_minus", tm}};
  e.map.m = 1;
  e.map.q = q;
  e.map.n = n;
  e.map.eval = [=](std::span<const double> x, std::span<double> v) {
    const auto& T = x[0] > 0.0 ? tp : tm;
    for (int k = 0; k < q * n; ++k) v[k] = x[0] * T[k];
  };
  e.map.jacobian = [=](std::span<const double> x, std::span<double> J) {
    const auto& T = x[0] >= 0.0 ? tp : tm;
    std::copy(T.begin(), T.end(), J.begin());
  };
  // Derived flags: equal norms and means give a Dirichlet solution; the area
  // balances compare sum (1+|v|^2)^{-1/2} and sum v (1+|v|^2)^{-1/2}.
  const QPoint Tp(q, n, tp), Tm(q, n, tm);
  const auto ep = eta(Tp), em = eta(Tm);
  double dmean = 0.0;
  for (int k = 0; k < n; ++k) dmean += std::abs(ep[k] - em[k]);
  const bool dir = std::abs(g_norm(Tp) - g_norm(Tm)) < 1e-12 && dmean < 1e-12;
  double ip = 0.0, im = 0.0;
  std::vector<double> op(n, 0.0), om(n, 0.0);
  for (int l = 0; l < q; ++l) {
    double sp = 0.0, sm = 0.0;
    for (int k = 0; k < n; ++k) {
      sp += Tp.value(l)[k] * Tp.value(l)[k];
      sm += Tm.value(l)[k] * Tm.value(l)[k];
    }
    ip += 1.0 / std::sqrt(1.0 + sp);
    im += 1.0 / std::sqrt(1.0 + sm);
    for (int k = 0; k < n; ++k) {
      op[k] += Tp.value(l)[k] / std::sqrt(1.0 + sp);
      om[k] += Tm.value(l)[k] / std::sqrt(1.0 + sm);
    }
  }
  double dout = 0.0;
  for (int k = 0; k < n; ++k) dout += std::abs(op[k] - om[k]);
  e.props = {1.0, dout < 1e-12, std::abs(ip - im) < 1e-12, dir, false};
  e.props.graph_stationary = e.props.outer_area_stationary && e.props.inner_area_stationary;
  e.base_point = {0.0};
  return e;
}

void g_values(double slope, double x, double* v) {
  if (x > 0.0) {
    v[0] = slope * x;
    v[1] = -slope * x;
  } else {
    v[0] = v[1] = 0.0;
  }
}

void g_slopes(double slope, double x, double* d) {
  if (x > 0.0) {
    d[0] = slope;
    d[1] = -slope;
  } else {
    d[0] = d[1] = 0.0;
  }
}

CatalogEntry appendix_g(const json& p) {
  const double s = get_num(p, "slope", std::sqrt(3.0));
  CatalogEntry e;
  e.id = "appendix_g";
  e.params = {{"slope", s}};
  e.map.m = 1;
  e.map.q = 2;
  e.map.n = 1;
  e.map.eval = [s](std::span<const double> x, std::span<double> v) { g_values(s, x[0], v.data()); };
  e.map.jacobian = [s](std::span<const double> x, std::span<double> J) { g_slopes(s, x[0], J.data()); };
  e.props = {1.0, true, false, false, false};
  e.base_point = {0.0};
  return e;
}

CatalogEntry appendix_fa(const json& p) {
  const double s = get_num(p, "slope", std::sqrt(3.0));
  const double a = get_num(p, "a", 0.0);
  CatalogEntry e;
  e.id = "appendix_fa";
  e.params = {{"slope", s}, {"a", a}};
  e.map.m = 1;
  e.map.q = 4;
  e.map.n = 1;
  e.map.eval = [s, a](std::span<const double> x, std::span<double> v) {
    g_values(s, x[0], v.data());
    g_values(s, -x[0], v.data() + 2);
    v[0] += a;
    v[1] += a;
    v[2] -= a;
    v[3] -= a;
  };
  e.map.jacobian = [s](std::span<const double> x, std::span<double> J) {
    g_slopes(s, x[0], J.data());
    g_slopes(s, -x[0], J.data() + 2);
    J[2] = -J[2];
    J[3] = -J[3];
  };
  e.props = {std::nullopt, true, true, true, a == 0.0};
  if (a == 0.0) e.props.homogeneity = 1.0;
  e.base_point = {0.0};
  return e;
}

CatalogEntry branch_sqrt(const json&) {
  CatalogEntry e;
  e.id = "branch_sqrt";
  e.params = json::object();
  e.map.m = 2;
  e.map.q = 2;
  e.map.n = 2;
  e.map.eval = [](std::span<const double> x, std::span<double> v) {
    double re, im;
    zpow32(x[0], x[1], re, im);
    v[0] = re;
    v[1] = im;
    v[2] = -re;
    v[3] = -im;
  };
  e.map.jacobian = [](std::span<const double> x, std::span<double> J) {
    // d/dz z^{3/2} = (3/2) z^{1/2}
    const double r = std::hypot(x[0], x[1]);
    const double th = std::atan2(x[1], x[0]);
    const double a = 1.5 * std::sqrt(r) * std::cos(0.5 * th);
    const double b = 1.5 * std::sqrt(r) * std::sin(0.5 * th);
    conformal_block(a, b, J.subspan(0, 4));
    conformal_block(-a, -b, J.subspan(4, 4));
  };
  e.props = {1.5, true, true, true, true};
  e.base_point = {0.0, 0.0};
  return e;
}

CatalogEntry perturbed_plane(const json& p) {
  const double lambda = get_num(p, "lambda", 0.1);
  const double kappa = get_num(p, "kappa", 1.0);
  const double amp = get_num(p, "bump_amp", 5.0);
  const std::vector<double> c = get_vec(p, "bump_center", {0.3, 0.2});
  const double s = get_num(p, "bump_radius", 0.3);
  const std::vector<double> dir = get_vec(p, "bump_direction", {1.0, 0.5});
  CatalogEntry e;
  e.id = "perturbed_plane";
  e.params = {{"lambda", lambda}, {"kappa", kappa}, {"bump_amp", amp},
              {"bump_center", c}, {"bump_radius", s}, {"bump_direction", dir}};
  e.map.m = 2;
  e.map.q = 2;
  e.map.n = 2;
  // f = [[ lk sqrt(z) + l^2 w ]] + [[ -lk sqrt(z) + l^2 w ]],
  // w = amp * exp(-|x-c|^2 / (2 s^2)) * dir.
  auto bump = [=](std::span<const double> x, double* grad) {
    const double dx = x[0] - c[0], dy = x[1] - c[1];
    const double b = amp * std::exp(-(dx * dx + dy * dy) / (2.0 * s * s));
    if (grad) {
      grad[0] = -b * dx / (s * s);
      grad[1] = -b * dy / (s * s);
    }
    return b;
  };
  e.map.eval = [=](std::span<const double> x, std::span<double> v) {
    const double r = std::hypot(x[0], x[1]);
    const double th = std::atan2(x[1], x[0]);
    const double re = lambda * kappa * std::sqrt(r) * std::cos(0.5 * th);
    const double im = lambda * kappa * std::sqrt(r) * std::sin(0.5 * th);
    const double b = lambda * lambda * bump(x, nullptr);
    v[0] = re + b * dir[0];
    v[1] = im + b * dir[1];
    v[2] = -re + b * dir[0];
    v[3] = -im + b * dir[1];
  };
  e.map.jacobian = [=](std::span<const double> x, std::span<double> J) {
    const double r = std::hypot(x[0], x[1]);
    double a = 0.0, bb = 0.0;
    if (r > 0.0) {
      // d/dz sqrt(z) = 1 / (2 sqrt(z))
      const double th = std::atan2(x[1], x[0]);
      a = lambda * kappa * std::cos(-0.5 * th) / (2.0 * std::sqrt(r));
      bb = lambda * kappa * std::sin(-0.5 * th) / (2.0 * std::sqrt(r));
    }
    double g[2];
    bump(x, g);
    const double l2 = lambda * lambda;
    conformal_block(a, bb, J.subspan(0, 4));
    conformal_block(-a, -bb, J.subspan(4, 4));
    for (int half = 0; half < 2; ++half)
      for (int al = 0; al < 2; ++al)
        for (int i = 0; i < 2; ++i) J[half * 4 + al * 2 + i] += l2 * dir[al] * g[i];
  };
  e.props = {std::nullopt, false, false, false, false};
  e.base_point = {0.0, 0.0};
  return e;
}

}  // namespace

void zpow32(double x, double y, double& re, double& im) {
  const double r = std::hypot(x, y);
  const double th = std::atan2(y, x);
  const double a = r * std::sqrt(r);
  re = a * std::cos(1.5 * th);
  im = a * std::sin(1.5 * th);
}

std::vector<std::string> catalog_ids() {
  return {"linear_pair", "cone_1d", "appendix_g", "appendix_fa", "branch_sqrt", "perturbed_plane"};
}

CatalogEntry make_catalog(const std::string& id, const json& params) {
  const json p = params.is_null() ? json::object() : params;
  try {
    if (id == "linear_pair") return linear_pair(p);
    if (id == "cone_1d") return cone_1d(p);
    if (id == "appendix_g") return appendix_g(p);
    if (id == "appendix_fa") return appendix_fa(p);
    if (id == "branch_sqrt") return branch_sqrt(p);
    if (id == "perturbed_plane") return perturbed_plane(p);
  } catch (const json::exception& ex) {
    throw UsageError("bad parameters for " + id + ": " + ex.what());
  }
  throw UsageError("unknown catalog id '" + id + "'");
}

}  // namespace qvar
