#include "qvar/frequency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qvar/parallel.hpp"

namespace qvar {

namespace {

double smooth5(double s) { return s * s * s * (s * (6.0 * s - 15.0) + 10.0); }
double dsmooth5(double s) { return 30.0 * s * s * (1.0 - s) * (1.0 - s); }

// Nodes of the axis box around B_r(x0), as per-axis index ranges.
struct BoxRange {
  std::array<int, 3> lo{0, 0, 0}, count{1, 1, 1};
  std::size_t size() const { return static_cast<std::size_t>(count[0]) * count[1] * count[2]; }
};

BoxRange ball_box(const Grid& g, std::span<const double> x0, double r) {
  BoxRange b;
  for (int i = 0; i < g.m; ++i) {
    const int a = std::max(0, static_cast<int>(std::floor((x0[i] - r - g.origin[i]) / g.h)));
    const int c = std::min(g.extents[i] - 1, static_cast<int>(std::ceil((x0[i] + r - g.origin[i]) / g.h)));
    b.lo[i] = a;
    b.count[i] = std::max(0, c - a + 1);
  }
  return b;
}

std::size_t box_node(const Grid& g, const BoxRange& b, std::size_t t) {
  std::array<int, 3> k{0, 0, 0};
  for (int i = g.m - 1; i >= 0; --i) {
    k[i] = b.lo[i] + static_cast<int>(t % b.count[i]);
    t /= b.count[i];
  }
  return g.index(k);
}

std::vector<double> log_radii(const std::vector<double>& r) {
  std::vector<double> out(r.size());
  for (std::size_t k = 0; k < r.size(); ++k) out[k] = std::log(r[k]);
  return out;
}

}  // namespace

double Cutoff::phi(double t) const {
  if (t <= 0.5) return 1.0;
  if (t >= 1.0) return 0.0;
  return 1.0 - smooth5(2.0 * t - 1.0);
}

double Cutoff::dphi(double t) const {
  if (t <= 0.5 || t >= 1.0) return 0.0;
  return -2.0 * dsmooth5(2.0 * t - 1.0);
}

double Cutoff::psi(double t) const {
  if (t <= 0.5 || t >= 1.0) return 0.0;
  return -dphi(t) / t;
}

FrequencyValue frequency(const QField& field, std::span<const double> x0, double r,
                         const Cutoff& cutoff) {
  const Grid& g = field.grid();
  if (static_cast<int>(x0.size()) != g.m) throw DimensionError("x0 has wrong dimension");
  require_inside(g, Region::ball(std::vector<double>(x0.begin(), x0.end()), r));
  const BoxRange box = ball_box(g, x0, r);
  const auto& gr = field.gradient();
  const int m = g.m, q = field.q(), n = field.n();
  const double h = g.h;
  double linf = 0.0;
  for (std::size_t t = 0; t < box.size(); ++t)
    for (double v : field.at(box_node(g, box, t)).data) linf = std::max(linf, std::abs(v));

  // grad |f|^2 = 2 sum_l Df_l^T f_l at a node.
  auto grad_sq = [&](std::size_t idx, double* out) {
    for (int i = 0; i < m; ++i) out[i] = 0.0;
    for (int l = 0; l < q; ++l) {
      const auto Df = gr.at(idx, l);
      const auto v = field.value(idx, l);
      for (int a = 0; a < n; ++a)
        for (int i = 0; i < m; ++i) out[i] += 2.0 * Df[a * m + i] * v[a];
    }
  };
  // Cell integrals by tensor Gauss rule; |Df|^2 is expanded to first order
  // on the dual cell, |f|^2 to second order.
  static constexpr double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                   0.8611363115940526};
  static constexpr double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                   0.3478548451374538};
  const double half_diag = 0.5 * h * std::sqrt(static_cast<double>(m));
  const double vol = g.cell_volume();
  struct Cell {
    double phi = 0.0, psi = 0.0;
  };
  auto cell_terms = [&](std::size_t idx) -> std::pair<double, double> {
    double x[3];
    g.coords(idx, std::span<double>(x, m));
    double d2 = 0.0;
    for (int i = 0; i < m; ++i) d2 += (x[i] - x0[i]) * (x[i] - x0[i]);
    const double d = std::sqrt(d2);
    if (d - half_diag >= r) return {0.0, 0.0};
    const double e = gr.energy_density(idx);
    if (d + half_diag <= 0.5 * r) return {e * vol, 0.0};
    double F = 0.0;
    for (double v : field.at(idx).data) F += v * v;
    double gF[3], Hs[3][3];
    grad_sq(idx, gF);
    for (int j = 0; j < m; ++j) {
      const long a = g.neighbor(idx, j, +1), b = g.neighbor(idx, j, -1);
      double ga[3], gb[3];
      if (a >= 0 && b >= 0) {
        grad_sq(static_cast<std::size_t>(a), ga);
        grad_sq(static_cast<std::size_t>(b), gb);
        for (int i = 0; i < m; ++i) Hs[i][j] = (ga[i] - gb[i]) / (2.0 * h);
      } else {
        for (int i = 0; i < m; ++i) {
          double s = 0.0;
          for (int l = 0; l < q; ++l) {
            const auto Df = gr.at(idx, l);
            for (int c = 0; c < n; ++c) s += 2.0 * Df[c * m + i] * Df[c * m + j];
          }
          Hs[i][j] = s;
        }
      }
    }
    double ge[3];
    for (int j = 0; j < m; ++j) {
      const long a = g.neighbor(idx, j, +1), b = g.neighbor(idx, j, -1);
      ge[j] = (a >= 0 && b >= 0) ? (gr.energy_density(a) - gr.energy_density(b)) / (2.0 * h) : 0.0;
    }
    Cell acc;
    const int pts = 1 << (2 * m);  // 4^m
    for (int p = 0; p < pts; ++p) {
      double w = 1.0, dl[3] = {0.0, 0.0, 0.0}, rr = 0.0;
      int code = p;
      for (int i = 0; i < m; ++i) {
        const int k = code & 3;
        code >>= 2;
        dl[i] = 0.5 * h * gx[k];
        w *= 0.5 * h * gw[k];
        const double y = x[i] + dl[i] - x0[i];
        rr += y * y;
      }
      const double t = std::sqrt(rr) / r;
      double ex = e;
      for (int i = 0; i < m; ++i) ex += ge[i] * dl[i];
      acc.phi += w * cutoff.phi(t) * ex;
      const double ps = cutoff.psi(t);
      if (ps == 0.0) continue;
      double Fx = F;
      for (int i = 0; i < m; ++i) {
        Fx += gF[i] * dl[i];
        for (int j = 0; j < m; ++j) Fx += 0.25 * (Hs[i][j] + Hs[j][i]) * dl[i] * dl[j];
      }
      acc.psi += w * ps * Fx;
    }
    return {acc.phi, acc.psi};
  };
  std::vector<double> dpart(box.size()), hpart(box.size());
  parallel_for(box.size(), [&](std::size_t b0, std::size_t b1) {
    for (std::size_t t = b0; t < b1; ++t) {
      const auto [a, b] = cell_terms(box_node(g, box, t));
      dpart[t] = a;
      hpart[t] = b;
    }
  });
  const double D = pairwise_sum(dpart.data(), dpart.size()) * std::pow(r, 2 - m);
  const double H = pairwise_sum(hpart.data(), hpart.size()) * std::pow(r, -m);
  const double floor = 1e-14 * linf * linf * std::pow(r, m);
  if (!(H > floor))
    throw VanishingH("H = " + std::to_string(H) + " at r = " + std::to_string(r) +
                     " is below the quadrature floor");
  return {D, H, D / H};
}

std::vector<double> default_ladder(const QField& field, std::span<const double> x0, int count) {
  const Grid& g = field.grid();
  double dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < g.m; ++i) dist = std::min({dist, x0[i] - g.lo(i), g.hi(i) - x0[i]});
  const double r_hi = 0.5 * dist;
  const double r_lo = 4.0 * g.h * g.m;
  if (!(r_hi > r_lo)) throw DomainError("base point too close to the boundary for a ladder");
  if (count < 2) throw EstimationError("ladder needs at least two radii");
  std::vector<double> r(count);
  for (int k = 0; k < count; ++k)
    r[k] = r_lo * std::pow(r_hi / r_lo, static_cast<double>(k) / (count - 1));
  return r;
}

FrequencyProfile frequency_profile(const QField& field, std::span<const double> x0,
                                   const std::vector<double>& radii, const Cutoff& cutoff) {
  FrequencyProfile p;
  p.x0.assign(x0.begin(), x0.end());
  p.radii = radii;
  for (double r : radii) {
    const auto v = frequency(field, x0, r, cutoff);
    p.D.push_back(v.D);
    p.H.push_back(v.H);
    p.I.push_back(v.I);
  }
  const std::size_t K = radii.size();
  p.dH_check.assign(K, std::numeric_limits<double>::quiet_NaN());
  const auto lr = log_radii(radii);
  for (std::size_t k = 1; k + 1 < K; ++k) {
    // r H' = H dlnH/dlnr
    const double slope = (std::log(p.H[k + 1]) - std::log(p.H[k - 1])) / (lr[k + 1] - lr[k - 1]);
    const double half_rHp = 0.5 * p.H[k] * slope;
    p.dH_check[k] = half_rHp / p.D[k] - 1.0;
  }
  return p;
}

double derivative_identity_check(const FrequencyProfile& p) {
  if (p.radii.size() < 3) throw EstimationError("derivative check needs at least 3 radii");
  double worst = 0.0;
  for (double e : p.dH_check)
    if (!std::isnan(e)) worst = std::max(worst, std::abs(e));
  return worst;
}

double monotonicity_check(const FrequencyProfile& p) {
  if (p.I.size() < 2) throw EstimationError("monotonicity check needs at least 2 radii");
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < p.I.size(); ++k) worst = std::min(worst, p.I[k + 1] - p.I[k]);
  return worst;
}

IntegrationHReport integration_h_check(const FrequencyProfile& p) {
  IntegrationHReport rep;
  const auto lr = log_radii(p.radii);
  const std::size_t K = p.radii.size();
  for (std::size_t a = 0; a < K; ++a) {
    double integral = 0.0;
    for (std::size_t b = a + 1; b < K; ++b) {
      integral += (p.I[b - 1] + p.I[b]) * (lr[b] - lr[b - 1]);  // trapezoid of 2I
      const double lhs = std::log(p.H[b] / p.H[a]);
      rep.derived_max_error = std::max(rep.derived_max_error, std::abs(lhs - integral));
      const double ratio = lr[b] - lr[a];
      const double lo = p.I[a] * ratio, hi = p.I[b] * ratio;
      const double tol = 1e-9 * std::max(1.0, std::abs(lhs));
      if (lhs < lo - tol || lhs > hi + tol) {
        rep.printed_form_holds = false;
        ++rep.printed_violations;
      }
    }
  }
  return rep;
}

HomogeneityFit homogeneity_degree(const QField& field, std::span<const double> x0, double r_in,
                                  double r_out) {
  const Grid& g = field.grid();
  const int m = g.m;
  double dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) dist = std::min({dist, x0[i] - g.lo(i), g.hi(i) - x0[i]});
  if (r_out <= 0.0) r_out = dist;
  if (r_in <= 0.0) r_in = 0.5 * r_out;
  const std::vector<double> lambdas{0.5, 0.25};
  const long stride = 4;  // lambda * offset stays on nodes
  const std::size_t c = g.nearest(x0);
  const auto kc = g.multi(c);
  std::vector<double> xc = g.coords(c);
  bool x0_on_node = true;
  for (int i = 0; i < m; ++i) x0_on_node = x0_on_node && std::abs(xc[i] - x0[i]) < 1e-12;

  struct Sample {
    double ln_lambda;
    QPoint near, far;  // f(x0 + lambda y), f(x0 + y)
  };
  std::vector<Sample> samples;
  std::vector<double> y(m), x(m);
  for (std::size_t idx = 0; idx < field.size(); ++idx) {
    const auto k = g.multi(idx);
    bool aligned = true;
    double d = 0.0;
    for (int i = 0; i < m; ++i) {
      y[i] = g.origin[i] + g.h * k[i] - x0[i];
      d += y[i] * y[i];
      if (x0_on_node && (k[i] - kc[i]) % stride != 0) aligned = false;
    }
    d = std::sqrt(d);
    if (!aligned || d < r_in || d > r_out) continue;
    QView fv = field.at(idx);
    const QPoint far(fv.q, fv.n, std::vector<double>(fv.data.begin(), fv.data.end()));
    for (double lam : lambdas) {
      for (int i = 0; i < m; ++i) x[i] = x0[i] + lam * y[i];
      samples.push_back({std::log(lam), interpolate(field, x), far});
    }
  }
  HomogeneityFit fit;
  fit.samples = samples.size();
  // Least squares for alpha in ln|f(x0+lambda y)| - ln|f(x0+y)| = alpha ln(lambda).
  double sxy = 0.0, sxx = 0.0;
  for (const auto& s : samples) {
    const double a = g_norm(s.near), b = g_norm(s.far);
    if (a <= 0.0 || b <= 0.0) continue;
    sxy += (std::log(a) - std::log(b)) * s.ln_lambda;
    sxx += s.ln_lambda * s.ln_lambda;
  }
  if (sxx == 0.0) throw CollapsedAnnulus("f vanishes on every annulus sample");
  fit.alpha = sxy / sxx;
  double num = 0.0, den = 0.0;
  for (const auto& s : samples) {
    QPoint scaled = s.far;
    const double f = std::exp(fit.alpha * s.ln_lambda);
    for (double& v : scaled.flat()) v *= f;
    num += g_dist_sq(s.near, scaled);
    den += g_norm(s.near) * g_norm(s.near);
  }
  fit.misfit = den > 0.0 ? std::sqrt(num / den) : 0.0;
  return fit;
}

QField frequency_blowup(const QField& field, std::span<const double> x0, double r,
                        const Cutoff& cutoff) {
  const auto v = frequency(field, x0, r, cutoff);
  return rescale(field, x0, r, 1.0 / std::sqrt(v.H));
}

ConeVerdict classify_1d(const QField& field, double tol) {
  const Grid& g = field.grid();
  if (g.m != 1) throw DimensionError("classify_1d needs a 1-D field");
  const int q = field.q(), n = field.n();
  std::vector<int> perm(q);
  auto fit_side = [&](int sign) {
    // Nodes with sign * t > 0.
    std::vector<std::size_t> nodes;
    for (std::size_t idx = 0; idx < field.size(); ++idx) {
      const double t = g.coords(idx)[0];
      if (sign * t > 0.0) nodes.push_back(idx);
    }
    QPoint T(q, n);
    if (nodes.empty()) return T;
    // Start from the outermost node, then alternate matching and averaging.
    const std::size_t far = sign > 0 ? nodes.back() : nodes.front();
    const double tf = g.coords(far)[0];
    for (int l = 0; l < q; ++l)
      for (int k = 0; k < n; ++k) T.value(l)[k] = field.value(far, l)[k] / tf;
    for (int iter = 0; iter < 50; ++iter) {
      QPoint acc(q, n);
      double tt = 0.0;
      for (std::size_t idx : nodes) {
        const double t = g.coords(idx)[0];
        QPoint model = T;
        for (double& v : model.flat()) v *= t;
        optimal_pairing(model, field.at(idx), perm);
        for (int l = 0; l < q; ++l)
          for (int k = 0; k < n; ++k) acc.value(l)[k] += t * field.value(idx, perm[l])[k];
        tt += t * t;
      }
      double change = 0.0;
      for (std::size_t k = 0; k < acc.flat().size(); ++k) {
        const double nv = acc.flat()[k] / tt;
        change = std::max(change, std::abs(nv - T.flat()[k]));
        T.flat()[k] = nv;
      }
      if (change < 1e-15) break;
    }
    return T;
  };
  const QPoint tp = fit_side(+1);
  const QPoint tm = fit_side(-1);
  ConeVerdict v;
  v.T_plus = tp;
  v.T_minus = tm;
  // Recompute the residual against the final fit (includes t = 0 nodes).
  double sum = 0.0;
  for (std::size_t idx = 0; idx < field.size(); ++idx) {
    const double t = g.coords(idx)[0];
    QPoint model = t > 0.0 ? tp : tm;
    for (double& x : model.flat()) x *= t;
    sum += g_dist_sq(model, field.at(idx));
  }
  v.misfit = std::sqrt(sum / (static_cast<double>(field.size()) * q));
  v.norm_gap = std::abs(g_norm(tp) - g_norm(tm));
  v.is_two_cone = v.misfit <= tol && v.norm_gap <= tol;
  return v;
}

}  // namespace qvar
