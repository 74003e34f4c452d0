#include "qvar/approximation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <queue>
#include <string>

#include "qvar/parallel.hpp"
#include "qvar/variations.hpp"

namespace qvar {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dist2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double ratio_or_zero(double num, double den) {
  if (num == 0.0) return 0.0;
  if (den == 0.0) return kInf;
  return num / den;
}

std::vector<double> energy_weights(const QField& field) {
  const auto& gr = field.gradient();
  std::vector<double> e(field.size());
  for (std::size_t idx = 0; idx < e.size(); ++idx) e[idx] = gr.energy_density(idx);
  return e;
}

// Weighted mean of node values over a region (0 when the region is empty).
double region_mean(const Grid& g, const std::vector<double>& v, const std::vector<double>& w,
                   double power = 1.0) {
  const double num = deterministic_sum(g.size(), [&](std::size_t i) {
    if (w[i] == 0.0) return 0.0;
    return w[i] * (power == 1.0 ? v[i] : std::pow(v[i], power));
  });
  const double den = deterministic_sum(g.size(), [&](std::size_t i) { return w[i]; });
  return den > 0.0 ? num / den : 0.0;
}

std::vector<double> ball_weights(const Grid& g, std::span<const double> c, double r) {
  const Region reg = Region::ball(std::vector<double>(c.begin(), c.end()), r);
  require_inside(g, reg);
  return region_weights(g, reg);
}

void check_center(const Grid& g, std::span<const double> x0) {
  if (static_cast<int>(x0.size()) != g.m) throw DimensionError("ball center has the wrong dimension");
}

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int k, std::vector<double>& x, std::vector<double>& w) {
  x.assign(k, 0.0);
  w.assign(k, 0.0);
  for (int i = 0; i < k; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (k + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int j = 2; j <= k; ++j) {
        const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = k * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double unit_ball_volume(int m) {
  switch (m) {
    case 1: return 2.0;
    case 2: return std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi / 3.0;
    default: throw DimensionError("unsupported dimension " + std::to_string(m));
  }
}

std::vector<Ball> ball_family(std::span<const double> base, int count, double spread, double r_max) {
  if (count < 2) throw UsageError("a ball family needs at least two balls");
  std::vector<Ball> out;
  for (int k = 0; k < count; ++k) {
    const double t = 6.0 * std::numbers::pi * k / count;
    const double rho = spread * (k % 5) / 4.0;
    Ball b;
    b.center.assign(base.begin(), base.end());
    if (!b.center.empty()) b.center[0] += rho * std::cos(t);
    if (b.center.size() > 1) b.center[1] += rho * std::sin(t);
    b.radius = r_max * (0.4 + 0.6 * ((7 * k) % count) / (count - 1.0));
    out.push_back(std::move(b));
  }
  return out;
}

double ball_mean(const QField& field, const std::vector<double>& node_values, const Ball& ball) {
  check_center(field.grid(), ball.center);
  return region_mean(field.grid(), node_values, ball_weights(field.grid(), ball.center, ball.radius));
}

// ---------------------------------------------------------------- excess

double point_cloud_diameter(const std::vector<double>& pts, int n) {
  const std::size_t N = n > 0 ? pts.size() / n : 0;
  if (N < 2) return 0.0;
  if (n == 1) {
    const auto [lo, hi] = std::minmax_element(pts.begin(), pts.end());
    return *hi - *lo;
  }
  if (n == 2) {
    std::vector<std::pair<double, double>> p(N);
    for (std::size_t i = 0; i < N; ++i) p[i] = {pts[2 * i], pts[2 * i + 1]};
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    if (p.size() < 2) return 0.0;
    auto cross = [](const auto& o, const auto& a, const auto& b) {
      return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
    };
    std::vector<std::pair<double, double>> hull(2 * p.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      while (k >= 2 && cross(hull[k - 2], hull[k - 1], p[i]) <= 0) --k;
      hull[k++] = p[i];
    }
    for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
      while (k >= t && cross(hull[k - 2], hull[k - 1], p[i]) <= 0) --k;
      hull[k++] = p[i];
    }
    hull.resize(k - 1);
    double best = 0.0;
    for (std::size_t i = 0; i < hull.size(); ++i)
      for (std::size_t j = i + 1; j < hull.size(); ++j) {
        const double dx = hull[i].first - hull[j].first, dy = hull[i].second - hull[j].second;
        best = std::max(best, dx * dx + dy * dy);
      }
    if (hull.size() < 2) {
      const double dx = p.front().first - p.back().first, dy = p.front().second - p.back().second;
      best = dx * dx + dy * dy;
    }
    return std::sqrt(best);
  }
  double best = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = i + 1; j < N; ++j)
      best = std::max(best, dist2(std::span<const double>(pts.data() + i * n, n),
                                  std::span<const double>(pts.data() + j * n, n)));
  return std::sqrt(best);
}

ExcessReport cyl_excess(const QField& field, std::span<const double> x0, double r) {
  const Grid& g = field.grid();
  check_center(g, x0);
  if (!(r > 0.0)) throw UsageError("excess radius must be positive");
  const auto w = ball_weights(g, x0, r);
  const auto& gr = field.gradient();
  const int q = field.q(), n = field.n(), m = g.m;
  const double integral = deterministic_sum(g.size(), [&](std::size_t idx) {
    if (w[idx] == 0.0) return 0.0;
    double s = 0.0;
    for (int l = 0; l < q; ++l) {
      const BranchMetric b = branch_metric(gr.at(idx, l), n, m);
      s += std::sqrt(b.det) * (m - b.ginv.trace());
    }
    return w[idx] * s;
  });
  ExcessReport rep;
  rep.E = std::max(0.0, integral * g.cell_volume() / (unit_ball_volume(m) * std::pow(r, m)));
  std::vector<double> pts;
  for (std::size_t idx = 0; idx < g.size(); ++idx)
    if (w[idx] > 0.0) {
      const QView v = field.at(idx);
      pts.insert(pts.end(), v.data.begin(), v.data.end());
    }
  rep.height = point_cloud_diameter(pts, n);
  return rep;
}

// ------------------------------------------------------- maximal function

std::vector<double> maximal_function(const Grid& g, const std::vector<double>& weight, int rho_max) {
  if (weight.size() != g.size()) throw DimensionError("weight size does not match the grid");
  const int m = g.m;
  const std::size_t N = g.size();
  std::array<int, 3> ext{1, 1, 1};
  for (int i = 0; i < m; ++i) ext[i] = g.extents[i];
  rho_max = std::max(0, rho_max);
  std::vector<double> M(weight);

  // Prefix sums along axis 0: P[idx(k0+1)] - P[idx(k0-w)] style via an auxiliary array.
  const int e0 = ext[0];
  const std::size_t rows = N / e0;
  auto row_node = [&](std::size_t row, int k0) {
    const std::array<int, 3> k{k0, static_cast<int>(row % ext[1]), static_cast<int>(row / ext[1])};
    return g.index(k);
  };
  std::vector<double> prefix(rows * (e0 + 1), 0.0);
  for (std::size_t row = 0; row < rows; ++row)
    for (int k0 = 0; k0 < e0; ++k0)
      prefix[row * (e0 + 1) + k0 + 1] = prefix[row * (e0 + 1) + k0] + weight[row_node(row, k0)];
  auto row_of = [&](int k1, int k2) { return static_cast<std::size_t>(k2) * ext[1] + k1; };

  struct Offset {
    int d1, d2, w;
  };
  std::vector<double> mean(N), slide(N);
  for (int rho = 1; rho <= rho_max; ++rho) {
    bool fits = true;
    for (int i = 0; i < m; ++i) fits = fits && 2 * rho + 1 <= ext[i];
    if (!fits) break;
    std::vector<Offset> offs;
    long count = 0;
    const int r1 = m >= 2 ? rho : 0, r2 = m >= 3 ? rho : 0;
    for (int d2 = -r2; d2 <= r2; ++d2)
      for (int d1 = -r1; d1 <= r1; ++d1) {
        const int rem = rho * rho - d1 * d1 - d2 * d2;
        if (rem < 0) continue;
        const int w = static_cast<int>(std::floor(std::sqrt(static_cast<double>(rem)) + 1e-12));
        offs.push_back({d1, d2, w});
        count += 2 * w + 1;
      }
    // Ball means at every admissible center.
    for (std::size_t row = 0; row < rows; ++row) {
      const int k1 = static_cast<int>(row % ext[1]), k2 = static_cast<int>(row / ext[1]);
      for (int k0 = 0; k0 < e0; ++k0) {
        const std::size_t c = row_node(row, k0);
        const bool ok = k0 - rho >= 0 && k0 + rho < e0 && (m < 2 || (k1 - rho >= 0 && k1 + rho < ext[1])) &&
                        (m < 3 || (k2 - rho >= 0 && k2 + rho < ext[2]));
        if (!ok) {
          mean[c] = -kInf;
          continue;
        }
        double s = 0.0;
        for (const Offset& o : offs) {
          const std::size_t rr = row_of(k1 + o.d1, k2 + o.d2);
          s += prefix[rr * (e0 + 1) + k0 + o.w + 1] - prefix[rr * (e0 + 1) + k0 - o.w];
        }
        mean[c] = s / count;
      }
    }
    // Dilate: M(x) = max over centers c with x in B(c) of mean[c].
    std::vector<int> widths;
    for (const Offset& o : offs) widths.push_back(o.w);
    std::sort(widths.begin(), widths.end());
    widths.erase(std::unique(widths.begin(), widths.end()), widths.end());
    std::vector<std::vector<double>> slides(widths.size(), std::vector<double>(N));
    for (std::size_t wi = 0; wi < widths.size(); ++wi) {
      const int w = widths[wi];
      for (std::size_t row = 0; row < rows; ++row) {
        std::deque<int> dq;  // indices k0 with decreasing mean
        int next = 0;
        for (int x = 0; x < e0; ++x) {
          const int hi = std::min(e0 - 1, x + w);
          while (next <= hi) {
            const double v = mean[row_node(row, next)];
            while (!dq.empty() && mean[row_node(row, dq.back())] <= v) dq.pop_back();
            dq.push_back(next++);
          }
          while (dq.front() < x - w) dq.pop_front();
          slides[wi][row_node(row, x)] = mean[row_node(row, dq.front())];
        }
      }
    }
    for (std::size_t row = 0; row < rows; ++row) {
      const int k1 = static_cast<int>(row % ext[1]), k2 = static_cast<int>(row / ext[1]);
      for (const Offset& o : offs) {
        const int j1 = k1 + o.d1, j2 = k2 + o.d2;
        if (j1 < 0 || j1 >= ext[1] || j2 < 0 || j2 >= ext[2]) continue;
        const std::size_t wi =
            std::lower_bound(widths.begin(), widths.end(), o.w) - widths.begin();
        const std::size_t src = row_of(j1, j2);
        for (int k0 = 0; k0 < e0; ++k0) {
          const double v = slides[wi][row_node(src, k0)];
          double& dst = M[row_node(row, k0)];
          if (v > dst) dst = v;
        }
      }
    }
  }
  return M;
}

std::vector<double> maximal_function(const QField& field, std::vector<double> weight, int rho_max) {
  if (weight.empty()) weight = energy_weights(field);
  return maximal_function(field.grid(), weight, rho_max);
}

// ------------------------------------------------------------ truncation

TruncationResult lipschitz_truncate(const QField& field, double gamma, const TruncationOptions& opt) {
  const Grid& g = field.grid();
  const int q = field.q(), n = field.n(), m = g.m;
  if (!(gamma > 0.0 && gamma < 0.5)) throw UsageError("gamma must lie in (0, 1/2)");
  std::vector<double> x0 = opt.x0.empty() ? std::vector<double>(m, 0.0) : opt.x0;
  check_center(g, x0);
  const double re = opt.excess_radius > 0.0 ? opt.excess_radius : opt.r;
  const ExcessReport ex = cyl_excess(field, x0, re);
  if (ex.E > opt.eps)
    throw ExcessTooLarge("excess " + std::to_string(ex.E) + " exceeds the threshold " +
                         std::to_string(opt.eps));

  const auto w = ball_weights(g, x0, opt.r);
  const double threshold = std::pow(ex.E, 2.0 * gamma);
  const std::vector<double> Mf = maximal_function(field, {}, opt.rho_max);
  const std::size_t N = g.size();
  const std::size_t blk = static_cast<std::size_t>(q) * n;

  TruncationResult res;
  res.K.assign(N, 0);
  std::vector<char> in(N, 0);
  for (std::size_t idx = 0; idx < N; ++idx) {
    in[idx] = w[idx] > 0.0;
    res.K[idx] = in[idx] && Mf[idx] <= threshold;
  }

  std::vector<double> vals = field.values();
  // Nearest-K initialization by multi-source breadth-first search inside the ball.
  std::vector<long> src(N, -1);
  std::queue<std::size_t> bfs;
  for (std::size_t idx = 0; idx < N; ++idx)
    if (res.K[idx]) {
      src[idx] = static_cast<long>(idx);
      bfs.push(idx);
    }
  std::vector<std::size_t> free_nodes;
  if (bfs.empty()) {
    const std::size_t c = g.nearest(x0);
    const auto mu = eta(field.at(c));
    for (std::size_t idx = 0; idx < N; ++idx)
      if (in[idx]) {
        for (int l = 0; l < q; ++l)
          std::copy(mu.begin(), mu.end(), vals.begin() + idx * blk + l * n);
      }
  } else {
    while (!bfs.empty()) {
      const std::size_t idx = bfs.front();
      bfs.pop();
      for (int i = 0; i < m; ++i)
        for (int s = -1; s <= 1; s += 2) {
          const long nb = g.neighbor(idx, i, s);
          if (nb < 0 || !in[nb] || src[nb] >= 0) continue;
          src[nb] = src[idx];
          bfs.push(static_cast<std::size_t>(nb));
        }
    }
    for (std::size_t idx = 0; idx < N; ++idx) {
      if (!in[idx] || res.K[idx]) continue;
      free_nodes.push_back(idx);
      if (src[idx] >= 0)
        std::copy_n(field.values().begin() + src[idx] * blk, blk, vals.begin() + idx * blk);
    }
    // Matched minimax sweeps off K (K and the outside held fixed): every value
    // moves to the componentwise midrange of its matched neighbor values.
    std::vector<int> perm(q);
    std::vector<double> lo(blk), hi(blk);
    auto view = [&](std::size_t idx) {
      return QView{std::span<const double>(vals.data() + idx * blk, blk), q, n};
    };
    for (int sweep = 0; sweep < opt.smoothing_sweeps; ++sweep) {
      double moved = 0.0;
      for (std::size_t idx : free_nodes) {
        std::fill(lo.begin(), lo.end(), kInf);
        std::fill(hi.begin(), hi.end(), -kInf);
        int cnt = 0;
        for (int i = 0; i < m; ++i)
          for (int s = -1; s <= 1; s += 2) {
            const long nb = g.neighbor(idx, i, s);
            if (nb < 0 || !in[nb]) continue;
            optimal_pairing(view(idx), view(nb), perm);
            for (int l = 0; l < q; ++l)
              for (int c = 0; c < n; ++c) {
                const double v = vals[nb * blk + perm[l] * n + c];
                lo[l * n + c] = std::min(lo[l * n + c], v);
                hi[l * n + c] = std::max(hi[l * n + c], v);
              }
            ++cnt;
          }
        if (cnt == 0) continue;
        for (std::size_t c = 0; c < blk; ++c) {
          const double nv = 0.5 * (lo[c] + hi[c]);
          moved = std::max(moved, std::abs(nv - vals[idx * blk + c]));
          vals[idx * blk + c] = nv;
        }
      }
      if (moved <= opt.smoothing_tol) break;
    }
  }
  res.fhat = QField(g, q, n, std::move(vals));
  resolve_collapsed(res.fhat);

  TruncationStats& st = res.stats;
  st.E = ex.E;
  st.gamma = gamma;
  st.threshold = threshold;
  for (std::size_t idx = 0; idx < N; ++idx) {
    if (!in[idx]) continue;
    if (!res.K[idx]) {
      ++st.bad_nodes;
      st.bad_measure += w[idx];
    }
    for (int i = 0; i < m; ++i) {
      const long nb = g.neighbor(idx, i, +1);
      if (nb < 0 || !in[nb]) continue;
      st.lip = std::max(st.lip, g_dist(res.fhat.at(idx), res.fhat.at(nb)) / g.h);
    }
  }
  st.bad_measure *= g.cell_volume();
  const Region ball = Region::ball(x0, opt.r);
  const double vol = deterministic_sum(N, [&](std::size_t i) { return w[i]; }) * g.cell_volume();
  st.area_gap = std::abs(area(res.fhat, ball) - q * vol - 0.5 * dirichlet_energy(res.fhat, ball));
  const double l2 = l2_distance(field, res.fhat, ball);
  st.l2_gap = l2 * l2;
  return res;
}

// ------------------------------------------------------- ball-family checks

double reverse_holder_check(const QField& field, double p, const std::vector<Ball>& balls) {
  if (balls.empty()) throw EstimationError("empty ball family");
  if (!(p >= 1.0)) throw UsageError("reverse Hoelder exponent must be >= 1");
  const Grid& g = field.grid();
  const auto e = energy_weights(field);
  std::vector<double> ratios(balls.size(), 0.0);
  for (const Ball& b : balls) {
    check_center(g, b.center);
    require_inside(g, Region::ball(b.center, 2.0 * b.radius));
  }
  parallel_for(balls.size(), [&](std::size_t b0, std::size_t b1) {
    for (std::size_t k = b0; k < b1; ++k) {
      const Ball& b = balls[k];
      const double num = std::pow(region_mean(g, e, ball_weights(g, b.center, b.radius), p), 1.0 / p);
      const double den = region_mean(g, e, ball_weights(g, b.center, 2.0 * b.radius));
      ratios[k] = ratio_or_zero(num, den);
    }
  });
  return *std::max_element(ratios.begin(), ratios.end());
}

KeyEstimateReport key_estimate_check(const QField& field, const std::vector<Ball>& balls, double L) {
  if (balls.empty()) throw EstimationError("empty ball family");
  if (!(L >= 0.0)) throw UsageError("Lipschitz constant must be nonnegative");
  const Grid& g = field.grid();
  KeyEstimateReport rep;
  rep.M = 5.0 * (L + 1.0);
  const auto e = energy_weights(field);
  std::vector<double> root(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) root[i] = std::sqrt(e[i]);
  for (const Ball& b : balls) {
    check_center(g, b.center);
    require_inside(g, Region::ball(b.center, rep.M * b.radius));
  }
  std::vector<double> slack(balls.size());
  parallel_for(balls.size(), [&](std::size_t b0, std::size_t b1) {
    for (std::size_t k = b0; k < b1; ++k) {
      const Ball& b = balls[k];
      const double lhs = region_mean(g, e, ball_weights(g, b.center, b.radius));
      const auto wb = ball_weights(g, b.center, rep.M * b.radius);
      const double rhs = std::sqrt(region_mean(g, e, wb)) * region_mean(g, root, wb);
      slack[k] = rhs - lhs;
    }
  });
  rep.worst_slack = *std::min_element(slack.begin(), slack.end());
  return rep;
}

// ---------------------------------------------------------- mass ratio

double mass_ratio(const QMap& map, std::span<const double> p, double r, const MassOptions& opt) {
  const int m = map.m, q = map.q, n = map.n;
  if (m < 1 || m > 2) throw DimensionError("mass ratio supports m = 1 or 2");
  if (static_cast<int>(p.size()) != m + n) throw DimensionError("point must lie in R^{m+n}");
  if (!map.jacobian) throw UsageError("mass ratio needs the Jacobian of the map");
  if (!(r > 0.0)) throw UsageError("radius must be positive");
  const std::span<const double> u = p.subspan(m);

  std::vector<double> gx, gw;
  gauss_legendre(std::max(2, opt.gauss_points), gx, gw);
  std::vector<double> vals(static_cast<std::size_t>(q) * n), jac(static_cast<std::size_t>(q) * n * m);
  std::vector<double> x(m);
  std::vector<std::pair<double, int>> ranked(q);

  auto rank_at = [&](std::span<const double> dir, double t) {
    for (int i = 0; i < m; ++i) x[i] = p[i] + t * dir[i];
    map.eval(x, vals);
    for (int l = 0; l < q; ++l)
      ranked[l] = {dist2(std::span<const double>(vals.data() + l * n, n), u), l};
    std::sort(ranked.begin(), ranked.end());
  };
  // Largest t with t^2 + d_k(t)^2 <= r^2 before the first exit.
  auto exit_radius = [&](std::span<const double> dir, int k) {
    auto F = [&](double t) {
      rank_at(dir, t);
      return t * t + ranked[k].first - r * r;
    };
    if (F(0.0) > 0.0) return 0.0;
    const int steps = 64;
    double lo = 0.0, hi = r;
    for (int s = 1; s <= steps; ++s) {
      const double t = r * s / steps;
      if (F(t) > 0.0) {
        hi = t;
        break;
      }
      lo = t;
      if (s == steps) return r;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-16 * r; ++it) {
      const double mid = 0.5 * (lo + hi);
      (F(mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
  };
  auto ray_mass = [&](std::span<const double> dir) {
    std::vector<double> tstar(q + 1, 0.0);
    for (int k = 0; k < q; ++k) tstar[k] = exit_radius(dir, k);
    double total = 0.0;
    for (int k = 0; k < q; ++k) {
      const double a = tstar[k + 1], b = tstar[k];
      if (!(b > a)) continue;
      double piece = 0.0;
      for (std::size_t gi = 0; gi < gx.size(); ++gi) {
        const double t = 0.5 * (a + b) + 0.5 * (b - a) * gx[gi];
        rank_at(dir, t);
        map.jacobian(x, jac);
        double s = 0.0;
        for (int j = 0; j <= k; ++j) {
          const int l = ranked[j].second;
          s += std::sqrt(branch_metric(std::span<const double>(jac.data() + l * n * m, n * m), n, m).det);
        }
        piece += gw[gi] * s * (m == 2 ? t : 1.0);
      }
      total += 0.5 * (b - a) * piece;
    }
    return total;
  };

  double mass = 0.0;
  if (m == 1) {
    for (double s : {1.0, -1.0}) mass += ray_mass(std::span<const double>(&s, 1));
  } else {
    const int A = std::max(4, opt.angles);
    double sum = 0.0;
    for (int a = 0; a < A; ++a) {
      const double th = 2.0 * std::numbers::pi * a / A;
      const double dir[2] = {std::cos(th), std::sin(th)};
      sum += ray_mass(dir);
    }
    mass = sum * 2.0 * std::numbers::pi / A;
  }
  return mass / (unit_ball_volume(m) * std::pow(r, m));
}

double mass_ratio(const QField& field, std::span<const double> p, double r, const MassOptions& opt) {
  const Grid& g = field.grid();
  const int m = g.m, q = field.q(), n = field.n();
  for (int i = 0; i < m; ++i)
    if (p[i] - r < g.lo(i) - 1e-12 || p[i] + r > g.hi(i) + 1e-12)
      throw DomainError("extrinsic ball leaves the grid");
  QMap map;
  map.m = m;
  map.q = q;
  map.n = n;
  map.eval = [&field](std::span<const double> x, std::span<double> out) {
    const QPoint v = interpolate(field, x);
    std::copy(v.flat().begin(), v.flat().end(), out.begin());
  };
  map.jacobian = [&field, m, q, n](std::span<const double> x, std::span<double> jac) {
    const Grid& gg = field.grid();
    const QPoint c = interpolate(field, x);
    std::vector<double> y(x.begin(), x.end());
    std::vector<int> perm(q);
    for (int i = 0; i < m; ++i) {
      const double d = 0.5 * gg.h;
      y[i] = std::min(x[i] + d, gg.hi(i));
      const QPoint fp = interpolate(field, y);
      const double tp = y[i] - x[i];
      y[i] = std::max(x[i] - d, gg.lo(i));
      const QPoint fm = interpolate(field, y);
      const double tm = x[i] - y[i];
      y[i] = x[i];
      std::vector<int> pp(q), pm(q);
      optimal_pairing(c, fp, pp);
      optimal_pairing(c, fm, pm);
      for (int l = 0; l < q; ++l)
        for (int a = 0; a < n; ++a)
          jac[(l * n + a) * m + i] = (fp.value(pp[l])[a] - fm.value(pm[l])[a]) / (tp + tm);
    }
  };
  return mass_ratio(map, p, r, opt);
}

double density_estimate(const QMap& map, std::span<const double> p, const std::vector<double>& radii,
                        const MassOptions& opt) {
  if (radii.size() < 3) throw EstimationError("density extrapolation needs three radii");
  std::vector<double> r(radii);
  std::sort(r.begin(), r.end());
  r.resize(3);
  double th[3];
  for (int i = 0; i < 3; ++i) th[i] = mass_ratio(map, p, r[i], opt);
  // Lagrange interpolation of a quadratic, evaluated at 0.
  double est = 0.0;
  for (int i = 0; i < 3; ++i) {
    double li = 1.0;
    for (int j = 0; j < 3; ++j)
      if (j != i) li *= (0.0 - r[j]) / (r[i] - r[j]);
    est += li * th[i];
  }
  return est;
}

// ----------------------------------------------------------- persistence

PersistenceReport persistence_check(const QField& field, std::size_t y0, const std::vector<double>& radii,
                                    double tol) {
  const Grid& g = field.grid();
  if (y0 >= g.size()) throw UsageError("node index out of range");
  const QView p = field.at(y0);
  if (diameter(p) > tol) throw PreconditionError("values at the base node do not coincide");
  const auto t = eta(p);
  const auto c = g.coords(y0);
  const int m = g.m, q = field.q();
  const auto e = energy_weights(field);

  PersistenceReport rep;
  std::vector<double> lx, ly;
  std::vector<double> x(m);
  for (double r : radii) {
    const auto w4 = ball_weights(g, c, 4.0 * r);
    double lhs = 0.0;
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
      g.coords(idx, x);
      if (dist2(x, c) > r * r * (1.0 + 1e-12)) continue;
      double s = 0.0;
      for (int l = 0; l < q; ++l) s += dist2(field.value(idx, l), t);
      lhs = std::max(lhs, s);
    }
    const double mean4 = region_mean(g, e, w4);
    const double int4 = deterministic_sum(g.size(), [&](std::size_t i) { return w4[i] * e[i]; }) *
                        g.cell_volume();
    rep.radii.push_back(r);
    rep.lhs.push_back(lhs);
    rep.C.push_back(ratio_or_zero(lhs, r * r * mean4));
    rep.C_printed.push_back(ratio_or_zero(lhs, std::pow(r, 2 + m) * int4));
    if (lhs > 0.0) {
      lx.push_back(std::log(r));
      ly.push_back(std::log(lhs));
    }
  }
  auto spread = [](const std::vector<double>& v) {
    double lo = kInf, hi = 0.0;
    for (double c : v)
      if (c > 0.0) {
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      }
    return hi > 0.0 ? hi / lo : 1.0;
  };
  for (double cc : rep.C) rep.C_max = std::max(rep.C_max, cc);
  rep.C_spread = spread(rep.C);
  rep.C_printed_spread = spread(rep.C_printed);
  rep.lhs_slope = lsq_slope(lx, ly);
  return rep;
}

double linfty_l2_check(const QField& field, std::span<const double> center, double R,
                       const std::vector<std::vector<double>>& ts) {
  const Grid& g = field.grid();
  check_center(g, center);
  const int q = field.q(), n = field.n(), m = g.m;
  const auto w2 = ball_weights(g, center, 2.0 * R);
  std::vector<std::vector<double>> cand(ts);
  if (cand.empty()) cand.push_back(eta(field.at(g.nearest(center))));
  std::vector<double> x(m), sq(g.size());
  double worst = 0.0;
  for (const auto& t : cand) {
    if (static_cast<int>(t.size()) != n) throw DimensionError("shift has the wrong dimension");
    double sup = 0.0;
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
      double s = 0.0;
      for (int l = 0; l < q; ++l) s += dist2(field.value(idx, l), t);
      sq[idx] = s;
      g.coords(idx, x);
      if (dist2(x, center) <= R * R * (1.0 + 1e-12)) sup = std::max(sup, s);
    }
    worst = std::max(worst, ratio_or_zero(sup, region_mean(g, sq, w2)));
  }
  return worst;
}

HarmonicComparison harmonic_compare(const QField& f, const QField& u, std::span<const double> x0, double r) {
  if (!f.grid().same_as(u.grid()) || f.q() != u.q() || f.n() != u.n())
    throw DimensionError("fields do not share a grid and target");
  const Grid& g = f.grid();
  check_center(g, x0);
  const auto w = ball_weights(g, x0, r);
  const auto ef = energy_weights(f), eu = energy_weights(u);
  const QField af = f.average(), au = u.average();
  const auto& gf = af.gradient();
  const auto& gu = au.gradient();
  const int m = g.m, n = f.n();
  const double vol = g.cell_volume();
  HarmonicComparison hc;
  hc.e_l2 = deterministic_sum(g.size(), [&](std::size_t i) {
              return w[i] == 0.0 ? 0.0 : w[i] * g_dist_sq(f.at(i), u.at(i));
            }) * vol / (r * r);
  hc.e_grad = deterministic_sum(g.size(), [&](std::size_t i) {
                if (w[i] == 0.0) return 0.0;
                const double d = std::sqrt(ef[i]) - std::sqrt(eu[i]);
                return w[i] * d * d;
              }) * vol;
  hc.e_avg = deterministic_sum(g.size(), [&](std::size_t i) {
               if (w[i] == 0.0) return 0.0;
               const auto a = gf.at(i, 0), b = gu.at(i, 0);
               double s = 0.0;
               for (int k = 0; k < n * m; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
               return w[i] * s;
             }) * vol;
  hc.E = cyl_excess(f, x0, r).E;
  const double den = hc.E * std::pow(r, m);
  hc.ratio_l2 = ratio_or_zero(hc.e_l2, den);
  hc.ratio_grad = ratio_or_zero(hc.e_grad, den);
  hc.ratio_avg = ratio_or_zero(hc.e_avg, den);
  return hc;
}

}  // namespace qvar
