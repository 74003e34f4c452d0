#include "qvar/qfield.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <string>

#include "qvar/parallel.hpp"

namespace qvar {

double BranchGradient::energy_density(std::size_t node) const {
  const std::size_t blk = static_cast<std::size_t>(q) * n * m;
  double s = 0.0;
  for (std::size_t k = 0; k < blk; ++k) {
    const double v = d[node * blk + k];
    s += v * v;
  }
  return s;
}

double BranchGradient::max_norm(std::size_t node) const {
  double best = 0.0;
  for (int l = 0; l < q; ++l) {
    double s = 0.0;
    for (double v : at(node, l)) s += v * v;
    best = std::max(best, s);
  }
  return std::sqrt(best);
}

QField::QField(Grid grid, int q, int n, std::vector<double> values)
    : grid_(std::move(grid)), q_(q), n_(n), values_(std::move(values)) {
  grid_.validate();
  if (q <= 0 || n <= 0) throw DimensionError("q and n must be positive");
  if (values_.size() != grid_.size() * q * n)
    throw DimensionError("field has " + std::to_string(values_.size()) + " coordinates, expected " +
                         std::to_string(grid_.size() * q * n));
  refresh_gradient();
}

int QField::label(std::size_t node, int l) const {
  if (labels_.empty()) return -1;
  return labels_[node * q_ + l];
}

void QField::set_labels(std::vector<int> labels) {
  if (!labels.empty() && labels.size() != size() * q_)
    throw DimensionError("label array has wrong length");
  labels_ = std::move(labels);
}

void QField::set_collapsed(std::vector<char> mask) {
  if (!mask.empty() && mask.size() != size())
    throw DimensionError("collapsed mask has wrong length");
  collapsed_ = std::move(mask);
  refresh_gradient();
}

std::span<const double> QField::branch_value(std::size_t node, int b) const {
  if (labels_.empty()) return value(node, b);
  for (int l = 0; l < q_; ++l)
    if (labels_[node * q_ + l] == b) return value(node, l);
  return value(node, b);
}

void QField::refresh_gradient() {
  const Grid& g = grid_;
  const int m = g.m;
  const std::size_t N = g.size();
  grad_.m = m;
  grad_.q = q_;
  grad_.n = n_;
  grad_.d.assign(N * q_ * n_ * m, 0.0);
  grad_.one_sided.assign(N, 0);
  grad_.collapsed.assign(N, 0);
  const double h = g.h;
  parallel_for(N, [&](std::size_t b0, std::size_t b1) {
    std::vector<int> pp(q_), pm(q_);
    for (std::size_t idx = b0; idx < b1; ++idx) {
      const bool col = collapsed(idx);
      grad_.collapsed[idx] = col;
      QView c = at(idx);
      for (int i = 0; i < m; ++i) {
        const long ip = g.neighbor(idx, i, +1);
        const long im = g.neighbor(idx, i, -1);
        if (ip < 0 && im < 0) continue;  // degenerate axis
        const bool centered = !col && ip >= 0 && im >= 0;
        if (centered) {
          QView a = at(ip), b = at(im);
          optimal_pairing(c, a, pp);
          optimal_pairing(c, b, pm);
          for (int l = 0; l < q_; ++l)
            for (int k = 0; k < n_; ++k)
              grad_.d[((idx * q_ + l) * n_ + k) * m + i] =
                  (a.value(pp[l])[k] - b.value(pm[l])[k]) / (2.0 * h);
        } else {
          if (ip < 0 || im < 0) grad_.one_sided[idx] = 1;
          const bool fwd = ip >= 0;
          QView a = at(fwd ? ip : im);
          optimal_pairing(c, a, pp);
          const double sgn = fwd ? 1.0 : -1.0;
          for (int l = 0; l < q_; ++l)
            for (int k = 0; k < n_; ++k)
              grad_.d[((idx * q_ + l) * n_ + k) * m + i] =
                  sgn * (a.value(pp[l])[k] - c.value(l)[k]) / h;
        }
      }
    }
  });
}

QField QField::average() const {
  std::vector<double> v(size() * n_);
  for (std::size_t idx = 0; idx < size(); ++idx) {
    const auto e = eta(at(idx));
    std::copy(e.begin(), e.end(), v.begin() + idx * n_);
  }
  return QField(grid_, 1, n_, std::move(v));
}

QField QField::mean_free_field() const {
  std::vector<double> v(values_.size());
  const std::size_t blk = static_cast<std::size_t>(q_) * n_;
  for (std::size_t idx = 0; idx < size(); ++idx) {
    const QPoint p = mean_free(at(idx));
    std::copy(p.flat().begin(), p.flat().end(), v.begin() + idx * blk);
  }
  QField out(grid_, q_, n_, std::move(v));
  out.labels_ = labels_;
  out.set_collapsed(collapsed_);
  return out;
}

QField QField::shifted(std::span<const double> s) const {
  if (static_cast<int>(s.size()) != n_) throw DimensionError("shift has wrong dimension");
  std::vector<double> v(values_);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] -= s[k % n_];
  QField out(grid_, q_, n_, std::move(v));
  out.labels_ = labels_;
  out.set_collapsed(collapsed_);
  return out;
}

QField QField::scaled(double lambda) const {
  std::vector<double> v(values_);
  for (double& x : v) x *= lambda;
  QField out(grid_, q_, n_, std::move(v));
  out.labels_ = labels_;
  out.set_collapsed(collapsed_);
  return out;
}

void resolve_collapsed(QField& f) {
  std::vector<char> mask(f.size(), 0);
  if (f.q() > 1) {
    const double h = f.grid().h;
    for (std::size_t idx = 0; idx < f.size(); ++idx)
      mask[idx] = separation(f.at(idx)) <= h * f.gradient().max_norm(idx);
  }
  f.set_collapsed(std::move(mask));
}

QField sample(const QMap& map, const Grid& grid) {
  if (map.m != grid.m) throw DimensionError("map and grid dimensions differ");
  if (!map.eval) throw SamplingError("map has no evaluator");
  const std::size_t N = grid.size();
  const std::size_t blk = static_cast<std::size_t>(map.q) * map.n;
  std::vector<double> v(N * blk);
  std::vector<char> mask(N, 0);
  std::vector<double> x(grid.m), jac(blk * grid.m);
  for (std::size_t idx = 0; idx < N; ++idx) {
    grid.coords(idx, x);
    std::span<double> out(v.data() + idx * blk, blk);
    try {
      map.eval(x, out);
    } catch (const std::exception& e) {
      throw SamplingError("evaluation failed at node " + std::to_string(idx) + ": " + e.what());
    }
    for (double c : out)
      if (!std::isfinite(c)) throw SamplingError("non-finite value at node " + std::to_string(idx));
    if (map.jacobian && map.q > 1) {
      map.jacobian(x, jac);
      double best = 0.0;
      for (int l = 0; l < map.q; ++l) {
        double s = 0.0;
        for (std::size_t k = 0; k < static_cast<std::size_t>(map.n) * grid.m; ++k) {
          const double d = jac[l * map.n * grid.m + k];
          s += d * d;
        }
        best = std::max(best, s);
      }
      mask[idx] = separation(QView{out, map.q, map.n}) <= grid.h * std::sqrt(best);
    }
  }
  QField f(grid, map.q, map.n, std::move(v));
  if (map.jacobian) {
    f.set_collapsed(std::move(mask));
  } else {
    resolve_collapsed(f);
  }
  if (map.branch_consistent) {
    std::vector<int> labels(N * map.q);
    for (std::size_t idx = 0; idx < N; ++idx)
      for (int l = 0; l < map.q; ++l) labels[idx * map.q + l] = f.collapsed(idx) ? -1 : l;
    f.set_labels(std::move(labels));
  }
  return f;
}

double discrete_lipschitz(const QField& f) {
  const Grid& g = f.grid();
  double best = 0.0;
  for (std::size_t idx = 0; idx < f.size(); ++idx)
    for (int i = 0; i < g.m; ++i) {
      const long nb = g.neighbor(idx, i, +1);
      if (nb < 0) continue;
      best = std::max(best, g_dist(f.at(idx), f.at(nb)));
    }
  return best / g.h;
}

QField branch_decompose(const QField& field, double eps_sep, DecomposeReport* report) {
  const Grid& g = field.grid();
  const int q = field.q();
  const std::size_t N = field.size();
  if (eps_sep <= 0.0) eps_sep = 4.0 * discrete_lipschitz(field) * g.h;
  std::vector<double> sep(N);
  for (std::size_t idx = 0; idx < N; ++idx) sep[idx] = separation(field.at(idx));
  std::vector<int> labels(N * q, -1);
  std::vector<char> mask(N, 0);
  for (std::size_t idx = 0; idx < N; ++idx)
    if (q > 1 && !(sep[idx] > eps_sep)) mask[idx] = 1;

  DecomposeReport rep;
  rep.eps_sep = eps_sep;
  std::vector<int> perm(q);
  std::deque<std::size_t> queue;
  std::set<std::pair<std::size_t, std::size_t>> cuts;
  for (std::size_t seed = 0; seed < N; ++seed) {
    if (mask[seed] || labels[seed * q] >= 0) continue;
    ++rep.components;
    for (int l = 0; l < q; ++l) labels[seed * q + l] = l;
    queue.push_back(seed);
    while (!queue.empty()) {
      const std::size_t cur = queue.front();
      queue.pop_front();
      for (int i = 0; i < g.m; ++i)
        for (int step : {-1, 1}) {
          const long nb = g.neighbor(cur, i, step);
          if (nb < 0 || mask[nb]) continue;
          optimal_pairing(field.at(cur), field.at(nb), perm);
          bool ok = true;
          for (int l = 0; l < q && ok; ++l) {
            double d = 0.0;
            auto a = field.value(cur, l), b = field.value(nb, perm[l]);
            for (int k = 0; k < field.n(); ++k) d += (a[k] - b[k]) * (a[k] - b[k]);
            if (std::sqrt(d) >= 0.5 * eps_sep) ok = false;
          }
          if (!ok) {
            mask[nb] = 1;
            continue;
          }
          if (labels[nb * q] < 0) {
            for (int l = 0; l < q; ++l) labels[nb * q + perm[l]] = labels[cur * q + l];
            queue.push_back(nb);
          } else {
            for (int l = 0; l < q; ++l)
              if (labels[nb * q + perm[l]] != labels[cur * q + l]) {
                cuts.insert({std::min<std::size_t>(cur, nb), std::max<std::size_t>(cur, nb)});
                break;
              }
          }
        }
    }
  }
  for (std::size_t idx = 0; idx < N; ++idx)
    if (mask[idx])
      for (int l = 0; l < q; ++l) labels[idx * q + l] = -1;
  for (char c : mask) rep.collapsed_nodes += c ? 1 : 0;
  rep.cut_edges = cuts.size();
  if (report) *report = rep;

  QField out = field;
  out.set_labels(std::move(labels));
  out.set_collapsed(std::move(mask));
  return out;
}

std::vector<int> loop_monodromy(const QField& field, std::span<const std::size_t> loop) {
  const int q = field.q();
  std::vector<int> slot(q), perm(q);
  for (int l = 0; l < q; ++l) slot[l] = l;  // slot[l]: current index of value that started at l
  for (std::size_t k = 0; k < loop.size(); ++k) {
    const std::size_t a = loop[k];
    const std::size_t b = loop[(k + 1) % loop.size()];
    optimal_pairing(field.at(a), field.at(b), perm);
    for (int l = 0; l < q; ++l) slot[l] = perm[slot[l]];
  }
  return slot;
}

const BranchGradient& gradient(const QField& field) { return field.gradient(); }

double dirichlet_energy(const QField& field, const Region& region) {
  const auto w = region_weights(field.grid(), region);
  const auto& gr = field.gradient();
  return deterministic_sum(field.size(), [&](std::size_t idx) {
           return w[idx] == 0.0 ? 0.0 : w[idx] * gr.energy_density(idx);
         }) *
         field.grid().cell_volume();
}

double l2_distance(const QField& f, const QField& g, const Region& region) {
  if (!f.grid().same_as(g.grid())) throw DomainError("fields live on different grids");
  if (f.q() != g.q() || f.n() != g.n()) throw DimensionError("fields differ in q or n");
  const auto w = region_weights(f.grid(), region);
  const double s = deterministic_sum(f.size(), [&](std::size_t idx) {
    return w[idx] == 0.0 ? 0.0 : w[idx] * g_dist_sq(f.at(idx), g.at(idx));
  });
  return std::sqrt(s * f.grid().cell_volume());
}

double l2_norm_sq(const QField& f, const Region& region) {
  const auto w = region_weights(f.grid(), region);
  const double s = deterministic_sum(f.size(), [&](std::size_t idx) {
    if (w[idx] == 0.0) return 0.0;
    double a = 0.0;
    for (double v : f.at(idx).data) a += v * v;
    return w[idx] * a;
  });
  return s * f.grid().cell_volume();
}

QPoint interpolate(const QField& field, std::span<const double> x) {
  const Grid& g = field.grid();
  const int m = g.m, q = field.q(), n = field.n();
  std::array<int, 3> base{0, 0, 0};
  std::array<double, 3> t{0, 0, 0};
  for (int i = 0; i < m; ++i) {
    double s = (x[i] - g.origin[i]) / g.h;
    const double rs = std::round(s);
    if (std::abs(s - rs) < 1e-9) s = rs;
    if (s < -1e-9 || s > g.extents[i] - 1 + 1e-9)
      throw DomainError("interpolation point outside the grid");
    if (g.extents[i] == 1) {
      base[i] = 0;
      t[i] = 0.0;
      continue;
    }
    int k = static_cast<int>(std::floor(s));
    k = std::clamp(k, 0, g.extents[i] - 2);
    base[i] = k;
    t[i] = s - k;
  }
  // Exact node hit.
  bool on_node = true;
  for (int i = 0; i < m; ++i)
    if (t[i] != 0.0) on_node = false;
  if (on_node) {
    QView v = field.at(g.index(base));
    return QPoint(q, n, std::vector<double>(v.data.begin(), v.data.end()));
  }
  const int corners = 1 << m;
  std::vector<std::size_t> idx(corners);
  std::vector<double> wt(corners);
  for (int c = 0; c < corners; ++c) {
    auto k = base;
    double w = 1.0;
    for (int i = 0; i < m; ++i) {
      const int bit = (c >> i) & 1;
      if (g.extents[i] == 1 && bit) {
        w = 0.0;
        continue;
      }
      k[i] += bit;
      w *= bit ? t[i] : 1.0 - t[i];
    }
    idx[c] = g.index(k);
    wt[c] = w;
  }
  int ref = 0;
  double best = -1.0;
  for (int c = 0; c < corners; ++c) {
    if (wt[c] == 0.0) continue;
    const double s = separation(field.at(idx[c]));
    if (s > best) {
      best = s;
      ref = c;
    }
  }
  QPoint out(q, n);
  std::vector<int> perm(q);
  for (int c = 0; c < corners; ++c) {
    if (wt[c] == 0.0) continue;
    QView v = field.at(idx[c]);
    optimal_pairing(field.at(idx[ref]), v, perm);
    for (int l = 0; l < q; ++l)
      for (int k = 0; k < n; ++k) out.value(l)[k] += wt[c] * v.value(perm[l])[k];
  }
  return out;
}

QField rescale(const QField& field, std::span<const double> x0, double r, double lambda,
               const std::optional<Grid>& out_grid) {
  const Grid& src = field.grid();
  if (static_cast<int>(x0.size()) != src.m) throw DimensionError("x0 has wrong dimension");
  if (!(r > 0.0)) throw DomainError("rescale radius must be positive");
  const Grid dst = out_grid ? *out_grid : Grid::centered_box(src.m, 1.0, src.h / r);
  const double tol = 1e-9 * src.h;
  for (int i = 0; i < src.m; ++i) {
    const double a = x0[i] + r * dst.lo(i), b = x0[i] + r * dst.hi(i);
    if (a < src.lo(i) - tol || b > src.hi(i) + tol)
      throw DomainError("rescaled window leaves the source grid along axis " + std::to_string(i));
  }
  const std::size_t blk = static_cast<std::size_t>(field.q()) * field.n();
  std::vector<double> v(dst.size() * blk);
  parallel_for(dst.size(), [&](std::size_t b0, std::size_t b1) {
    std::vector<double> y(src.m), x(src.m);
    for (std::size_t idx = b0; idx < b1; ++idx) {
      dst.coords(idx, y);
      for (int i = 0; i < src.m; ++i) x[i] = x0[i] + r * y[i];
      const QPoint p = interpolate(field, x);
      for (std::size_t k = 0; k < blk; ++k) v[idx * blk + k] = lambda * p.flat()[k];
    }
  });
  QField out(dst, field.q(), field.n(), std::move(v));
  // When every output node lands on a source node, keep the source mask.
  std::vector<char> mask(dst.size(), 0);
  bool exact = !field.collapsed_mask().empty();
  std::vector<double> y(src.m);
  for (std::size_t idx = 0; idx < dst.size() && exact; ++idx) {
    dst.coords(idx, y);
    std::array<int, 3> k{0, 0, 0};
    for (int i = 0; i < src.m && exact; ++i) {
      const double s = (x0[i] + r * y[i] - src.origin[i]) / src.h;
      k[i] = static_cast<int>(std::lround(s));
      if (std::abs(s - k[i]) > 1e-9) exact = false;
    }
    if (exact) mask[idx] = field.collapsed(src.index(k));
  }
  if (exact) {
    out.set_collapsed(std::move(mask));
  } else {
    resolve_collapsed(out);
  }
  return out;
}

std::vector<std::size_t> collapsed_set(const QField& field, double eps) {
  if (!(eps > 0.0)) throw DomainError("collapsed_set needs eps > 0");
  std::vector<std::size_t> out;
  for (std::size_t idx = 0; idx < field.size(); ++idx) {
    const auto e = eta(field.at(idx));
    const QPoint rep = QPoint::repeated(field.q(), e);
    if (g_dist(field.at(idx), rep) <= eps) out.push_back(idx);
  }
  return out;
}

double box_dimension(const std::vector<std::vector<double>>& points,
                     const std::vector<double>& scales) {
  if (scales.size() < 3) throw EstimationError("box_dimension needs at least 3 scales");
  if (points.empty()) throw EstimationError("box_dimension of an empty set");
  std::vector<double> xs, ys;
  for (double s : scales) {
    if (!(s > 0.0)) throw EstimationError("scales must be positive");
    std::set<std::vector<long>> boxes;
    for (const auto& p : points) {
      std::vector<long> key(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) key[i] = static_cast<long>(std::floor(p[i] / s));
      boxes.insert(std::move(key));
    }
    xs.push_back(std::log(1.0 / s));
    ys.push_back(std::log(static_cast<double>(boxes.size())));
  }
  const double k = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / k;
    my += ys[i] / k;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0.0) throw EstimationError("scales are all equal");
  return sxy / sxx;
}

double box_dimension(const QField& field, const std::vector<std::size_t>& nodes,
                     const std::vector<double>& scales) {
  std::vector<std::vector<double>> pts;
  pts.reserve(nodes.size());
  for (std::size_t idx : nodes) pts.push_back(field.grid().coords(idx));
  return box_dimension(pts, scales);
}

double average_harmonicity_residual(const QField& field, const Region& region) {
  const Grid& g = field.grid();
  const int n = field.n();
  double worst = 0.0;
  std::vector<double> x(g.m);
  for (std::size_t idx = 0; idx < field.size(); ++idx) {
    if (g.on_boundary(idx)) continue;
    g.coords(idx, x);
    if (!region.contains(x)) continue;
    const auto c = eta(field.at(idx));
    std::vector<double> lap(n, 0.0);
    for (int i = 0; i < g.m; ++i) {
      const auto a = eta(field.at(g.neighbor(idx, i, +1)));
      const auto b = eta(field.at(g.neighbor(idx, i, -1)));
      for (int k = 0; k < n; ++k) lap[k] += a[k] + b[k] - 2.0 * c[k];
    }
    for (double v : lap) worst = std::max(worst, std::abs(v));
  }
  return worst;
}

}  // namespace qvar
