#include "qvar/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qvar/parallel.hpp"

namespace qvar {

namespace {

double edge_energy_raw(const Grid& g, int q, int n, const std::vector<double>& v) {
  const std::size_t blk = static_cast<std::size_t>(q) * n;
  auto view = [&](std::size_t idx) {
    return QView{std::span<const double>(v.data() + idx * blk, blk), q, n};
  };
  const double s = deterministic_sum(g.size(), [&](std::size_t idx) {
    double e = 0.0;
    for (int i = 0; i < g.m; ++i) {
      const long nb = g.neighbor(idx, i, +1);
      if (nb >= 0) e += g_dist_sq(view(idx), view(nb));
    }
    return e;
  });
  return s * std::pow(g.h, g.m - 2);
}

struct Level {
  Grid grid;
  std::vector<char> fixed;
  std::vector<double> values;
};

std::vector<char> fixed_mask(const Grid& g, const Region& region) {
  std::vector<char> fx(g.size(), 0);
  std::vector<double> x(g.m);
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    g.coords(idx, x);
    fx[idx] = g.on_boundary(idx) || !region.contains(x);
  }
  return fx;
}

std::vector<double> trace_values(const QMap& map, const Grid& g) {
  const std::size_t blk = static_cast<std::size_t>(map.q) * map.n;
  std::vector<double> v(g.size() * blk);
  std::vector<double> x(g.m);
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    g.coords(idx, x);
    map.eval(x, std::span<double>(v.data() + idx * blk, blk));
  }
  return v;
}

// Runs sweeps on one level in place; returns the number of sweeps.
int relax_level(const RelaxationConfig& cfg, Level& lv, RelaxationReport* rep, bool record) {
  const Grid& g = lv.grid;
  const int q = cfg.boundary.q, n = cfg.boundary.n, m = g.m;
  const std::size_t blk = static_cast<std::size_t>(q) * n;
  const std::size_t N = g.size();
  int longest = 1;
  for (int e : g.extents) longest = std::max(longest, e - 1);
  const double omega =
      cfg.omega > 0.0 ? cfg.omega : 2.0 / (1.0 + std::sin(std::numbers::pi / longest));
  const int nperm = 2 * m;
  std::vector<int> perms(N * nperm * q, 0);
  std::vector<double> moves(N, 0.0);

  auto view = [&](std::size_t idx) {
    return QView{std::span<const double>(lv.values.data() + idx * blk, blk), q, n};
  };
  auto energy = [&]() { return edge_energy_raw(g, q, n, lv.values); };
  if (record && rep) rep->energy_history.push_back(energy());

  int it = 0;
  double movement = 0.0;
  for (it = 1; it <= cfg.max_iterations; ++it) {
    const bool refresh = cfg.refresh_period <= 1 || (it - 1) % cfg.refresh_period == 0;
    std::fill(moves.begin(), moves.end(), 0.0);
    for (int color = 0; color < 2; ++color) {
      parallel_for(N, [&](std::size_t b0, std::size_t b1) {
        std::vector<double> avg(blk);
        for (std::size_t idx = b0; idx < b1; ++idx) {
          if (lv.fixed[idx]) continue;
          const auto k = g.multi(idx);
          int parity = 0;
          for (int i = 0; i < m; ++i) parity += k[i];
          if ((parity & 1) != color) continue;
          std::fill(avg.begin(), avg.end(), 0.0);
          int count = 0;
          for (int i = 0; i < m; ++i)
            for (int s = 0; s < 2; ++s) {
              const long nb = g.neighbor(idx, i, s ? 1 : -1);
              if (nb < 0) continue;
              int* pp = &perms[(idx * nperm + 2 * i + s) * q];
              if (refresh) optimal_pairing(view(idx), view(nb), std::span<int>(pp, q));
              for (int l = 0; l < q; ++l)
                for (int c = 0; c < n; ++c) avg[l * n + c] += lv.values[nb * blk + pp[l] * n + c];
              ++count;
            }
          double mv = 0.0;
          for (std::size_t c = 0; c < blk; ++c) {
            double& v = lv.values[idx * blk + c];
            const double target = avg[c] / count;
            const double nv = v + omega * (target - v);
            mv = std::max(mv, std::abs(nv - v));
            v = nv;
          }
          moves[idx] = mv;
        }
      });
    }
    movement = *std::max_element(moves.begin(), moves.end());
    if (record && rep) rep->energy_history.push_back(energy());
    if (movement <= cfg.tolerance) break;
  }
  if (rep && record) {
    rep->final_movement = movement;
    rep->converged = movement <= cfg.tolerance;
  }
  return std::min(it, cfg.max_iterations);
}

}  // namespace

double edge_energy(const QField& f) { return edge_energy_raw(f.grid(), f.q(), f.n(), f.values()); }

QField dir_relax(const RelaxationConfig& cfg, RelaxationReport* report) {
  if (!(cfg.tolerance > 0.0)) throw UsageError("relaxation tolerance must be positive");
  if (!cfg.boundary.eval) throw UsageError("relaxation needs boundary data");
  if (cfg.boundary.m != cfg.grid.m) throw DimensionError("boundary map and grid dimensions differ");
  const int q = cfg.boundary.q, n = cfg.boundary.n;
  const std::size_t blk = static_cast<std::size_t>(q) * n;

  // Level hierarchy: halve while every extent is odd and stays >= 9.
  std::vector<Grid> grids{cfg.grid};
  while (cfg.nested) {
    const Grid& g = grids.back();
    bool ok = true;
    for (int e : g.extents) ok = ok && (e % 2 == 1) && (e + 1) / 2 >= 9;
    if (!ok) break;
    std::vector<int> ext;
    for (int e : g.extents) ext.push_back((e + 1) / 2);
    Grid coarse(g.origin, 2.0 * g.h, ext);
    grids.push_back(std::move(coarse));
  }

  RelaxationReport rep;
  std::vector<double> prev;
  Grid prev_grid;
  for (std::size_t lvl = grids.size(); lvl-- > 0;) {
    Level lv;
    lv.grid = grids[lvl];
    lv.fixed = fixed_mask(lv.grid, cfg.region);
    lv.values = trace_values(cfg.boundary, lv.grid);
    if (lvl + 1 == grids.size()) {
      if (cfg.zero_initial) {
        // Free nodes start at q[[mean of the fixed values]].
        std::vector<double> mean(n, 0.0);
        std::size_t cnt = 0;
        for (std::size_t idx = 0; idx < lv.grid.size(); ++idx)
          if (lv.fixed[idx]) {
            for (int l = 0; l < q; ++l)
              for (int c = 0; c < n; ++c) mean[c] += lv.values[idx * blk + l * n + c];
            cnt += q;
          }
        for (double& v : mean) v /= std::max<std::size_t>(cnt, 1);
        for (std::size_t idx = 0; idx < lv.grid.size(); ++idx)
          if (!lv.fixed[idx])
            for (int l = 0; l < q; ++l)
              for (int c = 0; c < n; ++c) lv.values[idx * blk + l * n + c] = mean[c];
      }
    } else {
      const QField coarse(prev_grid, q, n, prev);
      std::vector<double> x(lv.grid.m);
      for (std::size_t idx = 0; idx < lv.grid.size(); ++idx) {
        if (lv.fixed[idx]) continue;
        lv.grid.coords(idx, x);
        const QPoint p = interpolate(coarse, x);
        std::copy(p.flat().begin(), p.flat().end(), lv.values.begin() + idx * blk);
      }
    }
    const bool finest = lvl == 0;
    const int its = relax_level(cfg, lv, &rep, finest);
    if (finest) rep.iterations = its;
    prev = std::move(lv.values);
    prev_grid = lv.grid;
  }
  if (report) *report = rep;
  if (!rep.converged)
    throw ConvergenceError("relaxation stopped after " + std::to_string(rep.iterations) +
                           " sweeps with movement " + std::to_string(rep.final_movement));
  QField out(cfg.grid, q, n, std::move(prev));
  resolve_collapsed(out);
  return out;
}

}  // namespace qvar
