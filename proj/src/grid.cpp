#include "qvar/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qvar {

Grid::Grid(std::vector<double> o, double hh, std::vector<int> ext)
    : m(static_cast<int>(o.size())), origin(std::move(o)), h(hh), extents(std::move(ext)) {
  validate();
}

Grid Grid::centered_box(int m, double half, double h) {
  const int k = static_cast<int>(std::lround(half / h));
  return Grid(std::vector<double>(m, -k * h), h, std::vector<int>(m, 2 * k + 1));
}

void Grid::validate() const {
  if (m < 1 || m > 3) throw DimensionError("grid dimension must be 1, 2 or 3");
  if (static_cast<int>(extents.size()) != m || static_cast<int>(origin.size()) != m)
    throw DimensionError("grid origin/extents length differs from m");
  if (!(h > 0.0)) throw DomainError("grid spacing must be positive");
  for (int e : extents)
    if (e < 1) throw DomainError("grid extents must be positive");
}

std::size_t Grid::size() const {
  std::size_t s = 1;
  for (int e : extents) s *= static_cast<std::size_t>(e);
  return s;
}

std::array<int, 3> Grid::multi(std::size_t idx) const {
  std::array<int, 3> k{0, 0, 0};
  for (int i = m - 1; i >= 0; --i) {
    k[i] = static_cast<int>(idx % extents[i]);
    idx /= extents[i];
  }
  return k;
}

std::size_t Grid::index(const std::array<int, 3>& k) const {
  std::size_t idx = 0;
  for (int i = 0; i < m; ++i) idx = idx * extents[i] + k[i];
  return idx;
}

void Grid::coords(std::size_t idx, std::span<double> x) const {
  const auto k = multi(idx);
  for (int i = 0; i < m; ++i) x[i] = origin[i] + h * k[i];
}

std::vector<double> Grid::coords(std::size_t idx) const {
  std::vector<double> x(m);
  coords(idx, x);
  return x;
}

long Grid::neighbor(std::size_t idx, int axis, int step) const {
  auto k = multi(idx);
  k[axis] += step;
  if (k[axis] < 0 || k[axis] >= extents[axis]) return -1;
  return static_cast<long>(index(k));
}

bool Grid::on_boundary(std::size_t idx) const {
  const auto k = multi(idx);
  for (int i = 0; i < m; ++i)
    if (extents[i] > 1 && (k[i] == 0 || k[i] == extents[i] - 1)) return true;
  return false;
}

double Grid::cell_volume() const { return std::pow(h, m); }

std::size_t Grid::nearest(std::span<const double> x) const {
  std::array<int, 3> k{0, 0, 0};
  for (int i = 0; i < m; ++i)
    k[i] = std::clamp(static_cast<int>(std::lround((x[i] - origin[i]) / h)), 0, extents[i] - 1);
  return index(k);
}

bool Grid::same_as(const Grid& o) const {
  return m == o.m && h == o.h && origin == o.origin && extents == o.extents;
}

Region Region::ball(std::vector<double> c, double r) {
  Region g;
  g.kind = Kind::Ball;
  g.center = std::move(c);
  g.radius = r;
  return g;
}

Region Region::box(std::vector<double> l, std::vector<double> u) {
  Region g;
  g.kind = Kind::Box;
  g.lo = std::move(l);
  g.hi = std::move(u);
  return g;
}

bool Region::contains(std::span<const double> x) const {
  switch (kind) {
    case Kind::Whole:
      return true;
    case Kind::Ball: {
      double d = 0.0;
      for (std::size_t i = 0; i < center.size(); ++i) d += (x[i] - center[i]) * (x[i] - center[i]);
      return d <= radius * radius;
    }
    case Kind::Box:
      for (std::size_t i = 0; i < lo.size(); ++i)
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
      return true;
  }
  return false;
}

void require_inside(const Grid& grid, const Region& region) {
  const double tol = 1e-9 * grid.h;
  if (region.kind == Region::Kind::Ball) {
    if (static_cast<int>(region.center.size()) != grid.m)
      throw DimensionError("region center dimension differs from grid");
    if (!(region.radius > 0.0)) throw DomainError("ball radius must be positive");
    for (int i = 0; i < grid.m; ++i)
      if (region.center[i] - region.radius < grid.lo(i) - tol ||
          region.center[i] + region.radius > grid.hi(i) + tol)
        throw DomainError("ball of radius " + std::to_string(region.radius) +
                          " leaves the grid along axis " + std::to_string(i));
  } else if (region.kind == Region::Kind::Box) {
    if (static_cast<int>(region.lo.size()) != grid.m || static_cast<int>(region.hi.size()) != grid.m)
      throw DimensionError("region box dimension differs from grid");
    for (int i = 0; i < grid.m; ++i)
      if (region.lo[i] < grid.lo(i) - tol || region.hi[i] > grid.hi(i) + tol)
        throw DomainError("box leaves the grid along axis " + std::to_string(i));
  }
}

namespace {

// Clipped 1-D overlap of [a,b] with [c,d], as a length.
double overlap(double a, double b, double c, double d) {
  return std::max(0.0, std::min(b, d) - std::max(a, c));
}

}  // namespace

std::vector<double> region_weights(const Grid& grid, const Region& region) {
  require_inside(grid, region);
  const std::size_t n = grid.size();
  std::vector<double> w(n, 0.0);
  const double h = grid.h;
  constexpr int kSub = 16;
  std::vector<double> x(grid.m), y(grid.m);
  for (std::size_t idx = 0; idx < n; ++idx) {
    grid.coords(idx, x);
    // Dual cell clipped to the grid box, per axis.
    std::array<double, 3> a{}, b{};
    double frac_box = 1.0;
    for (int i = 0; i < grid.m; ++i) {
      a[i] = std::max(x[i] - 0.5 * h, grid.lo(i));
      b[i] = std::min(x[i] + 0.5 * h, grid.hi(i));
      frac_box *= grid.extents[i] > 1 ? (b[i] - a[i]) / h : 1.0;
    }
    if (region.kind == Region::Kind::Whole) {
      w[idx] = frac_box;
      continue;
    }
    if (region.kind == Region::Kind::Box) {
      double f = 1.0;
      for (int i = 0; i < grid.m; ++i)
        f *= grid.extents[i] > 1 ? overlap(a[i], b[i], region.lo[i], region.hi[i]) / h : 1.0;
      w[idx] = f;
      continue;
    }
    // Ball.
    const double r = region.radius;
    if (grid.m == 1) {
      w[idx] = overlap(a[0], b[0], region.center[0] - r, region.center[0] + r) / h;
      continue;
    }
    double near = 0.0, far = 0.0;
    for (int i = 0; i < grid.m; ++i) {
      const double c = region.center[i];
      const double dn = std::max({a[i] - c, 0.0, c - b[i]});
      const double df = std::max(std::abs(a[i] - c), std::abs(b[i] - c));
      near += dn * dn;
      far += df * df;
    }
    if (far <= r * r) {
      w[idx] = frac_box;
      continue;
    }
    if (near >= r * r) continue;
    int inside = 0;
    std::array<int, 3> s{0, 0, 0};
    const int dims = grid.m;
    const int count = dims == 2 ? kSub * kSub : kSub * kSub * kSub;
    for (int t = 0; t < count; ++t) {
      int rem = t;
      for (int i = 0; i < dims; ++i) {
        s[i] = rem % kSub;
        rem /= kSub;
      }
      double d = 0.0;
      for (int i = 0; i < dims; ++i) {
        y[i] = x[i] - 0.5 * h + (s[i] + 0.5) * h / kSub;
        d += (y[i] - region.center[i]) * (y[i] - region.center[i]);
      }
      bool in_box = true;
      for (int i = 0; i < dims; ++i)
        if (y[i] < a[i] || y[i] > b[i]) in_box = false;
      if (in_box && d <= r * r) ++inside;
    }
    w[idx] = static_cast<double>(inside) / count;
  }
  return w;
}

}  // namespace qvar
