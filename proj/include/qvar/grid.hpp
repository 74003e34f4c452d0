#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "qvar/errors.hpp"

namespace qvar {

/// Uniform tensor grid in R^m (m <= 3). Node k along axis i sits at
/// origin[i] + h * k, k = 0 .. extents[i]-1.
struct Grid {
  int m = 1;
  std::vector<double> origin;
  double h = 1.0;
  std::vector<int> extents;

  Grid() = default;
  Grid(std::vector<double> origin, double h, std::vector<int> extents);

  /// Grid covering [-half, half]^m with spacing h (half/h rounded to nodes).
  static Grid centered_box(int m, double half, double h);

  std::size_t size() const;
  std::array<int, 3> multi(std::size_t idx) const;
  std::size_t index(const std::array<int, 3>& k) const;
  void coords(std::size_t idx, std::span<double> x) const;
  std::vector<double> coords(std::size_t idx) const;
  /// Neighbor along axis by step +-1, or -1 when it leaves the grid.
  long neighbor(std::size_t idx, int axis, int step) const;
  bool on_boundary(std::size_t idx) const;
  double lo(int axis) const { return origin[axis]; }
  double hi(int axis) const { return origin[axis] + h * (extents[axis] - 1); }
  double cell_volume() const;
  /// Nearest node to x (clamped to the grid).
  std::size_t nearest(std::span<const double> x) const;
  bool same_as(const Grid& other) const;

  void validate() const;
};

/// Integration region: whole grid box, a Euclidean ball or an axis box.
struct Region {
  enum class Kind { Whole, Ball, Box };
  Kind kind = Kind::Whole;
  std::vector<double> center;
  double radius = 0.0;
  std::vector<double> lo, hi;

  static Region whole() { return {}; }
  static Region ball(std::vector<double> c, double r);
  static Region box(std::vector<double> lo, std::vector<double> hi);

  bool contains(std::span<const double> x) const;
};

/// Quadrature weights in [0,1]: the fraction of each node's dual cell (clipped
/// to the grid box) lying in the region. Exact in 1-D; cut cells in 2-D/3-D
/// are subsampled. Multiply by cell_volume() to integrate.
std::vector<double> region_weights(const Grid& grid, const Region& region);

/// Throws DomainError when the region is not inside the grid box.
void require_inside(const Grid& grid, const Region& region);

}  // namespace qvar
