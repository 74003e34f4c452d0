#pragma once

// Arithmetic on the space of unordered Q-tuples A_Q(R^n).
//
// A Q-point is stored as q contiguous vectors of length n. Storage order is
// an implementation detail: every public operation is invariant under
// permutation of the stored values.

#include <span>
#include <vector>

#include "qvar/errors.hpp"

namespace qvar {

/// Non-owning view of q values in R^n laid out contiguously.
struct QView {
  std::span<const double> data;
  int q = 0;
  int n = 0;

  std::span<const double> value(int l) const {
    return data.subspan(static_cast<std::size_t>(l) * n, n);
  }
};

/// An element of A_Q(R^n): an unordered multiset of q vectors.
class QPoint {
 public:
  QPoint() = default;
  QPoint(int q, int n);
  QPoint(int q, int n, std::vector<double> values);

  /// q copies of the point p, i.e. q[[p]].
  static QPoint repeated(int q, std::span<const double> p);

  int q() const { return q_; }
  int n() const { return n_; }

  std::span<const double> value(int l) const {
    return {v_.data() + static_cast<std::size_t>(l) * n_,
            static_cast<std::size_t>(n_)};
  }
  std::span<double> value(int l) {
    return {v_.data() + static_cast<std::size_t>(l) * n_,
            static_cast<std::size_t>(n_)};
  }
  std::span<const double> flat() const { return v_; }
  std::span<double> flat() { return v_; }

  QView view() const { return {v_, q_, n_}; }
  operator QView() const { return view(); }

  /// Exact equality as multisets (same values, any order).
  bool same_multiset(const QPoint& other) const;

 private:
  int q_ = 0;
  int n_ = 0;
  std::vector<double> v_;
};

/// Squared distance between S and T under the given pairing
/// (value l of S is paired with value perm[l] of T).
double pairing_cost(QView s, QView t, std::span<const int> perm);

/// Optimal pairing realizing G. Writes the permutation into perm (size q)
/// and returns the minimal sum of squared distances. Exact enumeration for
/// q <= 6, Hungarian assignment above.
double optimal_pairing(QView s, QView t, std::span<int> perm);

/// The matching metric G(S, T).
double g_dist(QView s, QView t);

/// Squared matching metric; avoids the square root in hot loops.
double g_dist_sq(QView s, QView t);

/// |T| = G(T, q[[0]]).
double g_norm(QView t);

/// Arithmetic mean of the values (eta o T).
std::vector<double> eta(QView t);

/// T (-) v: every value shifted by -v.
QPoint ominus(QView t, std::span<const double> v);

/// T (-) q[[eta(T)]].
QPoint mean_free(QView t);

/// Minimum distance between two values that differ; 0 when all coincide.
double separation(QView t);

/// Maximum pairwise distance between values.
double diameter(QView t);

/// Concentration-compactness splitting data: centers p_j with
/// multiplicities Q_j and scale s, with |p_i - p_j| > 4 s.
struct SplitScheme {
  std::vector<std::vector<double>> centers;
  std::vector<int> multiplicities;
  double scale = 1.0;

  int total() const;
  int dim() const;
  /// Throws SchemeError when the separation invariant is violated.
  void validate() const;
  /// P = sum_j Q_j [[p_j]].
  QPoint anchor() const;
};

/// The retractions chi_j. Values are assigned to centers by the pairing
/// realizing G(T, P); a part farther than 2s from Q_j[[p_j]] is shrunk
/// radially onto that ball.
std::vector<QPoint> split_retraction(QView t, const SplitScheme& scheme);

/// Sum of Q-points of equal dimension, as a multiset union.
QPoint concat(std::span<const QPoint> parts);

/// Lift into R^{n+1}: part j becomes {(j, v - p_j)} with j counted from 1.
/// Coordinate 0 of the result is the extra direction e_0.
QPoint projection_map(QView t, const SplitScheme& scheme);

/// Piecewise-cubic partition of unity subordinate to (j - 2/3, j + 2/3).
double partition_weight(int j, double y0);

/// Almost-inverse of projection_map: (y0, y) -> y + sum_j sigma_j(y0) p_j.
QPoint recovery_map(QView s, const SplitScheme& scheme);

}  // namespace qvar
