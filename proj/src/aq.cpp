#include "qvar/aq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qvar/assignment.hpp"

namespace qvar {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

void require_same_shape(QView s, QView t) {
  if (s.q != t.q || s.n != t.n) {
    throw DimensionError("Q-point shapes differ: (" + std::to_string(s.q) +
                         "," + std::to_string(s.n) + ") vs (" +
                         std::to_string(t.q) + "," + std::to_string(t.n) +
                         ")");
  }
}

}  // namespace

QPoint::QPoint(int q, int n) : q_(q), n_(n), v_(static_cast<std::size_t>(q) * n, 0.0) {
  if (q <= 0 || n <= 0) throw DimensionError("q and n must be positive");
}

QPoint::QPoint(int q, int n, std::vector<double> values)
    : q_(q), n_(n), v_(std::move(values)) {
  if (q <= 0 || n <= 0) throw DimensionError("q and n must be positive");
  if (v_.size() != static_cast<std::size_t>(q) * n) {
    throw DimensionError("expected " + std::to_string(q * n) +
                         " coordinates, got " + std::to_string(v_.size()));
  }
}

QPoint QPoint::repeated(int q, std::span<const double> p) {
  QPoint out(q, static_cast<int>(p.size()));
  for (int l = 0; l < q; ++l) std::copy(p.begin(), p.end(), out.value(l).begin());
  return out;
}

bool QPoint::same_multiset(const QPoint& other) const {
  if (q_ != other.q_ || n_ != other.n_) return false;
  std::vector<char> taken(q_, 0);
  for (int l = 0; l < q_; ++l) {
    bool found = false;
    for (int k = 0; k < q_ && !found; ++k) {
      if (taken[k]) continue;
      auto a = value(l);
      auto b = other.value(k);
      if (std::equal(a.begin(), a.end(), b.begin())) {
        taken[k] = 1;
        found = true;
      }
    }
    if (!found) return false;
  }
  return true;
}

double pairing_cost(QView s, QView t, std::span<const int> perm) {
  double c = 0.0;
  for (int l = 0; l < s.q; ++l) c += sq_dist(s.value(l), t.value(perm[l]));
  return c;
}

double optimal_pairing(QView s, QView t, std::span<int> perm) {
  require_same_shape(s, t);
  const int q = s.q;
  if (q == 1) {
    perm[0] = 0;
    return sq_dist(s.value(0), t.value(0));
  }
  if (q == 2) {
    const double a = sq_dist(s.value(0), t.value(0)) + sq_dist(s.value(1), t.value(1));
    const double b = sq_dist(s.value(0), t.value(1)) + sq_dist(s.value(1), t.value(0));
    if (b < a) {
      perm[0] = 1;
      perm[1] = 0;
      return b;
    }
    perm[0] = 0;
    perm[1] = 1;
    return a;
  }
  std::vector<double> cost(static_cast<std::size_t>(q) * q);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) cost[i * q + j] = sq_dist(s.value(i), t.value(j));
  if (q <= 6) {
    const auto& perms = permutations(q);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < perms.size(); ++k) {
      double c = 0.0;
      for (int i = 0; i < q; ++i) c += cost[i * q + perms[k][i]];
      if (c < best) {
        best = c;
        best_k = k;
      }
    }
    std::copy(perms[best_k].begin(), perms[best_k].end(), perm.begin());
    return best;
  }
  return hungarian_assign(cost, q, perm);
}

double g_dist_sq(QView s, QView t) {
  // Fixed argument order makes the rounding symmetric.
  if (std::lexicographical_compare(t.data.begin(), t.data.end(), s.data.begin(), s.data.end()))
    std::swap(s, t);
  int buf[64];
  std::vector<int> heap;
  std::span<int> perm;
  if (s.q <= 64) {
    perm = std::span<int>(buf, s.q);
  } else {
    heap.resize(s.q);
    perm = heap;
  }
  return optimal_pairing(s, t, perm);
}

double g_dist(QView s, QView t) { return std::sqrt(g_dist_sq(s, t)); }

double g_norm(QView t) {
  double s = 0.0;
  for (double x : t.data) s += x * x;
  return std::sqrt(s);
}

std::vector<double> eta(QView t) {
  std::vector<double> m(t.n, 0.0);
  for (int l = 0; l < t.q; ++l)
    for (int k = 0; k < t.n; ++k) m[k] += t.value(l)[k];
  for (double& x : m) x /= t.q;
  return m;
}

QPoint ominus(QView t, std::span<const double> v) {
  if (static_cast<int>(v.size()) != t.n)
    throw DimensionError("shift vector has wrong dimension");
  QPoint out(t.q, t.n);
  for (int l = 0; l < t.q; ++l)
    for (int k = 0; k < t.n; ++k) out.value(l)[k] = t.value(l)[k] - v[k];
  return out;
}

QPoint mean_free(QView t) { return ominus(t, eta(t)); }

double separation(QView t) {
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < t.q; ++a)
    for (int b = a + 1; b < t.q; ++b) {
      const double d = sq_dist(t.value(a), t.value(b));
      if (d > 0.0) best = std::min(best, d);
    }
  return std::isinf(best) ? 0.0 : std::sqrt(best);
}

double diameter(QView t) {
  double best = 0.0;
  for (int a = 0; a < t.q; ++a)
    for (int b = a + 1; b < t.q; ++b) best = std::max(best, sq_dist(t.value(a), t.value(b)));
  return std::sqrt(best);
}

int SplitScheme::total() const {
  int s = 0;
  for (int qj : multiplicities) s += qj;
  return s;
}

int SplitScheme::dim() const {
  return centers.empty() ? 0 : static_cast<int>(centers.front().size());
}

void SplitScheme::validate() const {
  if (centers.empty()) throw SchemeError("no centers");
  if (centers.size() != multiplicities.size())
    throw SchemeError("centers and multiplicities differ in length");
  if (!(scale > 0.0)) throw SchemeError("scale must be positive");
  for (int qj : multiplicities)
    if (qj <= 0) throw SchemeError("multiplicities must be positive");
  for (const auto& c : centers)
    if (static_cast<int>(c.size()) != dim()) throw SchemeError("centers differ in dimension");
  for (std::size_t i = 0; i < centers.size(); ++i)
    for (std::size_t j = i + 1; j < centers.size(); ++j)
      if (std::sqrt(sq_dist(centers[i], centers[j])) <= 4.0 * scale)
        throw SchemeError("centers " + std::to_string(i) + " and " +
                          std::to_string(j) + " closer than 4s");
}

QPoint SplitScheme::anchor() const {
  QPoint p(total(), dim());
  int l = 0;
  for (std::size_t j = 0; j < centers.size(); ++j)
    for (int c = 0; c < multiplicities[j]; ++c, ++l)
      std::copy(centers[j].begin(), centers[j].end(), p.value(l).begin());
  return p;
}

std::vector<QPoint> split_retraction(QView t, const SplitScheme& scheme) {
  scheme.validate();
  if (scheme.total() != t.q)
    throw SchemeError("multiplicities sum to " + std::to_string(scheme.total()) +
                      " but q = " + std::to_string(t.q));
  if (scheme.dim() != t.n) throw DimensionError("scheme dimension differs from n");
  const QPoint anchor = scheme.anchor();
  std::vector<int> perm(t.q);
  optimal_pairing(anchor.view(), t, perm);

  std::vector<QPoint> parts;
  int l = 0;
  for (std::size_t j = 0; j < scheme.centers.size(); ++j) {
    const int qj = scheme.multiplicities[j];
    const auto& p = scheme.centers[j];
    QPoint part(qj, t.n);
    double d2 = 0.0;
    for (int c = 0; c < qj; ++c, ++l) {
      auto src = t.value(perm[l]);
      std::copy(src.begin(), src.end(), part.value(c).begin());
      d2 += sq_dist(src, p);
    }
    const double d = std::sqrt(d2);
    const double rmax = 2.0 * scheme.scale;
    if (d > rmax) {
      const double f = rmax / d;
      for (int c = 0; c < qj; ++c)
        for (int k = 0; k < t.n; ++k) {
          double& x = part.value(c)[k];
          x = p[k] + f * (x - p[k]);
        }
    }
    parts.push_back(std::move(part));
  }
  return parts;
}

QPoint concat(std::span<const QPoint> parts) {
  if (parts.empty()) throw DimensionError("nothing to concatenate");
  int q = 0;
  const int n = parts.front().n();
  std::vector<double> v;
  for (const auto& p : parts) {
    if (p.n() != n) throw DimensionError("parts differ in dimension");
    q += p.q();
    v.insert(v.end(), p.flat().begin(), p.flat().end());
  }
  return QPoint(q, n, std::move(v));
}

QPoint projection_map(QView t, const SplitScheme& scheme) {
  const auto parts = split_retraction(t, scheme);
  QPoint out(t.q, t.n + 1);
  int l = 0;
  for (std::size_t j = 0; j < parts.size(); ++j) {
    const auto& p = scheme.centers[j];
    for (int c = 0; c < parts[j].q(); ++c, ++l) {
      auto dst = out.value(l);
      dst[0] = static_cast<double>(j + 1);
      for (int k = 0; k < t.n; ++k) dst[k + 1] = parts[j].value(c)[k] - p[k];
    }
  }
  return out;
}

double partition_weight(int j, double y0) {
  auto smooth = [](double s) {
    s = std::clamp(s, 0.0, 1.0);
    return s * s * (3.0 - 2.0 * s);
  };
  const double d = std::abs(y0 - j);
  // Plateau on |d| <= 1/3, cubic ramp to zero at 2/3; neighbors sum to 1.
  return 1.0 - smooth(3.0 * (d - 1.0 / 3.0));
}

QPoint recovery_map(QView s, const SplitScheme& scheme) {
  scheme.validate();
  if (s.n != scheme.dim() + 1)
    throw DimensionError("recovery expects values in R^{n+1}");
  const int n = scheme.dim();
  QPoint out(s.q, n);
  for (int l = 0; l < s.q; ++l) {
    auto src = s.value(l);
    auto dst = out.value(l);
    for (int k = 0; k < n; ++k) dst[k] = src[k + 1];
    for (std::size_t j = 0; j < scheme.centers.size(); ++j) {
      const double w = partition_weight(static_cast<int>(j + 1), src[0]);
      if (w == 0.0) continue;
      for (int k = 0; k < n; ++k) dst[k] += w * scheme.centers[j][k];
    }
  }
  return out;
}

}  // namespace qvar
