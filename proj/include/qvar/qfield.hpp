#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "qvar/aq.hpp"
#include "qvar/grid.hpp"

namespace qvar {

/// Closed-form Q-valued map on R^m. `eval` writes q*n values; the optional
/// `jacobian` writes, for each stored value l, the n x m matrix Df_l
/// (row-major) at the same position in the ordering used by `eval`.
struct QMap {
  int m = 1;
  int q = 1;
  int n = 1;
  std::function<void(std::span<const double> x, std::span<double> values)> eval;
  std::function<void(std::span<const double> x, std::span<double> jac)> jacobian;
  /// Value ordering of `eval` is continuous in x (so it is a branch labeling).
  bool branch_consistent = false;
};

/// Per-node, per-stored-value Jacobians Df_l in R^{n x m}.
struct BranchGradient {
  int m = 0, q = 0, n = 0;
  std::vector<double> d;          // ((node*q + l)*n + a)*m + i
  std::vector<char> one_sided;    // node used a one-sided stencil on some axis
  std::vector<char> collapsed;    // node treated by matched one-sided rule

  std::span<const double> at(std::size_t node, int l) const {
    const std::size_t blk = static_cast<std::size_t>(n) * m;
    return {d.data() + (node * q + l) * blk, blk};
  }
  /// sum_l |Df_l|^2 at a node.
  double energy_density(std::size_t node) const;
  /// max_l |Df_l| (Frobenius) at a node.
  double max_norm(std::size_t node) const;
};

/// Grid-sampled Q-valued function.
class QField {
 public:
  QField() = default;
  QField(Grid grid, int q, int n, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  int q() const { return q_; }
  int n() const { return n_; }
  int m() const { return grid_.m; }
  std::size_t size() const { return grid_.size(); }

  QView at(std::size_t node) const {
    const std::size_t blk = static_cast<std::size_t>(q_) * n_;
    return {std::span<const double>(values_.data() + node * blk, blk), q_, n_};
  }
  std::span<const double> value(std::size_t node, int l) const {
    return at(node).value(l);
  }
  const std::vector<double>& values() const { return values_; }

  /// Branch label of stored value l at node, or -1 when unlabeled.
  int label(std::size_t node, int l) const;
  bool has_labels() const { return !labels_.empty(); }
  const std::vector<int>& labels() const { return labels_; }
  bool collapsed(std::size_t node) const { return !collapsed_.empty() && collapsed_[node]; }
  const std::vector<char>& collapsed_mask() const { return collapsed_; }
  const BranchGradient& gradient() const { return grad_; }

  void set_labels(std::vector<int> labels);
  void set_collapsed(std::vector<char> mask);
  /// Recomputes the discrete gradient (called by every constructor path).
  void refresh_gradient();

  /// Node-wise eta o f as a single-valued field (q = 1).
  QField average() const;
  /// Node-wise f (-) q[[eta o f]].
  QField mean_free_field() const;
  /// f (-) v at every node.
  QField shifted(std::span<const double> v) const;
  /// lambda * f.
  QField scaled(double lambda) const;

  /// Branch-ordered values: the stored value carrying label b at node.
  std::span<const double> branch_value(std::size_t node, int b) const;

 private:
  Grid grid_;
  int q_ = 0, n_ = 0;
  std::vector<double> values_;
  std::vector<int> labels_;
  std::vector<char> collapsed_;
  BranchGradient grad_;
};

/// Node-wise evaluation of a closed-form map. Nodes where
/// sep(f) <= h * max_l |Df_l| are marked collapsed (Df from the analytic
/// Jacobian if present, else from matched differences). Branch labels follow
/// the closure ordering when it is declared branch-consistent.
QField sample(const QMap& map, const Grid& grid);

/// Marks nodes with sep <= h * max_l |Df_l| (discrete Df) as collapsed.
void resolve_collapsed(QField& field);

/// Largest edge ratio G(f(x), f(x + h e_i)) / h.
double discrete_lipschitz(const QField& field);

struct DecomposeReport {
  int components = 0;
  std::size_t collapsed_nodes = 0;
  std::size_t cut_edges = 0;
  double eps_sep = 0.0;
};

/// Breadth-first branch labeling. eps_sep <= 0 selects 4 * Lip * h.
QField branch_decompose(const QField& field, double eps_sep = 0.0,
                        DecomposeReport* report = nullptr);

/// Composition of optimal pairings around a closed node loop; returns the
/// permutation taking value slots at loop[0] to themselves after one turn.
std::vector<int> loop_monodromy(const QField& field, std::span<const std::size_t> loop);

/// The discrete gradient (cached on the field).
const BranchGradient& gradient(const QField& field);

/// Integral of sum_l |Df_l|^2 over the region.
double dirichlet_energy(const QField& field, const Region& region = Region::whole());
/// (integral of G(f,g)^2 over the region)^(1/2).
double l2_distance(const QField& f, const QField& g, const Region& region = Region::whole());
/// Integral of |f|^2 = G(f, q[[0]])^2.
double l2_norm_sq(const QField& f, const Region& region = Region::whole());

/// Value at an arbitrary point by cellwise matched multilinear interpolation.
QPoint interpolate(const QField& field, std::span<const double> x);

/// f^lambda_{x0,r}(y) = lambda f(x0 + r y). Default output grid is
/// [-1,1]^m with spacing h/r; pass out_grid to override.
QField rescale(const QField& field, std::span<const double> x0, double r, double lambda,
               const std::optional<Grid>& out_grid = std::nullopt);

/// Nodes where G(f, q[[eta o f]]) <= eps.
std::vector<std::size_t> collapsed_set(const QField& field, double eps);

/// Least-squares slope of log(box count) against log(1/scale).
double box_dimension(const std::vector<std::vector<double>>& points,
                     const std::vector<double>& scales);
/// Convenience overload taking node indices of a field.
double box_dimension(const QField& field, const std::vector<std::size_t>& nodes,
                     const std::vector<double>& scales);

/// max over interior region nodes of |sum_i (u(x+he_i) + u(x-he_i) - 2u(x))|
/// for u = eta o f (that is h^2 times the discrete Laplacian).
double average_harmonicity_residual(const QField& field, const Region& region = Region::whole());

}  // namespace qvar
