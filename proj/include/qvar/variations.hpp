#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qvar/qfield.hpp"
#include "qvar/testfields.hpp"

namespace qvar {

/// Graph metric of one branch: g = I + Df^T Df, its inverse and determinant.
struct BranchMetric {
  Eigen::MatrixXd g;
  Eigen::MatrixXd ginv;
  double det = 1.0;
};

/// Df is n x m row-major.
BranchMetric branch_metric(std::span<const double> Df, int n, int m);

/// Metric tensors for every node and stored value, index node*q + l.
struct MetricTensors {
  int q = 0;
  std::vector<BranchMetric> data;
  const BranchMetric& at(std::size_t node, int l) const { return data[node * q + l]; }
};
MetricTensors metric_tensors(const QField& field);

/// Node-wise check of the quadratic-form bounds
///   I <= g <= (1 + L^2) I   and
///   (1+L^2)^(-1/2) I <= sqrt|g| g^-1 <= (1+L^2)^((m-1)/2) I
/// with L the largest operator norm of the discrete Df. Returns the worst
/// violation (<= 0 means all bounds hold) and the L used.
struct LipBoundsReport {
  double lip = 0.0;
  double worst_violation = 0.0;
};
LipBoundsReport lip_bounds_check(const QField& field);

/// Residual of a first-variation functional with its quadrature-error
/// estimate |R_h - R_2h| (R_2h on the even-index subgrid).
struct Residual {
  double value = 0.0;
  double quadrature_error = 0.0;
  bool used_collapsed = false;
};

double area(const QField& field, const Region& region = Region::whole());
Residual outer_variation_area(const QField& field, const TestField& psi);
Residual inner_variation_area(const QField& field, const TestField& phi);

/// The four Dirichlet stationarity residuals for the elementary measure of f.
/// Each needs its own test-field kind: O a Scalar field, I an Inner field,
/// S an Outer field, avg an Outer field independent of u.
struct DirichletResiduals {
  Residual O, I, S, avg;
};
Residual dirichlet_outer(const QField& field, const TestField& phi);
Residual dirichlet_inner(const QField& field, const TestField& phi);
Residual dirichlet_strong_outer(const QField& field, const TestField& psi);
Residual dirichlet_average(const QField& field, const TestField& psi);
DirichletResiduals dirichlet_variations(const QField& field, const TestField& scalar,
                                        const TestField& inner, const TestField& outer,
                                        const TestField& outer_x_only);

/// max over region nodes and stored values of the relative mismatch between
/// (1/2)|pi - pi0|^2 (projections built from the Jacobian [I; Df]) and
/// g^{ij} d_i f . d_j f. Both zero counts as agreement.
double tilt_excess_identity_check(const QField& field, const Region& region = Region::whole());

/// Both sides of the identity for a single Df (n x m row-major).
std::pair<double, double> tilt_excess_sides(std::span<const double> Df, int n, int m);

/// Even-index subgrid of a field (spacing 2h).
QField coarsen(const QField& field);

}  // namespace qvar
