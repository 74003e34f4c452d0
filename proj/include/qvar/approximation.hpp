#pragma once

#include <span>
#include <vector>

#include "qvar/qfield.hpp"

namespace qvar {

/// Volume of the unit ball in R^m.
double unit_ball_volume(int m);

struct Ball {
  std::vector<double> center;
  double radius = 0.0;
};

/// count balls about base: ball k has center base + rho_k (cos t_k, sin t_k, 0),
/// rho_k = spread (k mod 5) / 4, t_k = 6 pi k / count, and radius
/// r_max (0.4 + 0.6 ((7k) mod count) / (count - 1)).
std::vector<Ball> ball_family(std::span<const double> base, int count, double spread, double r_max);

struct ExcessReport {
  double E = 0.0;       // (omega_m r^m)^{-1} int_{B_r} sum_l sqrt|g| (1/2)|pi - pi0|^2
  double height = 0.0;  // diameter of all values taken on B_r
};
ExcessReport cyl_excess(const QField& field, std::span<const double> x0, double r);

/// Diameter of a point cloud in R^n (exact; convex hull for n = 2).
double point_cloud_diameter(const std::vector<double>& pts, int n);

/// Non-centered discrete maximal function: for every node, the largest mean
/// of `weight` over grid balls B_{rho h}(c), rho = 0 .. rho_max, that contain
/// the node and lie inside the grid. An empty weight means |Df|^2.
std::vector<double> maximal_function(const QField& field, std::vector<double> weight = {},
                                     int rho_max = 16);
/// Same, for a bare weight array on a grid.
std::vector<double> maximal_function(const Grid& grid, const std::vector<double>& weight,
                                     int rho_max = 16);

struct TruncationOptions {
  std::vector<double> x0;       // truncation ball center (default origin)
  double r = 0.25;              // truncation ball radius
  double excess_radius = 0.0;   // ball for E (default: r)
  double eps = 1e-2;            // smallness threshold on E
  int rho_max = 16;             // maximal-function radius cap, in nodes
  int smoothing_sweeps = 4000;  // matched minimax sweeps off K
  double smoothing_tol = 1e-10;
};

struct TruncationStats {
  double lip = 0.0;            // max edge G(f^,.)/h inside the ball
  double bad_measure = 0.0;    // |B \ K|
  std::size_t bad_nodes = 0;
  double E = 0.0;
  double gamma = 0.0;
  double threshold = 0.0;      // E^{2 gamma}
  double area_gap = 0.0;       // |area(f^) - q omega_m r^m - Dir(f^)/2| on the ball
  double l2_gap = 0.0;         // int_B G(f, f^)^2
};

struct TruncationResult {
  std::vector<char> K;  // per node; only nodes in the ball can be in K
  QField fhat;
  TruncationStats stats;
};

/// K = {M(|Df|^2) <= E^{2 gamma}} in the ball; f^ = f on K, and off K the
/// values start from the nearest K node and are relaxed by matched minimax
/// (midrange) sweeps with K held fixed. Throws ExcessTooLarge when E > eps.
TruncationResult lipschitz_truncate(const QField& field, double gamma,
                                    const TruncationOptions& opt = {});

/// max over the family of (mean_B |Df|^{2p})^{1/p} / mean_{2B} |Df|^2 (0/0 = 0).
double reverse_holder_check(const QField& field, double p, const std::vector<Ball>& balls);

/// min over the family of RHS - LHS of
///   mean_{B_r} |Df|^2 <= (mean_{B_Mr} |Df|^2)^{1/2} mean_{B_Mr} |Df|,  M = 5(L+1).
struct KeyEstimateReport {
  double worst_slack = 0.0;
  double M = 0.0;
};
KeyEstimateReport key_estimate_check(const QField& field, const std::vector<Ball>& balls, double L);

/// Mass ratio of the graph in the extrinsic ball B_r(p), p = (x, u) in
/// R^{m+n}, computed in polar coordinates about x (m = 1 or 2). Needs an
/// analytic Jacobian. Values are handled by distance rank along each ray, so
/// no branch ordering is assumed.
struct MassOptions {
  int angles = 256;
  int gauss_points = 16;
};
double mass_ratio(const QMap& map, std::span<const double> p, double r, const MassOptions& opt = {});
/// Same for a sampled field (matched interpolation; Jacobian by centered
/// differences of the interpolant).
double mass_ratio(const QField& field, std::span<const double> p, double r, const MassOptions& opt = {});

/// Quadratic extrapolation to r = 0 through the three smallest radii.
double density_estimate(const QMap& map, std::span<const double> p, const std::vector<double>& radii,
                        const MassOptions& opt = {});

struct PersistenceReport {
  std::vector<double> radii;
  std::vector<double> lhs;          // sup_{B_r} G(f, q[[t]])^2
  std::vector<double> C;            // lhs / (r^2 mean_{B_4r} |Df|^2)
  std::vector<double> C_printed;    // lhs / (r^{2+m} int_{B_4r} |Df|^2)
  double C_max = 0.0;
  double C_spread = 0.0;            // max/min of positive C
  double C_printed_spread = 0.0;
  double lhs_slope = 0.0;           // log-log slope of lhs in r
};
/// Throws PreconditionError unless the values at y0 coincide within tol.
PersistenceReport persistence_check(const QField& field, std::size_t y0,
                                    const std::vector<double>& radii, double tol = 1e-12);

/// max over t in ts of sup_{B_R} |f (-) t|^2 / mean_{B_2R} |f (-) t|^2, 0/0 = 0.
/// Empty ts means t = eta(f(center)).
double linfty_l2_check(const QField& field, std::span<const double> center, double R,
                       const std::vector<std::vector<double>>& ts = {});

struct HarmonicComparison {
  double e_l2 = 0.0;    // r^{-2} int G(f,u)^2
  double e_grad = 0.0;  // int (|Df| - |Du|)^2
  double e_avg = 0.0;   // int |D(eta o f) - D(eta o u)|^2
  double E = 0.0;       // excess of f on the ball
  double ratio_l2 = 0.0, ratio_grad = 0.0, ratio_avg = 0.0;  // each / (E r^m)
};
HarmonicComparison harmonic_compare(const QField& f, const QField& u, std::span<const double> x0,
                                    double r);

/// Averages of node quantities over a ball with cut-cell weights.
double ball_mean(const QField& field, const std::vector<double>& node_values, const Ball& ball);

}  // namespace qvar
