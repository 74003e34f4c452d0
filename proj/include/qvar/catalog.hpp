#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qvar/qfield.hpp"

namespace qvar {

/// Declared properties of a catalog entry; each one is exercised by a test.
struct CatalogProperties {
  std::optional<double> homogeneity;  // alpha, if homogeneous about 0
  bool outer_area_stationary = false;
  bool inner_area_stationary = false;
  bool dirichlet_classical = false;   // all four Dirichlet residuals vanish
  bool graph_stationary = false;      // the graph is a stationary varifold
};

struct CatalogEntry {
  std::string id;
  nlohmann::json params;
  QMap map;
  CatalogProperties props;
  /// Natural base point (branch point, crossing point) for diagnostics.
  std::vector<double> base_point;
};

/// Known ids and their parameters (defaults in brackets):
///   linear_pair      A, B: n x m row-major matrices, "n", "m"   [A=(1,0), B=(-1,0), n=1, m=2]
///   cone_1d          T_plus, T_minus: q x n values, "q", "n"   [{(1,0),(-1,0)}, {(0,1),(0,-1)}]
///   appendix_g       slope                                    [sqrt(3)]
///   appendix_fa      slope, a                                 [sqrt(3), 0]
///   branch_sqrt      (none)
///   perturbed_plane  lambda, kappa, bump_amp, bump_center, bump_radius, bump_direction
/// Unknown ids raise UsageError.
CatalogEntry make_catalog(const std::string& id, const nlohmann::json& params = nlohmann::json::object());

/// Ids accepted by make_catalog.
std::vector<std::string> catalog_ids();

/// Complex z^{3/2} on the principal branch (cut along the negative real axis).
void zpow32(double x, double y, double& re, double& im);

struct RelaxationConfig {
  QMap boundary;                // trace source; also the initial guess
  Grid grid;
  Region region = Region::whole();  // nodes outside (or on the grid boundary) stay fixed
  double tolerance = 1e-10;     // stop when max node movement <= tolerance
  int max_iterations = 20000;
  int refresh_period = 1;       // matchings recomputed every this many sweeps
  double omega = 0.0;           // over-relaxation; 0 selects 2/(1+sin(pi h))
  bool nested = false;          // coarse-to-fine initialization
  bool zero_initial = false;    // start from the trace mean instead of the closed form
};

struct RelaxationReport {
  int iterations = 0;
  double final_movement = 0.0;
  bool converged = false;
  std::vector<double> energy_history;  // discrete sum over edges of G^2 / h^(2-m) per sweep
};

/// Discrete Dirichlet relaxation of a Q-valued map with fixed boundary. Each
/// sweep refreshes neighbor matchings and over-relaxes every free node
/// toward the average of its matched neighbor values (red-black order).
/// Throws ConvergenceError (carrying the final movement) past max_iterations.
QField dir_relax(const RelaxationConfig& config, RelaxationReport* report = nullptr);

/// Edge energy sum_edges G(f(x), f(y))^2 * h^(m-2), the discrete Dirichlet energy.
double edge_energy(const QField& field);

}  // namespace qvar
