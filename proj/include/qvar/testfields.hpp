#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace qvar {

/// Closed-form test function with analytic first derivatives.
///   Scalar: phi(x) in R            (outer Dirichlet variation O)
///   Inner:  phi(x) in R^m          (inner variations)
///   Outer:  psi(x, u) in R^n       (outer area variation, strong outer S, avg)
/// The x-support is contained in the closed ball (center, radius).
struct TestField {
  enum class Kind { Scalar, Inner, Outer };
  std::string id;
  Kind kind = Kind::Outer;
  int m = 1;
  int n = 1;  // value dimension of u (Outer) ; unused otherwise
  std::vector<double> center;
  double radius = 1.0;
  bool depends_on_u = false;

  /// Output dimension: 1, m or n.
  int out_dim() const;

  /// value: out_dim; dx: out_dim x m row-major; du: out_dim x n row-major
  /// (left untouched for Scalar/Inner kinds).
  std::function<void(std::span<const double> x, std::span<const double> u,
                     std::span<double> value, std::span<double> dx,
                     std::span<double> du)>
      eval;
};

/// exp(1 - 1/(1 - s)) for s = |x - c|^2 / r^2 < 1, else 0; value 1 at c.
double radial_bump(std::span<const double> x, std::span<const double> c, double r,
                   std::span<double> grad);

/// phi(x) = bump(x).
TestField scalar_bump(std::vector<double> center, double radius, std::string id = "scalar_bump");

/// phi^j(x) = bump(x) * (a_j + sum_k B_jk (x - c)_k), B row-major m x m.
TestField inner_field(std::vector<double> center, double radius, std::vector<double> a,
                      std::vector<double> B, std::string id = "inner_field");

/// psi^alpha(x, u) = bump(x) * (a_alpha + sum_k B_alpha k (x - c)_k) * w(u),
/// with w(u) = exp(1 - 1/(1 - |u - u0|^2 / R^2)) when u_radius > 0, else w = 1.
TestField outer_field(std::vector<double> center, double radius, std::vector<double> a,
                      std::vector<double> B, std::vector<double> u0, double u_radius,
                      std::string id = "outer_field");

/// The five fixed instances of each kind used by tests and reports. Centers
/// lie within `spread` of the origin and radii in [r_lo, r_hi].
struct TestFamilyOptions {
  std::uint64_t seed = 0;
  double spread = 0.25;
  double r_lo = 0.5;
  double r_hi = 0.7;
  double u_radius = 4.0;
};
std::vector<TestField> canonical_family(TestField::Kind kind, int m, int n,
                                        const TestFamilyOptions& opt = {});

}  // namespace qvar
