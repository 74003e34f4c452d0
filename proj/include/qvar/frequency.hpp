#pragma once

#include <span>
#include <vector>

#include "qvar/qfield.hpp"

namespace qvar {

/// Radial profile phi: 1 on [0, 1/2], 0 on [1, inf), quintic smoothstep in
/// between (C^2). psi(t) = -phi'(t) / t.
struct Cutoff {
  double phi(double t) const;
  double dphi(double t) const;
  double psi(double t) const;
};

struct FrequencyValue {
  double D = 0.0;
  double H = 0.0;
  double I = 0.0;
};

/// D = r^{2-m} int phi(|x-x0|/r) |Df|^2, H = r^{-m} int psi(|x-x0|/r) |f|^2,
/// I = D/H. Throws VanishingH when H is below 1e-14 * (max |f|)^2 * r^m and
/// DomainError when B_r(x0) leaves the grid.
FrequencyValue frequency(const QField& field, std::span<const double> x0, double r,
                         const Cutoff& cutoff = {});

struct FrequencyProfile {
  std::vector<double> x0;
  std::vector<double> radii;
  std::vector<double> D, H, I;
  /// (1/2) r H'(r) / D(r) - 1 from centered log-space differences of H;
  /// NaN at the two ends of the ladder.
  std::vector<double> dH_check;
};

/// count geometric radii from 4*h*m to half the distance from x0 to the
/// grid boundary.
std::vector<double> default_ladder(const QField& field, std::span<const double> x0, int count = 12);

FrequencyProfile frequency_profile(const QField& field, std::span<const double> x0,
                                   const std::vector<double>& radii, const Cutoff& cutoff = {});

/// max relative error of (1/2) r H' = D over interior ladder points.
double derivative_identity_check(const FrequencyProfile& profile);

/// min over consecutive radii of I(r_{k+1}) - I(r_k).
double monotonicity_check(const FrequencyProfile& profile);

/// Integrated form of d/dr ln H = 2I/r between ladder points. Reports the
/// largest |ln(H(R)/H(r)) - int_r^R 2I(s)/s ds| (trapezoid in ln s), and
/// whether the bounds with exponent I (not 2I) hold on every pair.
struct IntegrationHReport {
  double derived_max_error = 0.0;
  bool printed_form_holds = true;
  int printed_violations = 0;
};
IntegrationHReport integration_h_check(const FrequencyProfile& profile);

/// Degree alpha with f(x0 + lambda y) ~ lambda^alpha f(x0 + y), fitted over
/// lambda in {1/2, 1/4} and sample nodes in the annulus r_in <= |y| <= r_out.
/// misfit = (sum G(f(x0+lambda y), lambda^alpha f(x0+y))^2 / sum |f(x0+lambda y)|^2)^(1/2).
struct HomogeneityFit {
  double alpha = 0.0;
  double misfit = 0.0;
  std::size_t samples = 0;
};
HomogeneityFit homogeneity_degree(const QField& field, std::span<const double> x0,
                                  double r_in = 0.0, double r_out = 0.0);

/// rescale(field, x0, r, H(x0,r)^{-1/2}).
QField frequency_blowup(const QField& field, std::span<const double> x0, double r,
                        const Cutoff& cutoff = {});

/// Two-cone fit of a 1-D field: f(t) = t T+ (t > 0), t T- (t < 0).
struct ConeVerdict {
  bool is_two_cone = false;
  QPoint T_plus, T_minus;
  double misfit = 0.0;  // sqrt(mean over nodes of G^2 / q)
  double norm_gap = 0.0;
};
ConeVerdict classify_1d(const QField& field, double tol = 1e-8);

}  // namespace qvar
