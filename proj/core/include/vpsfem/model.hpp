#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "vpsfem/fe_space.hpp"

namespace vpsfem {

/// A scalar function of the volume fraction with up to two derivatives.
/// Unused derivatives may be left empty.
struct ScalarFunction {
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
};

/// Constants of the coefficient family shared by the built-in presets:
///   c(s)     = c_scale s (1 - s)
///   b(s)     = c(s)^2 / d0 + epsilon
///   f(s)     = potential_scale (s - well_low)^2 (s - well_high)^2
///   kappa(s) = kappa_scale / (10 s^2 + 1e-4)
///   A(s)     = A_amplitude [1 + tanh(A_steepness (cot(pi s*) - cot(pi s)))]
/// where s* = phi_star and the cot argument is clamped to
/// [clamp_delta, 1 - clamp_delta].
struct FamilyParameters {
  double gamma = 1e-3;
  double epsilon = 1e-3;
  double d0 = 1.0;
  double c_scale = 0.0;
  double potential_scale = 0.0;
  double well_low = 0.05;
  double well_high = 0.95;
  double kappa_scale = 0.0;
  double A_amplitude = 0.0;
  double A_steepness = 0.0;
  double phi_star = 0.5;
  double clamp_delta = 1e-6;
};

FamilyParameters experiment1_parameters();
FamilyParameters experiment2_parameters(double phi_star);

struct ModelCoefficients {
  std::string name = "custom";
  double gamma = 0.0;
  double epsilon = 0.0;
  double d0 = 0.0;
  ScalarFunction mobility;    // b, b'
  ScalarFunction cross;       // c, c'
  ScalarFunction modulus;     // A, A', A''
  ScalarFunction relaxation;  // kappa, kappa'
  ScalarFunction potential;   // f, f', f''
  /// Lower bound: f(s) >= -f1 and f''(s) >= -f1 with f1 >= 0.
  double f1 = 0.0;
  /// Shift making the relative energy convex.
  double alpha = 1.0;
  double clamp_delta = 1e-6;
};

/// Builds the coefficient family and derives f1 and alpha automatically.
ModelCoefficients make_coefficients(const FamilyParameters& p, std::string name = "custom");

/// f1 = max(0, -min f, -min f'') over the bracket, by dense sampling with a
/// local golden-section refinement. Returns the location of the f'' minimum
/// through argmin when non-null.
double derive_f1(const ScalarFunction& potential, double lo = -10.0, double hi = 11.0,
                 double* argmin = nullptr);

/// Sets f1 via derive_f1 and alpha = f1 + 1.
void derive_alpha(ModelCoefficients& coeffs, double lo = -10.0, double hi = 11.0);

/// E = int gamma/2 |grad phi|^2 + f(phi) + q^2/2.
double energy(const FESpace& space, const FEFunction& phi, const FEFunction& q,
              const ModelCoefficients& coeffs);

/// D = int (1/d0)|c grad mu - d0 grad(A q)|^2 + (b - c^2/d0)|grad mu|^2
///         + epsilon |grad q|^2 + kappa q^2,
/// with all coefficients evaluated at phi and grad(A q) = A' q grad phi + A grad q.
double dissipation(const FESpace& space, const FEFunction& phi, const FEFunction& mu,
                   const FEFunction& q, const ModelCoefficients& coeffs);

double relative_energy(const FESpace& space, const FEFunction& phi, const FEFunction& q,
                       const FEFunction& phi_hat, const FEFunction& q_hat,
                       const ModelCoefficients& coeffs);

struct ValidationEntry {
  std::string inequality;
  double margin = 0.0;
  bool strict = false;
  bool passed = false;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;
  [[nodiscard]] bool passed() const;
  [[nodiscard]] std::string to_string() const;
};

/// Samples the structural inequalities on coefficients (positivity, bounds,
/// b >= c^2/d0 + eps, lower bounds on f and f''). Non-strict inequalities
/// fail below -1e-12; strict ones fail unless the margin is positive.
ValidationReport validate_assumptions(const ModelCoefficients& coeffs, double phi_lo,
                                      double phi_hi, int samples);

/// Per-step structure diagnostics. Step 0 carries NaN dissipation and
/// identity residual.
struct DiagnosticsRecord {
  int step = 0;
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double dissipation = std::numeric_limits<double>::quiet_NaN();
  double identity_residual = std::numeric_limits<double>::quiet_NaN();
  int newton_iterations = 0;
};

}  // namespace vpsfem
