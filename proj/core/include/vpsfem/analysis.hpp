#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vpsfem/stepper.hpp"

namespace vpsfem {

/// Squared-norm differences between a trajectory and its refinement in
/// space and time.
struct ErrorComponents {
  double e_phi = 0.0;     // max_t ||phi_c - phi_f||_{H1}^2
  double e_q = 0.0;       // max_t ||q_c - q_f||_{L2}^2
  double e_mu_bar = 0.0;  // int_0^T ||mu_c - mu_f||_{H1}^2 dt
  double e_q_bar = 0.0;   // int_0^T ||qbar_c - qbar_f||_{H1}^2 dt

  [[nodiscard]] double total() const { return e_phi + e_q + e_mu_bar + e_q_bar; }
};

/// The coarse trajectory is prolonged onto the fine mesh and, for the
/// piecewise-linear fields, interpolated in time at the fine nodes; maxima
/// are taken over the fine time nodes. Slab-constant fields are integrated
/// exactly in time. Throws std::invalid_argument unless fine is the red
/// refinement of coarse with twice as many steps over the same interval.
ErrorComponents compare_trajectories(const Trajectory& coarse, const Trajectory& fine);

/// rate_k = log2(e_{k-1} / e_k) for k >= 1. Throws for nonpositive errors.
std::vector<double> eoc(const std::vector<double>& errors);

struct StructureReport {
  double max_mass_drift = 0.0;         // relative to 1 + |mass_0|
  double max_identity_residual = 0.0;  // relative to 1 + |E_0|
  int monotonicity_violations = 0;

  double mass_tolerance = 1e-10;
  double identity_tolerance = 1e-8;
  double monotonicity_tolerance = 1e-10;

  [[nodiscard]] bool mass_ok() const { return max_mass_drift <= mass_tolerance; }
  [[nodiscard]] bool identity_ok() const { return max_identity_residual <= identity_tolerance; }
  [[nodiscard]] bool passed() const {
    return mass_ok() && identity_ok() && monotonicity_violations == 0;
  }
  [[nodiscard]] std::string to_string() const;
};

/// Mass drift is recomputed from the stored phi nodes when present, so a
/// modified field is detected; otherwise the recorded masses are used.
StructureReport structure_report(const Trajectory& traj);

struct ConvergenceLevel {
  int k = 0;
  int n = 0;         // cells per axis
  double h = 0.0;    // cell width 1/n
  double tau = 0.0;  // equals h
  int steps = 0;
};

struct ConvergenceReport {
  std::vector<ConvergenceLevel> levels;
  /// errors[k] compares level k with level k + 1.
  std::vector<ErrorComponents> errors;

  [[nodiscard]] std::vector<double> eoc_total() const;
  [[nodiscard]] std::vector<double> eoc_phi() const;
  [[nodiscard]] std::vector<double> eoc_q() const;
  [[nodiscard]] std::vector<double> eoc_mu_bar() const;
  [[nodiscard]] std::vector<double> eoc_q_bar() const;

  /// Aligned table with columns k, e, eoc, e_phi, eoc, e_q, eoc, e_mu, eoc, e_qbar, eoc.
  [[nodiscard]] std::string to_text() const;
  [[nodiscard]] std::string to_csv() const;
};

struct ConvergenceSetup {
  int base_n = 4;
  int k_max = 3;
  double T = 1.0;
  /// Produces the trajectory for one level (including initial data).
  std::function<Trajectory(const SpacePtr&, const TimeGrid&)> simulate;
  /// Called after each level finishes; for progress output.
  std::function<void(const ConvergenceLevel&)> on_level;
  /// Run levels concurrently when > 1.
  int threads = 0;
};

/// Levels k = 0..k_max with n_k = base_n 2^k, tau_k = 1/n_k, and meshes
/// obtained by successive red refinement.
ConvergenceReport run_convergence_study(const ConvergenceSetup& setup);

}  // namespace vpsfem
