#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "vpsfem/fe_space.hpp"
#include "vpsfem/linear_solver.hpp"
#include "vpsfem/model.hpp"

namespace vpsfem {

/// Uniform time grid t^n = n T / N.
struct TimeGrid {
  double T = 0.0;
  int N = 0;

  TimeGrid() = default;
  TimeGrid(double final_time, int steps);

  [[nodiscard]] double tau() const { return T / N; }
  [[nodiscard]] double t(int n) const { return n == N ? T : n * tau(); }
};

struct NewtonConfig {
  /// Bound on dof_count * max_i |r_i|. Galerkin residual entries scale with
  /// the element area, so the factor makes the bound mesh-independent.
  double tolerance = 1e-11;
  int max_iterations = 25;
  /// Residual-monotone backtracking (up to 8 halvings per iteration).
  bool damping = true;
  /// Fallback when Newton fails at the full step: solve the same slab
  /// equations for s tau with s = 2^-depth, doubling s after each converged
  /// stage and halving the increment after a failed one, each stage warm
  /// started from the previous root. 0 disables the fallback.
  int continuation_depth = 8;
  /// Iteration budget across all continuation stages of one step.
  int continuation_max_iterations = 400;
};

struct NewtonStats {
  int iterations = 0;
  int backtracks = 0;
  /// Converged continuation stages; 0 when plain Newton succeeded.
  int continuation_stages = 0;
  /// Scaled residual norm before each iteration, ending with the converged value.
  std::vector<double> residual_history;
};

class NewtonFailure : public std::runtime_error {
 public:
  NewtonFailure(const std::string& what, double residual, int iterations, int step = -1)
      : std::runtime_error(what), residual_(residual), iterations_(iterations), step_(step) {}

  [[nodiscard]] double residual() const { return residual_; }
  [[nodiscard]] int iterations() const { return iterations_; }
  /// Time step index (1-based) when raised from run_simulation, else -1.
  [[nodiscard]] int step() const { return step_; }

 private:
  double residual_;
  int iterations_;
  int step_;
};

/// Residual and Jacobian of one time slab. The unknown vector is laid out as
/// [phi^n | mu_bar | q^n], each block of length dof_count. Equations, with
/// bars denoting the slab averages (x^{n-1} + x^n)/2:
///   (phi^n - phi^{n-1}, psi) + tau (b grad mu - c grad(A q), grad psi)       = 0
///   (mu, xi) - gamma (grad phi, grad xi) - (avg_t f'(phi(t)), xi)              = 0
///   (q^n - q^{n-1}, zeta) + tau [(d0 grad(A q) - c grad mu, grad(A zeta))
///                               + (kappa q, zeta) + eps (grad q, grad zeta)]  = 0
/// where b, c, A, kappa are evaluated at phi_bar and avg_t is the exact
/// (3-point Gauss) time average along the linear path from phi^{n-1} to phi^n.
class StepSystem {
 public:
  StepSystem(SpacePtr space, const ModelCoefficients& coeffs, int threads = 0);

  [[nodiscard]] const FESpace& space() const { return *space_; }
  [[nodiscard]] Index unknowns() const { return 3 * space_->dof_count(); }

  /// Fills residual (resized as needed) and, if non-null, the Jacobian, whose
  /// sparsity pattern is fixed and shared by every call.
  void assemble(const Vector& iterate, const Vector& phi_prev, const Vector& q_prev, double tau,
                Vector& residual, SparseMatrix* jacobian) const;

  [[nodiscard]] SparseMatrix empty_jacobian() const { return pattern_; }

 private:
  void element_kernel(Index e, const Vector& x, const Vector& phi_prev, const Vector& q_prev,
                      double tau, double* local_res, double* local_jac) const;

  SpacePtr space_;
  ModelCoefficients coeffs_;
  int threads_;
  SparseMatrix pattern_;
  /// Per element, 18 x 18 positions into the value array of pattern_.
  std::vector<Index> scatter_;
};

struct AssembledSystem {
  Vector residual;
  SparseMatrix jacobian;
};

AssembledSystem assemble_step_system(const SpacePtr& space, const ModelCoefficients& coeffs,
                                     const Vector& iterate, const FEFunction& phi_prev,
                                     const FEFunction& q_prev, double tau);

/// Solves M mu = gamma K phi + (f'(phi), v): the chemical potential of phi.
FEFunction discrete_chemical_potential(const ModelCoefficients& coeffs, const FEFunction& phi);

struct StepResult {
  FEFunction phi;
  FEFunction q;
  FEFunction mu;
  NewtonStats stats;
};

/// Newton solver for consecutive slabs on one space; the symbolic LU
/// analysis is shared across steps.
class TimeStepper {
 public:
  TimeStepper(SpacePtr space, const ModelCoefficients& coeffs, NewtonConfig cfg,
              int threads = 0);

  /// Throws NewtonFailure on divergence or iteration exhaustion.
  StepResult step(const FEFunction& phi_prev, const FEFunction& q_prev,
                  const FEFunction& mu_guess, double tau);

 private:
  SpacePtr space_;
  StepSystem system_;
  NewtonConfig cfg_;
  /// Newton from x for step length tau; returns false on failure (x is then
  /// left at the last iterate) and true once the residual meets the tolerance.
  bool newton(Vector& x, const Vector& phi_prev, const Vector& q_prev, double tau, int max_iter,
              NewtonStats& stats, double& final_norm);

  SparseDirectSolver solver_;
  SparseMatrix jacobian_;
};

/// One slab. Without mu_guess the chemical potential of phi_prev is used.
StepResult solve_time_step(const SpacePtr& space, const ModelCoefficients& coeffs,
                           const FEFunction& phi_prev, const FEFunction& q_prev, double tau,
                           const NewtonConfig& cfg, const FEFunction* mu_guess = nullptr);

struct Trajectory {
  SpacePtr space;
  TimeGrid grid;
  std::vector<FEFunction> phi_nodes;  // N + 1
  std::vector<FEFunction> q_nodes;    // N + 1
  std::vector<FEFunction> mu_slabs;   // N
  std::vector<DiagnosticsRecord> diagnostics;  // N + 1, index 0 is the initial state
};

struct StepView {
  int step = 0;
  double t = 0.0;
  const FEFunction& phi;
  const FEFunction& q;
  /// Slab chemical potential; for step 0 the chemical potential of phi^0.
  const FEFunction& mu;
  const DiagnosticsRecord& record;
};

struct SimulationOptions {
  /// Keep nodal fields in the returned trajectory (diagnostics are always kept).
  bool store_fields = true;
  std::function<void(const StepView&)> on_step;
  int threads = 0;
};

/// Advances N slabs from (phi0, q0). A failing step is rethrown as
/// NewtonFailure carrying its step index.
Trajectory run_simulation(const SpacePtr& space, const ModelCoefficients& coeffs,
                          const TimeGrid& grid, const FEFunction& phi0, const FEFunction& q0,
                          const NewtonConfig& cfg, const SimulationOptions& options = {});

}  // namespace vpsfem
