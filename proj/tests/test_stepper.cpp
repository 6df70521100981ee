#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "vpsfem/assembly.hpp"
#include "vpsfem/io.hpp"
#include "vpsfem/stepper.hpp"

using namespace vpsfem;

namespace {

SpacePtr space_for(int n) { return FESpace::create(build_periodic_unit_square_mesh(n)); }

ModelCoefficients experiment1() { return make_coefficients(experiment1_parameters(), "experiment1"); }

ModelCoefficients experiment2_for(const FEFunction& phi0) {
  return make_coefficients(
      experiment2_parameters(functional(*phi0.space, FunctionalKind::integral, phi0)),
      "experiment2");
}

double relative_jacobian_mismatch(const SpacePtr& space, const ModelCoefficients& m,
                                  std::uint64_t seed) {
  const Index n = space->dof_count();
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> phi_dist(0.2, 0.8);
  std::uniform_real_distribution<double> small(-0.05, 0.05);
  Vector x(3 * n);
  Vector pp(n);
  Vector qp(n);
  for (Index i = 0; i < n; ++i) {
    x[i] = phi_dist(gen);
    x[n + i] = small(gen);
    x[2 * n + i] = small(gen);
    pp[i] = phi_dist(gen);
    qp[i] = small(gen);
  }
  const FEFunction phi_prev(space, pp);
  const FEFunction q_prev(space, qp);
  const double tau = 0.05;
  const AssembledSystem sys = assemble_step_system(space, m, x, phi_prev, q_prev, tau);
  const Eigen::MatrixXd analytic(sys.jacobian);
  Eigen::MatrixXd fd(3 * n, 3 * n);
  const double h = 1e-6;
  StepSystem system(space, m);
  Vector rp;
  Vector rm;
  for (Index j = 0; j < 3 * n; ++j) {
    Vector xp = x;
    Vector xm = x;
    xp[j] += h;
    xm[j] -= h;
    system.assemble(xp, pp, qp, tau, rp, nullptr);
    system.assemble(xm, pp, qp, tau, rm, nullptr);
    fd.col(j) = (rp - rm) / (2.0 * h);
  }
  return (analytic - fd).norm() / fd.norm();
}

}  // namespace

TEST(Stepper, TimeGridValidation) {
  EXPECT_THROW(TimeGrid(0.0, 4), std::invalid_argument);
  EXPECT_THROW(TimeGrid(1.0, 0), std::invalid_argument);
  const TimeGrid g(2.0, 8);
  EXPECT_DOUBLE_EQ(g.tau(), 0.25);
  EXPECT_DOUBLE_EQ(g.t(8), 2.0);
}

TEST(Stepper, JacobianMatchesCentralDifferences) {
  auto space = space_for(4);
  EXPECT_LE(relative_jacobian_mismatch(space, experiment1(), 7), 1e-5);
  FEFunction phi0 = FEFunction::constant(space, 0.4);
  EXPECT_LE(relative_jacobian_mismatch(space, experiment2_for(phi0), 11), 1e-5);
}

TEST(Stepper, ResidualVanishesForSteadyState) {
  auto space = space_for(4);
  const Index n = space->dof_count();
  Vector x(3 * n);
  x << Vector::Constant(n, 0.5), Vector::Zero(n), Vector::Zero(n);
  const AssembledSystem sys =
      assemble_step_system(space, experiment1(), x, FEFunction::constant(space, 0.5),
                           FEFunction::zero(space), 0.1);
  EXPECT_LT(sys.residual.lpNorm<Eigen::Infinity>(), 1e-16);
}

TEST(Stepper, SteadyStateIsPreserved) {
  auto space = space_for(4);
  const FEFunction phi0 = FEFunction::constant(space, 0.5);
  const FEFunction q0 = FEFunction::zero(space);
  const Trajectory t = run_simulation(space, experiment1(), TimeGrid(1.0, 50), phi0, q0, {});
  ASSERT_EQ(t.phi_nodes.size(), 51u);
  for (int k = 0; k <= 50; ++k) {
    EXPECT_LT((t.phi_nodes[k].coefficients.array() - 0.5).abs().maxCoeff(), 1e-10);
    EXPECT_LT(t.q_nodes[k].coefficients.lpNorm<Eigen::Infinity>(), 1e-10);
  }
  for (const auto& mu : t.mu_slabs) EXPECT_LT(mu.coefficients.lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(Stepper, SmallStepConservesMassAndEnergyIdentity) {
  auto space = space_for(8);
  const InitialData init = make_initial_data(space, "experiment1", 0);
  const ModelCoefficients m = experiment1();
  NewtonConfig cfg;
  const StepResult r = solve_time_step(space, m, init.phi, init.q, 1e-4, cfg);
  EXPECT_NEAR(functional(*space, FunctionalKind::integral, r.phi),
              functional(*space, FunctionalKind::integral, init.phi), 1e-13);
  const FEFunction phi_bar(space, 0.5 * (init.phi.coefficients + r.phi.coefficients));
  const FEFunction q_bar(space, 0.5 * (init.q.coefficients + r.q.coefficients));
  const double identity = energy(*space, r.phi, r.q, m) - energy(*space, init.phi, init.q, m) +
                          1e-4 * dissipation(*space, phi_bar, r.mu, q_bar, m);
  EXPECT_LT(std::abs(identity), 10 * cfg.tolerance);
  EXPECT_EQ(r.stats.continuation_stages, 0);
}

TEST(Stepper, NewtonConvergesSuperlinearly) {
  auto space = space_for(16);
  const InitialData init = make_initial_data(space, "experiment2", 3);
  const StepResult r = solve_time_step(space, experiment2_for(init.phi), init.phi, init.q, 0.01, {});
  const auto& h = r.stats.residual_history;
  ASSERT_GE(h.size(), 4u);
  const std::size_t k = h.size() - 1;
  // Contraction factors shrink over the last three iterations.
  EXPECT_LT(h[k] / h[k - 1], h[k - 1] / h[k - 2]);
  EXPECT_LT(h[k - 1] / h[k - 2], h[k - 2] / h[k - 3]);
}

TEST(Stepper, LargeStepFailureIsReported) {
  auto space = space_for(8);
  const InitialData init = make_initial_data(space, "experiment1", 0);
  NewtonConfig cfg;
  cfg.continuation_depth = 0;
  try {
    solve_time_step(space, experiment1(), init.phi, init.q, 0.125, cfg);
    FAIL() << "expected a Newton failure";
  } catch (const NewtonFailure& e) {
    EXPECT_GT(e.residual(), cfg.tolerance);
    EXPECT_EQ(e.iterations(), cfg.max_iterations);
    EXPECT_NE(std::string(e.what()).find("smaller time step"), std::string::npos);
  }
}

TEST(Stepper, SimulationFailureCarriesStepIndex) {
  auto space = space_for(8);
  const InitialData init = make_initial_data(space, "experiment1", 0);
  NewtonConfig cfg;
  cfg.continuation_depth = 0;
  try {
    run_simulation(space, experiment1(), TimeGrid(1.0, 8), init.phi, init.q, cfg);
    FAIL() << "expected a Newton failure";
  } catch (const NewtonFailure& e) {
    EXPECT_EQ(e.step(), 1);
  }
}

TEST(Stepper, ContinuationRecoversFromPlainNewtonFailure) {
  auto space = space_for(16);
  const InitialData init = make_initial_data(space, "experiment2", 3);
  const ModelCoefficients m = experiment2_for(init.phi);
  NewtonConfig cfg;
  cfg.max_iterations = 3;
  cfg.continuation_depth = 0;
  EXPECT_THROW(solve_time_step(space, m, init.phi, init.q, 0.01, cfg), NewtonFailure);
  cfg.continuation_depth = 6;
  const StepResult r = solve_time_step(space, m, init.phi, init.q, 0.01, cfg);
  EXPECT_GT(r.stats.continuation_stages, 0);
  // The returned state solves the full-step equations.
  const Index n = space->dof_count();
  Vector x(3 * n);
  x << r.phi.coefficients, r.mu.coefficients, r.q.coefficients;
  const AssembledSystem sys = assemble_step_system(space, m, x, init.phi, init.q, 0.01);
  EXPECT_LE(n * sys.residual.lpNorm<Eigen::Infinity>(), cfg.tolerance);
}

TEST(Stepper, TrajectoryLayoutAndDiagnostics) {
  auto space = space_for(6);
  const InitialData init = make_initial_data(space, "experiment2", 5);
  const ModelCoefficients m = experiment2_for(init.phi);
  int calls = 0;
  SimulationOptions opts;
  opts.on_step = [&](const StepView& v) {
    EXPECT_EQ(v.step, calls++);
    EXPECT_EQ(v.record.step, v.step);
  };
  const Trajectory t = run_simulation(space, m, TimeGrid(0.1, 4), init.phi, init.q, {}, opts);
  EXPECT_EQ(calls, 5);
  EXPECT_EQ(t.phi_nodes.size(), 5u);
  EXPECT_EQ(t.q_nodes.size(), 5u);
  EXPECT_EQ(t.mu_slabs.size(), 4u);
  ASSERT_EQ(t.diagnostics.size(), 5u);
  EXPECT_TRUE(std::isnan(t.diagnostics[0].dissipation));
  for (int k = 1; k <= 4; ++k) {
    const auto& d = t.diagnostics[k];
    EXPECT_NEAR(d.t, 0.025 * k, 1e-15);
    EXPECT_NEAR(d.mass, t.diagnostics[0].mass, 1e-13);
    EXPECT_LE(d.identity_residual, 1e-10);
    EXPECT_LE(d.energy, t.diagnostics[k - 1].energy + 1e-12);
    EXPECT_GE(d.dissipation, 0.0);
    EXPECT_GT(d.newton_iterations, 0);
  }
  SimulationOptions lean;
  lean.store_fields = false;
  const Trajectory s = run_simulation(space, m, TimeGrid(0.1, 4), init.phi, init.q, {}, lean);
  EXPECT_TRUE(s.phi_nodes.empty());
  EXPECT_EQ(s.diagnostics.size(), 5u);
}

TEST(Stepper, DeterministicAcrossRunsAndThreadCounts) {
  auto space = space_for(8);
  const InitialData init = make_initial_data(space, "experiment2", 9);
  const ModelCoefficients m = experiment2_for(init.phi);
  const TimeGrid grid(0.05, 3);
  const Trajectory a = run_simulation(space, m, grid, init.phi, init.q, {});
  const Trajectory b = run_simulation(space, m, grid, init.phi, init.q, {});
  SimulationOptions threaded;
  threaded.threads = 3;
  const Trajectory c = run_simulation(space, m, grid, init.phi, init.q, {}, threaded);
  for (int k = 0; k <= 3; ++k) {
    EXPECT_EQ(a.phi_nodes[k].coefficients, b.phi_nodes[k].coefficients);
    EXPECT_EQ(a.phi_nodes[k].coefficients, c.phi_nodes[k].coefficients);
    EXPECT_EQ(a.q_nodes[k].coefficients, c.q_nodes[k].coefficients);
  }
}

TEST(Stepper, RejectsFieldsFromAnotherSpace) {
  auto a = space_for(4);
  auto b = space_for(4);
  EXPECT_THROW(solve_time_step(a, experiment1(), FEFunction::constant(b, 0.5),
                               FEFunction::zero(a), 0.1, {}),
               std::invalid_argument);
}
