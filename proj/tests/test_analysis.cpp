#include <gtest/gtest.h>

#include <cmath>

#include "vpsfem/analysis.hpp"
#include "vpsfem/assembly.hpp"
#include "vpsfem/io.hpp"

using namespace vpsfem;

namespace {

struct Pair {
  Trajectory coarse;
  Trajectory fine;
};

// A coarse trajectory and its exact space-time embedding on the refined grid.
Pair nested_pair(double q_shift) {
  auto coarse_mesh = std::make_shared<const PeriodicMesh>(build_periodic_unit_square_mesh(4));
  auto coarse_space = std::make_shared<const FESpace>(coarse_mesh);
  auto fine_space = std::make_shared<const FESpace>(
      std::make_shared<const PeriodicMesh>(refine_uniform(*coarse_mesh)));
  const InitialData init = make_initial_data(coarse_space, "experiment2", 2);
  const ModelCoefficients m = make_coefficients(
      experiment2_parameters(functional(*coarse_space, FunctionalKind::integral, init.phi)));
  Pair p;
  p.coarse = run_simulation(coarse_space, m, TimeGrid(0.5, 2), init.phi, init.q, {});
  // q frozen in time so that its slab averages are representable on the fine grid.
  for (auto& q : p.coarse.q_nodes) q = p.coarse.phi_nodes[1];
  p.fine.space = fine_space;
  p.fine.grid = TimeGrid(0.5, 4);
  const auto up = [&](const Vector& c) { return prolong(FEFunction(coarse_space, c), fine_space); };
  const auto shifted = [&](FEFunction f) {
    f.coefficients.array() += q_shift;
    return f;
  };
  for (int m2 = 0; m2 <= 4; ++m2) {
    const auto& a = p.coarse.phi_nodes[m2 / 2].coefficients;
    const auto& b = p.coarse.phi_nodes[(m2 + 1) / 2].coefficients;
    const auto& qa = p.coarse.q_nodes[m2 / 2].coefficients;
    const auto& qb = p.coarse.q_nodes[(m2 + 1) / 2].coefficients;
    p.fine.phi_nodes.push_back(up(0.5 * (a + b)));
    p.fine.q_nodes.push_back(shifted(up(0.5 * (qa + qb))));
  }
  for (int s = 0; s < 4; ++s) p.fine.mu_slabs.push_back(up(p.coarse.mu_slabs[s / 2].coefficients));
  return p;
}

}  // namespace

TEST(Analysis, EocExamples) {
  const auto r1 = eoc({1.0, 1.0 / 16.0});
  ASSERT_EQ(r1.size(), 1u);
  EXPECT_NEAR(r1[0], 4.0, 1e-14);
  EXPECT_NEAR(eoc({8.02e-3, 5.32e-4})[0], 3.91, 5e-3);
  for (double r : eoc({2.0, 2.0, 2.0})) EXPECT_EQ(r, 0.0);
  EXPECT_TRUE(eoc({3.0}).empty());
  EXPECT_THROW(eoc({1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(eoc({-1.0, 1.0}), std::invalid_argument);
}

TEST(Analysis, NestedTrajectoryHasZeroError) {
  const Pair p = nested_pair(0.0);
  const ErrorComponents e = compare_trajectories(p.coarse, p.fine);
  EXPECT_LE(e.e_phi, 1e-12);
  EXPECT_LE(e.e_q, 1e-12);
  EXPECT_LE(e.e_mu_bar, 1e-12);
  EXPECT_LE(e.e_q_bar, 1e-12);
}

TEST(Analysis, ConstantShiftInQ) {
  const double c = 0.03;
  const Pair p = nested_pair(c);
  const ErrorComponents e = compare_trajectories(p.coarse, p.fine);
  EXPECT_NEAR(e.e_q, c * c, 1e-13);
  EXPECT_NEAR(e.e_q_bar, c * c * 0.5, 1e-13);
  EXPECT_LE(e.e_phi, 1e-12);
  EXPECT_LE(e.e_mu_bar, 1e-12);
  EXPECT_NEAR(e.total(), c * c * 1.5, 1e-12);
}

TEST(Analysis, CompareRejectsMismatchedGrids) {
  Pair p = nested_pair(0.0);
  p.fine.grid = TimeGrid(0.5, 3);
  EXPECT_THROW(compare_trajectories(p.coarse, p.fine), std::invalid_argument);
  Pair q = nested_pair(0.0);
  q.fine.phi_nodes.pop_back();
  EXPECT_THROW(compare_trajectories(q.coarse, q.fine), std::invalid_argument);
}

TEST(Analysis, StructureReportOnSteadyState) {
  auto space = FESpace::create(build_periodic_unit_square_mesh(4));
  const Trajectory t = run_simulation(space, make_coefficients(experiment1_parameters()),
                                      TimeGrid(1.0, 10), FEFunction::constant(space, 0.5),
                                      FEFunction::zero(space), {});
  const StructureReport r = structure_report(t);
  EXPECT_LE(r.max_mass_drift, 1e-12);
  EXPECT_LE(r.max_identity_residual, 1e-12);
  EXPECT_EQ(r.monotonicity_violations, 0);
  EXPECT_TRUE(r.passed());
}

TEST(Analysis, StructureReportOnSmoothRun) {
  auto space = FESpace::create(build_periodic_unit_square_mesh(8));
  const InitialData init = make_initial_data(space, "experiment1", 0);
  const Trajectory t = run_simulation(space, make_coefficients(experiment1_parameters()),
                                      TimeGrid(0.002, 20), init.phi, init.q, {});
  const StructureReport r = structure_report(t);
  EXPECT_TRUE(r.passed()) << r.to_string();
}

TEST(Analysis, TamperedNodeIsFlagged) {
  auto space = FESpace::create(build_periodic_unit_square_mesh(4));
  Trajectory t = run_simulation(space, make_coefficients(experiment1_parameters()),
                                TimeGrid(1.0, 4), FEFunction::constant(space, 0.5),
                                FEFunction::zero(space), {});
  // A single vertex coefficient would not do: P2 vertex basis functions have zero mean.
  t.phi_nodes[2].coefficients.array() += 1e-3;
  const StructureReport r = structure_report(t);
  EXPECT_FALSE(r.mass_ok());
  EXPECT_FALSE(r.passed());
  EXPECT_NE(r.to_string().find("FAIL"), std::string::npos);
}

TEST(Analysis, ConvergenceStudyLayout) {
  ConvergenceSetup setup;
  setup.base_n = 4;
  setup.k_max = 2;
  setup.T = 0.25;
  int finished = 0;
  setup.on_level = [&](const ConvergenceLevel&) { ++finished; };
  setup.simulate = [](const SpacePtr& space, const TimeGrid& grid) {
    const InitialData init = make_initial_data(space, "experiment1", 0);
    const ModelCoefficients m = make_coefficients(experiment2_parameters(0.5));
    return run_simulation(space, m, grid, init.phi, init.q, {});
  };
  const ConvergenceReport rep = run_convergence_study(setup);
  EXPECT_EQ(finished, 3);
  ASSERT_EQ(rep.levels.size(), 3u);
  EXPECT_EQ(rep.levels[2].n, 16);
  EXPECT_EQ(rep.levels[2].steps, 4);
  EXPECT_DOUBLE_EQ(rep.levels[1].tau, 0.125);
  ASSERT_EQ(rep.errors.size(), 2u);
  EXPECT_EQ(rep.eoc_total().size(), 1u);
  for (const auto& e : rep.errors) EXPECT_GT(e.total(), 0.0);
  const std::string csv = rep.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "k,n,h,tau,e,eoc,e_phi,eoc_phi,e_q,eoc_q,e_mu_bar,eoc_mu_bar,e_q_bar,eoc_q_bar");
  const std::string text = rep.to_text();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}

TEST(Analysis, ConvergenceStudyRejectsFractionalSteps) {
  ConvergenceSetup setup;
  setup.T = 0.3;
  setup.simulate = [](const SpacePtr&, const TimeGrid&) { return Trajectory{}; };
  EXPECT_THROW(run_convergence_study(setup), std::invalid_argument);
}
