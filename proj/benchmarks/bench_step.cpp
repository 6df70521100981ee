#include <benchmark/benchmark.h>

#include "vpsfem/io.hpp"
#include "vpsfem/linear_solver.hpp"

using namespace vpsfem;

namespace {

struct Fixture {
  SpacePtr space;
  ModelCoefficients coeffs;
  InitialData init;
  Vector x;

  explicit Fixture(int n)
      : space(FESpace::create(build_periodic_unit_square_mesh(n))),
        coeffs(make_coefficients(experiment2_parameters(0.4), "experiment2")),
        init(make_initial_data(space, "experiment2", 1)) {
    const Index m = space->dof_count();
    x = Vector::Zero(3 * m);
    x.head(m) = init.phi.coefficients;
  }
};

void BM_Residual(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  StepSystem sys(f.space, f.coeffs, 1);
  Vector r;
  for (auto _ : state) {
    sys.assemble(f.x, f.init.phi.coefficients, f.init.q.coefficients, 0.01, r, nullptr);
    benchmark::DoNotOptimize(r.data());
  }
  state.counters["unknowns"] = static_cast<double>(sys.unknowns());
}

void BM_ResidualAndJacobian(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  StepSystem sys(f.space, f.coeffs, 1);
  Vector r;
  SparseMatrix jac = sys.empty_jacobian();
  for (auto _ : state) {
    sys.assemble(f.x, f.init.phi.coefficients, f.init.q.coefficients, 0.01, r, &jac);
    benchmark::DoNotOptimize(jac.valuePtr());
  }
}

void BM_Factorize(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  StepSystem sys(f.space, f.coeffs, 1);
  Vector r;
  SparseMatrix jac = sys.empty_jacobian();
  sys.assemble(f.x, f.init.phi.coefficients, f.init.q.coefficients, 0.01, r, &jac);
  SparseDirectSolver solver;
  for (auto _ : state) {
    solver.factorize(jac);
    Vector dx = solver.solve(r);
    benchmark::DoNotOptimize(dx.data());
  }
  state.SetLabel(SparseDirectSolver::backend());
}

void BM_NewtonStep(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  TimeStepper stepper(f.space, f.coeffs, {}, 1);
  const FEFunction mu0 = FEFunction::zero(f.space);
  for (auto _ : state) {
    auto res = stepper.step(f.init.phi, f.init.q, mu0, 0.01);
    benchmark::DoNotOptimize(res.phi.coefficients.data());
  }
}

}  // namespace

BENCHMARK(BM_Residual)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ResidualAndJacobian)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Factorize)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NewtonStep)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
