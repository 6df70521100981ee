#include "vpsfem/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vpsfem/assembly.hpp"
#include "vpsfem/parallel.hpp"
#include "vpsfem/quadrature.hpp"

namespace vpsfem {

namespace {

constexpr int kLocal = 3 * p2::kLocalDofs;  // 18 local unknowns per element
constexpr int kLocalJac = kLocal * kLocal;

double scaled_norm(const Vector& r, Index dofs) {
  return static_cast<double>(dofs) * r.lpNorm<Eigen::Infinity>();
}

void require_space(const SpacePtr& space, const FEFunction& f, const char* what) {
  if (f.space.get() != space.get()) {
    throw std::invalid_argument(std::string(what) + " is not defined on the stepping space");
  }
}

}  // namespace

TimeGrid::TimeGrid(double final_time, int steps) : T(final_time), N(steps) {
  if (!(final_time > 0.0)) throw std::invalid_argument("final time must be positive");
  if (steps < 1) throw std::invalid_argument("step count must be at least 1");
}

StepSystem::StepSystem(SpacePtr space, const ModelCoefficients& coeffs, int threads)
    : space_(std::move(space)), coeffs_(coeffs), threads_(threads) {
  const Index n = space_->dof_count();
  const Index ne = space_->element_count();

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(ne) * kLocalJac);
  for (Index e = 0; e < ne; ++e) {
    const auto& dofs = space_->element_dofs(e);
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < 6; ++i)
        for (int b = 0; b < 3; ++b)
          for (int j = 0; j < 6; ++j) entries.emplace_back(a * n + dofs[i], b * n + dofs[j], 0.0);
  }
  pattern_.resize(3 * n, 3 * n);
  pattern_.setFromTriplets(entries.begin(), entries.end());
  pattern_.makeCompressed();

  const int* outer = pattern_.outerIndexPtr();
  const int* inner = pattern_.innerIndexPtr();
  scatter_.resize(static_cast<std::size_t>(ne) * kLocalJac);
  for (Index e = 0; e < ne; ++e) {
    const auto& dofs = space_->element_dofs(e);
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < 6; ++i)
        for (int b = 0; b < 3; ++b)
          for (int j = 0; j < 6; ++j) {
            const int row = a * n + dofs[i];
            const int col = b * n + dofs[j];
            const int* pos = std::lower_bound(inner + outer[col], inner + outer[col + 1], row);
            scatter_[static_cast<std::size_t>(e) * kLocalJac + (a * 6 + i) * kLocal + b * 6 + j] =
                static_cast<Index>(pos - inner);
          }
  }
}

void StepSystem::element_kernel(Index e, const Vector& x, const Vector& phi_prev,
                                const Vector& q_prev, double tau, double* res,
                                double* jac) const {
  const Index n = space_->dof_count();
  const auto& dofs = space_->element_dofs(e);
  const ElementGeometry& geo = space_->geometry(e);
  const QuadRule& rule = triangle_rule();
  const TimeRule& trule = gauss3_unit_interval();
  const ModelCoefficients& m = coeffs_;

  std::array<double, 6> phi_n{}, phi_o{}, mu{}, q_n{}, q_o{};
  for (int i = 0; i < 6; ++i) {
    phi_n[i] = x[dofs[i]];
    mu[i] = x[n + dofs[i]];
    q_n[i] = x[2 * n + dofs[i]];
    phi_o[i] = phi_prev[dofs[i]];
    q_o[i] = q_prev[dofs[i]];
  }

  std::fill(res, res + kLocal, 0.0);
  if (jac != nullptr) std::fill(jac, jac + kLocalJac, 0.0);
  const auto J = [jac](int a, int i, int b, int j) -> double& {
    return jac[(a * 6 + i) * kLocal + b * 6 + j];
  };

  for (std::size_t k = 0; k < rule.size(); ++k) {
    const double w = rule.weights[k] * geo.area;
    const auto v = p2::values(rule.points[k]);
    const auto g = p2::gradients(rule.points[k], geo.grad_lambda);

    double pn = 0.0, po = 0.0, qn = 0.0, qo = 0.0;
    Point2 gpn = Point2::Zero(), gpo = Point2::Zero(), gm = Point2::Zero();
    Point2 gqn = Point2::Zero(), gqo = Point2::Zero();
    double mv = 0.0;
    for (int i = 0; i < 6; ++i) {
      pn += phi_n[i] * v[i];
      po += phi_o[i] * v[i];
      qn += q_n[i] * v[i];
      qo += q_o[i] * v[i];
      mv += mu[i] * v[i];
      gpn += phi_n[i] * g[i];
      gpo += phi_o[i] * g[i];
      gqn += q_n[i] * g[i];
      gqo += q_o[i] * g[i];
      gm += mu[i] * g[i];
    }
    const double p = 0.5 * (pn + po);
    const Point2 gp = 0.5 * (gpn + gpo);
    const double qb = 0.5 * (qn + qo);
    const Point2 gq = 0.5 * (gqn + gqo);

    // Exact time average of f'(phi(t)) on the slab and its derivative in phi^n.
    double fp_avg = 0.0;
    double fpp_avg = 0.0;
    for (int s = 0; s < 3; ++s) {
      const double ps = po + trule.nodes[s] * (pn - po);
      fp_avg += trule.weights[s] * m.potential.d1(ps);
      if (jac != nullptr) fpp_avg += trule.weights[s] * trule.nodes[s] * m.potential.d2(ps);
    }

    const double b = m.mobility.value(p);
    const double c = m.cross.value(p);
    const double a = m.modulus.value(p);
    const double da = m.modulus.d1(p);
    const double kap = m.relaxation.value(p);

    const Point2 grad_aq = da * qb * gp + a * gq;
    const Point2 flux = b * gm - c * grad_aq;
    const Point2 stress = m.d0 * grad_aq - c * gm;

    for (int i = 0; i < 6; ++i) {
      const Point2 h_i = da * v[i] * gp + a * g[i];
      res[i] += w * ((pn - po) * v[i] + tau * flux.dot(g[i]));
      res[6 + i] += w * (mv * v[i] - m.gamma * gp.dot(g[i]) - fp_avg * v[i]);
      res[12 + i] += w * ((qn - qo) * v[i] +
                          tau * (stress.dot(h_i) + kap * qb * v[i] + m.epsilon * gq.dot(g[i])));
    }
    if (jac == nullptr) continue;

    const double db = m.mobility.d1(p);
    const double dc = m.cross.d1(p);
    const double d2a = m.modulus.d2(p);
    const double dkap = m.relaxation.d1(p);

    for (int j = 0; j < 6; ++j) {
      // Derivatives with respect to phi^n_j: phi_bar moves by half the basis.
      const double dp = 0.5 * v[j];
      const Point2 dgp = 0.5 * g[j];
      const Point2 d_grad_aq = d2a * dp * qb * gp + da * qb * dgp + da * dp * gq;
      const Point2 d_flux = db * dp * gm - dc * dp * grad_aq - c * d_grad_aq;
      const Point2 d_stress = m.d0 * d_grad_aq - dc * dp * gm;

      // Derivatives with respect to q^n_j.
      const double dq = 0.5 * v[j];
      const Point2 dgq = 0.5 * g[j];
      const Point2 q_grad_aq = da * dq * gp + a * dgq;

      for (int i = 0; i < 6; ++i) {
        const double vv = v[i] * v[j];
        const Point2 h_i = da * v[i] * gp + a * g[i];
        const Point2 dh_i = d2a * dp * v[i] * gp + da * v[i] * dgp + da * dp * g[i];

        J(0, i, 0, j) += w * (vv + tau * d_flux.dot(g[i]));
        J(0, i, 1, j) += w * tau * b * g[j].dot(g[i]);
        J(0, i, 2, j) += w * tau * (-c * q_grad_aq.dot(g[i]));

        J(1, i, 0, j) += w * (-m.gamma * dgp.dot(g[i]) - fpp_avg * vv);
        J(1, i, 1, j) += w * vv;

        J(2, i, 0, j) +=
            w * tau * (d_stress.dot(h_i) + stress.dot(dh_i) + dkap * dp * qb * v[i]);
        J(2, i, 1, j) += w * tau * (-c * g[j].dot(h_i));
        J(2, i, 2, j) += w * (vv + tau * (m.d0 * q_grad_aq.dot(h_i) + kap * dq * v[i] +
                                          m.epsilon * dgq.dot(g[i])));
      }
    }
  }
}

void StepSystem::assemble(const Vector& x, const Vector& phi_prev, const Vector& q_prev,
                          double tau, Vector& residual, SparseMatrix* jacobian) const {
  const Index n = space_->dof_count();
  const Index ne = space_->element_count();
  if (x.size() != 3 * n || phi_prev.size() != n || q_prev.size() != n) {
    throw std::invalid_argument("step system: vector sizes do not match the space");
  }
  residual.setZero(3 * n);
  if (jacobian != nullptr) {
    if (jacobian->nonZeros() != pattern_.nonZeros() || jacobian->rows() != 3 * n) {
      *jacobian = pattern_;
    }
    std::fill(jacobian->valuePtr(), jacobian->valuePtr() + jacobian->nonZeros(), 0.0);
  }
  const bool with_jac = jacobian != nullptr;

  const auto scatter = [&](Index e, const double* lr, const double* lj) {
    const auto& dofs = space_->element_dofs(e);
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < 6; ++i) residual[a * n + dofs[i]] += lr[a * 6 + i];
    if (with_jac) {
      double* values = jacobian->valuePtr();
      const Index* pos = scatter_.data() + static_cast<std::size_t>(e) * kLocalJac;
      for (int r = 0; r < kLocalJac; ++r) values[pos[r]] += lj[r];
    }
  };

  if (threads_ <= 1) {
    std::array<double, kLocal> lr{};
    std::vector<double> lj(with_jac ? kLocalJac : 0);
    for (Index e = 0; e < ne; ++e) {
      element_kernel(e, x, phi_prev, q_prev, tau, lr.data(), with_jac ? lj.data() : nullptr);
      scatter(e, lr.data(), lj.data());
    }
    return;
  }

  // Local contributions in parallel; accumulation stays in element order, so
  // the result is bitwise identical to the serial path.
  std::vector<double> all_res(static_cast<std::size_t>(ne) * kLocal);
  std::vector<double> all_jac(with_jac ? static_cast<std::size_t>(ne) * kLocalJac : 0);
  parallel_for(ne, threads_, [&](long begin, long end) {
    for (long e = begin; e < end; ++e) {
      element_kernel(static_cast<Index>(e), x, phi_prev, q_prev, tau,
                     all_res.data() + e * kLocal,
                     with_jac ? all_jac.data() + e * kLocalJac : nullptr);
    }
  });
  for (Index e = 0; e < ne; ++e) {
    scatter(e, all_res.data() + static_cast<std::size_t>(e) * kLocal,
            with_jac ? all_jac.data() + static_cast<std::size_t>(e) * kLocalJac : nullptr);
  }
}

AssembledSystem assemble_step_system(const SpacePtr& space, const ModelCoefficients& coeffs,
                                     const Vector& iterate, const FEFunction& phi_prev,
                                     const FEFunction& q_prev, double tau) {
  require_space(space, phi_prev, "previous phi");
  require_space(space, q_prev, "previous q");
  StepSystem system(space, coeffs);
  AssembledSystem out;
  out.jacobian = system.empty_jacobian();
  system.assemble(iterate, phi_prev.coefficients, q_prev.coefficients, tau, out.residual,
                  &out.jacobian);
  return out;
}

FEFunction discrete_chemical_potential(const ModelCoefficients& coeffs, const FEFunction& phi) {
  const FESpace& space = *phi.space;
  const QuadRule& rule = triangle_rule();
  Vector rhs = Vector::Zero(space.dof_count());
  for (Index e = 0; e < space.element_count(); ++e) {
    const ElementGeometry& geo = space.geometry(e);
    const auto& dofs = space.element_dofs(e);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const double w = rule.weights[k] * geo.area;
      const auto v = p2::values(rule.points[k]);
      const auto g = p2::gradients(rule.points[k], geo.grad_lambda);
      double p = 0.0;
      Point2 gp = Point2::Zero();
      for (int i = 0; i < 6; ++i) {
        p += phi.coefficients[dofs[i]] * v[i];
        gp += phi.coefficients[dofs[i]] * g[i];
      }
      const double fp = coeffs.potential.d1(p);
      for (int i = 0; i < 6; ++i) rhs[dofs[i]] += w * (coeffs.gamma * gp.dot(g[i]) + fp * v[i]);
    }
  }
  SparseMatrix mass = assemble_matrix(space, MatrixKind::mass);
  mass.makeCompressed();
  SparseDirectSolver solver;
  solver.factorize(mass);
  return FEFunction(phi.space, solver.solve(rhs));
}

TimeStepper::TimeStepper(SpacePtr space, const ModelCoefficients& coeffs, NewtonConfig cfg,
                         int threads)
    : space_(std::move(space)), system_(space_, coeffs, threads), cfg_(cfg) {
  if (!(cfg_.tolerance > 0.0)) throw std::invalid_argument("Newton tolerance must be positive");
  if (cfg_.max_iterations < 1) throw std::invalid_argument("Newton needs at least one iteration");
  jacobian_ = system_.empty_jacobian();
}

bool TimeStepper::newton(Vector& x, const Vector& phi_prev, const Vector& q_prev, double tau,
                         int max_iter, NewtonStats& stats, double& norm) {
  const Index n = space_->dof_count();
  Vector r;
  Vector r_trial;
  system_.assemble(x, phi_prev, q_prev, tau, r, &jacobian_);
  norm = scaled_norm(r, n);
  stats.residual_history.push_back(norm);

  for (int it = 0; !(norm <= cfg_.tolerance); ++it) {
    if (!std::isfinite(norm) || it >= max_iter) return false;
    try {
      solver_.factorize(jacobian_);
    } catch (const std::runtime_error&) {
      return false;
    }
    const Vector delta = solver_.solve(-r);
    ++stats.iterations;

    double step_len = 1.0;
    Vector trial = x + delta;
    if (cfg_.damping) {
      system_.assemble(trial, phi_prev, q_prev, tau, r_trial, nullptr);
      double trial_norm = scaled_norm(r_trial, n);
      int halvings = 0;
      while (!(trial_norm < norm || trial_norm <= cfg_.tolerance) && halvings < 8) {
        step_len *= 0.5;
        trial = x + step_len * delta;
        system_.assemble(trial, phi_prev, q_prev, tau, r_trial, nullptr);
        trial_norm = scaled_norm(r_trial, n);
        ++halvings;
      }
      stats.backtracks += halvings;
    }
    x = std::move(trial);
    system_.assemble(x, phi_prev, q_prev, tau, r, &jacobian_);
    norm = scaled_norm(r, n);
    stats.residual_history.push_back(norm);
  }
  return true;
}

StepResult TimeStepper::step(const FEFunction& phi_prev, const FEFunction& q_prev,
                             const FEFunction& mu_guess, double tau) {
  require_space(space_, phi_prev, "previous phi");
  require_space(space_, q_prev, "previous q");
  require_space(space_, mu_guess, "mu guess");
  if (!(tau > 0.0)) throw std::invalid_argument("time step must be positive");

  const Index n = space_->dof_count();
  const Vector& pp = phi_prev.coefficients;
  const Vector& qp = q_prev.coefficients;
  Vector guess(3 * n);
  guess << pp, mu_guess.coefficients, qp;

  NewtonStats stats;
  double norm = 0.0;
  Vector x = guess;
  bool ok = newton(x, pp, qp, tau, cfg_.max_iterations, stats, norm);
  const double plain_norm = norm;

  if (!ok && cfg_.continuation_depth > 0) {
    // Homotopy in the step length; every stage solves the slab equations
    // exactly, so the final root is a root of the full-step system.
    const double min_increment = std::ldexp(1.0, -2 * cfg_.continuation_depth);
    const int budget = stats.iterations + cfg_.continuation_max_iterations;
    Vector root = guess;
    double s_done = 0.0;
    double increment = std::ldexp(1.0, -cfg_.continuation_depth);
    while (s_done < 1.0 && stats.iterations < budget) {
      const double s_try = std::min(1.0, s_done + increment);
      Vector y = root;
      const int left = budget - stats.iterations;
      if (newton(y, pp, qp, s_try * tau, std::min(cfg_.max_iterations, left), stats, norm)) {
        root = std::move(y);
        s_done = s_try;
        ++stats.continuation_stages;
        increment *= 2.0;
      } else {
        increment *= 0.5;
        if (increment < min_increment) break;
      }
    }
    ok = s_done >= 1.0;
    if (ok) x = std::move(root);
  }

  if (!ok) {
    std::ostringstream os;
    os << "Newton did not converge (scaled residual " << plain_norm << " after "
       << cfg_.max_iterations << " iterations at the full step";
    if (cfg_.continuation_depth > 0) {
      os << ", step-length continuation failed after " << stats.continuation_stages
         << " stages";
    }
    os << ", " << stats.iterations << " iterations in total); try a smaller time step";
    throw NewtonFailure(os.str(), plain_norm, stats.iterations);
  }

  return StepResult{FEFunction(space_, x.segment(0, n)), FEFunction(space_, x.segment(2 * n, n)),
                    FEFunction(space_, x.segment(n, n)), std::move(stats)};
}

StepResult solve_time_step(const SpacePtr& space, const ModelCoefficients& coeffs,
                           const FEFunction& phi_prev, const FEFunction& q_prev, double tau,
                           const NewtonConfig& cfg, const FEFunction* mu_guess) {
  TimeStepper stepper(space, coeffs, cfg);
  if (mu_guess != nullptr) return stepper.step(phi_prev, q_prev, *mu_guess, tau);
  return stepper.step(phi_prev, q_prev, discrete_chemical_potential(coeffs, phi_prev), tau);
}

Trajectory run_simulation(const SpacePtr& space, const ModelCoefficients& coeffs,
                          const TimeGrid& grid, const FEFunction& phi0, const FEFunction& q0,
                          const NewtonConfig& cfg, const SimulationOptions& options) {
  require_space(space, phi0, "initial phi");
  require_space(space, q0, "initial q");
  if (grid.N < 1 || !(grid.T > 0.0)) throw std::invalid_argument("invalid time grid");

  Trajectory traj;
  traj.space = space;
  traj.grid = grid;
  const double tau = grid.tau();

  FEFunction phi = phi0;
  FEFunction q = q0;
  FEFunction mu = discrete_chemical_potential(coeffs, phi0);

  DiagnosticsRecord rec0;
  rec0.step = 0;
  rec0.t = 0.0;
  rec0.mass = functional(*space, FunctionalKind::integral, phi);
  rec0.energy = energy(*space, phi, q, coeffs);
  traj.diagnostics.push_back(rec0);
  if (options.store_fields) {
    traj.phi_nodes.push_back(phi);
    traj.q_nodes.push_back(q);
  }
  if (options.on_step) options.on_step(StepView{0, 0.0, phi, q, mu, traj.diagnostics.back()});

  TimeStepper stepper(space, coeffs, cfg, options.threads);
  for (int step = 1; step <= grid.N; ++step) {
    StepResult res;
    try {
      res = stepper.step(phi, q, mu, tau);
    } catch (const NewtonFailure& err) {
      std::ostringstream os;
      os << "time step " << step << " (t = " << grid.t(step) << "): " << err.what();
      throw NewtonFailure(os.str(), err.residual(), err.iterations(), step);
    }

    FEFunction phi_bar(space, 0.5 * (phi.coefficients + res.phi.coefficients));
    FEFunction q_bar(space, 0.5 * (q.coefficients + res.q.coefficients));

    const DiagnosticsRecord& prev = traj.diagnostics.back();
    DiagnosticsRecord rec;
    rec.step = step;
    rec.t = grid.t(step);
    rec.mass = functional(*space, FunctionalKind::integral, res.phi);
    rec.energy = energy(*space, res.phi, res.q, coeffs);
    rec.dissipation = dissipation(*space, phi_bar, res.mu, q_bar, coeffs);
    rec.identity_residual = std::abs(rec.energy - prev.energy + tau * rec.dissipation);
    rec.newton_iterations = res.stats.iterations;
    traj.diagnostics.push_back(rec);

    phi = std::move(res.phi);
    q = std::move(res.q);
    mu = std::move(res.mu);
    if (options.store_fields) {
      traj.phi_nodes.push_back(phi);
      traj.q_nodes.push_back(q);
      traj.mu_slabs.push_back(mu);
    }
    if (options.on_step) {
      options.on_step(StepView{step, rec.t, phi, q, mu, traj.diagnostics.back()});
    }
  }
  return traj;
}

}  // namespace vpsfem
