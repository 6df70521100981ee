#include "vpsfem/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <sstream>
#include <stdexcept>

#include "vpsfem/assembly.hpp"

namespace vpsfem {

namespace {

void require_fields(const Trajectory& t, const char* which) {
  const auto n = static_cast<std::size_t>(t.grid.N);
  if (t.phi_nodes.size() != n + 1 || t.q_nodes.size() != n + 1 || t.mu_slabs.size() != n) {
    throw std::invalid_argument(std::string(which) + " trajectory does not hold all fields");
  }
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::vector<double> component_eoc(const std::vector<ErrorComponents>& errors,
                                  double (*get)(const ErrorComponents&)) {
  std::vector<double> e;
  e.reserve(errors.size());
  for (const auto& c : errors) e.push_back(get(c));
  return eoc(e);
}

}  // namespace

ErrorComponents compare_trajectories(const Trajectory& coarse, const Trajectory& fine) {
  require_fields(coarse, "coarse");
  require_fields(fine, "fine");
  if (fine.grid.N != 2 * coarse.grid.N ||
      std::abs(fine.grid.T - coarse.grid.T) > 1e-12 * std::max(1.0, coarse.grid.T)) {
    throw std::invalid_argument("fine time grid must halve the coarse step over the same interval");
  }
  const SparseMatrix p = prolongation_matrix(*coarse.space, *fine.space);
  const NormMatrices norms(*fine.space);
  const int n = coarse.grid.N;
  const double tau_f = fine.grid.tau();

  ErrorComponents out;
  for (int m = 0; m <= 2 * n; ++m) {
    Vector phi_c;
    Vector q_c;
    if (m % 2 == 0) {
      phi_c = coarse.phi_nodes[m / 2].coefficients;
      q_c = coarse.q_nodes[m / 2].coefficients;
    } else {
      phi_c = 0.5 * (coarse.phi_nodes[m / 2].coefficients +
                     coarse.phi_nodes[m / 2 + 1].coefficients);
      q_c = 0.5 * (coarse.q_nodes[m / 2].coefficients + coarse.q_nodes[m / 2 + 1].coefficients);
    }
    const Vector dphi = p * phi_c - fine.phi_nodes[m].coefficients;
    const Vector dq = p * q_c - fine.q_nodes[m].coefficients;
    out.e_phi = std::max(out.e_phi, norms.h1_squared(dphi));
    out.e_q = std::max(out.e_q, norms.l2_squared(dq));
  }

  for (int s = 0; s < n; ++s) {
    const Vector mu_c = p * coarse.mu_slabs[s].coefficients;
    const Vector qbar_c =
        p * (0.5 * (coarse.q_nodes[s].coefficients + coarse.q_nodes[s + 1].coefficients));
    for (int sub = 0; sub < 2; ++sub) {
      const int f = 2 * s + sub;
      const Vector qbar_f =
          0.5 * (fine.q_nodes[f].coefficients + fine.q_nodes[f + 1].coefficients);
      out.e_mu_bar += tau_f * norms.h1_squared(mu_c - fine.mu_slabs[f].coefficients);
      out.e_q_bar += tau_f * norms.h1_squared(qbar_c - qbar_f);
    }
  }
  return out;
}

std::vector<double> eoc(const std::vector<double>& errors) {
  std::vector<double> rates;
  for (std::size_t k = 0; k < errors.size(); ++k) {
    if (!(errors[k] > 0.0)) {
      throw std::invalid_argument("eoc needs positive errors (entry " + std::to_string(k) + ")");
    }
    if (k > 0) rates.push_back(std::log2(errors[k - 1] / errors[k]));
  }
  return rates;
}

std::string StructureReport::to_string() const {
  std::ostringstream os;
  os << (mass_ok() ? "PASS" : "FAIL") << "  max mass drift          " << sci(max_mass_drift)
     << "  (tol " << sci(mass_tolerance) << ")\n";
  os << (identity_ok() ? "PASS" : "FAIL") << "  max energy identity res " << sci(max_identity_residual)
     << "  (tol " << sci(identity_tolerance) << ")\n";
  os << (monotonicity_violations == 0 ? "PASS" : "FAIL") << "  energy increases        "
     << monotonicity_violations << "  (tol " << sci(monotonicity_tolerance) << ")\n";
  return os.str();
}

StructureReport structure_report(const Trajectory& traj) {
  StructureReport rep;
  const auto& d = traj.diagnostics;
  if (d.empty()) throw std::invalid_argument("trajectory has no diagnostics");

  std::vector<double> mass;
  if (!traj.phi_nodes.empty()) {
    for (const auto& phi : traj.phi_nodes)
      mass.push_back(functional(*phi.space, FunctionalKind::integral, phi));
  } else {
    for (const auto& r : d) mass.push_back(r.mass);
  }
  const double mass_scale = 1.0 + std::abs(mass.front());
  for (double m : mass) {
    rep.max_mass_drift = std::max(rep.max_mass_drift, std::abs(m - mass.front()) / mass_scale);
  }

  const double energy_scale = 1.0 + std::abs(d.front().energy);
  for (std::size_t n = 1; n < d.size(); ++n) {
    rep.max_identity_residual =
        std::max(rep.max_identity_residual, d[n].identity_residual / energy_scale);
    if (d[n].energy > d[n - 1].energy + rep.monotonicity_tolerance) {
      ++rep.monotonicity_violations;
    }
  }
  return rep;
}

std::vector<double> ConvergenceReport::eoc_total() const {
  return component_eoc(errors, [](const ErrorComponents& e) { return e.total(); });
}
std::vector<double> ConvergenceReport::eoc_phi() const {
  return component_eoc(errors, [](const ErrorComponents& e) { return e.e_phi; });
}
std::vector<double> ConvergenceReport::eoc_q() const {
  return component_eoc(errors, [](const ErrorComponents& e) { return e.e_q; });
}
std::vector<double> ConvergenceReport::eoc_mu_bar() const {
  return component_eoc(errors, [](const ErrorComponents& e) { return e.e_mu_bar; });
}
std::vector<double> ConvergenceReport::eoc_q_bar() const {
  return component_eoc(errors, [](const ErrorComponents& e) { return e.e_q_bar; });
}

std::string ConvergenceReport::to_text() const {
  const std::vector<std::vector<double>> rates = {eoc_total(), eoc_phi(), eoc_q(), eoc_mu_bar(),
                                                  eoc_q_bar()};
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%3s %6s | %10s %6s | %10s %6s | %10s %6s | %10s %6s | %10s %6s\n",
                "k", "n", "e", "eoc", "e_phi", "eoc", "e_q", "eoc", "e_mu", "eoc", "e_qbar", "eoc");
  os << line;
  for (std::size_t k = 0; k < errors.size(); ++k) {
    const auto& e = errors[k];
    const double vals[5] = {e.total(), e.e_phi, e.e_q, e.e_mu_bar, e.e_q_bar};
    std::snprintf(line, sizeof line, "%3zu %6d", k, levels.at(k).n);
    os << line;
    for (int c = 0; c < 5; ++c) {
      const std::string r = k == 0 ? std::string("---") : fixed2(rates[c][k - 1]);
      std::snprintf(line, sizeof line, " | %10s %6s", sci(vals[c]).c_str(), r.c_str());
      os << line;
    }
    os << '\n';
  }
  return os.str();
}

std::string ConvergenceReport::to_csv() const {
  const std::vector<std::vector<double>> rates = {eoc_total(), eoc_phi(), eoc_q(), eoc_mu_bar(),
                                                  eoc_q_bar()};
  std::ostringstream os;
  os << "k,n,h,tau,e,eoc,e_phi,eoc_phi,e_q,eoc_q,e_mu_bar,eoc_mu_bar,e_q_bar,eoc_q_bar\n";
  char buf[64];
  const auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (std::size_t k = 0; k < errors.size(); ++k) {
    const auto& e = errors[k];
    const double vals[5] = {e.total(), e.e_phi, e.e_q, e.e_mu_bar, e.e_q_bar};
    os << k << ',' << levels.at(k).n << ',' << num(levels.at(k).h) << ','
       << num(levels.at(k).tau);
    for (int c = 0; c < 5; ++c) {
      os << ',' << num(vals[c]) << ',';
      if (k > 0) os << num(rates[c][k - 1]);
    }
    os << '\n';
  }
  return os.str();
}

ConvergenceReport run_convergence_study(const ConvergenceSetup& setup) {
  if (setup.k_max < 1) throw std::invalid_argument("convergence study needs k_max >= 1");
  if (!setup.simulate) throw std::invalid_argument("convergence study needs a simulate callback");

  ConvergenceReport report;
  std::vector<SpacePtr> spaces;
  auto mesh = std::make_shared<const PeriodicMesh>(build_periodic_unit_square_mesh(setup.base_n));
  for (int k = 0; k <= setup.k_max; ++k) {
    if (k > 0) mesh = std::make_shared<const PeriodicMesh>(refine_uniform(*mesh));
    ConvergenceLevel level;
    level.k = k;
    level.n = mesh->cells_per_axis();
    level.h = 1.0 / level.n;
    level.tau = level.h;
    const double steps = setup.T * level.n;
    level.steps = static_cast<int>(std::lround(steps));
    if (level.steps < 1 || std::abs(steps - level.steps) > 1e-9) {
      throw std::invalid_argument("T * n must be a positive integer on every level");
    }
    report.levels.push_back(level);
    spaces.push_back(std::make_shared<const FESpace>(mesh));
  }

  const auto run_level = [&](int k) {
    const auto& lv = report.levels[static_cast<std::size_t>(k)];
    Trajectory t = setup.simulate(spaces[static_cast<std::size_t>(k)], TimeGrid(setup.T, lv.steps));
    if (setup.on_level) setup.on_level(lv);
    return t;
  };

  if (setup.threads > 1) {
    std::vector<std::future<Trajectory>> jobs;
    for (int k = 0; k <= setup.k_max; ++k) {
      jobs.push_back(std::async(std::launch::async, run_level, k));
    }
    std::vector<Trajectory> trajs;
    for (auto& j : jobs) trajs.push_back(j.get());
    for (int k = 0; k < setup.k_max; ++k) {
      report.errors.push_back(compare_trajectories(trajs[k], trajs[k + 1]));
    }
    return report;
  }

  Trajectory previous = run_level(0);
  for (int k = 1; k <= setup.k_max; ++k) {
    Trajectory current = run_level(k);
    report.errors.push_back(compare_trajectories(previous, current));
    previous = std::move(current);
  }
  return report;
}

}  // namespace vpsfem
