#include "vpsfem/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "vpsfem/quadrature.hpp"

namespace vpsfem {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTanhSaturation = 40.0;

struct ModulusParts {
  double a = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

ModulusParts modulus_parts(const FamilyParameters& p, double s) {
  const double lo = p.clamp_delta;
  const double hi = 1.0 - p.clamp_delta;
  const bool clamped = s < lo || s > hi;
  const double sc = std::clamp(s, lo, hi);
  const double cot = std::cos(kPi * sc) / std::sin(kPi * sc);
  const double cot_star = std::cos(kPi * p.phi_star) / std::sin(kPi * p.phi_star);
  double u = p.A_steepness * (cot_star - cot);
  double du = p.A_steepness * kPi * (1.0 + cot * cot);
  double d2u = -2.0 * p.A_steepness * kPi * kPi * cot * (1.0 + cot * cot);
  if (clamped || std::abs(u) > kTanhSaturation) {
    u = std::clamp(u, -kTanhSaturation, kTanhSaturation);
    du = 0.0;
    d2u = 0.0;
  }
  const double th = std::tanh(u);
  const double sech2 = 1.0 - th * th;
  return {p.A_amplitude * (1.0 + th), p.A_amplitude * sech2 * du,
          p.A_amplitude * (sech2 * d2u - 2.0 * th * sech2 * du * du)};
}

double golden_min(const std::function<double(double)>& g, double a, double b) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - r * (b - a);
  double x2 = a + r * (b - a);
  double g1 = g(x1);
  double g2 = g(x2);
  for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
    if (g1 < g2) {
      b = x2;
      x2 = x1;
      g2 = g1;
      x1 = b - r * (b - a);
      g1 = g(x1);
    } else {
      a = x1;
      x1 = x2;
      g1 = g2;
      x2 = a + r * (b - a);
      g2 = g(x2);
    }
  }
  return 0.5 * (a + b);
}

/// Minimum location of g on [lo, hi]: dense sampling, then golden section on
/// the bracketing cell.
double sampled_argmin(const std::function<double(double)>& g, double lo, double hi) {
  constexpr int kSamples = 20000;
  const double dx = (hi - lo) / kSamples;
  int best = 0;
  double best_val = g(lo);
  for (int k = 1; k <= kSamples; ++k) {
    const double v = g(lo + k * dx);
    if (v < best_val) {
      best_val = v;
      best = k;
    }
  }
  const double a = std::max(lo, lo + (best - 1) * dx);
  const double b = std::min(hi, lo + (best + 1) * dx);
  const double x = golden_min(g, a, b);
  return g(x) < best_val ? x : lo + best * dx;
}

struct QpField {
  double value = 0.0;
  Point2 grad = Point2::Zero();
};

QpField field_at(const Vector& c, const std::array<Index, 6>& dofs,
                 const std::array<double, 6>& v, const std::array<Point2, 6>& g) {
  QpField out;
  for (int i = 0; i < 6; ++i) {
    out.value += c[dofs[i]] * v[i];
    out.grad += c[dofs[i]] * g[i];
  }
  return out;
}

void require_same_space(const FESpace& space, std::initializer_list<const FEFunction*> funs) {
  for (const FEFunction* f : funs) {
    if (f->space.get() != &space) throw std::invalid_argument("fields must share one space");
  }
}

}  // namespace

FamilyParameters experiment1_parameters() {
  FamilyParameters p;
  p.gamma = 1e-3;
  p.epsilon = 1e-3;
  p.d0 = 1.0;
  p.c_scale = 4.0 / std::sqrt(10.0);
  p.potential_scale = 16.0;
  p.kappa_scale = 1e-2;
  p.A_amplitude = 5e-3;
  p.A_steepness = 5.0;
  p.phi_star = 0.5;
  return p;
}

FamilyParameters experiment2_parameters(double phi_star) {
  FamilyParameters p;
  p.gamma = 1e-3;
  p.epsilon = 1e-3;
  p.d0 = 1.0;
  p.c_scale = 1.0 / std::sqrt(10.0);
  p.potential_scale = 1.0;
  p.kappa_scale = 1e-3;
  p.A_amplitude = 0.5;
  p.A_steepness = 10.0;
  p.phi_star = phi_star;
  return p;
}

ModelCoefficients make_coefficients(const FamilyParameters& p, std::string name) {
  if (!(p.phi_star > 0.0 && p.phi_star < 1.0)) {
    throw std::invalid_argument("phi_star must lie in (0, 1)");
  }
  if (!(p.clamp_delta > 0.0 && p.clamp_delta < 0.5)) {
    throw std::invalid_argument("clamp_delta must lie in (0, 0.5)");
  }
  ModelCoefficients m;
  m.name = std::move(name);
  m.gamma = p.gamma;
  m.epsilon = p.epsilon;
  m.d0 = p.d0;
  m.clamp_delta = p.clamp_delta;

  const double cs = p.c_scale;
  m.cross.value = [cs](double s) { return cs * s * (1.0 - s); };
  m.cross.d1 = [cs](double s) { return cs * (1.0 - 2.0 * s); };
  m.cross.d2 = [cs](double) { return -2.0 * cs; };

  const double eps = p.epsilon;
  const double d0 = p.d0;
  m.mobility.value = [cs, eps, d0](double s) {
    const double c = cs * s * (1.0 - s);
    return c * c / d0 + eps;
  };
  m.mobility.d1 = [cs, d0](double s) {
    return 2.0 * (cs * s * (1.0 - s)) * (cs * (1.0 - 2.0 * s)) / d0;
  };

  const double fs = p.potential_scale;
  const double wa = p.well_low;
  const double wb = p.well_high;
  m.potential.value = [fs, wa, wb](double s) {
    const double x = (s - wa) * (s - wb);
    return fs * x * x;
  };
  m.potential.d1 = [fs, wa, wb](double s) {
    return 2.0 * fs * (s - wa) * (s - wb) * (2.0 * s - wa - wb);
  };
  m.potential.d2 = [fs, wa, wb](double s) {
    const double y = 2.0 * s - wa - wb;
    return 2.0 * fs * (y * y + 2.0 * (s - wa) * (s - wb));
  };

  const double ks = p.kappa_scale;
  m.relaxation.value = [ks](double s) { return ks / (10.0 * s * s + 1e-4); };
  m.relaxation.d1 = [ks](double s) {
    const double den = 10.0 * s * s + 1e-4;
    return -ks * 20.0 * s / (den * den);
  };

  m.modulus.value = [p](double s) { return modulus_parts(p, s).a; };
  m.modulus.d1 = [p](double s) { return modulus_parts(p, s).d1; };
  m.modulus.d2 = [p](double s) { return modulus_parts(p, s).d2; };

  derive_alpha(m);
  return m;
}

double derive_f1(const ScalarFunction& potential, double lo, double hi, double* argmin) {
  if (!(hi > lo)) throw std::invalid_argument("empty bracket for f1 derivation");
  const double x2 = sampled_argmin(potential.d2, lo, hi);
  const double x0 = sampled_argmin(potential.value, lo, hi);
  if (argmin != nullptr) *argmin = x2;
  return std::max({0.0, -potential.d2(x2), -potential.value(x0)});
}

void derive_alpha(ModelCoefficients& coeffs, double lo, double hi) {
  coeffs.f1 = derive_f1(coeffs.potential, lo, hi);
  coeffs.alpha = coeffs.f1 + 1.0;
}

double energy(const FESpace& space, const FEFunction& phi, const FEFunction& q,
              const ModelCoefficients& coeffs) {
  require_same_space(space, {&phi, &q});
  const QuadRule& rule = triangle_rule();
  double acc = 0.0;
  for (Index e = 0; e < space.element_count(); ++e) {
    const ElementGeometry& geo = space.geometry(e);
    const auto& dofs = space.element_dofs(e);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const auto v = p2::values(rule.points[k]);
      const auto g = p2::gradients(rule.points[k], geo.grad_lambda);
      const QpField p = field_at(phi.coefficients, dofs, v, g);
      const QpField r = field_at(q.coefficients, dofs, v, g);
      acc += rule.weights[k] * geo.area *
             (0.5 * coeffs.gamma * p.grad.squaredNorm() + coeffs.potential.value(p.value) +
              0.5 * r.value * r.value);
    }
  }
  return acc;
}

double dissipation(const FESpace& space, const FEFunction& phi, const FEFunction& mu,
                   const FEFunction& q, const ModelCoefficients& coeffs) {
  require_same_space(space, {&phi, &mu, &q});
  const QuadRule& rule = triangle_rule();
  double acc = 0.0;
  for (Index e = 0; e < space.element_count(); ++e) {
    const ElementGeometry& geo = space.geometry(e);
    const auto& dofs = space.element_dofs(e);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const auto v = p2::values(rule.points[k]);
      const auto g = p2::gradients(rule.points[k], geo.grad_lambda);
      const QpField p = field_at(phi.coefficients, dofs, v, g);
      const QpField m = field_at(mu.coefficients, dofs, v, g);
      const QpField r = field_at(q.coefficients, dofs, v, g);
      const double b = coeffs.mobility.value(p.value);
      const double c = coeffs.cross.value(p.value);
      const double a = coeffs.modulus.value(p.value);
      const double da = coeffs.modulus.d1(p.value);
      const double kappa = coeffs.relaxation.value(p.value);
      const Point2 grad_aq = da * r.value * p.grad + a * r.grad;
      const Point2 flux = c * m.grad - coeffs.d0 * grad_aq;
      const double integrand = flux.squaredNorm() / coeffs.d0 +
                               (b - c * c / coeffs.d0) * m.grad.squaredNorm() +
                               coeffs.epsilon * r.grad.squaredNorm() + kappa * r.value * r.value;
      acc += rule.weights[k] * geo.area * integrand;
    }
  }
  return acc;
}

double relative_energy(const FESpace& space, const FEFunction& phi, const FEFunction& q,
                       const FEFunction& phi_hat, const FEFunction& q_hat,
                       const ModelCoefficients& coeffs) {
  require_same_space(space, {&phi, &q, &phi_hat, &q_hat});
  const QuadRule& rule = triangle_rule();
  double acc = 0.0;
  for (Index e = 0; e < space.element_count(); ++e) {
    const ElementGeometry& geo = space.geometry(e);
    const auto& dofs = space.element_dofs(e);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const auto v = p2::values(rule.points[k]);
      const auto g = p2::gradients(rule.points[k], geo.grad_lambda);
      const QpField p = field_at(phi.coefficients, dofs, v, g);
      const QpField ph = field_at(phi_hat.coefficients, dofs, v, g);
      const QpField r = field_at(q.coefficients, dofs, v, g);
      const QpField rh = field_at(q_hat.coefficients, dofs, v, g);
      const double dphi = p.value - ph.value;
      const double dq = r.value - rh.value;
      const double bregman = coeffs.potential.value(p.value) - coeffs.potential.value(ph.value) -
                             coeffs.potential.d1(ph.value) * dphi;
      acc += rule.weights[k] * geo.area *
             (0.5 * coeffs.gamma * (p.grad - ph.grad).squaredNorm() + bregman +
              0.5 * coeffs.alpha * dphi * dphi + 0.5 * dq * dq);
    }
  }
  return acc;
}

bool ValidationReport::passed() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const ValidationEntry& e) { return e.passed; });
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  os.precision(6);
  for (const auto& e : entries) {
    os << (e.passed ? "PASS  " : "FAIL  ") << e.inequality << "  (worst margin "
       << std::scientific << e.margin << ")\n";
  }
  return os.str();
}

ValidationReport validate_assumptions(const ModelCoefficients& coeffs, double phi_lo,
                                      double phi_hi, int samples) {
  if (samples < 100) throw std::invalid_argument("validation needs at least 100 samples");
  if (!(phi_hi > phi_lo)) throw std::invalid_argument("empty validation range");

  constexpr double inf = std::numeric_limits<double>::infinity();
  double min_b = inf, min_c = inf, min_gap = inf, min_kappa = inf, min_a = inf;
  double min_f = inf, min_f2 = inf;
  for (int k = 0; k < samples; ++k) {
    const double s = phi_lo + (phi_hi - phi_lo) * k / (samples - 1);
    const double b = coeffs.mobility.value(s);
    const double c = coeffs.cross.value(s);
    min_b = std::min(min_b, b);
    min_c = std::min(min_c, c);
    min_gap = std::min(min_gap, b - c * c / coeffs.d0 - coeffs.epsilon);
    min_kappa = std::min(min_kappa, coeffs.relaxation.value(s));
    min_a = std::min(min_a, coeffs.modulus.value(s));
    min_f = std::min(min_f, coeffs.potential.value(s));
    if (coeffs.potential.d2) min_f2 = std::min(min_f2, coeffs.potential.d2(s));
  }

  ValidationReport report;
  const auto add = [&report](std::string what, double margin, bool strict) {
    const bool ok = strict ? margin > 0.0 : margin >= -1e-12;
    report.entries.push_back({std::move(what), margin, strict, ok});
  };
  add("gamma > 0", coeffs.gamma, true);
  add("epsilon > 0", coeffs.epsilon, true);
  add("d0 > 0", coeffs.d0, true);
  add("b >= b1 > 0", min_b, true);
  add("c >= 0", min_c, false);
  add("b >= c^2/d0 + epsilon", min_gap, false);
  add("kappa >= kappa1 > 0", min_kappa, true);
  add("A >= 0", min_a, false);
  add("f >= -f1", min_f + coeffs.f1, false);
  if (coeffs.potential.d2) add("f'' >= -f1", min_f2 + coeffs.f1, false);
  return report;
}

}  // namespace vpsfem
