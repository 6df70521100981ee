#include "vpsfem/assembly.hpp"

#include <cmath>
#include <stdexcept>

#include "vpsfem/linear_solver.hpp"
#include "vpsfem/quadrature.hpp"

namespace vpsfem {

SparseMatrix assemble_matrix(const FESpace& space, MatrixKind kind) {
  const QuadRule& rule = triangle_rule();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(space.element_count()) * 36);

  for (Index e = 0; e < space.element_count(); ++e) {
    const ElementGeometry& geo = space.geometry(e);
    const auto& dofs = space.element_dofs(e);
    Eigen::Matrix<double, 6, 6> local = Eigen::Matrix<double, 6, 6>::Zero();
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * geo.area;
      if (kind == MatrixKind::mass) {
        const auto v = p2::values(rule.points[q]);
        for (int i = 0; i < 6; ++i)
          for (int j = 0; j < 6; ++j) local(i, j) += w * v[i] * v[j];
      } else {
        const auto g = p2::gradients(rule.points[q], geo.grad_lambda);
        for (int i = 0; i < 6; ++i)
          for (int j = 0; j < 6; ++j) local(i, j) += w * g[i].dot(g[j]);
      }
    }
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) entries.emplace_back(dofs[i], dofs[j], local(i, j));
  }

  SparseMatrix m(space.dof_count(), space.dof_count());
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

FEFunction project(const SpacePtr& space, ProjectionKind kind, const ScalarField& field) {
  if (!field.value) throw std::invalid_argument("projection needs a field value function");
  if (kind == ProjectionKind::H1 && !field.gradient) {
    throw std::invalid_argument("H1 projection needs the field gradient");
  }
  const QuadRule& rule = triangle_rule();
  Vector rhs = Vector::Zero(space->dof_count());
  for (Index e = 0; e < space->element_count(); ++e) {
    const ElementGeometry& geo = space->geometry(e);
    const auto& dofs = space->element_dofs(e);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * geo.area;
      const Point2 x = space->map_to_physical(e, rule.points[q]);
      const auto v = p2::values(rule.points[q]);
      const double u = field.value(x);
      for (int i = 0; i < 6; ++i) rhs[dofs[i]] += w * u * v[i];
      if (kind == ProjectionKind::H1) {
        const Point2 gu = field.gradient(x);
        const auto g = p2::gradients(rule.points[q], geo.grad_lambda);
        for (int i = 0; i < 6; ++i) rhs[dofs[i]] += w * gu.dot(g[i]);
      }
    }
  }

  SparseMatrix system = assemble_matrix(*space, MatrixKind::mass);
  if (kind == ProjectionKind::H1) system += assemble_matrix(*space, MatrixKind::stiffness);
  system.makeCompressed();

  SparseDirectSolver solver;
  solver.factorize(system);
  return FEFunction(space, solver.solve(rhs));
}

double functional(const FESpace& space, FunctionalKind kind, const FEFunction& fun) {
  if (fun.space.get() != &space) throw std::invalid_argument("function lives on another space");
  const QuadRule& rule = triangle_rule();
  double acc = 0.0;
  for (Index e = 0; e < space.element_count(); ++e) {
    const ElementGeometry& geo = space.geometry(e);
    const auto& dofs = space.element_dofs(e);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * geo.area;
      if (kind == FunctionalKind::h1_seminorm) {
        const auto g = p2::gradients(rule.points[q], geo.grad_lambda);
        Point2 grad = Point2::Zero();
        for (int i = 0; i < 6; ++i) grad += fun.coefficients[dofs[i]] * g[i];
        acc += w * grad.squaredNorm();
      } else {
        const auto v = p2::values(rule.points[q]);
        double u = 0.0;
        for (int i = 0; i < 6; ++i) u += fun.coefficients[dofs[i]] * v[i];
        acc += w * (kind == FunctionalKind::integral ? u : u * u);
      }
    }
  }
  return kind == FunctionalKind::integral ? acc : std::sqrt(acc);
}

FieldError error_against(const FEFunction& fun, const ScalarField& field) {
  const FESpace& space = *fun.space;
  const QuadRule& rule = triangle_rule();
  double l2 = 0.0;
  double h1 = 0.0;
  for (Index e = 0; e < space.element_count(); ++e) {
    const ElementGeometry& geo = space.geometry(e);
    const auto& dofs = space.element_dofs(e);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * geo.area;
      const Point2 x = space.map_to_physical(e, rule.points[q]);
      const auto v = p2::values(rule.points[q]);
      const auto g = p2::gradients(rule.points[q], geo.grad_lambda);
      double u = 0.0;
      Point2 grad = Point2::Zero();
      for (int i = 0; i < 6; ++i) {
        u += fun.coefficients[dofs[i]] * v[i];
        grad += fun.coefficients[dofs[i]] * g[i];
      }
      const double du = u - field.value(x);
      l2 += w * du * du;
      if (field.gradient) h1 += w * (grad - field.gradient(x)).squaredNorm();
    }
  }
  return {std::sqrt(l2), std::sqrt(h1)};
}

NormMatrices::NormMatrices(const FESpace& space)
    : mass_(assemble_matrix(space, MatrixKind::mass)),
      stiffness_(assemble_matrix(space, MatrixKind::stiffness)) {}

double NormMatrices::l2_squared(const Vector& c) const { return c.dot(mass_ * c); }

double NormMatrices::h1_semi_squared(const Vector& c) const { return c.dot(stiffness_ * c); }

}  // namespace vpsfem
