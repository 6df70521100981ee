#pragma once

#include <functional>

#include "vpsfem/fe_space.hpp"

namespace vpsfem {

enum class MatrixKind { mass, stiffness };

/// Gram matrix of the basis in the L2 (mass) or gradient (stiffness) inner
/// product, integrated with triangle_rule().
SparseMatrix assemble_matrix(const FESpace& space, MatrixKind kind);

/// A pointwise field with its gradient, evaluated at physical (possibly
/// unwrapped) coordinates; fields are assumed 1-periodic.
struct ScalarField {
  std::function<double(const Point2&)> value;
  std::function<Point2(const Point2&)> gradient;
};

enum class ProjectionKind { L2, H1 };

/// L2 projection solves M c = (u, v); H1 projection solves
/// (M + K) c = (u, v) + (grad u, grad v). The H1 kind requires a gradient.
FEFunction project(const SpacePtr& space, ProjectionKind kind, const ScalarField& field);

enum class FunctionalKind { integral, l2_norm, h1_seminorm };

double functional(const FESpace& space, FunctionalKind kind, const FEFunction& fun);

/// Distance of a discrete function to a field: L2 norm and H1 seminorm of
/// the difference, by quadrature.
struct FieldError {
  double l2 = 0.0;
  double h1_semi = 0.0;
};

FieldError error_against(const FEFunction& fun, const ScalarField& field);

/// Mass and stiffness matrices of one space, kept for repeated norm
/// evaluations of coefficient vectors.
class NormMatrices {
 public:
  explicit NormMatrices(const FESpace& space);

  [[nodiscard]] double l2_squared(const Vector& c) const;
  [[nodiscard]] double h1_semi_squared(const Vector& c) const;
  [[nodiscard]] double h1_squared(const Vector& c) const {
    return l2_squared(c) + h1_semi_squared(c);
  }

  [[nodiscard]] const SparseMatrix& mass() const { return mass_; }
  [[nodiscard]] const SparseMatrix& stiffness() const { return stiffness_; }

 private:
  SparseMatrix mass_;
  SparseMatrix stiffness_;
};

}  // namespace vpsfem
