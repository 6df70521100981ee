#pragma once

#include <array>
#include <memory>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "vpsfem/mesh.hpp"

namespace vpsfem {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Bary = std::array<double, 3>;

/// Quadratic Lagrange shape functions on the reference triangle, ordered as
/// vertices 0, 1, 2 followed by the midpoints of edges (0,1), (1,2), (2,0).
namespace p2 {

constexpr int kLocalDofs = 6;

std::array<double, kLocalDofs> values(const Bary& lambda);

/// Gradients given the physical gradients of the three barycentric
/// coordinates.
std::array<Point2, kLocalDofs> gradients(const Bary& lambda,
                                         const std::array<Point2, 3>& grad_lambda);

/// Barycentric coordinates of the six nodes.
const std::array<Bary, kLocalDofs>& nodes();

}  // namespace p2

struct ElementGeometry {
  double area = 0.0;
  std::array<Point2, 3> grad_lambda;
};

/// Continuous periodic P2 space. Degrees of freedom are numbered with all
/// mesh vertices first, then one per edge midpoint in edge order.
class FESpace {
 public:
  explicit FESpace(std::shared_ptr<const PeriodicMesh> mesh);

  static std::shared_ptr<const FESpace> create(PeriodicMesh mesh);

  [[nodiscard]] const PeriodicMesh& mesh() const { return *mesh_; }
  [[nodiscard]] const std::shared_ptr<const PeriodicMesh>& mesh_ptr() const { return mesh_; }

  [[nodiscard]] Index dof_count() const { return dof_count_; }
  [[nodiscard]] Index element_count() const { return mesh_->triangle_count(); }
  [[nodiscard]] const std::array<Index, p2::kLocalDofs>& element_dofs(Index element) const {
    return element_dofs_[static_cast<std::size_t>(element)];
  }
  [[nodiscard]] const ElementGeometry& geometry(Index element) const {
    return geometry_[static_cast<std::size_t>(element)];
  }

  /// Physical (unwrapped) position of a barycentric point in an element.
  [[nodiscard]] Point2 map_to_physical(Index element, const Bary& lambda) const;

  /// Location of a degree of freedom, wrapped into [0, 1)^2.
  [[nodiscard]] Point2 dof_point(Index dof) const;

 private:
  std::shared_ptr<const PeriodicMesh> mesh_;
  Index dof_count_ = 0;
  std::vector<std::array<Index, p2::kLocalDofs>> element_dofs_;
  std::vector<ElementGeometry> geometry_;
};

using SpacePtr = std::shared_ptr<const FESpace>;

/// A discrete field: coefficient vector over the degrees of freedom of a space.
struct FEFunction {
  FEFunction() = default;
  FEFunction(SpacePtr space, Vector coefficients);

  static FEFunction zero(SpacePtr space);
  static FEFunction constant(SpacePtr space, double value);

  SpacePtr space;
  Vector coefficients;
};

struct PointValue {
  double value = 0.0;
  Point2 gradient = Point2::Zero();
};

/// Exact evaluation of a P2 function in an element. Throws std::out_of_range
/// for a bad element index and std::invalid_argument for barycentric
/// coordinates that are negative or do not sum to one.
PointValue evaluate(const FEFunction& fun, Index element, const Bary& lambda);

/// Nodal interpolation of a pointwise function.
template <typename F>
FEFunction interpolate(const SpacePtr& space, F&& field) {
  Vector c(space->dof_count());
  for (Index i = 0; i < space->dof_count(); ++i) c[i] = field(space->dof_point(i));
  return FEFunction(space, std::move(c));
}

/// Matrix mapping coarse coefficients onto the red-refined space. Throws
/// std::invalid_argument when fine is not the refinement of coarse.
SparseMatrix prolongation_matrix(const FESpace& coarse, const FESpace& fine);

FEFunction prolong(const FEFunction& coarse, const SpacePtr& fine_space);

}  // namespace vpsfem
