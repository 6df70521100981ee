#include "vpsfem/fe_space.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/LU>

namespace vpsfem {

namespace p2 {

std::array<double, kLocalDofs> values(const Bary& l) {
  return {l[0] * (2.0 * l[0] - 1.0), l[1] * (2.0 * l[1] - 1.0), l[2] * (2.0 * l[2] - 1.0),
          4.0 * l[0] * l[1],         4.0 * l[1] * l[2],         4.0 * l[2] * l[0]};
}

std::array<Point2, kLocalDofs> gradients(const Bary& l, const std::array<Point2, 3>& g) {
  return {(4.0 * l[0] - 1.0) * g[0],
          (4.0 * l[1] - 1.0) * g[1],
          (4.0 * l[2] - 1.0) * g[2],
          4.0 * (l[1] * g[0] + l[0] * g[1]),
          4.0 * (l[2] * g[1] + l[1] * g[2]),
          4.0 * (l[0] * g[2] + l[2] * g[0])};
}

const std::array<Bary, kLocalDofs>& nodes() {
  static const std::array<Bary, kLocalDofs> n{{{1.0, 0.0, 0.0},
                                               {0.0, 1.0, 0.0},
                                               {0.0, 0.0, 1.0},
                                               {0.5, 0.5, 0.0},
                                               {0.0, 0.5, 0.5},
                                               {0.5, 0.0, 0.5}}};
  return n;
}

}  // namespace p2

namespace {

double wrap_unit(double x) {
  double w = x - std::floor(x);
  if (w >= 1.0) w = 0.0;
  return w;
}

ElementGeometry element_geometry(const Triangle& tri) {
  const auto& p = tri.local_coords;
  Eigen::Matrix2d jac;
  jac.col(0) = p[1] - p[0];
  jac.col(1) = p[2] - p[0];
  const double det = jac.determinant();
  if (!(det > 0.0)) throw std::invalid_argument("element with nonpositive orientation");
  const Eigen::Matrix2d inv_t = jac.inverse().transpose();
  ElementGeometry geo;
  geo.area = 0.5 * det;
  geo.grad_lambda[1] = inv_t * Point2(1.0, 0.0);
  geo.grad_lambda[2] = inv_t * Point2(0.0, 1.0);
  geo.grad_lambda[0] = -(geo.grad_lambda[1] + geo.grad_lambda[2]);
  return geo;
}

Bary barycentric(const Triangle& tri, const Point2& x) {
  const auto& p = tri.local_coords;
  Eigen::Matrix2d jac;
  jac.col(0) = p[1] - p[0];
  jac.col(1) = p[2] - p[0];
  const Point2 ref = jac.partialPivLu().solve(x - p[0]);
  return {1.0 - ref.x() - ref.y(), ref.x(), ref.y()};
}

}  // namespace

FESpace::FESpace(std::shared_ptr<const PeriodicMesh> mesh) : mesh_(std::move(mesh)) {
  if (!mesh_) throw std::invalid_argument("FESpace needs a mesh");
  const Index nv = mesh_->vertex_count();
  dof_count_ = nv + mesh_->edge_count();
  element_dofs_.reserve(mesh_->triangles().size());
  geometry_.reserve(mesh_->triangles().size());
  for (const Triangle& tri : mesh_->triangles()) {
    element_dofs_.push_back({tri.vertices[0], tri.vertices[1], tri.vertices[2],
                             nv + tri.edges[0], nv + tri.edges[1], nv + tri.edges[2]});
    geometry_.push_back(element_geometry(tri));
  }
}

SpacePtr FESpace::create(PeriodicMesh mesh) {
  return std::make_shared<const FESpace>(std::make_shared<const PeriodicMesh>(std::move(mesh)));
}

Point2 FESpace::map_to_physical(Index element, const Bary& l) const {
  const auto& p = mesh_->triangles().at(static_cast<std::size_t>(element)).local_coords;
  return l[0] * p[0] + l[1] * p[1] + l[2] * p[2];
}

Point2 FESpace::dof_point(Index dof) const {
  const Index nv = mesh_->vertex_count();
  if (dof < 0 || dof >= dof_count_) throw std::out_of_range("dof index out of range");
  if (dof < nv) return mesh_->vertices()[static_cast<std::size_t>(dof)];
  const Edge& e = mesh_->edges()[static_cast<std::size_t>(dof - nv)];
  const Triangle& tri = mesh_->triangles()[static_cast<std::size_t>(e.triangles[0])];
  for (int k = 0; k < 3; ++k) {
    if (tri.edges[k] == dof - nv) {
      const Point2 mid = 0.5 * (tri.local_coords[k] + tri.local_coords[(k + 1) % 3]);
      return {wrap_unit(mid.x()), wrap_unit(mid.y())};
    }
  }
  throw std::logic_error("edge not found in its incident triangle");
}

FEFunction::FEFunction(SpacePtr s, Vector c) : space(std::move(s)), coefficients(std::move(c)) {
  if (!space) throw std::invalid_argument("FEFunction needs a space");
  if (coefficients.size() != space->dof_count()) {
    throw std::invalid_argument("coefficient count " + std::to_string(coefficients.size()) +
                                " does not match dof count " +
                                std::to_string(space->dof_count()));
  }
}

FEFunction FEFunction::zero(SpacePtr space) { return constant(std::move(space), 0.0); }

FEFunction FEFunction::constant(SpacePtr space, double value) {
  const Index n = space->dof_count();
  return FEFunction(std::move(space), Vector::Constant(n, value));
}

PointValue evaluate(const FEFunction& fun, Index element, const Bary& lambda) {
  const FESpace& space = *fun.space;
  if (element < 0 || element >= space.element_count()) {
    throw std::out_of_range("element index " + std::to_string(element) + " out of range");
  }
  constexpr double tol = 1e-12;
  if (lambda[0] < -tol || lambda[1] < -tol || lambda[2] < -tol ||
      std::abs(lambda[0] + lambda[1] + lambda[2] - 1.0) > tol) {
    throw std::invalid_argument("barycentric coordinates must be nonnegative and sum to 1");
  }
  const auto& dofs = space.element_dofs(element);
  const auto phi = p2::values(lambda);
  const auto grad = p2::gradients(lambda, space.geometry(element).grad_lambda);
  PointValue out;
  for (int k = 0; k < p2::kLocalDofs; ++k) {
    const double c = fun.coefficients[dofs[k]];
    out.value += c * phi[k];
    out.gradient += c * grad[k];
  }
  return out;
}

SparseMatrix prolongation_matrix(const FESpace& coarse, const FESpace& fine) {
  const PeriodicMesh& fmesh = fine.mesh();
  const PeriodicMesh& cmesh = coarse.mesh();
  if (!fmesh.is_refinement_of(cmesh)) {
    throw std::invalid_argument("prolongation requires the fine mesh to be the red refinement "
                                "of the coarse mesh");
  }
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(fine.dof_count()) * 6);
  std::vector<bool> done(static_cast<std::size_t>(fine.dof_count()), false);

  for (Index t = 0; t < fmesh.triangle_count(); ++t) {
    const Index parent = fmesh.parent_triangles()[static_cast<std::size_t>(t)];
    const Triangle& ptri = cmesh.triangles()[static_cast<std::size_t>(parent)];
    const auto& cdofs = coarse.element_dofs(parent);
    const auto& fdofs = fine.element_dofs(t);
    for (int k = 0; k < p2::kLocalDofs; ++k) {
      const Index row = fdofs[k];
      if (done[static_cast<std::size_t>(row)]) continue;
      done[static_cast<std::size_t>(row)] = true;
      const Point2 x = fine.map_to_physical(t, p2::nodes()[k]);
      const auto w = p2::values(barycentric(ptri, x));
      for (int j = 0; j < p2::kLocalDofs; ++j) {
        if (std::abs(w[j]) > 1e-14) entries.emplace_back(row, cdofs[j], w[j]);
      }
    }
  }
  SparseMatrix p(fine.dof_count(), coarse.dof_count());
  p.setFromTriplets(entries.begin(), entries.end());
  return p;
}

FEFunction prolong(const FEFunction& coarse, const SpacePtr& fine_space) {
  const SparseMatrix p = prolongation_matrix(*coarse.space, *fine_space);
  return FEFunction(fine_space, p * coarse.coefficients);
}

}  // namespace vpsfem
