#include "vpsfem/mesh.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace vpsfem {

double PeriodicMesh::h() const { return std::sqrt(2.0) / n_; }

double PeriodicMesh::signed_area(Index triangle) const {
  const auto& p = triangles_.at(static_cast<std::size_t>(triangle)).local_coords;
  const Point2 a = p[1] - p[0];
  const Point2 b = p[2] - p[0];
  return 0.5 * (a.x() * b.y() - a.y() * b.x());
}

bool PeriodicMesh::is_refinement_of(const PeriodicMesh& coarse) const {
  return parent_n_ == coarse.n_ && n_ == 2 * coarse.n_ &&
         parent_.size() == triangles_.size();
}

PeriodicMesh build_periodic_unit_square_mesh(int n) {
  if (n < 3) {
    throw std::invalid_argument(
        "periodic mesh needs at least 3 cells per axis (got " + std::to_string(n) +
        "): with fewer, two distinct periodic edges connect the same vertex pair");
  }

  PeriodicMesh mesh;
  mesh.n_ = n;
  const double dx = 1.0 / n;
  const auto vid = [n](int i, int j) {
    return static_cast<Index>(((j % n + n) % n) * n + ((i % n + n) % n));
  };
  const auto cid = [n](int i, int j) {
    return static_cast<Index>(((j % n + n) % n) * n + ((i % n + n) % n));
  };

  mesh.vertices_.reserve(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) mesh.vertices_.emplace_back(i * dx, j * dx);
  }

  mesh.triangles_.resize(2 * static_cast<std::size_t>(n) * n);
  mesh.edges_.resize(3 * static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Index c = cid(i, j);
      const Point2 o(i * dx, j * dx);
      const Point2 ex(dx, 0.0);
      const Point2 ey(0.0, dx);

      Triangle& lower = mesh.triangles_[2 * c];
      lower.vertices = {vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)};
      lower.edges = {3 * c, 3 * cid(i + 1, j) + 1, 3 * c + 2};
      lower.local_coords = {o, o + ex, o + ex + ey};

      Triangle& upper = mesh.triangles_[2 * c + 1];
      upper.vertices = {vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)};
      upper.edges = {3 * c + 2, 3 * cid(i, j + 1), 3 * c + 1};
      upper.local_coords = {o, o + ex + ey, o + ey};

      mesh.edges_[3 * c] = Edge{{vid(i, j), vid(i + 1, j)}, {2 * c, 2 * cid(i, j - 1) + 1}};
      mesh.edges_[3 * c + 1] = Edge{{vid(i, j), vid(i, j + 1)}, {2 * c + 1, 2 * cid(i - 1, j)}};
      mesh.edges_[3 * c + 2] = Edge{{vid(i, j), vid(i + 1, j + 1)}, {2 * c, 2 * c + 1}};
    }
  }
  return mesh;
}

PeriodicMesh refine_uniform(const PeriodicMesh& mesh) {
  const int n = mesh.cells_per_axis();
  PeriodicMesh fine = build_periodic_unit_square_mesh(2 * n);
  fine.parent_n_ = n;
  fine.parent_.resize(fine.triangles_.size());
  for (int jj = 0; jj < 2 * n; ++jj) {
    for (int ii = 0; ii < 2 * n; ++ii) {
      const int a = ii % 2;
      const int b = jj % 2;
      const Index coarse_cell = static_cast<Index>((jj / 2) * n + ii / 2);
      const Index fine_cell = static_cast<Index>(jj * 2 * n + ii);
      for (int t = 0; t < 2; ++t) {
        // The coarse diagonal passes through the (0,0) and (1,1) sub-cells;
        // sub-cell (1,0) lies entirely below it and (0,1) entirely above.
        const bool lower = (a == 1 && b == 0) || (a == b && t == 0);
        fine.parent_[2 * fine_cell + t] = 2 * coarse_cell + (lower ? 0 : 1);
      }
    }
  }
  return fine;
}

}  // namespace vpsfem
