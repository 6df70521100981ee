#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace vpsfem {

using Point2 = Eigen::Vector2d;
using Index = std::int32_t;

struct Triangle {
  std::array<Index, 3> vertices;
  /// Global edge indices for local edges (0,1), (1,2), (2,0).
  std::array<Index, 3> edges;
  /// Vertex coordinates with periodic shifts resolved, so the element is a
  /// plain triangle in the plane (some coordinates may equal 1.0).
  std::array<Point2, 3> local_coords;
};

struct Edge {
  std::array<Index, 2> vertices;
  std::array<Index, 2> triangles;
};

/// Uniform triangulation of the unit square identified as a torus.
///
/// Cell (i, j) spans [i/n, (i+1)/n] x [j/n, (j+1)/n] and is split along its
/// lower-left to upper-right diagonal into
///   triangle 2c     = (v(i,j), v(i+1,j), v(i+1,j+1))
///   triangle 2c + 1 = (v(i,j), v(i+1,j+1), v(i,j+1))
/// with c = j*n + i and v(i,j) = (j mod n)*n + (i mod n). Edge 3c is the
/// bottom edge of the cell, 3c+1 the left edge and 3c+2 the diagonal.
class PeriodicMesh {
 public:
  [[nodiscard]] int cells_per_axis() const { return n_; }
  /// Longest element edge (the cell diagonal).
  [[nodiscard]] double h() const;

  [[nodiscard]] const std::vector<Point2>& vertices() const { return vertices_; }
  [[nodiscard]] const std::vector<Triangle>& triangles() const { return triangles_; }
  [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }

  [[nodiscard]] Index vertex_count() const { return static_cast<Index>(vertices_.size()); }
  [[nodiscard]] Index edge_count() const { return static_cast<Index>(edges_.size()); }
  [[nodiscard]] Index triangle_count() const { return static_cast<Index>(triangles_.size()); }

  /// Signed area computed from the unwrapped local coordinates.
  [[nodiscard]] double signed_area(Index triangle) const;

  /// Parent triangle in the mesh this one was refined from, or empty when
  /// the mesh was built directly.
  [[nodiscard]] const std::vector<Index>& parent_triangles() const { return parent_; }
  [[nodiscard]] int parent_cells_per_axis() const { return parent_n_; }
  [[nodiscard]] bool is_refinement_of(const PeriodicMesh& coarse) const;

  friend PeriodicMesh build_periodic_unit_square_mesh(int n);
  friend PeriodicMesh refine_uniform(const PeriodicMesh& mesh);

 private:
  int n_ = 0;
  int parent_n_ = 0;
  std::vector<Point2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> edges_;
  std::vector<Index> parent_;
};

/// Builds the n x n periodic mesh. Throws std::invalid_argument for n < 3:
/// below that, distinct periodic edges would join the same vertex pair.
PeriodicMesh build_periodic_unit_square_mesh(int n);

/// Red refinement: every triangle is split into four through its edge
/// midpoints. The result coincides with build_periodic_unit_square_mesh(2n)
/// and records the parent of every child triangle.
PeriodicMesh refine_uniform(const PeriodicMesh& mesh);

}  // namespace vpsfem
