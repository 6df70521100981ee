#pragma once

#include <array>
#include <vector>

namespace vpsfem {

/// Quadrature on the reference triangle in barycentric coordinates. Weights
/// are normalized to sum to one, so an integral over a triangle K is
/// |K| * sum_q w_q f(x_q).
struct QuadRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
  int degree = 0;

  [[nodiscard]] std::size_t size() const { return weights.size(); }
};

/// Symmetric 12-point rule, exact for polynomials of degree 6. This is the
/// single spatial rule used for every integral in the library.
const QuadRule& triangle_rule();

/// Three-point Gauss-Legendre rule on [0, 1].
struct TimeRule {
  std::array<double, 3> nodes;
  std::array<double, 3> weights;
};

const TimeRule& gauss3_unit_interval();

}  // namespace vpsfem
