#pragma once

#include <memory>

#include "vpsfem/fe_space.hpp"

namespace vpsfem {

/// Sparse direct LU factorization. The symbolic analysis is computed once and
/// reused while the sparsity pattern (dimension and nonzero count) is unchanged.
class SparseDirectSolver {
 public:
  SparseDirectSolver();
  ~SparseDirectSolver();
  SparseDirectSolver(SparseDirectSolver&&) noexcept;
  SparseDirectSolver& operator=(SparseDirectSolver&&) noexcept;

  /// Throws std::runtime_error if the matrix is numerically singular.
  void factorize(const SparseMatrix& a);

  [[nodiscard]] Vector solve(const Vector& rhs) const;

  /// Name of the backing factorization ("umfpack" or "eigen-sparselu").
  [[nodiscard]] static const char* backend();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vpsfem
