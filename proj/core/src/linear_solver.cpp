#include "vpsfem/linear_solver.hpp"

#include <stdexcept>

#ifdef VPSFEM_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#else
#include <Eigen/OrderingMethods>
#include <Eigen/SparseLU>
#endif

namespace vpsfem {

struct SparseDirectSolver::Impl {
#ifdef VPSFEM_HAVE_UMFPACK
  Eigen::UmfPackLU<SparseMatrix> lu;
#else
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
#endif
  Eigen::Index rows = -1;
  Eigen::Index nnz = -1;
};

SparseDirectSolver::SparseDirectSolver() : impl_(std::make_unique<Impl>()) {}
SparseDirectSolver::~SparseDirectSolver() = default;
SparseDirectSolver::SparseDirectSolver(SparseDirectSolver&&) noexcept = default;
SparseDirectSolver& SparseDirectSolver::operator=(SparseDirectSolver&&) noexcept = default;

void SparseDirectSolver::factorize(const SparseMatrix& a) {
  if (!a.isCompressed()) throw std::invalid_argument("factorize expects a compressed matrix");
  if (impl_->rows != a.rows() || impl_->nnz != a.nonZeros()) {
    impl_->lu.analyzePattern(a);
    impl_->rows = a.rows();
    impl_->nnz = a.nonZeros();
  }
  impl_->lu.factorize(a);
  if (impl_->lu.info() != Eigen::Success) {
    impl_->rows = -1;
    throw std::runtime_error("sparse LU factorization failed (matrix singular or invalid)");
  }
}

Vector SparseDirectSolver::solve(const Vector& rhs) const {
  Vector x = impl_->lu.solve(rhs);
  if (impl_->lu.info() != Eigen::Success) throw std::runtime_error("sparse LU solve failed");
  return x;
}

const char* SparseDirectSolver::backend() {
#ifdef VPSFEM_HAVE_UMFPACK
  return "umfpack";
#else
  return "eigen-sparselu";
#endif
}

}  // namespace vpsfem
