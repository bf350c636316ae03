#pragma once

#include <memory>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace qlflow {

/// Direct solver for the symmetric systems produced by the operators. Tries a
/// sparse LDL^T factorization first and falls back to sparse LU when the
/// factorization fails or the solution does not reproduce the right-hand side.
class SymmetricSolver {
public:
  SymmetricSolver();
  ~SymmetricSolver();
  SymmetricSolver(SymmetricSolver&&) noexcept;
  SymmetricSolver& operator=(SymmetricSolver&&) noexcept;

  /// Returns false when neither factorization succeeds.
  bool factorize(const Eigen::SparseMatrix<double>& A);
  /// Throws std::runtime_error when called before a successful factorize().
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  bool using_lu() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace qlflow
