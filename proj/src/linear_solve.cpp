#include "qlflow/linear_solve.hpp"

#include <stdexcept>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace qlflow {

struct SymmetricSolver::Impl {
  Eigen::SparseMatrix<double> A;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  bool ready = false;
  bool use_lu = false;
  bool checked_ldlt = false;
};

SymmetricSolver::SymmetricSolver() : impl_(std::make_unique<Impl>()) {}
SymmetricSolver::~SymmetricSolver() = default;
SymmetricSolver::SymmetricSolver(SymmetricSolver&&) noexcept = default;
SymmetricSolver& SymmetricSolver::operator=(SymmetricSolver&&) noexcept = default;

bool SymmetricSolver::factorize(const Eigen::SparseMatrix<double>& A) {
  Impl& s = *impl_;
  s.A = A;
  s.A.makeCompressed();
  s.ready = false;
  s.use_lu = false;
  s.checked_ldlt = false;
  s.ldlt.compute(s.A);
  if (s.ldlt.info() == Eigen::Success) {
    s.ready = true;
    return true;
  }
  s.lu.compute(s.A);
  if (s.lu.info() != Eigen::Success) return false;
  s.use_lu = true;
  s.ready = true;
  return true;
}

Eigen::VectorXd SymmetricSolver::solve(const Eigen::VectorXd& b) const {
  Impl& s = *impl_;
  if (!s.ready) throw std::runtime_error("solve() before a successful factorization");
  if (!s.use_lu) {
    Eigen::VectorXd x = s.ldlt.solve(b);
    // LDL^T without pivoting can silently lose accuracy on indefinite systems;
    // verify once per factorization and switch to LU if it did.
    if (!s.checked_ldlt) {
      const double err = (s.A * x - b).norm();
      if (x.allFinite() && err <= 1e-8 * (b.norm() + 1e-300)) {
        s.checked_ldlt = true;
        return x;
      }
      s.lu.compute(s.A);
      if (s.lu.info() != Eigen::Success) throw std::runtime_error("sparse factorization failed");
      s.use_lu = true;
    } else {
      return x;
    }
  }
  return s.lu.solve(b);
}

bool SymmetricSolver::using_lu() const { return impl_->use_lu; }

}  // namespace qlflow
