#pragma once

#include <memory>
#include <stdexcept>

#include "stekloff/assembly.hpp"

namespace stekloff {

class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Direct LU factorization of a square sparse matrix (UMFPACK, symmetric
/// pivoting strategy). Matrices whose entries are all real are factored in
/// real arithmetic and applied to real and imaginary parts separately.
class SparseLu {
 public:
  explicit SparseLu(const SparseMatrix& m);
  ~SparseLu();
  SparseLu(SparseLu&&) noexcept;
  SparseLu& operator=(SparseLu&&) noexcept;
  SparseLu(const SparseLu&) = delete;
  SparseLu& operator=(const SparseLu&) = delete;

  CVector solve(const CVector& b) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

  Index size() const;
  bool is_real() const;
  /// UMFPACK's cheap reciprocal condition estimate min|U_ii| / max|U_ii|.
  double rcond() const;
  /// Nonzeros in L + U.
  long factor_nonzeros() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace stekloff
