#pragma once

// Sparse symmetric positive definite linear algebra used by every
// inference step: Cholesky factorization, triangular solves and the
// Takahashi recursions for marginal variances.

#include <Eigen/Sparse>
#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "jointlap/errors.hpp"

namespace jointlap {

// Symmetric matrix stored as the lower triangle of an Eigen sparse matrix.
class SymSparse {
 public:
  SymSparse() = default;
  // Triplets may address either triangle; duplicates are summed and
  // everything is folded onto the lower triangle.
  SymSparse(int dim, const std::vector<Eigen::Triplet<double>>& entries);

  int dim() const { return static_cast<int>(lower_.rows()); }
  const Eigen::SparseMatrix<double>& lower() const { return lower_; }

  // Full symmetric matrix (both triangles), mostly for tests and oracles.
  Eigen::SparseMatrix<double> full() const;
  Eigen::MatrixXd dense() const;

 private:
  Eigen::SparseMatrix<double> lower_;
};

// Sparse Cholesky factor P Q P^T = L L^T with AMD fill-reducing ordering.
class CholFactor {
 public:
  int dim() const { return dim_; }
  double logdet() const { return logdet_; }
  const Eigen::PermutationMatrix<Eigen::Dynamic>& permutation() const {
    return perm_;
  }
  // Non-unit lower-triangular factor of the permuted matrix.
  const Eigen::SparseMatrix<double>& matrixL() const { return L_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  // White-noise transform: returns x with cov(x) = Q^{-1} when z ~ N(0, I).
  Eigen::VectorXd solve_white(const Eigen::VectorXd& z) const;

 private:
  friend CholFactor factorize(const SymSparse& Q);
  int dim_ = 0;
  double logdet_ = 0.0;
  Eigen::PermutationMatrix<Eigen::Dynamic> perm_;
  Eigen::SparseMatrix<double> L_;
};

// Throws NotPositiveDefinite when a pivot falls at or below
// 1e-12 * max diagonal of Q.
CholFactor factorize(const SymSparse& Q);

Eigen::VectorXd solve_system(const CholFactor& f, const Eigen::VectorXd& rhs);

// diag(Q^{-1}) via the Takahashi recursions on the pattern of L.
Eigen::VectorXd takahashi_marginal_variances(const CholFactor& f);

}  // namespace jointlap
