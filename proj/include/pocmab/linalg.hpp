#pragma once

#include <Eigen/Dense>

#include "pocmab/random.hpp"

namespace pocmab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense symmetric matrix intended to be positive definite. Symmetry is
/// checked at construction (relative 1e-12); definiteness is established by
/// cholesky(), which throws NotPositiveDefinite otherwise.
class SpdMatrix {
 public:
  SpdMatrix() : m_(0, 0) {}
  explicit SpdMatrix(Matrix m);

  static SpdMatrix identity(int dim);
  static SpdMatrix diagonal(const Vector& entries);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& mat() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

 private:
  Matrix m_;
};

/// Cholesky factor: lower triangular with positive diagonal, L*L^T = source.
class LowerTriangular {
 public:
  LowerTriangular() : l_(0, 0) {}
  explicit LowerTriangular(Matrix l);

  int dim() const { return static_cast<int>(l_.rows()); }
  const Matrix& mat() const { return l_; }

 private:
  Matrix l_;
};

/// Lower Cholesky factorization. The input is symmetrized (averaged with its
/// transpose) before factoring to absorb accumulated floating-point drift.
/// Throws NotPositiveDefinite when a pivot falls at or below
/// dim * 1e-14 * max_diagonal.
LowerTriangular cholesky(const SpdMatrix& m);

/// Solves (L L^T) x = b given the factor L.
Vector spd_solve(const LowerTriangular& chol, const Vector& b);

/// Dense inverse of the factored matrix, symmetrized.
SpdMatrix spd_inverse(const LowerTriangular& chol);

/// Symmetric square root via eigendecomposition. Eigenvalues in
/// [-dim*1e-12*||m||, 0) are clamped to zero; anything more negative throws
/// NotPositiveDefinite.
SpdMatrix sym_sqrt(const SpdMatrix& m);

/// Draw from N(mean, B^{-1}) where precision_chol factors B.
Vector mvn_sample_precision(const Vector& mean, const LowerTriangular& precision_chol,
                            RandomStream& rng);

/// Draw from N(mean, C) where cov_chol factors C.
Vector mvn_sample_cov(const Vector& mean, const LowerTriangular& cov_chol,
                      RandomStream& rng);

/// Rank-one orthogonal projection v v^T / (v^T v). Throws ZeroVector.
Matrix projection_matrix(const Vector& v);

}  // namespace pocmab
