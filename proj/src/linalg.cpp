#include "pocmab/linalg.hpp"

#include <cmath>
#include <string>

#include "pocmab/errors.hpp"

namespace pocmab {

namespace {

void check_symmetric(const Matrix& m, const char* who) {
  if (m.rows() != m.cols())
    throw NotSymmetric(std::string(who) + ": matrix is not square");
  double scale = m.cwiseAbs().maxCoeff();
  double dev = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (dev > 1e-12 * std::max(scale, 1.0))
    throw NotSymmetric(std::string(who) + ": asymmetry " + std::to_string(dev));
}

}  // namespace

SpdMatrix::SpdMatrix(Matrix m) : m_(std::move(m)) {
  check_symmetric(m_, "SpdMatrix");
}

SpdMatrix SpdMatrix::identity(int dim) {
  return SpdMatrix(Matrix::Identity(dim, dim));
}

SpdMatrix SpdMatrix::diagonal(const Vector& entries) {
  return SpdMatrix(Matrix(entries.asDiagonal()));
}

LowerTriangular::LowerTriangular(Matrix l) : l_(std::move(l)) {
  if (l_.rows() != l_.cols())
    throw DimensionMismatch("LowerTriangular: matrix is not square");
}

LowerTriangular cholesky(const SpdMatrix& m) {
  const int n = m.dim();
  Matrix a = 0.5 * (m.mat() + m.mat().transpose());
  double max_diag = 0.0;
  for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a(i, i)));
  const double pivot_floor = n * 1e-14 * max_diag;

  Matrix l = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    double pivot = a(j, j) - l.row(j).head(j).squaredNorm();
    if (pivot <= pivot_floor)
      throw NotPositiveDefinite("cholesky: pivot " + std::to_string(pivot) +
                                " at column " + std::to_string(j));
    l(j, j) = std::sqrt(pivot);
    for (int i = j + 1; i < n; ++i) {
      double s = a(i, j) - l.row(i).head(j).dot(l.row(j).head(j));
      l(i, j) = s / l(j, j);
    }
  }
  return LowerTriangular(std::move(l));
}

Vector spd_solve(const LowerTriangular& chol, const Vector& b) {
  if (chol.dim() != b.size())
    throw DimensionMismatch("spd_solve: factor dim " + std::to_string(chol.dim()) +
                            " vs vector dim " + std::to_string(b.size()));
  Vector y = chol.mat().triangularView<Eigen::Lower>().solve(b);
  return chol.mat().transpose().triangularView<Eigen::Upper>().solve(y);
}

SpdMatrix spd_inverse(const LowerTriangular& chol) {
  const int n = chol.dim();
  Matrix linv = chol.mat().triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
  Matrix inv = linv.transpose() * linv;
  return SpdMatrix(0.5 * (inv + inv.transpose()));
}

SpdMatrix sym_sqrt(const SpdMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.mat());
  if (es.info() != Eigen::Success)
    throw NotSymmetric("sym_sqrt: eigendecomposition failed");
  Vector evals = es.eigenvalues();
  const double norm = std::max(std::abs(evals.minCoeff()), std::abs(evals.maxCoeff()));
  const double floor = -m.dim() * 1e-12 * norm;
  for (int i = 0; i < evals.size(); ++i) {
    if (evals[i] < floor)
      throw NotPositiveDefinite("sym_sqrt: eigenvalue " + std::to_string(evals[i]) +
                                " below semidefinite tolerance");
    evals[i] = std::sqrt(std::max(evals[i], 0.0));
  }
  Matrix s = es.eigenvectors() * evals.asDiagonal() * es.eigenvectors().transpose();
  return SpdMatrix(0.5 * (s + s.transpose()));
}

Vector mvn_sample_precision(const Vector& mean, const LowerTriangular& precision_chol,
                            RandomStream& rng) {
  if (precision_chol.dim() != mean.size())
    throw DimensionMismatch("mvn_sample_precision: dims disagree");
  Vector z = rng.gaussian_vector(static_cast<int>(mean.size()));
  // x = L^{-T} z has covariance (L L^T)^{-1}.
  Vector w = precision_chol.mat().transpose().triangularView<Eigen::Upper>().solve(z);
  return mean + w;
}

Vector mvn_sample_cov(const Vector& mean, const LowerTriangular& cov_chol,
                      RandomStream& rng) {
  if (cov_chol.dim() != mean.size())
    throw DimensionMismatch("mvn_sample_cov: dims disagree");
  Vector z = rng.gaussian_vector(static_cast<int>(mean.size()));
  return mean + cov_chol.mat() * z;
}

Matrix projection_matrix(const Vector& v) {
  double n2 = v.squaredNorm();
  if (!(n2 > 0.0)) throw ZeroVector("projection_matrix: zero vector");
  return (v * v.transpose()) / n2;
}

}  // namespace pocmab
