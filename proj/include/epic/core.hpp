#pragma once

#include <utility>
#include <vector>

#include "epic/types.hpp"

namespace epic {

/// Sparse symmetric matrix in CSR form with both triangles stored.
/// Structural symmetry (pattern and values) is certified at
/// construction; every row must carry at least one entry.
class SparseSymMatrix {
 public:
  /// Validates and takes ownership of a compressed row-major matrix.
  explicit SparseSymMatrix(SparseStorage storage);

  /// Builds from triplets covering BOTH triangles; duplicates are
  /// summed before the symmetry check.
  static SparseSymMatrix from_triplets(Index n, const std::vector<Triplet>& entries);

  static SparseSymMatrix identity(Index n);
  static SparseSymMatrix diagonal(ConstVectorRef d);
  /// Densely populated symmetric matrix; `dense` is symmetrized
  /// exactly as (D + D^T)/2 before storage.
  static SparseSymMatrix from_dense(ConstMatrixRef dense);

  Index size() const { return mat_.rows(); }
  Index nonzeros() const { return mat_.nonZeros(); }
  const SparseStorage& storage() const { return mat_; }
  Vector diagonal_vector() const;
  Matrix dense() const { return Matrix(mat_); }

 private:
  SparseStorage mat_;
};

/// The pencil (A, M). Positive definiteness of both matrices is a
/// documented precondition, certified only by the dense reference
/// solver at test scale (an O(n^3) check is too expensive here).
struct SpdPencil {
  SparseSymMatrix a;
  SparseSymMatrix m;

  SpdPencil(SparseSymMatrix a_in, SparseSymMatrix m_in)
      : a(std::move(a_in)), m(std::move(m_in)) {
    require(a.size() == m.size(), "pencil matrices must share a dimension");
  }

  Index size() const { return a.size(); }
};

/// mat * x with a fixed row-major, index-ascending summation order so
/// repeated calls are bit-identical.
Vector spmv(const SparseSymMatrix& mat, ConstVectorRef x);

/// x' * (M y), evaluated as dot(x, spmv(m, y)) in one fixed order.
double m_inner(const SparseSymMatrix& m, ConstVectorRef x, ConstVectorRef y);

double m_norm(const SparseSymMatrix& m, ConstVectorRef x);

/// x / |x|_M. Throws DegenerateVectorError when |x|_M < 1e-300.
Vector m_normalize(const SparseSymMatrix& m, ConstVectorRef x);

/// Rayleigh quotient x'Ax / x'Mx.
double rayleigh_quotient(const SpdPencil& p, ConstVectorRef x);

/// Gradient of the Rayleigh quotient, 2(Ax - Rq(x) Mx).
Vector rq_gradient(const SpdPencil& p, ConstVectorRef x);

/// Eigen-decomposition of a small dense symmetric matrix by cyclic
/// Jacobi iteration (eigenvalues ascending, orthonormal eigenvectors
/// as columns). The sweep stops once the off-diagonal Frobenius mass
/// falls below 1e-14 of the total.
std::pair<Vector, Matrix> dense_sym_eig(ConstMatrixRef a);

/// Generalized eigen-decomposition of the dense pencil (a, b) with b
/// symmetric positive definite: Cholesky reduction b = LL', cyclic
/// Jacobi on L^-1 a L^-T, back-transform. Eigenvalues ascending,
/// eigenvectors b-orthonormal. Intended for k <= 64 inner problems.
/// Throws IndefiniteMetricError when the Cholesky of b breaks down.
std::pair<Vector, Matrix> dense_sym_geig(ConstMatrixRef a, ConstMatrixRef b);

}  // namespace epic
