#pragma once

#include <memory>

#include <Eigen/SparseCholesky>

#include "epic/core.hpp"
#include "epic/types.hpp"

namespace epic {

/// Construction recipe for the synthetic sine-transform co-preconditioner:
/// T = A^{1/2} S^-1 D^-1 S A^{1/2} with S the symmetric orthogonal DST-I
/// matrix and D a log-spaced diagonal running from 1 to iota_nu, so the
/// pencil (A, T) has eigenvalues exactly D.
struct DstSpec {
  Index n;
  double iota_nu;  // target spectral ratio of (A, T), >= 1
  double omega;    // spectrum ratio of the diagonal test matrix

  /// Log-uniform diagonal from 1 to iota_nu with n points.
  Vector log_spaced_diagonal() const;
};

/// A symmetric positive definite operator T exposed exclusively through
/// T^-1 v. Immutable after construction; safe to share across runs.
class Preconditioner {
 public:
  enum class Kind { Identity, Jacobi, Ssor, Ic0, Exact, SyntheticDst };

  static Preconditioner identity(Index n);
  /// Diagonal of a; requires a strictly positive diagonal.
  static Preconditioner jacobi(const SparseSymMatrix& a);
  /// Symmetric SOR sweep (forward then backward), relaxation in (0, 2).
  static Preconditioner ssor(const SparseSymMatrix& a, double relaxation = 1.0);
  /// Incomplete Cholesky with zero fill. On breakdown retries with a
  /// diagonal shift of 1e-3 * mean(diag), doubling, up to 8 times.
  static Preconditioner ic0(const SparseSymMatrix& a);
  /// T = a itself; applies a sparse Cholesky solve.
  static Preconditioner exact(const SparseSymMatrix& a);
  static Preconditioner synthetic_dst(const DstSpec& spec, ConstVectorRef a_diag);

  Vector apply_inverse(ConstVectorRef v) const;

  Kind kind() const { return kind_; }
  Index size() const { return n_; }

 private:
  Preconditioner(Kind kind, Index n) : kind_(kind), n_(n) {}

  Kind kind_;
  Index n_;
  Vector inv_diag_;       // jacobi
  Vector diag_;           // ssor / ic0 factor diagonal
  SparseStorage lower_;   // strict lower triangle (ssor) or IC factor (ic0)
  double relaxation_ = 1.0;
  std::shared_ptr<const Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> llt_;
  Vector dst_scale_;      // A^{-1/2} diagonal
  Vector dst_diag_;       // D
  std::shared_ptr<const Matrix> dst_transform_;  // dense DST-I matrix
};

}  // namespace epic
