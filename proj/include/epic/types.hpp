#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <stdexcept>
#include <string>

namespace epic {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseStorage = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

using VectorRef = Eigen::Ref<Vector>;
using ConstVectorRef = Eigen::Ref<const Vector>;
using ConstMatrixRef = Eigen::Ref<const Matrix>;

/// Base class of all recoverable failures raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible (caller bug).
struct DimensionError : Error {
  using Error::Error;
};

/// A vector with (near-)zero M-norm was handed to an operation that
/// must divide by it. Callers typically react by restarting.
struct DegenerateVectorError : Error {
  using Error::Error;
};

/// A matrix that must be positive definite failed its factorization.
struct IndefiniteMetricError : Error {
  using Error::Error;
};

/// A preconditioner violated an integrity requirement (breakdown at
/// construction, or q'Mq~ <= 0 when building an anchor frame).
struct PreconditionerError : Error {
  using Error::Error;
};

/// Invalid construction input (bad diagonal, overflow, parse failure).
struct ConstructionError : Error {
  using Error::Error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw DimensionError(what);
}

}  // namespace epic
