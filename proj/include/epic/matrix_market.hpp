#pragma once

#include <iosfwd>
#include <string>

#include "epic/core.hpp"

namespace epic {

/// Reads a MatrixMarket coordinate file (real or integer field,
/// 1-based indices). Symmetric files have their lower triangle
/// mirrored; general files are accepted only when the content is
/// symmetric to 1e-12 relative and are then symmetrized exactly.
/// Duplicate entries are summed. Complex, pattern and array files are
/// rejected.
SparseSymMatrix read_matrix_market(const std::string& path);
SparseSymMatrix read_matrix_market(std::istream& in, const std::string& label);

/// Debug writer: coordinate real symmetric, lower triangle, 17
/// significant digits so a read-back reproduces the matrix exactly.
void write_matrix_market(const std::string& path, const SparseSymMatrix& mat);
void write_matrix_market(std::ostream& out, const SparseSymMatrix& mat);

}  // namespace epic
