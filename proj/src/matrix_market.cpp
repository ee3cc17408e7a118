#include "epic/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace epic {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

[[noreturn]] void fail(const std::string& label, const std::string& what) {
  throw ConstructionError(label + ": " + what);
}

}  // namespace

SparseSymMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConstructionError(path + ": cannot open file");
  return read_matrix_market(in, path);
}

SparseSymMatrix read_matrix_market(std::istream& in, const std::string& label) {
  std::string line;
  if (!std::getline(in, line)) fail(label, "empty file");
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (lower(banner) != "%%matrixmarket" || lower(object) != "matrix")
    fail(label, "not a MatrixMarket matrix file");
  if (lower(format) != "coordinate") fail(label, "only coordinate format is supported");
  const std::string f = lower(field);
  if (f != "real" && f != "integer")
    fail(label, "field must be real or integer (got " + field + ")");
  const std::string sym = lower(symmetry);
  if (sym != "symmetric" && sym != "general")
    fail(label, "symmetry must be symmetric or general (got " + symmetry + ")");

  while (std::getline(in, line)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos) continue;
    if (line[pos] == '%') continue;
    break;
  }
  std::istringstream dims(line);
  long rows = 0, cols = 0, nnz = 0;
  if (!(dims >> rows >> cols >> nnz)) fail(label, "malformed size line");
  if (rows != cols) fail(label, "matrix must be square");
  if (rows <= 0) fail(label, "matrix dimension must be positive");

  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(2 * nnz));
  long seen = 0;
  while (seen < nnz) {
    if (!std::getline(in, line)) fail(label, "unexpected end of file");
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '%') continue;
    std::istringstream entry(line);
    long i = 0, j = 0;
    double v = 0.0;
    if (!(entry >> i >> j >> v)) fail(label, "malformed entry line: " + line);
    if (i < 1 || j < 1 || i > rows || j > rows)
      fail(label, "index out of range in entry: " + line);
    ++seen;
    if (sym == "symmetric") {
      if (j > i) fail(label, "upper-triangle entry in a symmetric file: " + line);
      entries.emplace_back(i - 1, j - 1, v);
      if (i != j) entries.emplace_back(j - 1, i - 1, v);
    } else {
      entries.emplace_back(i - 1, j - 1, v);
    }
  }

  if (sym == "symmetric") {
    return SparseSymMatrix::from_triplets(rows, entries);
  }

  // General file: demand symmetric content, then symmetrize exactly.
  SparseStorage raw(rows, rows);
  raw.setFromTriplets(entries.begin(), entries.end());
  raw.makeCompressed();
  SparseStorage rawT = SparseStorage(raw.transpose());
  double max_abs = 0.0;
  for (Index i = 0; i < raw.nonZeros(); ++i)
    max_abs = std::max(max_abs, std::abs(raw.valuePtr()[i]));
  SparseStorage diff = raw - rawT;
  double asym = 0.0;
  for (Index i = 0; i < diff.nonZeros(); ++i)
    asym = std::max(asym, std::abs(diff.valuePtr()[i]));
  if (max_abs > 0.0 && asym > 1e-12 * max_abs)
    fail(label, "general matrix content is not symmetric");
  SparseStorage sym_storage = 0.5 * (raw + rawT);
  return SparseSymMatrix(std::move(sym_storage));
}

void write_matrix_market(const std::string& path, const SparseSymMatrix& mat) {
  std::ofstream out(path);
  if (!out) throw ConstructionError(path + ": cannot open file for writing");
  write_matrix_market(out, mat);
}

void write_matrix_market(std::ostream& out, const SparseSymMatrix& mat) {
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  const SparseStorage& m = mat.storage();
  long nnz_lower = 0;
  for (Index row = 0; row < mat.size(); ++row)
    for (SparseStorage::InnerIterator it(m, row); it; ++it)
      if (it.col() <= row) ++nnz_lower;
  out << mat.size() << " " << mat.size() << " " << nnz_lower << "\n";
  char buf[64];
  for (Index row = 0; row < mat.size(); ++row) {
    for (SparseStorage::InnerIterator it(m, row); it; ++it) {
      if (it.col() > row) continue;
      std::snprintf(buf, sizeof(buf), "%.17g", it.value());
      out << (row + 1) << " " << (it.col() + 1) << " " << buf << "\n";
    }
  }
}

}  // namespace epic
