#include "epic/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace epic {

namespace {

constexpr double kDegenerateNorm = 1e-300;

void validate_symmetric_pattern(const SparseStorage& mat) {
  if (mat.rows() != mat.cols())
    throw ConstructionError("sparse symmetric matrix must be square");
  // Transposing a row-major matrix into row-major storage yields the
  // column-wise pattern in directly comparable arrays.
  SparseStorage t = SparseStorage(mat.transpose());
  if (t.nonZeros() != mat.nonZeros())
    throw ConstructionError("sparse matrix pattern is not symmetric");
  const Index nnz = mat.nonZeros();
  for (Index i = 0; i <= mat.rows(); ++i) {
    if (mat.outerIndexPtr()[i] != t.outerIndexPtr()[i])
      throw ConstructionError("sparse matrix pattern is not symmetric");
  }
  for (Index i = 0; i < nnz; ++i) {
    if (mat.innerIndexPtr()[i] != t.innerIndexPtr()[i])
      throw ConstructionError("sparse matrix pattern is not symmetric");
    if (mat.valuePtr()[i] != t.valuePtr()[i])
      throw ConstructionError("sparse matrix values are not symmetric");
  }
  for (Index i = 0; i < mat.rows(); ++i) {
    if (mat.outerIndexPtr()[i] == mat.outerIndexPtr()[i + 1])
      throw ConstructionError("row " + std::to_string(i) + " has no entries");
  }
}

}  // namespace

SparseSymMatrix::SparseSymMatrix(SparseStorage storage) : mat_(std::move(storage)) {
  mat_.makeCompressed();
  validate_symmetric_pattern(mat_);
}

SparseSymMatrix SparseSymMatrix::from_triplets(Index n, const std::vector<Triplet>& entries) {
  SparseStorage mat(n, n);
  mat.setFromTriplets(entries.begin(), entries.end());
  return SparseSymMatrix(std::move(mat));
}

SparseSymMatrix SparseSymMatrix::identity(Index n) {
  SparseStorage mat(n, n);
  mat.setIdentity();
  return SparseSymMatrix(std::move(mat));
}

SparseSymMatrix SparseSymMatrix::diagonal(ConstVectorRef d) {
  std::vector<Triplet> ts;
  ts.reserve(static_cast<std::size_t>(d.size()));
  for (Index i = 0; i < d.size(); ++i) ts.emplace_back(i, i, d[i]);
  return from_triplets(d.size(), ts);
}

SparseSymMatrix SparseSymMatrix::from_dense(ConstMatrixRef dense) {
  require(dense.rows() == dense.cols(), "dense input must be square");
  std::vector<Triplet> ts;
  ts.reserve(static_cast<std::size_t>(dense.size()));
  for (Index i = 0; i < dense.rows(); ++i) {
    for (Index j = 0; j < dense.cols(); ++j) {
      const double v = 0.5 * (dense(i, j) + dense(j, i));
      if (v != 0.0 || i == j) ts.emplace_back(i, j, v);
    }
  }
  return from_triplets(dense.rows(), ts);
}

Vector SparseSymMatrix::diagonal_vector() const {
  Vector d = Vector::Zero(size());
  for (Index row = 0; row < size(); ++row) {
    for (SparseStorage::InnerIterator it(mat_, row); it; ++it) {
      if (it.col() == row) d[row] = it.value();
    }
  }
  return d;
}

Vector spmv(const SparseSymMatrix& mat, ConstVectorRef x) {
  require(x.size() == mat.size(), "spmv dimension mismatch");
  const SparseStorage& m = mat.storage();
  Vector y(mat.size());
  for (Index row = 0; row < mat.size(); ++row) {
    double acc = 0.0;
    for (SparseStorage::InnerIterator it(m, row); it; ++it) {
      acc += it.value() * x[it.col()];
    }
    y[row] = acc;
  }
  return y;
}

double m_inner(const SparseSymMatrix& m, ConstVectorRef x, ConstVectorRef y) {
  require(x.size() == m.size() && y.size() == m.size(), "m_inner dimension mismatch");
  const Vector my = spmv(m, y);
  double acc = 0.0;
  for (Index i = 0; i < x.size(); ++i) acc += x[i] * my[i];
  return acc;
}

double m_norm(const SparseSymMatrix& m, ConstVectorRef x) {
  return std::sqrt(std::max(m_inner(m, x, x), 0.0));
}

Vector m_normalize(const SparseSymMatrix& m, ConstVectorRef x) {
  const double norm = m_norm(m, x);
  if (!(norm >= kDegenerateNorm))
    throw DegenerateVectorError("vector has (near-)zero M-norm");
  return x / norm;
}

double rayleigh_quotient(const SpdPencil& p, ConstVectorRef x) {
  const double xmx = m_inner(p.m, x, x);
  if (!(std::sqrt(std::max(xmx, 0.0)) >= kDegenerateNorm))
    throw DegenerateVectorError("Rayleigh quotient of a (near-)zero vector");
  return m_inner(p.a, x, x) / xmx;
}

Vector rq_gradient(const SpdPencil& p, ConstVectorRef x) {
  const double rho = rayleigh_quotient(p, x);
  return 2.0 * (spmv(p.a, x) - rho * spmv(p.m, x));
}

namespace {

// One cyclic Jacobi pass over the strict upper triangle of h,
// accumulating rotations into v.
void jacobi_sweep(Matrix& h, Matrix& v) {
  const Index k = h.rows();
  for (Index p = 0; p < k - 1; ++p) {
    for (Index q = p + 1; q < k; ++q) {
      const double hpq = h(p, q);
      if (hpq == 0.0) continue;
      const double theta = (h(q, q) - h(p, p)) / (2.0 * hpq);
      const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                       (std::abs(theta) + std::sqrt(theta * theta + 1.0));
      const double c = 1.0 / std::sqrt(t * t + 1.0);
      const double s = t * c;
      for (Index i = 0; i < k; ++i) {
        const double hip = h(i, p), hiq = h(i, q);
        h(i, p) = c * hip - s * hiq;
        h(i, q) = s * hip + c * hiq;
      }
      for (Index i = 0; i < k; ++i) {
        const double hpi = h(p, i), hqi = h(q, i);
        h(p, i) = c * hpi - s * hqi;
        h(q, i) = s * hpi + c * hqi;
      }
      h(p, q) = 0.0;
      h(q, p) = 0.0;
      for (Index i = 0; i < k; ++i) {
        const double vip = v(i, p), viq = v(i, q);
        v(i, p) = c * vip - s * viq;
        v(i, q) = s * vip + c * viq;
      }
    }
  }
}

double offdiag_norm(const Matrix& h) {
  double acc = 0.0;
  for (Index i = 0; i < h.rows(); ++i)
    for (Index j = 0; j < h.cols(); ++j)
      if (i != j) acc += h(i, j) * h(i, j);
  return std::sqrt(acc);
}

void sort_ascending(Vector& evals, Matrix& evecs) {
  const Index k = evals.size();
  std::vector<Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return evals[i] < evals[j]; });
  Vector sorted_vals(k);
  Matrix sorted_vecs(evecs.rows(), k);
  for (Index i = 0; i < k; ++i) {
    sorted_vals[i] = evals[order[static_cast<std::size_t>(i)]];
    sorted_vecs.col(i) = evecs.col(order[static_cast<std::size_t>(i)]);
  }
  evals = std::move(sorted_vals);
  evecs = std::move(sorted_vecs);
}

// Lower Cholesky factor of an SPD matrix; throws on breakdown.
Matrix cholesky_lower(ConstMatrixRef b) {
  const Index k = b.rows();
  Matrix l = Matrix::Zero(k, k);
  for (Index j = 0; j < k; ++j) {
    double diag = b(j, j);
    for (Index t = 0; t < j; ++t) diag -= l(j, t) * l(j, t);
    if (!(diag > 0.0))
      throw IndefiniteMetricError("metric matrix is not positive definite");
    l(j, j) = std::sqrt(diag);
    for (Index i = j + 1; i < k; ++i) {
      double acc = b(i, j);
      for (Index t = 0; t < j; ++t) acc -= l(i, t) * l(j, t);
      l(i, j) = acc / l(j, j);
    }
  }
  return l;
}

}  // namespace

std::pair<Vector, Matrix> dense_sym_eig(ConstMatrixRef a) {
  require(a.rows() == a.cols(), "dense_sym_eig needs a square matrix");
  const Index k = a.rows();
  Matrix h = 0.5 * (a + a.transpose());
  Matrix v = Matrix::Identity(k, k);
  const double total = h.norm();
  const double tol = 1e-14 * (total > 0.0 ? total : 1.0);
  for (int sweep = 0; sweep < 100 && offdiag_norm(h) > tol; ++sweep) {
    jacobi_sweep(h, v);
  }
  Vector evals = h.diagonal();
  sort_ascending(evals, v);
  return {std::move(evals), std::move(v)};
}

std::pair<Vector, Matrix> dense_sym_geig(ConstMatrixRef a, ConstMatrixRef b) {
  require(a.rows() == a.cols() && b.rows() == b.cols() && a.rows() == b.rows(),
          "dense_sym_geig needs square matrices of equal size");
  const Matrix l = cholesky_lower(b);
  // Reduce to the standard problem on L^-1 A L^-T.
  const auto lt = l.triangularView<Eigen::Lower>();
  Matrix reduced = lt.solve(Matrix(0.5 * (a + a.transpose())));
  reduced = lt.solve(Matrix(reduced.transpose())).transpose();
  auto [evals, w] = dense_sym_eig(reduced);
  // Back-transform: v = L^-T w is b-orthonormal.
  Matrix v = l.transpose().triangularView<Eigen::Upper>().solve(w);
  return {std::move(evals), std::move(v)};
}

}  // namespace epic
