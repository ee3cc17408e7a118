#include "epic/precond.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace epic {

namespace {

// Strict lower triangle of a, row-major with ascending columns.
SparseStorage strict_lower(const SparseSymMatrix& a) {
  std::vector<Triplet> ts;
  const SparseStorage& m = a.storage();
  for (Index row = 0; row < a.size(); ++row) {
    for (SparseStorage::InnerIterator it(m, row); it; ++it) {
      if (it.col() < row) ts.emplace_back(row, it.col(), it.value());
    }
  }
  SparseStorage l(a.size(), a.size());
  l.setFromTriplets(ts.begin(), ts.end());
  l.makeCompressed();
  return l;
}

Vector positive_diagonal(const SparseSymMatrix& a, const char* who) {
  Vector d = a.diagonal_vector();
  for (Index i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0))
      throw ConstructionError(std::string(who) + ": non-positive diagonal entry");
  }
  return d;
}

// Attempts the zero-fill incomplete Cholesky of a + shift*I on the lower
// pattern of a. Returns false on pivot breakdown.
bool try_ic0(const SparseSymMatrix& a, double shift, SparseStorage& lower, Vector& ldiag) {
  const Index n = a.size();
  lower = strict_lower(a);
  Vector adiag = a.diagonal_vector();
  ldiag.resize(n);
  auto row_begin = [&](Index i) { return lower.outerIndexPtr()[i]; };
  auto row_end = [&](Index i) { return lower.outerIndexPtr()[i + 1]; };
  const auto* cols = lower.innerIndexPtr();
  double* vals = lower.valuePtr();

  for (Index i = 0; i < n; ++i) {
    for (Index ip = row_begin(i); ip < row_end(i); ++ip) {
      const Index j = cols[ip];
      double acc = vals[ip];
      // Two-pointer walk over the shared prefix of rows i and j.
      Index pi = row_begin(i), pj = row_begin(j);
      while (pi < ip && pj < row_end(j)) {
        if (cols[pi] == cols[pj]) {
          acc -= vals[pi] * vals[pj];
          ++pi;
          ++pj;
        } else if (cols[pi] < cols[pj]) {
          ++pi;
        } else {
          ++pj;
        }
      }
      vals[ip] = acc / ldiag[j];
    }
    double diag = adiag[i] + shift;
    for (Index ip = row_begin(i); ip < row_end(i); ++ip) diag -= vals[ip] * vals[ip];
    if (!(diag > 0.0)) return false;
    ldiag[i] = std::sqrt(diag);
  }
  return true;
}

}  // namespace

Vector DstSpec::log_spaced_diagonal() const {
  if (n < 1 || !(iota_nu >= 1.0))
    throw ConstructionError("DST spec needs n >= 1 and iota_nu >= 1");
  Vector d(n);
  const double exponent = std::log10(iota_nu);
  for (Index i = 0; i < n; ++i) {
    d[i] = n == 1 ? 1.0 : std::pow(10.0, exponent * static_cast<double>(i) /
                                             static_cast<double>(n - 1));
  }
  return d;
}

Preconditioner Preconditioner::identity(Index n) {
  return Preconditioner(Kind::Identity, n);
}

Preconditioner Preconditioner::jacobi(const SparseSymMatrix& a) {
  Preconditioner t(Kind::Jacobi, a.size());
  t.inv_diag_ = positive_diagonal(a, "jacobi").cwiseInverse();
  return t;
}

Preconditioner Preconditioner::ssor(const SparseSymMatrix& a, double relaxation) {
  if (!(relaxation > 0.0 && relaxation < 2.0))
    throw ConstructionError("ssor relaxation must lie in (0, 2)");
  Preconditioner t(Kind::Ssor, a.size());
  t.diag_ = positive_diagonal(a, "ssor");
  t.lower_ = strict_lower(a);
  t.relaxation_ = relaxation;
  return t;
}

Preconditioner Preconditioner::ic0(const SparseSymMatrix& a) {
  Preconditioner t(Kind::Ic0, a.size());
  const double base_shift = 1e-3 * a.diagonal_vector().mean();
  double shift = 0.0;
  for (int attempt = 0; attempt <= 8; ++attempt) {
    if (try_ic0(a, shift, t.lower_, t.diag_)) return t;
    shift = shift == 0.0 ? base_shift : 2.0 * shift;
  }
  throw ConstructionError("ic0 factorization failed after shifted retries");
}

Preconditioner Preconditioner::exact(const SparseSymMatrix& a) {
  Preconditioner t(Kind::Exact, a.size());
  Eigen::SparseMatrix<double> colmajor(a.storage());
  auto llt = std::make_shared<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>();
  llt->compute(colmajor);
  if (llt->info() != Eigen::Success)
    throw ConstructionError("exact preconditioner: Cholesky factorization failed");
  t.llt_ = std::move(llt);
  return t;
}

Preconditioner Preconditioner::synthetic_dst(const DstSpec& spec, ConstVectorRef a_diag) {
  require(a_diag.size() == spec.n, "DST spec dimension mismatch");
  for (Index i = 0; i < a_diag.size(); ++i) {
    if (!(a_diag[i] > 0.0))
      throw ConstructionError("synthetic_dst: non-positive diagonal entry");
  }
  Preconditioner t(Kind::SyntheticDst, spec.n);
  t.dst_scale_ = a_diag.cwiseSqrt().cwiseInverse();
  t.dst_diag_ = spec.log_spaced_diagonal();
  const Index n = spec.n;
  auto s = std::make_shared<Matrix>(n, n);
  const double scale = std::sqrt(2.0 / static_cast<double>(n + 1));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      (*s)(i, j) = scale * std::sin(static_cast<double>((i + 1) * (j + 1)) *
                                    std::numbers::pi / static_cast<double>(n + 1));
    }
  }
  t.dst_transform_ = std::move(s);
  return t;
}

Vector Preconditioner::apply_inverse(ConstVectorRef v) const {
  require(v.size() == n_, "apply_inverse dimension mismatch");
  switch (kind_) {
    case Kind::Identity:
      return v;
    case Kind::Jacobi:
      return inv_diag_.cwiseProduct(v);
    case Kind::Ssor: {
      // M = (D + wL) D^-1 (D + wL') / (w (2 - w)); solve M u = v.
      const double w = relaxation_;
      const auto* cols = lower_.innerIndexPtr();
      const double* vals = lower_.valuePtr();
      Vector u(n_);
      for (Index i = 0; i < n_; ++i) {
        double acc = v[i];
        for (Index ip = lower_.outerIndexPtr()[i]; ip < lower_.outerIndexPtr()[i + 1]; ++ip)
          acc -= w * vals[ip] * u[cols[ip]];
        u[i] = acc / diag_[i];
      }
      u = u.cwiseProduct(diag_);
      for (Index i = n_ - 1; i >= 0; --i) {
        u[i] /= diag_[i];
        for (Index ip = lower_.outerIndexPtr()[i]; ip < lower_.outerIndexPtr()[i + 1]; ++ip)
          u[cols[ip]] -= w * vals[ip] * u[i];
      }
      return w * (2.0 - w) * u;
    }
    case Kind::Ic0: {
      const auto* cols = lower_.innerIndexPtr();
      const double* vals = lower_.valuePtr();
      Vector u(n_);
      for (Index i = 0; i < n_; ++i) {
        double acc = v[i];
        for (Index ip = lower_.outerIndexPtr()[i]; ip < lower_.outerIndexPtr()[i + 1]; ++ip)
          acc -= vals[ip] * u[cols[ip]];
        u[i] = acc / diag_[i];
      }
      for (Index i = n_ - 1; i >= 0; --i) {
        u[i] /= diag_[i];
        for (Index ip = lower_.outerIndexPtr()[i]; ip < lower_.outerIndexPtr()[i + 1]; ++ip)
          u[cols[ip]] -= vals[ip] * u[i];
      }
      return u;
    }
    case Kind::Exact:
      return llt_->solve(v);
    case Kind::SyntheticDst: {
      Vector u = dst_scale_.cwiseProduct(v);
      u = (*dst_transform_) * u;
      u = dst_diag_.cwiseProduct(u);
      u = (*dst_transform_) * u;
      return dst_scale_.cwiseProduct(u);
    }
  }
  throw Error("unreachable preconditioner kind");
}

}  // namespace epic
