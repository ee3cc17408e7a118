#include "epic/oracle.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "epic/prng.hpp"

namespace epic::oracle {

namespace {

void certify_spd(const Matrix& dense, const char* who) {
  Eigen::LLT<Matrix> llt(dense);
  if (llt.info() != Eigen::Success)
    throw IndefiniteMetricError(std::string(who) + " is not positive definite");
}

}  // namespace

SpectrumReference dense_reference(const SpdPencil& p) {
  if (p.size() > 2048)
    throw ConstructionError("dense_reference caps at n = 2048");
  const Matrix a = p.a.dense();
  const Matrix m = p.m.dense();
  certify_spd(a, "A");
  certify_spd(m, "M");
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(a, m);
  if (solver.info() != Eigen::Success)
    throw ConstructionError("dense generalized eigensolver failed");
  return SpectrumReference{solver.eigenvalues(), solver.eigenvectors()};
}

ExplicitChart build_chart(const SpdPencil& p, ConstVectorRef q_in, const Preconditioner* t) {
  const Index n = p.size();
  if (n > 200) throw ConstructionError("build_chart caps at n = 200");

  ExplicitChart chart{.m = p.m};
  chart.q = m_normalize(p.m, q_in);
  chart.rho_q = rayleigh_quotient(p, chart.q);
  chart.mq = spmv(p.m, chart.q);

  // Standard basis minus the column most aligned with q in the
  // M-inner product, M-Gram-Schmidted against q and each other with a
  // second full pass.
  Index drop = 0;
  chart.mq.cwiseAbs().maxCoeff(&drop);
  chart.big_q.resize(n, n - 1);
  std::vector<Vector> basis;
  basis.reserve(static_cast<std::size_t>(n));
  basis.push_back(chart.q);
  for (Index i = 0; i < n; ++i) {
    if (i == drop) continue;
    Vector v = Vector::Unit(n, i);
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vector& u : basis) v -= m_inner(p.m, u, v) * u;
    }
    const double norm = m_norm(p.m, v);
    if (!(norm > 1e-12))
      throw ConstructionError("chart Gram-Schmidt breakdown");
    v /= norm;
    chart.big_q.col(static_cast<Index>(basis.size()) - 1) = v;
    basis.push_back(std::move(v));
  }

  chart.m_big_q.resize(n, n - 1);
  Matrix aq(n, n - 1);
  for (Index j = 0; j < n - 1; ++j) {
    chart.m_big_q.col(j) = spmv(p.m, chart.big_q.col(j));
    aq.col(j) = spmv(p.a, chart.big_q.col(j));
  }
  chart.b_mat = chart.big_q.transpose() * aq;
  chart.b_mat = 0.5 * (chart.b_mat + chart.b_mat.transpose()).eval();
  chart.b_vec = chart.big_q.transpose() * spmv(p.a, chart.q);

  Matrix shifted = chart.b_mat - chart.rho_q * Matrix::Identity(n - 1, n - 1);
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() == Eigen::Success) {
    chart.ball_valid = true;
    chart.ball_center = llt.solve(chart.b_vec);
    chart.ball_radius_sq = chart.ball_center.dot(shifted * chart.ball_center);
  }

  if (t != nullptr) {
    const Matrix t_dense = dense_operator(*t);
    chart.p_mat = chart.big_q.transpose() * t_dense * chart.big_q;
    chart.p_mat = 0.5 * (chart.p_mat + chart.p_mat.transpose()).eval();
    chart.has_p = true;
  }
  return chart;
}

Vector psi(const ExplicitChart& chart, ConstVectorRef x) {
  const double denom = chart.mq.dot(x);
  if (!(denom > 0.0))
    throw DegenerateVectorError("psi needs a point on the open hemisphere (q'Mx > 0)");
  return chart.m_big_q.transpose() * x / denom;
}

Vector psi_dagger(const ExplicitChart& chart, ConstVectorRef y) {
  const Vector lifted = chart.big_q * y + chart.q;
  return m_normalize(chart.m, lifted);
}

double phi_value(const ExplicitChart& chart, ConstVectorRef y) {
  const double num =
      y.dot(chart.b_mat * y) + 2.0 * y.dot(chart.b_vec) + chart.rho_q;
  return num / (y.squaredNorm() + 1.0);
}

Vector phi_gradient(const ExplicitChart& chart, ConstVectorRef y) {
  const double value = phi_value(chart, y);
  return 2.0 / (y.squaredNorm() + 1.0) *
         (chart.b_mat * y - value * y + chart.b_vec);
}

Matrix phi_hessian(const ExplicitChart& chart, ConstVectorRef y) {
  const Index d = y.size();
  const double value = phi_value(chart, y);
  const Vector grad = phi_gradient(chart, y);
  Matrix h = chart.b_mat - value * Matrix::Identity(d, d) -
             y * grad.transpose() - grad * y.transpose();
  h *= 2.0 / (y.squaredNorm() + 1.0);
  return 0.5 * (h + h.transpose()).eval();
}

Matrix dense_inverse_operator(const Preconditioner& t) {
  const Index n = t.size();
  Matrix inv(n, n);
  for (Index j = 0; j < n; ++j) inv.col(j) = t.apply_inverse(Vector::Unit(n, j));
  return 0.5 * (inv + inv.transpose()).eval();
}

Matrix dense_operator(const Preconditioner& t) {
  const Matrix inv = dense_inverse_operator(t);
  Eigen::LLT<Matrix> llt(inv);
  if (llt.info() != Eigen::Success)
    throw PreconditionerError("materialized T^-1 is not positive definite");
  Matrix dense = llt.solve(Matrix::Identity(t.size(), t.size()));
  return 0.5 * (dense + dense.transpose()).eval();
}

SpectralInputs spectral_inputs(const ExplicitChart& chart, const SpectrumReference& ref) {
  const Index n = ref.eigenvalues.size();
  Vector xi;
  if (chart.has_p) {
    xi = dense_sym_geig(chart.b_mat, chart.p_mat).first;
  } else {
    xi = dense_sym_eig(chart.b_mat).first;
  }
  return SpectralInputs{ref.eigenvalues[0], ref.eigenvalues[1], ref.eigenvalues[n - 1],
                        xi[0], xi[xi.size() - 1]};
}

PrecondQuality precond_quality(const SpdPencil& p, const Preconditioner& t,
                               const ExplicitChart& chart, const SpectrumReference& ref) {
  const Vector nu = dense_sym_geig(p.a.dense(), dense_operator(t)).first;
  const SpectralInputs s = spectral_inputs(chart, ref);
  PrecondQuality quality;
  quality.nu_min = nu[0];
  quality.nu_max = nu[nu.size() - 1];
  quality.iota_nu = quality.nu_max / quality.nu_min;
  quality.iota_xi = s.xi_max / s.xi_min;
  quality.eta_xi = (1.0 - s.lambda1 / s.lambda_n) /
                   (quality.iota_xi * (1.0 - s.lambda1 / s.lambda2));
  return quality;
}

ConvexObjective make_aux_objective(const ExplicitChart& chart) {
  ConvexObjective obj;
  obj.dim = chart.big_q.cols();
  obj.value = [chart](ConstVectorRef y) { return phi_value(chart, y); };
  obj.gradient = [chart](ConstVectorRef y) { return phi_gradient(chart, y); };
  if (chart.has_p) obj.metric = chart.p_mat;
  return obj;
}

LocalMinimizer chart_local_minimizer(const ExplicitChart& chart) {
  return [chart](const ConvexObjective&, const std::vector<Vector>& basis) -> Vector {
    if (basis.empty()) throw ConstructionError("empty basis");
    const Index dim = basis.front().size();
    std::vector<Vector> kept;
    for (const Vector& raw : basis) {
      Vector v = raw;
      const double scale = v.norm();
      for (int pass = 0; pass < 2; ++pass) {
        for (const Vector& u : kept) v -= u.dot(v) * u;
      }
      if (scale <= 0.0 || v.norm() <= 1e-12 * scale) continue;
      kept.push_back(v / v.norm());
    }
    if (kept.empty()) throw DegenerateVectorError("degenerate basis");

    // Homogeneous reduction: phi restricted to the span is a small
    // Rayleigh quotient in the coefficients extended by the constant
    // coordinate.
    const Index m = static_cast<Index>(kept.size());
    Matrix v(dim, m);
    for (Index j = 0; j < m; ++j) v.col(j) = kept[static_cast<std::size_t>(j)];
    Matrix hat = Matrix::Zero(m + 1, m + 1);
    hat.topLeftCorner(m, m) = v.transpose() * chart.b_mat * v;
    hat.block(0, m, m, 1) = v.transpose() * chart.b_vec;
    hat.block(m, 0, 1, m) = hat.block(0, m, m, 1).transpose();
    hat(m, m) = chart.rho_q;
    auto [evals, evecs] = dense_sym_eig(hat);
    const Vector w = evecs.col(0);
    if (std::abs(w[m]) < 1e-12)
      throw DegenerateVectorError("span minimizer escapes to infinity");
    return v * (w.head(m) / w[m]);
  };
}

namespace {

struct CapSampler {
  const ExplicitChart& chart;
  Eigen::LLT<Matrix> shifted_llt;  // of B - rho_q I
  double radius;
  SplitMix64 rng;

  CapSampler(const ExplicitChart& c, std::uint64_t seed)
      : chart(c),
        shifted_llt(Matrix(c.b_mat -
                           c.rho_q * Matrix::Identity(c.b_mat.rows(), c.b_mat.rows()))),
        radius(std::sqrt(std::max(c.ball_radius_sq, 0.0))),
        rng(seed) {
    if (shifted_llt.info() != Eigen::Success)
      throw IndefiniteMetricError("B - rho_q I is not positive definite");
  }

  // Uniform in the projected cap: direction on the whitened sphere,
  // radius by the dimension power law.
  Vector draw(double stretch) {
    const Index d = chart.b_mat.rows();
    const double u = rng.next_uniform();
    return at_radius(stretch * std::pow(u, 1.0 / static_cast<double>(d)));
  }

  // A point at exactly `factor` times the cap radius.
  Vector draw_shell(double factor) { return at_radius(factor); }

 private:
  Vector at_radius(double factor) {
    Vector dir = rng.gaussian_vector(chart.b_mat.rows());
    const double norm = dir.norm();
    if (norm == 0.0 || radius == 0.0) return -chart.ball_center;
    dir /= norm;
    const Vector step = shifted_llt.matrixU().solve(dir * (radius * factor));
    return -chart.ball_center + step;
  }
};

}  // namespace

Section2Report verify_section2(const SpdPencil& p, const ExplicitChart& chart,
                               const ConvexityParams& params, const Section2Options& opts) {
  if (p.size() > 60) throw ConstructionError("verify_section2 caps at n = 60");
  if (!chart.ball_valid)
    throw ConstructionError("chart ball characterization unavailable (anchor too far)");

  Section2Report report;
  report.samples = opts.samples;
  CapSampler sampler(chart, opts.seed);
  const double rho = chart.rho_q;
  const double tol = opts.tolerance;
  const bool degenerate = sampler.radius == 0.0;

  std::vector<Vector> inside, outside, lifted;
  inside.reserve(static_cast<std::size_t>(opts.samples));
  for (int i = 0; i < opts.samples; ++i) inside.push_back(sampler.draw(1.0));
  if (!degenerate) {
    for (int i = 0; i < opts.samples / 2; ++i) {
      // Exterior points at 1.01x .. 2.01x the cap radius.
      outside.push_back(sampler.draw_shell(1.01 + sampler.rng.next_uniform()));
    }
  }
  lifted.reserve(inside.size());
  for (const Vector& y : inside) lifted.push_back(psi_dagger(chart, y));

  const AuxFrame frame = build_frame(p, chart.q, Preconditioner::identity(p.size()));

  // (a) membership on the sphere matches phi <= rho_q.
  {
    double margin = std::numeric_limits<double>::infinity();
    bool pass = true;
    for (std::size_t i = 0; i < inside.size(); ++i) {
      margin = std::min(margin, rho - phi_value(chart, inside[i]));
      if (!in_spherical_cap(p, frame, lifted[i])) pass = false;
    }
    for (const Vector& y : outside) {
      const double excess = phi_value(chart, y) - rho;
      margin = std::min(margin, excess);
      // Only clearly-exterior points can be required to fail the
      // membership predicate; at the boundary the predicate's own
      // tolerance dominates.
      if (excess > 2e-12 * std::abs(rho) &&
          in_spherical_cap(p, frame, psi_dagger(chart, y)))
        pass = false;
    }
    pass = pass && margin >= -tol * std::abs(rho);
    report.checks.push_back(
        {"a", "cap membership equals phi <= rho_q", pass, margin, ""});
  }

  // (b) ball identity: (y+z)'(B-rho I)(y+z) - r^2 == (phi - rho)(1+|y|^2).
  {
    const Matrix shifted =
        chart.b_mat - rho * Matrix::Identity(chart.b_mat.rows(), chart.b_mat.rows());
    double worst = 0.0;
    double scale = std::max(chart.ball_radius_sq, std::abs(rho));
    auto deviation = [&](const Vector& y) {
      const Vector w = y + chart.ball_center;
      const double lhs = w.dot(shifted * w) - chart.ball_radius_sq;
      const double rhs = (phi_value(chart, y) - rho) * (y.squaredNorm() + 1.0);
      return std::abs(lhs - rhs);
    };
    for (const Vector& y : inside) worst = std::max(worst, deviation(y));
    for (const Vector& y : outside) worst = std::max(worst, deviation(y));
    const double margin = 1e-9 * std::max(scale, 1.0) - worst;
    report.checks.push_back({"b", "ball characterization of the projected cap",
                             margin >= 0.0, margin, ""});
  }

  // (c) pairwise angles: x1'Mx2 >= 1 - delta_M.
  {
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < lifted.size(); i += 2) {
      const double cosine = m_inner(p.m, lifted[i], lifted[i + 1]);
      margin = std::min(margin, cosine - (1.0 - params.delta_m));
    }
    for (const Vector& x : lifted) {
      margin = std::min(margin, m_inner(p.m, chart.q, x) - (1.0 - params.delta_m));
    }
    report.checks.push_back(
        {"c", "pairwise angle bound on the cap", margin >= -tol, margin, ""});
  }

  // (d) |y|^2 / (1 + |y|^2) <= 2 delta_M.
  {
    double margin = std::numeric_limits<double>::infinity();
    for (const Vector& y : inside) {
      const double ratio = y.squaredNorm() / (1.0 + y.squaredNorm());
      margin = std::min(margin, 2.0 * params.delta_m - ratio);
    }
    report.checks.push_back(
        {"d", "coordinate norm bound", margin >= -tol, margin, ""});
  }

  // (e) Hessian sandwich in the P metric.
  {
    const Index d = chart.b_mat.rows();
    const Matrix pmat = chart.has_p ? chart.p_mat : Matrix::Identity(d, d);
    Eigen::LLT<Matrix> pllt(pmat);
    if (pllt.info() != Eigen::Success)
      throw IndefiniteMetricError("chart P is not positive definite");
    double lower_margin = std::numeric_limits<double>::infinity();
    double upper_margin = std::numeric_limits<double>::infinity();
    for (const Vector& y : inside) {
      Matrix h = phi_hessian(chart, y);
      Matrix white = pllt.matrixL().solve(h);
      white = pllt.matrixL().solve(Matrix(white.transpose())).transpose();
      Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (white + white.transpose()));
      lower_margin = std::min(lower_margin, es.eigenvalues().minCoeff() - params.mu);
      upper_margin = std::min(upper_margin, params.big_l - es.eigenvalues().maxCoeff());
    }
    const double margin = std::min(lower_margin, upper_margin);
    report.checks.push_back({"e", "Hessian sandwich mu_P P <= H <= L_P P",
                             margin >= -tol, margin, ""});
  }

  // (f) symmetrized gradient outer product bounded by chi_g in B.
  {
    Eigen::LLT<Matrix> bllt(chart.b_mat);
    if (bllt.info() != Eigen::Success)
      throw IndefiniteMetricError("chart B is not positive definite");
    double margin = std::numeric_limits<double>::infinity();
    for (const Vector& y : inside) {
      const Vector g = phi_gradient(chart, y);
      Matrix outer = g * y.transpose() + y * g.transpose();
      Matrix white = bllt.matrixL().solve(outer);
      white = bllt.matrixL().solve(Matrix(white.transpose())).transpose();
      Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (white + white.transpose()));
      const double extreme = std::max(std::abs(es.eigenvalues().minCoeff()),
                                      std::abs(es.eigenvalues().maxCoeff()));
      margin = std::min(margin, params.chi_g - extreme);
    }
    report.checks.push_back({"f", "gradient outer product bound in B",
                             margin >= -tol, margin, ""});
  }

  // (g) |grad Rq|^2 in A^-1 bounded by 4 rho (rho - lambda1) / lambda1.
  {
    Eigen::LLT<Matrix> allt(p.a.dense());
    double margin = std::numeric_limits<double>::infinity();
    for (const Vector& x : lifted) {
      const double rx = rayleigh_quotient(p, x);
      const Vector g = rq_gradient(p, x);
      const double norm_sq = g.dot(allt.solve(g));
      const double bound =
          4.0 * rx * (rx - params.lambda1) / params.lambda1;
      margin = std::min(margin, bound - norm_sq);
    }
    report.checks.push_back({"g", "A^-1 gradient norm bound", margin >= -tol,
                             margin, ""});
  }

  return report;
}

}  // namespace epic::oracle
