#include "epic/verification.hpp"

#include <cmath>
#include <fstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "epic/lonag.hpp"

namespace epic {

namespace {

Matrix random_orthogonal(Index n, SplitMix64& rng) {
  Matrix g(n, n);
  for (Index j = 0; j < n; ++j) g.col(j) = rng.gaussian_vector(n);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  return q;
}

}  // namespace

RandomPencil make_random_pencil(const RandomPencilSpec& spec, SplitMix64& rng) {
  const Index n = spec.n;
  if (!(spec.lambda1 > 0.0 && spec.lambda1 < spec.lambda2 && spec.lambda2 <= spec.lambda_n))
    throw ConstructionError("random pencil needs 0 < lambda1 < lambda2 <= lambda_n");
  Vector lambda(n);
  lambda[0] = spec.lambda1;
  lambda[1] = spec.lambda2;
  for (Index i = 2; i < n; ++i)
    lambda[i] = spec.lambda2 + (spec.lambda_n - spec.lambda2) * rng.next_uniform();
  std::sort(lambda.data() + 1, lambda.data() + n);
  lambda[n - 1] = spec.lambda_n;

  const Matrix u = random_orthogonal(n, rng);
  Matrix m_dense = Matrix::Identity(n, n);
  Matrix m_sqrt = Matrix::Identity(n, n);
  Matrix m_inv_sqrt = Matrix::Identity(n, n);
  if (spec.generalized) {
    Vector d(n);
    for (Index i = 0; i < n; ++i) d[i] = 0.5 + 1.5 * rng.next_uniform();
    const Matrix v = random_orthogonal(n, rng);
    m_dense = v * d.asDiagonal() * v.transpose();
    m_dense = 0.5 * (m_dense + m_dense.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_dense);
    m_sqrt = es.operatorSqrt();
    m_inv_sqrt = es.operatorInverseSqrt();
  }

  Matrix a_dense = m_sqrt * u * lambda.asDiagonal() * u.transpose() * m_sqrt;
  RandomPencil rp{SpdPencil(SparseSymMatrix::from_dense(a_dense),
                            SparseSymMatrix::from_dense(m_dense)),
                  lambda, m_inv_sqrt * u};
  // Columns of m_inv_sqrt * u are M-orthonormal eigenvectors by
  // construction; re-normalize to clean up roundoff.
  for (Index j = 0; j < n; ++j)
    rp.eigenvectors.col(j) = m_normalize(rp.pencil.m, rp.eigenvectors.col(j));
  return rp;
}

AnchorSetup make_valid_anchor(const RandomPencil& rp, const Preconditioner& t,
                              double fraction, SplitMix64& rng) {
  const Index n = rp.pencil.size();
  // Perturbation spanned by the higher eigenvectors only, so
  // rho_q - lambda1 = eps^2 (Rq(w) - lambda1) / (1 + eps^2) exactly.
  Vector w = Vector::Zero(n);
  for (Index i = 1; i < n; ++i) w += rng.next_gaussian() * rp.eigenvectors.col(i);
  w = m_normalize(rp.pencil.m, w);
  const double rq_w = rayleigh_quotient(rp.pencil, w);
  const Vector u1 = rp.eigenvectors.col(0);

  double eps = 0.5;
  for (int attempt = 0; attempt < 60; ++attempt) {
    const Vector q = m_normalize(rp.pencil.m, u1 + eps * w);
    oracle::ExplicitChart chart = oracle::build_chart(rp.pencil, q, &t);
    const SpectralInputs inputs =
        oracle::spectral_inputs(chart, oracle::SpectrumReference{rp.eigenvalues,
                                                                 rp.eigenvectors});
    ConvexityParams params = convexity_params(inputs, chart.rho_q);
    const double width = (inputs.lambda2 - inputs.lambda1) / (2.0 + params.chi_p);
    const double excess = chart.rho_q - inputs.lambda1;
    if (params.valid && excess <= fraction * width && excess > 0.0) {
      return AnchorSetup{q, std::move(chart), params};
    }
    // Aim eps directly at the target excess; fall back to halving.
    const double target = 0.8 * fraction * width;
    const double denom = rq_w - inputs.lambda1 - target;
    const double aimed = denom > 0.0 ? std::sqrt(target / denom) : eps * 0.5;
    eps = std::min(aimed, eps * 0.5);
    if (!(eps > 1e-12)) break;
  }
  throw ConstructionError("could not construct a valid anchor");
}

Vector make_rate_initial(const RandomPencil& rp, const AnchorSetup& anchor,
                         SplitMix64& rng) {
  const Index n = rp.pencil.size();
  Vector w = Vector::Zero(n);
  for (Index i = 1; i < n; ++i) w += rng.next_gaussian() * rp.eigenvectors.col(i);
  w = m_normalize(rp.pencil.m, w);
  const double rq_w = rayleigh_quotient(rp.pencil, w);
  const Vector u1 = rp.eigenvectors.col(0);

  const double kappa = anchor.params.kappa;
  const double tau = anchor.params.tau;
  const double denom =
      std::max(8.0 * kappa, 2.0 * kappa * (1.0 + tau * kappa) * (1.0 + tau * kappa));
  const double budget = (anchor.chart.rho_q - rp.eigenvalues[0]) / denom;

  double delta = std::sqrt(0.5 * budget / (rq_w - rp.eigenvalues[0]));
  for (int attempt = 0; attempt < 60; ++attempt) {
    Vector x0 = m_normalize(rp.pencil.m, u1 + delta * w);
    if (m_inner(rp.pencil.m, anchor.q, x0) < 0.0) x0 = -x0;
    const double excess = rayleigh_quotient(rp.pencil, x0) - rp.eigenvalues[0];
    if (excess <= budget) return x0;
    delta *= 0.5;
  }
  throw ConstructionError("could not construct a rate-certified initial vector");
}

namespace {

struct QuadraticSuiteResult {
  bool decay_pass = true;
  double worst_violation = 0.0;
  int decay_instances = 0;
  int lonag_iters_at_1e4 = 0;
  int gd_iters_at_1e4 = 0;
  bool acceleration_pass = false;
};

ConvexObjective make_quadratic(const Matrix& h, const Vector& y_star) {
  ConvexObjective obj;
  obj.dim = h.rows();
  obj.value = [h, y_star](ConstVectorRef y) {
    const Vector d = y - y_star;
    return 0.5 * d.dot(h * d);
  };
  obj.gradient = [h, y_star](ConstVectorRef y) -> Vector { return h * (y - y_star); };
  obj.minimizer = y_star;
  return obj;
}

QuadraticSuiteResult run_quadratic_suite(int instances, SplitMix64& rng) {
  QuadraticSuiteResult out;
  out.decay_instances = instances;
  for (int inst = 0; inst < instances; ++inst) {
    const Index n = 4 + static_cast<Index>(rng.next_u64() % 12);
    const double kappa = std::pow(10.0, 6.0 * rng.next_uniform());
    Vector d(n);
    d[0] = 1.0;
    d[n - 1] = kappa;
    for (Index i = 1; i < n - 1; ++i)
      d[i] = std::pow(10.0, std::log10(kappa) * rng.next_uniform());
    const Matrix u = random_orthogonal(n, rng);
    const Matrix h = u * d.asDiagonal() * u.transpose();
    const Vector y_star = rng.gaussian_vector(n);
    ConvexObjective obj = make_quadratic(0.5 * (h + h.transpose()), y_star);

    const double mu = 1.0, big_l = kappa;
    const double tau = 1.0 / std::sqrt(kappa);
    LonagState st = lonag_init(obj, rng.gaussian_vector(n), tau, mu, big_l);
    const double l0 = st.lyapunov;
    for (int k = 0; k < 400 && st.lyapunov > 1e-13 * l0; ++k) {
      LonagState next = lonag_step(obj, st);
      const double allowed = (1.0 - tau) * st.lyapunov + 1e-12 * l0;
      if (next.lyapunov > allowed) {
        out.decay_pass = false;
        out.worst_violation =
            std::max(out.worst_violation, (next.lyapunov - allowed) / l0);
      }
      st = next;
    }
  }

  // Acceleration gap at kappa = 1e4 on a fixed quadratic.
  {
    const Index n = 16;
    const double kappa = 1e4;
    Vector d(n);
    for (Index i = 0; i < n; ++i)
      d[i] = std::pow(kappa, static_cast<double>(i) / static_cast<double>(n - 1));
    const Matrix u = random_orthogonal(n, rng);
    const Matrix h = u * d.asDiagonal() * u.transpose();
    const Vector y_star = rng.gaussian_vector(n);
    ConvexObjective obj = make_quadratic(0.5 * (h + h.transpose()), y_star);
    const Vector y0 = y_star + rng.gaussian_vector(n);

    const double tau = 1.0 / std::sqrt(kappa);
    LonagState st = lonag_init(obj, y0, tau, 1.0, kappa);
    const double l0 = st.lyapunov;
    const double goal = 1e-8 * l0;
    int lonag_iters = 0;
    while (obj.value(st.y) - obj.value(y_star) > goal && lonag_iters < 200000) {
      st = lonag_step(obj, st);
      ++lonag_iters;
    }

    Vector y = y0;
    int gd_iters = 0;
    while (obj.value(y) - obj.value(y_star) > goal && gd_iters < 2000000) {
      y -= obj.gradient(y) / kappa;
      ++gd_iters;
    }
    out.lonag_iters_at_1e4 = lonag_iters;
    out.gd_iters_at_1e4 = gd_iters;
    out.acceleration_pass = 5 * lonag_iters <= gd_iters;
  }
  return out;
}

}  // namespace

VerificationSummary run_verification(const VerificationConfig& cfg) {
  SplitMix64 rng(cfg.seed);
  VerificationSummary summary;
  summary.probe_requested = cfg.run_probe;

  nlohmann::json instances = nlohmann::json::array();
  bool section2_pass = true;
  int probe_failures = 0;

  for (int inst = 0; inst < cfg.instances; ++inst) {
    const Index span_n = cfg.max_n - cfg.min_n;
    const Index n =
        cfg.min_n + (span_n > 0 ? static_cast<Index>(rng.next_u64() %
                                                     static_cast<std::uint64_t>(span_n + 1))
                                : 0);
    RandomPencilSpec spec;
    spec.n = n;
    spec.lambda1 = 1.0;
    spec.lambda2 = 1.5 + rng.next_uniform();
    spec.lambda_n = spec.lambda2 + 1.0 + 4.0 * rng.next_uniform();
    spec.generalized = inst % 3 == 1;
    RandomPencil rp = make_random_pencil(spec, rng);

    // Mix of co-preconditioners; identity keeps the sandwich tight.
    Preconditioner t = inst % 3 == 2 ? Preconditioner::jacobi(rp.pencil.a)
                                     : Preconditioner::identity(n);
    const double fraction = inst % 2 == 0 ? 1e-3 : 0.2;
    AnchorSetup anchor = make_valid_anchor(rp, t, fraction, rng);

    oracle::Section2Options opts;
    opts.samples = cfg.samples;
    opts.seed = rng.next_u64();
    const oracle::Section2Report report =
        oracle::verify_section2(rp.pencil, anchor.chart, anchor.params, opts);
    if (!report.all_pass()) section2_pass = false;

    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : report.checks) {
      checks.push_back({{"id", c.id},
                        {"name", c.name},
                        {"pass", c.pass},
                        {"worst_margin", c.margin}});
    }

    bool probe_failed_here = false;
    if (cfg.run_probe) {
      ConvexityParams inflated = anchor.params;
      inflated.mu *= 1.1;
      oracle::Section2Options probe_opts = opts;
      probe_opts.seed = rng.next_u64();
      const auto probe_report =
          oracle::verify_section2(rp.pencil, anchor.chart, inflated, probe_opts);
      for (const auto& c : probe_report.checks) {
        if (c.id == "e" && !c.pass) probe_failed_here = true;
      }
      if (probe_failed_here) ++probe_failures;
    }

    instances.push_back({{"instance", inst},
                         {"n", n},
                         {"generalized", spec.generalized},
                         {"rho_excess", anchor.chart.rho_q - rp.eigenvalues[0]},
                         {"pass", report.all_pass()},
                         {"probe_failed", probe_failed_here},
                         {"checks", checks}});
  }

  const QuadraticSuiteResult quad = run_quadratic_suite(cfg.lyapunov_instances, rng);

  summary.section2_pass = section2_pass;
  summary.probe_detected = probe_failures > 0;
  summary.lyapunov_pass = quad.decay_pass;
  summary.acceleration_pass = quad.acceleration_pass;

  summary.report["instances"] = instances;
  summary.report["section2_pass"] = section2_pass;
  summary.report["probe"] = {{"mu_inflation", 1.1},
                             {"failed_instances", probe_failures},
                             {"detected", summary.probe_detected}};
  summary.report["lyapunov"] = {
      {"instances", cfg.lyapunov_instances},
      {"decay_pass", quad.decay_pass},
      {"worst_violation", quad.worst_violation},
      {"acceleration",
       {{"lonag_iters", quad.lonag_iters_at_1e4},
        {"gd_iters", quad.gd_iters_at_1e4},
        {"pass", quad.acceleration_pass}}}};
  summary.report["all_pass"] = summary.all_pass();

  if (!cfg.out_path.empty()) {
    std::ofstream out(cfg.out_path);
    if (!out) throw ConstructionError(cfg.out_path + ": cannot open for writing");
    out << summary.report.dump(2) << "\n";
  }
  return summary;
}

}  // namespace epic
