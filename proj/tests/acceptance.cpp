// Acceptance suite: one pass/fail line per criterion, nonzero exit on
// any failure. Tolerances are pinned here, not configurable.

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "epic/experiment.hpp"
#include "epic/lonag.hpp"
#include "epic/oracle.hpp"
#include "epic/prng.hpp"
#include "epic/solvers.hpp"
#include "epic/verification.hpp"

using namespace epic;

namespace {

struct CriterionResult {
  int number;
  bool pass;
  std::string detail;
};

std::vector<CriterionResult> g_results;
std::vector<ConvergenceRecord> g_records;  // pooled for the monotonicity criterion

void report(int number, bool pass, const std::string& detail) {
  g_results.push_back({number, pass, detail});
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------- 1 ---
void criterion_table1_scaling() {
  SweepConfig cfg;
  cfg.out_dir = "acceptance_artifacts/sweep";
  const SweepResult sweep = sweep_table1(cfg);
  const std::vector<int> expected = {170, 330, 476, 618, 759};
  bool pass = sweep.iterations.size() == expected.size();
  std::string detail = "m_P =";
  for (std::size_t i = 0; i < sweep.iterations.size(); ++i) {
    detail += fmt(" %d", sweep.iterations[i]);
    const double rel = std::abs(sweep.iterations[i] - expected[i]) /
                       static_cast<double>(expected[i]);
    if (rel > 0.25) pass = false;
  }
  detail += fmt(" (reference 170/330/476/618/759), fit C=%.2f residual=%.3f",
                sweep.fitted_c, sweep.fit_relative_residual);
  if (sweep.fit_relative_residual > 0.10) pass = false;
  report(1, pass, detail);
}

// ---------------------------------------------------------------- 2 ---
void criterion_rate_certificate() {
  SplitMix64 rng(202);
  bool pass = true;
  double worst_ratio = 0.0;
  int instances = 0;
  for (int inst = 0; inst < 20; ++inst) {
    RandomPencilSpec spec;
    spec.n = 10 + static_cast<Index>(rng.next_u64() % 31);  // n <= 40
    spec.lambda2 = 1.5 + rng.next_uniform();
    spec.lambda_n = spec.lambda2 + 1.0 + 3.0 * rng.next_uniform();
    spec.generalized = inst % 4 == 1;
    const RandomPencil rp = make_random_pencil(spec, rng);
    const Preconditioner t = inst % 3 == 0 ? Preconditioner::jacobi(rp.pencil.a)
                                           : Preconditioner::identity(spec.n);

    const AnchorSetup anchor = make_valid_anchor(rp, t, 0.5, rng);
    const Vector x0 = make_rate_initial(rp, anchor, rng);
    const double eps0 = rayleigh_quotient(rp.pencil, x0) - rp.eigenvalues[0];
    const double tau = anchor.params.tau;

    // Iterate while the certified envelope stays above the double-
    // precision floor of the Rayleigh quotient.
    const double floor_eps = 1e-12 * rp.eigenvalues[0];
    int k_max = static_cast<int>(
        std::floor(std::log(floor_eps / (2.0 * eps0)) / std::log(1.0 - tau)));
    k_max = std::max(1, std::min(k_max, 2000));

    SolverConfig cfg;
    cfg.params = anchor.params;
    cfg.rel_tol = 0.0;  // run the full certified window
    cfg.max_iters = k_max;
    cfg.restart_enabled = false;
    ConvergenceRecord rec = epic_solve(rp.pencil, t, anchor.q, x0, cfg);

    for (const auto& row : rec.rows) {
      const double bound =
          2.0 * std::pow(1.0 - tau, row.k) * eps0 * (1.0 + 1e-8);
      const double eps_k = row.rayleigh - rp.eigenvalues[0];
      if (eps_k > bound) pass = false;
      if (bound > 0.0) worst_ratio = std::max(worst_ratio, eps_k / bound);
    }
    g_records.push_back(std::move(rec));
    ++instances;
  }
  report(2, pass,
         fmt("%d certified instances, worst (Rq - l1) / envelope = %.3g",
             instances, worst_ratio));
}

// ---------------------------------------------------------------- 3 ---
void criterion_monotonicity() {
  const double slack = 4.0 * std::numeric_limits<double>::epsilon();
  bool pass = true;
  std::size_t steps = 0;
  for (const auto& rec : g_records) {
    for (std::size_t i = 1; i < rec.rows.size(); ++i) {
      ++steps;
      if (rec.rows[i].rayleigh > rec.rows[i - 1].rayleigh * (1.0 + slack)) pass = false;
    }
  }
  report(3, pass,
         fmt("%zu iteration steps over %zu runs, slack 4u", steps, g_records.size()));
}

// ------------------------------------------------------------- 4, 7 ---
void criteria_verification_and_lyapunov() {
  VerificationConfig cfg;
  cfg.instances = 50;
  cfg.samples = 500;
  cfg.max_n = 60;
  cfg.lyapunov_instances = 20;
  cfg.seed = 404;
  cfg.out_path = "acceptance_artifacts/verify_report.json";
  const VerificationSummary summary = run_verification(cfg);

  // Criterion 4 additionally demands strictly positive margins.
  bool positive_margins = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& inst : summary.report.at("instances")) {
    for (const auto& check : inst.at("checks")) {
      const double margin = check.at("worst_margin").get<double>();
      worst_margin = std::min(worst_margin, margin);
      if (!(margin > 0.0)) positive_margins = false;
    }
  }
  const bool pass4 = summary.section2_pass && positive_margins && summary.probe_detected;
  report(4, pass4,
         fmt("50 instances x 7 checks, worst margin %.3g, probe failures %d",
             worst_margin,
             summary.report.at("probe").at("failed_instances").get<int>()));

  const auto& lyap = summary.report.at("lyapunov");
  const auto& accel = lyap.at("acceleration");
  const bool pass7 = summary.lyapunov_pass && summary.acceleration_pass;
  report(7, pass7,
         fmt("decay pass=%d, acceleration %d vs %d gradient iterations",
             static_cast<int>(summary.lyapunov_pass),
             accel.at("lonag_iters").get<int>(), accel.at("gd_iters").get<int>()));
}

// ---------------------------------------------------------------- 5 ---
void criterion_chart_equivalence() {
  SplitMix64 rng(505);
  bool pass = true;
  double worst = 0.0;
  for (int inst = 0; inst < 10; ++inst) {
    RandomPencilSpec spec;
    spec.n = 6 + static_cast<Index>(rng.next_u64() % 20);  // n <= 25
    spec.lambda2 = 1.4 + rng.next_uniform();
    spec.lambda_n = spec.lambda2 + 2.0;
    spec.generalized = inst % 3 == 0;
    const RandomPencil rp = make_random_pencil(spec, rng);
    const Preconditioner t = inst % 2 == 0 ? Preconditioner::identity(spec.n)
                                           : Preconditioner::jacobi(rp.pencil.a);
    const AnchorSetup anchor = make_valid_anchor(rp, t, 0.4, rng);
    const Vector x0 = make_rate_initial(rp, anchor, rng);

    SolverConfig cfg;
    cfg.params = anchor.params;
    cfg.rel_tol = 0.0;
    cfg.max_iters = 30;
    cfg.restart_enabled = false;
    cfg.record_iterates = true;
    ConvergenceRecord rec = epic_solve(rp.pencil, t, anchor.q, x0, cfg);

    ConvexObjective obj = oracle::make_aux_objective(anchor.chart);
    const LocalMinimizer minimize = oracle::chart_local_minimizer(anchor.chart);
    LonagState st = lonag_init(obj, oracle::psi(anchor.chart, rec.iterates.front()),
                               anchor.params.tau, anchor.params.mu,
                               anchor.params.big_l);
    for (std::size_t k = 0; k < rec.iterates.size(); ++k) {
      const Vector lifted = oracle::psi_dagger(anchor.chart, st.y);
      const double dist = m_norm(rp.pencil.m, rec.iterates[k] - lifted);
      worst = std::max(worst, dist);
      if (dist > 1e-8) pass = false;
      if (k + 1 < rec.iterates.size()) st = lonag_step(obj, st, minimize);
    }
    g_records.push_back(std::move(rec));
  }
  report(5, pass, fmt("10 instances, k <= 30, worst |x_k - lift(y_k)|_M = %.3g", worst));
}

// ---------------------------------------------------------------- 6 ---
void criterion_projected_preconditioner_identity() {
  SplitMix64 rng(606);
  bool pass = true;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    RandomPencilSpec spec;
    spec.n = 5 + static_cast<Index>(rng.next_u64() % 36);  // n <= 40
    spec.generalized = trial % 2 == 0;
    const RandomPencil rp = make_random_pencil(spec, rng);
    Preconditioner t = Preconditioner::identity(spec.n);
    switch (trial % 5) {
      case 0:
        t = Preconditioner::jacobi(rp.pencil.a);
        break;
      case 1:
        t = Preconditioner::ssor(rp.pencil.a, 0.8 + rng.next_uniform());
        break;
      case 2:
        t = Preconditioner::ic0(rp.pencil.a);
        break;
      case 3: {
        Matrix g(spec.n, spec.n);
        for (Index i = 0; i < spec.n; ++i)
          for (Index j = 0; j < spec.n; ++j) g(i, j) = rng.next_gaussian();
        Matrix spd = g * g.transpose() +
                     static_cast<double>(spec.n) * Matrix::Identity(spec.n, spec.n);
        t = Preconditioner::exact(SparseSymMatrix::from_dense(spd));
        break;
      }
      default:
        break;
    }
    const Vector q = m_normalize(rp.pencil.m, rng.gaussian_vector(spec.n));
    const AuxFrame frame = build_frame(rp.pencil, q, t);
    const auto chart = oracle::build_chart(rp.pencil, q, &t);
    Eigen::LLT<Matrix> pllt(chart.p_mat);
    const Vector r = rng.gaussian_vector(spec.n);
    const Vector fast = projected_precondition(frame, t, r);
    const Vector explicit_route = chart.big_q * pllt.solve(chart.big_q.transpose() * r);
    const double err = (fast - explicit_route).norm() / r.norm();
    worst = std::max(worst, err);
    if (err > 1e-10) pass = false;
  }
  report(6, pass, fmt("100 random (T, r) pairs, worst relative gap %.3g", worst));
}

// ---------------------------------------------------------------- 8 ---
void criterion_derivative_checks() {
  SplitMix64 rng(808);
  bool pass = true;
  double worst = 0.0;
  for (int inst = 0; inst < 5; ++inst) {
    RandomPencilSpec spec;
    spec.n = 10 + 2 * inst;
    spec.generalized = inst % 2 == 1;
    const RandomPencil rp = make_random_pencil(spec, rng);
    for (int trial = 0; trial < 10; ++trial) {
      const Vector x = rng.gaussian_vector(spec.n);
      const Vector g = rq_gradient(rp.pencil, x);
      const double h = 1e-6 * x.norm();
      Vector fd(spec.n);
      for (Index d = 0; d < spec.n; ++d) {
        Vector xp = x, xm = x;
        xp[d] += h;
        xm[d] -= h;
        fd[d] = (rayleigh_quotient(rp.pencil, xp) - rayleigh_quotient(rp.pencil, xm)) /
                (2.0 * h);
      }
      const double err = (g - fd).norm() / (g.norm() + 1e-12);
      worst = std::max(worst, err);
      if (err > 1e-6) pass = false;
    }

    const Vector q = m_normalize(rp.pencil.m, rng.gaussian_vector(spec.n));
    const auto chart = oracle::build_chart(rp.pencil, q);
    for (int trial = 0; trial < 10; ++trial) {
      const Vector y = 0.5 * rng.gaussian_vector(spec.n - 1);
      const Vector g = oracle::phi_gradient(chart, y);
      const double h = 1e-6 * (1.0 + y.norm());
      Vector fd(spec.n - 1);
      for (Index d = 0; d < spec.n - 1; ++d) {
        Vector yp = y, ym = y;
        yp[d] += h;
        ym[d] -= h;
        fd[d] =
            (oracle::phi_value(chart, yp) - oracle::phi_value(chart, ym)) / (2.0 * h);
      }
      const double err = (g - fd).norm() / (g.norm() + 1e-12);
      worst = std::max(worst, err);
      if (err > 1e-6) pass = false;
    }
  }
  report(8, pass,
         fmt("gradients of Rq and phi vs central differences, worst %.3g "
             "(Hessian sandwich under criterion 4)",
             worst));
}

// ---------------------------------------------------------------- 9 ---
void criterion_oracle_agreement() {
  SplitMix64 rng(909);
  bool pass = true;
  double worst = 0.0;
  for (int inst = 0; inst < 10; ++inst) {
    RandomPencilSpec spec;
    spec.n = 12 + 2 * (inst % 4);
    spec.lambda2 = 1.3 + 0.5 * rng.next_uniform();
    spec.lambda_n = spec.lambda2 + 2.0 + 3.0 * rng.next_uniform();
    spec.generalized = inst % 2 == 1;  // includes M != I cases
    const RandomPencil rp = make_random_pencil(spec, rng);
    const auto reference = oracle::dense_reference(rp.pencil);
    const double lambda1 = reference.eigenvalues[0];

    Preconditioner t = Preconditioner::identity(spec.n);
    if (inst % 4 == 1) t = Preconditioner::jacobi(rp.pencil.a);
    if (inst % 4 == 2) t = Preconditioner::ssor(rp.pencil.a, 1.0);
    if (inst % 4 == 3) t = Preconditioner::ic0(rp.pencil.a);

    const Vector q = m_normalize(rp.pencil.m, rng.gaussian_vector(spec.n));
    SolverConfig cfg;
    cfg.params = practical_params(6.0, 6.0);
    cfg.rel_tol = 1e-9;
    cfg.max_iters = 4000;
    cfg.reference_lambda1 = lambda1;

    ConvergenceRecord recs[4] = {epic_solve(rp.pencil, t, q, q, cfg),
                                 eic_solve(rp.pencil, q, q, cfg),
                                 psd_solve(rp.pencil, t, q, cfg),
                                 lopcg_solve(rp.pencil, t, q, cfg)};
    for (auto& rec : recs) {
      const double rel = std::abs(rec.eigenvalue - lambda1) / lambda1;
      worst = std::max(worst, rel);
      if (rec.status != SolverStatus::Converged || rel > 1e-8) pass = false;
      g_records.push_back(std::move(rec));
    }
  }
  report(9, pass,
         fmt("epic/eic/psd/lopcg on 10 pencils (incl. M != I), worst rel err %.3g",
             worst));
}

// --------------------------------------------------------------- 10 ---
void criterion_synthetic_spectrum() {
  const Index n = 128;
  const double iota = 400.0;
  Vector adiag(n);
  for (Index i = 0; i < n; ++i) adiag[i] = std::pow(1.1, static_cast<double>(i % 37));
  const DstSpec spec{n, iota, 1.1};
  const Preconditioner t = Preconditioner::synthetic_dst(spec, adiag);
  const Vector d = spec.log_spaced_diagonal();

  const SpdPencil at(SparseSymMatrix::diagonal(adiag),
                     SparseSymMatrix::from_dense(oracle::dense_operator(t)));
  const auto ref = oracle::dense_reference(at);
  bool pass = true;
  double worst = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double rel = std::abs(ref.eigenvalues[i] - d[i]) / d[i];
    worst = std::max(worst, rel);
    if (rel > 1e-8) pass = false;
  }
  if (std::abs(ref.eigenvalues[0] - 1.0) > 1e-8) pass = false;
  if (std::abs(ref.eigenvalues[n - 1] - iota) > 1e-8 * iota) pass = false;
  report(10, pass,
         fmt("eig(A, T_dst) vs log-spaced D at n=128, worst rel dev %.3g "
             "(nu_min=%.12f, nu_max=%.6f)",
             worst, ref.eigenvalues[0], ref.eigenvalues[n - 1]));
}

}  // namespace

int main() {
  criterion_table1_scaling();
  criterion_rate_certificate();
  criterion_chart_equivalence();
  criterion_projected_preconditioner_identity();
  criteria_verification_and_lyapunov();
  criterion_derivative_checks();
  criterion_oracle_agreement();
  criterion_synthetic_spectrum();
  criterion_monotonicity();  // pooled over every run above

  std::sort(g_results.begin(), g_results.end(),
            [](const CriterionResult& a, const CriterionResult& b) {
              return a.number < b.number;
            });
  int failures = 0;
  for (const auto& r : g_results) {
    std::printf("[%s] criterion %d: %s\n", r.pass ? "PASS" : "FAIL", r.number,
                r.detail.c_str());
    if (!r.pass) ++failures;
  }
  if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
