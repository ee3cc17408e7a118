#include <doctest.h>

#include <cmath>

#include "epic/experiment.hpp"
#include "epic/oracle.hpp"
#include "epic/prng.hpp"
#include "epic/solvers.hpp"
#include "epic/verification.hpp"

using namespace epic;

namespace {

Vector vec(std::initializer_list<double> vals) {
  Vector v(static_cast<Index>(vals.size()));
  Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

void check_monotone(const ConvergenceRecord& rec) {
  for (std::size_t i = 1; i < rec.rows.size(); ++i) {
    CHECK(rec.rows[i].rayleigh <=
          rec.rows[i - 1].rayleigh * (1.0 + 4 * std::numeric_limits<double>::epsilon()));
  }
}

SolverConfig practical_config(double rel_tol, int max_iters) {
  SolverConfig cfg;
  cfg.params = practical_params(6.0, 6.0);
  cfg.rel_tol = rel_tol;
  cfg.max_iters = max_iters;
  return cfg;
}

}  // namespace

TEST_CASE("rayleigh_ritz on eigenbases") {
  SplitMix64 rng(61);
  RandomPencilSpec spec;
  spec.n = 3;
  spec.lambda2 = 2.0;
  spec.lambda_n = 4.0;
  const RandomPencil rp = make_random_pencil(spec, rng);

  {
    const auto [theta, v] = rayleigh_ritz(rp.pencil, {rp.eigenvectors.col(0)});
    CHECK(theta == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(m_inner(rp.pencil.m, v, rp.eigenvectors.col(0))) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  {
    const auto [theta, v] = rayleigh_ritz(
        rp.pencil,
        {rp.eigenvectors.col(2), rp.eigenvectors.col(1), rp.eigenvectors.col(0)});
    CHECK(theta == doctest::Approx(1.0).epsilon(1e-11));
    CHECK(std::abs(m_inner(rp.pencil.m, v, rp.eigenvectors.col(0))) ==
          doctest::Approx(1.0).epsilon(1e-11));
  }
  {
    const Vector a = rng.gaussian_vector(3);
    const Vector b = rng.gaussian_vector(3);
    const auto dedup = rayleigh_ritz(rp.pencil, {a, b});
    const auto dup = rayleigh_ritz(rp.pencil, {a, a, b, a, b});
    CHECK(dup.first == doctest::Approx(dedup.first).epsilon(1e-11));
    CHECK((dup.second - dedup.second).norm() <= 1e-9);
  }
  CHECK_THROWS_AS(rayleigh_ritz(rp.pencil, {Vector::Zero(3)}), DegenerateVectorError);
}

TEST_CASE("epic converges on the 3x3 diagonal example") {
  SpdPencil p(SparseSymMatrix::diagonal(vec({1, 10, 100})), SparseSymMatrix::identity(3));
  const Vector start = m_normalize(p.m, vec({1.0, 0.2, 0.1}));
  SolverConfig cfg = practical_config(1e-12, 200);
  cfg.reference_lambda1 = 1.0;
  const auto rec = epic_solve(p, Preconditioner::exact(p.a), start, start, cfg);
  CHECK(rec.status == SolverStatus::Converged);
  CHECK(rec.eigenvalue == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(rec.eigenvector[0]) == doctest::Approx(1.0).epsilon(1e-6));
  check_monotone(rec);
}

TEST_CASE("an exact eigenvector converges at iteration zero") {
  SpdPencil p(SparseSymMatrix::diagonal(vec({1, 2, 4})), SparseSymMatrix::identity(3));
  SolverConfig cfg = practical_config(1e-10, 50);
  cfg.reference_lambda1 = 1.0;
  const Vector u1 = vec({1, 0, 0});
  const auto rec = epic_solve(p, Preconditioner::identity(3), u1, u1, cfg);
  CHECK(rec.status == SolverStatus::Converged);
  CHECK(rec.iterations == 0);
  CHECK(rec.eigenvalue == 1.0);

  const auto rec_eic = eic_solve(p, u1, u1, cfg);
  CHECK(rec_eic.iterations == 0);
  const auto rec_psd = psd_solve(p, Preconditioner::identity(3), u1, cfg);
  CHECK(rec_psd.iterations == 0);
  const auto rec_lopcg = lopcg_solve(p, Preconditioner::identity(3), u1, cfg);
  CHECK(rec_lopcg.iterations == 0);
}

TEST_CASE("initial sign flips to the anchor hemisphere") {
  SpdPencil p(SparseSymMatrix::diagonal(vec({1, 2, 4})), SparseSymMatrix::identity(3));
  SolverConfig cfg = practical_config(1e-10, 100);
  const Vector q = vec({1, 0.1, 0});
  const Vector x0 = vec({-1, -0.1, -0.02});
  const auto rec = epic_solve(p, Preconditioner::identity(3), q, x0, cfg);
  CHECK(rec.eigenvector[0] > 0.0);
  check_monotone(rec);
}

TEST_CASE("psd converges on diag(1,2,4) with identity preconditioning") {
  SpdPencil p(SparseSymMatrix::diagonal(vec({1, 2, 4})), SparseSymMatrix::identity(3));
  SolverConfig cfg = practical_config(1e-10, 200);
  cfg.reference_lambda1 = 1.0;
  const Vector x0 = m_normalize(p.m, vec({0.5, 0.6, 0.6}));
  const auto rec = psd_solve(p, Preconditioner::identity(3), x0, cfg);
  CHECK(rec.status == SolverStatus::Converged);
  CHECK(rec.iterations <= 200);
  CHECK(rec.eigenvalue == doctest::Approx(1.0).epsilon(1e-10));
  check_monotone(rec);
}

TEST_CASE("all solvers agree with the dense reference on random pencils") {
  SplitMix64 rng(71);
  for (int inst = 0; inst < 4; ++inst) {
    RandomPencilSpec spec;
    spec.n = 18;
    spec.generalized = inst % 2 == 1;
    spec.lambda2 = 1.6;
    spec.lambda_n = 6.0;
    const RandomPencil rp = make_random_pencil(spec, rng);
    const auto t = inst % 2 == 0 ? Preconditioner::jacobi(rp.pencil.a)
                                 : Preconditioner::ssor(rp.pencil.a, 1.0);
    const Vector q = m_normalize(rp.pencil.m, rng.gaussian_vector(spec.n));

    SolverConfig cfg = practical_config(1e-11, 800);
    cfg.reference_lambda1 = rp.eigenvalues[0];

    const auto epic_rec = epic_solve(rp.pencil, t, q, q, cfg);
    const auto eic_rec = eic_solve(rp.pencil, q, q, cfg);
    const auto psd_rec = psd_solve(rp.pencil, t, q, cfg);
    const auto lopcg_rec = lopcg_solve(rp.pencil, t, q, cfg);
    for (const auto* rec : {&epic_rec, &eic_rec, &psd_rec, &lopcg_rec}) {
      CHECK(rec->status == SolverStatus::Converged);
      CHECK(std::abs(rec->eigenvalue - rp.eigenvalues[0]) <=
            1e-8 * rp.eigenvalues[0]);
      check_monotone(*rec);
    }
  }
}

TEST_CASE("restarts fire on bad anchors and are logged") {
  SplitMix64 rng(73);
  RandomPencilSpec spec;
  spec.n = 24;
  spec.lambda2 = 1.2;
  spec.lambda_n = 30.0;
  const RandomPencil rp = make_random_pencil(spec, rng);
  // Anchor nearly orthogonal to u1 so |x'Mq| degrades as x converges.
  Vector bad = rp.eigenvectors.col(5) + 0.05 * rp.eigenvectors.col(0);
  bad = m_normalize(rp.pencil.m, bad);
  SolverConfig cfg = practical_config(1e-10, 2000);
  cfg.reference_lambda1 = rp.eigenvalues[0];
  const auto rec =
      epic_solve(rp.pencil, Preconditioner::jacobi(rp.pencil.a), bad, bad, cfg);
  CHECK(rec.status == SolverStatus::Converged);
  CHECK(rec.restarts >= 1);
  bool any_row_flagged = false;
  for (const auto& row : rec.rows) any_row_flagged = any_row_flagged || row.restarted;
  CHECK(any_row_flagged);
  check_monotone(rec);
}

TEST_CASE("eic accelerates past psd on an ill-conditioned spectrum") {
  // kappa_I = (l_n - l_1)/(l_2 - l_1) = 1e4.
  const Index n = 40;
  Vector diag(n);
  diag[0] = 1.0;
  diag[1] = 1.0 + 1e-4;
  for (Index i = 2; i < n; ++i)
    diag[i] = diag[1] + (2.0 - diag[1]) * static_cast<double>(i - 1) /
                            static_cast<double>(n - 2);
  SpdPencil p(SparseSymMatrix::diagonal(diag), SparseSymMatrix::identity(n));

  SplitMix64 rng(79);
  Vector w = rng.gaussian_vector(n);
  w[0] = 0.0;
  Vector x0 = m_normalize(p.m, Vector::Unit(n, 0) + 1e-3 * w);

  const auto ref = oracle::dense_reference(p);
  const auto chart = oracle::build_chart(p, x0);
  const auto inputs =
      oracle::spectral_inputs(chart, oracle::SpectrumReference{ref.eigenvalues,
                                                               ref.eigenvectors});
  SolverConfig cfg;
  cfg.params = convexity_params(inputs, chart.rho_q);
  REQUIRE(cfg.params.mu > 0.0);
  cfg.rel_tol = 1e-8;
  cfg.max_iters = 400000;
  cfg.reference_lambda1 = 1.0;

  const auto eic_rec = eic_solve(p, x0, x0, cfg);
  const auto psd_rec = psd_solve(p, Preconditioner::identity(n), x0, cfg);
  CHECK(eic_rec.status == SolverStatus::Converged);
  CHECK(psd_rec.status == SolverStatus::Converged);
  CHECK(5 * eic_rec.iterations <= psd_rec.iterations);
}

TEST_CASE("epic and lopcg iteration counts agree within 2x on the diagonal study") {
  DiagonalProblem dp = make_diagonal_problem(512, 1e10, 100.0);
  SolverConfig cfg;
  cfg.params = diagonal_study_params(dp.omega, 512, 100.0);
  cfg.rel_tol = 1e-14;
  cfg.max_iters = 20000;
  cfg.reference_lambda1 = 1.0;
  const auto epic_rec = epic_solve(dp.pencil, dp.t, dp.q, dp.x0, cfg);
  const auto lopcg_rec = lopcg_solve(dp.pencil, dp.t, dp.x0, cfg);
  CHECK(epic_rec.status == SolverStatus::Converged);
  CHECK(lopcg_rec.status == SolverStatus::Converged);
  const double ratio = static_cast<double>(epic_rec.iterations) /
                       static_cast<double>(std::max(lopcg_rec.iterations, 1));
  CHECK(ratio <= 2.0);
  CHECK(ratio >= 0.5);
}

TEST_CASE("reference-free stopping halts near the smallest eigenvalue") {
  SplitMix64 rng(83);
  RandomPencilSpec spec;
  spec.n = 16;
  const RandomPencil rp = make_random_pencil(spec, rng);
  const Vector q = m_normalize(rp.pencil.m, rng.gaussian_vector(spec.n));
  SolverConfig cfg = practical_config(1e-12, 2000);  // no reference attached
  const auto rec = epic_solve(rp.pencil, Preconditioner::jacobi(rp.pencil.a), q, q, cfg);
  CHECK(rec.status == SolverStatus::Converged);
  CHECK(std::abs(rec.eigenvalue - rp.eigenvalues[0]) <= 1e-6 * rp.eigenvalues[0]);
}
