#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "epic/auxgeom.hpp"
#include "epic/core.hpp"
#include "epic/precond.hpp"
#include "epic/types.hpp"

namespace epic {

enum class SolverStatus { Converged, MaxIterations, Degenerate };

struct IterationRow {
  int k = 0;
  double rayleigh = 0.0;
  /// (rho_k - lambda1) / lambda1 against the reference; NaN without one.
  double rel_error = std::numeric_limits<double>::quiet_NaN();
  bool restarted = false;
  double wall_ms = 0.0;
  /// 1 - |x_k' M u1| when alignment logging is on; NaN otherwise.
  double alignment = std::numeric_limits<double>::quiet_NaN();
};

struct SolverConfig {
  /// Scheme parameters; only mu and tau drive the iteration.
  ConvexityParams params;
  int max_iters = 1000;
  /// Relative eigenvalue tolerance. With a reference eigenvalue the
  /// stop rule is (rho - l1) <= rel_tol * l1; without one it is
  /// (rho_prev - rho) / rho <= rel_tol on 3 consecutive iterations.
  /// Zero disables tolerance stopping (run to max_iters).
  double rel_tol = 1e-8;
  double restart_threshold = 0.5;
  bool restart_enabled = true;
  std::optional<double> reference_lambda1;
  std::optional<Vector> reference_eigenvector;
  bool record_alignment = false;
  /// Keep every iterate vector in the record (differential tests).
  bool record_iterates = false;
  /// Measure wall time per iteration. Off by default so artifacts are
  /// byte-identical across reruns.
  bool measure_time = false;
};

struct ConvergenceRecord {
  std::vector<IterationRow> rows;
  SolverStatus status = SolverStatus::MaxIterations;
  double eigenvalue = 0.0;
  Vector eigenvector;
  /// Iterations until the stopping rule fired (m in the scaling study).
  int iterations = 0;
  int restarts = 0;
  std::vector<Vector> iterates;  // populated when record_iterates
};

/// Smallest Ritz pair of the pencil over the span of `basis`:
/// M-Gram-Schmidt with re-orthogonalization (two passes) and relative
/// drop tolerance 1e-12, projected problem by the dense Jacobi solver,
/// lifted and M-normalized. The sign makes anchor'M v positive when an
/// anchor is given, else the first nonzero component positive.
std::pair<double, Vector> rayleigh_ritz(const SpdPencil& p,
                                        const std::vector<Vector>& basis,
                                        const Vector* anchor = nullptr);

/// Accelerated eigensolver with co-preconditioner T. Iterates the
/// momentum recursion on the M-sphere anchored at q0 and takes each
/// iterate as the Ritz minimizer over span{q, x_k, xbar_k, rtilde_k}.
/// Restarts re-anchor at the current iterate when |x'Mq| falls under
/// the threshold (and on division guards at 1e-8).
ConvergenceRecord epic_solve(const SpdPencil& p, const Preconditioner& t,
                             ConstVectorRef q0, ConstVectorRef x0,
                             const SolverConfig& cfg);

/// The identity-co-preconditioner mode: T := M, so the chart metric
/// P = Q'MQ is the identity. M^-1 is applied through a sparse
/// Cholesky factorization built at setup.
ConvergenceRecord eic_solve(const SpdPencil& p, ConstVectorRef q0, ConstVectorRef x0,
                            const SolverConfig& cfg);

/// Preconditioned steepest descent: Ritz over span{x_k, T^-1 r_k}.
ConvergenceRecord psd_solve(const SpdPencil& p, const Preconditioner& t,
                            ConstVectorRef x0, const SolverConfig& cfg);

/// Locally optimal preconditioned conjugate gradient (single vector):
/// Ritz over span{x_k, w_k, p_k} with the conjugate direction held in
/// the stabilized implicit form updated from the Ritz coefficients.
ConvergenceRecord lopcg_solve(const SpdPencil& p, const Preconditioner& t,
                              ConstVectorRef x0, const SolverConfig& cfg);

}  // namespace epic
