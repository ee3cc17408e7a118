#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "epic/auxgeom.hpp"
#include "epic/core.hpp"
#include "epic/lonag.hpp"
#include "epic/precond.hpp"
#include "epic/types.hpp"

namespace epic::oracle {

/// Full dense spectrum of a pencil, M-orthonormal eigenvectors as
/// columns, eigenvalues ascending.
struct SpectrumReference {
  Vector eigenvalues;
  Matrix eigenvectors;
  double gap() const { return eigenvalues[1] - eigenvalues[0]; }
  double spread() const { return eigenvalues[eigenvalues.size() - 1] - eigenvalues[0]; }
};

/// Explicit tangent-space data for an anchor q: an M-orthonormal
/// complement Q, the projected matrices B = Q'AQ and b = Q'Aq, the
/// ball characterization of the projected cap, and (optionally) the
/// projected co-preconditioner P = Q'TQ.
struct ExplicitChart {
  Vector q;
  double rho_q = 0.0;
  Matrix big_q;       // n x (n-1)
  Matrix b_mat;       // B
  Vector b_vec;       // b
  Vector mq;          // M q
  Matrix m_big_q;     // M Q
  SparseSymMatrix m;  // metric, kept for lifting back to the sphere
  bool ball_valid = false;
  Vector ball_center;        // z = (B - rho_q I)^-1 b; the cap projects to
  double ball_radius_sq = 0.0;  // the ball of center -z, radius sqrt(z'(B-rho_q I)z)
  bool has_p = false;
  Matrix p_mat;  // P = Q'TQ when a co-preconditioner is attached
};

/// Ground-truth spectrum by a dense solver (n <= 2048). Certifies
/// positive definiteness of both matrices as a side effect.
SpectrumReference dense_reference(const SpdPencil& p);

/// Builds the explicit chart at q (n <= 200): Q by M-Gram-Schmidt over
/// the standard basis with the most-q-aligned column dropped, fully
/// re-orthogonalized.
ExplicitChart build_chart(const SpdPencil& p, ConstVectorRef q,
                          const Preconditioner* t = nullptr);

/// Chart coordinates of a hemisphere point: Q'Mx / (q'Mx).
Vector psi(const ExplicitChart& chart, ConstVectorRef x);

/// Lift back to the M-sphere: (Qy + q) / |Qy + q|_M.
Vector psi_dagger(const ExplicitChart& chart, ConstVectorRef y);

/// The auxiliary function (y'By + 2y'b + rho_q) / (|y|^2 + 1) and its
/// closed-form derivatives.
double phi_value(const ExplicitChart& chart, ConstVectorRef y);
Vector phi_gradient(const ExplicitChart& chart, ConstVectorRef y);
Matrix phi_hessian(const ExplicitChart& chart, ConstVectorRef y);

/// The densely materialized operator of a preconditioner and its
/// inverse (columns of T^-1 e_i, symmetrized).
Matrix dense_inverse_operator(const Preconditioner& t);
Matrix dense_operator(const Preconditioner& t);

/// Extreme eigenvalues of (B, P) together with the pencil spectrum,
/// packaged as inputs for the closed-form convexity parameters.
SpectralInputs spectral_inputs(const ExplicitChart& chart, const SpectrumReference& ref);

/// Quality ratios of a co-preconditioner against the chart.
PrecondQuality precond_quality(const SpdPencil& p, const Preconditioner& t,
                               const ExplicitChart& chart, const SpectrumReference& ref);

/// The auxiliary function as a ConvexObjective over chart coordinates
/// (metric P attached when present).
ConvexObjective make_aux_objective(const ExplicitChart& chart);

/// Exact local minimizer of the auxiliary function over a coordinate
/// span, via the homogeneous Rayleigh-quotient reduction.
LocalMinimizer chart_local_minimizer(const ExplicitChart& chart);

struct CheckResult {
  std::string id;
  std::string name;
  bool pass = false;
  double margin = 0.0;  // smallest slack encountered; >= 0 means the
                        // inequality held on every sample
  std::string note;
};

struct Section2Report {
  std::vector<CheckResult> checks;
  int samples = 0;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

struct Section2Options {
  int samples = 500;
  std::uint64_t seed = 0x5ec2;
  /// Numerical slack for degenerate (zero-radius) instances.
  double tolerance = 1e-11;
};

/// Samples the projected cap through its ball characterization and
/// certifies each convexity inequality numerically:
///   a  cap membership matches phi <= rho_q
///   b  algebraic ball identity for the projected cap
///   c  pairwise angle bound on the sphere cap
///   d  coordinate norm bound
///   e  Hessian sandwich mu_P P <= H <= L_P P
///   f  symmetrized gradient outer product bound in B metric
///   g  A^-1 gradient norm bound
Section2Report verify_section2(const SpdPencil& p, const ExplicitChart& chart,
                               const ConvexityParams& params,
                               const Section2Options& opts = {});

}  // namespace epic::oracle
