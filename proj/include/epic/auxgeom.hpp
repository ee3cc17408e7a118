#pragma once

#include <limits>

#include "epic/core.hpp"
#include "epic/precond.hpp"
#include "epic/types.hpp"

namespace epic {

/// Anchor frame attached to an approximation q of the smallest
/// eigenvector. Caches the quantities needed by the oblique projector
/// Pi = I - q~ q'M / (q'M q~) with q~ = T^-1 M q.
struct AuxFrame {
  Vector q;          // M-unit anchor
  double rho_q;      // Rayleigh quotient of q
  Vector mq;         // M q
  Vector qtilde;     // T^-1 M q for the active co-preconditioner
  double qmq_tilde;  // q' M q~  (> 0 for an SPD co-preconditioner)
};

/// Convexity parameters of the auxiliary function in the P-inner
/// product, computed in closed form from the spectral inputs. The
/// spectral fields are NaN when built through practical_params.
struct ConvexityParams {
  double mu = 0.0;     // strong convexity constant, > 0 when valid
  double big_l = 0.0;  // smoothness constant, >= mu
  double kappa = 0.0;  // big_l / mu
  double tau = 0.0;    // momentum step, kappa^{-1/2} by default
  double chi_p = std::numeric_limits<double>::quiet_NaN();
  double chi_g = std::numeric_limits<double>::quiet_NaN();
  double xi_min = std::numeric_limits<double>::quiet_NaN();  // lambda_min(B, P)
  double xi_max = std::numeric_limits<double>::quiet_NaN();  // lambda_max(B, P)
  double lambda1 = std::numeric_limits<double>::quiet_NaN();
  double lambda2 = std::numeric_limits<double>::quiet_NaN();
  double lambda_n = std::numeric_limits<double>::quiet_NaN();
  double delta_m = std::numeric_limits<double>::quiet_NaN();
  double rho_q = std::numeric_limits<double>::quiet_NaN();
  /// True when rho_q < lambda1 + (lambda2 - lambda1) / (2 + chi_p),
  /// i.e. the anchor is close enough for mu > 0 to be guaranteed.
  /// Reported rather than enforced: solvers run with invalid anchors
  /// and rely on restarts.
  bool valid = false;
};

/// Spectral inputs for convexity_params. Supplied externally: by the
/// dense oracle at test scale, by user configuration otherwise.
struct SpectralInputs {
  double lambda1;
  double lambda2;
  double lambda_n;
  double xi_min;
  double xi_max;
};

/// Quality ratios of a co-preconditioner: extreme eigenvalues of
/// (A, T) and (B, P) and the effective convergence ratio eta_xi.
struct PrecondQuality {
  double nu_min;
  double nu_max;
  double iota_nu;  // nu_max / nu_min
  double iota_xi;  // xi_max / xi_min, <= iota_nu
  double eta_xi;   // (1 - l1/ln) / (iota_xi (1 - l1/l2))
};

/// Normalizes q_raw in M and caches the projector data for t.
/// Throws DegenerateVectorError for a near-zero q_raw and
/// PreconditionerError when q'M q~ fails to be positive.
AuxFrame build_frame(const SpdPencil& p, ConstVectorRef q_raw, const Preconditioner& t);

/// Complemented oblique projector Pi v. Applies the projector twice
/// by default (recomplementation) to suppress cancellation.
Vector oblique_project(const AuxFrame& frame, ConstVectorRef v, bool recomplement = true);

/// Pi T^-1 r: the projected preconditioned residual. Equals
/// Q P^-1 Q' r for P = Q'TQ without ever forming Q.
Vector projected_precondition(const AuxFrame& frame, const Preconditioner& t,
                              ConstVectorRef r, bool recomplement = true);

/// Closed-form mu, L, kappa, tau, chi terms from the spectral inputs.
/// mu <= 0 (anchor too far out) is reported through valid=false.
ConvexityParams convexity_params(const SpectralInputs& spectral, double rho_q);

/// Bypasses spectral estimation: kappa = l/mu, tau = sqrt(mu/l).
/// Used when lambda2 and lambda_n are unknown in real-matrix runs.
ConvexityParams practical_params(double mu_user, double l_user);

/// Membership in the spherical cap around the anchor:
/// |x|_M = 1, q'Mx > 0, Rq(x) <= rho_q (with small tolerances).
bool in_spherical_cap(const SpdPencil& p, const AuxFrame& frame, ConstVectorRef x);

}  // namespace epic
