#include "epic/auxgeom.hpp"

#include <cmath>

namespace epic {

AuxFrame build_frame(const SpdPencil& p, ConstVectorRef q_raw, const Preconditioner& t) {
  require(q_raw.size() == p.size() && t.size() == p.size(), "build_frame dimension mismatch");
  AuxFrame frame;
  frame.q = m_normalize(p.m, q_raw);
  frame.rho_q = rayleigh_quotient(p, frame.q);
  frame.mq = spmv(p.m, frame.q);
  frame.qtilde = t.apply_inverse(frame.mq);
  frame.qmq_tilde = frame.mq.dot(frame.qtilde);
  if (!(frame.qmq_tilde > 0.0))
    throw PreconditionerError("q'M q~ is not positive; co-preconditioner is not SPD");
  return frame;
}

Vector oblique_project(const AuxFrame& frame, ConstVectorRef v, bool recomplement) {
  require(v.size() == frame.q.size(), "oblique_project dimension mismatch");
  Vector out = v - frame.qtilde * (frame.mq.dot(v) / frame.qmq_tilde);
  if (recomplement) {
    out -= frame.qtilde * (frame.mq.dot(out) / frame.qmq_tilde);
  }
  return out;
}

Vector projected_precondition(const AuxFrame& frame, const Preconditioner& t,
                              ConstVectorRef r, bool recomplement) {
  return oblique_project(frame, t.apply_inverse(r), recomplement);
}

ConvexityParams convexity_params(const SpectralInputs& s, double rho_q) {
  if (!(s.lambda1 > 0.0 && s.lambda1 < s.lambda2 && s.lambda2 <= s.lambda_n))
    throw ConstructionError("convexity_params requires 0 < lambda1 < lambda2 <= lambda_n");
  if (!(s.xi_min > 0.0 && s.xi_min <= s.xi_max))
    throw ConstructionError("convexity_params requires 0 < xi_min <= xi_max");
  if (!(rho_q >= s.lambda1))
    throw ConstructionError("convexity_params requires rho_q >= lambda1");

  ConvexityParams out;
  out.lambda1 = s.lambda1;
  out.lambda2 = s.lambda2;
  out.lambda_n = s.lambda_n;
  out.xi_min = s.xi_min;
  out.xi_max = s.xi_max;
  out.rho_q = rho_q;

  const double gap = s.lambda2 - s.lambda1;
  const double excess = rho_q - s.lambda1;
  const double half_ratio = std::sqrt((s.lambda1 + s.lambda2) / (2.0 * gap));
  out.chi_g = 8.0 * excess / s.lambda1 * half_ratio;
  out.chi_p = 8.0 * s.lambda2 / s.lambda1 * (s.xi_max / s.xi_min) * half_ratio;
  out.delta_m = 2.0 * excess / gap;

  out.mu = 2.0 * s.xi_min * (1.0 - 4.0 * excess / gap) *
           (1.0 - s.lambda1 / s.lambda2 - (2.0 + out.chi_p) * excess / s.lambda2);
  out.big_l = 2.0 * s.xi_max *
              (1.0 - s.lambda1 / s.lambda_n +
               out.chi_p / s.lambda2 * (s.xi_min / s.xi_max) * excess);
  out.valid = rho_q < s.lambda1 + gap / (2.0 + out.chi_p) && out.mu > 0.0;
  if (out.mu > 0.0) {
    out.kappa = out.big_l / out.mu;
    out.tau = 1.0 / std::sqrt(out.kappa);
  }
  return out;
}

ConvexityParams practical_params(double mu_user, double l_user) {
  if (!(mu_user > 0.0 && mu_user <= l_user))
    throw ConstructionError("practical_params requires 0 < mu <= L");
  ConvexityParams out;
  out.mu = mu_user;
  out.big_l = l_user;
  out.kappa = l_user / mu_user;
  out.tau = std::sqrt(mu_user / l_user);
  out.valid = true;
  return out;
}

bool in_spherical_cap(const SpdPencil& p, const AuxFrame& frame, ConstVectorRef x) {
  require(x.size() == p.size(), "in_spherical_cap dimension mismatch");
  if (std::abs(m_norm(p.m, x) - 1.0) > 1e-10) return false;
  if (!(frame.mq.dot(x) > 0.0)) return false;
  return rayleigh_quotient(p, x) <= frame.rho_q * (1.0 + 1e-12);
}

}  // namespace epic
