#include "epic/lonag.hpp"

#include <cmath>

namespace epic {

Vector ConvexObjective::apply_inverse_metric(ConstVectorRef g) const {
  if (!metric) return g;
  return metric->llt().solve(g);
}

double ConvexObjective::metric_norm_squared(ConstVectorRef v) const {
  if (!metric) return v.squaredNorm();
  return v.dot(*metric * v);
}

namespace {

double lyapunov_value(const ConvexObjective& obj, ConstVectorRef y, ConstVectorRef s,
                      double mu) {
  if (!obj.minimizer) return std::numeric_limits<double>::quiet_NaN();
  const Vector& star = *obj.minimizer;
  return obj.value(y) - obj.value(star) +
         0.5 * mu * obj.metric_norm_squared(s - star);
}

LonagState advance(const ConvexObjective& obj, const LonagState& st,
                   const LocalMinimizer* minimize) {
  if (!(st.tau > 0.0 && st.tau <= std::sqrt(st.mu / st.big_l) * (1.0 + 1e-12)))
    throw ConstructionError("step size must satisfy 0 < tau <= sqrt(mu/L)");
  LonagState next = st;
  next.ybar = (st.y + st.tau * st.s) / (1.0 + st.tau);
  const Vector grad = obj.gradient(next.ybar);
  const Vector pgrad = obj.apply_inverse_metric(grad);
  next.s = (1.0 - st.tau) * st.s + st.tau * next.ybar - (st.tau / st.mu) * pgrad;

  const Vector gradient_candidate = next.ybar - pgrad / st.big_l;
  if (minimize) {
    bool ok = true;
    Vector y_next;
    try {
      y_next = (*minimize)(obj, {st.y, next.ybar, pgrad});
    } catch (const Error&) {
      ok = false;
    }
    // The span contains y, so a successful local solve cannot increase
    // the objective beyond roundoff; fall back to the plain gradient
    // step otherwise.
    const double before = obj.value(st.y);
    const double slack = 4e-16 * (std::abs(before) + 1.0);
    if (ok && obj.value(y_next) <= before + slack) {
      next.y = std::move(y_next);
    } else {
      next.y = gradient_candidate;
    }
  } else {
    next.y = gradient_candidate;
  }
  next.k = st.k + 1;
  next.lyapunov = lyapunov_value(obj, next.y, next.s, st.mu);
  return next;
}

}  // namespace

LonagState lonag_init(const ConvexObjective& obj, ConstVectorRef y0, double tau,
                      double mu, double big_l) {
  LonagState st;
  st.y = y0;
  st.s = y0;
  st.ybar = y0;
  st.tau = tau;
  st.mu = mu;
  st.big_l = big_l;
  st.lyapunov = lyapunov_value(obj, st.y, st.s, mu);
  return st;
}

LonagState lonag_step(const ConvexObjective& obj, const LonagState& st,
                      const LocalMinimizer& minimize) {
  return advance(obj, st, &minimize);
}

LonagState lonag_step(const ConvexObjective& obj, const LonagState& st) {
  const LocalMinimizer fallback = subspace_minimize_quadratic;
  return advance(obj, st, &fallback);
}

LonagState gc_step(const ConvexObjective& obj, const LonagState& st) {
  return advance(obj, st, nullptr);
}

Vector subspace_minimize_quadratic(const ConvexObjective& obj,
                                   const std::vector<Vector>& basis) {
  if (basis.empty()) throw ConstructionError("subspace minimizer needs a basis");
  const Index dim = basis.front().size();

  // Orthonormalize, dropping near-dependent directions.
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
  if (kept.empty())
    throw DegenerateVectorError("all basis directions are degenerate");

  const Index m = static_cast<Index>(kept.size());
  const Vector g0 = obj.gradient(Vector::Zero(dim));
  Matrix hv(dim, m);
  for (Index j = 0; j < m; ++j) hv.col(j) = obj.gradient(kept[j]) - g0;

  Matrix k(m, m);
  Vector rhs(m);
  for (Index i = 0; i < m; ++i) {
    rhs[i] = -kept[i].dot(g0);
    for (Index j = 0; j < m; ++j) k(i, j) = kept[i].dot(hv.col(j));
  }
  k = 0.5 * (k + k.transpose()).eval();
  const Vector coeffs = k.llt().solve(rhs);

  Vector out = Vector::Zero(dim);
  for (Index j = 0; j < m; ++j) out += coeffs[j] * kept[j];
  return out;
}

}  // namespace epic
