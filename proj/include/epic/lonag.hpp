#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>

#include "epic/types.hpp"

namespace epic {

/// A smooth strongly convex objective with an optional SPD metric P
/// (identity when absent) and an optional known minimizer, used by the
/// test suites to evaluate the Lyapunov function.
struct ConvexObjective {
  Index dim = 0;
  std::function<double(ConstVectorRef)> value;
  std::function<Vector(ConstVectorRef)> gradient;
  std::optional<Matrix> metric;      // P
  std::optional<Vector> minimizer;   // y*

  /// P^-1 g (identity metric when none is attached).
  Vector apply_inverse_metric(ConstVectorRef g) const;
  /// |v|_P^2.
  double metric_norm_squared(ConstVectorRef v) const;
};

/// Produces the minimizer of the objective over the span of a basis.
/// The default realization is exact for quadratics; the eigensolver
/// attaches a Rayleigh-quotient-aware one.
using LocalMinimizer =
    std::function<Vector(const ConvexObjective&, const std::vector<Vector>&)>;

struct LonagState {
  Vector y;     // primary iterate
  Vector s;     // momentum companion
  Vector ybar;  // extrapolated point of the step that produced y
  int k = 0;
  double tau = 0.0;
  double mu = 0.0;
  double big_l = 0.0;
  /// phi(y) - phi(y*) + (mu/2) |s - y*|_P^2, NaN when y* is unknown.
  double lyapunov = std::numeric_limits<double>::quiet_NaN();
};

/// Initial state with s0 = y0.
LonagState lonag_init(const ConvexObjective& obj, ConstVectorRef y0, double tau,
                      double mu, double big_l);

/// One step of the locally optimal scheme:
///   ybar = (y + tau s) / (1 + tau)
///   s'   = (1 - tau) s + tau ybar - (tau/mu) P^-1 grad(ybar)
///   y'   = argmin over span{y, ybar, P^-1 grad(ybar)}
/// Falls back to the gradient-step candidate ybar - (1/L) P^-1 grad
/// when the minimizer fails or loses monotonicity.
LonagState lonag_step(const ConvexObjective& obj, const LonagState& st,
                      const LocalMinimizer& minimize);
LonagState lonag_step(const ConvexObjective& obj, const LonagState& st);

/// One step of the corrected semi-implicit scheme: identical to
/// lonag_step except y' = ybar - (1/L) P^-1 grad(ybar).
LonagState gc_step(const ConvexObjective& obj, const LonagState& st);

/// Exact span minimizer for quadratic objectives. Recovers the local
/// Hessian action by gradient differencing (exact for quadratics),
/// Gram-Schmidts the basis with a 1e-12 relative drop tolerance, and
/// solves the projected normal equations.
Vector subspace_minimize_quadratic(const ConvexObjective& obj,
                                   const std::vector<Vector>& basis);

}  // namespace epic
