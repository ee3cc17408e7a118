#include "epic/solvers.hpp"

#include <chrono>
#include <cmath>

namespace epic {

namespace {

constexpr double kDivisionGuard = 1e-8;

class IterationTimer {
 public:
  explicit IterationTimer(bool enabled) : enabled_(enabled) { reset(); }
  void reset() {
    if (enabled_) start_ = std::chrono::steady_clock::now();
  }
  double elapsed_ms() const {
    if (!enabled_) return 0.0;
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point start_;
};

class StopRule {
 public:
  StopRule(double rel_tol, std::optional<double> reference)
      : rel_tol_(rel_tol), reference_(reference) {}

  bool converged(double rho) {
    if (rel_tol_ <= 0.0) return false;
    if (reference_) return rho - *reference_ <= rel_tol_ * *reference_;
    if (has_prev_) {
      if ((prev_ - rho) / rho <= rel_tol_)
        ++consecutive_;
      else
        consecutive_ = 0;
    }
    prev_ = rho;
    has_prev_ = true;
    return consecutive_ >= 3;
  }

 private:
  double rel_tol_;
  std::optional<double> reference_;
  double prev_ = 0.0;
  bool has_prev_ = false;
  int consecutive_ = 0;
};

struct RecordBuilder {
  const SpdPencil& p;
  const SolverConfig& cfg;
  ConvergenceRecord rec;
  IterationTimer timer;

  RecordBuilder(const SpdPencil& pencil, const SolverConfig& config)
      : p(pencil), cfg(config), timer(config.measure_time) {}

  double log(int k, ConstVectorRef x, bool restarted) {
    IterationRow row;
    row.k = k;
    row.rayleigh = rayleigh_quotient(p, x);
    if (cfg.reference_lambda1)
      row.rel_error = (row.rayleigh - *cfg.reference_lambda1) / *cfg.reference_lambda1;
    if (cfg.record_alignment && cfg.reference_eigenvector)
      row.alignment = 1.0 - std::abs(m_inner(p.m, x, *cfg.reference_eigenvector));
    row.restarted = restarted;
    row.wall_ms = timer.elapsed_ms();
    timer.reset();
    rec.rows.push_back(row);
    if (cfg.record_iterates) rec.iterates.push_back(x);
    return row.rayleigh;
  }

  ConvergenceRecord finish(SolverStatus status, ConstVectorRef x, int iterations) {
    rec.status = status;
    rec.eigenvalue = rec.rows.back().rayleigh;
    rec.eigenvector = x;
    rec.iterations = iterations;
    return std::move(rec);
  }
};

// First index with a non-negligible component decides the sign.
void fix_sign_first_nonzero(Vector& v) {
  const double scale = v.cwiseAbs().maxCoeff();
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12 * scale) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

}  // namespace

std::pair<double, Vector> rayleigh_ritz(const SpdPencil& p,
                                        const std::vector<Vector>& basis,
                                        const Vector* anchor) {
  std::vector<Vector> vs;
  std::vector<Vector> mvs;  // cached M v for the inner products
  vs.reserve(basis.size());
  for (const Vector& raw : basis) {
    const double raw_norm = m_norm(p.m, raw);
    if (!(raw_norm > 0.0)) continue;
    Vector v = raw;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < vs.size(); ++j) v -= mvs[j].dot(v) * vs[j];
    }
    const double norm = m_norm(p.m, v);
    if (norm <= 1e-12 * raw_norm) continue;
    v /= norm;
    mvs.push_back(spmv(p.m, v));
    vs.push_back(std::move(v));
  }
  if (vs.empty()) throw DegenerateVectorError("Ritz basis is empty");

  const Index k = static_cast<Index>(vs.size());
  Matrix projected(k, k);
  std::vector<Vector> avs(vs.size());
  for (Index j = 0; j < k; ++j) avs[j] = spmv(p.a, vs[j]);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j) projected(i, j) = vs[i].dot(avs[j]);
  projected = 0.5 * (projected + projected.transpose()).eval();

  auto [theta, coeffs] = dense_sym_eig(projected);
  Vector lifted = Vector::Zero(p.size());
  for (Index j = 0; j < k; ++j) lifted += coeffs(j, 0) * vs[j];
  lifted = m_normalize(p.m, lifted);
  if (anchor != nullptr) {
    if (m_inner(p.m, *anchor, lifted) < 0.0) lifted = -lifted;
  } else {
    fix_sign_first_nonzero(lifted);
  }
  return {theta[0], std::move(lifted)};
}

ConvergenceRecord epic_solve(const SpdPencil& p, const Preconditioner& t,
                             ConstVectorRef q0, ConstVectorRef x0,
                             const SolverConfig& cfg) {
  require(q0.size() == p.size() && x0.size() == p.size() && t.size() == p.size(),
          "epic_solve dimension mismatch");
  const double mu = cfg.params.mu;
  const double tau = cfg.params.tau;
  if (!(mu > 0.0) || !(tau > 0.0 && tau <= 1.0))
    throw ConstructionError("epic_solve needs mu > 0 and tau in (0, 1]");

  AuxFrame frame = build_frame(p, q0, t);
  Vector x = m_normalize(p.m, x0);
  if (frame.mq.dot(x) < 0.0) x = -x;
  Vector z = x;
  double alpha = frame.mq.dot(x);
  double gamma = alpha;

  RecordBuilder builder(p, cfg);
  StopRule stop(cfg.rel_tol, cfg.reference_lambda1);

  double rho = builder.log(0, x, false);
  if (stop.converged(rho)) return builder.finish(SolverStatus::Converged, x, 0);

  auto restart = [&]() {
    frame = build_frame(p, x, t);
    z = x;
    alpha = frame.mq.dot(x);
    gamma = alpha;
    ++builder.rec.restarts;
  };

  for (int k = 0; k < cfg.max_iters; ++k) {
    bool restarted = false;
    const bool threshold_hit =
        cfg.restart_enabled && std::abs(alpha) < cfg.restart_threshold;
    if (threshold_hit || std::abs(alpha) < kDivisionGuard ||
        std::abs(gamma) < kDivisionGuard) {
      restart();
      restarted = true;
    }

    bool committed = false;
    while (!committed) {
      try {
        const Vector xbar = m_normalize(p.m, x / alpha + (tau / gamma) * z);
        const double beta = frame.mq.dot(xbar);
        if (std::abs(beta) < kDivisionGuard)
          throw DegenerateVectorError("extrapolated point fell on the equator");
        const double rho_bar = rayleigh_quotient(p, xbar);
        const Vector residual =
            2.0 * (spmv(p.a, xbar) - rho_bar * spmv(p.m, xbar));
        const Vector rtilde = projected_precondition(frame, t, residual);
        const Vector z_next = m_normalize(
            p.m, ((1.0 - tau) / gamma) * z + (tau / beta) * xbar -
                     (tau * beta / mu) * rtilde);
        Vector x_next =
            rayleigh_ritz(p, {frame.q, x, xbar, rtilde}, &frame.q).second;
        x = std::move(x_next);
        z = z_next;
        alpha = frame.mq.dot(x);
        gamma = frame.mq.dot(z);
        committed = true;
      } catch (const DegenerateVectorError&) {
        if (restarted) return builder.finish(SolverStatus::Degenerate, x, k);
        restart();
        restarted = true;
      }
    }

    rho = builder.log(k + 1, x, restarted);
    if (stop.converged(rho))
      return builder.finish(SolverStatus::Converged, x, k + 1);
  }
  return builder.finish(SolverStatus::MaxIterations, x, cfg.max_iters);
}

ConvergenceRecord eic_solve(const SpdPencil& p, ConstVectorRef q0, ConstVectorRef x0,
                            const SolverConfig& cfg) {
  return epic_solve(p, Preconditioner::exact(p.m), q0, x0, cfg);
}

ConvergenceRecord psd_solve(const SpdPencil& p, const Preconditioner& t,
                            ConstVectorRef x0, const SolverConfig& cfg) {
  require(x0.size() == p.size() && t.size() == p.size(), "psd_solve dimension mismatch");
  Vector x = m_normalize(p.m, x0);
  RecordBuilder builder(p, cfg);
  StopRule stop(cfg.rel_tol, cfg.reference_lambda1);

  double rho = builder.log(0, x, false);
  if (stop.converged(rho)) return builder.finish(SolverStatus::Converged, x, 0);

  for (int k = 0; k < cfg.max_iters; ++k) {
    const Vector direction = t.apply_inverse(rq_gradient(p, x));
    x = rayleigh_ritz(p, {x, direction}).second;
    rho = builder.log(k + 1, x, false);
    if (stop.converged(rho))
      return builder.finish(SolverStatus::Converged, x, k + 1);
  }
  return builder.finish(SolverStatus::MaxIterations, x, cfg.max_iters);
}

ConvergenceRecord lopcg_solve(const SpdPencil& p, const Preconditioner& t,
                              ConstVectorRef x0, const SolverConfig& cfg) {
  require(x0.size() == p.size() && t.size() == p.size(),
          "lopcg_solve dimension mismatch");
  Vector x = m_normalize(p.m, x0);
  std::optional<Vector> conjugate;

  RecordBuilder builder(p, cfg);
  StopRule stop(cfg.rel_tol, cfg.reference_lambda1);

  double rho = builder.log(0, x, false);
  if (stop.converged(rho)) return builder.finish(SolverStatus::Converged, x, 0);

  for (int k = 0; k < cfg.max_iters; ++k) {
    rho = rayleigh_quotient(p, x);
    const Vector residual = spmv(p.a, x) - rho * spmv(p.m, x);
    Vector w = t.apply_inverse(residual);
    const double w_norm = m_norm(p.m, w);
    bool have_w = w_norm > 1e-300;
    if (have_w) w /= w_norm;

    // Ritz on the raw basis keeps the coefficients of x, w, p explicit
    // so the conjugate direction can be updated without re-deriving it
    // from x_{k+1} - x_k.
    std::vector<Vector> basis;
    basis.push_back(x);
    if (have_w) basis.push_back(w);
    if (conjugate) basis.push_back(*conjugate);

    bool solved = false;
    Vector coeffs;
    while (!solved) {
      const Index m = static_cast<Index>(basis.size());
      Matrix a_hat(m, m), m_hat(m, m);
      std::vector<Vector> avs(basis.size()), mvs(basis.size());
      for (std::size_t j = 0; j < basis.size(); ++j) {
        avs[j] = spmv(p.a, basis[j]);
        mvs[j] = spmv(p.m, basis[j]);
      }
      for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < m; ++j) {
          a_hat(i, j) = basis[static_cast<std::size_t>(i)].dot(avs[static_cast<std::size_t>(j)]);
          m_hat(i, j) = basis[static_cast<std::size_t>(i)].dot(mvs[static_cast<std::size_t>(j)]);
        }
      }
      a_hat = 0.5 * (a_hat + a_hat.transpose()).eval();
      m_hat = 0.5 * (m_hat + m_hat.transpose()).eval();
      try {
        coeffs = dense_sym_geig(a_hat, m_hat).second.col(0);
        solved = true;
      } catch (const IndefiniteMetricError&) {
        // Basis collapse: drop the most recent direction and retry.
        if (basis.size() > 1) {
          basis.pop_back();
        } else {
          return builder.finish(stop.converged(rho) ? SolverStatus::Converged
                                                    : SolverStatus::Degenerate,
                                x, k);
        }
      }
    }

    Vector x_next = Vector::Zero(p.size());
    for (std::size_t j = 0; j < basis.size(); ++j)
      x_next += coeffs[static_cast<Index>(j)] * basis[j];
    Vector p_next = x_next - coeffs[0] * x;
    if (m_inner(p.m, x, x_next) < 0.0) {
      x_next = -x_next;
      p_next = -p_next;
    }
    x = m_normalize(p.m, x_next);
    const double p_norm = m_norm(p.m, p_next);
    if (p_norm > 1e-300)
      conjugate = p_next / p_norm;
    else
      conjugate.reset();

    rho = builder.log(k + 1, x, false);
    if (stop.converged(rho))
      return builder.finish(SolverStatus::Converged, x, k + 1);
  }
  return builder.finish(SolverStatus::MaxIterations, x, cfg.max_iters);
}

}  // namespace epic
