#include <doctest.h>

#include <cmath>

#include "epic/lonag.hpp"
#include "epic/prng.hpp"
#include "epic/verification.hpp"

using namespace epic;

namespace {

ConvexObjective quadratic(const Matrix& h, const Vector& y_star) {
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

Matrix random_spd_matrix(Index n, double kappa, SplitMix64& rng) {
  Vector d(n);
  d[0] = 1.0;
  d[n - 1] = kappa;
  for (Index i = 1; i < n - 1; ++i)
    d[i] = std::pow(10.0, std::log10(kappa) * rng.next_uniform());
  Matrix g(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) g(i, j) = rng.next_gaussian();
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
  Matrix h = q * d.asDiagonal() * q.transpose();
  return 0.5 * (h + h.transpose());
}

}  // namespace

TEST_CASE("one LONAG step on the unit quadratic, by hand") {
  const auto obj = quadratic(Matrix::Identity(2, 2), Vector::Zero(2));
  Vector y0(2);
  y0 << 1, 0;
  LonagState st = lonag_init(obj, y0, 1.0, 1.0, 1.0);
  const LonagState next = lonag_step(obj, st);
  CHECK(next.ybar == y0);
  CHECK(next.s.norm() == 0.0);
  CHECK(next.y.norm() <= 1e-15);
}

TEST_CASE("one corrected semi-implicit step on the unit quadratic") {
  const auto obj = quadratic(Matrix::Identity(2, 2), Vector::Zero(2));
  Vector y0(2);
  y0 << 1, 0;
  LonagState st = lonag_init(obj, y0, 1.0, 1.0, 1.0);
  const LonagState next = gc_step(obj, st);
  CHECK(next.y.norm() <= 1e-15);
  CHECK(next.s.norm() <= 1e-15);
}

TEST_CASE("the minimizer is a fixed point") {
  SplitMix64 rng(5);
  const Matrix h = random_spd_matrix(6, 50.0, rng);
  const Vector y_star = rng.gaussian_vector(6);
  const auto obj = quadratic(h, y_star);
  LonagState st = lonag_init(obj, y_star, 1.0 / std::sqrt(50.0), 1.0, 50.0);
  const LonagState after_lonag = lonag_step(obj, st);
  CHECK((after_lonag.y - y_star).norm() <= 1e-12);
  CHECK((after_lonag.s - y_star).norm() <= 1e-12);
  const LonagState after_gc = gc_step(obj, st);
  CHECK((after_gc.y - y_star).norm() <= 1e-12);
}

TEST_CASE("Lyapunov decays by (1 - tau) per step for both schemes") {
  SplitMix64 rng(6);
  for (int inst = 0; inst < 8; ++inst) {
    const Index n = 5 + static_cast<Index>(rng.next_u64() % 10);
    const double kappa = std::pow(10.0, 1.0 + 4.0 * rng.next_uniform());
    const Matrix h = random_spd_matrix(n, kappa, rng);
    const Vector y_star = rng.gaussian_vector(n);
    const auto obj = quadratic(h, y_star);
    const double tau = 1.0 / std::sqrt(kappa);

    for (int scheme = 0; scheme < 2; ++scheme) {
      LonagState st = lonag_init(obj, rng.gaussian_vector(n), tau, 1.0, kappa);
      const double l0 = st.lyapunov;
      for (int k = 0; k < 220 && st.lyapunov > 1e-13 * l0; ++k) {
        const LonagState next = scheme == 0 ? lonag_step(obj, st) : gc_step(obj, st);
        CHECK(next.lyapunov <= (1.0 - tau) * st.lyapunov + 1e-12 * l0);
        if (scheme == 0) {
          CHECK(obj.value(next.y) <=
                obj.value(st.y) * (1.0 + 4e-16) + 4e-16 * std::abs(obj.value(st.y)));
        }
        st = next;
      }
      // Rate bound on the objective gap.
      CHECK(obj.value(st.y) - obj.value(y_star) <=
            std::pow(1.0 - tau, st.k) * l0 * (1.0 + 1e-10) + 1e-300);
    }
  }
}

TEST_CASE("subspace minimizer: exact on lines and full spans, drops duplicates") {
  SplitMix64 rng(9);
  const Matrix h = random_spd_matrix(4, 10.0, rng);
  const Vector y_star = rng.gaussian_vector(4);
  const auto obj = quadratic(h, y_star);

  // A line through the minimizer recovers it exactly.
  const Vector along = subspace_minimize_quadratic(obj, {2.0 * y_star});
  CHECK((along - y_star).norm() <= 1e-12 * y_star.norm());

  // A full-rank basis recovers the global minimizer.
  std::vector<Vector> full;
  for (Index i = 0; i < 4; ++i) full.push_back(Vector::Unit(4, i));
  const Vector global = subspace_minimize_quadratic(obj, full);
  CHECK((global - y_star).norm() <= 1e-11 * (1.0 + y_star.norm()));

  // Duplicated directions do not change the answer.
  const Vector v1 = rng.gaussian_vector(4);
  const Vector v2 = rng.gaussian_vector(4);
  const Vector a = subspace_minimize_quadratic(obj, {v1, v2});
  const Vector b = subspace_minimize_quadratic(obj, {v1, v1, v2, v2, v1});
  CHECK((a - b).norm() <= 1e-10 * (a.norm() + 1e-30));

  CHECK_THROWS_AS(subspace_minimize_quadratic(obj, {Vector::Zero(4)}),
                  DegenerateVectorError);
}

TEST_CASE("subspace minimizer beats a coarse grid on a 2-D instance") {
  Matrix h(2, 2);
  h << 3, 1, 1, 2;
  Vector y_star(2);
  y_star << 0.3, -0.7;
  const auto obj = quadratic(h, y_star);
  const Vector v1 = Vector::Unit(2, 0);
  const Vector v2 = (Vector(2) << 1, 1).finished();
  const Vector best = subspace_minimize_quadratic(obj, {v1, v2, v1});
  double grid_best = std::numeric_limits<double>::infinity();
  for (double s = -2.0; s <= 2.0; s += 0.01) {
    for (double t = -2.0; t <= 2.0; t += 0.01) {
      grid_best = std::min(grid_best, obj.value(s * v1 + t * v2));
    }
  }
  CHECK(obj.value(best) <= grid_best + 1e-12);
}

TEST_CASE("gradient fallback preserves sufficient decrease") {
  SplitMix64 rng(12);
  const Matrix h = random_spd_matrix(5, 100.0, rng);
  const auto obj = quadratic(h, Vector::Zero(5));
  LonagState st = lonag_init(obj, rng.gaussian_vector(5), 0.1, 1.0, 100.0);
  const LocalMinimizer broken = [](const ConvexObjective&,
                                   const std::vector<Vector>&) -> Vector {
    throw ConstructionError("deliberately broken");
  };
  const LonagState next = lonag_step(obj, st, broken);
  const double at_bar = obj.value(next.ybar);
  const double grad_sq = obj.gradient(next.ybar).squaredNorm();
  CHECK(obj.value(next.y) <= at_bar - 0.5 / 100.0 * grad_sq + 1e-12 * at_bar);
}
