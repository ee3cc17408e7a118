#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "epic/core.hpp"
#include "epic/precond.hpp"
#include "epic/solvers.hpp"

namespace epic {

/// The diagonal test problem: A = diag(omega^0 .. omega^{n-1}) with
/// omega^{n-1} = span, M = I, the sine-transform co-preconditioner,
/// and the near-eigenvector anchor q_i = eta (omega-1)^{2(i-1)}.
struct DiagonalProblem {
  SpdPencil pencil;
  Preconditioner t;
  Vector q;
  Vector x0;
  double omega = 0.0;
  double rho_q = 0.0;
};

enum class AnchorMode { NearEigenvector, Gaussian };

DiagonalProblem make_diagonal_problem(Index n, double span, double iota_nu,
                                      AnchorMode anchor = AnchorMode::NearEigenvector,
                                      std::uint64_t seed = 0);

/// Scheme parameters for the diagonal scaling study: first-order
/// convexity constants with the (A, T) spectral bounds standing in for
/// the projected ones, so kappa = iota_nu and tau = iota_nu^{-1/2}.
ConvexityParams diagonal_study_params(double omega, Index n, double iota_nu);

/// Flat key-value experiment configuration (JSON on disk).
struct ExperimentConfig {
  std::string problem = "synthetic-diagonal";  // or "matrix-market"
  std::string matrix_a;                        // MM path (matrix-market)
  std::string matrix_m;                        // optional MM path
  Index n = 512;
  double span = 1e10;
  double iota_nu = 100.0;
  std::string solver = "epic";  // epic | eic | psd | lopcg | all
  std::string precond = "auto";  // auto | identity | jacobi | ssor | ic0 | exact | synthetic-dst
  double ssor_relaxation = 1.0;
  std::optional<double> mu;  // practical override (both or neither)
  std::optional<double> big_l;
  std::optional<double> lambda1_ref;
  bool oracle_reference = false;  // dense reference for rel_error/alignment
  double rel_tol = 1e-8;
  int max_iters = 2000;
  double restart_threshold = 0.5;
  bool restart_enabled = true;
  std::string anchor = "auto";  // auto | near-eigenvector | gaussian
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool timing = false;
  bool record_alignment = false;
  std::string out_dir = ".";

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct RunSummary {
  std::string solver;
  SolverStatus status = SolverStatus::MaxIterations;
  double final_eigenvalue = 0.0;
  int iterations = 0;
  int restarts = 0;
  std::string csv_path;
};

struct ExperimentResult {
  std::vector<RunSummary> runs;
  bool any_degenerate() const {
    for (const auto& r : runs)
      if (r.status == SolverStatus::Degenerate) return true;
    return false;
  }
};

/// Runs the configured solvers, writing one CSV per solver plus a
/// summary JSON per solver into cfg.out_dir. Deterministic given the
/// seed (wall_ms is zero unless timing is enabled).
ExperimentResult run_experiment(const ExperimentConfig& cfg);

void write_convergence_csv(const std::string& path, const ConvergenceRecord& rec,
                           bool with_alignment);

struct SweepConfig {
  Index n = 512;
  double span = 1e10;
  std::vector<double> iota_sqrt = {10.0, 20.0, 30.0, 40.0, 50.0};
  double rel_tol = 1e-14;
  int max_iters = 50000;
  bool timing = false;
  std::string out_dir = ".";
};

struct SweepResult {
  std::vector<double> iota_sqrt;
  std::vector<int> iterations;
  double fitted_c = 0.0;           // least squares m ~ C * iota^{1/2}
  double fit_relative_residual = 0.0;
};

/// Iteration-count scaling study over the synthetic diagonal problem.
SweepResult sweep_table1(const SweepConfig& cfg);

}  // namespace epic
