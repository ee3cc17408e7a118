#include "epic/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "epic/oracle.hpp"
#include "epic/matrix_market.hpp"
#include "epic/prng.hpp"

namespace epic {

DiagonalProblem make_diagonal_problem(Index n, double span, double iota_nu,
                                      AnchorMode anchor, std::uint64_t seed) {
  if (n < 3) throw ConstructionError("diagonal problem needs n >= 3");
  if (!(span > 1.0) || !std::isfinite(span))
    throw ConstructionError("diagonal problem needs a finite span > 1");
  if (!(iota_nu >= 1.0))
    throw ConstructionError("diagonal problem needs iota_nu >= 1");

  const double omega = std::pow(span, 1.0 / static_cast<double>(n - 1));
  Vector diag(n);
  for (Index i = 0; i < n; ++i) diag[i] = std::pow(omega, static_cast<double>(i));
  if (!diag.allFinite())
    throw ConstructionError("omega powers overflow (span too large for n)");

  Vector q(n);
  if (anchor == AnchorMode::NearEigenvector) {
    const double base = omega - 1.0;
    for (Index i = 0; i < n; ++i)
      q[i] = std::pow(base, 2.0 * static_cast<double>(i));
    if (!q.allFinite())
      throw ConstructionError("anchor powers overflow (span too large for n)");
  } else {
    SplitMix64 rng(seed);
    q = rng.gaussian_vector(n);
  }

  SpdPencil pencil(SparseSymMatrix::diagonal(diag), SparseSymMatrix::identity(n));
  Preconditioner t =
      Preconditioner::synthetic_dst(DstSpec{n, iota_nu, omega}, diag);
  q = m_normalize(pencil.m, q);
  DiagonalProblem problem{std::move(pencil), std::move(t), q, q, omega, 0.0};
  problem.rho_q = rayleigh_quotient(problem.pencil, problem.q);
  return problem;
}

ConvexityParams diagonal_study_params(double omega, Index n, double iota_nu) {
  const double lambda_n = std::pow(omega, static_cast<double>(n - 1));
  const double mu = 2.0 * (1.0 - 1.0 / omega);
  const double big_l = 2.0 * iota_nu * (1.0 - 1.0 / lambda_n);
  ConvexityParams params = practical_params(mu, big_l);
  params.lambda1 = 1.0;
  params.lambda2 = omega;
  params.lambda_n = lambda_n;
  return params;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  auto get = [&](const char* key, auto& slot) {
    if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
  };
  get("problem", cfg.problem);
  get("matrix_a", cfg.matrix_a);
  get("matrix_m", cfg.matrix_m);
  if (j.contains("n")) cfg.n = j.at("n").get<Index>();
  get("span", cfg.span);
  get("iota_nu", cfg.iota_nu);
  get("solver", cfg.solver);
  get("precond", cfg.precond);
  get("ssor_relaxation", cfg.ssor_relaxation);
  if (j.contains("mu")) cfg.mu = j.at("mu").get<double>();
  if (j.contains("l")) cfg.big_l = j.at("l").get<double>();
  if (j.contains("lambda1_ref")) cfg.lambda1_ref = j.at("lambda1_ref").get<double>();
  get("oracle_reference", cfg.oracle_reference);
  get("rel_tol", cfg.rel_tol);
  get("max_iters", cfg.max_iters);
  get("restart_threshold", cfg.restart_threshold);
  get("restart_enabled", cfg.restart_enabled);
  get("anchor", cfg.anchor);
  if (j.contains("seed")) {
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.seed_set = true;
  }
  get("timing", cfg.timing);
  get("record_alignment", cfg.record_alignment);
  get("out_dir", cfg.out_dir);
  return cfg;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["problem"] = problem;
  if (!matrix_a.empty()) j["matrix_a"] = matrix_a;
  if (!matrix_m.empty()) j["matrix_m"] = matrix_m;
  j["n"] = n;
  j["span"] = span;
  j["iota_nu"] = iota_nu;
  j["solver"] = solver;
  j["precond"] = precond;
  j["ssor_relaxation"] = ssor_relaxation;
  if (mu) j["mu"] = *mu;
  if (big_l) j["l"] = *big_l;
  if (lambda1_ref) j["lambda1_ref"] = *lambda1_ref;
  j["oracle_reference"] = oracle_reference;
  j["rel_tol"] = rel_tol;
  j["max_iters"] = max_iters;
  j["restart_threshold"] = restart_threshold;
  j["restart_enabled"] = restart_enabled;
  j["anchor"] = anchor;
  if (seed_set) j["seed"] = seed;
  j["timing"] = timing;
  j["record_alignment"] = record_alignment;
  j["out_dir"] = out_dir;
  return j;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string status_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::Converged:
      return "converged";
    case SolverStatus::MaxIterations:
      return "max-iters";
    case SolverStatus::Degenerate:
      return "degenerate";
  }
  return "unknown";
}

struct ProblemSetup {
  SpdPencil pencil;
  Preconditioner t;
  Vector q;
  Vector x0;
  std::optional<double> lambda1_ref;
  std::optional<Vector> u1_ref;
  ConvexityParams params;
};

Preconditioner build_preconditioner(const std::string& kind, const SparseSymMatrix& a,
                                    double ssor_relaxation) {
  if (kind == "identity") return Preconditioner::identity(a.size());
  if (kind == "jacobi") return Preconditioner::jacobi(a);
  if (kind == "ssor") return Preconditioner::ssor(a, ssor_relaxation);
  if (kind == "ic0") return Preconditioner::ic0(a);
  if (kind == "exact") return Preconditioner::exact(a);
  throw ConstructionError("unknown preconditioner kind: " + kind);
}

ProblemSetup assemble_problem(const ExperimentConfig& cfg) {
  if (cfg.problem == "synthetic-diagonal" && !cfg.matrix_a.empty())
    throw ConstructionError("exactly one problem source: drop matrix_a for synthetic runs");

  if (cfg.problem == "synthetic-diagonal") {
    AnchorMode mode = AnchorMode::NearEigenvector;
    if (cfg.anchor == "gaussian") mode = AnchorMode::Gaussian;
    if (mode == AnchorMode::Gaussian && !cfg.seed_set)
      throw ConstructionError("gaussian anchor requires a seed");
    DiagonalProblem dp =
        make_diagonal_problem(cfg.n, cfg.span, cfg.iota_nu, mode, cfg.seed);
    ConvexityParams params =
        cfg.mu && cfg.big_l ? practical_params(*cfg.mu, *cfg.big_l)
                            : diagonal_study_params(dp.omega, cfg.n, cfg.iota_nu);
    Preconditioner t = cfg.precond == "auto" || cfg.precond == "synthetic-dst"
                           ? dp.t
                           : build_preconditioner(cfg.precond, dp.pencil.a,
                                                  cfg.ssor_relaxation);
    ProblemSetup setup{std::move(dp.pencil), std::move(t), dp.q, dp.x0,
                       cfg.lambda1_ref, std::nullopt, params};
    if (!setup.lambda1_ref) setup.lambda1_ref = 1.0;  // lambda1 = omega^0
    return setup;
  }

  if (cfg.problem == "matrix-market") {
    if (cfg.matrix_a.empty())
      throw ConstructionError("matrix-market problem requires matrix_a");
    SparseSymMatrix a = read_matrix_market(cfg.matrix_a);
    SparseSymMatrix m = cfg.matrix_m.empty() ? SparseSymMatrix::identity(a.size())
                                             : read_matrix_market(cfg.matrix_m);
    SpdPencil pencil(std::move(a), std::move(m));
    if (!cfg.seed_set)
      throw ConstructionError("matrix-market runs draw a random anchor: seed required");
    SplitMix64 rng(cfg.seed);
    Vector q = m_normalize(pencil.m, rng.gaussian_vector(pencil.size()));
    const std::string kind = cfg.precond == "auto" ? "jacobi" : cfg.precond;
    if (kind == "synthetic-dst")
      throw ConstructionError("synthetic-dst applies to the diagonal problem only");
    Preconditioner t = build_preconditioner(kind, pencil.a, cfg.ssor_relaxation);
    ConvexityParams params = cfg.mu && cfg.big_l
                                 ? practical_params(*cfg.mu, *cfg.big_l)
                                 : practical_params(6.0, 6.0);
    ProblemSetup setup{std::move(pencil), std::move(t), q, q,
                       cfg.lambda1_ref, std::nullopt, params};
    return setup;
  }
  throw ConstructionError("unknown problem kind: " + cfg.problem);
}

}  // namespace

void write_convergence_csv(const std::string& path, const ConvergenceRecord& rec,
                           bool with_alignment) {
  std::ofstream out(path);
  if (!out) throw ConstructionError(path + ": cannot open file for writing");
  out << "iter,rayleigh_quotient,rel_error,restart,wall_ms";
  if (with_alignment) out << ",alignment";
  out << "\n";
  for (const IterationRow& row : rec.rows) {
    out << row.k << "," << format_double(row.rayleigh) << ",";
    if (!std::isnan(row.rel_error)) out << format_double(row.rel_error);
    out << "," << (row.restarted ? 1 : 0) << "," << format_double(row.wall_ms);
    if (with_alignment) {
      out << ",";
      if (!std::isnan(row.alignment)) out << format_double(row.alignment);
    }
    out << "\n";
  }
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ProblemSetup setup = assemble_problem(cfg);

  if (cfg.oracle_reference && setup.pencil.size() <= 2048) {
    const auto ref = oracle::dense_reference(setup.pencil);
    setup.lambda1_ref = ref.eigenvalues[0];
    setup.u1_ref = ref.eigenvectors.col(0);
  }

  SolverConfig scfg;
  scfg.params = setup.params;
  scfg.max_iters = cfg.max_iters;
  scfg.rel_tol = cfg.rel_tol;
  scfg.restart_threshold = cfg.restart_threshold;
  scfg.restart_enabled = cfg.restart_enabled;
  scfg.reference_lambda1 = setup.lambda1_ref;
  scfg.measure_time = cfg.timing;
  if (cfg.record_alignment && setup.u1_ref) {
    scfg.record_alignment = true;
    scfg.reference_eigenvector = setup.u1_ref;
  }

  std::vector<std::string> solvers;
  if (cfg.solver == "all") {
    solvers = {"epic", "eic", "psd", "lopcg"};
  } else {
    solvers = {cfg.solver};
  }

  std::filesystem::create_directories(cfg.out_dir);
  ExperimentResult result;
  for (const std::string& name : solvers) {
    ConvergenceRecord rec;
    if (name == "epic") {
      rec = epic_solve(setup.pencil, setup.t, setup.q, setup.x0, scfg);
    } else if (name == "eic") {
      rec = eic_solve(setup.pencil, setup.q, setup.x0, scfg);
    } else if (name == "psd") {
      rec = psd_solve(setup.pencil, setup.t, setup.x0, scfg);
    } else if (name == "lopcg") {
      rec = lopcg_solve(setup.pencil, setup.t, setup.x0, scfg);
    } else {
      throw ConstructionError("unknown solver: " + name);
    }

    const std::string csv_path =
        (std::filesystem::path(cfg.out_dir) / (name + ".csv")).string();
    write_convergence_csv(csv_path, rec, scfg.record_alignment);

    nlohmann::json summary;
    summary["solver"] = name;
    summary["n"] = setup.pencil.size();
    summary["iterations"] = rec.iterations;
    summary["restarts"] = rec.restarts;
    summary["final_eigenvalue"] = rec.eigenvalue;
    summary["tolerance"] = cfg.rel_tol;
    summary["seed"] = cfg.seed;
    summary["config"] = cfg.to_json();
    summary["status"] = status_string(rec.status);
    std::ofstream sout(std::filesystem::path(cfg.out_dir) / (name + "_summary.json"));
    sout << summary.dump(2) << "\n";

    result.runs.push_back(RunSummary{name, rec.status, rec.eigenvalue,
                                     rec.iterations, rec.restarts, csv_path});
  }
  return result;
}

SweepResult sweep_table1(const SweepConfig& cfg) {
  SweepResult result;
  std::filesystem::create_directories(cfg.out_dir);
  nlohmann::json points = nlohmann::json::array();
  for (double s : cfg.iota_sqrt) {
    const double iota = s * s;
    DiagonalProblem dp = make_diagonal_problem(cfg.n, cfg.span, iota);
    SolverConfig scfg;
    scfg.params = diagonal_study_params(dp.omega, cfg.n, iota);
    scfg.max_iters = cfg.max_iters;
    scfg.rel_tol = cfg.rel_tol;
    scfg.reference_lambda1 = 1.0;
    scfg.measure_time = cfg.timing;
    ConvergenceRecord rec = epic_solve(dp.pencil, dp.t, dp.q, dp.x0, scfg);

    char name[64];
    std::snprintf(name, sizeof(name), "epic_iota_sqrt_%g.csv", s);
    write_convergence_csv((std::filesystem::path(cfg.out_dir) / name).string(), rec,
                          false);

    result.iota_sqrt.push_back(s);
    result.iterations.push_back(rec.iterations);
    nlohmann::json point;
    point["iota_sqrt"] = s;
    point["iterations"] = rec.iterations;
    point["final_eigenvalue"] = rec.eigenvalue;
    point["status"] = status_string(rec.status);
    points.push_back(point);
  }

  // Least squares fit m = C * iota^{1/2}.
  double st_m = 0.0, st_s = 0.0;
  for (std::size_t i = 0; i < result.iota_sqrt.size(); ++i) {
    st_m += result.iota_sqrt[i] * static_cast<double>(result.iterations[i]);
    st_s += result.iota_sqrt[i] * result.iota_sqrt[i];
  }
  result.fitted_c = st_s > 0.0 ? st_m / st_s : 0.0;
  double res_sq = 0.0, norm_sq = 0.0;
  for (std::size_t i = 0; i < result.iota_sqrt.size(); ++i) {
    const double wanted = static_cast<double>(result.iterations[i]);
    const double got = result.fitted_c * result.iota_sqrt[i];
    res_sq += (wanted - got) * (wanted - got);
    norm_sq += wanted * wanted;
  }
  result.fit_relative_residual = norm_sq > 0.0 ? std::sqrt(res_sq / norm_sq) : 0.0;

  nlohmann::json summary;
  summary["n"] = cfg.n;
  summary["span"] = cfg.span;
  summary["rel_tol"] = cfg.rel_tol;
  summary["points"] = points;
  summary["fitted_c"] = result.fitted_c;
  summary["fit_relative_residual"] = result.fit_relative_residual;
  std::ofstream out(std::filesystem::path(cfg.out_dir) / "sweep_summary.json");
  out << summary.dump(2) << "\n";
  return result;
}

}  // namespace epic
