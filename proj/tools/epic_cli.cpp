#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "epic/experiment.hpp"
#include "epic/types.hpp"
#include "epic/verification.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDegenerate = 1;
constexpr int kExitBadInput = 2;

epic::ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw epic::ConstructionError(path + ": cannot open config file");
  nlohmann::json j;
  in >> j;
  return epic::ExperimentConfig::from_json(j);
}

void print_runs(const epic::ExperimentResult& result) {
  for (const auto& run : result.runs) {
    std::cout << run.solver << ": eigenvalue=" << run.final_eigenvalue
              << " iterations=" << run.iterations << " restarts=" << run.restarts
              << " -> " << run.csv_path << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Accelerated smallest-eigenpair solvers for SPD pencils"};
  app.require_subcommand(1);

  // --- solve ------------------------------------------------------------
  auto* solve = app.add_subcommand("solve", "run one solver on one problem");
  std::string cfg_path, problem, matrix_a, matrix_m, solver, precond, anchor, out_dir;
  double span = 0, iota_nu = 0, rel_tol = 0, mu = 0, big_l = 0, lambda1 = 0,
         restart_threshold = 0, ssor_relaxation = 0;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
  int max_iters = 0;
  bool timing = false, oracle_ref = false, no_restart = false, alignment = false;
  solve->add_option("--config", cfg_path, "flat JSON config file");
  solve->add_option("--problem", problem, "synthetic-diagonal | matrix-market");
  solve->add_option("--matrix-a", matrix_a, "MatrixMarket file for A");
  solve->add_option("--matrix-m", matrix_m, "MatrixMarket file for M");
  solve->add_option("--n", n, "dimension of the synthetic problem");
  solve->add_option("--span", span, "spectrum span omega^{n-1}");
  solve->add_option("--iota-nu", iota_nu, "target ratio of (A, T)");
  solve->add_option("--solver", solver, "epic | eic | psd | lopcg | all");
  solve->add_option("--precond", precond,
                    "auto | identity | jacobi | ssor | ic0 | exact | synthetic-dst");
  solve->add_option("--ssor-relaxation", ssor_relaxation, "SSOR relaxation in (0,2)");
  solve->add_option("--mu", mu, "practical mu");
  solve->add_option("--l", big_l, "practical L");
  solve->add_option("--lambda1", lambda1, "reference smallest eigenvalue");
  solve->add_flag("--oracle-reference", oracle_ref,
                  "compute the reference eigenpair densely (n <= 2048)");
  solve->add_option("--rel-tol", rel_tol, "relative eigenvalue tolerance");
  solve->add_option("--max-iters", max_iters, "iteration cap");
  solve->add_option("--restart-threshold", restart_threshold, "|x'Mq| restart level");
  solve->add_flag("--no-restart", no_restart, "disable re-anchoring");
  solve->add_option("--anchor", anchor, "auto | near-eigenvector | gaussian");
  solve->add_option("--seed", seed, "PRNG seed (required for random anchors)");
  solve->add_flag("--timing", timing, "measure wall time per iteration");
  solve->add_flag("--alignment", alignment, "log 1 - |x'Mu1| (needs oracle reference)");
  solve->add_option("--out", out_dir, "artifact directory");

  // --- sweep-table1 -------------------------------------------------------
  auto* sweep = app.add_subcommand(
      "sweep-table1", "iteration-count scaling study on the diagonal problem");
  epic::SweepConfig sweep_cfg;
  std::vector<double> iota_sqrt;
  sweep->add_option("--n", sweep_cfg.n, "dimension (default 512)");
  sweep->add_option("--span", sweep_cfg.span, "spectrum span (default 1e10)");
  sweep->add_option("--iota-sqrt", iota_sqrt, "list of iota_nu^{1/2} values");
  sweep->add_option("--tol", sweep_cfg.rel_tol, "relative tolerance (default 1e-14)");
  sweep->add_option("--max-iters", sweep_cfg.max_iters, "iteration cap per point");
  sweep->add_flag("--timing", sweep_cfg.timing, "measure wall time per iteration");
  sweep->add_option("--out", sweep_cfg.out_dir, "artifact directory");

  // --- verify -------------------------------------------------------------
  auto* verify = app.add_subcommand(
      "verify", "numerical certification of the convexity inequalities");
  epic::VerificationConfig ver_cfg;
  verify->add_option("--instances", ver_cfg.instances, "random instances (default 50)");
  verify->add_option("--samples", ver_cfg.samples, "cap samples per instance");
  verify->add_option("--max-n", ver_cfg.max_n, "largest instance dimension (<= 60)");
  verify->add_option("--seed", ver_cfg.seed, "PRNG seed");
  verify->add_option("--lyapunov-instances", ver_cfg.lyapunov_instances,
                     "random quadratics for the decay check");
  bool no_probe = false;
  verify->add_flag("--no-probe", no_probe, "skip the mu-inflation sentinel");
  std::string report_path = "verify_report.json";
  verify->add_option("--out", report_path, "report path (default verify_report.json)");

  // --- compare ------------------------------------------------------------
  auto* compare = app.add_subcommand(
      "compare", "run epic, eic, psd and lopcg on the same problem");
  std::string cmp_cfg_path;
  compare->add_option("--config", cmp_cfg_path, "flat JSON config file");
  std::string cmp_a, cmp_m, cmp_precond = "auto", cmp_out = ".";
  std::uint64_t cmp_seed = 0;
  double cmp_tol = 1e-8;
  int cmp_iters = 2000;
  bool cmp_oracle = false, cmp_timing = false;
  std::int64_t cmp_n = 0;
  compare->add_option("--matrix-a", cmp_a, "MatrixMarket file for A");
  compare->add_option("--matrix-m", cmp_m, "MatrixMarket file for M");
  compare->add_option("--n", cmp_n, "synthetic problem dimension");
  compare->add_option("--precond", cmp_precond, "preconditioner kind");
  compare->add_option("--seed", cmp_seed, "PRNG seed");
  compare->add_option("--rel-tol", cmp_tol, "relative tolerance");
  compare->add_option("--max-iters", cmp_iters, "iteration cap");
  compare->add_flag("--oracle-reference", cmp_oracle, "dense reference eigenpair");
  compare->add_flag("--timing", cmp_timing, "measure wall time");
  compare->add_option("--out", cmp_out, "artifact directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      epic::ExperimentConfig cfg = load_config(cfg_path);
      if (solve->count("--problem")) cfg.problem = problem;
      if (solve->count("--matrix-a")) cfg.matrix_a = matrix_a;
      if (solve->count("--matrix-m")) cfg.matrix_m = matrix_m;
      if (solve->count("--n")) cfg.n = n;
      if (solve->count("--span")) cfg.span = span;
      if (solve->count("--iota-nu")) cfg.iota_nu = iota_nu;
      if (solve->count("--solver")) cfg.solver = solver;
      if (solve->count("--precond")) cfg.precond = precond;
      if (solve->count("--ssor-relaxation")) cfg.ssor_relaxation = ssor_relaxation;
      if (solve->count("--mu")) cfg.mu = mu;
      if (solve->count("--l")) cfg.big_l = big_l;
      if (solve->count("--lambda1")) cfg.lambda1_ref = lambda1;
      if (solve->count("--oracle-reference")) cfg.oracle_reference = true;
      if (solve->count("--rel-tol")) cfg.rel_tol = rel_tol;
      if (solve->count("--max-iters")) cfg.max_iters = max_iters;
      if (solve->count("--restart-threshold")) cfg.restart_threshold = restart_threshold;
      if (solve->count("--no-restart")) cfg.restart_enabled = false;
      if (solve->count("--anchor")) cfg.anchor = anchor;
      if (solve->count("--seed")) {
        cfg.seed = seed;
        cfg.seed_set = true;
      }
      if (solve->count("--timing")) cfg.timing = true;
      if (solve->count("--alignment")) cfg.record_alignment = true;
      if (solve->count("--out")) cfg.out_dir = out_dir;
      if (!(cfg.rel_tol > 0.0))
        throw epic::ConstructionError("rel_tol must be positive");
      const auto result = epic::run_experiment(cfg);
      print_runs(result);
      return result.any_degenerate() ? kExitDegenerate : kExitOk;
    }

    if (sweep->parsed()) {
      if (!iota_sqrt.empty()) sweep_cfg.iota_sqrt = iota_sqrt;
      const auto result = epic::sweep_table1(sweep_cfg);
      std::cout << "iota_sqrt iterations\n";
      for (std::size_t i = 0; i < result.iota_sqrt.size(); ++i)
        std::cout << result.iota_sqrt[i] << " " << result.iterations[i] << "\n";
      std::cout << "fit: m = " << result.fitted_c
                << " * iota^{1/2}, relative residual = "
                << result.fit_relative_residual << "\n";
      return kExitOk;
    }

    if (verify->parsed()) {
      ver_cfg.run_probe = !no_probe;
      ver_cfg.out_path = report_path;
      const auto summary = epic::run_verification(ver_cfg);
      std::cout << "section2: " << (summary.section2_pass ? "pass" : "FAIL") << "\n"
                << "probe: "
                << (summary.probe_requested
                        ? (summary.probe_detected ? "detected" : "NOT DETECTED")
                        : "skipped")
                << "\n"
                << "lyapunov decay: " << (summary.lyapunov_pass ? "pass" : "FAIL")
                << "\n"
                << "acceleration gap: "
                << (summary.acceleration_pass ? "pass" : "FAIL") << "\n"
                << "report: " << report_path << "\n";
      return summary.all_pass() ? kExitOk : kExitDegenerate;
    }

    if (compare->parsed()) {
      epic::ExperimentConfig cfg = load_config(cmp_cfg_path);
      cfg.solver = "all";
      if (compare->count("--matrix-a")) {
        cfg.problem = "matrix-market";
        cfg.matrix_a = cmp_a;
      }
      if (compare->count("--matrix-m")) cfg.matrix_m = cmp_m;
      if (compare->count("--n")) cfg.n = cmp_n;
      if (compare->count("--precond")) cfg.precond = cmp_precond;
      if (compare->count("--seed")) {
        cfg.seed = cmp_seed;
        cfg.seed_set = true;
      }
      if (compare->count("--rel-tol")) cfg.rel_tol = cmp_tol;
      if (compare->count("--max-iters")) cfg.max_iters = cmp_iters;
      if (compare->count("--oracle-reference")) cfg.oracle_reference = true;
      if (compare->count("--timing")) cfg.timing = true;
      if (compare->count("--out")) cfg.out_dir = cmp_out;
      const auto result = epic::run_experiment(cfg);
      print_runs(result);

      nlohmann::json combined = nlohmann::json::array();
      for (const auto& run : result.runs) {
        combined.push_back({{"solver", run.solver},
                            {"final_eigenvalue", run.final_eigenvalue},
                            {"iterations", run.iterations},
                            {"restarts", run.restarts}});
      }
      std::ofstream out(std::filesystem::path(cfg.out_dir) / "compare.json");
      out << combined.dump(2) << "\n";
      return result.any_degenerate() ? kExitDegenerate : kExitOk;
    }
  } catch (const epic::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  }
  return kExitBadInput;
}
