#pragma once

// Command implementations behind the gimt-cdm executable. Each cmd_* reads
// its inputs from an ExperimentConfig, writes files under config.out and
// returns a process exit code.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gimt_cdm/eval.hpp"
#include "gimt_cdm/sim.hpp"

namespace gimt_cdm::app {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitParse = 2,
  kExitDimension = 3,
  kExitConvergence = 4,
  kExitDegenerate = 5,
  kExitNumerical = 6,
};

inline constexpr const char* kVersion = "1.0.0";

struct ExperimentConfig {
  std::filesystem::path responses;
  std::filesystem::path qmatrix;
  std::filesystem::path beta;  // item parameter CSV (gimt, simulate)
  std::filesystem::path grid;  // grid CSV (roc)
  std::filesystem::path out = "out";

  // priors
  double mu_slope = 1.2;
  double mu_intercept = 0.6;
  double sigma2 = 4500.0;
  double guess = 0.354;  // skill mastery probability sigmoid(-eta_k)

  // experiment plan
  std::vector<double> levels{0.0, 0.01, 0.05, 0.10, 0.15, 0.20};
  int replications = 5;
  int datasets = 50;
  int n = 536;
  std::uint64_t seed = 20240521;
  bool share_datasets = false;
  double level = 0.0;    // perturb-q
  int replication = 0;   // perturb-q

  // fitting and testing
  double grad_tol = 1e-6;
  double step_tol = 1e-10;
  int max_iters = 500;
  double fd_scale = 1e-4;
  std::string score = "wald";

  int workers = 0;  // 0: GIMT_CDM_THREADS, else hardware concurrency

  ModelSpec model_spec(QMatrix q) const;
  FitConfig fit_config() const;
  PerturbationPlan plan() const;
  int resolved_workers() const;
};

int cmd_fit(const ExperimentConfig& cfg, std::ostream& log);
int cmd_gimt(const ExperimentConfig& cfg, std::ostream& log);
int cmd_simulate(const ExperimentConfig& cfg, std::ostream& log);
int cmd_perturb_q(const ExperimentConfig& cfg, std::ostream& log);
int cmd_roc(const ExperimentConfig& cfg, std::ostream& log);
int cmd_pipeline(const ExperimentConfig& cfg, std::ostream& log);

// Parses argv (subcommand plus flags, optionally --config FILE) and runs it.
int run_cli(int argc, const char* const* argv);

int exit_code_for(const std::exception& e);

// Grid CSV: one row per cell,
//   level,replication,dataset,s_hat,wald,p_value,converged,min_eig,label,c_hat,status
// with empty statistic fields for failed cells.
std::string grid_to_csv(const std::vector<CellResult>& cells);
std::vector<CellResult> grid_from_csv(const std::string& text, const std::string& source);

std::string auroc_summary_to_csv(const std::vector<AurocSummary>& rows);
std::string roc_level_to_csv(const std::vector<ReplicationRoc>& curves, double level);
std::string level_file_tag(double level);

std::string sha256_hex(const std::string& content);

} // namespace gimt_cdm::app
