#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "policylab/convergence.hpp"
#include "policylab/harness/config.hpp"
#include "policylab/loop.hpp"

namespace policylab {

// Everything one seeded run needs; no state is shared between runs.
struct RunComponents {
  std::unique_ptr<EnvModel> env;
  std::shared_ptr<Oracle> oracle;
  std::unique_ptr<Principal> principal;
  LoopConfig loop;
  bool window_in_principal_steps = false;  // LLM-style convergence windows
  long convergence_timesteps_per_step = 0;
};

std::unique_ptr<EnvModel> make_env(const Config& config);
TrainerConfig make_trainer_config(const Config& config, EnvKind kind);
OracleConfig make_oracle_config(const Config& config, EnvKind kind);
int default_validation_episodes(EnvKind env, const std::string& principal_kind);
long default_window(EnvKind env, bool principal_steps);

RunComponents build_run(const Config& config, std::uint64_t seed, const std::string& out_dir);

struct SummaryRow {
  std::string method;
  std::string env;
  int n_seeds = 0;
  int n_dnc = 0;
  double payoff_mean = 0.0;
  double payoff_stderr = 0.0;
  double timestep_mean = 0.0;
  double timestep_stderr = 0.0;
  bool dnc = false;
};

struct RunAnnotation {
  long seed = 0;
  bool converged = false;
  double convergence_timestep = 0.0;
  double payoff = 0.0;  // at convergence, or at budget end for DNC runs
  bool trivial = false;
};

// Payoff repeated per validation timestep (the reporting unit).
std::vector<double> expanded_payoff_series(const RunRecord& record);
std::vector<double> per_step_payoff_series(const RunRecord& record);

// Subcommand entry points; return a process exit code.
int cmd_pretrain(const Config& config, const std::string& out_path);
int cmd_run(const Config& config, std::vector<long> seeds, const std::string& out_dir,
            bool resume);
int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_csv,
               std::optional<long> window_override, std::optional<double> halflife_override);
int cmd_grid(const Config& config, const std::string& out_dir);
int cmd_export(const std::vector<std::string>& run_dirs, const std::string& out_csv,
               bool count_all_timesteps);

// Report-side helpers, exposed for tests.
SummaryRow summarize_run_dir(const std::string& run_dir, std::optional<long> window_override,
                             std::optional<double> halflife_override,
                             std::vector<RunAnnotation>* annotations = nullptr);

void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace policylab
