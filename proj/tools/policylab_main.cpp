#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "policylab/harness/runner.hpp"

using policylab::Config;

namespace {

Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
  Config config = Config::parse_file(path);
  for (const auto& kv : overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    }
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"policylab: Stackelberg policy-design experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
  std::vector<long> seeds;
  bool resume = false;
  bool count_all = false;
  std::vector<std::string> run_dirs;
  std::optional<long> window;
  std::optional<double> halflife;

  auto* pretrain = app.add_subcommand("pretrain", "train and save a follower snapshot");
  pretrain->add_option("--config", config_path, "experiment config file")->required();
  pretrain->add_option("--set", overrides, "override config keys (key=value)");
  pretrain->add_option("--out", out, "snapshot output path")->required();

  auto* run = app.add_subcommand("run", "run one experiment across seeds");
  run->add_option("--config", config_path, "experiment config file")->required();
  run->add_option("--set", overrides, "override config keys (key=value)");
  run->add_option("--seeds", seeds, "seeds (default: config 'seeds' or 0)");
  run->add_option("--out", out, "output directory")->required();
  run->add_flag("--resume", resume, "resume interrupted runs from serialized state");

  auto* report = app.add_subcommand("report", "convergence summary over run directories");
  report->add_option("dirs", run_dirs, "run directories")->required();
  report->add_option("--out", out, "summary CSV path")->required();
  long window_arg = -1;
  double halflife_arg = -1.0;
  report->add_option("--window", window_arg, "override the convergence window");
  report->add_option("--halflife", halflife_arg, "override the smoothing half-life");

  auto* grid = app.add_subcommand("grid", "Cartesian hyperparameter grid search");
  grid->add_option("--config", config_path, "config with grid.* keys")->required();
  grid->add_option("--set", overrides, "override config keys (key=value)");
  grid->add_option("--out", out, "output directory")->required();

  auto* exp = app.add_subcommand("export", "long-format payoff curves for plotting");
  exp->add_option("dirs", run_dirs, "run directories")->required();
  exp->add_option("--out", out, "CSV output path")->required();
  exp->add_flag("--count-all-timesteps", count_all,
                "count follower convergence timesteps as well");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*pretrain) return policylab::cmd_pretrain(load_config(config_path, overrides), out);
    if (*run) return policylab::cmd_run(load_config(config_path, overrides), seeds, out, resume);
    if (*report) {
      if (window_arg > 0) window = window_arg;
      if (halflife_arg > 0) halflife = halflife_arg;
      return policylab::cmd_report(run_dirs, out, window, halflife);
    }
    if (*grid) return policylab::cmd_grid(load_config(config_path, overrides), out);
    if (*exp) return policylab::cmd_export(run_dirs, out, count_all);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
