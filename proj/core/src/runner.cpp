#include "policylab/harness/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "policylab/envs/cer.hpp"
#include "policylab/envs/cleanup.hpp"
#include "policylab/envs/harvest.hpp"
#include "policylab/llm/principal.hpp"
#include "policylab/numfmt.hpp"

namespace policylab {

namespace fs = std::filesystem;
using nlohmann::json;

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
  }
  fs::rename(tmp, path);
}

std::unique_ptr<EnvModel> make_env(const Config& config) {
  const EnvKind kind = env_kind_from_string(config.require_str("env.kind"));
  switch (kind) {
    case EnvKind::Cer: {
      CerConfig c;
      c.n = static_cast<int>(config.get_int("env.n", c.n));
      c.m = static_cast<int>(config.get_int("env.m", c.m));
      c.L = static_cast<int>(config.get_int("env.levers", c.L));
      c.episode_len = static_cast<int>(config.get_int("env.episode_len", c.episode_len));
      c.incentive_bounds.lo = config.get_real("env.incentive_lo", c.incentive_bounds.lo);
      c.incentive_bounds.hi = config.get_real("env.incentive_hi", c.incentive_bounds.hi);
      return std::make_unique<CerModel>(c);
    }
    case EnvKind::Harvest: {
      HarvestConfig c;
      if (config.has("env.map")) c.map = GridMap::load_file(config.require_str("env.map"));
      c.n_agents = static_cast<int>(config.get_int("env.n_agents", c.n_agents));
      c.episode_len = static_cast<int>(config.get_int("env.episode_len", c.episode_len));
      c.regrowth_coeff = config.get_real("env.regrowth_coeff", c.regrowth_coeff);
      c.neighborhood_radius =
          static_cast<int>(config.get_int("env.radius", c.neighborhood_radius));
      c.tax_thresholds[1] = config.get_real("env.tau2", c.tax_thresholds[1]);
      c.tax_thresholds[2] = config.get_real("env.tau3", c.tax_thresholds[2]);
      c.window = static_cast<int>(config.get_int("env.window", c.window));
      c.alpha = config.get_real("env.alpha", c.alpha);
      return std::make_unique<HarvestModel>(c);
    }
    case EnvKind::Cleanup: {
      CleanupConfig c;
      if (config.has("env.map")) c.map = GridMap::load_file(config.require_str("env.map"));
      c.n_agents = static_cast<int>(config.get_int("env.n_agents", c.n_agents));
      c.episode_len = static_cast<int>(config.get_int("env.episode_len", c.episode_len));
      c.pollution_rate = config.get_real("env.pollution_rate", c.pollution_rate);
      c.pollution_max = config.get_real("env.pollution_max", c.pollution_max);
      c.pollution_start = config.get_real("env.pollution_start", c.pollution_start);
      c.regrowth_base = config.get_real("env.regrowth_base", c.regrowth_base);
      c.clean_quantum = config.get_real("env.clean_quantum", c.clean_quantum);
      c.incentive_bounds.lo = config.get_real("env.incentive_lo", c.incentive_bounds.lo);
      c.incentive_bounds.hi = config.get_real("env.incentive_hi", c.incentive_bounds.hi);
      return std::make_unique<CleanupModel>(c);
    }
  }
  throw std::logic_error("unreachable");
}

TrainerConfig make_trainer_config(const Config& config, EnvKind kind) {
  TrainerConfig t;
  switch (kind) {
    case EnvKind::Harvest: t = TrainerConfig::harvest_defaults(); break;
    case EnvKind::Cleanup: t = TrainerConfig::cleanup_defaults(); break;
    case EnvKind::Cer: t = TrainerConfig::cer_defaults(); break;
  }
  t.lr = config.get_real("trainer.lr", t.lr);
  t.gamma = config.get_real("trainer.gamma", t.gamma);
  t.gae_lambda = config.get_real("trainer.gae_lambda", t.gae_lambda);
  t.clip = config.get_real("trainer.clip", t.clip);
  t.value_clip = config.get_real("trainer.value_clip", t.value_clip);
  t.value_coef = config.get_real("trainer.value_coef", t.value_coef);
  t.entropy_coef = config.get_real("trainer.entropy_coef", t.entropy_coef);
  t.minibatch = static_cast<int>(config.get_int("trainer.minibatch", t.minibatch));
  t.update_epochs = static_cast<int>(config.get_int("trainer.update_epochs", t.update_epochs));
  t.grad_clip = config.get_real("trainer.grad_clip", t.grad_clip);
  t.adam_eps = config.get_real("trainer.adam_eps", t.adam_eps);
  t.pg_batch_episodes =
      static_cast<int>(config.get_int("trainer.pg_batch_episodes", t.pg_batch_episodes));
  t.validate();
  return t;
}

OracleConfig make_oracle_config(const Config& config, EnvKind kind) {
  OracleConfig o = OracleConfig::for_env(kind);
  o.convergence_episodes = static_cast<int>(
      config.get_int("oracle.convergence_episodes", o.convergence_episodes));
  o.phase1_min_episodes =
      static_cast<int>(config.get_int("oracle.phase1_min_episodes", o.phase1_min_episodes));
  o.phase1_max_episodes =
      static_cast<int>(config.get_int("oracle.phase1_max_episodes", o.phase1_max_episodes));
  o.phase1_check_every =
      static_cast<int>(config.get_int("oracle.phase1_check_every", o.phase1_check_every));
  o.phase2_rounds = static_cast<int>(config.get_int("oracle.phase2_rounds", o.phase2_rounds));
  o.validate();
  return o;
}

int default_validation_episodes(EnvKind env, const std::string& principal_kind) {
  switch (env) {
    case EnvKind::Harvest: return principal_kind == "llm" ? 3 : 1;
    case EnvKind::Cleanup: return principal_kind == "metagrad" ? 1 : 3;
    case EnvKind::Cer: return 1;
  }
  return 1;
}

long default_window(EnvKind env, bool principal_steps) {
  if (principal_steps) return env == EnvKind::Cleanup ? 20 : 10;
  return env == EnvKind::Cleanup ? 800 : 400;
}

namespace {

GridSpec parse_grid(const std::string& text) {
  GridSpec g;
  if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &g.start, &g.end, &g.step) != 3) {
    throw std::invalid_argument("grid must be start:end:step, got '" + text + "'");
  }
  return g;
}

GridSpec default_bandit_grid(EnvKind env, const std::string& kind) {
  const bool coarse = kind == "ucb" || kind == "thompson";
  switch (env) {
    case EnvKind::Harvest: return coarse ? GridSpec{0, 1, 0.1} : GridSpec{0, 1, 0.05};
    case EnvKind::Cleanup: return coarse ? GridSpec{0, 3, 0.3} : GridSpec{0, 3, 0.15};
    case EnvKind::Cer: return coarse ? GridSpec{0, 5, 2.5} : GridSpec{0, 5, 1.0};
  }
  return GridSpec{};
}

std::vector<std::vector<double>> parse_action_rows(const std::string& text, int arity) {
  std::vector<std::vector<double>> rows;
  std::stringstream in(text);
  std::string row;
  while (std::getline(in, row, ';')) {
    std::vector<double> values;
    std::stringstream rs(row);
    std::string item;
    while (std::getline(rs, item, ',')) values.push_back(std::strtod(item.c_str(), nullptr));
    if (static_cast<int>(values.size()) != arity) {
      throw std::invalid_argument("scripted action row has wrong arity: '" + row + "'");
    }
    rows.push_back(std::move(values));
  }
  return rows;
}

}  // namespace

RunComponents build_run(const Config& config, std::uint64_t seed, const std::string& out_dir) {
  RunComponents rc;
  rc.env = make_env(config);
  const EnvKind kind = rc.env->kind();
  const ActionSpec spec = rc.env->action_spec();
  const std::string principal_kind = config.require_str("principal.kind");

  const TrainerConfig trainer = make_trainer_config(config, kind);
  OracleConfig oracle_cfg = make_oracle_config(config, kind);

  rc.loop.budget = static_cast<int>(config.get_int("budget", 100));
  rc.loop.validation_episodes = static_cast<int>(config.get_int(
      "validation_episodes", default_validation_episodes(kind, principal_kind)));

  // Oracle.
  std::shared_ptr<MetaGradDriver> metagrad_driver;
  if (principal_kind == "metagrad") {
    if (kind != EnvKind::Cer) {
      throw std::invalid_argument("the metagrad principal is CER-scoped");
    }
    MetaGradConfig mc;
    mc.hidden = static_cast<int>(config.get_int("principal.hidden", mc.hidden));
    mc.lr = config.get_real("principal.lr", mc.lr);
    mc.agent_lr = config.get_real("principal.agent_lr", mc.agent_lr);
    mc.incentive_cost = config.get_real("principal.incentive_cost", mc.incentive_cost);
    mc.ablate_observations =
        config.get_bool("principal.ablate_observations", mc.ablate_observations);
    metagrad_driver = std::make_shared<MetaGradDriver>(
        dynamic_cast<const CerModel&>(*rc.env), mc, trainer, seed);
    rc.oracle = metagrad_driver;
    rc.convergence_timesteps_per_step = 2L * rc.env->episode_len();
  } else if (kind == EnvKind::Cer) {
    rc.oracle = std::make_shared<CerOracle>(oracle_cfg, trainer);
    rc.convergence_timesteps_per_step =
        static_cast<long>(oracle_cfg.convergence_episodes) * rc.env->episode_len();
  } else {
    const std::string snapshot_path = config.require_str("oracle.snapshot");
    PretrainedParams snapshot = PretrainedParams::load(snapshot_path);
    if (snapshot.env != kind) {
      throw std::invalid_argument("snapshot " + snapshot_path + " was trained for " +
                                  to_string(snapshot.env));
    }
    rc.oracle = std::make_shared<GridOracle>(std::move(snapshot), oracle_cfg, trainer);
    rc.convergence_timesteps_per_step =
        static_cast<long>(oracle_cfg.convergence_episodes) * rc.env->episode_len();
  }

  // Principal.
  if (principal_kind == "scripted") {
    rc.principal = std::make_unique<ScriptedPrincipal>(
        spec, parse_action_rows(config.require_str("principal.actions"), spec.arity()));
  } else if (principal_kind == "constant") {
    rc.principal = std::make_unique<ConstantPrincipal>(
        spec, config.get_real_list("principal.values"));
  } else if (principal_kind == "eps_greedy" || principal_kind == "ucb" ||
             principal_kind == "thompson") {
    const GridSpec g = config.has("principal.grid")
                           ? parse_grid(config.require_str("principal.grid"))
                           : default_bandit_grid(kind, principal_kind);
    const int contexts = std::max(1, rc.env->context_count());
    ArmGrid grid = ArmGrid::uniform(g, spec.arity(), contexts);
    if (principal_kind == "eps_greedy") {
      const double eps = config.get_real("principal.eps", kind == EnvKind::Cleanup ? 0.2 : 0.1);
      rc.principal = std::make_unique<BanditPrincipal>(BanditKind::EpsGreedy, spec,
                                                       std::move(grid), eps);
    } else if (principal_kind == "ucb") {
      const double c = config.get_real("principal.c", 0.2);
      rc.principal =
          std::make_unique<BanditPrincipal>(BanditKind::Ucb, spec, std::move(grid), c);
    } else {
      NigParams prior;
      prior.mu = config.get_real("principal.nig_mu", prior.mu);
      prior.nu = config.get_real("principal.nig_nu", prior.nu);
      prior.alpha = config.get_real("principal.nig_alpha", prior.alpha);
      prior.beta = config.get_real("principal.nig_beta", prior.beta);
      rc.principal = std::make_unique<BanditPrincipal>(BanditKind::Thompson, spec,
                                                       std::move(grid), 0.0, prior);
    }
  } else if (principal_kind == "econ") {
    EconConfig ec = EconConfig::for_env(kind);
    ec.hidden = static_cast<int>(config.get_int("principal.hidden", ec.hidden));
    ec.lr = config.get_real("principal.lr", ec.lr);
    ec.entropy_coef = config.get_real("principal.entropy_coef", ec.entropy_coef);
    ec.update_interval =
        static_cast<int>(config.get_int("principal.update_interval", ec.update_interval));
    ec.ablate_observations =
        config.get_bool("principal.ablate_observations", ec.ablate_observations);
    if (config.has("principal.grid")) ec.grid = parse_grid(config.require_str("principal.grid"));
    rc.principal = std::make_unique<EconPrincipal>(*rc.env, ec, seed);
  } else if (principal_kind == "metagrad") {
    rc.principal = std::make_unique<MetaGradPrincipal>(metagrad_driver, *rc.env);
  } else if (principal_kind == "llm") {
    LlmPrincipalConfig lc;
    lc.toggles.context = config.get_bool("principal.context", true);
    lc.toggles.historical_obs = config.get_bool("principal.historical_obs", true);
    lc.toggles.irrelevant = config.get_bool("principal.irrelevant", false);
    lc.format = action_format_from_string(
        config.get_str("principal.format", "dollar_brackets"));
    lc.max_retries = static_cast<int>(config.get_int("principal.max_retries", 3));
    if (!out_dir.empty()) {
      lc.transcript_path = out_dir + "/transcript_seed" + std::to_string(seed) + ".txt";
    }
    const std::string client_kind = config.get_str("principal.client", "scripted");
    std::shared_ptr<LlmClient> client;
    if (client_kind == "scripted") {
      client = std::make_shared<ScriptedClient>(
          ScriptedClient::from_file(config.require_str("principal.script")));
    } else if (client_kind == "hill_climb") {
      client = std::make_shared<HillClimbClient>(spec);
    } else if (client_kind == "http") {
      LlmClientConfig cc;
      cc.endpoint = config.require_str("principal.endpoint");
      cc.model = config.require_str("principal.model");
      cc.temperature = config.get_real("principal.temperature", cc.temperature);
      cc.max_retries = static_cast<int>(config.get_int("principal.max_retries", cc.max_retries));
      cc.timeout_seconds =
          static_cast<int>(config.get_int("principal.timeout_seconds", cc.timeout_seconds));
      cc.api_key_env = config.get_str("principal.api_key_env", cc.api_key_env);
      client = std::make_shared<HttpLlmClient>(cc);
    } else {
      throw std::invalid_argument("unknown LLM client: " + client_kind);
    }
    rc.principal = std::make_unique<LlmPrincipal>(*rc.env, client, lc, seed);
    rc.window_in_principal_steps = true;
  } else {
    throw std::invalid_argument("unknown principal: " + principal_kind);
  }
  return rc;
}

namespace {

json run_meta(const Config& config, const RunComponents& rc) {
  json meta;
  meta["env"] = to_string(rc.env->kind());
  meta["method"] = config.require_str("principal.kind");
  meta["budget"] = rc.loop.budget;
  meta["validation_episodes"] = rc.loop.validation_episodes;
  meta["episode_len"] = rc.env->episode_len();
  meta["optimum_estimate"] =
      config.get_real("env.optimum_estimate", rc.env->optimum_estimate());
  meta["window_in_principal_steps"] = rc.window_in_principal_steps;
  meta["window"] = config.get_int(
      "report.window", default_window(rc.env->kind(), rc.window_in_principal_steps));
  meta["smoothing_halflife"] = config.get_real("report.halflife", 5.0);
  meta["convergence_timesteps_per_step"] = rc.convergence_timesteps_per_step;
  meta["config_digest"] = config.digest();
  return meta;
}

void run_one_seed(const Config& config, long seed, const std::string& out_dir, bool resume) {
  RunComponents rc = build_run(config, static_cast<std::uint64_t>(seed), out_dir);
  const std::string run_path = out_dir + "/run_seed" + std::to_string(seed) + ".jsonl";
  const std::string state_path = out_dir + "/state_seed" + std::to_string(seed) + ".json";

  RunRecord previous;
  if (resume && fs::exists(run_path) && fs::exists(state_path)) {
    std::ifstream in(run_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    previous = RunRecord::from_jsonl(buf.str());
    std::ifstream sin(state_path);
    json state;
    sin >> state;
    if (state.at("resume_digest").get<std::string>() != config.resume_digest()) {
      throw std::runtime_error("resume state does not match the config for seed " +
                               std::to_string(seed));
    }
    if (!state.at("principal").is_null()) rc.principal->restore(state.at("principal"));
    if (auto* llm = dynamic_cast<LlmPrincipal*>(rc.principal.get())) {
      if (auto* scripted = dynamic_cast<ScriptedClient*>(&llm->client())) {
        scripted->skip(static_cast<std::size_t>(llm->responses_consumed()));
      }
    }
  }
  if (static_cast<int>(previous.steps.size()) >= rc.loop.budget) return;

  const int flush_every = static_cast<int>(config.get_int("flush_every", 100));
  std::ostringstream lines;
  lines << previous.to_jsonl();
  int since_flush = 0;
  LoopHooks hooks;
  hooks.on_step = [&](const RunStep& step) {
    lines << step_to_json(step).dump() << '\n';
    if (++since_flush >= flush_every) {
      write_file_atomic(run_path, lines.str());
      json state;
      state["resume_digest"] = config.resume_digest();
      state["principal"] = rc.principal->snapshot();
      write_file_atomic(state_path, state.dump());
      since_flush = 0;
    }
  };

  RunRecord record =
      run_stackelberg_loop(*rc.env, *rc.oracle, *rc.principal, rc.loop,
                           static_cast<std::uint64_t>(seed), config.digest(), hooks,
                           std::move(previous));
  write_file_atomic(run_path, record.to_jsonl());
  json state;
  state["resume_digest"] = config.resume_digest();
  state["principal"] = rc.principal->snapshot();
  write_file_atomic(state_path, state.dump());
}

}  // namespace

int cmd_pretrain(const Config& config, const std::string& out_path) {
  auto env = make_env(config);
  if (env->kind() == EnvKind::Cer) {
    std::cout << "cer: agents are not pretrained; nothing to do\n";
    return 0;
  }
  const TrainerConfig trainer = make_trainer_config(config, env->kind());
  const OracleConfig oracle_cfg = make_oracle_config(config, env->kind());
  Rng rng = make_rng(config.get_int("pretrain_seed", 7), "pretrain");
  PretrainReport report;
  PretrainedParams params = pretrain_oracle(*env, trainer, oracle_cfg, rng, &report);
  params.config_digest = config.digest();
  fs::create_directories(fs::path(out_path).parent_path().empty()
                             ? "."
                             : fs::path(out_path).parent_path().string());
  params.save(out_path);
  std::cout << "pretrained " << to_string(env->kind()) << ": phase1 " << report.phase1_episodes
            << " episodes (metric " << report.phase1_metric << "), phase2 "
            << report.phase2_episodes << " episodes -> " << out_path << "\n";
  return 0;
}

int cmd_run(const Config& config, std::vector<long> seeds, const std::string& out_dir,
            bool resume) {
  if (seeds.empty()) seeds = config.get_int_list("seeds");
  if (seeds.empty()) seeds = {0};
  fs::create_directories(out_dir);

  {
    RunComponents probe = build_run(config, static_cast<std::uint64_t>(seeds.front()), "");
    write_file_atomic(out_dir + "/meta.json", run_meta(config, probe).dump(2));
  }

  const int workers = std::max(1, std::min<int>(std::thread::hardware_concurrency(),
                                                static_cast<int>(seeds.size())));
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::string first_error;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= seeds.size()) return;
        try {
          run_one_seed(config, seeds[i], out_dir, resume);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (first_error.empty()) {
            first_error = "seed " + std::to_string(seeds[i]) + ": " + e.what();
          }
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (!first_error.empty()) {
    std::cerr << "run failed: " << first_error << "\n";
    return 1;
  }
  return 0;
}

std::vector<double> per_step_payoff_series(const RunRecord& record) {
  std::vector<double> series;
  series.reserve(record.steps.size());
  for (const auto& s : record.steps) series.push_back(s.outcome.payoff);
  return series;
}

std::vector<double> expanded_payoff_series(const RunRecord& record) {
  std::vector<double> series;
  for (const auto& s : record.steps) {
    for (long t = 0; t < s.outcome.validation_timesteps; ++t) {
      series.push_back(s.outcome.payoff);
    }
  }
  return series;
}

SummaryRow summarize_run_dir(const std::string& run_dir, std::optional<long> window_override,
                             std::optional<double> halflife_override,
                             std::vector<RunAnnotation>* annotations) {
  std::ifstream meta_in(run_dir + "/meta.json");
  if (!meta_in) throw std::runtime_error("missing meta.json in " + run_dir);
  json meta;
  meta_in >> meta;

  SummaryRow row;
  row.method = meta.at("method").get<std::string>();
  row.env = meta.at("env").get<std::string>();
  const bool per_step = meta.at("window_in_principal_steps").get<bool>();
  const long window = window_override.value_or(meta.at("window").get<long>());
  const double halflife =
      halflife_override.value_or(meta.at("smoothing_halflife").get<double>());
  const double floor = 0.25 * meta.at("optimum_estimate").get<double>();

  std::vector<double> payoffs, timesteps;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("run_seed", 0) != 0 || entry.path().extension() != ".jsonl") continue;
    std::ifstream in(entry.path());
    std::ostringstream buf;
    buf << in.rdbuf();
    const RunRecord record = RunRecord::from_jsonl(buf.str());
    if (record.steps.empty()) continue;
    const std::vector<double> series =
        per_step ? per_step_payoff_series(record) : expanded_payoff_series(record);
    const ConvergenceReport conv = detect_convergence(series, window, 0.05, halflife);

    RunAnnotation ann;
    ann.seed = std::strtol(name.c_str() + 8, nullptr, 10);
    ann.converged = conv.converged;
    const std::vector<double> smoothed = ema_smooth(series, halflife);
    ann.payoff = conv.converged ? *conv.payoff_at_convergence : smoothed.back();
    ann.trivial = ann.payoff < floor;
    if (conv.converged) {
      // Convergence is reported in validation timesteps.
      ann.convergence_timestep =
          per_step ? static_cast<double>(*conv.convergence_timestep) *
                         meta.at("validation_episodes").get<double>() *
                         meta.at("episode_len").get<double>()
                   : static_cast<double>(*conv.convergence_timestep);
      timesteps.push_back(ann.convergence_timestep);
    }
    const bool dnc = !conv.converged || ann.trivial;
    if (dnc) ++row.n_dnc;
    payoffs.push_back(ann.payoff);
    ++row.n_seeds;
    if (annotations) annotations->push_back(ann);
  }

  auto mean_stderr = [](const std::vector<double>& xs, double* mean, double* se) {
    *mean = 0.0;
    *se = 0.0;
    if (xs.empty()) return;
    for (double x : xs) *mean += x;
    *mean /= xs.size();
    if (xs.size() > 1) {
      double var = 0.0;
      for (double x : xs) var += (x - *mean) * (x - *mean);
      var /= (xs.size() - 1);
      *se = std::sqrt(var / xs.size());
    }
  };
  mean_stderr(payoffs, &row.payoff_mean, &row.payoff_stderr);
  mean_stderr(timesteps, &row.timestep_mean, &row.timestep_stderr);
  row.dnc = 2 * row.n_dnc > row.n_seeds;
  return row;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_csv,
               std::optional<long> window_override, std::optional<double> halflife_override) {
  std::ostringstream csv;
  csv << "method,env,n_seeds,n_dnc,payoff_mean,payoff_stderr,timestep_mean,timestep_stderr,"
         "dnc\n";
  std::ostringstream ann_csv;
  ann_csv << "run_dir,seed,converged,convergence_timestep,payoff,trivial\n";
  for (const auto& dir : run_dirs) {
    std::vector<RunAnnotation> annotations;
    const SummaryRow row = summarize_run_dir(dir, window_override, halflife_override,
                                             &annotations);
    csv << row.method << ',' << row.env << ',' << row.n_seeds << ',' << row.n_dnc << ','
        << format_real(row.payoff_mean) << ',' << format_real(row.payoff_stderr) << ','
        << format_real(row.timestep_mean) << ',' << format_real(row.timestep_stderr) << ','
        << (row.dnc ? "DNC" : "ok") << '\n';
    for (const auto& a : annotations) {
      ann_csv << dir << ',' << a.seed << ',' << (a.converged ? 1 : 0) << ','
              << format_real(a.convergence_timestep) << ',' << format_real(a.payoff) << ','
              << (a.trivial ? 1 : 0) << '\n';
    }
  }
  write_file_atomic(out_csv, csv.str());
  const std::string ann_path =
      out_csv.size() > 4 && out_csv.substr(out_csv.size() - 4) == ".csv"
          ? out_csv.substr(0, out_csv.size() - 4) + "_runs.csv"
          : out_csv + "_runs";
  write_file_atomic(ann_path, ann_csv.str());
  std::cout << csv.str();
  return 0;
}

int cmd_grid(const Config& config, const std::string& out_dir) {
  const std::vector<std::string> grid_keys = config.keys_with_prefix("grid.");
  std::vector<std::string> param_keys;
  std::vector<std::vector<std::string>> param_values;
  for (const auto& gk : grid_keys) {
    param_keys.push_back(gk.substr(5));
    std::vector<std::string> values;
    std::stringstream in(config.require_str(gk));
    std::string item;
    while (std::getline(in, item, ',')) {
      const std::size_t a = item.find_first_not_of(" \t");
      const std::size_t b = item.find_last_not_of(" \t");
      if (a != std::string::npos) values.push_back(item.substr(a, b - a + 1));
    }
    param_values.push_back(values);
  }
  if (param_keys.empty()) {
    std::cerr << "grid: no grid.* keys in config\n";
    return 1;
  }

  std::vector<long> seeds = config.get_int_list("seeds");
  if (seeds.empty()) seeds = {0, 1, 2};

  std::vector<std::size_t> index(param_keys.size(), 0);
  std::ostringstream csv;
  csv << "cell";
  for (const auto& k : param_keys) csv << ',' << k;
  csv << ",payoff_mean,payoff_stderr,timestep_mean,dnc\n";

  std::string best_cell;
  double best_payoff = -1e300;
  int cell_id = 0;
  while (true) {
    Config cell = config;
    std::string cell_label;
    for (std::size_t i = 0; i < param_keys.size(); ++i) {
      cell.set(param_keys[i], param_values[i][index[i]]);
      cell_label += (i ? "|" : "") + param_values[i][index[i]];
    }
    const std::string cell_dir = out_dir + "/cell_" + std::to_string(cell_id);
    if (const int rc = cmd_run(cell, seeds, cell_dir, false); rc != 0) return rc;
    const SummaryRow row = summarize_run_dir(cell_dir, std::nullopt, std::nullopt);
    csv << cell_id;
    for (std::size_t i = 0; i < param_keys.size(); ++i) csv << ',' << param_values[i][index[i]];
    csv << ',' << format_real(row.payoff_mean) << ',' << format_real(row.payoff_stderr) << ','
        << format_real(row.timestep_mean) << ',' << (row.dnc ? "DNC" : "ok") << '\n';
    // Ties go to the lexicographically smallest cell label.
    if (row.payoff_mean > best_payoff ||
        (row.payoff_mean == best_payoff && cell_label < best_cell)) {
      best_payoff = row.payoff_mean;
      best_cell = cell_label;
    }
    ++cell_id;

    std::size_t d = 0;
    while (d < index.size() && ++index[d] == param_values[d].size()) index[d++] = 0;
    if (d == index.size()) break;
  }
  csv << "best," << best_cell << ',' << format_real(best_payoff) << ",,,\n";
  fs::create_directories(out_dir);
  write_file_atomic(out_dir + "/grid_summary.csv", csv.str());
  std::cout << "grid: " << cell_id << " cells -> " << out_dir << "/grid_summary.csv\n";
  return 0;
}

int cmd_export(const std::vector<std::string>& run_dirs, const std::string& out_csv,
               bool count_all_timesteps) {
  std::ostringstream csv;
  csv << "method,env,seed,validation_timestep,payoff\n";
  for (const auto& dir : run_dirs) {
    std::ifstream meta_in(dir + "/meta.json");
    if (!meta_in) throw std::runtime_error("missing meta.json in " + dir);
    json meta;
    meta_in >> meta;
    const std::string method = meta.at("method").get<std::string>();
    const std::string env = meta.at("env").get<std::string>();
    const long extra =
        count_all_timesteps ? meta.at("convergence_timesteps_per_step").get<long>() : 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("run_seed", 0) != 0 || entry.path().extension() != ".jsonl") continue;
      const long seed = std::strtol(name.c_str() + 8, nullptr, 10);
      std::ifstream in(entry.path());
      std::ostringstream buf;
      buf << in.rdbuf();
      const RunRecord record = RunRecord::from_jsonl(buf.str());
      long timestep = 0;
      for (const auto& s : record.steps) {
        timestep += s.outcome.validation_timesteps + extra;
        csv << method << ',' << env << ',' << seed << ',' << timestep << ','
            << format_real(s.outcome.payoff) << '\n';
      }
    }
  }
  write_file_atomic(out_csv, csv.str());
  return 0;
}

}  // namespace policylab
