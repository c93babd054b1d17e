#include <benchmark/benchmark.h>

#include "policylab/envs/cer.hpp"
#include "policylab/followers/oracle.hpp"

namespace {

using namespace policylab;

void BM_CerBestResponse(benchmark::State& state) {
  CerModel env;
  OracleConfig oc = OracleConfig::for_env(EnvKind::Cer);
  oc.convergence_episodes = static_cast<int>(state.range(0));
  CerOracle oracle(oc, TrainerConfig::cer_defaults());
  PrincipalAction action = make_action(env.action_spec(), {5, 0, 0, 0, 0});
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto policy = oracle.best_response(env, action, 0, seed++);
    benchmark::DoNotOptimize(policy.get());
  }
  state.SetItemsProcessed(state.iterations() * oc.convergence_episodes);
}
BENCHMARK(BM_CerBestResponse)->Arg(50)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_MlpForward(benchmark::State& state) {
  Rng rng(1);
  Mlp net = Mlp::init(MlpSpec{{11, 32, 32, 5}, false}, rng);
  std::vector<double> x(11, 0.3), out, scratch;
  for (auto _ : state) {
    mlp_forward(net, x, out, scratch);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_MlpForward);

}  // namespace
