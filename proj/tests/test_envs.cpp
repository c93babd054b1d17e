#include <doctest.h>

#include <numeric>

#include "policylab/envs/cer.hpp"
#include "policylab/envs/cleanup.hpp"
#include "policylab/envs/harvest.hpp"

using namespace policylab;

TEST_CASE("cer_step: known optimum configuration totals 28") {
  CerConfig config;
  CerState state = cer_reset(config, 0);
  std::vector<double> zero_row(5, 0.0);
  // 2 agents to the active lever, 3 to the door, all moved.
  std::vector<int> targets{0, 0, config.door_state(), config.door_state(), config.door_state()};
  auto rewards = cer_step(state, targets, zero_row, config);
  CHECK(state.door_open);
  const double total = std::accumulate(rewards.raw.begin(), rewards.raw.end(), 0.0);
  CHECK(total == doctest::Approx(10.0 * (config.n - config.m) - config.m));
}

TEST_CASE("cer_step: staying put with a closed door is free") {
  CerConfig config;
  CerState state = cer_reset(config, 1);
  std::vector<double> zero_row(5, 0.0);
  std::vector<int> stay(5, config.start_state());
  auto rewards = cer_step(state, stay, zero_row, config);
  CHECK_FALSE(state.door_open);
  for (double r : rewards.raw) CHECK(r == doctest::Approx(0.0));
}

TEST_CASE("cer_step: zero incentives leave rewards unmodified") {
  CerConfig config;
  CerState state = cer_reset(config, 2);
  std::vector<double> zero_row(5, 0.0);
  std::vector<int> targets{0, 1, 2, 3, 4};
  auto rewards = cer_step(state, targets, zero_row, config);
  CHECK(rewards.modified == rewards.raw);
}

TEST_CASE("cer_step: incentives add by occupied state") {
  CerConfig config;
  CerState state = cer_reset(config, 0);
  std::vector<double> row{5, 0, 0, 0, 0};
  std::vector<int> targets{0, 0, 0, config.door_state(), config.start_state()};
  auto rewards = cer_step(state, targets, row, config);
  // Agents on lever 0 moved (-1) and collect +5.
  CHECK(rewards.modified[0] == doctest::Approx(4.0));
  CHECK(rewards.raw[0] == doctest::Approx(-1.0));
}

TEST_CASE("cer_step: door payout beats the move penalty") {
  CerConfig config;
  CerState state = cer_reset(config, 0);
  std::vector<double> zero_row(5, 0.0);
  std::vector<int> targets{0, 0, config.door_state(), config.door_state(), config.door_state()};
  auto rewards = cer_step(state, targets, zero_row, config);
  CHECK(rewards.raw[2] == doctest::Approx(10.0));
}

TEST_CASE("cer_step: invalid target state") {
  CerConfig config;
  CerState state = cer_reset(config, 0);
  std::vector<double> zero_row(5, 0.0);
  std::vector<int> targets{0, 0, 0, 0, 7};
  CHECK_THROWS(cer_step(state, targets, zero_row, config));
}

TEST_CASE("cer door is a pure function of positions and the active lever") {
  CerConfig config;
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    CerState state = cer_reset(config, uniform_int(rng, 0, config.L - 1));
    std::vector<int> targets(config.n);
    for (int& t : targets) t = uniform_int(rng, 0, config.n_states() - 1);
    std::vector<double> zero_row(config.n_states(), 0.0);
    cer_step(state, targets, zero_row, config);
    int occupancy = 0;
    for (int p : state.positions) occupancy += p == state.active_lever;
    CHECK(state.door_open == (occupancy >= config.m));
  }
}

TEST_CASE("cer_principal_payoff: optimum play and averages") {
  CHECK(cer_principal_payoff(28.0 * 5, 5) == doctest::Approx(28.0));
  CHECK(cer_principal_payoff(0.0, 5) == doctest::Approx(0.0));
  CHECK(cer_principal_payoff(28.0, 5) == doctest::Approx(5.6));
}

TEST_CASE("bracket: boundary semantics") {
  std::array<double, 3> tau{0, 3, 6};
  CHECK(bracket(0.0, tau) == 1);
  CHECK(bracket(4.0, tau) == 2);
  CHECK(bracket(6.0, tau) == 3);   // closed top bracket
  CHECK(bracket(2.99, tau) == 1);
  CHECK(bracket(3.0, tau) == 2);
  CHECK(bracket(100.0, tau) == 3);
}

TEST_CASE("harvest_tax: worked example") {
  std::array<double, 3> tau{0, 3, 6};
  std::vector<double> raw{1.0, 0.0};
  std::vector<double> sums{4.0, 0.0};
  std::vector<double> rates{0.1, 0.3, 0.5};
  auto modified = harvest_tax(raw, sums, rates, 4.0, tau);
  CHECK(modified[0] == doctest::Approx(0.4));
  CHECK(modified[1] == doctest::Approx(0.6));
}

TEST_CASE("harvest_tax: zero rates are the identity") {
  std::array<double, 3> tau{0, 3, 6};
  std::vector<double> raw{1.0, 0.5, 0.0};
  std::vector<double> sums{9.0, 2.0, 0.0};
  std::vector<double> rates{0, 0, 0};
  CHECK(harvest_tax(raw, sums, rates, 4.0, tau) == raw);
}

TEST_CASE("harvest_tax: an overharvester under full rates nets about -1") {
  std::array<double, 3> tau{0, 3, 6};
  std::vector<double> raw{1.0, 0.0};
  std::vector<double> sums{6.0, 0.0};
  std::vector<double> rates{1, 1, 1};
  auto modified = harvest_tax(raw, sums, rates, 4.0, tau);
  CHECK(modified[0] == doctest::Approx(-1.0));
}

TEST_CASE("harvest_tax: redistribution conserves the total") {
  std::array<double, 3> tau{0, 3, 6};
  Rng rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = uniform_int(rng, 1, 9);
    std::vector<double> raw(n), sums(n), rates(3);
    for (double& v : raw) v = uniform_real(rng, 0.0, 2.0);
    for (double& v : sums) v = uniform_real(rng, 0.0, 12.0);
    for (double& v : rates) v = uniform_real(rng, 0.0, 1.0);
    const double alpha = uniform_real(rng, 0.5, 8.0);
    auto modified = harvest_tax(raw, sums, rates, alpha, tau);
    const double before = std::accumulate(raw.begin(), raw.end(), 0.0);
    const double after = std::accumulate(modified.begin(), modified.end(), 0.0);
    CHECK(after == doctest::Approx(before).epsilon(1e-12));
  }
}

namespace {

HarvestConfig tiny_harvest(const std::string& map_text, int agents, int episode_len) {
  HarvestConfig config;
  config.map = GridMap::parse(map_text);
  config.n_agents = agents;
  config.episode_len = episode_len;
  return config;
}

}  // namespace

TEST_CASE("harvest: entering an apple cell harvests it") {
  HarvestConfig config = tiny_harvest("S.AAA\n", 1, 5);
  HarvestGame game(config, {0, 0, 0});
  Rng rng(1);
  game.reset(rng);
  std::vector<double> raw(1), modified(1);
  std::vector<int> right{4};
  game.step(right, rng, raw, modified);  // onto floor
  CHECK(raw[0] == doctest::Approx(0.0));
  game.step(right, rng, raw, modified);  // onto the first apple
  CHECK(raw[0] == doctest::Approx(1.0));
  CHECK(game.apples_remaining() < 3);
  CHECK(game.state().cumulative_raw[0] == doctest::Approx(1.0));
}

TEST_CASE("harvest: no harvest means zero raw rewards") {
  HarvestConfig config = tiny_harvest("S.AAA\n", 1, 5);
  HarvestGame game(config, {0.5, 0.5, 0.5});
  Rng rng(1);
  game.reset(rng);
  std::vector<double> raw(1), modified(1);
  std::vector<int> stay{0};
  game.step(stay, rng, raw, modified);
  CHECK(raw[0] == doctest::Approx(0.0));
  CHECK(modified[0] == doctest::Approx(0.0));
}

TEST_CASE("harvest regrowth: zero coefficient freezes the map") {
  HarvestConfig config = tiny_harvest("S.AAA\n", 1, 10);
  config.regrowth_coeff = 0.0;
  HarvestGame game(config, {0, 0, 0});
  Rng rng(7);
  game.reset(rng);
  std::vector<double> raw(1), modified(1);
  std::vector<int> right{4};
  game.step(right, rng, raw, modified);
  game.step(right, rng, raw, modified);
  const int after_harvest = game.apples_remaining();
  std::vector<int> left{3};
  for (int i = 0; i < 6; ++i) game.step(left, rng, raw, modified);
  CHECK(game.apples_remaining() == after_harvest);
}

TEST_CASE("harvest regrowth: exhausted patches are absorbing") {
  HarvestConfig config = tiny_harvest("S.A\n", 1, 30);
  config.regrowth_coeff = 0.5;
  HarvestGame game(config, {0, 0, 0});
  Rng rng(7);
  game.reset(rng);
  std::vector<double> raw(1), modified(1);
  std::vector<int> right{4};
  game.step(right, rng, raw, modified);
  game.step(right, rng, raw, modified);  // harvest the single-apple patch
  CHECK(game.apples_remaining() == 0);
  std::vector<int> left{3};
  game.step(left, rng, raw, modified);
  for (int i = 0; i < 20; ++i) {
    game.step(std::vector<int>{0}, rng, raw, modified);
    CHECK(game.apples_remaining() == 0);
  }
}

TEST_CASE("harvest regrowth: empirical frequency matches p*k") {
  // Agent eats the leftmost apple of an AAA patch and steps away; the empty
  // cell then has two in-patch apples in range, so it regrows w.p. 0.1.
  HarvestConfig config = tiny_harvest("S.AAA\n", 1, 4);
  config.regrowth_coeff = 0.05;
  HarvestGame game(config, {0, 0, 0});
  Rng rng(123);
  std::vector<double> raw(1), modified(1);
  int regrown = 0;
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    game.reset(rng);
    game.step(std::vector<int>{4}, rng, raw, modified);
    game.step(std::vector<int>{4}, rng, raw, modified);
    REQUIRE(raw[0] == doctest::Approx(1.0));
    game.step(std::vector<int>{3}, rng, raw, modified);
    regrown += game.apples_remaining() == 3;
  }
  const double freq = static_cast<double>(regrown) / trials;
  CHECK(freq == doctest::Approx(0.10).epsilon(0.1));
  CHECK(std::abs(freq - 0.10) < 0.01);
}

TEST_CASE("harvest: window sums drop entries older than H") {
  HarvestConfig config = tiny_harvest("S.AAA\n", 1, 30);
  config.window = 2;
  config.regrowth_coeff = 0.0;
  HarvestGame game(config, {0, 0, 0});
  Rng rng(3);
  game.reset(rng);
  std::vector<double> raw(1), modified(1);
  game.step(std::vector<int>{4}, rng, raw, modified);
  game.step(std::vector<int>{4}, rng, raw, modified);  // harvest at t=2
  CHECK(game.window_sum(0) == doctest::Approx(1.0));
  game.step(std::vector<int>{4}, rng, raw, modified);  // harvest at t=3
  CHECK(game.window_sum(0) == doctest::Approx(2.0));
  game.step(std::vector<int>{0}, rng, raw, modified);  // t=4: first harvest ages out
  CHECK(game.window_sum(0) == doctest::Approx(1.0));
  game.step(std::vector<int>{0}, rng, raw, modified);
  CHECK(game.window_sum(0) == doctest::Approx(0.0));
}

TEST_CASE("harvest: principal payoff is the mean cumulative raw endowment") {
  HarvestConfig config = tiny_harvest("SSA\nA..\n", 2, 4);
  config.regrowth_coeff = 0.0;
  HarvestGame game(config, {1, 1, 1});
  Rng rng(3);
  game.reset(rng);
  std::vector<double> raw(2), modified(2);
  // Agent 1 harvests the right apple; agent 0 stays.
  game.step(std::vector<int>{0, 4}, rng, raw, modified);
  CHECK(raw[1] == doctest::Approx(1.0));
  while (!game.done()) game.step(std::vector<int>{0, 0}, rng, raw, modified);
  CHECK(game.principal_payoff() == doctest::Approx(0.5));  // (0 + 1) / 2
  const auto obs = game.principal_observe();
  CHECK(std::get<HarvestObs>(obs.payload).apples_remaining == doctest::Approx(1.0));
}

TEST_CASE("harvest: movement collisions resolve by agent index") {
  HarvestConfig config = tiny_harvest("S.S\n...\n", 2, 4);
  HarvestGame game(config, {0, 0, 0});
  Rng rng(3);
  game.reset(rng);
  std::vector<double> raw(2), modified(2);
  // Both target the middle cell; agent 0 wins, agent 1 stays.
  game.step(std::vector<int>{4, 3}, rng, raw, modified);
  CHECK(game.state().positions[0] == 1);
  CHECK(game.state().positions[1] == 2);
}

namespace {

CleanupConfig tiny_cleanup(const std::string& map_text, int agents, int episode_len) {
  CleanupConfig config;
  config.map = GridMap::parse(map_text);
  config.n_agents = agents;
  config.episode_len = episode_len;
  return config;
}

}  // namespace

TEST_CASE("cleanup: saturated pollution stops regrowth entirely") {
  CleanupConfig config = tiny_cleanup("RS.A\n", 1, 10);
  config.pollution_start = config.pollution_max;
  CleanupGame game(config, {0, 0, 0});
  Rng rng(1);
  game.reset(rng);
  CHECK(game.regrow_probability() == doctest::Approx(0.0));
}

TEST_CASE("cleanup: zero incentives leave rewards unmodified") {
  CleanupConfig config = tiny_cleanup("RS.A\n", 1, 10);
  CleanupGame game(config, {0, 0, 0});
  Rng rng(1);
  game.reset(rng);
  std::vector<double> raw(1), modified(1);
  game.step(std::vector<int>{5}, rng, raw, modified);  // clean next to the river
  CHECK(raw[0] == doctest::Approx(-1.0));
  CHECK(modified[0] == doctest::Approx(-1.0));
}

TEST_CASE("cleanup: cleaning with incentive 1.5 nets +0.5") {
  CleanupConfig config = tiny_cleanup("RS.A\n", 1, 10);
  CleanupGame game(config, {0, 1.5, 0});
  Rng rng(1);
  game.reset(rng);
  std::vector<double> raw(1), modified(1);
  const double before = game.state().pollution;
  game.step(std::vector<int>{5}, rng, raw, modified);
  CHECK(raw[0] == doctest::Approx(-1.0));
  CHECK(modified[0] == doctest::Approx(0.5));
  CHECK(game.state().clean_count == 1);
  CHECK(game.state().pollution <
        before + config.pollution_rate);  // the quantum came off
}

TEST_CASE("cleanup: harvest and other action classes") {
  CleanupConfig config = tiny_cleanup("RS.A\n", 1, 10);
  config.pollution_start = 0.0;
  CleanupGame game(config, {2.0, 0, 0.25});
  Rng rng(1);
  game.reset(rng);
  std::vector<double> raw(1), modified(1);
  game.step(std::vector<int>{4}, rng, raw, modified);  // move right, no apple there
  CHECK(raw[0] == doctest::Approx(0.0));
  CHECK(modified[0] == doctest::Approx(0.25));  // "other" incentive
  game.step(std::vector<int>{4}, rng, raw, modified);  // onto the apple
  CHECK(raw[0] == doctest::Approx(0.1));
  CHECK(modified[0] == doctest::Approx(2.1));
  CHECK(game.state().harvest_count == 1);
}

TEST_CASE("cleanup: clean attempt away from the river is an 'other' action") {
  CleanupConfig config = tiny_cleanup("R.S.\n", 1, 10);
  CleanupGame game(config, {0, 1.0, 0});
  Rng rng(1);
  game.reset(rng);
  std::vector<double> raw(1), modified(1);
  game.step(std::vector<int>{5}, rng, raw, modified);
  CHECK(raw[0] == doctest::Approx(0.0));
  CHECK(game.state().clean_count == 0);
}

TEST_CASE("cleanup: pollution is nondecreasing without cleaning, up to saturation") {
  CleanupConfig config = tiny_cleanup("RS.A\n", 1, 300);
  config.pollution_start = 0.2;
  CleanupGame game(config, {0, 0, 0});
  Rng rng(9);
  game.reset(rng);
  std::vector<double> raw(1), modified(1);
  double last = game.state().pollution;
  while (!game.done()) {
    game.step(std::vector<int>{uniform_int(rng, 0, 4)}, rng, raw, modified);
    CHECK(game.state().pollution >= last - 1e-12);
    CHECK(game.state().pollution <= config.pollution_max + 1e-12);
    last = game.state().pollution;
  }
  CHECK(last == doctest::Approx(config.pollution_max));
}

TEST_CASE("cleanup: invalid action index") {
  CleanupConfig config = tiny_cleanup("RS.A\n", 1, 10);
  CleanupGame game(config, {0, 0, 0});
  Rng rng(1);
  game.reset(rng);
  std::vector<double> raw(1), modified(1);
  CHECK_THROWS(game.step(std::vector<int>{6}, rng, raw, modified));
}

TEST_CASE("cleanup: principal payoff is harvests per agent") {
  CleanupConfig config = tiny_cleanup("RS.A\nRS.A\n", 2, 3);
  config.pollution_start = config.pollution_max;  // no regrowth noise
  CleanupGame game(config, {0, 0, 0});
  Rng rng(1);
  game.reset(rng);
  std::vector<double> raw(2), modified(2);
  game.step(std::vector<int>{4, 0}, rng, raw, modified);
  game.step(std::vector<int>{4, 0}, rng, raw, modified);  // agent 0 harvests
  while (!game.done()) game.step(std::vector<int>{0, 0}, rng, raw, modified);
  CHECK(game.principal_payoff() == doctest::Approx(0.5));
  const auto obs = game.principal_observe();
  const auto& c = std::get<CleanupObs>(obs.payload);
  CHECK(c.clean_actions == doctest::Approx(0.0));
}

TEST_CASE("environment steps are deterministic given the seed") {
  HarvestModel env;
  PrincipalAction action = make_action(env.action_spec(), {0.2, 0.4, 0.6});
  auto run = [&](std::uint64_t seed) {
    auto game = env.make_game(action, -1);
    Rng rng(seed);
    game->reset(rng);
    std::vector<double> raw(game->n_agents()), modified(game->n_agents());
    double total = 0.0;
    std::vector<int> joint(game->n_agents());
    while (!game->done()) {
      for (int i = 0; i < game->n_agents(); ++i) joint[i] = uniform_int(rng, 0, 4);
      game->step(joint, rng, raw, modified);
      for (double r : raw) total += r;
    }
    return std::pair(total, game->principal_payoff());
  };
  CHECK(run(5) == run(5));
}

TEST_CASE("map parsing rejects bad inputs") {
  CHECK_THROWS(GridMap::parse("AB\n"));
  CHECK_THROWS(GridMap::parse("AA\nAAA\n"));
  CHECK_THROWS(GridMap::parse(""));
  const GridMap map = GridMap::parse(default_harvest_map());
  CHECK(map.rows == 12);
  CHECK(map.cols == 12);
  CHECK(map.cells_of('A').size() == 24);
  CHECK(map.cells_of('S').size() >= 7);
  // Four patches of six apples each.
  const auto labels = map.label_components('A');
  int max_label = -1;
  for (int l : labels) max_label = std::max(max_label, l);
  CHECK(max_label + 1 == 4);
}

TEST_CASE("default cleanup map wiring") {
  const GridMap map = GridMap::parse(default_cleanup_map());
  CHECK(map.cells_of('A').size() == 24);
  CHECK(map.cells_of('S').size() >= 7);
  CHECK(!map.cells_of('R').empty());
}
