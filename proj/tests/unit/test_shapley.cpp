#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <thread>

#include "redispatch/case_io.hpp"
#include "redispatch/shapley.hpp"

using namespace redispatch;

namespace {

/// Average marginal contribution over all orderings of the players.
std::vector<double> permutation_oracle(int n, const std::vector<double>& phi) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> psi(n, 0.0);
  long count = 0;
  do {
    Coalition c = 0;
    for (int k : order) {
      psi[k] += phi[c | (Coalition{1} << k)] - phi[c];
      c |= Coalition{1} << k;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  for (double& v : psi) v /= static_cast<double>(count);
  return psi;
}

std::vector<double> random_table(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  std::vector<double> phi(std::size_t{1} << n);
  for (double& v : phi) v = u(rng);
  return phi;
}

std::shared_ptr<const Network> builtin(const char* name) {
  return std::make_shared<const Network>(load_builtin_case(name));
}

CongestionSet dc_players(const Network& net) { return detect_congestions(net, dc_power_flow(net)); }

/// Game over case9's two players whose characteristic values come from a
/// table instead of OPF solves.
std::unique_ptr<Game> synthetic_game(const std::vector<double>& phi) {
  auto net = builtin("case9");
  auto g = std::make_unique<Game>(net, dc_players(*net), Formulation::dc);
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t c = 0; c < phi.size(); ++c)
    entries.push_back({{"coalition", c}, {"cost", phi[c]}, {"status", "optimal"}});
  g->import_cache({{"case", "case9"}, {"formulation", "dc"}, {"players", {1, 2}}, {"entries", entries}});
  return g;
}

}  // namespace

TEST_CASE("four-player game against the permutation oracle") {
  std::mt19937 rng(4);
  const auto phi = random_table(4, rng);
  const auto psi = shapley_from_table(4, phi);
  const auto oracle = permutation_oracle(4, phi);
  for (int k = 0; k < 4; ++k) CHECK(std::abs(psi[k] - oracle[k]) < 1e-12);
}

TEST_CASE("random games up to five players against the permutation oracle") {
  std::mt19937 rng(1234);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + trial % 5;
    const auto phi = random_table(n, rng);
    const auto psi = shapley_from_table(n, phi);
    const auto oracle = permutation_oracle(n, phi);
    for (int k = 0; k < n; ++k) REQUIRE(std::abs(psi[k] - oracle[k]) < 1e-12);
  }
}

TEST_CASE("weights sum to one") {
  for (int n = 1; n <= 12; ++n) {
    double sum = 0.0;
    for (int s = 0; s < n; ++s) {
      // number of coalitions of size s without a given player
      double binom = 1.0;
      for (int i = 1; i <= s; ++i) binom = binom * (n - 1 - s + i) / i;
      sum += binom * shapley_weight(n, s);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK(shapley_weight(3, 3) == 0.0);
  CHECK(shapley_weight(2, 0) == 0.5);
}

TEST_CASE("efficiency, symmetry and dummy on random games") {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> players(2, 6);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = players(rng);
    const Coalition all = (Coalition{1} << n) - 1;
    auto phi = random_table(n, rng);

    // Player 0 is a dummy, players 1 and 2 (if present) are symmetric.
    for (Coalition c = 0; c <= all; ++c)
      if (c & 1u) phi[c] = phi[c & ~Coalition{1}];
    if (n >= 3) {
      for (Coalition c = 0; c <= all; ++c) {
        const bool b1 = c & 2u, b2 = c & 4u;
        if (b1 && !b2) phi[c] = phi[(c & ~Coalition{2}) | 4u];
      }
    }
    const auto psi = shapley_from_table(n, phi);
    const double total = std::accumulate(psi.begin(), psi.end(), 0.0);
    REQUIRE(std::abs(total - (phi[all] - phi[0])) <= 1e-9 * std::max(1.0, std::abs(phi[all])));
    REQUIRE(std::abs(psi[0]) < 1e-9);
    if (n >= 3) REQUIRE(std::abs(psi[1] - psi[2]) < 1e-9);
  }
}

TEST_CASE("degenerate tables") {
  CHECK(shapley_from_table(0, {5.0}).empty());
  CHECK(shapley_from_table(1, {3.0, 10.0})[0] == 7.0);
  CHECK_THROWS_AS(shapley_from_table(2, {1.0, 2.0, 3.0}), Error);
}

TEST_CASE("case9 DC game") {
  auto net = builtin("case9");
  Game game(net, dc_players(*net), Formulation::dc);
  const Allocation a = shapley_values(game);
  CHECK(game.cache().size() == 4);
  CHECK(a.branches == std::vector<int>{0, 1});
  CHECK(std::abs(a.values[0]) < 1.0);
  CHECK(a.values[1] > a.values[0]);
  CHECK(a.values[0] + a.values[1] == doctest::Approx(a.redispatch_cost).epsilon(1e-9));
  CHECK(a.total_cost == doctest::Approx(game.characteristic_cost(3)));
  CHECK(a.baseline_cost == doctest::Approx(game.characteristic_cost(0)));
  CHECK(a.warnings.empty());
  CHECK(game.solution(0).has_value());
  CHECK(game.solution(3).has_value());
}

TEST_CASE("single player value is its marginal cost") {
  auto net = builtin("case9");
  CongestionSet one = dc_players(*net);
  one.players.resize(1);
  Game game(net, one, Formulation::dc);
  const Allocation a = shapley_values(game);
  REQUIRE(a.values.size() == 1);
  CHECK(a.values[0] == doctest::Approx(game.characteristic_cost(1) - game.characteristic_cost(0)));
}

TEST_CASE("no players") {
  auto net = builtin("case9");
  Game game(net, CongestionSet{}, Formulation::dc);
  const Allocation a = shapley_values(game);
  CHECK(a.values.empty());
  CHECK(a.redispatch_cost == 0.0);
  CHECK(game.cache().size() == 1);
}

TEST_CASE("player cap") {
  auto net = builtin("case9");
  GameOptions opt;
  opt.max_players = 1;
  try {
    Game game(net, dc_players(*net), Formulation::dc, opt);
    FAIL("expected the cap to trigger");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::player_cap_exceeded);
  }
}

TEST_CASE("workers and warm starts do not change the values") {
  auto net = builtin("case300");
  const CongestionSet players = dc_players(*net);
  REQUIRE(players.size() == 2);
  GameOptions serial, parallel, cold;
  parallel.workers = 3;
  cold.warm_start = false;
  Game a(net, players, Formulation::dc, serial), b(net, players, Formulation::dc, parallel),
      c(net, players, Formulation::dc, cold);
  const Allocation x = shapley_values(a), y = shapley_values(b), z = shapley_values(c);
  for (int k = 0; k < 2; ++k) {
    CHECK(x.values[k] == y.values[k]);
    CHECK(x.values[k] == doctest::Approx(z.values[k]).epsilon(1e-6));
  }
  CHECK(b.cache().size() == 4);
}

TEST_CASE("cache export and import") {
  auto net = builtin("case9");
  const CongestionSet players = dc_players(*net);
  Game first(net, players, Formulation::dc);
  const Allocation a = shapley_values(first);
  const nlohmann::json saved = first.export_cache();

  int solves = 0;
  GameOptions counting;
  counting.on_solve = [&](Coalition, const OpfSolution&) { ++solves; };
  Game second(net, players, Formulation::dc, counting);
  CHECK(second.import_cache(saved) == 4);
  const Allocation b = shapley_values(second);
  CHECK(solves == 0);
  CHECK(a.values == b.values);

  Game other(net, players, Formulation::ac);
  CHECK_THROWS_AS(other.import_cache(saved), Error);
  nlohmann::json broken = saved;
  broken["players"] = {1};
  CHECK_THROWS_AS(second.import_cache(broken), Error);
  CHECK_THROWS_AS(second.import_cache(nlohmann::json::object()), Error);
}

TEST_CASE("failed characteristic solves abort with the coalition") {
  // AC case39 cannot meet the 100 MVA limit on line 1.
  auto net = builtin("case39");
  const CongestionSet players = detect_congestions(*net, ac_power_flow(*net));
  REQUIRE_FALSE(players.empty());
  Game game(net, players, Formulation::ac);
  try {
    shapley_values(game);
    FAIL("expected a failure");
  } catch (const CoalitionFailure& e) {
    CHECK(e.kind() == ErrorKind::opf_failure);
    CHECK(e.coalition() == game.grand_coalition());
    CHECK(e.status() == OpfStatus::infeasible);
  }
}

TEST_CASE("negative values are reported, not clamped") {
  auto g = synthetic_game({100.0, 90.0, 120.0, 115.0});
  const Allocation a = shapley_values(*g);
  CHECK(a.values[0] < 0.0);
  REQUIRE(a.warnings.size() == 1);
  CHECK(a.warnings[0].find("line 1") != std::string::npos);
}

TEST_CASE("coalitions outside the player set are rejected") {
  auto g = synthetic_game({1.0, 2.0, 3.0, 4.0});
  CHECK_THROWS_AS(g->characteristic_cost(4), Error);
  CHECK_THROWS_AS(g->mask(8), Error);
}

TEST_CASE("grouping by operator") {
  Allocation a;
  a.branches = {0, 1, 5, 9};
  a.values = {1.5, 20.0, 0.25, 7.0};
  a.redispatch_cost = 28.75;
  SUBCASE("one zone") {
    const auto t = group_by_operator(a, {{0, 1}, {1, 1}, {5, 1}, {9, 1}});
    REQUIRE(t.size() == 1);
    CHECK(t.at(1) == a.redispatch_cost);
  }
  SUBCASE("empty") { CHECK(group_by_operator(Allocation{}, {}).empty()); }
  SUBCASE("random partitions re-add") {
    std::mt19937 rng(8);
    std::uniform_int_distribution<int> zone(0, 2);
    for (int trial = 0; trial < 100; ++trial) {
      std::map<int, int> m;
      for (int b : a.branches) m[b] = zone(rng);
      double sum = 0.0;
      for (const auto& [z, v] : group_by_operator(a, m)) sum += v;
      CHECK(sum == doctest::Approx(28.75).epsilon(1e-15));
    }
  }
  SUBCASE("unmapped") { CHECK_THROWS_AS(group_by_operator(a, {{0, 1}}), Error); }
}

TEST_CASE("cache tolerates concurrent inserts") {
  CharacteristicCache cache;
  std::vector<std::jthread> threads;
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&cache, t] {
      for (Coalition c = 0; c < 1000; ++c)
        if (c % 4 == static_cast<Coalition>(t)) cache.insert(c, {static_cast<double>(c)});
    });
  threads.clear();
  CHECK(cache.size() == 1000);
  CHECK(cache.find(777)->cost == 777.0);
  cache.insert(777, {1.0});
  CHECK(cache.find(777)->cost == 777.0);
}
