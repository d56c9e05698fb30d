#include "redispatch/shapley.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include <fmt/format.h>

namespace redispatch {

namespace {

std::string describe_coalition(const CongestionSet& players, Coalition c) {
  std::string lines;
  for (int k = 0; k < players.size(); ++k) {
    if (!((c >> k) & 1u)) continue;
    if (!lines.empty()) lines += ",";
    lines += std::to_string(players.players[k].line_number());
  }
  return fmt::format("coalition {:#x} (lines {{{}}})", c, lines);
}

}  // namespace

std::optional<CoalitionValue> CharacteristicCache::find(Coalition c) const {
  std::lock_guard lock(mutex_);
  auto it = values_.find(c);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void CharacteristicCache::insert(Coalition c, const CoalitionValue& v) {
  std::lock_guard lock(mutex_);
  values_.emplace(c, v);
}

std::size_t CharacteristicCache::size() const {
  std::lock_guard lock(mutex_);
  return values_.size();
}

std::map<Coalition, CoalitionValue> CharacteristicCache::snapshot() const {
  std::lock_guard lock(mutex_);
  return values_;
}

void CharacteristicCache::clear() {
  std::lock_guard lock(mutex_);
  values_.clear();
}

Game::Game(std::shared_ptr<const Network> net, CongestionSet players, Formulation formulation,
           GameOptions options)
    : net_(std::move(net)),
      players_(std::move(players)),
      formulation_(formulation),
      options_(std::move(options)) {
  if (!net_) throw Error(ErrorKind::invalid_input, "game without a network");
  if (options_.workers < 1) throw Error(ErrorKind::invalid_input, "worker count must be at least 1");
  const int cap = std::min(options_.max_players, 62);
  if (players_.size() > cap) {
    throw Error(ErrorKind::player_cap_exceeded,
                fmt::format("{} congested lines exceed the enumeration cap of {}", players_.size(), cap));
  }
  for (int k = 0; k < players_.size(); ++k) {
    const int b = players_.players[k].branch;
    if (b < 0 || b >= net_->branch_count() || !net_->branches[b].limited())
      throw Error(ErrorKind::invalid_input, fmt::format("player {} is not a limited branch", b + 1));
    if (k > 0 && b <= players_.players[k - 1].branch)
      throw Error(ErrorKind::invalid_input, "players must be in ascending branch order");
  }
}

Coalition Game::grand_coalition() const noexcept {
  return player_count() == 0 ? 0 : (~Coalition{0} >> (64 - player_count()));
}

LimitMask Game::mask(Coalition c) const {
  if (c & ~grand_coalition()) throw Error(ErrorKind::invalid_input, "coalition outside the player set");
  return LimitMask::for_coalition(*net_, players_.branches(), c);
}

OpfSolution Game::solve(Coalition c) {
  const OpfProblem problem{net_, mask(c), formulation_};
  if (options_.warm_start && c != grand_coalition()) {
    OpfSolution s = solve_opf(problem, OpfStart::given(grand_solution()), options_.opf);
    if (s.status == OpfStatus::optimal) return s;
    OpfSolution cold = solve_opf(problem, OpfStart::flat(), options_.opf);
    cold.iterations += s.iterations;
    cold.wall_time += s.wall_time;
    return cold;
  }
  return solve_opf(problem, OpfStart::flat(), options_.opf);
}

double Game::record(Coalition c, const OpfSolution& s) {
  if (options_.on_solve) options_.on_solve(c, s);
  if (s.status != OpfStatus::optimal) {
    throw CoalitionFailure(c, s.status,
                           fmt::format("OPF for {} ended with status {}: {}",
                                       describe_coalition(players_, c), to_string(s.status), s.message));
  }
  cache_.insert(c, {s.objective, s.status, s.iterations, s.wall_time});
  if (c == 0 || c == grand_coalition()) {
    std::lock_guard lock(kept_mutex_);
    kept_.emplace(c, s);
  }
  return s.objective;
}

const OpfSolution& Game::grand_solution() {
  std::call_once(grand_once_, [this] {
    const Coalition g = grand_coalition();
    OpfSolution s = solve_opf({net_, mask(g), formulation_}, OpfStart::flat(), options_.opf);
    grand_ = s;
    if (s.status == OpfStatus::optimal && !cache_.find(g)) record(g, s);
  });
  if (grand_->status != OpfStatus::optimal) {
    const Coalition g = grand_coalition();
    throw CoalitionFailure(g, grand_->status,
                           fmt::format("OPF for {} ended with status {}: {}",
                                       describe_coalition(players_, g), to_string(grand_->status),
                                       grand_->message));
  }
  return *grand_;
}

std::optional<OpfSolution> Game::solution(Coalition c) const {
  std::lock_guard lock(kept_mutex_);
  auto it = kept_.find(c);
  if (it == kept_.end()) return std::nullopt;
  return it->second;
}

double Game::characteristic_cost(Coalition c) {
  if (c & ~grand_coalition()) throw Error(ErrorKind::invalid_input, "coalition outside the player set");
  if (auto v = cache_.find(c)) return v->cost;
  if (c == grand_coalition()) return grand_solution().objective;
  return record(c, solve(c));
}

void Game::evaluate_all() {
  const Coalition g = grand_coalition();
  std::vector<Coalition> todo;
  for (Coalition c = 0;; ++c) {
    if (!cache_.find(c)) todo.push_back(c);
    if (c == g) break;
  }
  if (todo.empty()) return;
  // The grand coalition first: every other solve starts from it.
  characteristic_cost(g);
  std::erase(todo, g);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      try {
        characteristic_cost(todo[i]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  const int n = std::min<int>(options_.workers, static_cast<int>(todo.size()));
  if (n <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
}

nlohmann::json Game::export_cache() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [c, v] : cache_.snapshot()) {
    entries.push_back({{"coalition", c},
                       {"cost", v.cost},
                       {"status", to_string(v.status)},
                       {"iterations", v.iterations},
                       {"wall_time", v.wall_time}});
  }
  std::vector<int> lines;
  for (const auto& p : players_.players) lines.push_back(p.line_number());
  return {{"case", net_->name},
          {"formulation", to_string(formulation_)},
          {"players", lines},
          {"entries", entries}};
}

int Game::import_cache(const nlohmann::json& j) {
  std::vector<int> lines;
  for (const auto& p : players_.players) lines.push_back(p.line_number());
  try {
    if (j.at("case").get<std::string>() != net_->name)
      throw Error(ErrorKind::invalid_input, "cache belongs to case " + j.at("case").get<std::string>());
    if (j.at("formulation").get<std::string>() != to_string(formulation_))
      throw Error(ErrorKind::invalid_input, "cache belongs to the other formulation");
    if (j.at("players").get<std::vector<int>>() != lines)
      throw Error(ErrorKind::invalid_input, "cache has a different player set");
    int loaded = 0;
    for (const auto& e : j.at("entries")) {
      const Coalition c = e.at("coalition").get<Coalition>();
      if (c & ~grand_coalition()) throw Error(ErrorKind::invalid_input, "cache entry outside the player set");
      if (e.at("status").get<std::string>() != to_string(OpfStatus::optimal)) continue;
      cache_.insert(c, {e.at("cost").get<double>(), OpfStatus::optimal, e.value("iterations", 0),
                        e.value("wall_time", 0.0)});
      ++loaded;
    }
    return loaded;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::invalid_input, std::string("malformed cache: ") + ex.what());
  }
}

double shapley_weight(int players, int coalition_size) {
  if (players < 1 || coalition_size < 0 || coalition_size >= players) return 0.0;
  // 1 / (n · C(n−1, s))
  double binom = 1.0;
  const int s = std::min(coalition_size, players - 1 - coalition_size);
  for (int i = 1; i <= s; ++i) binom = binom * (players - s - 1 + i) / i;
  return 1.0 / (players * binom);
}

std::vector<double> shapley_from_table(int players, const std::vector<double>& phi) {
  if (players < 0 || players > 62 || phi.size() != (std::size_t{1} << players))
    throw Error(ErrorKind::invalid_input, "characteristic table size must be 2^players");
  std::vector<double> weight(players);
  for (int s = 0; s < players; ++s) weight[s] = shapley_weight(players, s);
  std::vector<double> psi(players, 0.0);
  const Coalition all = phi.size() - 1;
  for (int k = 0; k < players; ++k) {
    const Coalition bit = Coalition{1} << k;
    double sum = 0.0;
    for (Coalition c = 0; c <= all; ++c) {
      if (c & bit) continue;
      sum += weight[coalition_size(c)] * (phi[c | bit] - phi[c]);
    }
    psi[k] = sum;
  }
  return psi;
}

Allocation shapley_values(Game& game, double negative_tolerance) {
  game.evaluate_all();
  const int n = game.player_count();
  std::vector<double> phi(std::size_t{1} << n);
  for (Coalition c = 0; c < phi.size(); ++c) phi[c] = game.characteristic_cost(c);

  Allocation a;
  a.branches = game.players().branches();
  a.values = shapley_from_table(n, phi);
  a.total_cost = phi.back();
  a.baseline_cost = phi.front();
  a.redispatch_cost = a.total_cost - a.baseline_cost;
  const double floor = -negative_tolerance * std::max(1.0, std::abs(a.total_cost));
  for (int k = 0; k < n; ++k) {
    if (a.values[k] < floor) {
      a.warnings.push_back(fmt::format("negative Shapley value {:.4f} $/h for line {}", a.values[k],
                                       a.branches[k] + 1));
    }
  }
  return a;
}

std::map<int, double> group_by_operator(const Allocation& alloc,
                                        const std::map<int, int>& operator_of_branch) {
  std::map<int, double> total;
  for (std::size_t k = 0; k < alloc.branches.size(); ++k) {
    auto it = operator_of_branch.find(alloc.branches[k]);
    if (it == operator_of_branch.end())
      throw Error(ErrorKind::invalid_input, fmt::format("line {} has no operator", alloc.branches[k] + 1));
    total[it->second] += alloc.values[k];
  }
  return total;
}

}  // namespace redispatch
