#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "redispatch/congestion.hpp"
#include "redispatch/error.hpp"
#include "redispatch/opf.hpp"

namespace redispatch {

/// Coalitions are bitmasks: bit k set ⇔ the k-th player (ascending branch
/// index) keeps its limit.
using Coalition = std::uint64_t;

inline int coalition_size(Coalition c) noexcept { return __builtin_popcountll(c); }

/// Raised when a characteristic OPF does not reach optimality.
class CoalitionFailure : public Error {
 public:
  CoalitionFailure(Coalition coalition, OpfStatus status, const std::string& what)
      : Error(ErrorKind::opf_failure, what), coalition_(coalition), status_(status) {}

  Coalition coalition() const noexcept { return coalition_; }
  OpfStatus status() const noexcept { return status_; }

 private:
  Coalition coalition_;
  OpfStatus status_;
};

struct CoalitionValue {
  double cost = 0.0;  // $/h
  OpfStatus status = OpfStatus::optimal;
  int iterations = 0;
  double wall_time = 0.0;  // s
};

/// Memo of Φ. Safe for concurrent use.
class CharacteristicCache {
 public:
  std::optional<CoalitionValue> find(Coalition c) const;
  /// Keeps the first value stored for a key.
  void insert(Coalition c, const CoalitionValue& v);
  std::size_t size() const;
  std::map<Coalition, CoalitionValue> snapshot() const;
  void clear();

 private:
  mutable std::mutex mutex_;
  std::map<Coalition, CoalitionValue> values_;
};

struct GameOptions {
  OpfOptions opf;
  int workers = 1;
  int max_players = 20;
  /// Start coalition solves from the grand-coalition optimum; a failed warm
  /// solve is repeated from the default start.
  bool warm_start = true;
  /// Called after every characteristic solve, possibly from worker threads.
  std::function<void(Coalition, const OpfSolution&)> on_solve;
};

class Game {
 public:
  /// Throws Error(player_cap_exceeded) when there are more players than
  /// options.max_players (and never allows more than 62).
  Game(std::shared_ptr<const Network> net, CongestionSet players, Formulation formulation,
       GameOptions options = {});

  const Network& network() const noexcept { return *net_; }
  const CongestionSet& players() const noexcept { return players_; }
  int player_count() const noexcept { return players_.size(); }
  Formulation formulation() const noexcept { return formulation_; }
  const GameOptions& options() const noexcept { return options_; }
  Coalition grand_coalition() const noexcept;

  /// Limits of every limited line except the players outside `c`.
  LimitMask mask(Coalition c) const;

  /// Memoized Φ(c). Throws CoalitionFailure when the OPF is not optimal.
  double characteristic_cost(Coalition c);
  /// Solves every coalition not yet cached, on options.workers threads.
  void evaluate_all();

  /// OPF solution of the grand coalition, solved on first use.
  const OpfSolution& grand_solution();
  /// Full solutions of Φ(∅) and Φ(grand), if they were solved in this run.
  std::optional<OpfSolution> solution(Coalition c) const;

  CharacteristicCache& cache() noexcept { return cache_; }
  const CharacteristicCache& cache() const noexcept { return cache_; }

  nlohmann::json export_cache() const;
  /// Loads values written by export_cache for the same case, formulation
  /// and players; throws Error(invalid_input) on a mismatch. Returns the
  /// number of entries loaded.
  int import_cache(const nlohmann::json& j);

 private:
  OpfSolution solve(Coalition c);
  double record(Coalition c, const OpfSolution& s);

  std::shared_ptr<const Network> net_;
  CongestionSet players_;
  Formulation formulation_;
  GameOptions options_;
  CharacteristicCache cache_;
  std::once_flag grand_once_;
  std::optional<OpfSolution> grand_;
  mutable std::mutex kept_mutex_;
  std::map<Coalition, OpfSolution> kept_;
};

/// |S|!(n − |S| − 1)!/n!
double shapley_weight(int players, int coalition_size);

/// Exact Shapley values of the game with characteristic table `phi`
/// (size 2^n, indexed by coalition bitmask).
std::vector<double> shapley_from_table(int players, const std::vector<double>& phi);

struct Allocation {
  std::vector<int> branches;  // players, 0-based
  std::vector<double> values;  // Ψ, $/h
  double total_cost = 0.0;     // Φ(grand)
  double baseline_cost = 0.0;  // Φ(∅)
  double redispatch_cost = 0.0;
  std::vector<std::string> warnings;
};

/// Evaluates all coalitions and applies the Shapley formula. Negative values
/// below −negative_tolerance·max(1, |Φ(grand)|) are kept and reported in
/// Allocation::warnings.
Allocation shapley_values(Game& game, double negative_tolerance = 1e-6);

/// Sum of Ψ per operator. Throws Error(invalid_input) for an unmapped player.
std::map<int, double> group_by_operator(const Allocation& alloc,
                                        const std::map<int, int>& operator_of_branch);

}  // namespace redispatch
