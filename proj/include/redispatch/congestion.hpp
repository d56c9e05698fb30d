#pragma once

#include <vector>

#include "redispatch/grid_model.hpp"
#include "redispatch/power_flow.hpp"

namespace redispatch {

struct Player {
  int branch = 0;         // 0-based branch index
  double limit = 0.0;     // MVA (MW for DC)
  double flow = 0.0;      // worse end, MVA (|p| in MW for DC)
  double overload = 0.0;  // flow − limit

  int line_number() const noexcept { return branch + 1; }
};

/// Overloaded lines of a base-case power flow, ascending by branch index.
struct CongestionSet {
  std::vector<Player> players;

  int size() const noexcept { return static_cast<int>(players.size()); }
  bool empty() const noexcept { return players.empty(); }
  std::vector<int> branches() const;
};

/// Flow compared against a branch limit: max(|p_from|, |p_to|) for DC,
/// max(s_from, s_to) for AC.
double limit_flow(const BranchFlow& flow, Formulation formulation) noexcept;

/// Limited in-service lines whose flow exceeds s̄·(1 + tolerance_rel).
/// Throws Error(invalid_input) if the power flow did not converge or does
/// not match the network.
CongestionSet detect_congestions(const Network& net, const PowerFlowSolution& pf,
                                 double tolerance_rel = 1e-4);

}  // namespace redispatch
