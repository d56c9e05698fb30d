#include "redispatch/congestion.hpp"

#include <cmath>

#include "redispatch/error.hpp"

namespace redispatch {

std::vector<int> CongestionSet::branches() const {
  std::vector<int> out;
  out.reserve(players.size());
  for (const auto& p : players) out.push_back(p.branch);
  return out;
}

double limit_flow(const BranchFlow& flow, Formulation formulation) noexcept {
  if (formulation == Formulation::dc) return std::max(std::abs(flow.p_from), std::abs(flow.p_to));
  return flow.s_max();
}

CongestionSet detect_congestions(const Network& net, const PowerFlowSolution& pf,
                                 double tolerance_rel) {
  if (!pf.converged) throw Error(ErrorKind::invalid_input, "power flow did not converge");
  if (static_cast<int>(pf.flows.size()) != net.branch_count())
    throw Error(ErrorKind::invalid_input, "power flow does not match the network");
  if (!(tolerance_rel >= 0.0)) throw Error(ErrorKind::invalid_input, "negative tolerance");

  CongestionSet set;
  for (int k = 0; k < net.branch_count(); ++k) {
    const Branch& br = net.branches[k];
    if (!br.in_service || !br.limited()) continue;
    double limit = net.to_mw(br.s_limit);
    double flow = limit_flow(pf.flows[k], pf.formulation);
    if (flow > limit * (1.0 + tolerance_rel)) set.players.push_back({k, limit, flow, flow - limit});
  }
  return set;
}

}  // namespace redispatch
