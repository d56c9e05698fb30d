#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "redispatch/grid_model.hpp"
#include "redispatch/ipm.hpp"
#include "redispatch/power_flow.hpp"

namespace redispatch {

/// Branches whose flow limit is enforced; limited branches outside the mask
/// are optimized as if unlimited.
class LimitMask {
 public:
  LimitMask() = default;
  /// Throws Error(invalid_input) if a branch is out of range or unlimited.
  LimitMask(const Network& net, std::vector<int> enforced);

  /// Every branch with s_limit > 0.
  static LimitMask all(const Network& net);
  /// All limited branches except the players whose bit is clear in
  /// `coalition` (bit k ⇔ players[k]).
  static LimitMask for_coalition(const Network& net, const std::vector<int>& players,
                                 std::uint64_t coalition);

  const std::vector<int>& enforced() const noexcept { return enforced_; }
  bool contains(int branch) const;

 private:
  std::vector<int> enforced_;  // ascending
};

struct OpfProblem {
  std::shared_ptr<const Network> net;
  LimitMask mask;
  Formulation formulation = Formulation::dc;
};

enum class OpfStatus { optimal, infeasible, iteration_limit, numerical_failure };

const char* to_string(OpfStatus s) noexcept;

struct OpfSolution {
  Formulation formulation = Formulation::dc;
  OpfStatus status = OpfStatus::numerical_failure;
  std::vector<double> angles;      // rad
  std::vector<double> magnitudes;  // pu; 1 for DC
  std::vector<double> gen_p;       // MW per generator, 0 when out of service
  std::vector<double> gen_q;       // MVAr; 0 for DC
  std::vector<BranchFlow> flows;
  double objective = 0.0;          // $/h, unperturbed generation cost
  KktResiduals kkt;                // of the scaled problem, per-unit
  int iterations = 0;
  double wall_time = 0.0;          // s
  std::string message;
  IpmState state;                  // restart point
};

enum class StartKind { flat, pf_warm, given };

struct OpfStart {
  StartKind kind = StartKind::flat;
  /// For `given`: primal point, plus multipliers for rows the problems share.
  const OpfSolution* from = nullptr;

  static OpfStart flat() { return {}; }
  static OpfStart pf_warm() { return {StartKind::pf_warm, nullptr}; }
  static OpfStart given(const OpfSolution& s) { return {StartKind::given, &s}; }
};

struct OpfOptions {
  IpmOptions ipm;
  /// Objective multiplier applied inside the solver ($/h → solver units).
  double cost_scale = 1e-4;
  /// Lexicographic tie-break: generator k pays an extra k·tie_break $/MWh.
  double tie_break = 1e-9;
  /// After a failed solve, retry with `fallback_centering` from the same
  /// start and, for AC, from a power flow solution.
  bool retry_on_failure = true;
  double fallback_centering = 0.1;
  /// Run the elastic feasibility problem after a failed solve to tell
  /// infeasible problems from solver failures.
  bool detect_infeasibility = true;
  double infeasibility_threshold = 1e-5;  // pu of total violation
};

/// The NLP behind an OPF problem, exposed for derivative checks.
/// Variables: AC (θ, v, p_g, q_g), DC (θ, p_g), per-unit, active generators
/// only, in file order.
std::unique_ptr<NlpProblem> make_opf_nlp(const OpfProblem& problem, const OpfOptions& options = {});

OpfSolution solve_dc_opf(const OpfProblem& problem, const OpfOptions& options = {});
OpfSolution solve_ac_opf(const OpfProblem& problem, const OpfStart& start = {},
                         const OpfOptions& options = {});
/// Dispatches on problem.formulation; DC ignores `start` except `given`.
OpfSolution solve_opf(const OpfProblem& problem, const OpfStart& start = {},
                      const OpfOptions& options = {});

/// Worst violation of each AC constraint family, per-unit.
struct FeasibilityReport {
  double p_balance = 0.0;
  double q_balance = 0.0;
  double flow_limit = 0.0;  // max(s_end − s̄) over limited branches, both ends
  double v_bounds = 0.0;
  double p_bounds = 0.0;
  double q_bounds = 0.0;
  std::vector<int> violated;  // families over tolerance, in field order (0..5)

  double worst() const noexcept;
};

/// Evaluates the AC constraints at a candidate. DC candidates are embedded
/// with v ≡ 1 and the total reactive load shared among dispatched generators
/// in proportion to their active output. Flow limits are checked on the
/// limited branches in `mask`, or on all limited branches if none is given.
FeasibilityReport check_ac_feasibility(const Network& net, const OpfSolution& candidate,
                                       double tolerance = 1e-6,
                                       const std::optional<LimitMask>& mask = std::nullopt);

}  // namespace redispatch
