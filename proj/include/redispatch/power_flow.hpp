#pragma once

#include <optional>
#include <vector>

#include "redispatch/grid_model.hpp"

namespace redispatch {

struct PowerFlowSolution {
  Formulation formulation = Formulation::dc;
  std::vector<double> angles;      // rad
  std::vector<double> magnitudes;  // pu; all 1 for DC
  std::vector<double> gen_p;       // MW per generator (0 for out-of-service units)
  std::vector<double> gen_q;       // MVAr
  double slack_p = 0.0;            // MW, net injection (generation - load) at the slack bus
  double slack_q = 0.0;            // MVAr
  std::vector<BranchFlow> flows;   // per branch, zero for out-of-service ones
  int iterations = 0;
  bool converged = false;
  double max_mismatch = 0.0;             // pu
  std::vector<double> mismatch_history;  // pu, one entry per Newton iterate
};

/// B-θ model: P = B·θ + shift_injection, branch flow b_k·(θ_f − θ_t − φ_k)
/// with b_k = 1/(x_k·τ_k).
struct DcNetwork {
  SparseMatrix b_bus;
  Vector shift_injection;           // pu
  std::vector<double> susceptance;  // per branch, 0 when out of service
};

DcNetwork dc_network(const Network& net);

/// Linear B-θ power flow on the generators' scheduled output; the slack
/// bus absorbs the imbalance and has angle 0. Bus shunt conductance is
/// treated as constant load, series resistance and charging are ignored.
/// Throws Error(singular_matrix) if B' is singular.
PowerFlowSolution dc_power_flow(const Network& net);

/// Same with explicit net bus injections (pu); the slack entry is ignored.
PowerFlowSolution dc_power_flow(const Network& net, const Vector& injections);

struct PowerFlowOptions {
  int max_iterations = 30;
  double tolerance = 1e-8;  // max |mismatch|, pu
  /// Convert PV buses whose generators leave [q_min, q_max] to PQ buses at
  /// the violated limit and re-solve.
  bool enforce_q_limits = false;
};

/// Initial point for Newton; nullopt means flat start (θ = 0, v = 1 with
/// generator set points on PV and slack buses).
struct WarmStart {
  std::vector<double> angles;
  std::vector<double> magnitudes;
};

/// Full Newton-Raphson in polar coordinates. Returns converged = false when
/// the iteration cap is hit. Throws Error(power_flow_divergence) when the
/// mismatch grows three iterations in a row or turns non-finite, and
/// Error(singular_matrix) on a singular Jacobian.
PowerFlowSolution ac_power_flow(const Network& net,
                                const std::optional<WarmStart>& start = std::nullopt,
                                const PowerFlowOptions& options = {});

}  // namespace redispatch
