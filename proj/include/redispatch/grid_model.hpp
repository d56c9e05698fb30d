#pragma once

#include <complex>
#include <string>
#include <vector>

#include "redispatch/numerics.hpp"

namespace redispatch {

enum class BusKind { pq = 1, pv = 2, slack = 3 };

enum class Formulation { dc, ac };

const char* to_string(Formulation f) noexcept;

/// Electrical quantities are per-unit on Network::base_mva unless the name
/// says otherwise.
struct Bus {
  int number = 0;  // external id from the case file
  BusKind kind = BusKind::pq;
  double p_load = 0.0;
  double q_load = 0.0;
  double shunt_g = 0.0;
  double shunt_b = 0.0;
  int area = 1;
  double v_init = 1.0;
  double angle_init = 0.0;  // rad
  double base_kv = 0.0;
  int zone = 1;
  double v_max = 1.1;
  double v_min = 0.9;
};

struct Branch {
  int from = 0;  // bus index
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  double charging_b = 0.0;
  double s_limit = 0.0;  // 0 means unlimited
  double rate_b = 0.0;
  double rate_c = 0.0;
  double tap = 1.0;
  double shift = 0.0;  // rad
  bool in_service = true;
  double angle_min = -360.0;  // degrees, carried through I/O only
  double angle_max = 360.0;

  bool limited() const noexcept { return s_limit > 0.0; }
};

struct CostCurve {
  double a = 0.0;  // $/MW²h
  double b = 0.0;  // $/MWh
  double c = 0.0;  // $/h

  /// Cost in $/h of `p_mw` megawatts.
  double operator()(double p_mw) const noexcept { return (a * p_mw + b) * p_mw + c; }
};

struct Generator {
  int bus = 0;
  double p = 0.0;
  double q = 0.0;
  double q_max = 0.0;
  double q_min = 0.0;
  double v_set = 1.0;
  double m_base = 100.0;  // MVA
  bool in_service = true;
  double p_max = 0.0;
  double p_min = 0.0;
  CostCurve cost;
};

struct Network {
  std::string name;
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;

  int bus_count() const noexcept { return static_cast<int>(buses.size()); }
  int branch_count() const noexcept { return static_cast<int>(branches.size()); }
  int generator_count() const noexcept { return static_cast<int>(generators.size()); }

  double to_pu(double mw) const noexcept { return mw / base_mva; }
  double to_mw(double pu) const noexcept { return pu * base_mva; }

  /// Throws Error(invalid_input) when an invariant is broken: dangling
  /// indices, self loops, zero-impedance in-service branches, bad bounds,
  /// slack count or islanding.
  void validate() const;
  int slack_bus() const;
  /// Indices of in-service generators, in file order.
  std::vector<int> active_generators() const;
};

/// Y = G + jB, both n_bus × n_bus.
struct AdmittanceMatrix {
  SparseMatrix g;
  SparseMatrix b;
};

/// Two-port Π-model admittances of one branch:
///   [I_f]   [y_ff  y_ft] [V_f]
///   [I_t] = [y_tf  y_tt] [V_t]
struct BranchAdmittance {
  std::complex<double> ff, ft, tf, tt;
};

BranchAdmittance branch_admittance(const Branch& br);

/// Out-of-service branches contribute nothing. Throws on an in-service branch
/// with r = x = 0.
AdmittanceMatrix build_admittance(const Network& net);

/// Total cost in $/h; `p_mw` holds one entry per active generator.
double generation_cost(const Network& net, std::span<const double> p_mw);

struct BranchFlow {
  double p_from = 0.0, q_from = 0.0, s_from = 0.0;  // MW, MVAr, MVA
  double p_to = 0.0, q_to = 0.0, s_to = 0.0;

  double s_max() const noexcept { return s_from > s_to ? s_from : s_to; }
};

/// Flows at both ends of `branch` for bus angles (rad) and magnitudes (pu).
BranchFlow branch_flow(const Network& net, std::span<const double> angles,
                       std::span<const double> magnitudes, int branch);

/// One end of a branch as a function of u = (θ_a, θ_b, v_a, v_b):
///   F(u) = c0·v_a² + v_a·v_b·(c1·cos(θ_a − θ_b) + c2·sin(θ_a − θ_b)).
/// Every branch flow (active and reactive, either end) has this shape.
struct EndFlowTerm {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;

  double value(double ta, double tb, double va, double vb) const noexcept;
  void gradient(double ta, double tb, double va, double vb, double out[4]) const noexcept;
  /// Row-major symmetric 4×4.
  void hessian(double ta, double tb, double va, double vb, double out[16]) const noexcept;
};

struct BranchFlowTerms {
  EndFlowTerm p_from, q_from, p_to, q_to;
};

BranchFlowTerms branch_flow_terms(const Branch& br);

/// Bus power injections P_i(θ, v), Q_i(θ, v) (power leaving bus i into the
/// network and its shunt) with first and second derivatives. Variables are
/// ordered (θ_0..θ_{n-1}, v_0..v_{n-1}); equation rows (P_0..P_{n-1},
/// Q_0..Q_{n-1}).
class AcNetworkEquations {
 public:
  explicit AcNetworkEquations(const Network& net);

  int bus_count() const noexcept { return n_; }

  void injections(std::span<const double> theta, std::span<const double> v,
                  Vector& p, Vector& q) const;
  /// 2n × 2n Jacobian of (P, Q) with respect to (θ, v).
  std::vector<Triplet> jacobian(std::span<const double> theta, std::span<const double> v) const;
  /// Σ_i λp_i ∇²P_i + λq_i ∇²Q_i, full (both triangles) 2n × 2n.
  std::vector<Triplet> hessian(std::span<const double> theta, std::span<const double> v,
                               std::span<const double> lambda_p,
                               std::span<const double> lambda_q) const;

 private:
  struct Edge {
    int from, to;
    BranchFlowTerms terms;
  };
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<double> shunt_g_, shunt_b_;
};

}  // namespace redispatch
