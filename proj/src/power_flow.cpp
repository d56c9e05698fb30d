#include "redispatch/power_flow.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "redispatch/error.hpp"

namespace redispatch {

DcNetwork dc_network(const Network& net) {
  const int nb = net.bus_count();
  DcNetwork s;
  s.shift_injection = Vector::Zero(nb);
  s.susceptance.assign(net.branch_count(), 0.0);
  std::vector<Triplet> t;
  t.reserve(4 * net.branches.size());
  for (int k = 0; k < net.branch_count(); ++k) {
    const Branch& br = net.branches[k];
    if (!br.in_service) continue;
    const double b = 1.0 / (br.x * br.tap);
    s.susceptance[k] = b;
    t.insert(t.end(), {{br.from, br.from, b}, {br.to, br.to, b}, {br.from, br.to, -b}, {br.to, br.from, -b}});
    s.shift_injection[br.from] -= b * br.shift;
    s.shift_injection[br.to] += b * br.shift;
  }
  s.b_bus = assemble(nb, nb, t);
  return s;
}

namespace {

// Scheduled net injection per bus (pu) from generator set points and loads.
Vector scheduled_p(const Network& net) {
  Vector p = Vector::Zero(net.bus_count());
  for (const Generator& g : net.generators) {
    if (g.in_service) p[g.bus] += g.p;
  }
  for (int i = 0; i < net.bus_count(); ++i) {
    p[i] -= net.buses[i].p_load + net.buses[i].shunt_g;
  }
  return p;
}

PowerFlowSolution solve_dc(const Network& net, const Vector& injections) {
  const int nb = net.bus_count();
  if (injections.size() != nb) {
    throw Error(ErrorKind::invalid_input, "injection vector has wrong dimension");
  }
  const int slack = net.slack_bus();
  const DcNetwork sys = dc_network(net);

  PowerFlowSolution sol;
  sol.formulation = Formulation::dc;
  sol.angles.assign(nb, 0.0);
  sol.magnitudes.assign(nb, 1.0);

  if (nb > 1) {
    // Reduced system without the slack row/column.
    std::vector<int> pos(nb, -1);
    for (int i = 0, k = 0; i < nb; ++i) {
      if (i != slack) pos[i] = k++;
    }
    std::vector<Triplet> t;
    for (int c = 0; c < sys.b_bus.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(sys.b_bus, c); it; ++it) {
        if (pos[it.row()] >= 0 && pos[c] >= 0) t.push_back({pos[it.row()], pos[c], it.value()});
      }
    }
    const SparseMatrix reduced = assemble(nb - 1, nb - 1, t);
    Vector rhs(nb - 1);
    for (int i = 0; i < nb; ++i) {
      if (pos[i] >= 0) rhs[pos[i]] = injections[i] - sys.shift_injection[i];
    }
    const LuFactorization lu = lu_factorize(reduced);
    if (lu.singular()) {
      throw Error(ErrorKind::singular_matrix, "DC power flow: B' is singular (islanded network?)");
    }
    const Vector theta = lu.solve(rhs);
    for (int i = 0; i < nb; ++i) {
      if (pos[i] >= 0) sol.angles[i] = theta[pos[i]];
    }
  }

  sol.flows.resize(net.branch_count());
  for (int k = 0; k < net.branch_count(); ++k) {
    const Branch& br = net.branches[k];
    if (!br.in_service) continue;
    const double p = net.to_mw(sys.susceptance[k] * (sol.angles[br.from] - sol.angles[br.to] - br.shift));
    BranchFlow& f = sol.flows[k];
    f.p_from = p;
    f.p_to = -p;
    f.s_from = f.s_to = std::abs(p);
  }
  double slack_inj = sys.shift_injection[slack];
  for (int c = 0; c < sys.b_bus.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(sys.b_bus, c); it; ++it) {
      if (it.row() == slack) slack_inj += it.value() * sol.angles[c];
    }
  }
  sol.slack_p = net.to_mw(slack_inj);
  sol.converged = true;
  return sol;
}

}  // namespace

PowerFlowSolution dc_power_flow(const Network& net, const Vector& injections) {
  PowerFlowSolution sol = solve_dc(net, injections);
  sol.gen_p.assign(net.generator_count(), 0.0);
  sol.gen_q.assign(net.generator_count(), 0.0);
  return sol;
}

PowerFlowSolution dc_power_flow(const Network& net) {
  PowerFlowSolution sol = solve_dc(net, scheduled_p(net));
  const int slack = net.slack_bus();
  sol.gen_p.assign(net.generator_count(), 0.0);
  sol.gen_q.assign(net.generator_count(), 0.0);
  int slack_gen = -1;
  double fixed_at_slack = 0.0;
  for (int k = 0; k < net.generator_count(); ++k) {
    const Generator& g = net.generators[k];
    if (!g.in_service) continue;
    sol.gen_p[k] = net.to_mw(g.p);
    if (g.bus == slack) {
      if (slack_gen < 0) slack_gen = k;
      else fixed_at_slack += g.p;
    }
  }
  if (slack_gen >= 0) {
    const Bus& b = net.buses[slack];
    sol.gen_p[slack_gen] = sol.slack_p + net.to_mw(b.p_load + b.shunt_g - fixed_at_slack);
  }
  return sol;
}

namespace {

struct BusSplit {
  std::vector<int> pv, pq;  // non-slack buses by current role
};

// Distributes a bus total over the bus's active generators evenly.
void split_over_generators(const Network& net, int bus, double total_mw,
                           std::vector<double>& out) {
  int count = 0;
  for (const Generator& g : net.generators) count += g.in_service && g.bus == bus;
  if (count == 0) return;
  for (int k = 0; k < net.generator_count(); ++k) {
    const Generator& g = net.generators[k];
    if (g.in_service && g.bus == bus) out[k] = total_mw / count;
  }
}

struct NewtonResult {
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;
};

NewtonResult newton(const AcNetworkEquations& eq, const BusSplit& split, const Vector& p_sched,
                    const Vector& q_sched, std::vector<double>& th, std::vector<double>& v,
                    const PowerFlowOptions& opt) {
  const int nb = eq.bus_count();
  std::vector<int> pvpq = split.pv;
  pvpq.insert(pvpq.end(), split.pq.begin(), split.pq.end());
  const int n_th = static_cast<int>(pvpq.size());
  const int n = n_th + static_cast<int>(split.pq.size());
  // Maps from full (θ, v) / (P, Q) indices to reduced positions.
  std::vector<int> pos(2 * nb, -1);
  for (int k = 0; k < n_th; ++k) pos[pvpq[k]] = k;
  for (std::size_t k = 0; k < split.pq.size(); ++k) pos[nb + split.pq[k]] = n_th + static_cast<int>(k);

  NewtonResult r;
  Vector p, q, f(n);
  int growth = 0;
  for (;;) {
    eq.injections(th, v, p, q);
    for (int k = 0; k < n_th; ++k) f[k] = p[pvpq[k]] - p_sched[pvpq[k]];
    for (std::size_t k = 0; k < split.pq.size(); ++k) {
      f[n_th + k] = q[split.pq[k]] - q_sched[split.pq[k]];
    }
    const double mis = n == 0 ? 0.0 : f.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(mis)) {
      throw Error(ErrorKind::power_flow_divergence, "AC power flow: non-finite mismatch");
    }
    if (!r.history.empty() && mis > r.history.back()) {
      if (++growth >= 3) {
        r.history.push_back(mis);
        throw Error(ErrorKind::power_flow_divergence,
                    "AC power flow diverged: mismatch grew for 3 consecutive iterations (" +
                        std::to_string(mis) + " pu)");
      }
    } else {
      growth = 0;
    }
    r.history.push_back(mis);
    if (mis <= opt.tolerance) {
      r.converged = true;
      return r;
    }
    if (r.iterations >= opt.max_iterations) return r;

    std::vector<Triplet> jt;
    for (const Triplet& e : eq.jacobian(th, v)) {
      const int row = pos[e.row], col = pos[e.col];
      if (row >= 0 && col >= 0) jt.push_back({row, col, e.value});
    }
    const LuFactorization lu = lu_factorize(assemble(n, n, jt));
    if (lu.singular()) {
      throw Error(ErrorKind::singular_matrix, "AC power flow: singular Jacobian");
    }
    const Vector dx = lu.solve(-f);
    for (int k = 0; k < n_th; ++k) th[pvpq[k]] += dx[k];
    for (std::size_t k = 0; k < split.pq.size(); ++k) v[split.pq[k]] += dx[n_th + k];
    ++r.iterations;
  }
}

}  // namespace

PowerFlowSolution ac_power_flow(const Network& net, const std::optional<WarmStart>& start,
                                const PowerFlowOptions& opt) {
  const int nb = net.bus_count();
  const int slack = net.slack_bus();
  const AcNetworkEquations eq(net);

  std::vector<char> has_gen(nb, 0);
  std::vector<double> v_set(nb, 1.0);
  for (const Generator& g : net.generators) {
    if (!g.in_service || has_gen[g.bus]) continue;
    has_gen[g.bus] = 1;
    v_set[g.bus] = g.v_set;
  }
  std::vector<char> is_pv(nb, 0);
  for (int i = 0; i < nb; ++i) {
    is_pv[i] = i != slack && net.buses[i].kind == BusKind::pv && has_gen[i];
  }

  std::vector<double> th(nb, 0.0), v(nb, 1.0);
  if (start) {
    if (static_cast<int>(start->angles.size()) != nb || static_cast<int>(start->magnitudes.size()) != nb) {
      throw Error(ErrorKind::invalid_input, "warm start has wrong dimension");
    }
    th = start->angles;
    v = start->magnitudes;
  }
  for (int i = 0; i < nb; ++i) {
    if (is_pv[i] || (i == slack && has_gen[i])) v[i] = v_set[i];
  }
  th[slack] = 0.0;

  Vector p_sched = Vector::Zero(nb), q_sched = Vector::Zero(nb);
  std::vector<double> fixed_q(net.generator_count(), std::nan(""));
  const auto schedule = [&] {
    p_sched.setZero();
    q_sched.setZero();
    for (int k = 0; k < net.generator_count(); ++k) {
      const Generator& g = net.generators[k];
      if (!g.in_service) continue;
      p_sched[g.bus] += g.p;
      q_sched[g.bus] += std::isnan(fixed_q[k]) ? g.q : fixed_q[k];
    }
    for (int i = 0; i < nb; ++i) {
      p_sched[i] -= net.buses[i].p_load;
      q_sched[i] -= net.buses[i].q_load;
    }
  };

  PowerFlowSolution sol;
  sol.formulation = Formulation::ac;
  for (;;) {
    BusSplit split;
    for (int i = 0; i < nb; ++i) {
      if (i == slack) continue;
      (is_pv[i] ? split.pv : split.pq).push_back(i);
    }
    schedule();
    const NewtonResult r = newton(eq, split, p_sched, q_sched, th, v, opt);
    sol.iterations += r.iterations;
    sol.mismatch_history.insert(sol.mismatch_history.end(), r.history.begin(), r.history.end());
    sol.converged = r.converged;
    sol.max_mismatch = r.history.back();
    if (!r.converged || !opt.enforce_q_limits) break;

    Vector p, q;
    eq.injections(th, v, p, q);
    bool switched = false;
    for (int i = 0; i < nb; ++i) {
      if (!is_pv[i]) continue;
      int count = 0;
      for (const Generator& g : net.generators) count += g.in_service && g.bus == i;
      const double per_gen = (q[i] + net.buses[i].q_load) / count;
      bool violated = false;
      for (const Generator& g : net.generators) {
        if (g.in_service && g.bus == i && (per_gen > g.q_max || per_gen < g.q_min)) violated = true;
      }
      if (!violated) continue;
      for (int k = 0; k < net.generator_count(); ++k) {
        const Generator& g = net.generators[k];
        if (g.in_service && g.bus == i) fixed_q[k] = std::clamp(per_gen, g.q_min, g.q_max);
      }
      is_pv[i] = 0;
      switched = true;
    }
    if (!switched) break;
  }

  sol.angles = th;
  sol.magnitudes = v;
  Vector p, q;
  eq.injections(th, v, p, q);
  sol.slack_p = net.to_mw(p[slack]);
  sol.slack_q = net.to_mw(q[slack]);
  sol.gen_p.assign(net.generator_count(), 0.0);
  sol.gen_q.assign(net.generator_count(), 0.0);
  for (int k = 0; k < net.generator_count(); ++k) {
    const Generator& g = net.generators[k];
    if (!g.in_service) continue;
    sol.gen_p[k] = net.to_mw(g.p);
    sol.gen_q[k] = net.to_mw(std::isnan(fixed_q[k]) ? g.q : fixed_q[k]);
  }
  {
    // Slack generators take the balance; among several, the first one.
    int first = -1;
    double others = 0.0;
    for (int k = 0; k < net.generator_count(); ++k) {
      const Generator& g = net.generators[k];
      if (!g.in_service || g.bus != slack) continue;
      if (first < 0) first = k;
      else others += sol.gen_p[k];
    }
    if (first >= 0) sol.gen_p[first] = sol.slack_p + net.to_mw(net.buses[slack].p_load) - others;
  }
  for (int i = 0; i < nb; ++i) {
    if (is_pv[i] || i == slack) {
      split_over_generators(net, i, net.to_mw(q[i] + net.buses[i].q_load), sol.gen_q);
    }
  }
  sol.flows.resize(net.branch_count());
  for (int k = 0; k < net.branch_count(); ++k) sol.flows[k] = branch_flow(net, th, v, k);
  return sol;
}

}  // namespace redispatch
