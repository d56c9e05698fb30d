#include "redispatch/grid_model.hpp"

#include <cmath>
#include <queue>
#include <string>

#include "redispatch/error.hpp"

namespace redispatch {

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorKind::invalid_input, what);
}

}  // namespace

void Network::validate() const {
  const int nb = bus_count();
  if (nb == 0) invalid("network has no buses");
  if (!(base_mva > 0.0)) invalid("baseMVA must be positive");
  int slacks = 0;
  for (int i = 0; i < nb; ++i) {
    const Bus& b = buses[i];
    if (b.kind == BusKind::slack) ++slacks;
    if (!(b.v_min > 0.0) || b.v_min > b.v_max) {
      invalid("bus " + std::to_string(b.number) + ": need 0 < v_min <= v_max");
    }
  }
  if (slacks != 1) invalid("expected exactly one slack bus, found " + std::to_string(slacks));
  for (int k = 0; k < branch_count(); ++k) {
    const Branch& br = branches[k];
    const std::string tag = "branch " + std::to_string(k + 1);
    if (br.from < 0 || br.from >= nb || br.to < 0 || br.to >= nb) invalid(tag + ": bus index out of range");
    if (br.from == br.to) invalid(tag + ": from and to bus coincide");
    if (br.s_limit < 0.0) invalid(tag + ": negative flow limit");
    if (br.in_service && br.x == 0.0) invalid(tag + ": zero reactance");
    if (!(br.tap > 0.0)) invalid(tag + ": tap ratio must be positive");
  }
  for (int k = 0; k < generator_count(); ++k) {
    const Generator& g = generators[k];
    const std::string tag = "generator " + std::to_string(k + 1);
    if (g.bus < 0 || g.bus >= nb) invalid(tag + ": bus index out of range");
    if (g.p_min > g.p_max) invalid(tag + ": p_min > p_max");
    if (g.q_min > g.q_max) invalid(tag + ": q_min > q_max");
    if (g.cost.a < 0.0) invalid(tag + ": concave cost curve");
  }

  std::vector<std::vector<int>> adj(nb);
  for (const Branch& br : branches) {
    if (!br.in_service) continue;
    adj[br.from].push_back(br.to);
    adj[br.to].push_back(br.from);
  }
  std::vector<char> seen(nb, 0);
  std::queue<int> todo;
  todo.push(slack_bus());
  seen[slack_bus()] = 1;
  int reached = 1;
  while (!todo.empty()) {
    const int i = todo.front();
    todo.pop();
    for (int j : adj[i]) {
      if (!seen[j]) {
        seen[j] = 1;
        ++reached;
        todo.push(j);
      }
    }
  }
  if (reached != nb) {
    invalid("network is not connected: " + std::to_string(nb - reached) +
            " bus(es) unreachable from the slack");
  }
}

int Network::slack_bus() const {
  for (int i = 0; i < bus_count(); ++i) {
    if (buses[i].kind == BusKind::slack) return i;
  }
  invalid("network has no slack bus");
}

std::vector<int> Network::active_generators() const {
  std::vector<int> out;
  for (int k = 0; k < generator_count(); ++k) {
    if (generators[k].in_service) out.push_back(k);
  }
  return out;
}

BranchAdmittance branch_admittance(const Branch& br) {
  using C = std::complex<double>;
  const C ys = 1.0 / C(br.r, br.x);
  const C tap = std::polar(br.tap, br.shift);
  const C ytt = ys + C(0.0, br.charging_b / 2.0);
  return {ytt / (br.tap * br.tap), -ys / std::conj(tap), -ys / tap, ytt};
}

AdmittanceMatrix build_admittance(const Network& net) {
  const int nb = net.bus_count();
  std::vector<Triplet> g, b;
  g.reserve(4 * net.branches.size() + nb);
  b.reserve(4 * net.branches.size() + nb);
  for (int k = 0; k < net.branch_count(); ++k) {
    const Branch& br = net.branches[k];
    if (!br.in_service) continue;
    if (br.r == 0.0 && br.x == 0.0) {
      throw Error(ErrorKind::invalid_input,
                  "branch " + std::to_string(k + 1) + " has zero impedance");
    }
    const BranchAdmittance y = branch_admittance(br);
    const int f = br.from, t = br.to;
    g.insert(g.end(), {{f, f, y.ff.real()}, {f, t, y.ft.real()}, {t, f, y.tf.real()}, {t, t, y.tt.real()}});
    b.insert(b.end(), {{f, f, y.ff.imag()}, {f, t, y.ft.imag()}, {t, f, y.tf.imag()}, {t, t, y.tt.imag()}});
  }
  for (int i = 0; i < nb; ++i) {
    if (net.buses[i].shunt_g != 0.0) g.push_back({i, i, net.buses[i].shunt_g});
    if (net.buses[i].shunt_b != 0.0) b.push_back({i, i, net.buses[i].shunt_b});
  }
  return {assemble(nb, nb, g), assemble(nb, nb, b)};
}

double generation_cost(const Network& net, std::span<const double> p_mw) {
  const std::vector<int> active = net.active_generators();
  if (p_mw.size() != active.size()) {
    throw Error(ErrorKind::invalid_input, "dispatch size does not match active generators");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < active.size(); ++k) {
    total += net.generators[active[k]].cost(p_mw[k]);
  }
  return total;
}

BranchFlowTerms branch_flow_terms(const Branch& br) {
  const BranchAdmittance y = branch_admittance(br);
  const auto term = [](std::complex<double> self, std::complex<double> mutual,
                       bool reactive) {
    return reactive ? EndFlowTerm{-self.imag(), -mutual.imag(), mutual.real()}
                    : EndFlowTerm{self.real(), mutual.real(), mutual.imag()};
  };
  return {term(y.ff, y.ft, false), term(y.ff, y.ft, true),
          term(y.tt, y.tf, false), term(y.tt, y.tf, true)};
}

BranchFlow branch_flow(const Network& net, std::span<const double> angles,
                       std::span<const double> magnitudes, int branch) {
  const Branch& br = net.branches.at(branch);
  BranchFlow out;
  if (!br.in_service) return out;
  const BranchFlowTerms t = branch_flow_terms(br);
  const double tf = angles[br.from], tt = angles[br.to];
  const double vf = magnitudes[br.from], vt = magnitudes[br.to];
  out.p_from = net.to_mw(t.p_from.value(tf, tt, vf, vt));
  out.q_from = net.to_mw(t.q_from.value(tf, tt, vf, vt));
  out.p_to = net.to_mw(t.p_to.value(tt, tf, vt, vf));
  out.q_to = net.to_mw(t.q_to.value(tt, tf, vt, vf));
  out.s_from = std::hypot(out.p_from, out.q_from);
  out.s_to = std::hypot(out.p_to, out.q_to);
  return out;
}

double EndFlowTerm::value(double ta, double tb, double va, double vb) const noexcept {
  const double d = ta - tb;
  return c0 * va * va + va * vb * (c1 * std::cos(d) + c2 * std::sin(d));
}

void EndFlowTerm::gradient(double ta, double tb, double va, double vb,
                           double out[4]) const noexcept {
  const double d = ta - tb;
  const double cs = std::cos(d), sn = std::sin(d);
  const double c = c1 * cs + c2 * sn;   // C(δ)
  const double s = -c1 * sn + c2 * cs;  // dC/dδ
  out[0] = va * vb * s;
  out[1] = -va * vb * s;
  out[2] = 2.0 * c0 * va + vb * c;
  out[3] = va * c;
}

void EndFlowTerm::hessian(double ta, double tb, double va, double vb,
                          double out[16]) const noexcept {
  const double d = ta - tb;
  const double cs = std::cos(d), sn = std::sin(d);
  const double c = c1 * cs + c2 * sn;
  const double s = -c1 * sn + c2 * cs;
  const double h[16] = {
      -va * vb * c, va * vb * c,  vb * s,   va * s,
      va * vb * c,  -va * vb * c, -vb * s,  -va * s,
      vb * s,       -vb * s,      2.0 * c0, c,
      va * s,       -va * s,      c,        0.0,
  };
  for (int i = 0; i < 16; ++i) out[i] = h[i];
}

}  // namespace redispatch

namespace redispatch {

const char* to_string(Formulation f) noexcept { return f == Formulation::dc ? "dc" : "ac"; }

AcNetworkEquations::AcNetworkEquations(const Network& net) : n_(net.bus_count()) {
  for (int k = 0; k < net.branch_count(); ++k) {
    const Branch& br = net.branches[k];
    if (!br.in_service) continue;
    if (br.r == 0.0 && br.x == 0.0) {
      throw Error(ErrorKind::invalid_input,
                  "branch " + std::to_string(k + 1) + " has zero impedance");
    }
    edges_.push_back({br.from, br.to, branch_flow_terms(br)});
  }
  shunt_g_.resize(n_);
  shunt_b_.resize(n_);
  for (int i = 0; i < n_; ++i) {
    shunt_g_[i] = net.buses[i].shunt_g;
    shunt_b_[i] = net.buses[i].shunt_b;
  }
}

void AcNetworkEquations::injections(std::span<const double> th, std::span<const double> v,
                                    Vector& p, Vector& q) const {
  p.resize(n_);
  q.resize(n_);
  for (int i = 0; i < n_; ++i) {
    p[i] = v[i] * v[i] * shunt_g_[i];
    q[i] = -v[i] * v[i] * shunt_b_[i];
  }
  for (const Edge& e : edges_) {
    const int f = e.from, t = e.to;
    p[f] += e.terms.p_from.value(th[f], th[t], v[f], v[t]);
    q[f] += e.terms.q_from.value(th[f], th[t], v[f], v[t]);
    p[t] += e.terms.p_to.value(th[t], th[f], v[t], v[f]);
    q[t] += e.terms.q_to.value(th[t], th[f], v[t], v[f]);
  }
}

std::vector<Triplet> AcNetworkEquations::jacobian(std::span<const double> th,
                                                  std::span<const double> v) const {
  std::vector<Triplet> out;
  out.reserve(16 * edges_.size() + 2 * n_);
  for (int i = 0; i < n_; ++i) {
    out.push_back({i, n_ + i, 2.0 * v[i] * shunt_g_[i]});
    out.push_back({n_ + i, n_ + i, -2.0 * v[i] * shunt_b_[i]});
  }
  double g[4];
  for (const Edge& e : edges_) {
    const int f = e.from, t = e.to;
    const int from_vars[4] = {f, t, n_ + f, n_ + t};
    const int to_vars[4] = {t, f, n_ + t, n_ + f};
    const auto add = [&](const EndFlowTerm& term, int row, const int* vars, int a, int b) {
      term.gradient(th[a], th[b], v[a], v[b], g);
      for (int c = 0; c < 4; ++c) out.push_back({row, vars[c], g[c]});
    };
    add(e.terms.p_from, f, from_vars, f, t);
    add(e.terms.q_from, n_ + f, from_vars, f, t);
    add(e.terms.p_to, t, to_vars, t, f);
    add(e.terms.q_to, n_ + t, to_vars, t, f);
  }
  return out;
}

std::vector<Triplet> AcNetworkEquations::hessian(std::span<const double> th,
                                                 std::span<const double> v,
                                                 std::span<const double> lp,
                                                 std::span<const double> lq) const {
  std::vector<Triplet> out;
  out.reserve(64 * edges_.size() + n_);
  for (int i = 0; i < n_; ++i) {
    const double d = 2.0 * (lp[i] * shunt_g_[i] - lq[i] * shunt_b_[i]);
    if (d != 0.0) out.push_back({n_ + i, n_ + i, d});
  }
  double h[16], acc[16];
  for (const Edge& e : edges_) {
    const int f = e.from, t = e.to;
    // Accumulate all four end terms in the from-end variable order
    // (θf, θt, vf, vt); the to-end terms are evaluated with swapped roles.
    for (double& x : acc) x = 0.0;
    const auto add = [&](const EndFlowTerm& term, double weight, bool swapped) {
      if (weight == 0.0) return;
      if (!swapped) {
        term.hessian(th[f], th[t], v[f], v[t], h);
        for (int c = 0; c < 16; ++c) acc[c] += weight * h[c];
      } else {
        term.hessian(th[t], th[f], v[t], v[f], h);
        static constexpr int perm[4] = {1, 0, 3, 2};
        for (int r = 0; r < 4; ++r) {
          for (int c = 0; c < 4; ++c) acc[4 * perm[r] + perm[c]] += weight * h[4 * r + c];
        }
      }
    };
    add(e.terms.p_from, lp[f], false);
    add(e.terms.q_from, lq[f], false);
    add(e.terms.p_to, lp[t], true);
    add(e.terms.q_to, lq[t], true);
    const int vars[4] = {f, t, n_ + f, n_ + t};
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) {
        if (acc[4 * r + c] != 0.0) out.push_back({vars[r], vars[c], acc[4 * r + c]});
      }
    }
  }
  return out;
}

}  // namespace redispatch
