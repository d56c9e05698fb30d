#include "redispatch/opf.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "redispatch/error.hpp"

namespace redispatch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Triplet> triplets_of(const SparseMatrix& m, int row_offset = 0, int col_offset = 0) {
  std::vector<Triplet> t;
  t.reserve(m.nonZeros());
  for (int c = 0; c < m.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) {
      t.push_back({static_cast<int>(it.row()) + row_offset, c + col_offset, it.value()});
    }
  }
  return t;
}

}  // namespace

LimitMask::LimitMask(const Network& net, std::vector<int> enforced) : enforced_(std::move(enforced)) {
  std::sort(enforced_.begin(), enforced_.end());
  enforced_.erase(std::unique(enforced_.begin(), enforced_.end()), enforced_.end());
  for (int k : enforced_) {
    if (k < 0 || k >= net.branch_count()) {
      throw Error(ErrorKind::invalid_input, fmt::format("limit mask: no branch {}", k + 1));
    }
    if (!net.branches[k].limited()) {
      throw Error(ErrorKind::invalid_input, fmt::format("limit mask: branch {} has no limit", k + 1));
    }
  }
}

LimitMask LimitMask::all(const Network& net) {
  std::vector<int> e;
  for (int k = 0; k < net.branch_count(); ++k) {
    if (net.branches[k].limited()) e.push_back(k);
  }
  return LimitMask(net, std::move(e));
}

LimitMask LimitMask::for_coalition(const Network& net, const std::vector<int>& players,
                                   std::uint64_t coalition) {
  std::vector<char> dropped(net.branch_count(), 0);
  for (std::size_t k = 0; k < players.size(); ++k) {
    if (!((coalition >> k) & 1u)) dropped.at(players[k]) = 1;
  }
  std::vector<int> e;
  for (int k = 0; k < net.branch_count(); ++k) {
    if (net.branches[k].limited() && !dropped[k]) e.push_back(k);
  }
  return LimitMask(net, std::move(e));
}

bool LimitMask::contains(int branch) const {
  return std::binary_search(enforced_.begin(), enforced_.end(), branch);
}

const char* to_string(OpfStatus s) noexcept {
  switch (s) {
    case OpfStatus::optimal: return "optimal";
    case OpfStatus::infeasible: return "infeasible";
    case OpfStatus::iteration_limit: return "iteration_limit";
    case OpfStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

namespace {

// Pieces shared by both formulations: active generators and the cost.
class OpfNlpBase : public NlpProblem {
 public:
  OpfNlpBase(const OpfProblem& p, const OpfOptions& opt, int pg_offset)
      : net_(p.net), mask_(p.mask), scale_(opt.cost_scale), tie_(opt.tie_break),
        pg_(pg_offset), gens_(p.net->active_generators()) {
    for (int k : mask_.enforced()) {
      if (!net_->branches[k].in_service) continue;
      lines_.push_back(k);
    }
  }

  int gen_count() const { return static_cast<int>(gens_.size()); }
  const std::vector<int>& gens() const { return gens_; }
  int pg_offset() const { return pg_; }

  double objective(const Vector& x) const override {
    double f = 0.0;
    for (int k = 0; k < gen_count(); ++k) {
      const double p = net_->to_mw(x[pg_ + k]);
      f += net_->generators[gens_[k]].cost(p) + tie_ * gens_[k] * p;
    }
    return scale_ * f;
  }

  Vector gradient(const Vector& x) const override {
    Vector d = Vector::Zero(variable_count());
    const double base = net_->base_mva;
    for (int k = 0; k < gen_count(); ++k) {
      const CostCurve& c = net_->generators[gens_[k]].cost;
      const double p = base * x[pg_ + k];
      d[pg_ + k] = scale_ * base * (2.0 * c.a * p + c.b + tie_ * gens_[k]);
    }
    return d;
  }

  std::vector<std::int64_t> inequality_keys() const override {
    std::vector<std::int64_t> keys;
    for (int k : lines_) {
      keys.push_back(2 * static_cast<std::int64_t>(k));
      keys.push_back(2 * static_cast<std::int64_t>(k) + 1);
    }
    return keys;
  }

 protected:
  void add_cost_hessian(std::vector<Triplet>& t) const {
    const double base = net_->base_mva;
    for (int k = 0; k < gen_count(); ++k) {
      const double a = net_->generators[gens_[k]].cost.a;
      if (a != 0.0) t.push_back({pg_ + k, pg_ + k, scale_ * base * base * 2.0 * a});
    }
  }

  std::shared_ptr<const Network> net_;
  LimitMask mask_;
  double scale_, tie_;
  int pg_;
  std::vector<int> gens_;
  std::vector<int> lines_;  // enforced, in service
};

class DcOpfNlp final : public OpfNlpBase {
 public:
  DcOpfNlp(const OpfProblem& p, const OpfOptions& opt)
      : OpfNlpBase(p, opt, p.net->bus_count()), nb_(p.net->bus_count()), dc_(dc_network(*p.net)) {
    fixed_load_ = dc_.shift_injection;
    for (int i = 0; i < nb_; ++i) fixed_load_[i] += net_->buses[i].p_load + net_->buses[i].shunt_g;
    std::vector<Triplet> t = triplets_of(dc_.b_bus);
    for (int k = 0; k < gen_count(); ++k) t.push_back({net_->generators[gens_[k]].bus, pg_ + k, -1.0});
    jg_ = assemble(nb_, variable_count(), t);
    std::vector<Triplet> th;
    for (std::size_t l = 0; l < lines_.size(); ++l) {
      const Branch& br = net_->branches[lines_[l]];
      const double b = dc_.susceptance[lines_[l]];
      const int r = 2 * static_cast<int>(l);
      th.insert(th.end(), {{r, br.from, b}, {r, br.to, -b}, {r + 1, br.from, -b}, {r + 1, br.to, b}});
    }
    jh_ = assemble(inequality_count(), variable_count(), th);
  }

  int variable_count() const override { return nb_ + gen_count(); }
  int equality_count() const override { return nb_; }
  int inequality_count() const override { return 2 * static_cast<int>(lines_.size()); }

  Vector lower_bounds() const override {
    Vector lb(variable_count());
    lb.head(nb_).setConstant(-kInf);
    lb[net_->slack_bus()] = 0.0;
    for (int k = 0; k < gen_count(); ++k) lb[pg_ + k] = net_->generators[gens_[k]].p_min;
    return lb;
  }
  Vector upper_bounds() const override {
    Vector ub(variable_count());
    ub.head(nb_).setConstant(kInf);
    ub[net_->slack_bus()] = 0.0;
    for (int k = 0; k < gen_count(); ++k) ub[pg_ + k] = net_->generators[gens_[k]].p_max;
    return ub;
  }

  void constraints(const Vector& x, Vector& g, Vector& h) const override {
    g = jg_ * x + fixed_load_;
    h = jh_ * x;
    for (std::size_t l = 0; l < lines_.size(); ++l) {
      const Branch& br = net_->branches[lines_[l]];
      const double shift = dc_.susceptance[lines_[l]] * br.shift;
      h[2 * l] -= shift + br.s_limit;
      h[2 * l + 1] += shift - br.s_limit;
    }
  }
  void jacobians(const Vector&, SparseMatrix& jg, SparseMatrix& jh) const override {
    jg = jg_;
    jh = jh_;
  }
  SparseMatrix hessian(const Vector&, const Vector&, const Vector&) const override {
    std::vector<Triplet> t;
    add_cost_hessian(t);
    return assemble(variable_count(), variable_count(), t);
  }

  const DcNetwork& dc() const { return dc_; }

 private:
  int nb_;
  DcNetwork dc_;
  Vector fixed_load_;
  SparseMatrix jg_, jh_;
};

class AcOpfNlp final : public OpfNlpBase {
 public:
  AcOpfNlp(const OpfProblem& p, const OpfOptions& opt)
      : OpfNlpBase(p, opt, 2 * p.net->bus_count()), nb_(p.net->bus_count()), eq_(*p.net) {
    for (int k : lines_) terms_.push_back(branch_flow_terms(net_->branches[k]));
  }

  int qg_offset() const { return pg_ + gen_count(); }
  int variable_count() const override { return 2 * nb_ + 2 * gen_count(); }
  int equality_count() const override { return 2 * nb_; }
  int inequality_count() const override { return 2 * static_cast<int>(lines_.size()); }

  Vector lower_bounds() const override {
    Vector lb(variable_count());
    lb.head(nb_).setConstant(-kInf);
    lb[net_->slack_bus()] = 0.0;
    for (int i = 0; i < nb_; ++i) lb[nb_ + i] = net_->buses[i].v_min;
    for (int k = 0; k < gen_count(); ++k) {
      lb[pg_ + k] = net_->generators[gens_[k]].p_min;
      lb[qg_offset() + k] = net_->generators[gens_[k]].q_min;
    }
    return lb;
  }
  Vector upper_bounds() const override {
    Vector ub(variable_count());
    ub.head(nb_).setConstant(kInf);
    ub[net_->slack_bus()] = 0.0;
    for (int i = 0; i < nb_; ++i) ub[nb_ + i] = net_->buses[i].v_max;
    for (int k = 0; k < gen_count(); ++k) {
      ub[pg_ + k] = net_->generators[gens_[k]].p_max;
      ub[qg_offset() + k] = net_->generators[gens_[k]].q_max;
    }
    return ub;
  }

  void constraints(const Vector& x, Vector& g, Vector& h) const override {
    const auto th = theta(x), v = mag(x);
    Vector p, q;
    eq_.injections(th, v, p, q);
    g.resize(2 * nb_);
    for (int i = 0; i < nb_; ++i) {
      g[i] = p[i] + net_->buses[i].p_load;
      g[nb_ + i] = q[i] + net_->buses[i].q_load;
    }
    for (int k = 0; k < gen_count(); ++k) {
      const int bus = net_->generators[gens_[k]].bus;
      g[bus] -= x[pg_ + k];
      g[nb_ + bus] -= x[qg_offset() + k];
    }
    h.resize(inequality_count());
    for (std::size_t l = 0; l < lines_.size(); ++l) {
      const Branch& br = net_->branches[lines_[l]];
      const BranchFlowTerms& t = terms_[l];
      const int f = br.from, to = br.to;
      const double s2 = br.s_limit * br.s_limit;
      const double pf = t.p_from.value(th[f], th[to], v[f], v[to]);
      const double qf = t.q_from.value(th[f], th[to], v[f], v[to]);
      const double pt = t.p_to.value(th[to], th[f], v[to], v[f]);
      const double qt = t.q_to.value(th[to], th[f], v[to], v[f]);
      h[2 * l] = pf * pf + qf * qf - s2;
      h[2 * l + 1] = pt * pt + qt * qt - s2;
    }
  }

  void jacobians(const Vector& x, SparseMatrix& jg, SparseMatrix& jh) const override {
    const auto th = theta(x), v = mag(x);
    std::vector<Triplet> t = eq_.jacobian(th, v);
    for (int k = 0; k < gen_count(); ++k) {
      const int bus = net_->generators[gens_[k]].bus;
      t.push_back({bus, pg_ + k, -1.0});
      t.push_back({nb_ + bus, qg_offset() + k, -1.0});
    }
    jg = assemble(2 * nb_, variable_count(), t);

    std::vector<Triplet> th_rows;
    th_rows.reserve(8 * lines_.size());
    double gp[4], gq[4];
    for (std::size_t l = 0; l < lines_.size(); ++l) {
      const Branch& br = net_->branches[lines_[l]];
      const int f = br.from, to = br.to;
      for (int end = 0; end < 2; ++end) {
        const int a = end == 0 ? f : to, b = end == 0 ? to : f;
        const EndFlowTerm& tp = end == 0 ? terms_[l].p_from : terms_[l].p_to;
        const EndFlowTerm& tq = end == 0 ? terms_[l].q_from : terms_[l].q_to;
        const double pv = tp.value(th[a], th[b], v[a], v[b]);
        const double qv = tq.value(th[a], th[b], v[a], v[b]);
        tp.gradient(th[a], th[b], v[a], v[b], gp);
        tq.gradient(th[a], th[b], v[a], v[b], gq);
        const int vars[4] = {a, b, nb_ + a, nb_ + b};
        const int row = 2 * static_cast<int>(l) + end;
        for (int c = 0; c < 4; ++c) th_rows.push_back({row, vars[c], 2.0 * (pv * gp[c] + qv * gq[c])});
      }
    }
    jh = assemble(inequality_count(), variable_count(), th_rows);
  }

  SparseMatrix hessian(const Vector& x, const Vector& lambda, const Vector& mu) const override {
    const auto th = theta(x), v = mag(x);
    std::vector<Triplet> t =
        eq_.hessian(th, v, std::span<const double>(lambda.data(), nb_),
                    std::span<const double>(lambda.data() + nb_, nb_));
    add_cost_hessian(t);
    double gp[4], gq[4], hp[16], hq[16];
    for (std::size_t l = 0; l < lines_.size(); ++l) {
      const Branch& br = net_->branches[lines_[l]];
      const int f = br.from, to = br.to;
      for (int end = 0; end < 2; ++end) {
        const double w = mu[2 * l + end];
        if (w == 0.0) continue;
        const int a = end == 0 ? f : to, b = end == 0 ? to : f;
        const EndFlowTerm& tp = end == 0 ? terms_[l].p_from : terms_[l].p_to;
        const EndFlowTerm& tq = end == 0 ? terms_[l].q_from : terms_[l].q_to;
        const double pv = tp.value(th[a], th[b], v[a], v[b]);
        const double qv = tq.value(th[a], th[b], v[a], v[b]);
        tp.gradient(th[a], th[b], v[a], v[b], gp);
        tq.gradient(th[a], th[b], v[a], v[b], gq);
        tp.hessian(th[a], th[b], v[a], v[b], hp);
        tq.hessian(th[a], th[b], v[a], v[b], hq);
        const int vars[4] = {a, b, nb_ + a, nb_ + b};
        for (int r = 0; r < 4; ++r) {
          for (int c = 0; c < 4; ++c) {
            const double val = 2.0 * w * (gp[r] * gp[c] + pv * hp[4 * r + c] + gq[r] * gq[c] + qv * hq[4 * r + c]);
            t.push_back({vars[r], vars[c], val});
          }
        }
      }
    }
    return assemble(variable_count(), variable_count(), t);
  }

 private:
  std::span<const double> theta(const Vector& x) const { return {x.data(), static_cast<std::size_t>(nb_)}; }
  std::span<const double> mag(const Vector& x) const { return {x.data() + nb_, static_cast<std::size_t>(nb_)}; }

  int nb_;
  AcNetworkEquations eq_;
  std::vector<BranchFlowTerms> terms_;
};

void require_valid(const OpfProblem& p, Formulation expected) {
  if (!p.net) throw Error(ErrorKind::invalid_input, "OPF problem without a network");
  if (p.formulation != expected) {
    throw Error(ErrorKind::invalid_input, "OPF problem formulation does not match the solver");
  }
}

Vector midpoint_start(const NlpProblem& nlp) {
  const Vector lb = nlp.lower_bounds(), ub = nlp.upper_bounds();
  Vector x(lb.size());
  for (int i = 0; i < lb.size(); ++i) {
    const bool lo = std::isfinite(lb[i]), hi = std::isfinite(ub[i]);
    if (lo && hi) x[i] = 0.5 * (lb[i] + ub[i]);
    else if (lo) x[i] = lb[i] + 1.0;
    else if (hi) x[i] = ub[i] - 1.0;
    else x[i] = 0.0;
  }
  return x;
}

// Primal point from a solution in the layout of the given formulation.
Vector primal_from(const Network& net, const OpfNlpBase& nlp, Formulation f,
                   const std::vector<double>& angles, const std::vector<double>& magnitudes,
                   const std::vector<double>& gen_p, const std::vector<double>& gen_q) {
  const int nb = net.bus_count();
  Vector x = Vector::Zero(nlp.variable_count());
  for (int i = 0; i < nb; ++i) x[i] = angles.at(i) - angles.at(net.slack_bus());
  if (f == Formulation::ac) {
    for (int i = 0; i < nb; ++i) x[nb + i] = magnitudes.at(i);
  }
  const auto& gens = nlp.gens();
  for (int k = 0; k < nlp.gen_count(); ++k) {
    x[nlp.pg_offset() + k] = net.to_pu(gen_p.at(gens[k]));
    if (f == Formulation::ac) x[nlp.pg_offset() + nlp.gen_count() + k] = net.to_pu(gen_q.at(gens[k]));
  }
  return x;
}

OpfSolution run(const OpfProblem& problem, const OpfNlpBase& nlp, const Vector& x0,
                const IpmState* warm, const IpmOptions& ipm) {
  const auto t0 = std::chrono::steady_clock::now();
  const Network& net = *problem.net;
  const IpmResult r = solve_nlp(nlp, x0, ipm, warm);

  OpfSolution s;
  s.formulation = problem.formulation;
  s.kkt = r.residuals;
  s.iterations = r.iterations;
  s.message = r.message;
  s.state = r.state;
  switch (r.status) {
    case IpmStatus::converged: s.status = OpfStatus::optimal; break;
    case IpmStatus::iteration_limit: s.status = OpfStatus::iteration_limit; break;
    case IpmStatus::numerical_failure: s.status = OpfStatus::numerical_failure; break;
  }

  const int nb = net.bus_count();
  const Vector& x = r.x;
  s.angles.assign(x.data(), x.data() + nb);
  s.magnitudes.assign(nb, 1.0);
  if (problem.formulation == Formulation::ac) s.magnitudes.assign(x.data() + nb, x.data() + 2 * nb);
  s.gen_p.assign(net.generator_count(), 0.0);
  s.gen_q.assign(net.generator_count(), 0.0);
  const auto& gens = nlp.gens();
  std::vector<double> p_mw;
  for (int k = 0; k < nlp.gen_count(); ++k) {
    s.gen_p[gens[k]] = net.to_mw(x[nlp.pg_offset() + k]);
    if (problem.formulation == Formulation::ac) {
      s.gen_q[gens[k]] = net.to_mw(x[nlp.pg_offset() + nlp.gen_count() + k]);
    }
    p_mw.push_back(s.gen_p[gens[k]]);
  }
  s.objective = generation_cost(net, p_mw);
  s.flows.resize(net.branch_count());
  if (problem.formulation == Formulation::ac) {
    for (int k = 0; k < net.branch_count(); ++k) s.flows[k] = branch_flow(net, s.angles, s.magnitudes, k);
  } else {
    const DcNetwork& dc = static_cast<const DcOpfNlp&>(nlp).dc();
    for (int k = 0; k < net.branch_count(); ++k) {
      const Branch& br = net.branches[k];
      if (!br.in_service) continue;
      const double p = net.to_mw(dc.susceptance[k] * (s.angles[br.from] - s.angles[br.to] - br.shift));
      s.flows[k] = {p, 0.0, std::abs(p), -p, 0.0, std::abs(p)};
    }
  }
  s.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return s;
}

const IpmState* matching_state(const OpfSolution& from, const NlpProblem& nlp) {
  if (from.state.x.size() != nlp.variable_count()) return nullptr;
  std::vector<std::int64_t> keys = nlp.inequality_keys();
  // Compare only the constraint rows; bound rows follow and are identical for
  // equal variable layouts.
  if (from.state.keys.size() < keys.size() ||
      !std::equal(keys.begin(), keys.end(), from.state.keys.begin())) {
    return nullptr;
  }
  if (from.state.keys.size() > keys.size() && from.state.keys[keys.size()] >= 0) return nullptr;
  return &from.state;
}

}  // namespace

std::unique_ptr<NlpProblem> make_opf_nlp(const OpfProblem& problem, const OpfOptions& options) {
  if (!problem.net) throw Error(ErrorKind::invalid_input, "OPF problem without a network");
  if (problem.formulation == Formulation::dc) return std::make_unique<DcOpfNlp>(problem, options);
  return std::make_unique<AcOpfNlp>(problem, options);
}

OpfSolution solve_dc_opf(const OpfProblem& problem, const OpfOptions& options) {
  require_valid(problem, Formulation::dc);
  return solve_opf(problem, OpfStart::flat(), options);
}

OpfSolution solve_ac_opf(const OpfProblem& problem, const OpfStart& start, const OpfOptions& options) {
  require_valid(problem, Formulation::ac);
  return solve_opf(problem, start, options);
}

OpfSolution solve_opf(const OpfProblem& problem, const OpfStart& start, const OpfOptions& options) {
  if (!problem.net) throw Error(ErrorKind::invalid_input, "OPF problem without a network");
  const Network& net = *problem.net;
  const std::unique_ptr<NlpProblem> owned = make_opf_nlp(problem, options);
  const auto& nlp = static_cast<const OpfNlpBase&>(*owned);

  Vector x0 = midpoint_start(nlp);
  const IpmState* warm = nullptr;
  if (start.kind == StartKind::given) {
    if (!start.from) throw Error(ErrorKind::invalid_input, "given start without a solution");
    const OpfSolution& from = *start.from;
    x0 = primal_from(net, nlp, problem.formulation, from.angles, from.magnitudes, from.gen_p, from.gen_q);
    if (from.formulation == problem.formulation) warm = matching_state(from, nlp);
    if (warm) x0 = warm->x;
  } else if (start.kind == StartKind::pf_warm && problem.formulation == Formulation::ac) {
    const PowerFlowSolution pf = ac_power_flow(net);
    x0 = primal_from(net, nlp, Formulation::ac, pf.angles, pf.magnitudes, pf.gen_p, pf.gen_q);
  }
  OpfSolution s = run(problem, nlp, x0, warm, options.ipm);
  if (s.status == OpfStatus::optimal || !options.retry_on_failure) {
    return s;
  }

  // Fallbacks: stronger centering from the same point, then (AC) a power
  // flow start.
  int iterations = s.iterations;
  double seconds = s.wall_time;
  IpmOptions alt = options.ipm;
  alt.centering = options.fallback_centering;
  std::vector<Vector> starts{x0};
  if (problem.formulation == Formulation::ac && start.kind != StartKind::pf_warm) {
    try {
      const PowerFlowSolution pf = ac_power_flow(net);
      if (pf.converged) {
        starts.push_back(primal_from(net, nlp, Formulation::ac, pf.angles, pf.magnitudes, pf.gen_p, pf.gen_q));
      }
    } catch (const Error&) {
      // No power flow start available.
    }
  }
  for (const Vector& x : starts) {
    OpfSolution retry = run(problem, nlp, x, nullptr, alt);
    iterations += retry.iterations;
    seconds += retry.wall_time;
    if (retry.status == OpfStatus::optimal) {
      retry.iterations = iterations;
      retry.wall_time = seconds;
      retry.message += " (after retry)";
      return retry;
    }
  }

  if (options.detect_infeasibility) {
    const auto t0 = std::chrono::steady_clock::now();
    const double violation = minimum_violation(nlp, x0, alt);
    if (std::isfinite(violation) && violation > options.infeasibility_threshold) {
      s.status = OpfStatus::infeasible;
      s.message = fmt::format("infeasible: minimum total constraint violation {:.3e} pu", violation);
    }
    seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  s.iterations = iterations;
  s.wall_time = seconds;
  return s;
}

double FeasibilityReport::worst() const noexcept {
  return std::max({p_balance, q_balance, flow_limit, v_bounds, p_bounds, q_bounds});
}

FeasibilityReport check_ac_feasibility(const Network& net, const OpfSolution& c, double tolerance,
                                       const std::optional<LimitMask>& mask) {
  FeasibilityReport rep;
  const auto shared = std::make_shared<const Network>(net);
  const OpfProblem problem{shared, mask ? *mask : LimitMask::all(net), Formulation::ac};
  const AcOpfNlp nlp(problem, OpfOptions{});
  const int nb = net.bus_count();

  std::vector<double> v = c.magnitudes, q = c.gen_q;
  if (c.formulation == Formulation::dc) {
    v.assign(nb, 1.0);
    double q_load = 0.0, p_total = 0.0;
    for (const Bus& b : net.buses) q_load += b.q_load;
    for (int k : net.active_generators()) p_total += c.gen_p.at(k);
    q.assign(net.generator_count(), 0.0);
    for (int k : net.active_generators()) {
      q[k] = p_total != 0.0 ? net.to_mw(q_load) * c.gen_p[k] / p_total : 0.0;
    }
  }
  if (static_cast<int>(c.angles.size()) != nb || static_cast<int>(v.size()) != nb) {
    throw Error(ErrorKind::invalid_input, "candidate does not match the network");
  }
  const Vector x = primal_from(net, nlp, Formulation::ac, c.angles, v, c.gen_p, q);
  Vector g, h;
  nlp.constraints(x, g, h);
  for (int i = 0; i < nb; ++i) {
    rep.p_balance = std::max(rep.p_balance, std::abs(g[i]));
    rep.q_balance = std::max(rep.q_balance, std::abs(g[nb + i]));
  }
  const auto& enforced = problem.mask.enforced();
  int row = 0;
  for (int k : enforced) {
    const Branch& br = net.branches[k];
    if (!br.in_service) continue;
    for (int end = 0; end < 2; ++end, ++row) {
      const double s = std::sqrt(std::max(h[row] + br.s_limit * br.s_limit, 0.0));
      rep.flow_limit = std::max(rep.flow_limit, s - br.s_limit);
    }
  }
  const Vector lb = nlp.lower_bounds(), ub = nlp.upper_bounds();
  const auto excess = [&](int i) { return std::max({0.0, lb[i] - x[i], x[i] - ub[i]}); };
  for (int i = 0; i < nb; ++i) rep.v_bounds = std::max(rep.v_bounds, excess(nb + i));
  for (int k = 0; k < nlp.gen_count(); ++k) {
    rep.p_bounds = std::max(rep.p_bounds, excess(nlp.pg_offset() + k));
    rep.q_bounds = std::max(rep.q_bounds, excess(nlp.pg_offset() + nlp.gen_count() + k));
  }
  const double fam[6] = {rep.p_balance, rep.q_balance, rep.flow_limit, rep.v_bounds, rep.p_bounds, rep.q_bounds};
  for (int i = 0; i < 6; ++i) {
    if (fam[i] > tolerance) rep.violated.push_back(i);
  }
  return rep;
}

}  // namespace redispatch
