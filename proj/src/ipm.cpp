#include "redispatch/ipm.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <unordered_map>

namespace redispatch {

std::vector<std::int64_t> NlpProblem::inequality_keys() const {
  std::vector<std::int64_t> keys(inequality_count());
  for (int i = 0; i < inequality_count(); ++i) keys[i] = i;
  return keys;
}

const char* to_string(IpmStatus s) noexcept {
  switch (s) {
    case IpmStatus::converged: return "converged";
    case IpmStatus::iteration_limit: return "iteration_limit";
    case IpmStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

namespace {

// Appends `extra` rows below `top`.
SparseMatrix stack_rows(const SparseMatrix& top, int extra_rows, const std::vector<Triplet>& extra) {
  std::vector<Triplet> t;
  t.reserve(top.nonZeros() + extra.size());
  for (int c = 0; c < top.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(top, c); it; ++it) {
      t.push_back({static_cast<int>(it.row()), c, it.value()});
    }
  }
  t.insert(t.end(), extra.begin(), extra.end());
  return assemble(static_cast<int>(top.rows()) + extra_rows, static_cast<int>(top.cols()), t);
}

// Bound handling around the user problem: equal bounds join g, finite
// one-sided bounds join h.
class Augmented {
 public:
  explicit Augmented(const NlpProblem& p)
      : p_(p), n_(p.variable_count()), lb_(p.lower_bounds()), ub_(p.upper_bounds()) {
    for (int i = 0; i < n_; ++i) {
      if (lb_[i] == ub_[i]) {
        fixed_.push_back(i);
        continue;
      }
      if (std::isfinite(lb_[i])) lower_.push_back(i);
      if (std::isfinite(ub_[i])) upper_.push_back(i);
    }
  }

  int n() const { return n_; }
  int neq() const { return p_.equality_count() + static_cast<int>(fixed_.size()); }
  int niq() const {
    return p_.inequality_count() + static_cast<int>(lower_.size() + upper_.size());
  }

  void constraints(const Vector& x, Vector& g, Vector& h) const {
    Vector g0, h0;
    p_.constraints(x, g0, h0);
    g.resize(neq());
    h.resize(niq());
    g.head(g0.size()) = g0;
    h.head(h0.size()) = h0;
    int r = static_cast<int>(g0.size());
    for (int i : fixed_) g[r++] = x[i] - lb_[i];
    r = static_cast<int>(h0.size());
    for (int i : lower_) h[r++] = lb_[i] - x[i];
    for (int i : upper_) h[r++] = x[i] - ub_[i];
  }

  void jacobians(const Vector& x, SparseMatrix& jg, SparseMatrix& jh) const {
    SparseMatrix jg0, jh0;
    p_.jacobians(x, jg0, jh0);
    std::vector<Triplet> eg, eh;
    int r = static_cast<int>(jg0.rows());
    for (int i : fixed_) eg.push_back({r++, i, 1.0});
    r = static_cast<int>(jh0.rows());
    for (int i : lower_) eh.push_back({r++, i, -1.0});
    for (int i : upper_) eh.push_back({r++, i, 1.0});
    jg = stack_rows(jg0, static_cast<int>(fixed_.size()), eg);
    jh = stack_rows(jh0, static_cast<int>(lower_.size() + upper_.size()), eh);
  }

  SparseMatrix hessian(const Vector& x, const Vector& lambda, const Vector& mu) const {
    return p_.hessian(x, lambda.head(p_.equality_count()), mu.head(p_.inequality_count()));
  }

  std::vector<std::int64_t> keys() const {
    std::vector<std::int64_t> k = p_.inequality_keys();
    for (int i : lower_) k.push_back(-2 * static_cast<std::int64_t>(i) - 1);
    for (int i : upper_) k.push_back(-2 * static_cast<std::int64_t>(i) - 2);
    return k;
  }

 private:
  const NlpProblem& p_;
  int n_;
  Vector lb_, ub_;
  std::vector<int> fixed_, lower_, upper_;
};

double max_positive(const Vector& v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, e);
  return m;
}

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace

IpmResult solve_nlp(const NlpProblem& problem, const Vector& x0, const IpmOptions& opt,
                    const IpmState* warm) {
  const Augmented aug(problem);
  const int n = aug.n(), neq = aug.neq(), niq = aug.niq();
  IpmResult res;
  if (x0.size() != n) {
    res.message = "initial point has wrong dimension";
    return res;
  }

  Vector x = x0;
  Vector g, h;
  SparseMatrix jg, jh;
  double f = problem.objective(x);
  Vector df = problem.gradient(x);
  aug.constraints(x, g, h);
  aug.jacobians(x, jg, jh);

  const double z0 = opt.initial_slack;
  Vector z = Vector::Constant(niq, z0);
  Vector mu = Vector::Constant(niq, z0);
  Vector lambda = Vector::Zero(neq);
  for (int i = 0; i < niq; ++i) {
    if (h[i] < -z0) z[i] = -h[i];
  }
  double gamma = 1.0;
  const std::vector<std::int64_t> keys = aug.keys();
  if (warm) {
    std::unordered_map<std::int64_t, int> row_of;
    for (std::size_t i = 0; i < warm->keys.size(); ++i) row_of.emplace(warm->keys[i], static_cast<int>(i));
    int matched = 0;
    for (int i = 0; i < niq; ++i) {
      auto it = row_of.find(keys[i]);
      if (it == row_of.end() || it->second >= warm->z.size()) continue;
      z[i] = warm->z[it->second];
      mu[i] = warm->mu[it->second];
      ++matched;
    }
    if (warm->lambda.size() == neq) lambda = warm->lambda;
    if (matched == niq && niq > 0 && warm->keys.size() == keys.size()) {
      gamma = opt.centering * z.dot(mu) / niq;
    }
  }

  const auto residuals = [&](const Vector& lx) {
    KktResiduals r;
    r.stationarity = lx.size() ? lx.lpNorm<Eigen::Infinity>() : 0.0;
    r.primal = std::max(g.size() ? g.lpNorm<Eigen::Infinity>() : 0.0, max_positive(h));
    r.complementarity = niq ? z.cwiseProduct(mu).maxCoeff() : 0.0;
    return r;
  };
  const auto converged = [&](const KktResiduals& r, double scale) {
    return r.primal <= opt.feasibility_tol * scale && r.stationarity <= opt.stationarity_tol * scale &&
           r.complementarity <= opt.complementarity_tol * scale;
  };

  Vector lx = df + jg.transpose() * lambda + jh.transpose() * mu;
  KktResiduals kkt = residuals(lx);
  const auto finish = [&](IpmStatus status, std::string message) {
    res.status = status;
    res.message = std::move(message);
    res.x = x;
    res.lambda = lambda.head(problem.equality_count());
    res.mu = mu.head(problem.inequality_count());
    res.objective = f;
    res.residuals = kkt;
    res.state = {x, lambda, z, mu, keys};
    return res;
  };

  // Best iterate at the acceptable level, returned if the run breaks down
  // later (round-off can undo progress once the barrier is tiny).
  struct Snapshot {
    Vector x, lambda, z, mu;
    double f = 0.0, worst = 0.0;
    KktResiduals kkt;
  };
  std::optional<Snapshot> best;
  const auto remember = [&] {
    const double worst = std::max({kkt.primal, kkt.stationarity, kkt.complementarity});
    if (worst > opt.acceptable_tol || (best && best->worst <= worst)) return;
    best = Snapshot{x, lambda, z, mu, f, worst, kkt};
  };
  const auto fail = [&](IpmStatus status, std::string message) {
    if (!best) return finish(status, std::move(message));
    x = best->x;
    lambda = best->lambda;
    z = best->z;
    mu = best->mu;
    f = best->f;
    kkt = best->kkt;
    return finish(IpmStatus::converged, "converged to acceptable level");
  };
  if (!all_finite(x) || !std::isfinite(f) || !all_finite(g) || !all_finite(h)) {
    return finish(IpmStatus::numerical_failure, "non-finite values at the initial point");
  }
  if (opt.trace) opt.trace({0, f, gamma, kkt, 0.0, 0.0});
  if (converged(kkt, 1.0)) return finish(IpmStatus::converged, "converged");

  for (int iter = 1; iter <= opt.max_iterations; ++iter) {
    res.iterations = iter;
    const SparseMatrix lxx = aug.hessian(x, lambda, mu);
    const Vector d = mu.cwiseQuotient(z);
    const SparseMatrix m = lxx + SparseMatrix(jh.transpose() * d.asDiagonal() * jh);
    const Vector nvec = lx + jh.transpose() * (mu.cwiseProduct(h) + Vector::Constant(niq, gamma)).cwiseQuotient(z);

    Vector rhs(n + neq);
    rhs.head(n) = -nvec;
    rhs.tail(neq) = -g;
    std::vector<Triplet> t;
    t.reserve(m.nonZeros() + 2 * jg.nonZeros() + n);
    for (int c = 0; c < m.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(m, c); it; ++it) t.push_back({static_cast<int>(it.row()), c, it.value()});
    }
    for (int c = 0; c < jg.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(jg, c); it; ++it) {
        t.push_back({n + static_cast<int>(it.row()), c, it.value()});
        t.push_back({c, n + static_cast<int>(it.row()), it.value()});
      }
    }
    Vector step;
    // Regularize only when the plain system is singular.
    for (double delta = 0.0; delta <= 1e-2; delta = delta == 0.0 ? 1e-10 : delta * 100.0) {
      std::vector<Triplet> tk = t;
      if (delta > 0.0) {
        for (int i = 0; i < n; ++i) tk.push_back({i, i, delta});
        for (int i = 0; i < neq; ++i) tk.push_back({n + i, n + i, -delta});
      }
      const LuFactorization lu = lu_factorize(assemble(n + neq, n + neq, tk), ColumnOrdering::colamd);
      if (lu.singular()) continue;
      step = lu.solve(rhs);
      if (all_finite(step)) break;
      step.resize(0);
    }
    if (step.size() == 0) return fail(IpmStatus::numerical_failure, "singular KKT system");

    const Vector dx = step.head(n);
    const Vector dlam = step.tail(neq);
    const Vector dz = -h - z - jh * dx;
    const Vector dmu = -mu + (Vector::Constant(niq, gamma) - mu.cwiseProduct(dz)).cwiseQuotient(z);

    double ap = 1.0, ad = 1.0;
    for (int i = 0; i < niq; ++i) {
      if (dz[i] < 0.0) ap = std::min(ap, opt.step_fraction * z[i] / -dz[i]);
      if (dmu[i] < 0.0) ad = std::min(ad, opt.step_fraction * mu[i] / -dmu[i]);
    }
    x += ap * dx;
    z += ap * dz;
    lambda += ad * dlam;
    mu += ad * dmu;
    if (niq > 0) gamma = opt.centering * z.dot(mu) / niq;

    f = problem.objective(x);
    df = problem.gradient(x);
    aug.constraints(x, g, h);
    if (!all_finite(x) || !std::isfinite(f) || !all_finite(g) || !all_finite(h) ||
        x.lpNorm<Eigen::Infinity>() > 1e10) {
      return fail(IpmStatus::numerical_failure, "iterate diverged");
    }
    aug.jacobians(x, jg, jh);
    lx = df + jg.transpose() * lambda + jh.transpose() * mu;
    kkt = residuals(lx);
    if (opt.trace) opt.trace({iter, f, gamma, kkt, ap, ad});
    if (converged(kkt, 1.0)) return finish(IpmStatus::converged, "converged");
    remember();
    if (std::max(ap, ad) < 1e-12) return fail(IpmStatus::numerical_failure, "step size collapsed");
  }
  return fail(IpmStatus::iteration_limit, "iteration limit reached");
}

namespace {

class ElasticProblem final : public NlpProblem {
 public:
  explicit ElasticProblem(const NlpProblem& p)
      : p_(p), n_(p.variable_count()), me_(p.equality_count()), mi_(p.inequality_count()) {}

  int variable_count() const override { return n_ + 2 * me_ + mi_; }
  int equality_count() const override { return me_; }
  int inequality_count() const override { return mi_; }
  Vector lower_bounds() const override {
    Vector lb = Vector::Zero(variable_count());
    lb.head(n_) = p_.lower_bounds();
    return lb;
  }
  Vector upper_bounds() const override {
    Vector ub = Vector::Constant(variable_count(), std::numeric_limits<double>::infinity());
    ub.head(n_) = p_.upper_bounds();
    return ub;
  }
  double objective(const Vector& y) const override { return y.tail(2 * me_ + mi_).sum(); }
  Vector gradient(const Vector&) const override {
    Vector d = Vector::Ones(variable_count());
    d.head(n_).setZero();
    return d;
  }
  void constraints(const Vector& y, Vector& g, Vector& h) const override {
    p_.constraints(y.head(n_), g, h);
    g += y.segment(n_, me_) - y.segment(n_ + me_, me_);
    h -= y.tail(mi_);
  }
  void jacobians(const Vector& y, SparseMatrix& jg, SparseMatrix& jh) const override {
    SparseMatrix jg0, jh0;
    p_.jacobians(y.head(n_), jg0, jh0);
    const int nv = variable_count();
    std::vector<Triplet> tg, th;
    for (int c = 0; c < jg0.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(jg0, c); it; ++it) tg.push_back({static_cast<int>(it.row()), c, it.value()});
    }
    for (int c = 0; c < jh0.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(jh0, c); it; ++it) th.push_back({static_cast<int>(it.row()), c, it.value()});
    }
    for (int i = 0; i < me_; ++i) {
      tg.push_back({i, n_ + i, 1.0});
      tg.push_back({i, n_ + me_ + i, -1.0});
    }
    for (int i = 0; i < mi_; ++i) th.push_back({i, n_ + 2 * me_ + i, -1.0});
    jg = assemble(me_, nv, tg);
    jh = assemble(mi_, nv, th);
  }
  SparseMatrix hessian(const Vector& y, const Vector& lambda, const Vector& mu) const override {
    const Vector x = y.head(n_);
    const SparseMatrix full = p_.hessian(x, lambda, mu);
    const SparseMatrix objective_part = p_.hessian(x, Vector::Zero(me_), Vector::Zero(mi_));
    const SparseMatrix diff = full - objective_part;
    std::vector<Triplet> t;
    for (int c = 0; c < diff.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(diff, c); it; ++it) t.push_back({static_cast<int>(it.row()), c, it.value()});
    }
    return assemble(variable_count(), variable_count(), t);
  }

 private:
  const NlpProblem& p_;
  int n_, me_, mi_;
};

}  // namespace

double minimum_violation(const NlpProblem& problem, const Vector& x0, const IpmOptions& opt) {
  const ElasticProblem elastic(problem);
  const int n = problem.variable_count();
  const int me = problem.equality_count(), mi = problem.inequality_count();
  Vector g, h;
  problem.constraints(x0, g, h);
  Vector y(elastic.variable_count());
  y.head(n) = x0;
  for (int i = 0; i < me; ++i) {
    y[n + i] = std::max(g[i], 0.0) + 1e-2;
    y[n + me + i] = std::max(-g[i], 0.0) + 1e-2;
  }
  for (int i = 0; i < mi; ++i) y[n + 2 * me + i] = std::max(h[i], 0.0) + 1e-2;
  const IpmResult r = solve_nlp(elastic, y, opt);
  if (r.status == IpmStatus::numerical_failure) return std::nan("");
  return r.objective;
}

}  // namespace redispatch
