#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "redispatch/numerics.hpp"

namespace redispatch {

/// Smooth nonlinear program
///   min f(x)  s.t.  g(x) = 0,  h(x) <= 0,  lower <= x <= upper.
/// Infinite bounds are allowed; equal bounds become equality rows.
class NlpProblem {
 public:
  virtual ~NlpProblem() = default;

  virtual int variable_count() const = 0;
  virtual int equality_count() const = 0;
  virtual int inequality_count() const = 0;
  virtual Vector lower_bounds() const = 0;
  virtual Vector upper_bounds() const = 0;

  virtual double objective(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual void constraints(const Vector& x, Vector& g, Vector& h) const = 0;
  /// Jacobians of g (n_eq × n) and h (n_ineq × n).
  virtual void jacobians(const Vector& x, SparseMatrix& jg, SparseMatrix& jh) const = 0;
  /// Hessian of f + λᵀg + μᵀh, both triangles stored.
  virtual SparseMatrix hessian(const Vector& x, const Vector& lambda, const Vector& mu) const = 0;

  /// Stable labels for inequality rows, used to carry multipliers between
  /// problems that share rows. Default: row positions.
  virtual std::vector<std::int64_t> inequality_keys() const;
};

enum class IpmStatus { converged, iteration_limit, numerical_failure };

const char* to_string(IpmStatus s) noexcept;

struct KktResiduals {
  double stationarity = 0.0;     // ‖∇f + Jgᵀλ + Jhᵀμ‖∞
  double primal = 0.0;           // max(‖g‖∞, max h⁺), bounds included
  double complementarity = 0.0;  // max_i z_i·μ_i
};

struct IpmIterate {
  int iteration = 0;
  double objective = 0.0;
  double barrier = 0.0;  // γ
  KktResiduals residuals;
  double step_primal = 0.0;
  double step_dual = 0.0;
};

struct IpmOptions {
  int max_iterations = 150;
  double feasibility_tol = 1e-8;
  double stationarity_tol = 1e-8;
  double complementarity_tol = 1e-8;
  /// Residual level accepted when progress stalls before the tolerances above.
  double acceptable_tol = 1e-6;
  double step_fraction = 0.995;  // fraction-to-boundary
  double centering = 0.2;        // γ ← centering·zᵀμ / n_ineq
  double initial_slack = 1.0;
  std::function<void(const IpmIterate&)> trace;
};

/// Primal-dual state over the augmented constraint set (g plus equal-bound
/// rows; h plus finite bound rows); restart point for a later solve.
struct IpmState {
  Vector x, lambda, z, mu;
  std::vector<std::int64_t> keys;  // labels of the augmented h rows
};

struct IpmResult {
  IpmStatus status = IpmStatus::numerical_failure;
  Vector x;
  Vector lambda;  // multipliers of g
  Vector mu;      // multipliers of h
  double objective = 0.0;
  KktResiduals residuals;
  int iterations = 0;
  IpmState state;
  std::string message;
};

/// Primal-dual interior point with log barrier on the inequalities and
/// fraction-to-boundary damping. `warm` supplies multipliers and slacks for
/// rows whose keys it shares with this problem; rows it lacks start from
/// the cold initialization.
IpmResult solve_nlp(const NlpProblem& problem, const Vector& x0, const IpmOptions& options = {},
                    const IpmState* warm = nullptr);

/// Minimum total violation Σ(p + n) + Σ r of g(x) + p − n = 0, h(x) ≤ r,
/// p, n, r ≥ 0, keeping the variable bounds hard. A strictly positive
/// optimum certifies local infeasibility.
double minimum_violation(const NlpProblem& problem, const Vector& x0,
                         const IpmOptions& options = {});

}  // namespace redispatch
