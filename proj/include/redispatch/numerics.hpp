#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace redispatch {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

struct Triplet {
  int row;
  int col;
  double value;
};

/// Compresses a triplet list. Duplicate (row, col) entries are summed; the
/// result depends only on the entry multiset. Throws on out-of-range indices.
SparseMatrix assemble(int n_rows, int n_cols, std::span<const Triplet> entries);

enum class ColumnOrdering { natural, colamd, amd };

/// Left-looking sparse LU (Gilbert-Peierls) with threshold partial pivoting:
/// P·A·Q = L·U, L unit lower triangular, U upper triangular. The diagonal
/// entry is kept as pivot whenever |a_kk| >= kPivotThreshold·max|a_ik|.
///
/// Immutable once built; concurrent solves on one factorization are safe.
class LuFactorization {
 public:
  static constexpr double kPivotThreshold = 1e-3;

  LuFactorization() = default;

  int dimension() const noexcept { return n_; }
  bool singular() const noexcept { return failing_column_.has_value(); }
  /// Column of the input matrix at which elimination found no usable pivot.
  std::optional<int> failing_column() const noexcept { return failing_column_; }

  /// row_pivot()[i] = position of original row i in P·A.
  const std::vector<int>& row_pivot() const noexcept { return pinv_; }
  /// column_order()[k] = original column eliminated at step k.
  const std::vector<int>& column_order() const noexcept { return q_; }
  /// Factors in pivot order; compressed copies.
  SparseMatrix lower() const;
  SparseMatrix upper() const;
  std::size_t fill() const noexcept { return lx_.size() + ux_.size(); }

  /// Solves A·x = b. Precondition: !singular() and b.size() == dimension().
  Vector solve(const Vector& b) const;

 private:
  friend LuFactorization lu_factorize(const SparseMatrix&, ColumnOrdering);

  int n_ = 0;
  std::vector<int> q_;
  std::vector<int> pinv_;
  std::vector<int> lp_, li_, up_, ui_;
  std::vector<double> lx_, ux_;
  std::optional<int> failing_column_;
};

/// Never throws for singular input; check `singular()` on the result.
/// Throws Error(invalid_input) when `a` is not square.
LuFactorization lu_factorize(const SparseMatrix& a,
                             ColumnOrdering ordering = ColumnOrdering::colamd);

/// Throws Error(singular_matrix) when `f` is singular or sizes disagree.
Vector solve_linear(const LuFactorization& f, const Vector& b);

/// Factorize and solve in one go, throwing on singularity.
Vector solve_linear(const SparseMatrix& a, const Vector& b);

}  // namespace redispatch
