#include "redispatch/numerics.hpp"

#include <cmath>
#include <string>

#include <Eigen/OrderingMethods>

#include "redispatch/error.hpp"

namespace redispatch {

SparseMatrix assemble(int n_rows, int n_cols, std::span<const Triplet> entries) {
  std::vector<Eigen::Triplet<double, int>> list;
  list.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.row < 0 || e.row >= n_rows || e.col < 0 || e.col >= n_cols) {
      throw Error(ErrorKind::invalid_input,
                  "sparse entry (" + std::to_string(e.row) + ", " +
                      std::to_string(e.col) + ") outside " +
                      std::to_string(n_rows) + "x" + std::to_string(n_cols));
    }
    list.emplace_back(e.row, e.col, e.value);
  }
  SparseMatrix m(n_rows, n_cols);
  m.setFromTriplets(list.begin(), list.end());
  return m;
}

namespace {

std::vector<int> fill_reducing_order(const SparseMatrix& a,
                                     ColumnOrdering ordering) {
  const int n = static_cast<int>(a.cols());
  std::vector<int> q(n);
  if (ordering == ColumnOrdering::natural || n == 0) {
    for (int k = 0; k < n; ++k) q[k] = k;
    return q;
  }
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm;
  SparseMatrix pattern = a;
  pattern.makeCompressed();
  if (ordering == ColumnOrdering::colamd) {
    Eigen::COLAMDOrdering<int>()(pattern, perm);
  } else {
    Eigen::AMDOrdering<int>()(pattern, perm);
  }
  // Eigen moves column i to position perm(i); we want the inverse map.
  for (int i = 0; i < n; ++i) q[perm.indices()(i)] = i;
  return q;
}

// Depth-first search from row `start` through the columns of L computed so
// far; appends reached rows to xi[top..n) in topological order.
int reach_from(int start, const std::vector<int>& lp, const std::vector<int>& li,
               const std::vector<int>& pinv, std::vector<int>& mark, int stamp,
               std::vector<int>& xi, std::vector<int>& stack,
               std::vector<int>& cursor, int top) {
  int head = 0;
  stack[0] = start;
  while (head >= 0) {
    const int j = stack[head];
    const int col = pinv[j];
    if (mark[j] != stamp) {
      mark[j] = stamp;
      cursor[head] = col < 0 ? 0 : lp[col];
    }
    const int end = col < 0 ? 0 : lp[col + 1];
    bool done = true;
    for (int p = cursor[head]; p < end; ++p) {
      const int i = li[p];
      if (mark[i] == stamp) continue;
      cursor[head] = p + 1;
      stack[++head] = i;
      done = false;
      break;
    }
    if (done) {
      --head;
      xi[--top] = j;
    }
  }
  return top;
}

}  // namespace

LuFactorization lu_factorize(const SparseMatrix& input, ColumnOrdering ordering) {
  if (input.rows() != input.cols()) {
    throw Error(ErrorKind::invalid_input, "LU factorization needs a square matrix");
  }
  SparseMatrix a = input;
  a.makeCompressed();
  const int n = static_cast<int>(a.cols());

  LuFactorization f;
  f.n_ = n;
  f.q_ = fill_reducing_order(a, ordering);
  f.pinv_.assign(n, -1);
  f.lp_.assign(n + 1, 0);
  f.up_.assign(n + 1, 0);
  f.li_.reserve(4 * a.nonZeros() + n);
  f.lx_.reserve(4 * a.nonZeros() + n);
  f.ui_.reserve(4 * a.nonZeros() + n);
  f.ux_.reserve(4 * a.nonZeros() + n);

  std::vector<double> x(n, 0.0);
  std::vector<int> xi(n), stack(n), cursor(n), mark(n, -1);
  const int* outer = a.outerIndexPtr();
  const int* inner = a.innerIndexPtr();
  const double* values = a.valuePtr();

  for (int k = 0; k < n; ++k) {
    f.lp_[k] = static_cast<int>(f.li_.size());
    f.up_[k] = static_cast<int>(f.ui_.size());
    // Lp[k + 1] must bound column k-1 during the search below.
    f.lp_[k + 1] = f.lp_[k];
    const int col = f.q_[k];

    // Sparse triangular solve x = L \ A(:, col).
    int top = n;
    for (int p = outer[col]; p < outer[col + 1]; ++p) {
      if (mark[inner[p]] != k) {
        top = reach_from(inner[p], f.lp_, f.li_, f.pinv_, mark, k, xi, stack,
                         cursor, top);
      }
    }
    for (int p = top; p < n; ++p) x[xi[p]] = 0.0;
    for (int p = outer[col]; p < outer[col + 1]; ++p) x[inner[p]] = values[p];
    for (int px = top; px < n; ++px) {
      const int j = xi[px];
      const int jc = f.pinv_[j];
      if (jc < 0) continue;
      const double xj = x[j];
      for (int p = f.lp_[jc] + 1; p < f.lp_[jc + 1]; ++p) {
        x[f.li_[p]] -= f.lx_[p] * xj;
      }
    }

    int pivot_row = -1;
    double largest = -1.0;
    for (int p = top; p < n; ++p) {
      const int i = xi[p];
      if (f.pinv_[i] < 0) {
        const double t = std::abs(x[i]);
        if (t > largest) {
          largest = t;
          pivot_row = i;
        }
      } else {
        f.ui_.push_back(f.pinv_[i]);
        f.ux_.push_back(x[i]);
      }
    }
    if (pivot_row < 0 || !(largest > 0.0) || !std::isfinite(largest)) {
      f.failing_column_ = col;
      return f;
    }
    if (f.pinv_[col] < 0 && mark[col] == k &&
        std::abs(x[col]) >= largest * LuFactorization::kPivotThreshold) {
      pivot_row = col;
    }
    const double pivot = x[pivot_row];
    f.ui_.push_back(k);
    f.ux_.push_back(pivot);
    f.pinv_[pivot_row] = k;
    f.li_.push_back(pivot_row);
    f.lx_.push_back(1.0);
    for (int p = top; p < n; ++p) {
      const int i = xi[p];
      if (f.pinv_[i] < 0) {
        f.li_.push_back(i);
        f.lx_.push_back(x[i] / pivot);
      }
      x[i] = 0.0;
    }
    f.lp_[k + 1] = static_cast<int>(f.li_.size());
  }
  f.lp_[n] = static_cast<int>(f.li_.size());
  f.up_[n] = static_cast<int>(f.ui_.size());
  for (int& row : f.li_) row = f.pinv_[row];
  return f;
}

SparseMatrix LuFactorization::lower() const {
  std::vector<Triplet> t;
  t.reserve(lx_.size());
  for (int k = 0; k < n_; ++k) {
    for (int p = lp_[k]; p < lp_[k + 1]; ++p) t.push_back({li_[p], k, lx_[p]});
  }
  return assemble(n_, n_, t);
}

SparseMatrix LuFactorization::upper() const {
  std::vector<Triplet> t;
  t.reserve(ux_.size());
  for (int k = 0; k < n_; ++k) {
    for (int p = up_[k]; p < up_[k + 1]; ++p) t.push_back({ui_[p], k, ux_[p]});
  }
  return assemble(n_, n_, t);
}

Vector LuFactorization::solve(const Vector& b) const {
  Vector y(n_);
  for (int i = 0; i < n_; ++i) y[pinv_[i]] = b[i];
  for (int k = 0; k < n_; ++k) {
    const double yk = y[k];
    if (yk == 0.0) continue;
    for (int p = lp_[k] + 1; p < lp_[k + 1]; ++p) y[li_[p]] -= lx_[p] * yk;
  }
  for (int k = n_ - 1; k >= 0; --k) {
    const int diag = up_[k + 1] - 1;
    y[k] /= ux_[diag];
    const double yk = y[k];
    if (yk == 0.0) continue;
    for (int p = up_[k]; p < diag; ++p) y[ui_[p]] -= ux_[p] * yk;
  }
  Vector x(n_);
  for (int k = 0; k < n_; ++k) x[q_[k]] = y[k];
  return x;
}

Vector solve_linear(const LuFactorization& f, const Vector& b) {
  if (f.singular()) {
    throw Error(ErrorKind::singular_matrix,
                "singular matrix: no pivot in column " +
                    std::to_string(*f.failing_column()));
  }
  if (b.size() != f.dimension()) {
    throw Error(ErrorKind::invalid_input, "right-hand side has wrong dimension");
  }
  return f.solve(b);
}

Vector solve_linear(const SparseMatrix& a, const Vector& b) {
  return solve_linear(lu_factorize(a), b);
}

}  // namespace redispatch
