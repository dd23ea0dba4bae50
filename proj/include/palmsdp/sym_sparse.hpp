#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace palmsdp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// One stored entry of the upper triangle, 0-based, row <= col.
struct SymEntry {
  int row;
  int col;
  double value;
};

/// Sparse symmetric matrix stored as its upper triangle.
///
/// Entries are normalized on construction: (i,j) with i > j is mirrored to
/// (j,i), duplicates are summed and exact zeros are dropped. A compiled
/// column-compressed copy holding both triangles backs products.
class SymSparse {
 public:
  SymSparse() = default;
  explicit SymSparse(int dim) : SymSparse(dim, {}) {}
  SymSparse(int dim, std::vector<SymEntry> entries);

  static SymSparse identity(int dim);
  static SymSparse from_dense(const Matrix& dense, double drop_tol = 0.0);

  int dim() const { return dim_; }
  std::span<const SymEntry> entries() const { return entries_; }
  std::size_t nnz_upper() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Sorted indices of rows holding at least one nonzero.
  const std::vector<int>& nonzero_rows() const { return rows_; }

  /// Both triangles, column-compressed.
  const SparseMatrix& full() const { return full_; }

  Matrix to_dense() const;
  Matrix times(const Matrix& R) const { return full_ * R; }

  /// <A P, Q> without forming A P.
  double pair(const Matrix& P, const Matrix& Q) const;
  /// <A, R R^T>.
  double quad(const Matrix& R) const { return pair(R, R); }
  double inner_dense(const Matrix& X) const;
  double frobenius_norm() const;

  bool operator==(const SymSparse& other) const;

 private:
  int dim_ = 0;
  std::vector<SymEntry> entries_;
  std::vector<int> rows_;
  SparseMatrix full_;
};

/// Symmetric matrix held as a sparse part plus an optional dense part.
///
/// Dual slacks combine sparse data matrices with objective gradients that
/// are dense for nonlinear objectives; this keeps both without forcing
/// either representation onto the other.
struct SymOperator {
  int dim = 0;
  SparseMatrix sparse;  // dim x dim, both triangles; may have no entries
  Matrix dense;         // empty or dim x dim

  bool has_dense() const { return dense.size() != 0; }
  Matrix apply(const Matrix& R) const;
  Matrix to_dense() const;
  double frobenius_norm() const;
  /// <S, R R^T>.
  double quad(const Matrix& R) const;
};

}  // namespace palmsdp
