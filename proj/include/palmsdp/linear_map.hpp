#pragma once

#include <cstddef>
#include <vector>

#include "palmsdp/sym_sparse.hpp"

namespace palmsdp {

/// Symbolic upper-triangle pattern of an m x m symmetric matrix, stored
/// column-wise: rows index[offset[j] .. offset[j+1]) are the i <= j present
/// in column j, sorted, diagonal last.
struct GramPattern {
  int m = 0;
  std::vector<std::size_t> offset{0};
  std::vector<int> index;

  std::size_t nnz_upper() const { return index.size(); }
  bool contains(int i, int j) const;
  /// Pattern with every (i, j).
  static GramPattern dense(int m);
  static GramPattern diagonal(int m);
};

/// Builds the pattern in which (i, j) is present iff the supports of
/// constraints i and j intersect. Supports are index sets into a common
/// universe (matrix rows for PSD blocks, coordinates for vector blocks).
GramPattern pattern_from_supports(int universe, const std::vector<std::vector<int>>& supports);

/// Upper bound on the lower-triangle nonzero count of the support-overlap
/// pattern, computed without forming it.
double predict_pattern_nnz(int universe, const std::vector<std::vector<int>>& supports);

/// The constraint map X -> [<A_1, X>; ...; <A_m, X>] over one n x n block.
class LinearMapA {
 public:
  LinearMapA() = default;
  LinearMapA(int dim, std::vector<SymSparse> mats);

  int size() const { return static_cast<int>(mats_.size()); }
  int dim() const { return dim_; }
  const SymSparse& operator[](int i) const { return mats_[i]; }
  const std::vector<SymSparse>& mats() const { return mats_; }
  const std::vector<int>& rows(int i) const { return mats_[i].nonzero_rows(); }

  /// [<A_i P, Q>]_i.
  Vector pair(const Matrix& P, const Matrix& Q) const;
  Vector apply_dense(const Matrix& X) const;
  /// sum_i lam_i A_i, both triangles.
  SparseMatrix adjoint(const Vector& lam) const;

  /// Supports used for the Gram pattern: the nonzero rows of each A_i.
  std::vector<std::vector<int>> supports() const;

  /// Adds scale * <A_i R, A_j R> into values laid out along pattern.
  void accumulate_gram(const Matrix& R, const GramPattern& pattern, std::vector<double>& values,
                       double scale = 1.0) const;

 private:
  int dim_ = 0;
  std::vector<SymSparse> mats_;
  // Union pattern of all A_i (both triangles) and, per stored upper entry
  // of each A_i, the value slots it scatters into.
  SparseMatrix union_;
  std::vector<std::size_t> entry_offset_;
  std::vector<int> slot_upper_;
  std::vector<int> slot_lower_;
};

struct GramMatrix {
  SymSparse data;
  GramPattern pattern;
};

/// [<A_i, R R^T>]_i computed as <A_i R, R>.
Vector apply_map(const LinearMapA& A, const Matrix& R);

/// (sum_i lam_i A_i) R.
Matrix apply_adjoint_times_factor(const LinearMapA& A, const Vector& lam, const Matrix& R);

GramPattern gram_pattern(const LinearMapA& A);

/// M_R with (M_R)_ij = <A_i R, A_j R>, assembled over gram_pattern(A).
/// Throws GramRefused when the predicted lower-triangle size exceeds
/// nnz_threshold.
GramMatrix gram_matrix(const LinearMapA& A, const Matrix& R, double nnz_threshold = 1e9);

/// Converts pattern-aligned values into a symmetric sparse matrix.
SymSparse gram_from_values(const GramPattern& pattern, const std::vector<double>& values);

}  // namespace palmsdp
