#pragma once

#include <cstddef>
#include <vector>

#include "palmsdp/linear_map.hpp"

namespace palmsdp {

struct FillEstimate {
  double predicted_factor_nnz = 0;  // lower triangle of L, diagonal included
  double predicted_gram_nnz = 0;    // lower triangle of M, diagonal included
};

/// Lower-triangular sparsity structure in compressed columns; each column
/// lists its rows ascending with the diagonal first.
struct LowerPattern {
  int m = 0;
  std::vector<std::size_t> colptr{0};
  std::vector<int> rowidx;
  std::size_t nnz() const { return rowidx.size(); }
};

/// Approximate-minimum-degree ordering of the symmetric pattern, returned
/// as newpos[old] = new. The diagonal is always treated as present.
std::vector<int> minimum_degree_order(const GramPattern& pattern);

/// Lower triangle of P M P^T (pattern only), diagonal forced in.
LowerPattern permuted_lower(const GramPattern& pattern, const std::vector<int>& newpos);

std::vector<int> elimination_tree(const LowerPattern& lower);

/// Number of nonzeros of the Cholesky factor of a matrix with the given
/// lower pattern. Stops counting once `cap` is exceeded and returns the
/// partial count (> cap).
double symbolic_factor_count(const LowerPattern& lower, double cap = 1e300);

/// Full symbolic Cholesky structure (fill included).
LowerPattern symbolic_factor(const LowerPattern& lower);

/// Factor size after minimum-degree ordering, plus the Gram size itself.
FillEstimate estimate_fill(const GramPattern& pattern, double cap = 1e300);

}  // namespace palmsdp
