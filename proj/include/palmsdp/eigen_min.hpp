#pragma once

#include <cstdint>
#include <vector>

#include "palmsdp/sym_sparse.hpp"

namespace palmsdp {

enum class EigMode { Auto, Exact, Iterative };

struct EigConfig {
  /// Auto mode uses a dense eigensolve up to this dimension.
  int dense_threshold = 400;
  double residual_tol = 1e-8;
  int max_matvecs = 5000;
  std::uint64_t seed = 0x5eed1a2c3b4dULL;
};

struct EigPair {
  double value = 0.0;
  Vector vector;
  /// False when the iterative solver ran out of matvecs; value/vector are
  /// then the best Ritz pair found.
  bool converged = true;
  int matvecs = 0;
};

/// Smallest eigenpair of a symmetric matrix. Eigenvectors are unit length
/// with their largest-magnitude component positive.
EigPair min_eig_estimate(const SymOperator& S, EigMode mode = EigMode::Auto, const EigConfig& config = {});
EigPair min_eig_estimate(const SymSparse& S, EigMode mode = EigMode::Auto, const EigConfig& config = {});

/// The k smallest eigenpairs in ascending order (k clipped to the dimension).
std::vector<EigPair> smallest_eigenpairs(const SymOperator& S, int k, EigMode mode = EigMode::Auto,
                                         const EigConfig& config = {});

/// ||Pi_{S+}(-S)||_F, the Frobenius norm of the negative part of S.
/// Above the dense threshold it sums the negative Ritz values found by
/// Lanczos, which can only underestimate.
double negative_part_norm(const SymOperator& S, const EigConfig& config = {});

SymOperator to_operator(const SymSparse& S);

}  // namespace palmsdp
