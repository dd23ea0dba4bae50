#pragma once

#include <vector>

#include "palmsdp/kkt.hpp"
#include "palmsdp/problem.hpp"

namespace palmsdp {

struct DenseSolution {
  /// Per block: n x n for PSD blocks, d x 1 for vector blocks.
  std::vector<Matrix> X;
  Vector lam;
  Vector mu;
  double fval = 0.0;
  KktResiduals certified_kkt;
  int outer_iters = 0;
  long inner_iters = 0;
};

struct OracleOptions {
  double tol = 1e-9;
  int max_outer = 5000;
  long max_inner_total = 5'000'000;
  double beta = 1.0;
};

/// Full-matrix augmented Lagrangian: each subproblem is minimized over the
/// dense blocks by projected accelerated gradient with exact projections
/// (eigenvalue clipping for PSD blocks). Throws OracleFailed when the budget
/// runs out before the residuals reach options.tol.
DenseSolution solve_dense(const ConicProblem& prob, const OracleOptions& options = {});

/// The KKT residuals at a dense point, computed without the factored code
/// paths. beta2 enters only through y = Pi_P(B(X) - mu/beta2).
KktResiduals certify(const ConicProblem& prob, const std::vector<Matrix>& X, const Vector& lam, const Vector& mu,
                     double beta2 = 1.0);

}  // namespace palmsdp
