#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "palmsdp/linear_map.hpp"
#include "palmsdp/sym_sparse.hpp"

namespace palmsdp {

enum class BlockKind { Psd, NonnegVector, FreeVector };

struct BlockSpec {
  BlockKind kind = BlockKind::Psd;
  int dim = 1;
  bool is_psd() const { return kind == BlockKind::Psd; }
};

/// Per-block primal iterate: an n x r factor R (X = R R^T) for PSD blocks,
/// the d x 1 vector itself for vector blocks.
struct FactorPoint {
  std::vector<Matrix> blocks;

  int rank(int k) const { return static_cast<int>(blocks[k].cols()); }
  double squared_norm() const;
};

/// Dense X_k = R_k R_k^T for PSD blocks, x_k for vector blocks.
std::vector<Matrix> form_blocks(const std::vector<BlockSpec>& specs, const FactorPoint& R);

// ---------------------------------------------------------------------------
// Side-constraint sets

class ConvexSet {
 public:
  enum class Kind { Box, Nonneg, Free, Zero, Custom };
  using Projector = std::function<Vector(const Vector&)>;

  ConvexSet() = default;
  /// Classifies the bounds: all [0,0] is Zero, all [0,inf) Nonneg,
  /// all (-inf,inf) Free, anything else Box.
  static ConvexSet box(Vector lower, Vector upper);
  static ConvexSet nonneg(int p);
  static ConvexSet free(int p);
  static ConvexSet zero(int p);
  /// User-supplied projection onto a closed convex set.
  static ConvexSet custom(int p, Projector projector);

  Kind kind() const { return kind_; }
  int size() const { return size_; }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  Vector project(const Vector& y) const;

 private:
  Kind kind_ = Kind::Free;
  int size_ = 0;
  Vector lower_, upper_;
  Projector projector_;
};

Vector project_side(const ConvexSet& set, const Vector& y);

struct MoreauEval {
  double value = 0.0;
  Vector gradient;   // in v
  Vector projected;  // Pi_P(v - mu / beta2)
};

/// (beta2/2) dist(v - mu/beta2, P)^2 - ||mu||^2 / (2 beta2) and its gradient
/// beta2 (v - mu/beta2 - Pi_P(v - mu/beta2)).
MoreauEval moreau_value_grad(const ConvexSet& set, const Vector& v, const Vector& mu, double beta2);

// ---------------------------------------------------------------------------
// Linear maps over all blocks

/// One coefficient of a constraint row: block, (i, j) within the block, value.
/// Vector blocks use i == j == coordinate. Off-diagonal PSD coefficients
/// follow the symmetric convention: value v at (i, j), i != j, contributes
/// 2 v X_ij to the row.
struct RowCoefficient {
  int block;
  int i;
  int j;
  double value;
};

struct BlockMap {
  LinearMapA psd;
  Eigen::SparseMatrix<double, Eigen::RowMajor> vec;  // rows x dim
};

/// y = sum_k A^{(k)}(X_k).
class MultiMap {
 public:
  MultiMap() = default;
  MultiMap(const std::vector<BlockSpec>& blocks, const std::vector<std::vector<RowCoefficient>>& rows);

  int rows() const { return rows_; }
  int num_blocks() const { return static_cast<int>(maps_.size()); }
  const BlockMap& block(int k) const { return maps_[k]; }
  bool is_psd(int k) const { return specs_[k].is_psd(); }

  Vector apply(const FactorPoint& R) const;
  Vector apply_dense(const std::vector<Matrix>& X) const;
  /// sum_k [<A_i^{(k)} P_k, Q_k>]_i over PSD blocks only.
  Vector pair(const FactorPoint& P, const FactorPoint& Q) const;
  /// sum_i y_i A_i^{(k)} for a PSD block k.
  SparseMatrix adjoint_psd(int k, const Vector& y) const;
  /// G_k^T y for a vector block k.
  Vector adjoint_vec(int k, const Vector& y) const;

  /// Row supports in the concatenated index space of all blocks.
  std::vector<std::vector<int>> supports(int* universe = nullptr) const;
  /// sum_k <A_i R_k, A_j R_k> over PSD blocks plus (1/4) g_i . g_j over
  /// vector blocks, added into pattern-aligned values.
  void accumulate_gram(const FactorPoint& R, const GramPattern& pattern, std::vector<double>& values) const;
  GramPattern gram_pattern() const;
  double predict_gram_nnz() const;
  GramMatrix gram(const FactorPoint& R, double nnz_threshold = 1e9) const;

  /// Row i as coefficients (used by writers and tests).
  std::vector<RowCoefficient> row_coefficients(int i) const;

 private:
  int rows_ = 0;
  std::vector<BlockSpec> specs_;
  std::vector<BlockMap> maps_;
};

// ---------------------------------------------------------------------------
// Objectives

struct ObjectiveEval {
  double value = 0.0;
  /// Per block: n x n symmetric gradient for PSD blocks, d x 1 otherwise.
  std::vector<Matrix> gradient;
};

using ObjectiveFn = std::function<ObjectiveEval(const std::vector<Matrix>& X)>;

enum class LossKind { Square, Huber };

/// f(X) = sum_ij g(H_ij (X_ij - T_ij)) on one PSD block, g the square or
/// Huber loss.
struct WeightedLoss {
  int block = 0;
  LossKind kind = LossKind::Square;
  Matrix weight;
  Matrix target;
  double delta = 0.1;
};

struct BlockCost {
  SymSparse mat;  // PSD blocks
  Vector vec;     // vector blocks
};

class Objective {
 public:
  enum class Kind { Linear, WeightedLoss, Callback };

  Objective() = default;
  static Objective linear(std::vector<BlockCost> costs);
  static Objective weighted_loss(WeightedLoss loss);
  static Objective callback(ObjectiveFn fn);

  Kind kind() const { return kind_; }
  bool is_linear() const { return kind_ == Kind::Linear; }
  const std::vector<BlockCost>& costs() const { return costs_; }
  const WeightedLoss& loss() const { return loss_; }
  const ObjectiveFn& fn() const { return fn_; }

 private:
  Kind kind_ = Kind::Linear;
  std::vector<BlockCost> costs_;
  WeightedLoss loss_;
  ObjectiveFn fn_;
};

ObjectiveEval eval_weighted_loss(const WeightedLoss& loss, const std::vector<BlockSpec>& blocks,
                                 const std::vector<Matrix>& X);

/// Largest relative mismatch between <grad f(X), D> and the central
/// difference of f along D, over `points` seeded random (X, D).
double gradient_check(const std::vector<BlockSpec>& blocks, const ObjectiveFn& fn, int points,
                      std::uint64_t seed);

// ---------------------------------------------------------------------------

/// min f(X) s.t. A(X) = b, B(X) in P, X_k in its block cone.
struct ConicProblem {
  std::vector<BlockSpec> blocks;
  MultiMap A;
  Vector b;
  MultiMap B;
  ConvexSet side;
  Objective objective;

  int num_eq() const { return A.rows(); }
  int num_side() const { return B.rows(); }
  bool has_side() const { return B.rows() > 0; }
  /// Linear objective and no side constraints.
  bool is_standard_linear() const { return objective.is_linear() && !has_side(); }
  void validate() const;
};

struct ObjectiveValueGrad {
  double value = 0.0;
  /// PSD blocks: gradient as a symmetric operator (sparse for linear
  /// objectives, dense otherwise); vector blocks: gradient vector.
  std::vector<SymOperator> psd;
  std::vector<Vector> vec;
};

ObjectiveValueGrad eval_objective(const ConicProblem& prob, const FactorPoint& R);
/// Objective on explicit block matrices.
ObjectiveEval eval_objective_dense(const ConicProblem& prob, const std::vector<Matrix>& X);

class ProblemBuilder {
 public:
  int add_block(BlockKind kind, int dim);
  int add_psd_block(int n) { return add_block(BlockKind::Psd, n); }

  int add_constraint(std::vector<RowCoefficient> row, double rhs);
  int add_side_row(std::vector<RowCoefficient> row, double lower, double upper);
  void set_side_projector(ConvexSet::Projector projector) { projector_ = std::move(projector); }

  /// Accumulates into the linear cost (symmetric convention as rows).
  void add_cost(int block, int i, int j, double value);
  /// Replaces the objective. Callback objectives are checked against
  /// central differences at 3 random points (1e-5 relative).
  void set_objective(Objective objective);

  const std::vector<BlockSpec>& blocks() const { return blocks_; }
  ConicProblem build() const;

 private:
  std::vector<BlockSpec> blocks_;
  std::vector<std::vector<RowCoefficient>> eq_rows_;
  std::vector<double> rhs_;
  std::vector<std::vector<RowCoefficient>> side_rows_;
  std::vector<double> lower_, upper_;
  ConvexSet::Projector projector_;
  std::vector<RowCoefficient> cost_;
  bool custom_objective_ = false;
  Objective objective_;
};

}  // namespace palmsdp
