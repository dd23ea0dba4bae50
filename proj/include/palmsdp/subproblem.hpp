#pragma once

#include <limits>

#include "palmsdp/kkt.hpp"
#include "palmsdp/problem.hpp"
#include "palmsdp/weight.hpp"

namespace palmsdp {

struct SubproblemParams {
  Vector lam;
  Vector mu;
  double beta1 = 1.0;
  double beta2 = 1.0;
  /// Penalty weight; null means the identity.
  const WeightOperator* W = nullptr;
  double eps = 1e-6;
  int max_inner_iters = 20000;
  double max_time = std::numeric_limits<double>::infinity();

  double armijo_c = 1e-4;
  bool bb_step = true;
  /// A negative eigenvalue below -escape_tol (1 + ||S||_F) triggers a rank escape.
  double escape_tol = 1e-8;
  int k_add = 1;
  EigConfig eig;
};

/// Value, factor gradient and the quantities the outer loop reuses.
struct SubproblemEval {
  double value = 0.0;
  /// 2 S_k R_k for PSD blocks, s_k for vector blocks.
  FactorPoint grad;
  ObjectiveValueGrad objective;
  Vector eq_residual;  // A(X) - b
  Vector Bx;           // B(X)
  Vector lam_hat;      // lam - beta1 W (A(X) - b)
  Vector mu_hat;       // beta2 (Pi_P(v) - v), v = B(X) - mu/beta2
  Vector side_proj;    // Pi_P(v)
  DualSlack S;
};

/// f(X) - <lam, A(X)-b> + beta1/2 ||A(X)-b||_W^2
///   + beta2/2 dist(B(X) - mu/beta2, P)^2 - ||mu||^2/(2 beta2).
SubproblemEval subproblem_value_grad(const ConicProblem& prob, const FactorPoint& R, const SubproblemParams& p);
double subproblem_value(const ConicProblem& prob, const FactorPoint& R, const SubproblemParams& p);

/// S = grad f - A*(lam_hat) - B*(mu_hat), the slack implied by the updates.
DualSlack dual_slack(const ConicProblem& prob, const FactorPoint& R, const SubproblemParams& p);

/// sqrt(sum_psd ||2 S_k R_k||_F^2 + ||Pi_+(-S_k)||_F^2 + sum_vec res_k^2) where
/// res_k is ||x - Pi(x - s)|| for nonneg blocks and ||s|| for free blocks.
double check_stationarity(const ConicProblem& prob, const FactorPoint& R, const SubproblemParams& p);
double check_stationarity(const ConicProblem& prob, const FactorPoint& R, const SubproblemEval& ev,
                          const EigConfig& eig = {});

enum class EscapeStatus { Escaped, NoEscape, NoDecrease };

struct EscapeResult {
  EscapeStatus status = EscapeStatus::NoEscape;
  FactorPoint R;
  double delta = 0.0;
  int added = 0;
  double value = 0.0;
};

/// Appends delta v_i for the k_add most negative eigenvectors of each PSD
/// block's slack (eigenvalues below -escape_tol (1 + ||S||_F)), halving delta
/// from 1 until the subproblem value drops. Blocks at full rank have the
/// smallest column replaced instead.
EscapeResult escape_rank(const ConicProblem& prob, const FactorPoint& R, const SubproblemEval& ev,
                         const SubproblemParams& p, int k_add);

enum class SubproblemStatus { Converged, BudgetExhausted, NumericalFailure };

struct SubproblemResult {
  SubproblemStatus status = SubproblemStatus::BudgetExhausted;
  FactorPoint R;
  SubproblemEval eval;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int escapes = 0;
  std::string message;
};

/// Gradient descent with BB steps, monotone Armijo backtracking,
/// projection for nonneg vector blocks and rank escapes.
SubproblemResult minimize_subproblem(const ConicProblem& prob, const FactorPoint& R0, const SubproblemParams& p);

}  // namespace palmsdp
