#pragma once

#include <functional>

#include "palmsdp/palm.hpp"

namespace palmsdp {

using LinOp = std::function<Vector(const Vector&)>;

struct TangentSolveStats {
  int pcg_iters = 0;
  bool converged = false;
  PcgPrecond kind = PcgPrecond::Diagonal;
  /// p^T M p <= 0 was met.
  bool indefinite = false;
};

struct PcgResult {
  Vector x;
  TangentSolveStats stats;
};

/// Preconditioned conjugate gradients on M x = rhs; success means
/// ||rhs - M x|| <= tol ||rhs|| within maxit iterations. `precond` applies
/// the inverse preconditioner and is ignored for PcgPrecond::None.
PcgResult pcg_solve(const LinOp& opM, const Vector& rhs, PcgPrecond kind, const LinOp& precond, int maxit = 20,
                    double tol = 1e-10);

/// v -> M_R v without forming M_R; PSD blocks only.
Vector gram_apply(const MultiMap& A, const FactorPoint& R, const Vector& v);
/// diag(M_R) = [||A_i R||_F^2]_i.
Vector gram_diagonal(const MultiMap& A, const FactorPoint& R);

/// Inverse preconditioner for M_R of the requested kind.
LinOp gram_preconditioner(const MultiMap& A, const FactorPoint& R, PcgPrecond kind);

struct TangentResult {
  FactorPoint H;
  /// Solution of M_R nu = [<A_i R, G>]_i; H = G - A*(nu) R.
  Vector nu;
  TangentSolveStats stats;
};

TangentResult tangent_project(const MultiMap& A, const FactorPoint& R, const FactorPoint& G,
                              PcgPrecond kind = PcgPrecond::Diagonal, int maxit = 20, double tol = 1e-10);

struct RetractResult {
  FactorPoint R;
  bool converged = false;
  int gn_iters = 0;
  int pcg_iters = 0;
  double residual = 0.0;
};

/// Gauss-Newton on A(Y Y^T) = b from Y = R + t H: each step solves
/// 2 M_Y nu = b - A(Y Y^T) and sets Y += A*(nu) Y. Converged iff
/// ||A(Y Y^T) - b|| <= 1e-10 (1 + ||b||) within max_iters steps.
RetractResult retract(const MultiMap& A, const Vector& b, const FactorPoint& R, const FactorPoint& H, double t,
                      PcgPrecond kind = PcgPrecond::Diagonal, int max_iters = 20, int pcg_max_iters = 20);

struct StageState {
  StageKind stage = StageKind::Feasible;
  SwitchReason switch_reason = SwitchReason::None;
};

/// Trigger conditions observed during one feasible step.
struct SwitchSignals {
  bool pcg_failed = false;      // tangent-space PCG did not converge
  PcgPrecond pcg_kind = PcgPrecond::Diagonal;
  bool fill_exceeds = false;    // symbolic factor estimate above fill_threshold
  bool retraction_failed = false;
  bool stalled = false;
};

/// PCG failure maps to fill-too-large when the fill estimate exceeded the
/// threshold and to degenerate otherwise; a retraction failure to
/// retraction-failed; a stall to stalled. A switched state never returns.
StageState switch_decision(const StageState& current, const SwitchSignals& signals);

/// Manifold objective f(X) + beta2/2 dist(B(X) - mu/beta2, P)^2 - ||mu||^2/(2 beta2).
struct FeasibleContext {
  Vector mu;
  double beta2 = 1.0;
  PcgPrecond precond = PcgPrecond::Diagonal;
  bool fill_exceeds = false;
  int gn_max_iters = 20;
  int pcg_max_iters = 20;
  double armijo_c = 1e-4;
};

struct FeasibleStepResult {
  FactorPoint R;
  StageState state;
  SwitchSignals signals;
  FactorPoint H;         // Riemannian gradient at the input point
  Vector lam;            // nu / 2 at the input point
  double value = 0.0;    // objective at the returned point
  double step = 0.0;     // accepted t (0 if none)
  int pcg_iters = 0;
};

/// One Riemannian gradient step R+ = Rtr_R(-t H) with Armijo backtracking
/// on t starting from t0.
FeasibleStepResult feasible_step(const ConicProblem& prob, const FactorPoint& R, const FeasibleContext& ctx,
                                 double t0 = 1.0);

/// Feasible first stage, then PALM on a switch or a stall.
RunHistory sdpfplus_solve(const ConicProblem& prob, const SolveOptions& options);

/// Dispatches on options.stage.
RunHistory solve(const ConicProblem& prob, const SolveOptions& options);

}  // namespace palmsdp
