#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "palmsdp/kkt.hpp"
#include "palmsdp/problem.hpp"
#include "palmsdp/subproblem.hpp"
#include "palmsdp/weight.hpp"

namespace palmsdp {

enum class StageOption { Auto, PalmOnly, FeasibleOnly };
enum class StageKind { Feasible, Palm };
enum class SwitchReason { None, FillTooLarge, RetractionFailed, Degenerate, Stalled };
enum class PcgPrecond { Diagonal, Cholesky, None };
enum class SolveStatus { Converged, BudgetExhausted, Failed };

struct SolveOptions {
  double tol = 1e-6;
  /// Budget in inner (gradient or feasible) iterations summed over the run.
  int max_iters = 50000;
  double max_time = 3600.0;
  int verbose = 0;
  std::ostream* log = nullptr;  // verbose output; stderr when null
  WeightPolicy precond = WeightPolicy::Auto;
  StageOption stage = StageOption::Auto;
  std::uint64_t seed = 1;

  /// 0 picks ceil(sqrt(2m)) clipped to [1, n].
  int initial_rank = 0;
  WeightConfig weight;
  bool reuse_weight = false;

  double eps_init = 1e-2;
  double eps_rho = 0.5;
  /// 0 picks 1 / (1 + ||b||).
  double beta_init = 0.0;
  double beta_factor = 2.0;
  double beta_max = 1e6;
  double progress_ratio = 0.9;
  double norm_guard = 1e10;

  int inner_max_iters = 20000;
  double armijo_c = 1e-4;
  bool bb_step = true;
  double escape_tol = 1e-8;
  EigConfig eig;

  // First stage.
  bool perturb_b = false;
  int gn_max_iters = 20;
  int pcg_max_iters = 20;
  int init_gn_max_iters = 100;
  PcgPrecond feasible_precond = PcgPrecond::Diagonal;
};

struct IterationRecord {
  int iter = 0;
  StageKind stage = StageKind::Palm;
  int inner_iters = 0;
  double fval = 0.0;
  KktResiduals kkt;
  double beta1 = 0.0, beta2 = 0.0, eps = 0.0;
  std::vector<int> ranks;
  WeightMode weight = WeightMode::Identity;
  /// <lam^k - lam^{k+1}, A(X^{k+1}) - b> and beta1 ||A(X^{k+1}) - b||^2_{W^k}.
  double dual_lhs = 0.0, dual_rhs = 0.0;
  double time = 0.0;
};

struct StageEvent {
  int iter = 0;
  SwitchReason reason = SwitchReason::None;
  std::string detail;
};

struct RunHistory {
  SolveStatus status = SolveStatus::Failed;
  std::string message;
  double fval = 0.0;
  /// lam^T b for linear problems without side constraints, NaN otherwise.
  double dfval = std::numeric_limits<double>::quiet_NaN();
  int iter = 0;
  int inner_iters = 0;
  double ttime = 0.0;
  int numChol = 0;
  int numCGiter = 0;
  bool singular = false;  // some outer iteration fell back to the identity weight
  std::vector<IterationRecord> trace;
  std::vector<StageEvent> events;
  StageKind final_stage = StageKind::Palm;
  SwitchReason switch_reason = SwitchReason::None;
  std::vector<double> min_pivots;
  FactorPoint R;
  Multipliers mult;
  DualSlack S;
  KktResiduals kkt;
  double beta1 = 0.0, beta2 = 0.0;
};

/// Carries an iterate from one stage to the next.
struct PalmState {
  FactorPoint R;
  Multipliers mult;
  double beta1 = 1.0;
  double beta2 = 1.0;
  double eps = 1e-2;
};

int default_rank(int n, int m);
/// Seeded Gaussian factor, columns scaled to unit norm; vector blocks start
/// at zero (nonneg) or Gaussian (free).
FactorPoint random_factor(const ConicProblem& prob, int initial_rank, std::uint64_t seed);
PalmState initial_state(const ConicProblem& prob, const SolveOptions& options);

struct StepResult {
  FactorPoint R;
  Multipliers mult;
  SubproblemResult sub;
  double dual_lhs = 0.0;
  double dual_rhs = 0.0;
};

/// Solves the weighted subproblem to eps from R, then
/// lam+ = lam - beta1 W (A(X)-b) and mu+ = beta2 (Pi_P(v) - v),
/// v = B(X) - mu/beta2.
StepResult palm_step(const ConicProblem& prob, const FactorPoint& R, const Multipliers& mult, double beta1,
                     double beta2, const WeightOperator* W, double eps, const SubproblemParams& base = {});

struct Schedule {
  double beta1 = 1.0;
  double beta2 = 1.0;
  double eps = 1e-2;
};

/// eps+ = max(0.1 tol, eps_rho eps); each beta is multiplied by beta_factor
/// (capped at beta_max) when its part of pfeas fell by less than
/// progress_ratio and is still above 0.1 tol.
Schedule update_schedules(const Schedule& current, double pfeas_eq_old, double pfeas_eq_new, double pfeas_side_old,
                          double pfeas_side_new, const SolveOptions& options);

/// Equality and side parts of pfeas at R.
std::pair<double, double> pfeas_parts(const ConicProblem& prob, const FactorPoint& R, const Vector& mu, double beta2);

/// The PALM loop. `warm` continues from a given state; `history` (if
/// non-null) is extended rather than started afresh.
RunHistory palm_solve(const ConicProblem& prob, const SolveOptions& options, const PalmState* warm = nullptr,
                      RunHistory* history = nullptr);

const char* to_string(SolveStatus s);
const char* to_string(SwitchReason r);
const char* to_string(StageKind s);
const char* to_string(WeightMode m);
const char* to_string(WeightPolicy p);
const char* to_string(StageOption s);
WeightPolicy parse_weight_policy(const std::string& s);
StageOption parse_stage_option(const std::string& s);

}  // namespace palmsdp
