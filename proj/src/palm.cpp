#include "palmsdp/palm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>

#include "palmsdp/errors.hpp"

namespace palmsdp {

int default_rank(int n, int m) {
  const int r = static_cast<int>(std::ceil(std::sqrt(2.0 * m)));
  return std::clamp(r, 1, n);
}

FactorPoint random_factor(const ConicProblem& prob, int initial_rank, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  FactorPoint R;
  for (const auto& spec : prob.blocks) {
    if (spec.is_psd()) {
      const int r = initial_rank > 0 ? std::min(initial_rank, spec.dim) : default_rank(spec.dim, prob.num_eq());
      Matrix B(spec.dim, r);
      for (int j = 0; j < r; ++j) {
        for (int i = 0; i < spec.dim; ++i) B(i, j) = gauss(rng);
        B.col(j).normalize();
      }
      R.blocks.push_back(std::move(B));
    } else if (spec.kind == BlockKind::NonnegVector) {
      R.blocks.push_back(Matrix::Zero(spec.dim, 1));
    } else {
      Matrix v(spec.dim, 1);
      for (int i = 0; i < spec.dim; ++i) v(i, 0) = gauss(rng);
      R.blocks.push_back(std::move(v));
    }
  }
  return R;
}

PalmState initial_state(const ConicProblem& prob, const SolveOptions& options) {
  PalmState s;
  s.R = random_factor(prob, options.initial_rank, options.seed);
  s.mult.lam = Vector::Zero(prob.num_eq());
  s.mult.mu = Vector::Zero(prob.num_side());
  const double beta = options.beta_init > 0 ? options.beta_init : 1.0 / (1.0 + prob.b.norm());
  s.beta1 = s.beta2 = beta;
  s.eps = options.eps_init;
  return s;
}

StepResult palm_step(const ConicProblem& prob, const FactorPoint& R, const Multipliers& mult, double beta1,
                     double beta2, const WeightOperator* W, double eps, const SubproblemParams& base) {
  SubproblemParams p = base;
  p.lam = mult.lam;
  p.mu = mult.mu;
  p.beta1 = beta1;
  p.beta2 = beta2;
  p.W = W;
  p.eps = eps;

  StepResult out;
  out.sub = minimize_subproblem(prob, R, p);
  out.R = out.sub.R;
  const auto& ev = out.sub.eval;
  out.mult.lam = prob.num_eq() > 0 ? ev.lam_hat : Vector();
  if (prob.has_side()) {
    // Written out as in the update rule rather than reusing ev.mu_hat.
    const Vector v = ev.Bx - mult.mu / beta2;
    out.mult.mu = beta2 * (prob.side.project(v) - v);
  } else {
    out.mult.mu = Vector();
  }
  if (prob.num_eq() > 0) {
    const Vector& r = ev.eq_residual;
    out.dual_lhs = (mult.lam - out.mult.lam).dot(r);
    out.dual_rhs = beta1 * r.dot(W ? W->apply(r) : r);
  }
  return out;
}

Schedule update_schedules(const Schedule& current, double pfeas_eq_old, double pfeas_eq_new, double pfeas_side_old,
                          double pfeas_side_new, const SolveOptions& options) {
  Schedule next = current;
  next.eps = std::max(0.1 * options.tol, options.eps_rho * current.eps);
  // A part already below 0.1 tol is not stagnating; its ratio is rounding noise.
  const double floor = 0.1 * options.tol;
  if (pfeas_eq_new > floor && pfeas_eq_new > options.progress_ratio * pfeas_eq_old)
    next.beta1 = std::min(options.beta_max, current.beta1 * options.beta_factor);
  if (pfeas_side_new > floor && pfeas_side_new > options.progress_ratio * pfeas_side_old)
    next.beta2 = std::min(options.beta_max, current.beta2 * options.beta_factor);
  return next;
}

std::pair<double, double> pfeas_parts(const ConicProblem& prob, const FactorPoint& R, const Vector& mu, double beta2) {
  double eq = 0.0, side = 0.0;
  if (prob.num_eq() > 0) eq = (prob.A.apply(R) - prob.b).norm() / (1.0 + prob.b.norm());
  if (prob.has_side()) {
    const Vector Bx = prob.B.apply(R);
    side = (Bx - prob.side.project(Bx - mu / beta2)).norm() / (1.0 + Bx.norm());
  }
  return {eq, side};
}

namespace {

std::vector<int> ranks_of(const ConicProblem& prob, const FactorPoint& R) {
  std::vector<int> r;
  for (std::size_t k = 0; k < prob.blocks.size(); ++k)
    if (prob.blocks[k].is_psd()) r.push_back(R.rank(static_cast<int>(k)));
  return r;
}

}  // namespace

RunHistory palm_solve(const ConicProblem& prob, const SolveOptions& options, const PalmState* warm,
                      RunHistory* history) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  RunHistory local;
  RunHistory& h = history ? *history : local;
  const double time_offset = h.ttime;
  auto elapsed = [&] { return time_offset + std::chrono::duration<double>(clock::now() - start).count(); };
  std::ostream& log = options.log ? *options.log : std::cerr;

  prob.validate();
  PalmState st = warm ? *warm : initial_state(prob, options);
  h.final_stage = StageKind::Palm;

  SubproblemParams base;
  base.armijo_c = options.armijo_c;
  base.bb_step = options.bb_step;
  base.escape_tol = options.escape_tol;
  base.eig = options.eig;

  Schedule sched{st.beta1, st.beta2, st.eps};
  auto [eq_old, side_old] = pfeas_parts(prob, st.R, st.mult.mu, sched.beta2);

  WeightOperator W = WeightOperator::identity(prob.num_eq());
  bool have_weight = false;
  h.status = SolveStatus::BudgetExhausted;
  h.message = "iteration or time budget reached";

  for (int outer = 0;; ++outer) {
    if (h.inner_iters >= options.max_iters || elapsed() > options.max_time) break;

    if (prob.num_eq() > 0 && options.precond != WeightPolicy::Identity && (!options.reuse_weight || !have_weight)) {
      try {
        if (!should_form_gram(prob.A, options.weight)) throw GramRefused("gram: no-form threshold exceeded");
        const auto M = prob.A.gram(st.R, options.weight.gram_threshold);
        W = build_weight(M, options.precond, options.weight);
        W.set_built_from(fingerprint(st.R.blocks));
        ++h.numChol;
        h.min_pivots.push_back(W.min_pivot());
      } catch (const GramRefused& e) {
        W = WeightOperator::identity(prob.num_eq());
        h.singular = true;
        if (options.verbose) log << "weight: " << e.what() << ", using identity\n";
      } catch (const DegenerateGram& e) {
        W = WeightOperator::identity(prob.num_eq());
        h.singular = true;
        if (options.verbose) log << "weight: " << e.what() << ", using identity\n";
      }
      have_weight = true;
    }

    SubproblemParams p = base;
    p.max_inner_iters = std::min(options.inner_max_iters, options.max_iters - h.inner_iters);
    p.max_time = std::max(0.0, options.max_time - elapsed());
    const WeightOperator* Wp = prob.num_eq() > 0 ? &W : nullptr;
    StepResult step = palm_step(prob, st.R, st.mult, sched.beta1, sched.beta2, Wp, sched.eps, p);
    h.inner_iters += step.sub.iterations;

    if (step.sub.status == SubproblemStatus::NumericalFailure) {
      if (W.mode() != WeightMode::Identity) {
        W = WeightOperator::identity(prob.num_eq());
        h.singular = true;
        step = palm_step(prob, st.R, st.mult, sched.beta1, sched.beta2, &W, sched.eps, p);
        h.inner_iters += step.sub.iterations;
      }
      if (step.sub.status == SubproblemStatus::NumericalFailure) {
        h.status = SolveStatus::Failed;
        h.message = "subproblem failed: " + step.sub.message;
        break;
      }
    }

    st.R = std::move(step.R);
    st.mult = std::move(step.mult);
    ++h.iter;

    const auto& ev = step.sub.eval;
    const KktResiduals kkt = kkt_residuals(prob, st.R, st.mult, sched.beta2, ev.objective, ev.S, options.eig);
    IterationRecord rec;
    rec.iter = h.iter;
    rec.stage = StageKind::Palm;
    rec.inner_iters = step.sub.iterations;
    rec.fval = ev.objective.value;
    rec.kkt = kkt;
    rec.beta1 = sched.beta1;
    rec.beta2 = sched.beta2;
    rec.eps = sched.eps;
    rec.ranks = ranks_of(prob, st.R);
    rec.weight = W.mode();
    rec.dual_lhs = step.dual_lhs;
    rec.dual_rhs = step.dual_rhs;
    rec.time = elapsed();
    h.trace.push_back(rec);
    h.kkt = kkt;
    h.fval = rec.fval;

    if (options.verbose) {
      char line[256];
      std::snprintf(line, sizeof line,
                    "palm %4d  fval %+.8e  pfeas %.2e  dfeas %.2e  comp %.2e  beta %.1e/%.1e  inner %d  rank %d\n",
                    h.iter, rec.fval, kkt.pfeas, kkt.dfeas, kkt.comp, sched.beta1, sched.beta2, rec.inner_iters,
                    rec.ranks.empty() ? 0 : rec.ranks[0]);
      log << line;
    }

    if (std::sqrt(st.R.squared_norm()) > options.norm_guard) {
      h.status = SolveStatus::Failed;
      h.message = "iterates diverged (factor norm guard)";
      break;
    }
    if (kkt.max_kkt <= options.tol) {
      h.status = SolveStatus::Converged;
      h.message = "KKT residuals below tolerance";
      break;
    }

    const auto [eq_new, side_new] = pfeas_parts(prob, st.R, st.mult.mu, sched.beta2);
    sched = update_schedules(sched, eq_old, eq_new, side_old, side_new, options);
    eq_old = eq_new;
    side_old = side_new;
  }

  h.R = st.R;
  h.mult = st.mult;
  h.beta1 = sched.beta1;
  h.beta2 = sched.beta2;
  const auto grad = eval_objective(prob, h.R);
  h.fval = grad.value;
  h.S = dual_slack_from(prob, grad, h.mult.lam, h.mult.mu);
  if (h.trace.empty()) h.kkt = kkt_residuals(prob, h.R, h.mult, sched.beta2, grad, h.S, options.eig);
  h.dfval = prob.is_standard_linear() ? (prob.num_eq() > 0 ? h.mult.lam.dot(prob.b) : 0.0)
                                      : std::numeric_limits<double>::quiet_NaN();
  h.ttime = elapsed();
  return h;
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::BudgetExhausted: return "budget-exhausted";
    case SolveStatus::Failed: return "failed";
  }
  return "failed";
}

const char* to_string(SwitchReason r) {
  switch (r) {
    case SwitchReason::None: return "none";
    case SwitchReason::FillTooLarge: return "fill-too-large";
    case SwitchReason::RetractionFailed: return "retraction-failed";
    case SwitchReason::Degenerate: return "degenerate";
    case SwitchReason::Stalled: return "stalled";
  }
  return "none";
}

const char* to_string(StageKind s) { return s == StageKind::Feasible ? "feasible" : "palm"; }

const char* to_string(WeightMode m) {
  switch (m) {
    case WeightMode::Identity: return "identity";
    case WeightMode::ExactCholesky: return "exact-cholesky";
    case WeightMode::IncompleteCholesky: return "incomplete-cholesky";
  }
  return "identity";
}

const char* to_string(WeightPolicy p) {
  switch (p) {
    case WeightPolicy::Auto: return "auto";
    case WeightPolicy::Exact: return "exact";
    case WeightPolicy::Ichol: return "ichol";
    case WeightPolicy::Identity: return "identity";
  }
  return "auto";
}

const char* to_string(StageOption s) {
  switch (s) {
    case StageOption::Auto: return "auto";
    case StageOption::PalmOnly: return "palm-only";
    case StageOption::FeasibleOnly: return "feasible-only";
  }
  return "auto";
}

WeightPolicy parse_weight_policy(const std::string& s) {
  if (s == "auto") return WeightPolicy::Auto;
  if (s == "exact") return WeightPolicy::Exact;
  if (s == "ichol") return WeightPolicy::Ichol;
  if (s == "identity") return WeightPolicy::Identity;
  throw InvalidInput("unknown preconditioner policy '" + s + "'");
}

StageOption parse_stage_option(const std::string& s) {
  if (s == "auto") return StageOption::Auto;
  if (s == "palm-only") return StageOption::PalmOnly;
  if (s == "feasible-only") return StageOption::FeasibleOnly;
  throw InvalidInput("unknown stage '" + s + "'");
}

}  // namespace palmsdp
