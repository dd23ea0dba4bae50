#include "palmsdp/feasible.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <memory>
#include <random>

#include "palmsdp/errors.hpp"
#include "palmsdp/ordering.hpp"

namespace palmsdp {

namespace {

double inner(const FactorPoint& a, const FactorPoint& b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.blocks.size(); ++k) acc += (a.blocks[k].array() * b.blocks[k].array()).sum();
  return acc;
}

FactorPoint axpy(const FactorPoint& x, double t, const FactorPoint& d) {
  FactorPoint out = x;
  for (std::size_t k = 0; k < x.blocks.size(); ++k) out.blocks[k] += t * d.blocks[k];
  return out;
}

// A*(v) R per PSD block.
FactorPoint adjoint_times(const MultiMap& A, const Vector& v, const FactorPoint& R) {
  FactorPoint out;
  out.blocks.resize(R.blocks.size());
  for (int k = 0; k < A.num_blocks(); ++k) {
    if (!A.is_psd(k)) {
      out.blocks[k] = Matrix::Zero(R.blocks[k].rows(), R.blocks[k].cols());
      continue;
    }
    out.blocks[k] = A.adjoint_psd(k, v) * R.blocks[k];
  }
  return out;
}

bool all_psd(const ConicProblem& prob) {
  return std::all_of(prob.blocks.begin(), prob.blocks.end(), [](const BlockSpec& b) { return b.is_psd(); });
}

}  // namespace

PcgResult pcg_solve(const LinOp& opM, const Vector& rhs, PcgPrecond kind, const LinOp& precond, int maxit,
                    double tol) {
  PcgResult out;
  out.stats.kind = kind;
  out.x = Vector::Zero(rhs.size());
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    out.stats.converged = true;
    return out;
  }
  auto prec = [&](const Vector& r) { return kind == PcgPrecond::None || !precond ? r : precond(r); };
  Vector r = rhs;
  Vector z = prec(r);
  Vector p = z;
  double rz = r.dot(z);
  for (int it = 0; it < maxit; ++it) {
    const Vector Mp = opM(p);
    const double pMp = p.dot(Mp);
    ++out.stats.pcg_iters;
    if (!(pMp > 0.0)) {
      out.stats.indefinite = true;
      return out;
    }
    const double alpha = rz / pMp;
    out.x += alpha * p;
    r -= alpha * Mp;
    if (r.norm() <= tol * bnorm) {
      out.stats.converged = true;
      return out;
    }
    z = prec(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  return out;
}

Vector gram_apply(const MultiMap& A, const FactorPoint& R, const Vector& v) {
  return A.pair(R, adjoint_times(A, v, R));
}

Vector gram_diagonal(const MultiMap& A, const FactorPoint& R) {
  const GramPattern pat = GramPattern::diagonal(A.rows());
  std::vector<double> values(pat.nnz_upper(), 0.0);
  A.accumulate_gram(R, pat, values);
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

LinOp gram_preconditioner(const MultiMap& A, const FactorPoint& R, PcgPrecond kind) {
  if (kind == PcgPrecond::None) return [](const Vector& v) { return v; };
  if (kind == PcgPrecond::Cholesky) {
    try {
      WeightConfig cfg;
      auto W = std::make_shared<WeightOperator>(build_weight(A.gram(R, cfg.gram_threshold), WeightPolicy::Exact, cfg));
      return [W](const Vector& v) { return W->apply(v); };
    } catch (const GramRefused&) {
    } catch (const DegenerateGram&) {
    }
  }
  Vector d = gram_diagonal(A, R);
  const double floor = 1e-14 * std::max(1.0, d.maxCoeff());
  Vector inv = d.unaryExpr([floor](double x) { return 1.0 / std::max(x, floor); });
  return [inv](const Vector& v) { return Vector(inv.cwiseProduct(v)); };
}

TangentResult tangent_project(const MultiMap& A, const FactorPoint& R, const FactorPoint& G, PcgPrecond kind,
                              int maxit, double tol) {
  TangentResult out;
  out.stats.kind = kind;
  if (A.rows() == 0) {
    out.H = G;
    out.stats.converged = true;
    return out;
  }
  const Vector rhs = A.pair(R, G);
  auto pr = pcg_solve([&](const Vector& v) { return gram_apply(A, R, v); }, rhs, kind,
                      gram_preconditioner(A, R, kind), maxit, tol);
  out.nu = std::move(pr.x);
  out.stats = pr.stats;
  out.H = axpy(G, -1.0, adjoint_times(A, out.nu, R));
  return out;
}

RetractResult retract(const MultiMap& A, const Vector& b, const FactorPoint& R, const FactorPoint& H, double t,
                      PcgPrecond kind, int max_iters, int pcg_max_iters) {
  RetractResult out;
  out.R = t == 0.0 ? R : axpy(R, t, H);
  const double target = 1e-10 * (1.0 + b.norm());
  for (int it = 0;; ++it) {
    const Vector r = b - A.apply(out.R);
    out.residual = r.norm();
    if (!std::isfinite(out.residual)) return out;
    if (out.residual <= target) {
      out.converged = true;
      return out;
    }
    if (it >= max_iters) return out;
    auto pr = pcg_solve([&](const Vector& v) { return Vector(2.0 * gram_apply(A, out.R, v)); }, r, kind,
                        [P = gram_preconditioner(A, out.R, kind)](const Vector& v) { return Vector(0.5 * P(v)); },
                        pcg_max_iters, 1e-10);
    out.pcg_iters += pr.stats.pcg_iters;
    out.R = axpy(out.R, 1.0, adjoint_times(A, pr.x, out.R));
    ++out.gn_iters;
  }
}

StageState switch_decision(const StageState& current, const SwitchSignals& signals) {
  if (current.stage == StageKind::Palm) return current;
  StageState next = current;
  SwitchReason reason = SwitchReason::None;
  if (signals.pcg_failed)
    reason = signals.fill_exceeds ? SwitchReason::FillTooLarge : SwitchReason::Degenerate;
  else if (signals.retraction_failed)
    reason = SwitchReason::RetractionFailed;
  else if (signals.stalled)
    reason = SwitchReason::Stalled;
  if (reason != SwitchReason::None) {
    next.stage = StageKind::Palm;
    next.switch_reason = reason;
  }
  return next;
}

namespace {

SubproblemParams manifold_params(const ConicProblem& prob, const FeasibleContext& ctx) {
  SubproblemParams p;
  p.lam = Vector::Zero(prob.num_eq());
  p.mu = ctx.mu.size() == prob.num_side() ? ctx.mu : Vector::Zero(prob.num_side());
  p.beta1 = 0.0;
  p.beta2 = ctx.beta2;
  return p;
}

struct ManifoldPoint {
  SubproblemEval ev;
  TangentResult tp;
};

ManifoldPoint manifold_point(const ConicProblem& prob, const FactorPoint& R, const FeasibleContext& ctx) {
  ManifoldPoint mp;
  mp.ev = subproblem_value_grad(prob, R, manifold_params(prob, ctx));
  mp.tp = tangent_project(prob.A, R, mp.ev.grad, ctx.precond, ctx.pcg_max_iters, 1e-10);
  return mp;
}

// Armijo backtracking along the retracted curve; t0 is capped so that the
// trial displacement never exceeds ||R||.
FeasibleStepResult line_search(const ConicProblem& prob, const Vector& b, const FactorPoint& R,
                               const ManifoldPoint& mp, const FeasibleContext& ctx, double t0) {
  FeasibleStepResult out;
  out.R = R;
  out.H = mp.tp.H;
  out.lam = 0.5 * mp.tp.nu;
  out.value = mp.ev.value;
  out.pcg_iters = mp.tp.stats.pcg_iters;
  if (!mp.tp.stats.converged) {
    out.signals.pcg_failed = true;
    out.signals.pcg_kind = mp.tp.stats.kind;
    out.signals.fill_exceeds = ctx.fill_exceeds;
    out.state = switch_decision(out.state, out.signals);
    return out;
  }
  const double hh = inner(mp.tp.H, mp.tp.H);
  if (hh == 0.0) return out;
  double t = t0 > 0 ? t0 : 1.0;
  t = std::min(t, std::sqrt(R.squared_norm() / hh));
  const SubproblemParams p = manifold_params(prob, ctx);
  int retract_fails = 0;
  for (int bt = 0; bt < 50; ++bt) {
    FactorPoint negH = mp.tp.H;
    for (auto& B : negH.blocks) B = -B;
    const auto rr = retract(prob.A, b, R, negH, t, ctx.precond, ctx.gn_max_iters, ctx.pcg_max_iters);
    out.pcg_iters += rr.pcg_iters;
    if (!rr.converged) {
      if (++retract_fails >= 5) {
        out.signals.retraction_failed = true;
        out.state = switch_decision(out.state, out.signals);
        return out;
      }
      t *= 0.5;
      continue;
    }
    retract_fails = 0;
    double v = 0.0;
    try {
      v = subproblem_value(prob, rr.R, p);
    } catch (const ObjectiveError&) {
      t *= 0.5;
      continue;
    }
    if (std::isfinite(v) && v <= mp.ev.value - ctx.armijo_c * t * hh) {
      out.R = rr.R;
      out.value = v;
      out.step = t;
      return out;
    }
    t *= 0.5;
  }
  out.signals.stalled = true;
  out.state = switch_decision(out.state, out.signals);
  return out;
}

}  // namespace

FeasibleStepResult feasible_step(const ConicProblem& prob, const FactorPoint& R, const FeasibleContext& ctx,
                                 double t0) {
  return line_search(prob, prob.b, R, manifold_point(prob, R, ctx), ctx, t0);
}

namespace {

struct EscapeOutcome {
  bool escaped = false;
  FactorPoint R;
  int pcg_iters = 0;
};

// Appends delta * v for the most negative eigenvector v of S to each PSD
// block, re-retracts and keeps the first delta that lowers the objective.
EscapeOutcome manifold_escape(const ConicProblem& prob, const Vector& b, const FactorPoint& R, const DualSlack& S,
                              double value, const FeasibleContext& ctx, const SolveOptions& options) {
  EscapeOutcome out;
  const double thr = -options.escape_tol * (1.0 + S.frobenius_norm());
  std::vector<Vector> dirs(prob.blocks.size());
  bool any = false;
  for (std::size_t k = 0; k < prob.blocks.size(); ++k) {
    const auto e = min_eig_estimate(S.psd[k], EigMode::Auto, options.eig);
    if (e.value < thr) {
      dirs[k] = e.vector;
      any = true;
    }
  }
  if (!any) return out;
  const SubproblemParams p = manifold_params(prob, ctx);
  for (double delta = 1.0; delta > 1e-8; delta *= 0.5) {
    FactorPoint Y = R;
    for (std::size_t k = 0; k < prob.blocks.size(); ++k) {
      if (dirs[k].size() == 0) continue;
      Matrix& B = Y.blocks[k];
      if (B.cols() < prob.blocks[k].dim) {
        Matrix grown(B.rows(), B.cols() + 1);
        grown << B, delta * dirs[k];
        B = std::move(grown);
      } else {
        Eigen::Index j = 0;
        B.colwise().norm().minCoeff(&j);
        B.col(j) += delta * dirs[k];
      }
    }
    const auto rr = retract(prob.A, b, Y, Y, 0.0, ctx.precond, ctx.gn_max_iters, ctx.pcg_max_iters);
    out.pcg_iters += rr.pcg_iters;
    if (!rr.converged) continue;
    const double v = subproblem_value(prob, rr.R, p);
    if (std::isfinite(v) && v < value - 1e-12 * (1.0 + std::abs(value))) {
      out.escaped = true;
      out.R = rr.R;
      return out;
    }
  }
  return out;
}

std::vector<int> psd_ranks(const ConicProblem& prob, const FactorPoint& R) {
  std::vector<int> r;
  for (std::size_t k = 0; k < prob.blocks.size(); ++k)
    if (prob.blocks[k].is_psd()) r.push_back(R.rank(static_cast<int>(k)));
  return r;
}

void finish(const ConicProblem& prob, RunHistory& h, const FactorPoint& R, const Multipliers& mult, double beta2,
            const EigConfig& eig) {
  h.R = R;
  h.mult = mult;
  h.beta2 = beta2;
  const auto grad = eval_objective(prob, R);
  h.fval = grad.value;
  h.S = dual_slack_from(prob, grad, mult.lam, mult.mu);
  h.kkt = kkt_residuals(prob, R, mult, beta2, grad, h.S, eig);
  h.dfval = prob.is_standard_linear() ? (prob.num_eq() > 0 ? mult.lam.dot(prob.b) : 0.0)
                                      : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

RunHistory sdpfplus_solve(const ConicProblem& prob, const SolveOptions& options) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };
  std::ostream& log = options.log ? *options.log : std::cerr;

  prob.validate();
  if (!all_psd(prob) || prob.num_eq() == 0) {
    if (options.stage == StageOption::FeasibleOnly)
      throw InvalidInput("the feasible stage needs equality constraints and PSD blocks only");
    return palm_solve(prob, options);
  }

  RunHistory h;
  h.final_stage = StageKind::Feasible;
  h.status = SolveStatus::BudgetExhausted;
  h.message = "iteration or time budget reached";

  Vector b = prob.b;
  if (options.perturb_b) {
    std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> gauss;
    Vector d(b.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = gauss(rng);
    b += 1e-10 * (1.0 + b.norm()) * d.normalized();
  }

  FeasibleContext ctx;
  ctx.mu = Vector::Zero(prob.num_side());
  ctx.beta2 = options.beta_init > 0 ? options.beta_init : 1.0 / (1.0 + prob.b.norm());
  ctx.gn_max_iters = options.gn_max_iters;
  ctx.pcg_max_iters = options.pcg_max_iters;
  ctx.armijo_c = options.armijo_c;
  ctx.precond = options.feasible_precond;
  if (!should_form_gram(prob.A, options.weight)) {
    ctx.fill_exceeds = true;
  } else {
    const auto fe = estimate_fill(prob.A.gram_pattern(), options.weight.fill_threshold);
    ctx.fill_exceeds = fe.predicted_factor_nnz > options.weight.fill_threshold;
  }
  if (ctx.fill_exceeds && ctx.precond == PcgPrecond::Cholesky) ctx.precond = PcgPrecond::Diagonal;

  StageState state;
  FactorPoint R = random_factor(prob, options.initial_rank, options.seed);
  Multipliers mult{Vector::Zero(prob.num_eq()), Vector::Zero(prob.num_side())};
  double eps = options.eps_init;

  auto do_switch = [&](const StageState& next, const std::string& detail) {
    state = next;
    h.switch_reason = next.switch_reason;
    h.events.push_back({h.iter, next.switch_reason, detail});
    if (options.verbose)
      log << "switch to palm: " << to_string(next.switch_reason) << " (" << detail << ")\n";
  };

  {
    const auto rr = retract(prob.A, b, R, R, 0.0, ctx.precond, options.init_gn_max_iters, ctx.pcg_max_iters);
    h.numCGiter += rr.pcg_iters;
    if (rr.converged) {
      R = rr.R;
    } else {
      SwitchSignals s;
      s.retraction_failed = true;
      do_switch(switch_decision(state, s), "no feasible starting point");
    }
  }

  const double side_beta_max = options.beta_max;
  double side_old = prob.has_side() ? pfeas_parts(prob, R, ctx.mu, ctx.beta2).second : 0.0;
  double t_next = 1.0;
  FactorPoint prev_R, prev_H;
  double best_kkt = std::numeric_limits<double>::infinity();
  int since_best = 0;
  constexpr int kStallWindow = 500;

  while (state.stage == StageKind::Feasible) {
    if (h.inner_iters >= options.max_iters || elapsed() > options.max_time) break;

    ManifoldPoint mp;
    try {
      mp = manifold_point(prob, R, ctx);
    } catch (const ObjectiveError& e) {
      h.status = SolveStatus::Failed;
      h.message = std::string("objective failed: ") + e.what();
      finish(prob, h, R, mult, ctx.beta2, options.eig);
      h.ttime = elapsed();
      return h;
    }
    h.numCGiter += mp.tp.stats.pcg_iters;
    if (!mp.tp.stats.converged) {
      SwitchSignals s;
      s.pcg_failed = true;
      s.pcg_kind = mp.tp.stats.kind;
      s.fill_exceeds = ctx.fill_exceeds;
      do_switch(switch_decision(state, s), "tangent-space PCG did not converge");
      break;
    }

    mult.lam = 0.5 * mp.tp.nu;
    mult.mu = prob.has_side() ? mp.ev.mu_hat : Vector();
    const DualSlack S = dual_slack_from(prob, mp.ev.objective, mult.lam, mult.mu);
    const KktResiduals kkt = kkt_residuals(prob, R, mult, ctx.beta2, mp.ev.objective, S, options.eig);
    ++h.iter;
    IterationRecord rec;
    rec.iter = h.iter;
    rec.stage = StageKind::Feasible;
    // Set to 1 below once a step or escape is taken from this point.
    rec.inner_iters = 0;
    rec.fval = mp.ev.objective.value;
    rec.kkt = kkt;
    rec.beta2 = ctx.beta2;
    rec.eps = eps;
    rec.ranks = psd_ranks(prob, R);
    rec.time = elapsed();
    h.trace.push_back(rec);
    if (options.verbose) {
      char line[256];
      std::snprintf(line, sizeof line, "feas %4d  fval %+.8e  pfeas %.2e  dfeas %.2e  comp %.2e  |H| %.2e  rank %d\n",
                    h.iter, rec.fval, kkt.pfeas, kkt.dfeas, kkt.comp, std::sqrt(inner(mp.tp.H, mp.tp.H)),
                    rec.ranks.empty() ? 0 : rec.ranks[0]);
      log << line;
    }
    if (kkt.max_kkt <= options.tol) {
      h.status = SolveStatus::Converged;
      h.message = "KKT residuals below tolerance";
      break;
    }
    if (kkt.max_kkt < 0.99 * best_kkt) {
      best_kkt = kkt.max_kkt;
      since_best = 0;
    } else if (++since_best >= kStallWindow) {
      SwitchSignals s;
      s.stalled = true;
      do_switch(switch_decision(state, s), "no KKT progress");
      break;
    }

    const double hn = std::sqrt(inner(mp.tp.H, mp.tp.H));
    if (hn <= 0.5 * eps) {
      double neg = 0.0;
      for (const auto& Sk : S.psd) neg += std::pow(negative_part_norm(Sk, options.eig), 2);
      if (std::sqrt(hn * hn + neg) <= eps) {
        if (prob.has_side()) {
          ctx.mu = mp.ev.mu_hat;
          const double side_new = pfeas_parts(prob, R, ctx.mu, ctx.beta2).second;
          if (side_new > options.progress_ratio * side_old)
            ctx.beta2 = std::min(side_beta_max, ctx.beta2 * options.beta_factor);
          side_old = side_new;
        }
        eps = std::max(0.1 * options.tol, options.eps_rho * eps);
        prev_R.blocks.clear();
        t_next = 1.0;
        continue;
      }
      const auto esc = manifold_escape(prob, b, R, S, mp.ev.value, ctx, options);
      h.numCGiter += esc.pcg_iters;
      ++h.inner_iters;
      h.trace.back().inner_iters = 1;
      if (esc.escaped) {
        R = esc.R;
        prev_R.blocks.clear();
        t_next = 1.0;
        continue;
      }
      SwitchSignals s;
      s.stalled = true;
      do_switch(switch_decision(state, s), "rank escape found no decrease");
      break;
    }

    auto step = line_search(prob, b, R, mp, ctx, t_next);
    h.numCGiter += step.pcg_iters;
    ++h.inner_iters;
    h.trace.back().inner_iters = 1;
    if (step.state.stage != StageKind::Feasible) {
      do_switch(step.state, step.signals.retraction_failed ? "Gauss-Newton retraction did not converge"
                                                            : "line search made no progress");
      break;
    }
    // Barzilai-Borwein step from consecutive points and gradients.
    const FactorPoint s_k = axpy(step.R, -1.0, R);
    prev_R = R;
    prev_H = mp.tp.H;
    R = std::move(step.R);
    const auto next_grad = manifold_point(prob, R, ctx);
    h.numCGiter += next_grad.tp.stats.pcg_iters;
    const FactorPoint y_k = axpy(next_grad.tp.H, -1.0, prev_H);
    const double ss = inner(s_k, s_k), sy = inner(s_k, y_k);
    t_next = options.bb_step && sy > 0 ? ss / sy : 2.0 * step.step;
    t_next = std::clamp(t_next, 1e-20, 1e20);
  }

  h.ttime = elapsed();
  if (state.stage == StageKind::Feasible) {
    finish(prob, h, R, mult, ctx.beta2, options.eig);
    h.final_stage = StageKind::Feasible;
    h.ttime = elapsed();
    return h;
  }

  if (options.stage == StageOption::FeasibleOnly) {
    finish(prob, h, R, mult, ctx.beta2, options.eig);
    h.status = SolveStatus::Failed;
    h.message = std::string("feasible stage stopped: ") + to_string(state.switch_reason);
    h.final_stage = StageKind::Feasible;
    h.ttime = elapsed();
    return h;
  }

  PalmState warm;
  warm.R = R;
  warm.mult.lam = mult.lam.size() == prob.num_eq() ? mult.lam : Vector::Zero(prob.num_eq());
  warm.mult.mu = ctx.mu;
  warm.beta1 = options.beta_init > 0 ? options.beta_init : 1.0 / (1.0 + prob.b.norm());
  warm.beta2 = ctx.beta2;
  warm.eps = options.eps_init;
  return palm_solve(prob, options, &warm, &h);
}

RunHistory solve(const ConicProblem& prob, const SolveOptions& options) {
  if (options.stage == StageOption::PalmOnly) return palm_solve(prob, options);
  return sdpfplus_solve(prob, options);
}

}  // namespace palmsdp
