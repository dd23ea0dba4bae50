#include "palmsdp/kkt.hpp"

#include <algorithm>
#include <cmath>

#include "palmsdp/errors.hpp"

namespace palmsdp {

double DualSlack::frobenius_norm() const {
  double acc = 0.0;
  for (const auto& S : psd)
    if (S.dim > 0) acc += std::pow(S.frobenius_norm(), 2);
  for (const auto& s : vec) acc += s.squaredNorm();
  return std::sqrt(acc);
}

DualSlack dual_slack_from(const ConicProblem& prob, const ObjectiveValueGrad& grad, const Vector& lam,
                          const Vector& mu) {
  const int nb = static_cast<int>(prob.blocks.size());
  DualSlack S;
  S.psd.resize(nb);
  S.vec.resize(nb);
  for (int k = 0; k < nb; ++k) {
    if (prob.blocks[k].is_psd()) {
      SymOperator op = grad.psd[k];
      if (prob.num_eq() > 0) op.sparse -= prob.A.adjoint_psd(k, lam);
      if (prob.num_side() > 0) op.sparse -= prob.B.adjoint_psd(k, mu);
      S.psd[k] = std::move(op);
    } else {
      Vector s = grad.vec[k];
      if (prob.num_eq() > 0) s -= prob.A.adjoint_vec(k, lam);
      if (prob.num_side() > 0) s -= prob.B.adjoint_vec(k, mu);
      S.vec[k] = std::move(s);
    }
  }
  return S;
}

KktResiduals kkt_residuals(const ConicProblem& prob, const FactorPoint& R, const Multipliers& mult, double beta2,
                           const EigConfig& eig) {
  const auto grad = eval_objective(prob, R);
  const auto S = dual_slack_from(prob, grad, mult.lam, mult.mu);
  return kkt_residuals(prob, R, mult, beta2, grad, S, eig);
}

KktResiduals kkt_residuals(const ConicProblem& prob, const FactorPoint& R, const Multipliers& mult, double beta2,
                           const ObjectiveValueGrad& grad, const DualSlack& S, const EigConfig& eig) {
  if (mult.lam.size() != prob.num_eq() || mult.mu.size() != prob.num_side())
    throw InvalidInput("kkt_residuals: multiplier length mismatch");
  KktResiduals out;

  if (prob.num_eq() > 0) {
    const Vector r = prob.A.apply(R) - prob.b;
    out.pfeas = r.norm() / (1.0 + prob.b.norm());
  }
  if (prob.has_side()) {
    if (!(beta2 > 0)) throw InvalidInput("kkt_residuals: beta2 must be positive");
    const Vector Bx = prob.B.apply(R);
    const Vector y = prob.side.project(Bx - mult.mu / beta2);
    out.pfeas = std::max(out.pfeas, (Bx - y).norm() / (1.0 + Bx.norm()));
  }

  double neg2 = 0.0, xs = 0.0, grad2 = 0.0;
  for (std::size_t k = 0; k < prob.blocks.size(); ++k) {
    if (prob.blocks[k].is_psd()) {
      const double np = negative_part_norm(S.psd[k], eig);
      neg2 += np * np;
      xs += S.psd[k].quad(R.blocks[k]);
      grad2 += std::pow(grad.psd[k].frobenius_norm(), 2);
    } else {
      const Vector& s = S.vec[k];
      neg2 += prob.blocks[k].kind == BlockKind::NonnegVector ? s.cwiseMin(0.0).squaredNorm() : s.squaredNorm();
      xs += s.dot(R.blocks[k].col(0));
      grad2 += grad.vec[k].squaredNorm();
    }
  }
  out.dfeas = std::sqrt(neg2) / (1.0 + S.frobenius_norm());
  out.comp_raw = std::abs(xs) / (1.0 + std::sqrt(grad2));
  out.comp = out.comp_raw;

  if (prob.is_standard_linear()) {
    const double dual = prob.num_eq() > 0 ? mult.lam.dot(prob.b) : 0.0;
    const double primal = grad.value;
    out.pdgap = std::abs(dual - primal) / (1.0 + std::abs(dual) + std::abs(primal));
    out.comp = std::min(out.comp, out.pdgap);
  }
  out.max_kkt = std::max({out.pfeas, out.dfeas, out.comp});
  return out;
}

}  // namespace palmsdp
