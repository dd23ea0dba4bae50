#pragma once

#include <limits>
#include <vector>

#include "palmsdp/eigen_min.hpp"
#include "palmsdp/problem.hpp"

namespace palmsdp {

struct Multipliers {
  Vector lam;  // equality constraints
  Vector mu;   // side constraints
};

/// S = grad f(X) - A*(lam) - B*(mu), per block.
struct DualSlack {
  std::vector<SymOperator> psd;  // PSD blocks (empty entries elsewhere)
  std::vector<Vector> vec;       // vector blocks (empty entries elsewhere)

  double frobenius_norm() const;
};

DualSlack dual_slack_from(const ConicProblem& prob, const ObjectiveValueGrad& grad, const Vector& lam,
                          const Vector& mu);

struct KktResiduals {
  double pfeas = 0.0;
  double dfeas = 0.0;
  /// Reported complementarity: min(raw comp, pdgap) when pdgap applies.
  double comp = 0.0;
  double comp_raw = 0.0;
  /// NaN unless the objective is linear and there are no side constraints.
  double pdgap = std::numeric_limits<double>::quiet_NaN();
  double max_kkt = 0.0;

  bool pdgap_applicable() const { return pdgap == pdgap; }
};

/// pfeas = max(||A(X)-b|| / (1+||b||), ||B(X)-y|| / (1+||B(X)||)) with
/// y = Pi_P(B(X) - mu/beta2);
/// dfeas = ||Pi_+(-S)||_F / (1+||S||_F), vector blocks contributing
/// min(s,0) (nonneg) or s (free);
/// comp = |<X,S>| / (1+||grad f||_F);
/// pdgap = |lam^T b - <C,X>| / (1+|lam^T b|+|<C,X>|).
KktResiduals kkt_residuals(const ConicProblem& prob, const FactorPoint& R, const Multipliers& mult, double beta2,
                           const EigConfig& eig = {});

/// Same, with the slack and objective gradient already at hand.
KktResiduals kkt_residuals(const ConicProblem& prob, const FactorPoint& R, const Multipliers& mult, double beta2,
                           const ObjectiveValueGrad& grad, const DualSlack& S, const EigConfig& eig = {});

}  // namespace palmsdp
