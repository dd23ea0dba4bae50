#include <gtest/gtest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "palmsdp/errors.hpp"
#include "palmsdp/generators.hpp"
#include "palmsdp/oracle.hpp"
#include "palmsdp/palm.hpp"
#include "support.hpp"

using namespace palmsdp;
using namespace palmsdp::testing;

namespace {

ConicProblem trace_problem(int n) {
  ProblemBuilder pb;
  const int k = pb.add_psd_block(n);
  std::vector<RowCoefficient> trace;
  for (int i = 0; i < n; ++i) {
    trace.push_back({k, i, i, 1.0});
    pb.add_cost(k, i, i, 1.0);
  }
  pb.add_constraint(trace, 1.0);
  return pb.build();
}

double min_eig(const Matrix& X) { return Eigen::SelfAdjointEigenSolver<Matrix>(X).eigenvalues().minCoeff(); }

}  // namespace

TEST(SolveDense, TraceProblem) {
  const DenseSolution d = solve_dense(trace_problem(2));
  EXPECT_NEAR(d.fval, 1.0, 1e-8);
  EXPECT_LE(d.certified_kkt.max_kkt, 1e-9);
}

TEST(SolveDense, ThetaOfFiveCycle) {
  const DenseSolution d = solve_dense(gen_theta(cycle_graph(5)));
  EXPECT_NEAR(d.fval, -std::sqrt(5.0), 1e-6);
}

TEST(SolveDense, ThetaOfPetersenAndEmptyGraph) {
  EXPECT_NEAR(solve_dense(gen_theta(petersen_graph())).fval, -4.0, 1e-6);
  // No edges: theta is the number of vertices.
  EXPECT_NEAR(solve_dense(gen_theta(empty_graph(4))).fval, -4.0, 1e-6);
}

TEST(SolveDense, TriangleMaxCutAgainstGrid) {
  // By symmetry and convexity an optimum has constant off-diagonal rho;
  // scan rho and keep the feasible (psd) best.
  const ConicProblem prob = gen_maxcut(complete_graph(3));
  const Matrix C = eval_objective_dense(prob, {Matrix::Identity(3, 3)}).gradient[0];
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 200000; ++k) {
    const double rho = -1.0 + 2.0 * k / 200000.0;
    Matrix X = Matrix::Constant(3, 3, rho);
    X.diagonal().setOnes();
    if (min_eig(X) < -1e-12) continue;
    best = std::min(best, C.cwiseProduct(X).sum());
  }
  EXPECT_NEAR(best, -2.25, 1e-4);
  EXPECT_NEAR(solve_dense(prob).fval, best, 1e-5);
}

TEST(SolveDense, SolutionInvariants) {
  for (const auto kind : {InstanceKind::BoxSide, InstanceKind::Ncm, InstanceKind::Plain}) {
    const ConicProblem prob = random_instance(91, kind);
    const DenseSolution d = solve_dense(prob);
    EXPECT_LE(d.certified_kkt.max_kkt, 1e-9);
    for (std::size_t k = 0; k < prob.blocks.size(); ++k) {
      const Matrix& X = d.X[k];
      if (prob.blocks[k].is_psd())
        EXPECT_GE(min_eig(X), -1e-9 * std::max(1.0, X.norm()));
      else if (prob.blocks[k].kind == BlockKind::NonnegVector)
        EXPECT_GE(X.minCoeff(), 0.0);
    }
    const KktResiduals again = certify(prob, d.X, d.lam, d.mu);
    EXPECT_EQ(again.max_kkt, d.certified_kkt.max_kkt);
  }
}

TEST(SolveDense, Deterministic) {
  const ConicProblem prob = random_instance(92, InstanceKind::BoxSide);
  EXPECT_EQ(solve_dense(prob).fval, solve_dense(prob).fval);
}

TEST(SolveDense, BudgetExhaustionThrows) {
  OracleOptions o;
  o.max_inner_total = 10;
  EXPECT_THROW(solve_dense(gen_theta(cycle_graph(5)), o), OracleFailed);
}

TEST(Certify, PerturbedTraceSolution) {
  const int n = 3;
  const ConicProblem prob = trace_problem(n);
  Matrix X = Matrix::Zero(n, n);
  X(0, 0) = 1.0;
  X += 1e-3 * Matrix::Identity(n, n);
  const KktResiduals r = certify(prob, {X}, Vector::Ones(1), Vector());
  EXPECT_NEAR(r.pfeas, n * 1e-3 / 2.0, 1e-15);
}

TEST(Certify, AgreesWithFactoredResiduals) {
  std::mt19937_64 rng(93);
  for (int t = 0; t < 12; ++t) {
    const auto kind = static_cast<InstanceKind>(t % 3);
    const ConicProblem prob = random_instance(200 + t, kind);
    FactorPoint R = random_factor(prob, 2, t);
    for (std::size_t k = 0; k < prob.blocks.size(); ++k)
      if (prob.blocks[k].kind == BlockKind::NonnegVector) R.blocks[k] = gaussian(prob.blocks[k].dim, 1, rng).cwiseAbs();
    Multipliers m;
    m.lam = gaussian(prob.num_eq(), 1, rng);
    m.mu = gaussian(prob.num_side(), 1, rng);
    const double beta2 = 1.7;
    const KktResiduals a = kkt_residuals(prob, R, m, beta2, EigConfig{});
    const KktResiduals b = certify(prob, form_blocks(prob.blocks, R), m.lam, m.mu, beta2);
    EXPECT_NEAR(a.pfeas, b.pfeas, 1e-12);
    EXPECT_NEAR(a.dfeas, b.dfeas, 1e-12);
    EXPECT_NEAR(a.comp, b.comp, 1e-12);
    EXPECT_NEAR(a.max_kkt, b.max_kkt, 1e-12);
    EXPECT_EQ(a.pdgap_applicable(), b.pdgap_applicable());
  }
}

TEST(Certify, OracleAgreesWithPalm) {
  for (int s = 0; s < 4; ++s) {
    const ConicProblem prob = random_instance(300 + s, s % 2 ? InstanceKind::Ncm : InstanceKind::BoxSide);
    const DenseSolution d = solve_dense(prob);
    SolveOptions o;
    o.stage = StageOption::PalmOnly;
    o.max_iters = 500000;
    const RunHistory h = palm_solve(prob, o);
    EXPECT_NEAR(h.fval, d.fval, 1e-5 * (1.0 + std::abs(d.fval))) << "seed " << s;
  }
}
