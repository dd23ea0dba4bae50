#include <gtest/gtest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "palmsdp/generators.hpp"
#include "palmsdp/palm.hpp"
#include "palmsdp/subproblem.hpp"
#include "support.hpp"

using namespace palmsdp;
using namespace palmsdp::testing;

namespace {

ConicProblem linear_only(const Matrix& C) {
  ProblemBuilder pb;
  const int k = pb.add_psd_block(static_cast<int>(C.rows()));
  for (int j = 0; j < C.cols(); ++j)
    for (int i = 0; i <= j; ++i)
      if (C(i, j) != 0.0) pb.add_cost(k, i, j, C(i, j));
  return pb.build();
}

FactorPoint single(const Matrix& R) {
  FactorPoint p;
  p.blocks.push_back(R);
  return p;
}

Matrix project_psd(const Matrix& X) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(X);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose();
}

// min <C,X> - lam^T (diag X - 1) + beta/2 ||diag X - 1||^2 over X psd, by
// accelerated projected gradient on the full matrix.
double dense_maxcut_subproblem(const Matrix& C, const Vector& lam, double beta) {
  const int n = static_cast<int>(C.rows());
  auto value = [&](const Matrix& X) {
    const Vector r = X.diagonal() - Vector::Ones(n);
    return C.cwiseProduct(X).sum() - lam.dot(r) + 0.5 * beta * r.squaredNorm();
  };
  Matrix X = Matrix::Identity(n, n), Y = X;
  double t = 1.0;
  for (int it = 0; it < 20000; ++it) {
    const Vector r = Y.diagonal() - Vector::Ones(n);
    Matrix G = C;
    G.diagonal() += beta * r - lam;
    const Matrix Xn = project_psd(Y - G / beta);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    Y = Xn + ((t - 1.0) / tn) * (Xn - X);
    X = Xn;
    t = tn;
  }
  return value(X);
}

SubproblemParams penalty_params(int m, double beta1) {
  SubproblemParams p;
  p.lam = Vector::Zero(m);
  p.beta1 = beta1;
  return p;
}

}  // namespace

TEST(SubproblemValueGrad, TraceConstraintExample) {
  ProblemBuilder pb;
  const int k = pb.add_psd_block(2);
  pb.add_constraint({{k, 0, 0, 1.0}, {k, 1, 1, 1.0}}, 1.0);
  const ConicProblem prob = pb.build();
  const FactorPoint R = single(Matrix::Ones(2, 1));
  const SubproblemEval ev = subproblem_value_grad(prob, R, penalty_params(1, 1.0));
  EXPECT_DOUBLE_EQ(ev.value, 0.5);
  EXPECT_LE((ev.grad.blocks[0] - 2.0 * R.blocks[0]).norm(), 1e-15);
}

TEST(SubproblemValueGrad, FeasiblePointHasObjectiveGradient) {
  const ConicProblem prob = gen_maxcut(cycle_graph(5));
  std::mt19937_64 rng(41);
  Matrix R = gaussian(5, 3, rng);
  R.rowwise().normalize();
  SubproblemParams p = penalty_params(5, 7.0);
  const SubproblemEval ev = subproblem_value_grad(prob, single(R), p);
  const Matrix C = eval_objective(prob, single(R)).psd[0].to_dense();
  EXPECT_LE((ev.grad.blocks[0] - 2.0 * C * R).norm(), 1e-12);
}

TEST(SubproblemValueGrad, ClassicalAlmValueTermByTerm) {
  std::mt19937_64 rng(42);
  for (int t = 0; t < 10; ++t) {
    const ConicProblem prob = random_instance(50 + t, InstanceKind::Plain);
    const FactorPoint R = random_factor(prob, 3, t);
    SubproblemParams p;
    p.lam = gaussian(prob.num_eq(), 1, rng);
    p.beta1 = 2.5;
    const auto X = form_blocks(prob.blocks, R);
    const Vector r = prob.A.apply_dense(X) - prob.b;
    const double expected = eval_objective_dense(prob, X).value - p.lam.dot(r) + 0.5 * p.beta1 * r.squaredNorm();
    EXPECT_NEAR(subproblem_value(prob, R, p), expected, 1e-12 * (1.0 + std::abs(expected)));
  }
}

TEST(SubproblemValueGrad, BoxSideGradientMatchesFiniteDifferences) {
  const ConicProblem prob = random_instance(43, InstanceKind::BoxSide);
  std::mt19937_64 rng(43);
  SubproblemParams p;
  p.lam = gaussian(prob.num_eq(), 1, rng);
  p.mu = gaussian(prob.num_side(), 1, rng);
  p.beta1 = 1.3;
  p.beta2 = 0.7;
  for (int t = 0; t < 10; ++t) {
    FactorPoint R = random_factor(prob, 2, 100 + t);
    for (std::size_t k = 0; k < prob.blocks.size(); ++k)
      if (prob.blocks[k].kind == BlockKind::NonnegVector) R.blocks[k] = gaussian(prob.blocks[k].dim, 1, rng).cwiseAbs();
    const SubproblemEval ev = subproblem_value_grad(prob, R, p);
    FactorPoint D = R;
    double slope = 0.0;
    for (std::size_t k = 0; k < R.blocks.size(); ++k) {
      D.blocks[k] = gaussian(static_cast<int>(R.blocks[k].rows()), static_cast<int>(R.blocks[k].cols()), rng);
      slope += ev.grad.blocks[k].cwiseProduct(D.blocks[k]).sum();
    }
    const double fd = directional_fd([&](double h) {
      FactorPoint Q = R;
      for (std::size_t k = 0; k < Q.blocks.size(); ++k) Q.blocks[k] += h * D.blocks[k];
      return subproblem_value(prob, Q, p);
    });
    EXPECT_LE(rel_err(slope, fd, 1e-8 * (1.0 + std::abs(ev.value))), 1e-6);
  }
}

TEST(DualSlack, IdentityCostWithoutConstraints) {
  const ConicProblem prob = linear_only(Matrix::Identity(3, 3));
  const DualSlack S = dual_slack(prob, single(Matrix::Ones(3, 1)), SubproblemParams{});
  EXPECT_LE((S.psd[0].to_dense() - Matrix::Identity(3, 3)).norm(), 0.0);
}

TEST(DualSlack, MatchesDenseAssembly) {
  std::mt19937_64 rng(44);
  for (int t = 0; t < 10; ++t) {
    const ConicProblem prob = random_instance(60 + t, InstanceKind::Plain);
    const FactorPoint R = random_factor(prob, 2, t);
    SubproblemParams p;
    p.lam = gaussian(prob.num_eq(), 1, rng);
    p.beta1 = 3.0;
    const auto X = form_blocks(prob.blocks, R);
    const Vector lam_hat = p.lam - p.beta1 * (prob.A.apply_dense(X) - prob.b);
    const Matrix expected = eval_objective_dense(prob, X).gradient[0] - Matrix(prob.A.adjoint_psd(0, lam_hat));
    const Matrix S = dual_slack(prob, R, p).psd[0].to_dense();
    EXPECT_LE((S - expected).norm(), 1e-12 * (1.0 + expected.norm()));
  }
}

TEST(MinimizeSubproblem, FreeVectorQuadratic) {
  ProblemBuilder pb;
  pb.add_block(BlockKind::FreeVector, 4);
  const Vector c = Vector::LinSpaced(4, -1.5, 2.0);
  pb.set_objective(Objective::callback([c](const std::vector<Matrix>& X) {
    ObjectiveEval e;
    e.value = 0.5 * (X[0].col(0) - c).squaredNorm();
    e.gradient = {X[0].col(0) - c};
    return e;
  }));
  const ConicProblem prob = pb.build();
  SubproblemParams p;
  p.eps = 1e-9;
  const SubproblemResult res = minimize_subproblem(prob, single(Matrix::Zero(4, 1)), p);
  EXPECT_EQ(res.status, SubproblemStatus::Converged);
  EXPECT_LE((res.R.blocks[0].col(0) - c).norm(), 1e-8);
  EXPECT_LE(res.eval.grad.blocks[0].norm(), p.eps);
}

TEST(MinimizeSubproblem, TriangleMaxCutMatchesDenseOptimum) {
  const ConicProblem prob = gen_maxcut(complete_graph(3));
  const Matrix C = eval_objective(prob, single(Matrix::Identity(3, 3))).psd[0].to_dense();
  std::mt19937_64 rng(45);
  for (int t = 0; t < 3; ++t) {
    SubproblemParams p = penalty_params(3, 10.0);
    if (t > 0) p.lam = gaussian(3, 1, rng);
    p.eps = 1e-8;
    const SubproblemResult res = minimize_subproblem(prob, random_factor(prob, 2, t), p);
    EXPECT_EQ(res.status, SubproblemStatus::Converged);
    EXPECT_LE(res.residual, 1e-6);
    EXPECT_LE(check_stationarity(prob, res.R, p), 1e-6);
    const double dense = dense_maxcut_subproblem(C, p.lam, p.beta1);
    EXPECT_NEAR(res.eval.value, dense, 1e-5);
  }
}

TEST(MinimizeSubproblem, AcceptedStepsNeverIncreaseValue) {
  const ConicProblem prob = random_instance(46, InstanceKind::BoxSide);
  std::mt19937_64 rng(46);
  SubproblemParams p;
  p.lam = gaussian(prob.num_eq(), 1, rng);
  p.mu = gaussian(prob.num_side(), 1, rng);
  p.beta1 = 2.0;
  p.beta2 = 2.0;
  p.eps = 1e-10;
  const FactorPoint R0 = random_factor(prob, 2, 46);
  double prev = subproblem_value(prob, R0, p);
  for (int k = 1; k <= 40; ++k) {
    p.max_inner_iters = k;
    const SubproblemResult res = minimize_subproblem(prob, R0, p);
    EXPECT_LE(res.eval.value, prev) << "after " << k << " steps";
    prev = res.eval.value;
  }
}

TEST(MinimizeSubproblem, NonFiniteValueIsNumericalFailure) {
  ProblemBuilder pb;
  pb.add_block(BlockKind::FreeVector, 2);
  pb.set_objective(Objective::callback([](const std::vector<Matrix>& X) {
    ObjectiveEval e;
    e.value = 0.5 * X[0].squaredNorm();
    e.gradient = {X[0]};
    return e;
  }));
  const ConicProblem prob = pb.build();
  const SubproblemResult res =
      minimize_subproblem(prob, single(Matrix::Constant(2, 1, std::numeric_limits<double>::quiet_NaN())), {});
  EXPECT_EQ(res.status, SubproblemStatus::NumericalFailure);
}

TEST(EscapeRank, PositiveSlackHasNoEscape) {
  const ConicProblem prob = linear_only(Matrix::Identity(2, 2));
  const FactorPoint R = single(Matrix::Identity(2, 1));
  const SubproblemParams p;
  const EscapeResult res = escape_rank(prob, R, subproblem_value_grad(prob, R, p), p, 1);
  EXPECT_EQ(res.status, EscapeStatus::NoEscape);
}

TEST(EscapeRank, AppendsNegativeEigenvector) {
  Matrix C = Matrix::Zero(2, 2);
  C.diagonal() << 1, -1;
  const ConicProblem prob = linear_only(C);
  const FactorPoint R = single(Matrix::Identity(2, 1));
  const SubproblemParams p;
  const SubproblemEval ev = subproblem_value_grad(prob, R, p);
  const EscapeResult res = escape_rank(prob, R, ev, p, 1);
  ASSERT_EQ(res.status, EscapeStatus::Escaped);
  ASSERT_EQ(res.R.blocks[0].cols(), 2);
  EXPECT_EQ(res.added, 1);
  const Vector col = res.R.blocks[0].col(1);
  EXPECT_NEAR(std::abs(col[1]), col.norm(), 1e-12);
  EXPECT_GT(col.norm(), 0.0);
  EXPECT_LT(res.value, ev.value);
}

TEST(EscapeRank, TriangleMaxCutSaddle) {
  // R = 1 gives X = J: feasible, and 2 S R = -L 1 / 2 = 0, yet S = -L/4
  // has eigenvalue -3/4 twice.
  const ConicProblem prob = gen_maxcut(complete_graph(3));
  const FactorPoint R = single(Matrix::Ones(3, 1));
  const SubproblemParams p = penalty_params(3, 10.0);
  const SubproblemEval ev = subproblem_value_grad(prob, R, p);
  EXPECT_LE(ev.grad.blocks[0].norm(), 1e-14);
  const EscapeResult res = escape_rank(prob, R, ev, p, 1);
  ASSERT_EQ(res.status, EscapeStatus::Escaped);
  EXPECT_EQ(res.R.blocks[0].cols(), 2);
  EXPECT_LT(subproblem_value(prob, res.R, p), ev.value - 1e-12);
}

TEST(CheckStationarity, MinimizerOfConvexObjective) {
  const ConicProblem prob = linear_only(Matrix::Identity(3, 3));
  EXPECT_LE(check_stationarity(prob, single(Matrix::Zero(3, 1)), SubproblemParams{}), 1e-15);
}

TEST(CheckStationarity, NegativeSlackAtFullRank) {
  Matrix C = Matrix::Zero(2, 2);
  C.diagonal() << 1, -1;
  const ConicProblem prob = linear_only(C);
  EXPECT_GE(check_stationarity(prob, single(Matrix::Zero(2, 2)), SubproblemParams{}), 1.0);
}
