#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "palmsdp/errors.hpp"
#include "palmsdp/generators.hpp"
#include "palmsdp/problem.hpp"
#include "support.hpp"

using namespace palmsdp;
using namespace palmsdp::testing;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::vector<ConvexSet> sample_sets(int p) {
  std::mt19937_64 rng(21);
  Vector lo = gaussian(p, 1, rng), hi = lo + gaussian(p, 1, rng).cwiseAbs();
  lo[0] = -kInf;
  return {ConvexSet::box(lo, hi), ConvexSet::nonneg(p), ConvexSet::free(p), ConvexSet::zero(p)};
}

}  // namespace

TEST(ProjectSide, Examples) {
  const Vector box = project_side(ConvexSet::box(Vector::Zero(3), Vector::Ones(3)), vec({-0.5, 0.3, 2.0}));
  EXPECT_EQ(box, vec({0.0, 0.3, 1.0}));
  const Vector y = vec({-3.0, 7.5});
  EXPECT_EQ(project_side(ConvexSet::free(2), y), y);
  EXPECT_EQ(project_side(ConvexSet::nonneg(2), vec({-1.0, 4.0})), vec({0.0, 4.0}));
}

TEST(ProjectSide, BoxClassification) {
  EXPECT_EQ(ConvexSet::box(Vector::Zero(2), Vector::Zero(2)).kind(), ConvexSet::Kind::Zero);
  EXPECT_EQ(ConvexSet::box(Vector::Zero(2), Vector::Constant(2, kInf)).kind(), ConvexSet::Kind::Nonneg);
  EXPECT_EQ(ConvexSet::box(Vector::Constant(2, -kInf), Vector::Constant(2, kInf)).kind(), ConvexSet::Kind::Free);
  EXPECT_EQ(ConvexSet::box(Vector::Zero(2), Vector::Ones(2)).kind(), ConvexSet::Kind::Box);
  EXPECT_THROW(ConvexSet::box(Vector::Ones(1), Vector::Zero(1)), InvalidInput);
}

TEST(ProjectSide, IdempotentAndNonExpansive) {
  std::mt19937_64 rng(22);
  for (const auto& set : sample_sets(6)) {
    for (int t = 0; t < 50; ++t) {
      const Vector a = 3.0 * gaussian(6, 1, rng), b = 3.0 * gaussian(6, 1, rng);
      const Vector pa = set.project(a), pb = set.project(b);
      EXPECT_LE((set.project(pa) - pa).norm(), 0.0);
      EXPECT_LE((pa - pb).norm(), (a - b).norm() + 1e-15);
    }
  }
}

TEST(Moreau, InsideSet) {
  const ConvexSet set = ConvexSet::box(Vector::Zero(2), Vector::Ones(2));
  const Vector mu = vec({0.2, -0.4});
  const double beta = 2.0;
  const Vector v = vec({0.5, 0.5}) + mu / beta;
  const auto m = moreau_value_grad(set, v, mu, beta);
  EXPECT_LE(m.gradient.norm(), 1e-15);
  EXPECT_NEAR(m.value, -mu.squaredNorm() / (2 * beta), 1e-15);
}

TEST(Moreau, ZeroSetDistance) {
  const auto m = moreau_value_grad(ConvexSet::zero(1), vec({3.0}), vec({0.0}), 1.0);
  EXPECT_DOUBLE_EQ(m.value, 4.5);
  EXPECT_DOUBLE_EQ(m.gradient[0], 3.0);
}

TEST(Moreau, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(23);
  {
    const ConvexSet set = ConvexSet::box(Vector::Zero(1), Vector::Ones(1));
    const Vector mu = vec({1.0});
    const auto m = moreau_value_grad(set, vec({2.0}), mu, 2.0);
    const double fd = directional_fd([&](double h) { return moreau_value_grad(set, vec({2.0 + h}), mu, 2.0).value; });
    EXPECT_LE(rel_err(m.gradient[0], fd, 1e-8), 1e-6);
  }
  for (const auto& set : sample_sets(5)) {
    for (int t = 0; t < 50; ++t) {
      const Vector v = 2.0 * gaussian(5, 1, rng), mu = gaussian(5, 1, rng), d = gaussian(5, 1, rng);
      const double beta = 0.5 + t % 3;
      const auto m = moreau_value_grad(set, v, mu, beta);
      const double fd =
          directional_fd([&](double h) { return moreau_value_grad(set, v + h * d, mu, beta).value; });
      EXPECT_LE(rel_err(m.gradient.dot(d), fd, 1e-8 * (1.0 + std::abs(m.value))), 1e-6);
    }
  }
}

TEST(Objective, LinearIdentityCost) {
  ProblemBuilder pb;
  const int k = pb.add_psd_block(3);
  for (int i = 0; i < 3; ++i) pb.add_cost(k, i, i, 1.0);
  const ConicProblem prob = pb.build();
  FactorPoint R;
  R.blocks.push_back(Matrix::Zero(3, 1));
  R.blocks[0](0, 0) = 1.0;
  const auto ev = eval_objective(prob, R);
  EXPECT_DOUBLE_EQ(ev.value, 1.0);
  EXPECT_LE((ev.psd[0].to_dense() - Matrix::Identity(3, 3)).norm(), 0.0);
}

TEST(Objective, SquareLossAtIdentity) {
  WeightedLoss loss;
  loss.weight = Matrix::Ones(2, 2);
  loss.target = Matrix::Zero(2, 2);
  const auto ev = eval_weighted_loss(loss, {{BlockKind::Psd, 2}}, {Matrix::Identity(2, 2)});
  EXPECT_DOUBLE_EQ(ev.value, 1.0);
  EXPECT_LE((ev.gradient[0] - Matrix::Identity(2, 2)).norm(), 1e-15);
}

TEST(Objective, HuberGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(24);
  WeightedLoss loss;
  loss.kind = LossKind::Huber;
  loss.delta = 0.1;
  loss.weight = Matrix::Ones(4, 4);
  loss.target = Matrix::Zero(4, 4);
  const std::vector<BlockSpec> blocks{{BlockKind::Psd, 4}};
  for (int t = 0; t < 20; ++t) {
    Matrix X = 0.2 * gaussian(4, 4, rng);
    X = 0.5 * (X + X.transpose());
    Matrix D = gaussian(4, 4, rng);
    D = 0.5 * (D + D.transpose());
    const auto ev = eval_weighted_loss(loss, blocks, {X});
    const double fd = directional_fd([&](double h) { return eval_weighted_loss(loss, blocks, {X + h * D}).value; });
    EXPECT_LE(rel_err(ev.gradient[0].cwiseProduct(D).sum(), fd, 1e-8), 1e-5);
  }
}

TEST(Objective, HuberGradientAtThreshold) {
  // Entries sitting exactly on +-delta, where the two branches meet.
  WeightedLoss loss;
  loss.kind = LossKind::Huber;
  loss.delta = 0.1;
  loss.weight = Matrix::Ones(2, 2);
  loss.target = Matrix::Zero(2, 2);
  Matrix X(2, 2);
  X << 0.1, -0.1, -0.1, 0.1;
  const std::vector<BlockSpec> blocks{{BlockKind::Psd, 2}};
  const auto ev = eval_weighted_loss(loss, blocks, {X});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Matrix E = Matrix::Zero(2, 2);
      E(i, j) = E(j, i) = 1.0;
      const double fd = directional_fd([&](double h) { return eval_weighted_loss(loss, blocks, {X + h * E}).value; });
      EXPECT_LE(rel_err(ev.gradient[0].cwiseProduct(E).sum(), fd, 1e-8), 1e-5);
    }
}

TEST(Objective, HuberIsContinuousAtNegativeThreshold) {
  WeightedLoss loss;
  loss.kind = LossKind::Huber;
  loss.delta = 0.1;
  loss.weight = Matrix::Ones(1, 1);
  loss.target = Matrix::Zero(1, 1);
  const std::vector<BlockSpec> blocks{{BlockKind::Psd, 1}};
  const double below = eval_weighted_loss(loss, blocks, {Matrix::Constant(1, 1, -0.1 - 1e-9)}).value;
  const double above = eval_weighted_loss(loss, blocks, {Matrix::Constant(1, 1, -0.1 + 1e-9)}).value;
  EXPECT_NEAR(below, above, 1e-9);
  EXPECT_NEAR(above, 0.005, 1e-9);
}

TEST(Objective, LinearValueViaFactorsMatchesDense) {
  std::mt19937_64 rng(25);
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + t % 7;
    ProblemBuilder pb;
    const int k = pb.add_psd_block(n);
    const SymSparse C = random_sym(n, 0.5, rng);
    for (const auto& e : C.entries()) pb.add_cost(k, e.row, e.col, e.value);
    const ConicProblem prob = pb.build();
    FactorPoint R;
    R.blocks.push_back(gaussian(n, 2, rng));
    const Matrix X = R.blocks[0] * R.blocks[0].transpose();
    EXPECT_NEAR(eval_objective(prob, R).value, C.to_dense().cwiseProduct(X).sum(), 1e-12 * (1.0 + X.norm()));
  }
}

TEST(Objective, CallbackRegistrationChecksGradient) {
  ProblemBuilder pb;
  pb.add_psd_block(3);
  auto good = [](const std::vector<Matrix>& X) {
    ObjectiveEval e;
    e.value = 0.5 * X[0].squaredNorm();
    e.gradient = {X[0]};
    return e;
  };
  auto bad = [](const std::vector<Matrix>& X) {
    ObjectiveEval e;
    e.value = 0.5 * X[0].squaredNorm();
    e.gradient = {2.0 * X[0]};
    return e;
  };
  EXPECT_NO_THROW(pb.set_objective(Objective::callback(good)));
  EXPECT_THROW(pb.set_objective(Objective::callback(bad)), InvalidInput);
  EXPECT_LE(gradient_check({{BlockKind::Psd, 3}}, good, 3, 1), 1e-5);
}

TEST(Builder, TraceExample) {
  ProblemBuilder pb;
  const int k = pb.add_psd_block(2);
  pb.add_constraint({{k, 0, 0, 1.0}, {k, 1, 1, 1.0}}, 1.0);
  pb.add_cost(k, 0, 0, 1.0);
  pb.add_cost(k, 1, 1, 1.0);
  const ConicProblem prob = pb.build();
  EXPECT_EQ(prob.num_eq(), 1);
  EXPECT_EQ(prob.num_side(), 0);
  EXPECT_TRUE(prob.is_standard_linear());
  const auto row = prob.A.row_coefficients(0);
  ASSERT_EQ(row.size(), 2u);
  EXPECT_DOUBLE_EQ(prob.b[0], 1.0);
  EXPECT_NO_THROW(prob.validate());
}

TEST(Builder, RejectsBadInput) {
  ProblemBuilder pb;
  EXPECT_THROW(pb.add_block(BlockKind::Psd, 0), InvalidInput);
  const int k = pb.add_psd_block(2);
  EXPECT_THROW(pb.add_side_row({{k, 0, 0, 1.0}}, 1.0, 0.0), InvalidInput);
  pb.add_constraint({{k, 0, 2, 1.0}}, 1.0);
  EXPECT_THROW(pb.build(), InvalidInput);
  ProblemBuilder vb;
  const int v = vb.add_block(BlockKind::NonnegVector, 3);
  vb.add_constraint({{v, 0, 1, 1.0}}, 0.0);
  EXPECT_THROW(vb.build(), InvalidInput);
}

TEST(Builder, ValidateCatchesMismatch) {
  ConicProblem prob = gen_maxcut(cycle_graph(5));
  prob.b = Vector::Ones(3);
  EXPECT_THROW(prob.validate(), InvalidInput);
}

TEST(MultiMap, ApplyMatchesDenseOverMixedBlocks) {
  const ConicProblem prob = random_instance(4, InstanceKind::BoxSide);
  std::mt19937_64 rng(26);
  FactorPoint R;
  R.blocks.push_back(gaussian(prob.blocks[0].dim, 2, rng));
  R.blocks.push_back(gaussian(prob.blocks[1].dim, 1, rng).cwiseAbs());
  const auto X = form_blocks(prob.blocks, R);
  EXPECT_LE((prob.A.apply(R) - prob.A.apply_dense(X)).norm(), 1e-12 * (1.0 + R.squared_norm()));
  EXPECT_LE((prob.B.apply(R) - prob.B.apply_dense(X)).norm(), 1e-12 * (1.0 + R.squared_norm()));
}

TEST(Generators, ThetaStructure) {
  const ConicProblem prob = gen_theta(named_graph("c5"));
  EXPECT_EQ(prob.num_eq(), 6);
  EXPECT_EQ(prob.blocks[0].dim, 5);
  EXPECT_DOUBLE_EQ(prob.b[0], 1.0);
  for (int i = 1; i < 6; ++i) EXPECT_DOUBLE_EQ(prob.b[i], 0.0);
  // At X = J/n the objective is -n.
  FactorPoint R;
  R.blocks.push_back(Matrix::Constant(5, 1, 1.0 / std::sqrt(5.0)));
  EXPECT_NEAR(eval_objective(prob, R).value, -5.0, 1e-12);
  const ConicProblem plus = gen_theta(named_graph("c5"), ThetaVariant::Plus);
  EXPECT_EQ(plus.num_side(), 5);
}

TEST(Generators, MaxCutAndNcm) {
  const ConicProblem mc = gen_maxcut(complete_graph(3));
  EXPECT_EQ(mc.num_eq(), 3);
  FactorPoint R;
  R.blocks.push_back(Matrix::Identity(3, 3));
  // <-L/4, I> = -trace(L)/4 = -6/4.
  EXPECT_NEAR(eval_objective(mc, R).value, -1.5, 1e-12);

  const NcmData a = ncm_data(6, 9), b = ncm_data(6, 9);
  EXPECT_EQ(a.weight, b.weight);
  EXPECT_EQ(a.target, b.target);
  EXPECT_GE(a.weight.minCoeff(), 0.1);
  EXPECT_LE(a.weight.maxCoeff(), 10.0);
  EXPECT_LE((a.weight - a.weight.transpose()).norm(), 0.0);
  EXPECT_EQ(gen_ncm(6, LossKind::Huber, 9).num_eq(), 6);
}

TEST(Generators, NamedGraphsAndGset) {
  EXPECT_EQ(named_graph("petersen").edges.size(), 15u);
  EXPECT_EQ(named_graph("cycle:7").edges.size(), 7u);
  EXPECT_EQ(named_graph("complete:4").edges.size(), 6u);
  EXPECT_THROW(named_graph("wheel:4"), InvalidInput);
  const Graph g = parse_gset("3 2\n1 2 1\n2 3 -1\n");
  EXPECT_EQ(g.n, 3);
  ASSERT_EQ(g.edges.size(), 2u);
  EXPECT_EQ(g.edges[1].u, 1);
  EXPECT_DOUBLE_EQ(g.edges[1].w, -1.0);
  EXPECT_THROW(parse_gset("3 2\n1 2 1\n"), ParseError);
}
