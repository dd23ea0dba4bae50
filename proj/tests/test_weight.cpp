#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include <Eigen/Cholesky>

#include "palmsdp/errors.hpp"
#include "palmsdp/generators.hpp"
#include "palmsdp/ordering.hpp"
#include "palmsdp/weight.hpp"
#include "support.hpp"

using namespace palmsdp;
using namespace palmsdp::testing;

namespace {

GramPattern pattern_of(const Matrix& M) {
  GramPattern p;
  p.m = static_cast<int>(M.rows());
  for (int j = 0; j < p.m; ++j) {
    for (int i = 0; i <= j; ++i)
      if (i == j || M(i, j) != 0.0) p.index.push_back(i);
    p.offset.push_back(p.index.size());
  }
  return p;
}

GramMatrix gram_of(const Matrix& M) { return {SymSparse::from_dense(M), pattern_of(M)}; }

Matrix random_spd(int m, std::mt19937_64& rng) {
  const Matrix G = gaussian(m, m, rng);
  return G * G.transpose() + m * Matrix::Identity(m, m);
}

// Factor nonzeros of eliminating a boolean pattern in the given order.
int eliminate(std::vector<std::vector<bool>> adj, const std::vector<int>& order) {
  const int m = static_cast<int>(adj.size());
  std::vector<bool> gone(m, false);
  int count = 0;
  for (int v : order) {
    std::vector<int> nb;
    for (int u = 0; u < m; ++u)
      if (u != v && !gone[u] && adj[v][u]) nb.push_back(u);
    count += 1 + static_cast<int>(nb.size());
    for (int a : nb)
      for (int b : nb) adj[a][b] = true;
    gone[v] = true;
  }
  return count;
}

std::vector<std::vector<bool>> arrow(int m) {
  std::vector<std::vector<bool>> adj(m, std::vector<bool>(m, false));
  for (int i = 0; i < m; ++i) adj[i][i] = adj[0][i] = adj[i][0] = true;
  return adj;
}

}  // namespace

TEST(EstimateFill, DiagonalAndFull) {
  EXPECT_EQ(estimate_fill(GramPattern::diagonal(10)).predicted_factor_nnz, 10);
  EXPECT_EQ(estimate_fill(GramPattern::dense(10)).predicted_factor_nnz, 55);
  EXPECT_EQ(estimate_fill(GramPattern::dense(10)).predicted_gram_nnz, 55);
}

TEST(EstimateFill, ArrowMatchesBestElimination) {
  Matrix M = Matrix::Identity(5, 5);
  M.row(0).setOnes();
  M.col(0).setOnes();
  const FillEstimate est = estimate_fill(pattern_of(M));

  std::vector<int> order(5);
  std::iota(order.begin(), order.end(), 0);
  const int natural = eliminate(arrow(5), order);
  int best = natural;
  do best = std::min(best, eliminate(arrow(5), order));
  while (std::next_permutation(order.begin(), order.end()));

  EXPECT_EQ(natural, 15);
  EXPECT_EQ(best, 9);
  EXPECT_EQ(est.predicted_factor_nnz, best);
}

TEST(EstimateFill, SymbolicCountMatchesEliminationOracle) {
  std::mt19937_64 rng(31);
  std::bernoulli_distribution coin(0.2);
  for (int t = 0; t < 30; ++t) {
    const int m = 4 + t % 9;
    Matrix M = Matrix::Identity(m, m);
    std::vector<std::vector<bool>> adj(m, std::vector<bool>(m, false));
    for (int i = 0; i < m; ++i) adj[i][i] = true;
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < j; ++i)
        if (coin(rng)) M(i, j) = M(j, i) = 1.0, adj[i][j] = adj[j][i] = true;
    const GramPattern pat = pattern_of(M);
    const std::vector<int> newpos = minimum_degree_order(pat);
    std::vector<int> order(m);
    for (int i = 0; i < m; ++i) order[newpos[i]] = i;
    const LowerPattern lower = permuted_lower(pat, newpos);
    EXPECT_EQ(symbolic_factor_count(lower), eliminate(adj, order));
    EXPECT_EQ(symbolic_factor(lower).nnz(), static_cast<std::size_t>(eliminate(adj, order)));
  }
}

TEST(BuildWeight, IdentityGram) {
  const WeightOperator W = build_weight(gram_of(Matrix::Identity(6, 6)), WeightPolicy::Exact);
  EXPECT_EQ(W.mode(), WeightMode::ExactCholesky);
  std::mt19937_64 rng(32);
  const Vector v = gaussian(6, 1, rng);
  EXPECT_LE((W.apply(v) - v).norm(), 2e-6 * v.norm());
}

TEST(BuildWeight, DiagonalGram) {
  Matrix M = Matrix::Zero(2, 2);
  M.diagonal() << 4, 9;
  const Vector w = build_weight(gram_of(M), WeightPolicy::Exact).apply(Vector::Ones(2));
  EXPECT_NEAR(w[0], 0.25, 1e-5 * 0.25);
  EXPECT_NEAR(w[1], 1.0 / 9, 1e-5 / 9);
  const Vector three = build_weight(gram_of(Matrix::Constant(1, 1, 2.0)), WeightPolicy::Exact)
                           .apply(Vector::Constant(1, 6.0));
  EXPECT_NEAR(three[0], 3.0, 1e-5);
}

TEST(BuildWeight, RandomSpdAgainstDenseSolve) {
  std::mt19937_64 rng(33);
  const Matrix M = random_spd(8, rng);
  const WeightOperator W = build_weight(gram_of(M), WeightPolicy::Exact);
  const Eigen::LLT<Matrix> llt(M);
  const Matrix Mr = M + W.ridge() * Matrix::Identity(8, 8);
  for (int t = 0; t < 10; ++t) {
    const Vector v = gaussian(8, 1, rng);
    EXPECT_LE((W.apply(M * v) - v).norm(), 1e-5 * v.norm());
    const Vector x = llt.solve(v);
    EXPECT_LE((W.apply(v) - x).norm(), 1e-5 * x.norm());
    EXPECT_LE((W.apply(Mr * v) - v).norm(), 1e-10 * v.norm());
    EXPECT_NEAR(v.dot(W.apply(v)), W.half_apply(v).squaredNorm(), 1e-12 * v.squaredNorm());
  }
}

TEST(BuildWeight, IdentityPolicy) {
  std::mt19937_64 rng(34);
  const WeightOperator W = build_weight(gram_of(random_spd(5, rng)), WeightPolicy::Identity);
  EXPECT_EQ(W.mode(), WeightMode::Identity);
  const Vector v = gaussian(5, 1, rng);
  EXPECT_EQ(apply_weight(W, v), v);
  EXPECT_EQ(WeightOperator::identity(5).apply(v), v);
}

TEST(BuildWeight, SymmetricAndPositiveDefinite) {
  std::mt19937_64 rng(35);
  for (auto policy : {WeightPolicy::Exact, WeightPolicy::Ichol}) {
    const Matrix M = random_spd(10, rng);
    const WeightOperator W = build_weight(gram_of(M), policy);
    for (int t = 0; t < 100; ++t) {
      const Vector u = gaussian(10, 1, rng), v = gaussian(10, 1, rng);
      const double scale = u.norm() * v.norm() / M.diagonal().minCoeff();
      EXPECT_LE(std::abs(u.dot(W.apply(v)) - v.dot(W.apply(u))), 1e-12 * scale);
      EXPECT_GT(v.dot(W.apply(v)), 0.0);
    }
  }
}

TEST(BuildWeight, SingularGramFactorsWithRidge) {
  // Rank-one Gram: only the ridge makes it positive definite.
  const Matrix M = Matrix::Ones(4, 4);
  const WeightOperator W = build_weight(gram_of(M), WeightPolicy::Exact);
  EXPECT_GT(W.ridge(), 0.0);
  EXPECT_GT(W.min_pivot(), 0.0);
  const Vector v = Vector::LinSpaced(4, 1, 4);
  EXPECT_LE((W.apply((M + W.ridge() * Matrix::Identity(4, 4)) * v) - v).norm(), 1e-6 * v.norm());
}

TEST(BuildWeight, ZeroGramThrowsDegenerate) {
  EXPECT_THROW(build_weight(gram_of(Matrix::Zero(3, 3)), WeightPolicy::Exact), DegenerateGram);
}

TEST(IncompleteCholesky, DiagonallyDominantSanity) {
  std::mt19937_64 rng(36);
  std::bernoulli_distribution coin(0.25);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    const int m = 20;
    Matrix M = Matrix::Zero(m, m);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < j; ++i)
        if (coin(rng)) M(i, j) = M(j, i) = unif(rng);
    for (int i = 0; i < m; ++i) M(i, i) = M.row(i).cwiseAbs().sum() + 1.0;
    const GramMatrix G = gram_of(M);
    const WeightOperator W = build_weight(G, WeightPolicy::Ichol);
    EXPECT_EQ(W.mode(), WeightMode::IncompleteCholesky);
    EXPECT_LE(W.factor_nnz(), G.pattern.nnz_upper());
    for (int s = 0; s < 5; ++s) {
      const Vector v = gaussian(m, 1, rng);
      EXPECT_LE((W.apply(M * v) - v).norm(), 0.5 * v.norm());
    }
  }
}

TEST(IncompleteCholesky, ExactOnTridiagonal) {
  // A tridiagonal matrix has no fill, so zero-fill factorization is exact.
  const int m = 12;
  Matrix M = 4.0 * Matrix::Identity(m, m);
  for (int i = 0; i + 1 < m; ++i) M(i, i + 1) = M(i + 1, i) = -1.0;
  const WeightOperator W = build_weight(gram_of(M), WeightPolicy::Ichol);
  const Vector v = Vector::LinSpaced(m, -1, 1);
  EXPECT_LE((W.apply((M + W.ridge() * Matrix::Identity(m, m)) * v) - v).norm(), 1e-10 * v.norm());
}

TEST(BuildWeight, AutoChoosesByFill) {
  std::mt19937_64 rng(37);
  const GramMatrix G = gram_of(random_spd(10, rng));
  FillEstimate fill;
  EXPECT_EQ(build_weight(G, WeightPolicy::Auto, {}, &fill).mode(), WeightMode::ExactCholesky);
  EXPECT_EQ(fill.predicted_factor_nnz, 55);
  WeightConfig tight;
  tight.fill_threshold = 54;
  EXPECT_EQ(build_weight(G, WeightPolicy::Auto, tight).mode(), WeightMode::IncompleteCholesky);
}

TEST(ShouldFormGram, Examples) {
  std::vector<SymSparse> diag;
  for (int i = 0; i < 100; ++i) diag.emplace_back(100, std::vector<SymEntry>{{i, i, 1.0}});
  EXPECT_TRUE(should_form_gram(LinearMapA(100, diag)));

  std::vector<SymSparse> shared(100000, SymSparse(2, {{0, 0, 1.0}}));
  EXPECT_FALSE(should_form_gram(LinearMapA(2, shared)));

  EXPECT_TRUE(should_form_gram(gen_theta(cycle_graph(5)).A));
  WeightConfig none;
  none.gram_threshold = 1;
  EXPECT_FALSE(should_form_gram(gen_theta(cycle_graph(5)).A, none));
}

TEST(Fingerprint, SensitiveToEntries) {
  Matrix A = Matrix::Identity(3, 2);
  const auto a = fingerprint({A});
  EXPECT_EQ(a, fingerprint({A}));
  A(2, 1) = 1e-300;
  EXPECT_NE(a, fingerprint({A}));
}
