#include "palmsdp/eigen_min.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "palmsdp/errors.hpp"

namespace palmsdp {

namespace {

void fix_sign(Vector& v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v[arg] < 0) v = -v;
}

std::vector<EigPair> dense_smallest(const Matrix& S, int k) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()));
  std::vector<EigPair> out;
  for (int i = 0; i < k; ++i) {
    EigPair p;
    p.value = es.eigenvalues()[i];
    p.vector = es.eigenvectors().col(i);
    fix_sign(p.vector);
    out.push_back(std::move(p));
  }
  return out;
}

// Lanczos with full reorthogonalization and explicit restarts.
std::vector<EigPair> lanczos_smallest(const SymOperator& S, int k, const EigConfig& cfg) {
  const int n = S.dim;
  const int basis = std::min(n, std::max(2 * k + 30, 60));
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss;
  Vector q(n);
  for (int i = 0; i < n; ++i) q[i] = gauss(rng);
  q.normalize();

  std::vector<EigPair> best;
  int matvecs = 0;
  while (true) {
    Matrix V = Matrix::Zero(n, basis);
    Vector alpha = Vector::Zero(basis), beta = Vector::Zero(basis);
    V.col(0) = q;
    int steps = 0;
    bool invariant = false;
    for (int j = 0; j < basis; ++j) {
      Vector w = S.apply(V.col(j));
      ++matvecs;
      alpha[j] = V.col(j).dot(w);
      for (int pass = 0; pass < 2; ++pass) w -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * w);
      steps = j + 1;
      beta[j] = w.norm();
      const double scale = std::max(1.0, alpha.head(steps).cwiseAbs().maxCoeff());
      if (beta[j] <= 1e-13 * scale) {
        invariant = true;
        break;
      }
      if (j + 1 < basis) V.col(j + 1) = w / beta[j];
      if (matvecs >= cfg.max_matvecs) break;
    }
    Matrix T = Matrix::Zero(steps, steps);
    for (int j = 0; j < steps; ++j) {
      T(j, j) = alpha[j];
      if (j + 1 < steps) T(j, j + 1) = T(j + 1, j) = beta[j];
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(T);
    const int kk = std::min(k, steps);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    best.clear();
    bool all_converged = true;
    for (int i = 0; i < kk; ++i) {
      EigPair p;
      p.value = es.eigenvalues()[i];
      p.vector = V.leftCols(steps) * es.eigenvectors().col(i);
      p.vector.normalize();
      const double resid = invariant ? 0.0 : std::abs(beta[steps - 1] * es.eigenvectors()(steps - 1, i));
      if (resid > cfg.residual_tol * scale) all_converged = false;
      fix_sign(p.vector);
      best.push_back(std::move(p));
    }
    if (all_converged || invariant) {
      for (auto& p : best) p.matvecs = matvecs;
      return best;
    }
    if (matvecs >= cfg.max_matvecs) {
      for (auto& p : best) {
        p.converged = false;
        p.matvecs = matvecs;
      }
      return best;
    }
    q.setZero();
    for (const auto& p : best) q += p.vector;
    q.normalize();
  }
}

bool use_dense(int n, EigMode mode, const EigConfig& cfg) {
  if (mode == EigMode::Exact) return true;
  if (mode == EigMode::Iterative) return false;
  return n <= cfg.dense_threshold;
}

}  // namespace

SymOperator to_operator(const SymSparse& S) { return SymOperator{S.dim(), S.full(), Matrix()}; }

std::vector<EigPair> smallest_eigenpairs(const SymOperator& S, int k, EigMode mode, const EigConfig& config) {
  if (S.dim < 1) throw InvalidInput("smallest_eigenpairs: empty matrix");
  k = std::clamp(k, 1, S.dim);
  if (use_dense(S.dim, mode, config)) return dense_smallest(S.to_dense(), k);
  return lanczos_smallest(S, k, config);
}

EigPair min_eig_estimate(const SymOperator& S, EigMode mode, const EigConfig& config) {
  return smallest_eigenpairs(S, 1, mode, config).front();
}

EigPair min_eig_estimate(const SymSparse& S, EigMode mode, const EigConfig& config) {
  return min_eig_estimate(to_operator(S), mode, config);
}

double negative_part_norm(const SymOperator& S, const EigConfig& config) {
  if (use_dense(S.dim, EigMode::Auto, config)) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(S.to_dense(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseMin(0.0).norm();
  }
  for (int k = 8;; k *= 2) {
    auto pairs = smallest_eigenpairs(S, k, EigMode::Iterative, config);
    double acc = 0.0;
    for (const auto& p : pairs) acc += p.value < 0 ? p.value * p.value : 0.0;
    if (pairs.back().value >= 0 || k >= S.dim || k >= 128) return std::sqrt(acc);
  }
}

}  // namespace palmsdp
