#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "palmsdp/errors.hpp"
#include "palmsdp/problem.hpp"

namespace palmsdp {

namespace {

double huber(double y, double delta) {
  const double a = std::abs(y);
  return a <= delta ? 0.5 * y * y : delta * (a - 0.5 * delta);
}

double huber_derivative(double y, double delta) {
  if (std::abs(y) <= delta) return y;
  return y > 0 ? delta : -delta;
}

Matrix random_block(const BlockSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  if (!spec.is_psd()) {
    Matrix v(spec.dim, 1);
    for (int i = 0; i < spec.dim; ++i) v(i, 0) = normal(rng);
    return v;
  }
  Matrix G(spec.dim, spec.dim);
  for (int j = 0; j < spec.dim; ++j)
    for (int i = 0; i < spec.dim; ++i) G(i, j) = normal(rng);
  return 0.5 * (G + G.transpose());
}

}  // namespace

ObjectiveEval eval_weighted_loss(const WeightedLoss& loss, const std::vector<BlockSpec>& blocks,
                                 const std::vector<Matrix>& X) {
  if (X.size() != blocks.size()) throw InvalidInput("weighted loss: block count mismatch");
  if (loss.block < 0 || loss.block >= static_cast<int>(blocks.size()))
    throw InvalidInput("weighted loss: block out of range");
  ObjectiveEval e;
  e.gradient.reserve(blocks.size());
  for (std::size_t k = 0; k < blocks.size(); ++k)
    e.gradient.push_back(Matrix::Zero(X[k].rows(), X[k].cols()));

  const Matrix& Xk = X[loss.block];
  const Matrix& H = loss.weight;
  if (H.rows() != Xk.rows() || H.cols() != Xk.cols() || loss.target.rows() != Xk.rows() ||
      loss.target.cols() != Xk.cols())
    throw InvalidInput("weighted loss: data shape mismatch");
  const Matrix Y = H.cwiseProduct(Xk - loss.target);
  Matrix& g = e.gradient[loss.block];
  if (loss.kind == LossKind::Square) {
    e.value = 0.5 * Y.squaredNorm();
    g = H.cwiseProduct(Y);
  } else {
    if (!(loss.delta > 0)) throw InvalidInput("huber loss: delta must be positive");
    for (Eigen::Index j = 0; j < Y.cols(); ++j)
      for (Eigen::Index i = 0; i < Y.rows(); ++i) {
        e.value += huber(Y(i, j), loss.delta);
        g(i, j) = H(i, j) * huber_derivative(Y(i, j), loss.delta);
      }
  }
  return e;
}

double gradient_check(const std::vector<BlockSpec>& blocks, const ObjectiveFn& fn, int points,
                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int p = 0; p < points; ++p) {
    std::vector<Matrix> X, D;
    double scale = 1.0;
    for (const auto& spec : blocks) {
      X.push_back(random_block(spec, rng));
      D.push_back(random_block(spec, rng));
      scale = std::max(scale, X.back().norm());
    }
    for (auto& d : D) d /= std::max(1.0, d.norm());
    const ObjectiveEval e = fn(X);
    if (e.gradient.size() != blocks.size()) return std::numeric_limits<double>::infinity();
    double analytic = 0.0;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      if (e.gradient[k].rows() != D[k].rows() || e.gradient[k].cols() != D[k].cols())
        return std::numeric_limits<double>::infinity();
      analytic += (e.gradient[k].array() * D[k].array()).sum();
    }
    const double h = 1e-6 * scale;
    std::vector<Matrix> Xp = X, Xm = X;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      Xp[k] += h * D[k];
      Xm[k] -= h * D[k];
    }
    const double fd = (fn(Xp).value - fn(Xm).value) / (2.0 * h);
    const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-8 * (1.0 + std::abs(e.value))});
    const double err = std::abs(analytic - fd) / denom;
    if (!std::isfinite(err)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace palmsdp
