#include "palmsdp/oracle.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "palmsdp/errors.hpp"

namespace palmsdp {

namespace {

// Blocks flattened into one vector: PSD blocks column-major n*n, vector
// blocks as is.
struct Layout {
  std::vector<BlockSpec> blocks;
  std::vector<Eigen::Index> offset;
  Eigen::Index size = 0;

  explicit Layout(const std::vector<BlockSpec>& specs) : blocks(specs) {
    for (const auto& b : specs) {
      offset.push_back(size);
      size += b.is_psd() ? Eigen::Index(b.dim) * b.dim : b.dim;
    }
  }

  Vector flatten(const std::vector<Matrix>& X) const {
    Vector z(size);
    for (std::size_t k = 0; k < blocks.size(); ++k)
      z.segment(offset[k], X[k].size()) = Eigen::Map<const Vector>(X[k].data(), X[k].size());
    return z;
  }

  std::vector<Matrix> unflatten(const Vector& z) const {
    std::vector<Matrix> X(blocks.size());
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const int n = blocks[k].dim;
      const int c = blocks[k].is_psd() ? n : 1;
      X[k] = Eigen::Map<const Matrix>(z.data() + offset[k], n, c);
    }
    return X;
  }
};

// Dense rows of a constraint map over the flattened layout; off-diagonal
// coefficients are split over both mirrored positions.
Matrix dense_rows(const MultiMap& map, const Layout& lay) {
  Matrix M = Matrix::Zero(map.rows(), lay.size);
  for (int i = 0; i < map.rows(); ++i) {
    for (const auto& c : map.row_coefficients(i)) {
      const auto& spec = lay.blocks[c.block];
      const Eigen::Index base = lay.offset[c.block];
      if (spec.is_psd()) {
        const int n = spec.dim;
        M(i, base + Eigen::Index(c.j) * n + c.i) += c.value;
        if (c.i != c.j) M(i, base + Eigen::Index(c.i) * n + c.j) += c.value;
      } else {
        M(i, base + c.i) += c.value;
      }
    }
  }
  return M;
}

Vector project_cone(const Layout& lay, const Vector& z) {
  Vector out = z;
  for (std::size_t k = 0; k < lay.blocks.size(); ++k) {
    const auto& spec = lay.blocks[k];
    const int n = spec.dim;
    if (spec.is_psd()) {
      Eigen::Map<Matrix> X(out.data() + lay.offset[k], n, n);
      const Matrix sym = 0.5 * (X + X.transpose());
      Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
      X = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose();
    } else if (spec.kind == BlockKind::NonnegVector) {
      out.segment(lay.offset[k], n) = out.segment(lay.offset[k], n).cwiseMax(0.0);
    }
  }
  return out;
}

struct DenseData {
  Layout lay;
  Matrix A;
  Matrix B;

  explicit DenseData(const ConicProblem& prob)
      : lay(prob.blocks), A(dense_rows(prob.A, lay)), B(dense_rows(prob.B, lay)) {}
};

struct AugEval {
  double value = 0.0;
  Vector grad;
};

AugEval augmented(const ConicProblem& prob, const DenseData& d, const Vector& z, const Vector& lam,
                  const Vector& mu, double beta) {
  const auto obj = eval_objective_dense(prob, d.lay.unflatten(z));
  AugEval out;
  out.value = obj.value;
  out.grad = d.lay.flatten(obj.gradient);
  if (d.A.rows() > 0) {
    const Vector r = d.A * z - prob.b;
    out.value += -lam.dot(r) + 0.5 * beta * r.squaredNorm();
    out.grad += d.A.transpose() * (beta * r - lam);
  }
  if (d.B.rows() > 0) {
    const Vector v = d.B * z - mu / beta;
    const Vector gap = v - prob.side.project(v);
    out.value += 0.5 * beta * gap.squaredNorm() - mu.squaredNorm() / (2.0 * beta);
    out.grad += d.B.transpose() * (beta * gap);
  }
  return out;
}

// Accelerated projected gradient with backtracking and gradient-based
// restarts; stops when ||z - P(z - grad)|| <= eps.
long minimize_inner(const ConicProblem& prob, const DenseData& d, Vector& z, const Vector& lam, const Vector& mu,
                    double beta, double eps, long budget, double& L) {
  Vector x = z, y = z;
  double t = 1.0;
  long it = 0;
  AugEval ey = augmented(prob, d, y, lam, mu, beta);
  for (; it < budget; ++it) {
    Vector xn;
    AugEval exn;
    for (int bt = 0; bt < 80; ++bt) {
      xn = project_cone(d.lay, y - ey.grad / L);
      exn = augmented(prob, d, xn, lam, mu, beta);
      const Vector s = xn - y;
      if (exn.value <= ey.value + ey.grad.dot(s) + 0.5 * L * s.squaredNorm() + 1e-15 * (1.0 + std::abs(ey.value)))
        break;
      L *= 2.0;
    }
    const double res = (xn - project_cone(d.lay, xn - exn.grad)).norm();
    if ((y - xn).dot(xn - x) > 0.0) {
      t = 1.0;
      y = xn;
    } else {
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = xn + ((t - 1.0) / tn) * (xn - x);
      t = tn;
    }
    x = std::move(xn);
    if (res <= eps) {
      ++it;
      break;
    }
    ey = (y - x).norm() == 0.0 ? exn : augmented(prob, d, y, lam, mu, beta);
    L = std::max(1e-12, 0.95 * L);
  }
  z = x;
  return it;
}

// Per-subproblem cap; rounding can keep the residual above a tight eps.
constexpr long kInnerCap = 100000;

}  // namespace

DenseSolution solve_dense(const ConicProblem& prob, const OracleOptions& options) {
  prob.validate();
  for (const auto& b : prob.blocks)
    if (b.is_psd() && b.dim > 50) throw InvalidInput("oracle: PSD blocks above dimension 50 are not supported");
  if (prob.num_eq() > 200) throw InvalidInput("oracle: more than 200 equality constraints");

  const DenseData d(prob);
  Vector z = Vector::Zero(d.lay.size);
  Vector lam = Vector::Zero(prob.num_eq());
  Vector mu = Vector::Zero(prob.num_side());
  double beta = options.beta;
  double eps = 1e-2;
  double L = 1.0;
  double pf_old = std::numeric_limits<double>::infinity();

  DenseSolution sol;
  for (int outer = 0; outer < options.max_outer; ++outer) {
    const long left = options.max_inner_total - sol.inner_iters;
    if (left <= 0) break;
    sol.inner_iters += minimize_inner(prob, d, z, lam, mu, beta, eps, std::min(left, kInnerCap), L);
    ++sol.outer_iters;
    if (prob.num_eq() > 0) lam -= beta * (d.A * z - prob.b);
    if (prob.has_side()) {
      const Vector v = d.B * z - mu / beta;
      mu = beta * (prob.side.project(v) - v);
    }
    const auto X = d.lay.unflatten(z);
    const KktResiduals kkt = certify(prob, X, lam, mu, beta);
    if (kkt.max_kkt <= options.tol) {
      sol.X = X;
      sol.lam = lam;
      sol.mu = mu;
      sol.fval = eval_objective_dense(prob, X).value;
      sol.certified_kkt = kkt;
      return sol;
    }
    if (kkt.pfeas > 0.5 * pf_old) beta = std::min(1e6, 2.0 * beta);
    pf_old = kkt.pfeas;
    eps = std::max(1e-2 * options.tol, 0.2 * eps);
  }
  throw OracleFailed("oracle: budget exhausted before reaching the tolerance");
}

KktResiduals certify(const ConicProblem& prob, const std::vector<Matrix>& X, const Vector& lam, const Vector& mu,
                     double beta2) {
  if (X.size() != prob.blocks.size()) throw InvalidInput("certify: block count mismatch");
  if (lam.size() != prob.num_eq() || mu.size() != prob.num_side())
    throw InvalidInput("certify: multiplier length mismatch");
  const DenseData d(prob);
  const Vector z = d.lay.flatten(X);
  const auto obj = eval_objective_dense(prob, X);
  const Vector g = d.lay.flatten(obj.gradient);

  KktResiduals out;
  if (prob.num_eq() > 0) out.pfeas = (d.A * z - prob.b).norm() / (1.0 + prob.b.norm());
  if (prob.has_side()) {
    const Vector Bx = d.B * z;
    const Vector y = prob.side.project(Bx - mu / beta2);
    out.pfeas = std::max(out.pfeas, (Bx - y).norm() / (1.0 + Bx.norm()));
  }

  Vector s = g;
  if (prob.num_eq() > 0) s -= d.A.transpose() * lam;
  if (prob.has_side()) s -= d.B.transpose() * mu;
  const auto S = d.lay.unflatten(s);
  double neg2 = 0.0, s2 = 0.0;
  for (std::size_t k = 0; k < prob.blocks.size(); ++k) {
    if (prob.blocks[k].is_psd()) {
      const Matrix sym = 0.5 * (S[k] + S[k].transpose());
      const Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
      neg2 += es.eigenvalues().cwiseMin(0.0).squaredNorm();
      s2 += sym.squaredNorm();
    } else {
      const Vector sk = S[k].col(0);
      neg2 += prob.blocks[k].kind == BlockKind::NonnegVector ? sk.cwiseMin(0.0).squaredNorm() : sk.squaredNorm();
      s2 += sk.squaredNorm();
    }
  }
  out.dfeas = std::sqrt(neg2) / (1.0 + std::sqrt(s2));
  out.comp_raw = std::abs(z.dot(s)) / (1.0 + g.norm());
  out.comp = out.comp_raw;
  out.max_kkt = std::max({out.pfeas, out.dfeas, out.comp});
  if (prob.is_standard_linear()) {
    const double lb = prob.num_eq() > 0 ? lam.dot(prob.b) : 0.0;
    const double cx = obj.value;
    out.pdgap = std::abs(lb - cx) / (1.0 + std::abs(lb) + std::abs(cx));
    out.comp = std::min(out.comp_raw, out.pdgap);
    out.max_kkt = std::max({out.pfeas, out.dfeas, out.comp});
  }
  return out;
}

}  // namespace palmsdp
