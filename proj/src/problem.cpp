#include "palmsdp/problem.hpp"

#include <cmath>
#include <limits>

#include "palmsdp/errors.hpp"

namespace palmsdp {

double FactorPoint::squared_norm() const {
  double acc = 0.0;
  for (const auto& B : blocks) acc += B.squaredNorm();
  return acc;
}

std::vector<Matrix> form_blocks(const std::vector<BlockSpec>& specs, const FactorPoint& R) {
  if (specs.size() != R.blocks.size()) throw InvalidInput("form_blocks: block count mismatch");
  std::vector<Matrix> X;
  X.reserve(specs.size());
  for (std::size_t k = 0; k < specs.size(); ++k) {
    if (specs[k].is_psd())
      X.push_back(R.blocks[k] * R.blocks[k].transpose());
    else
      X.push_back(R.blocks[k]);
  }
  return X;
}

// ---------------------------------------------------------------------------

ConvexSet ConvexSet::box(Vector lower, Vector upper) {
  if (lower.size() != upper.size()) throw InvalidInput("ConvexSet::box: bound lengths differ");
  const double inf = std::numeric_limits<double>::infinity();
  bool zero = true, nonneg = true, free = true;
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower[i] <= upper[i])) throw InvalidInput("ConvexSet::box: lower bound exceeds upper bound");
    zero = zero && lower[i] == 0.0 && upper[i] == 0.0;
    nonneg = nonneg && lower[i] == 0.0 && upper[i] == inf;
    free = free && lower[i] == -inf && upper[i] == inf;
  }
  ConvexSet s;
  s.size_ = static_cast<int>(lower.size());
  s.kind_ = zero ? Kind::Zero : nonneg ? Kind::Nonneg : free ? Kind::Free : Kind::Box;
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

ConvexSet ConvexSet::nonneg(int p) {
  return box(Vector::Zero(p), Vector::Constant(p, std::numeric_limits<double>::infinity()));
}

ConvexSet ConvexSet::free(int p) {
  const double inf = std::numeric_limits<double>::infinity();
  return box(Vector::Constant(p, -inf), Vector::Constant(p, inf));
}

ConvexSet ConvexSet::zero(int p) { return box(Vector::Zero(p), Vector::Zero(p)); }

ConvexSet ConvexSet::custom(int p, Projector projector) {
  ConvexSet s = free(p);
  s.kind_ = Kind::Custom;
  s.projector_ = std::move(projector);
  return s;
}

Vector ConvexSet::project(const Vector& y) const {
  if (y.size() != size_) throw InvalidInput("ConvexSet::project: dimension mismatch");
  if (kind_ == Kind::Custom) return projector_(y);
  return y.cwiseMax(lower_).cwiseMin(upper_);
}

Vector project_side(const ConvexSet& set, const Vector& y) { return set.project(y); }

MoreauEval moreau_value_grad(const ConvexSet& set, const Vector& v, const Vector& mu, double beta2) {
  if (!(beta2 > 0)) throw InvalidInput("moreau_value_grad: beta2 must be positive");
  if (v.size() != set.size() || mu.size() != set.size())
    throw InvalidInput("moreau_value_grad: dimension mismatch");
  const Vector z = v - mu / beta2;
  MoreauEval out;
  out.projected = set.project(z);
  const Vector diff = z - out.projected;
  out.value = 0.5 * beta2 * diff.squaredNorm() - mu.squaredNorm() / (2.0 * beta2);
  out.gradient = beta2 * diff;
  return out;
}

// ---------------------------------------------------------------------------

MultiMap::MultiMap(const std::vector<BlockSpec>& blocks, const std::vector<std::vector<RowCoefficient>>& rows)
    : rows_(static_cast<int>(rows.size())), specs_(blocks) {
  const int nb = static_cast<int>(blocks.size());
  std::vector<std::vector<std::vector<SymEntry>>> psd_entries(nb);
  std::vector<std::vector<Eigen::Triplet<double>>> vec_trips(nb);
  for (int k = 0; k < nb; ++k)
    if (blocks[k].is_psd()) psd_entries[k].resize(rows.size());
  for (int r = 0; r < rows_; ++r) {
    for (const auto& c : rows[r]) {
      if (c.block < 0 || c.block >= nb) throw InvalidInput("MultiMap: block index out of range");
      const int d = blocks[c.block].dim;
      if (c.i < 0 || c.j < 0 || c.i >= d || c.j >= d) throw InvalidInput("MultiMap: entry index out of range");
      if (blocks[c.block].is_psd()) {
        psd_entries[c.block][r].push_back({c.i, c.j, c.value});
      } else {
        if (c.i != c.j) throw InvalidInput("MultiMap: vector block coefficients must have i == j");
        vec_trips[c.block].emplace_back(r, c.i, c.value);
      }
    }
  }
  maps_.resize(nb);
  for (int k = 0; k < nb; ++k) {
    if (blocks[k].is_psd()) {
      std::vector<SymSparse> mats;
      mats.reserve(rows.size());
      for (auto& e : psd_entries[k]) mats.emplace_back(blocks[k].dim, std::move(e));
      maps_[k].psd = LinearMapA(blocks[k].dim, std::move(mats));
    } else {
      maps_[k].vec.resize(rows_, blocks[k].dim);
      maps_[k].vec.setFromTriplets(vec_trips[k].begin(), vec_trips[k].end());
      maps_[k].vec.makeCompressed();
    }
  }
}

Vector MultiMap::apply(const FactorPoint& R) const {
  if (static_cast<int>(R.blocks.size()) != num_blocks()) throw InvalidInput("MultiMap::apply: block count mismatch");
  Vector out = Vector::Zero(rows_);
  if (rows_ == 0) return out;
  for (int k = 0; k < num_blocks(); ++k) {
    if (is_psd(k))
      out += apply_map(maps_[k].psd, R.blocks[k]);
    else
      out += maps_[k].vec * R.blocks[k].col(0);
  }
  return out;
}

Vector MultiMap::apply_dense(const std::vector<Matrix>& X) const {
  Vector out = Vector::Zero(rows_);
  if (rows_ == 0) return out;
  for (int k = 0; k < num_blocks(); ++k) {
    if (is_psd(k))
      out += maps_[k].psd.apply_dense(X[k]);
    else
      out += maps_[k].vec * X[k].col(0);
  }
  return out;
}

Vector MultiMap::pair(const FactorPoint& P, const FactorPoint& Q) const {
  Vector out = Vector::Zero(rows_);
  if (rows_ == 0) return out;
  for (int k = 0; k < num_blocks(); ++k)
    if (is_psd(k)) out += maps_[k].psd.pair(P.blocks[k], Q.blocks[k]);
  return out;
}

SparseMatrix MultiMap::adjoint_psd(int k, const Vector& y) const {
  if (rows_ == 0) return SparseMatrix(specs_[k].dim, specs_[k].dim);
  return maps_[k].psd.adjoint(y);
}

Vector MultiMap::adjoint_vec(int k, const Vector& y) const {
  if (rows_ == 0) return Vector::Zero(specs_[k].dim);
  return maps_[k].vec.transpose() * y;
}

std::vector<std::vector<int>> MultiMap::supports(int* universe) const {
  std::vector<std::vector<int>> s(rows_);
  int offset = 0;
  for (int k = 0; k < num_blocks(); ++k) {
    if (is_psd(k)) {
      for (int i = 0; i < rows_; ++i)
        for (int r : maps_[k].psd.rows(i)) s[i].push_back(offset + r);
    } else {
      const auto& G = maps_[k].vec;
      for (int i = 0; i < rows_; ++i)
        for (decltype(maps_[k].vec)::InnerIterator it(G, i); it; ++it) s[i].push_back(offset + static_cast<int>(it.col()));
    }
    offset += specs_[k].dim;
  }
  if (universe) *universe = offset;
  return s;
}

GramPattern MultiMap::gram_pattern() const {
  int universe = 0;
  auto s = supports(&universe);
  return pattern_from_supports(universe, s);
}

double MultiMap::predict_gram_nnz() const {
  int universe = 0;
  auto s = supports(&universe);
  return predict_pattern_nnz(universe, s);
}

void MultiMap::accumulate_gram(const FactorPoint& R, const GramPattern& pattern, std::vector<double>& values) const {
  for (int k = 0; k < num_blocks(); ++k) {
    if (is_psd(k)) {
      maps_[k].psd.accumulate_gram(R.blocks[k], pattern, values);
    } else {
      const auto& G = maps_[k].vec;
      for (int j = 0; j < rows_; ++j)
        for (std::size_t p = pattern.offset[j]; p < pattern.offset[j + 1]; ++p)
          values[p] += 0.25 * G.row(pattern.index[p]).dot(G.row(j));
    }
  }
}

GramMatrix MultiMap::gram(const FactorPoint& R, double nnz_threshold) const {
  int universe = 0;
  auto s = supports(&universe);
  if (predict_pattern_nnz(universe, s) > nnz_threshold)
    throw GramRefused("gram: predicted nonzero count exceeds threshold");
  GramMatrix g;
  g.pattern = pattern_from_supports(universe, s);
  std::vector<double> values(g.pattern.nnz_upper(), 0.0);
  accumulate_gram(R, g.pattern, values);
  g.data = gram_from_values(g.pattern, values);
  return g;
}

std::vector<RowCoefficient> MultiMap::row_coefficients(int i) const {
  std::vector<RowCoefficient> out;
  for (int k = 0; k < num_blocks(); ++k) {
    if (is_psd(k)) {
      for (const auto& e : maps_[k].psd[i].entries()) out.push_back({k, e.row, e.col, e.value});
    } else {
      for (decltype(maps_[k].vec)::InnerIterator it(maps_[k].vec, i); it; ++it)
        out.push_back({k, static_cast<int>(it.col()), static_cast<int>(it.col()), it.value()});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

Objective Objective::linear(std::vector<BlockCost> costs) {
  Objective o;
  o.kind_ = Kind::Linear;
  o.costs_ = std::move(costs);
  return o;
}

Objective Objective::weighted_loss(WeightedLoss loss) {
  Objective o;
  o.kind_ = Kind::WeightedLoss;
  o.loss_ = std::move(loss);
  return o;
}

Objective Objective::callback(ObjectiveFn fn) {
  if (!fn) throw InvalidInput("Objective::callback: empty function");
  Objective o;
  o.kind_ = Kind::Callback;
  o.fn_ = std::move(fn);
  return o;
}

namespace {

void check_finite(const ObjectiveEval& e) {
  if (!std::isfinite(e.value)) throw ObjectiveError("objective value is not finite");
  for (const auto& g : e.gradient)
    if (!g.allFinite()) throw ObjectiveError("objective gradient is not finite");
}

ObjectiveEval eval_nonlinear(const ConicProblem& prob, const std::vector<Matrix>& X) {
  ObjectiveEval e;
  if (prob.objective.kind() == Objective::Kind::WeightedLoss) {
    e = eval_weighted_loss(prob.objective.loss(), prob.blocks, X);
  } else {
    try {
      e = prob.objective.fn()(X);
    } catch (const ObjectiveError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ObjectiveError(std::string("objective callback failed: ") + ex.what());
    }
  }
  if (e.gradient.size() != prob.blocks.size()) throw ObjectiveError("objective gradient has wrong block count");
  for (std::size_t k = 0; k < X.size(); ++k)
    if (e.gradient[k].rows() != X[k].rows() || e.gradient[k].cols() != X[k].cols())
      throw ObjectiveError("objective gradient has wrong shape");
  check_finite(e);
  return e;
}

}  // namespace

ObjectiveValueGrad eval_objective(const ConicProblem& prob, const FactorPoint& R) {
  const int nb = static_cast<int>(prob.blocks.size());
  if (static_cast<int>(R.blocks.size()) != nb) throw InvalidInput("eval_objective: block count mismatch");
  ObjectiveValueGrad out;
  out.psd.resize(nb);
  out.vec.resize(nb);
  if (prob.objective.is_linear()) {
    const auto& costs = prob.objective.costs();
    for (int k = 0; k < nb; ++k) {
      const int d = prob.blocks[k].dim;
      if (prob.blocks[k].is_psd()) {
        if (R.blocks[k].rows() != d) throw InvalidInput("eval_objective: factor row count mismatch");
        SymOperator g{d, SparseMatrix(d, d), Matrix()};
        if (k < static_cast<int>(costs.size()) && costs[k].mat.dim() == d) {
          out.value += costs[k].mat.quad(R.blocks[k]);
          g.sparse = costs[k].mat.full();
        }
        out.psd[k] = std::move(g);
      } else {
        Vector c = Vector::Zero(d);
        if (k < static_cast<int>(costs.size()) && costs[k].vec.size() == d) c = costs[k].vec;
        out.value += c.dot(R.blocks[k].col(0));
        out.vec[k] = std::move(c);
      }
    }
    return out;
  }
  const auto X = form_blocks(prob.blocks, R);
  auto e = eval_nonlinear(prob, X);
  out.value = e.value;
  for (int k = 0; k < nb; ++k) {
    const int d = prob.blocks[k].dim;
    if (prob.blocks[k].is_psd())
      out.psd[k] = SymOperator{d, SparseMatrix(d, d), 0.5 * (e.gradient[k] + e.gradient[k].transpose())};
    else
      out.vec[k] = e.gradient[k].col(0);
  }
  return out;
}

ObjectiveEval eval_objective_dense(const ConicProblem& prob, const std::vector<Matrix>& X) {
  if (!prob.objective.is_linear()) return eval_nonlinear(prob, X);
  ObjectiveEval e;
  const auto& costs = prob.objective.costs();
  for (std::size_t k = 0; k < prob.blocks.size(); ++k) {
    const int d = prob.blocks[k].dim;
    if (prob.blocks[k].is_psd()) {
      Matrix C = Matrix::Zero(d, d);
      if (k < costs.size() && costs[k].mat.dim() == d) C = costs[k].mat.to_dense();
      e.value += (C.array() * X[k].array()).sum();
      e.gradient.push_back(std::move(C));
    } else {
      Vector c = Vector::Zero(d);
      if (k < costs.size() && costs[k].vec.size() == d) c = costs[k].vec;
      e.value += c.dot(X[k].col(0));
      e.gradient.push_back(c);
    }
  }
  return e;
}

void ConicProblem::validate() const {
  if (blocks.empty()) throw InvalidInput("problem has no blocks");
  for (const auto& b : blocks)
    if (b.dim < 1) throw InvalidInput("block dimension must be positive");
  if (b.size() != A.rows()) throw InvalidInput("length of b differs from the number of equality constraints");
  if (A.rows() > 0 && A.num_blocks() != static_cast<int>(blocks.size()))
    throw InvalidInput("equality map block count mismatch");
  if (B.rows() > 0 && B.num_blocks() != static_cast<int>(blocks.size()))
    throw InvalidInput("side map block count mismatch");
  if (side.size() != B.rows()) throw InvalidInput("side set size differs from the side map rows");
  if (objective.kind() == Objective::Kind::WeightedLoss) {
    const auto& l = objective.loss();
    if (l.block < 0 || l.block >= static_cast<int>(blocks.size()) || !blocks[l.block].is_psd())
      throw InvalidInput("weighted loss must target a PSD block");
    const int n = blocks[l.block].dim;
    if (l.weight.rows() != n || l.weight.cols() != n || l.target.rows() != n || l.target.cols() != n)
      throw InvalidInput("weighted loss data has wrong shape");
  }
}

// ---------------------------------------------------------------------------

int ProblemBuilder::add_block(BlockKind kind, int dim) {
  if (dim < 1) throw InvalidInput("add_block: dimension must be positive");
  blocks_.push_back({kind, dim});
  return static_cast<int>(blocks_.size()) - 1;
}

int ProblemBuilder::add_constraint(std::vector<RowCoefficient> row, double rhs) {
  eq_rows_.push_back(std::move(row));
  rhs_.push_back(rhs);
  return static_cast<int>(rhs_.size()) - 1;
}

int ProblemBuilder::add_side_row(std::vector<RowCoefficient> row, double lower, double upper) {
  if (!(lower <= upper)) throw InvalidInput("add_side_row: lower bound exceeds upper bound");
  side_rows_.push_back(std::move(row));
  lower_.push_back(lower);
  upper_.push_back(upper);
  return static_cast<int>(lower_.size()) - 1;
}

void ProblemBuilder::add_cost(int block, int i, int j, double value) {
  if (block < 0 || block >= static_cast<int>(blocks_.size())) throw InvalidInput("add_cost: block out of range");
  cost_.push_back({block, i, j, value});
}

void ProblemBuilder::set_objective(Objective objective) {
  if (objective.kind() == Objective::Kind::Callback) {
    if (blocks_.empty()) throw InvalidInput("set_objective: add blocks before registering a callback");
    const double err = gradient_check(blocks_, objective.fn(), 3, 0x0b1ec7ULL);
    if (!(err <= 1e-5)) throw InvalidInput("set_objective: callback gradient fails the finite-difference check");
  }
  objective_ = std::move(objective);
  custom_objective_ = true;
}

ConicProblem ProblemBuilder::build() const {
  ConicProblem p;
  p.blocks = blocks_;
  p.A = MultiMap(blocks_, eq_rows_);
  p.b = Eigen::Map<const Vector>(rhs_.data(), static_cast<Eigen::Index>(rhs_.size()));
  p.B = MultiMap(blocks_, side_rows_);
  const Vector lo = Eigen::Map<const Vector>(lower_.data(), static_cast<Eigen::Index>(lower_.size()));
  const Vector hi = Eigen::Map<const Vector>(upper_.data(), static_cast<Eigen::Index>(upper_.size()));
  p.side = projector_ ? ConvexSet::custom(static_cast<int>(lower_.size()), projector_) : ConvexSet::box(lo, hi);
  if (custom_objective_) {
    p.objective = objective_;
  } else {
    std::vector<std::vector<SymEntry>> psd(blocks_.size());
    std::vector<BlockCost> costs(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k)
      if (!blocks_[k].is_psd()) costs[k].vec = Vector::Zero(blocks_[k].dim);
    for (const auto& c : cost_) {
      const auto& spec = blocks_[c.block];
      if (c.i < 0 || c.j < 0 || c.i >= spec.dim || c.j >= spec.dim) throw InvalidInput("cost entry out of range");
      if (spec.is_psd()) {
        psd[c.block].push_back({c.i, c.j, c.value});
      } else {
        if (c.i != c.j) throw InvalidInput("vector block cost entries must have i == j");
        costs[c.block].vec[c.i] += c.value;
      }
    }
    for (std::size_t k = 0; k < blocks_.size(); ++k)
      if (blocks_[k].is_psd()) costs[k].mat = SymSparse(blocks_[k].dim, std::move(psd[k]));
    p.objective = Objective::linear(std::move(costs));
  }
  p.validate();
  return p;
}

}  // namespace palmsdp
