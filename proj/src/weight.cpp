#include "palmsdp/weight.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "palmsdp/errors.hpp"
#include "palmsdp/problem.hpp"

namespace palmsdp {

namespace {

// Left-looking Cholesky restricted to `pat`: updates landing outside the
// pattern are dropped, so a full symbolic pattern gives the exact factor
// and the pattern of M itself gives zero-fill IC. Returns false on a
// nonpositive pivot.
bool factorize(const LowerPattern& pat, std::vector<double>& val, double* min_pivot) {
  const int m = pat.m;
  std::vector<int> pos(m, -1);
  std::vector<std::size_t> next(m);
  std::vector<int> head(m, -1), link(m, -1);
  double smallest = std::numeric_limits<double>::infinity();
  for (int j = 0; j < m; ++j) {
    const std::size_t begin = pat.colptr[j], end = pat.colptr[j + 1];
    for (std::size_t p = begin; p < end; ++p) pos[pat.rowidx[p]] = static_cast<int>(p);
    for (int k = head[j]; k != -1;) {
      const int after = link[k];
      const std::size_t pk = next[k];
      const double ljk = val[pk];
      for (std::size_t p = pk; p < pat.colptr[k + 1]; ++p) {
        const int slot = pos[pat.rowidx[p]];
        if (slot >= 0) val[slot] -= val[p] * ljk;
      }
      if (pk + 1 < pat.colptr[k + 1]) {
        next[k] = pk + 1;
        const int r = pat.rowidx[pk + 1];
        link[k] = head[r];
        head[r] = k;
      }
      k = after;
    }
    const double d = val[begin];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    smallest = std::min(smallest, d);
    const double s = std::sqrt(d);
    val[begin] = s;
    for (std::size_t p = begin + 1; p < end; ++p) val[p] /= s;
    for (std::size_t p = begin; p < end; ++p) pos[pat.rowidx[p]] = -1;
    if (begin + 1 < end) {
      next[j] = begin + 1;
      const int r = pat.rowidx[begin + 1];
      link[j] = head[r];
      head[r] = j;
    }
  }
  *min_pivot = m > 0 ? smallest : 0.0;
  return true;
}

}  // namespace

WeightOperator WeightOperator::identity(int m) {
  WeightOperator w;
  w.m_ = m;
  return w;
}

Vector WeightOperator::half_apply(const Vector& v) const {
  if (v.size() != m_) throw InvalidInput("weight: dimension mismatch");
  if (mode_ == WeightMode::Identity) return v;
  Vector y(m_);
  for (int i = 0; i < m_; ++i) y[newpos_[i]] = v[i];
  for (int j = 0; j < m_; ++j) {
    const std::size_t b = colptr_[j];
    y[j] /= values_[b];
    const double yj = y[j];
    for (std::size_t p = b + 1; p < colptr_[j + 1]; ++p) y[rowidx_[p]] -= values_[p] * yj;
  }
  return y;
}

Vector WeightOperator::apply(const Vector& v) const {
  if (mode_ == WeightMode::Identity) {
    if (v.size() != m_) throw InvalidInput("weight: dimension mismatch");
    return v;
  }
  Vector y = half_apply(v);
  for (int j = m_ - 1; j >= 0; --j) {
    const std::size_t b = colptr_[j];
    double s = y[j];
    for (std::size_t p = b + 1; p < colptr_[j + 1]; ++p) s -= values_[p] * y[rowidx_[p]];
    y[j] = s / values_[b];
  }
  Vector out(m_);
  for (int i = 0; i < m_; ++i) out[i] = y[newpos_[i]];
  return out;
}

WeightOperator build_weight(const GramMatrix& M, WeightPolicy policy, const WeightConfig& config,
                            FillEstimate* fill) {
  const int m = M.pattern.m;
  if (policy == WeightPolicy::Identity) return WeightOperator::identity(m);
  if (M.data.dim() != std::max(m, 1)) throw InvalidInput("build_weight: Gram data and pattern disagree");

  double maxdiag = 0.0;
  for (const auto& e : M.data.entries()) {
    if (e.row == e.col) {
      if (e.value < 0) throw InvalidInput("build_weight: negative diagonal");
      maxdiag = std::max(maxdiag, e.value);
    }
  }
  if (!(maxdiag > 0.0)) throw DegenerateGram("build_weight: Gram matrix has zero diagonal");

  WeightOperator w;
  w.m_ = m;
  w.newpos_ = minimum_degree_order(M.pattern);
  const LowerPattern base = permuted_lower(M.pattern, w.newpos_);

  FillEstimate est;
  est.predicted_gram_nnz = static_cast<double>(base.nnz());
  bool exact = policy == WeightPolicy::Exact;
  if (policy == WeightPolicy::Auto || fill) {
    est.predicted_factor_nnz = symbolic_factor_count(base, config.fill_threshold);
    if (policy == WeightPolicy::Auto) exact = est.predicted_factor_nnz <= config.fill_threshold;
  }
  if (fill) *fill = est;

  const LowerPattern pat = exact ? symbolic_factor(base) : base;
  std::vector<double> init(pat.nnz(), 0.0);
  std::vector<std::size_t> diag_slot(m);
  for (int j = 0; j < m; ++j) diag_slot[j] = pat.colptr[j];
  for (const auto& e : M.data.entries()) {
    const int a = w.newpos_[e.row], b = w.newpos_[e.col];
    const int row = std::max(a, b), col = std::min(a, b);
    auto first = pat.rowidx.begin() + static_cast<std::ptrdiff_t>(pat.colptr[col]);
    auto last = pat.rowidx.begin() + static_cast<std::ptrdiff_t>(pat.colptr[col + 1]);
    auto it = std::lower_bound(first, last, row);
    init[static_cast<std::size_t>(it - pat.rowidx.begin())] += e.value;
  }

  double ridge = config.ridge_rel * maxdiag;
  const double ridge_max = config.ridge_max_rel * maxdiag;
  for (;;) {
    std::vector<double> val = init;
    for (int j = 0; j < m; ++j) val[diag_slot[j]] += ridge;
    double pivot = 0.0;
    if (factorize(pat, val, &pivot)) {
      w.mode_ = exact ? WeightMode::ExactCholesky : WeightMode::IncompleteCholesky;
      w.ridge_ = ridge;
      w.min_pivot_ = pivot;
      w.colptr_ = pat.colptr;
      w.rowidx_ = pat.rowidx;
      w.values_ = std::move(val);
      return w;
    }
    if (ridge >= ridge_max) break;
    ridge = ridge > 0 ? std::min(ridge * 10.0, ridge_max) : 1e-6 * maxdiag;
  }
  throw DegenerateGram("build_weight: factorization broke down at the largest ridge");
}

Vector apply_weight(const WeightOperator& W, const Vector& v) { return W.apply(v); }

bool should_form_gram(const LinearMapA& A, const WeightConfig& config) {
  return predict_pattern_nnz(A.dim(), A.supports()) <= config.gram_threshold;
}

bool should_form_gram(const MultiMap& A, const WeightConfig& config) {
  return A.predict_gram_nnz() <= config.gram_threshold;
}

std::uint64_t fingerprint(const std::vector<Matrix>& blocks) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& B : blocks) {
    for (Eigen::Index i = 0; i < B.size(); ++i) {
      std::uint64_t bits;
      const double x = B.data()[i];
      std::memcpy(&bits, &x, sizeof bits);
      h = (h ^ bits) * 1099511628211ULL;
    }
    h = (h ^ static_cast<std::uint64_t>(B.cols())) * 1099511628211ULL;
  }
  return h;
}

}  // namespace palmsdp
