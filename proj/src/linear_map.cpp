#include "palmsdp/linear_map.hpp"

#include <algorithm>

#include "palmsdp/errors.hpp"

namespace palmsdp {

bool GramPattern::contains(int i, int j) const {
  if (i > j) std::swap(i, j);
  auto first = index.begin() + static_cast<std::ptrdiff_t>(offset[j]);
  auto last = index.begin() + static_cast<std::ptrdiff_t>(offset[j + 1]);
  return std::binary_search(first, last, i);
}

GramPattern GramPattern::dense(int m) {
  GramPattern p;
  p.m = m;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i <= j; ++i) p.index.push_back(i);
    p.offset.push_back(p.index.size());
  }
  return p;
}

GramPattern GramPattern::diagonal(int m) {
  GramPattern p;
  p.m = m;
  for (int j = 0; j < m; ++j) {
    p.index.push_back(j);
    p.offset.push_back(p.index.size());
  }
  return p;
}

GramPattern pattern_from_supports(int universe, const std::vector<std::vector<int>>& supports) {
  const int m = static_cast<int>(supports.size());
  std::vector<std::vector<int>> touching(universe);
  for (int i = 0; i < m; ++i)
    for (int u : supports[i]) touching[u].push_back(i);

  GramPattern p;
  p.m = m;
  std::vector<int> mark(m, -1);
  std::vector<int> col;
  for (int j = 0; j < m; ++j) {
    col.clear();
    for (int u : supports[j])
      for (int i : touching[u])
        if (i <= j && mark[i] != j) {
          mark[i] = j;
          col.push_back(i);
        }
    std::sort(col.begin(), col.end());
    p.index.insert(p.index.end(), col.begin(), col.end());
    p.offset.push_back(p.index.size());
  }
  return p;
}

double predict_pattern_nnz(int universe, const std::vector<std::vector<int>>& supports) {
  std::vector<double> count(universe, 0.0);
  for (const auto& s : supports)
    for (int u : s) count[u] += 1.0;
  double bound = 0.0;
  for (double c : count) bound += 0.5 * c * (c + 1.0);
  const double m = static_cast<double>(supports.size());
  return std::min(bound, 0.5 * m * (m + 1.0));
}

LinearMapA::LinearMapA(int dim, std::vector<SymSparse> mats) : dim_(dim), mats_(std::move(mats)) {
  if (dim < 1) throw InvalidInput("LinearMapA: dimension must be positive");
  std::vector<Eigen::Triplet<double>> trips;
  for (const auto& A : mats_) {
    if (A.dim() != dim) throw InvalidInput("LinearMapA: matrices must share one dimension");
    for (const auto& e : A.entries()) {
      trips.emplace_back(e.row, e.col, 1.0);
      if (e.row != e.col) trips.emplace_back(e.col, e.row, 1.0);
    }
  }
  union_.resize(dim, dim);
  union_.setFromTriplets(trips.begin(), trips.end());
  union_.makeCompressed();

  auto slot_of = [this](int r, int c) {
    const int* first = union_.innerIndexPtr() + union_.outerIndexPtr()[c];
    const int* last = union_.innerIndexPtr() + union_.outerIndexPtr()[c + 1];
    return static_cast<int>(std::lower_bound(first, last, r) - union_.innerIndexPtr());
  };
  entry_offset_.push_back(0);
  for (const auto& A : mats_) {
    for (const auto& e : A.entries()) {
      slot_upper_.push_back(slot_of(e.row, e.col));
      slot_lower_.push_back(e.row == e.col ? -1 : slot_of(e.col, e.row));
    }
    entry_offset_.push_back(slot_upper_.size());
  }
}

Vector LinearMapA::pair(const Matrix& P, const Matrix& Q) const {
  Vector out(size());
  for (int i = 0; i < size(); ++i) out[i] = mats_[i].pair(P, Q);
  return out;
}

Vector LinearMapA::apply_dense(const Matrix& X) const {
  if (X.rows() != dim_ || X.cols() != dim_) throw InvalidInput("apply_dense: dimension mismatch");
  Vector out(size());
  for (int i = 0; i < size(); ++i) out[i] = mats_[i].inner_dense(X);
  return out;
}

SparseMatrix LinearMapA::adjoint(const Vector& lam) const {
  if (lam.size() != size()) throw InvalidInput("adjoint: multiplier length mismatch");
  SparseMatrix out = union_;
  std::fill(out.valuePtr(), out.valuePtr() + out.nonZeros(), 0.0);
  double* val = out.valuePtr();
  for (int i = 0; i < size(); ++i) {
    if (lam[i] == 0.0) continue;
    auto ents = mats_[i].entries();
    for (std::size_t k = 0; k < ents.size(); ++k) {
      const std::size_t s = entry_offset_[i] + k;
      const double v = lam[i] * ents[k].value;
      val[slot_upper_[s]] += v;
      if (slot_lower_[s] >= 0) val[slot_lower_[s]] += v;
    }
  }
  return out;
}

std::vector<std::vector<int>> LinearMapA::supports() const {
  std::vector<std::vector<int>> s;
  s.reserve(mats_.size());
  for (const auto& A : mats_) s.push_back(A.nonzero_rows());
  return s;
}

namespace {

// A_i R restricted to the nonzero rows of A_i.
struct RowImage {
  const std::vector<int>* rows;
  Matrix U;
};

RowImage row_image(const SymSparse& A, const Matrix& R) {
  const auto& rows = A.nonzero_rows();
  RowImage img{&rows, Matrix::Zero(static_cast<Eigen::Index>(rows.size()), R.cols())};
  auto local = [&rows](int r) {
    return static_cast<Eigen::Index>(std::lower_bound(rows.begin(), rows.end(), r) - rows.begin());
  };
  for (const auto& e : A.entries()) {
    img.U.row(local(e.row)) += e.value * R.row(e.col);
    if (e.row != e.col) img.U.row(local(e.col)) += e.value * R.row(e.row);
  }
  return img;
}

double image_inner(const RowImage& a, const RowImage& b) {
  const auto& ra = *a.rows;
  const auto& rb = *b.rows;
  double acc = 0.0;
  std::size_t p = 0, q = 0;
  while (p < ra.size() && q < rb.size()) {
    if (ra[p] < rb[q])
      ++p;
    else if (rb[q] < ra[p])
      ++q;
    else {
      acc += a.U.row(static_cast<Eigen::Index>(p)).dot(b.U.row(static_cast<Eigen::Index>(q)));
      ++p;
      ++q;
    }
  }
  return acc;
}

}  // namespace

void LinearMapA::accumulate_gram(const Matrix& R, const GramPattern& pattern, std::vector<double>& values,
                                 double scale) const {
  if (R.rows() != dim_) throw InvalidInput("accumulate_gram: factor row count mismatch");
  if (pattern.m != size() || values.size() != pattern.nnz_upper())
    throw InvalidInput("accumulate_gram: pattern does not match the map");
  std::vector<RowImage> images;
  images.reserve(mats_.size());
  for (const auto& A : mats_) images.push_back(row_image(A, R));
  for (int j = 0; j < size(); ++j)
    for (std::size_t k = pattern.offset[j]; k < pattern.offset[j + 1]; ++k)
      values[k] += scale * image_inner(images[pattern.index[k]], images[j]);
}

Vector apply_map(const LinearMapA& A, const Matrix& R) {
  if (R.rows() != A.dim()) throw InvalidInput("apply_map: factor row count mismatch");
  return A.pair(R, R);
}

Matrix apply_adjoint_times_factor(const LinearMapA& A, const Vector& lam, const Matrix& R) {
  if (R.rows() != A.dim()) throw InvalidInput("apply_adjoint_times_factor: factor row count mismatch");
  return A.adjoint(lam) * R;
}

GramPattern gram_pattern(const LinearMapA& A) { return pattern_from_supports(A.dim(), A.supports()); }

SymSparse gram_from_values(const GramPattern& pattern, const std::vector<double>& values) {
  std::vector<SymEntry> e;
  e.reserve(values.size());
  for (int j = 0; j < pattern.m; ++j)
    for (std::size_t k = pattern.offset[j]; k < pattern.offset[j + 1]; ++k)
      e.push_back({pattern.index[k], j, values[k]});
  return SymSparse(std::max(pattern.m, 1), std::move(e));
}

GramMatrix gram_matrix(const LinearMapA& A, const Matrix& R, double nnz_threshold) {
  const auto supports = A.supports();
  if (predict_pattern_nnz(A.dim(), supports) > nnz_threshold)
    throw GramRefused("gram_matrix: predicted nonzero count exceeds threshold");
  GramMatrix g;
  g.pattern = pattern_from_supports(A.dim(), supports);
  std::vector<double> values(g.pattern.nnz_upper(), 0.0);
  A.accumulate_gram(R, g.pattern, values);
  g.data = gram_from_values(g.pattern, values);
  return g;
}

}  // namespace palmsdp
