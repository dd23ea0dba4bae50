#include "palmsdp/sym_sparse.hpp"

#include <algorithm>
#include <cmath>

#include "palmsdp/errors.hpp"

namespace palmsdp {

SymSparse::SymSparse(int dim, std::vector<SymEntry> entries) : dim_(dim) {
  if (dim < 1) throw InvalidInput("SymSparse: dimension must be positive");
  for (auto& e : entries) {
    if (e.row < 0 || e.col < 0 || e.row >= dim || e.col >= dim)
      throw InvalidInput("SymSparse: entry index out of range");
    if (e.row > e.col) std::swap(e.row, e.col);
  }
  std::sort(entries.begin(), entries.end(), [](const SymEntry& a, const SymEntry& b) {
    return a.col != b.col ? a.col < b.col : a.row < b.row;
  });
  for (const auto& e : entries) {
    if (!entries_.empty() && entries_.back().row == e.row && entries_.back().col == e.col)
      entries_.back().value += e.value;
    else
      entries_.push_back(e);
  }
  std::erase_if(entries_, [](const SymEntry& e) { return e.value == 0.0; });

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * entries_.size());
  for (const auto& e : entries_) {
    rows_.push_back(e.row);
    rows_.push_back(e.col);
    trips.emplace_back(e.row, e.col, e.value);
    if (e.row != e.col) trips.emplace_back(e.col, e.row, e.value);
  }
  std::sort(rows_.begin(), rows_.end());
  rows_.erase(std::unique(rows_.begin(), rows_.end()), rows_.end());
  full_.resize(dim, dim);
  full_.setFromTriplets(trips.begin(), trips.end());
  full_.makeCompressed();
}

SymSparse SymSparse::identity(int dim) {
  std::vector<SymEntry> e;
  e.reserve(dim);
  for (int i = 0; i < dim; ++i) e.push_back({i, i, 1.0});
  return SymSparse(dim, std::move(e));
}

SymSparse SymSparse::from_dense(const Matrix& dense, double drop_tol) {
  std::vector<SymEntry> e;
  const int n = static_cast<int>(dense.rows());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) {
      const double v = 0.5 * (dense(i, j) + dense(j, i));
      if (std::abs(v) > drop_tol) e.push_back({i, j, v});
    }
  return SymSparse(n, std::move(e));
}

Matrix SymSparse::to_dense() const { return Matrix(full_); }

double SymSparse::pair(const Matrix& P, const Matrix& Q) const {
  if (P.rows() != dim_ || Q.rows() != dim_ || P.cols() != Q.cols())
    throw InvalidInput("SymSparse::pair: dimension mismatch");
  double acc = 0.0;
  for (const auto& e : entries_) {
    if (e.row == e.col)
      acc += e.value * P.row(e.row).dot(Q.row(e.row));
    else
      acc += e.value * (P.row(e.col).dot(Q.row(e.row)) + P.row(e.row).dot(Q.row(e.col)));
  }
  return acc;
}

double SymSparse::inner_dense(const Matrix& X) const {
  double acc = 0.0;
  for (const auto& e : entries_)
    acc += e.row == e.col ? e.value * X(e.row, e.row) : e.value * (X(e.row, e.col) + X(e.col, e.row));
  return acc;
}

double SymSparse::frobenius_norm() const {
  double acc = 0.0;
  for (const auto& e : entries_) acc += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
  return std::sqrt(acc);
}

bool SymSparse::operator==(const SymSparse& other) const {
  if (dim_ != other.dim_ || entries_.size() != other.entries_.size()) return false;
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const auto& a = entries_[k];
    const auto& b = other.entries_[k];
    if (a.row != b.row || a.col != b.col || a.value != b.value) return false;
  }
  return true;
}

Matrix SymOperator::apply(const Matrix& R) const {
  Matrix out = sparse.nonZeros() > 0 ? Matrix(sparse * R) : Matrix::Zero(dim, R.cols());
  if (has_dense()) out.noalias() += dense * R;
  return out;
}

Matrix SymOperator::to_dense() const {
  Matrix out = sparse.nonZeros() > 0 ? Matrix(sparse) : Matrix::Zero(dim, dim);
  if (has_dense()) out += dense;
  return out;
}

double SymOperator::frobenius_norm() const {
  if (has_dense()) return to_dense().norm();
  return sparse.norm();
}

double SymOperator::quad(const Matrix& R) const { return (apply(R).array() * R.array()).sum(); }

}  // namespace palmsdp
