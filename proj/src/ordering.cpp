#include "palmsdp/ordering.hpp"

#include <algorithm>

#include <Eigen/OrderingMethods>

namespace palmsdp {

namespace {

// Symmetric pattern with unit values, both triangles, for the ordering code.
SparseMatrix pattern_matrix(const GramPattern& pattern) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * pattern.nnz_upper() + pattern.m);
  for (int j = 0; j < pattern.m; ++j) {
    trips.emplace_back(j, j, 1.0);
    for (std::size_t p = pattern.offset[j]; p < pattern.offset[j + 1]; ++p) {
      const int i = pattern.index[p];
      if (i == j) continue;
      trips.emplace_back(i, j, 1.0);
      trips.emplace_back(j, i, 1.0);
    }
  }
  SparseMatrix A(pattern.m, pattern.m);
  A.setFromTriplets(trips.begin(), trips.end(), [](double a, double) { return a; });
  return A;
}

// Walks the elimination tree from each off-diagonal entry of row i up to i.
// `visit(i, k)` is called once for each nonzero L(i, k), k < i.
template <class Visit>
bool row_structures(const LowerPattern& lower, const std::vector<int>& parent, Visit&& visit) {
  const int m = lower.m;
  // Row access of the strict lower triangle: rows_of[i] = columns k < i with (i, k).
  std::vector<std::size_t> rowptr(m + 1, 0);
  for (std::size_t p = 0; p < lower.nnz(); ++p) ++rowptr[lower.rowidx[p] + 1];
  for (int i = 0; i < m; ++i) rowptr[i + 1] += rowptr[i];
  std::vector<int> cols(lower.nnz());
  std::vector<std::size_t> fill(rowptr.begin(), rowptr.end() - 1);
  for (int k = 0; k < m; ++k)
    for (std::size_t p = lower.colptr[k]; p < lower.colptr[k + 1]; ++p) cols[fill[lower.rowidx[p]]++] = k;

  std::vector<int> mark(m, -1);
  for (int i = 0; i < m; ++i) {
    mark[i] = i;
    for (std::size_t p = rowptr[i]; p < rowptr[i + 1]; ++p) {
      for (int k = cols[p]; k != -1 && k < i && mark[k] != i; k = parent[k]) {
        mark[k] = i;
        if (!visit(i, k)) return false;
      }
    }
  }
  return true;
}

}  // namespace

std::vector<int> minimum_degree_order(const GramPattern& pattern) {
  std::vector<int> newpos(pattern.m);
  if (pattern.m == 0) return newpos;
  const SparseMatrix A = pattern_matrix(pattern);
  Eigen::AMDOrdering<int> amd;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> pinv;
  amd(A, pinv);
  const Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm = pinv.inverse();
  for (int i = 0; i < pattern.m; ++i) newpos[i] = perm.indices()[i];
  return newpos;
}

LowerPattern permuted_lower(const GramPattern& pattern, const std::vector<int>& newpos) {
  const int m = pattern.m;
  std::vector<std::vector<int>> cols(m);
  for (int j = 0; j < m; ++j) {
    cols[newpos[j]].push_back(newpos[j]);
    for (std::size_t p = pattern.offset[j]; p < pattern.offset[j + 1]; ++p) {
      const int i = pattern.index[p];
      if (i == j) continue;
      const int a = newpos[i], b = newpos[j];
      cols[std::min(a, b)].push_back(std::max(a, b));
    }
  }
  LowerPattern L;
  L.m = m;
  for (int j = 0; j < m; ++j) {
    auto& c = cols[j];
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    L.rowidx.insert(L.rowidx.end(), c.begin(), c.end());
    L.colptr.push_back(L.rowidx.size());
  }
  return L;
}

std::vector<int> elimination_tree(const LowerPattern& lower) {
  const int m = lower.m;
  std::vector<int> parent(m, -1), ancestor(m, -1);
  // Liu's algorithm needs, for each row i, the columns k < i with A(i,k) != 0.
  std::vector<std::vector<int>> row_cols(m);
  for (int k = 0; k < m; ++k)
    for (std::size_t p = lower.colptr[k]; p < lower.colptr[k + 1]; ++p)
      if (lower.rowidx[p] > k) row_cols[lower.rowidx[p]].push_back(k);
  for (int i = 0; i < m; ++i) {
    for (int k : row_cols[i]) {
      while (k != -1 && k < i) {
        const int next = ancestor[k];
        ancestor[k] = i;
        if (next == -1) {
          parent[k] = i;
          break;
        }
        k = next;
      }
    }
  }
  return parent;
}

double symbolic_factor_count(const LowerPattern& lower, double cap) {
  const auto parent = elimination_tree(lower);
  double count = lower.m;
  row_structures(lower, parent, [&](int, int) {
    count += 1.0;
    return count <= cap;
  });
  return count;
}

LowerPattern symbolic_factor(const LowerPattern& lower) {
  const int m = lower.m;
  const auto parent = elimination_tree(lower);
  std::vector<std::vector<int>> cols(m);
  for (int j = 0; j < m; ++j) cols[j].push_back(j);
  // Rows are visited in increasing order, so each column stays sorted.
  row_structures(lower, parent, [&](int i, int k) {
    cols[k].push_back(i);
    return true;
  });
  LowerPattern L;
  L.m = m;
  for (int j = 0; j < m; ++j) {
    L.rowidx.insert(L.rowidx.end(), cols[j].begin(), cols[j].end());
    L.colptr.push_back(L.rowidx.size());
  }
  return L;
}

FillEstimate estimate_fill(const GramPattern& pattern, double cap) {
  FillEstimate est;
  const auto lower = permuted_lower(pattern, minimum_degree_order(pattern));
  est.predicted_gram_nnz = static_cast<double>(lower.nnz());
  est.predicted_factor_nnz = symbolic_factor_count(lower, cap);
  return est;
}

}  // namespace palmsdp
