#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace palmsdp::testing {

SymSparse random_sym(int n, double density, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0), val(-1.0, 1.0);
  std::vector<SymEntry> e;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i)
      if (u(rng) < density) e.push_back({i, j, val(rng)});
  return SymSparse(n, std::move(e));
}

Matrix gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix M(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) M(i, j) = g(rng);
  return M;
}

double directional_fd(const std::function<double(double)>& f, double h) { return (f(h) - f(-h)) / (2.0 * h); }

double rel_err(double analytic, double fd, double scale) {
  return std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), scale});
}

namespace {

std::vector<RowCoefficient> to_row(const SymSparse& A, int block) {
  std::vector<RowCoefficient> row;
  for (const auto& e : A.entries()) row.push_back({block, e.row, e.col, e.value});
  return row;
}

double row_value(const std::vector<RowCoefficient>& row, const std::vector<Matrix>& X) {
  double v = 0.0;
  for (const auto& c : row) {
    const Matrix& B = X[c.block];
    if (B.cols() == 1)
      v += c.value * B(c.i, 0);
    else
      v += (c.i == c.j ? 1.0 : 2.0) * c.value * B(c.i, c.j);
  }
  return v;
}

}  // namespace

ConicProblem random_instance(std::uint64_t seed, InstanceKind kind) {
  std::mt19937_64 rng(0xabcdef12345ULL + 7919 * seed);
  std::uniform_int_distribution<int> dn(4, 8);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int n = dn(rng);
  ProblemBuilder pb;
  const int psd = pb.add_psd_block(n);

  if (kind == InstanceKind::Ncm) {
    NcmData data = ncm_data(n, seed + 101);
    Matrix Rs = gaussian(n, 2, rng);
    for (int i = 0; i < n; ++i) Rs.row(i).normalize();
    const std::vector<Matrix> X{Rs * Rs.transpose()};
    for (int i = 0; i < n; ++i) pb.add_constraint({{psd, i, i, 1.0}}, 1.0);
    const int extra = static_cast<int>(seed % 3);
    for (int t = 0; t < extra; ++t) {
      auto row = to_row(random_sym(n, 0.25, rng), psd);
      // Keep rows off the diagonal so they do not compete with diag(X) = 1.
      row.erase(std::remove_if(row.begin(), row.end(), [](const RowCoefficient& c) { return c.i == c.j; }), row.end());
      if (row.empty()) continue;
      const double rhs = row_value(row, X);
      pb.add_constraint(std::move(row), rhs);
    }
    WeightedLoss loss;
    loss.block = psd;
    loss.kind = seed % 2 ? LossKind::Huber : LossKind::Square;
    loss.weight = data.weight;
    loss.target = data.target;
    loss.delta = 0.1;
    pb.set_objective(Objective::weighted_loss(std::move(loss)));
    return pb.build();
  }

  const bool side = kind == InstanceKind::BoxSide;
  const int d = 3;
  const int vec = side ? pb.add_block(BlockKind::NonnegVector, d) : -1;
  Matrix Rs = gaussian(n, 2, rng);
  Vector xs(d);
  for (int i = 0; i < d; ++i) xs[i] = 0.5 + u01(rng);
  std::vector<Matrix> X{Rs * Rs.transpose()};
  if (side) X.push_back(xs);

  // A bounding row keeps the feasible set compact.
  std::vector<RowCoefficient> trace;
  for (int i = 0; i < n; ++i) trace.push_back({psd, i, i, 1.0});
  if (side)
    for (int i = 0; i < d; ++i) trace.push_back({vec, i, i, 1.0});
  const double tr = row_value(trace, X);
  pb.add_constraint(std::move(trace), tr);

  std::uniform_int_distribution<int> dm(2, std::min(14, n * (n + 1) / 2 - 1));
  const int m = dm(rng);
  for (int t = 0; t < m; ++t) {
    auto row = to_row(random_sym(n, 0.3, rng), psd);
    if (side && u01(rng) < 0.5) row.push_back({vec, t % d, t % d, u01(rng) - 0.5});
    if (row.empty()) row.push_back({psd, t % n, t % n, 1.0});
    const double rhs = row_value(row, X);
    pb.add_constraint(std::move(row), rhs);
  }

  const SymSparse C = random_sym(n, 0.5, rng);
  for (const auto& e : C.entries()) pb.add_cost(psd, e.row, e.col, e.value);
  if (side)
    for (int i = 0; i < d; ++i) pb.add_cost(vec, i, i, u01(rng) - 0.5);

  if (side) {
    const int p = 2 + static_cast<int>(seed % 3);
    for (int t = 0; t < p; ++t) {
      auto row = to_row(random_sym(n, 0.3, rng), psd);
      if (row.empty()) row.push_back({psd, 0, t % n, 1.0});
      const double v = row_value(row, X);
      const double lo = v - (0.05 + 0.4 * u01(rng));
      const double hi = t == 0 ? std::numeric_limits<double>::infinity() : v + (0.05 + 0.4 * u01(rng));
      pb.add_side_row(std::move(row), lo, hi);
    }
  }
  return pb.build();
}

ConicProblem ill_conditioned_theta(std::uint64_t seed, double eta) {
  std::mt19937_64 rng(0x7e7a0000ULL + seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int n = 8;
  std::set<std::pair<int, int>> edges;
  std::vector<std::pair<int, int>> non_edges;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < j; ++i) {
      if (u01(rng) < 0.35)
        edges.insert({i, j});
      else
        non_edges.push_back({i, j});
    }
  std::shuffle(non_edges.begin(), non_edges.end(), rng);

  ProblemBuilder pb;
  const int k = pb.add_psd_block(n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) pb.add_cost(k, i, j, -1.0);
  std::vector<std::vector<RowCoefficient>> rows;
  std::vector<double> rhs;
  std::vector<RowCoefficient> trace;
  for (int i = 0; i < n; ++i) trace.push_back({k, i, i, 1.0});
  rows.push_back(trace);
  rhs.push_back(1.0);
  for (const auto& [i, j] : edges) {
    rows.push_back({{k, i, j, 0.5}});
    rhs.push_back(0.0);
  }
  const int base = static_cast<int>(rows.size());
  std::uniform_int_distribution<int> pick(0, base - 1);
  for (int t = 0; t < 5 && t < static_cast<int>(non_edges.size()); ++t) {
    const int src = pick(rng);
    std::vector<RowCoefficient> dup;
    for (const auto& c : rows[src]) dup.push_back({c.block, c.i, c.j, 1e-3 * c.value});
    dup.push_back({k, non_edges[t].first, non_edges[t].second, 1e-3 * eta});
    rows.push_back(dup);
    // X = I/n has zero off-diagonal, so only the duplicated part contributes.
    rhs.push_back(1e-3 * rhs[src]);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) pb.add_constraint(rows[i], rhs[i]);
  return pb.build();
}

}  // namespace palmsdp::testing
