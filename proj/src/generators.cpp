#include "palmsdp/generators.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "palmsdp/errors.hpp"

namespace palmsdp {

Graph cycle_graph(int n) {
  if (n < 3) throw InvalidInput("cycle graph needs n >= 3");
  Graph g{n, {}};
  for (int i = 0; i < n; ++i) g.edges.push_back({i, (i + 1) % n});
  return g;
}

Graph path_graph(int n) {
  if (n < 1) throw InvalidInput("path graph needs n >= 1");
  Graph g{n, {}};
  for (int i = 0; i + 1 < n; ++i) g.edges.push_back({i, i + 1});
  return g;
}

Graph complete_graph(int n) {
  if (n < 1) throw InvalidInput("complete graph needs n >= 1");
  Graph g{n, {}};
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.edges.push_back({i, j});
  return g;
}

Graph empty_graph(int n) {
  if (n < 1) throw InvalidInput("empty graph needs n >= 1");
  return Graph{n, {}};
}

Graph petersen_graph() {
  Graph g{10, {}};
  for (int i = 0; i < 5; ++i) {
    g.edges.push_back({i, (i + 1) % 5});          // outer cycle
    g.edges.push_back({i, i + 5});                // spokes
    g.edges.push_back({5 + i, 5 + (i + 2) % 5});  // inner pentagram
  }
  return g;
}

Graph named_graph(const std::string& spec) {
  if (spec == "c5") return cycle_graph(5);
  if (spec == "petersen") return petersen_graph();
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw InvalidInput("unknown graph '" + spec + "'");
  const std::string kind = spec.substr(0, colon);
  int n = 0;
  try {
    std::size_t used = 0;
    n = std::stoi(spec.substr(colon + 1), &used);
    if (used != spec.size() - colon - 1) throw InvalidInput("");
  } catch (const std::exception&) {
    throw InvalidInput("bad vertex count in graph '" + spec + "'");
  }
  if (kind == "cycle") return cycle_graph(n);
  if (kind == "path") return path_graph(n);
  if (kind == "complete") return complete_graph(n);
  if (kind == "empty") return empty_graph(n);
  throw InvalidInput("unknown graph '" + spec + "'");
}

Graph parse_gset(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  Graph g;
  long long m = -1;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    if (m < 0) {
      if (!(ls >> g.n >> m) || g.n < 1 || m < 0) throw ParseError(line_no, "expected 'n m' header");
      continue;
    }
    int u = 0, v = 0;
    double w = 1.0;
    if (!(ls >> u)) continue;  // blank line
    if (!(ls >> v)) throw ParseError(line_no, "expected 'u v [w]'");
    if (!(ls >> w)) w = 1.0;
    if (u < 1 || v < 1 || u > g.n || v > g.n) throw ParseError(line_no, "vertex index out of range");
    g.edges.push_back({u - 1, v - 1, w});
  }
  if (m < 0) throw ParseError(line_no, "empty graph file");
  if (static_cast<long long>(g.edges.size()) != m)
    throw ParseError(line_no, "edge count differs from header");
  return g;
}

ConicProblem gen_theta(const Graph& g, ThetaVariant variant) {
  ProblemBuilder b;
  const int blk = b.add_psd_block(g.n);
  for (int i = 0; i < g.n; ++i)
    for (int j = i; j < g.n; ++j) b.add_cost(blk, i, j, -1.0);

  std::vector<RowCoefficient> trace;
  for (int i = 0; i < g.n; ++i) trace.push_back({blk, i, i, 1.0});
  b.add_constraint(trace, 1.0);

  std::set<std::pair<int, int>> seen;
  for (const auto& e : g.edges) {
    if (e.u == e.v) throw InvalidInput("theta: self-loops are not allowed");
    if (e.u < 0 || e.v < 0 || e.u >= g.n || e.v >= g.n) throw InvalidInput("theta: vertex out of range");
    const auto key = std::minmax(e.u, e.v);
    if (!seen.insert(key).second) throw InvalidInput("theta: duplicate edge");
    b.add_constraint({{blk, key.first, key.second, 0.5}}, 0.0);
  }
  if (variant == ThetaVariant::Plus) {
    const double inf = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.n; ++i)
      for (int j = i + 1; j < g.n; ++j)
        if (!seen.count({i, j})) b.add_side_row({{blk, i, j, 0.5}}, 0.0, inf);
  }
  return b.build();
}

ConicProblem gen_maxcut(const Graph& g) {
  ProblemBuilder b;
  const int blk = b.add_psd_block(g.n);
  std::vector<double> degree(g.n, 0.0);
  for (const auto& e : g.edges) {
    if (e.u < 0 || e.v < 0 || e.u >= g.n || e.v >= g.n) throw InvalidInput("maxcut: vertex out of range");
    if (e.u == e.v) continue;  // a loop does not change the Laplacian
    degree[e.u] += e.w;
    degree[e.v] += e.w;
    b.add_cost(blk, e.u, e.v, 0.25 * e.w);
  }
  for (int i = 0; i < g.n; ++i) {
    if (degree[i] != 0.0) b.add_cost(blk, i, i, -0.25 * degree[i]);
    b.add_constraint({{blk, i, i, 1.0}}, 1.0);
  }
  return b.build();
}

NcmData ncm_data(int n, std::uint64_t seed) {
  if (n < 2) throw InvalidInput("ncm: n must be at least 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(-1.0, 1.0), weight(0.1, 10.0);

  Matrix G(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) G(i, j) = gauss(rng);
  Matrix C = G * G.transpose();
  const Vector d = C.diagonal().cwiseSqrt().cwiseInverse();
  C = d.asDiagonal() * C * d.asDiagonal();

  NcmData data;
  data.target = C;
  data.weight.resize(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < j; ++i) {
      const double noise = 0.1 * unit(rng);
      data.target(i, j) = data.target(j, i) = std::clamp(C(i, j) + noise, -1.0, 1.0);
      data.weight(i, j) = data.weight(j, i) = weight(rng);
    }
    data.target(j, j) = 1.0;
    data.weight(j, j) = weight(rng);
  }
  return data;
}

ConicProblem gen_ncm(const NcmData& data, LossKind loss, double delta) {
  const int n = static_cast<int>(data.weight.rows());
  ProblemBuilder b;
  const int blk = b.add_psd_block(n);
  for (int i = 0; i < n; ++i) b.add_constraint({{blk, i, i, 1.0}}, 1.0);
  WeightedLoss wl;
  wl.block = blk;
  wl.kind = loss;
  wl.weight = data.weight;
  wl.target = data.target;
  wl.delta = delta;
  b.set_objective(Objective::weighted_loss(std::move(wl)));
  return b.build();
}

ConicProblem gen_ncm(int n, LossKind loss, std::uint64_t seed, double delta) {
  return gen_ncm(ncm_data(n, seed), loss, delta);
}

}  // namespace palmsdp
