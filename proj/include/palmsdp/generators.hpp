#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "palmsdp/problem.hpp"

namespace palmsdp {

struct Edge {
  int u;
  int v;
  double w = 1.0;
};

struct Graph {
  int n = 0;
  std::vector<Edge> edges;  // 0-based
};

Graph cycle_graph(int n);
Graph path_graph(int n);
Graph complete_graph(int n);
Graph empty_graph(int n);
Graph petersen_graph();
/// "c5", "petersen", "cycle:N", "path:N", "complete:N", "empty:N".
Graph named_graph(const std::string& spec);
/// Gset text: "n m" then m lines "u v w", 1-based.
Graph parse_gset(const std::string& text);

enum class ThetaVariant { Plain, Plus };

/// min -<J, X> s.t. <I, X> = 1, X_ij = 0 on edges (coefficient 1/2 on
/// (i,j) and (j,i)); the plus variant adds X_ij >= 0 for the remaining
/// off-diagonal pairs as side rows.
ConicProblem gen_theta(const Graph& g, ThetaVariant variant = ThetaVariant::Plain);

/// min <-L/4, X> s.t. diag(X) = 1.
ConicProblem gen_maxcut(const Graph& g);

struct NcmData {
  Matrix weight;  // H, symmetric, entries uniform in [0.1, 10]
  Matrix target;  // perturbed random correlation matrix
};

NcmData ncm_data(int n, std::uint64_t seed);

/// min sum g(H o (X - T)) s.t. diag(X) = 1, g the square or Huber loss.
ConicProblem gen_ncm(int n, LossKind loss, std::uint64_t seed, double delta = 0.1);
ConicProblem gen_ncm(const NcmData& data, LossKind loss, double delta = 0.1);

}  // namespace palmsdp
