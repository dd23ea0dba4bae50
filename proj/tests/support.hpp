#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "palmsdp/feasible.hpp"
#include "palmsdp/generators.hpp"

namespace palmsdp::testing {

enum class InstanceKind { BoxSide, Ncm, Plain };

/// Seeded feasible instance with one PSD block of size n <= 10 and at most
/// 15 equality rows, b = A(R* R*^T). BoxSide adds a nonnegative vector block
/// and interval side rows containing the generating point; Ncm uses a
/// weighted square or Huber loss with diag(X) = 1.
ConicProblem random_instance(std::uint64_t seed, InstanceKind kind);

/// Theta on a seeded random graph plus five rows 1e-3 (A_j + eta E) that
/// nearly duplicate existing rows (E a unit off-diagonal pair on a
/// non-edge, right-hand side kept consistent with X = I/n).
ConicProblem ill_conditioned_theta(std::uint64_t seed, double eta = 30.0);

/// Random symmetric sparse matrix with roughly `density` of its upper
/// entries set.
SymSparse random_sym(int n, double density, std::mt19937_64& rng);

/// Gaussian matrix.
Matrix gaussian(int rows, int cols, std::mt19937_64& rng);

/// Central difference of f along D.
double directional_fd(const std::function<double(double)>& f, double h = 1e-6);

/// Relative mismatch used by the gradient tests.
double rel_err(double analytic, double fd, double scale);

}  // namespace palmsdp::testing
