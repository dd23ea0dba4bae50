#pragma once

#include <cstdint>
#include <vector>

#include "palmsdp/linear_map.hpp"
#include "palmsdp/ordering.hpp"

namespace palmsdp {

class MultiMap;

enum class WeightMode { Identity, ExactCholesky, IncompleteCholesky };
enum class WeightPolicy { Auto, Exact, Ichol, Identity };

struct WeightConfig {
  double fill_threshold = 1e8;
  double gram_threshold = 1e9;
  double ridge_rel = 1e-6;
  /// Largest ridge tried on pivot breakdown, relative to max diag.
  double ridge_max_rel = 1e-2;
};

/// W ~ M^{-1} applied as P^T L^{-T} L^{-1} P v, or the identity.
class WeightOperator {
 public:
  WeightOperator() = default;
  static WeightOperator identity(int m);

  WeightMode mode() const { return mode_; }
  int size() const { return m_; }
  /// Absolute ridge added to the diagonal before factorization.
  double ridge() const { return ridge_; }
  double min_pivot() const { return min_pivot_; }
  std::size_t factor_nnz() const { return rowidx_.size(); }
  std::uint64_t built_from() const { return built_from_; }
  void set_built_from(std::uint64_t fp) { built_from_ = fp; }

  Vector apply(const Vector& v) const;
  /// L^{-1} P v, so that <v, W v> = ||half_apply(v)||^2.
  Vector half_apply(const Vector& v) const;

 private:
  friend WeightOperator build_weight(const GramMatrix&, WeightPolicy, const WeightConfig&, FillEstimate*);

  WeightMode mode_ = WeightMode::Identity;
  int m_ = 0;
  double ridge_ = 0.0;
  double min_pivot_ = 0.0;
  std::uint64_t built_from_ = 0;
  std::vector<int> newpos_;
  std::vector<std::size_t> colptr_;
  std::vector<int> rowidx_;
  std::vector<double> values_;
};

/// Auto: exact Cholesky when the minimum-degree factor estimate is within
/// fill_threshold, zero-fill incomplete Cholesky otherwise. Both factor
/// M + ridge I; breakdown multiplies the ridge by 10 up to ridge_max_rel
/// times max diag, then throws DegenerateGram. `fill` receives the estimate
/// when non-null.
WeightOperator build_weight(const GramMatrix& M, WeightPolicy policy, const WeightConfig& config = {},
                            FillEstimate* fill = nullptr);

Vector apply_weight(const WeightOperator& W, const Vector& v);

bool should_form_gram(const LinearMapA& A, const WeightConfig& config = {});
bool should_form_gram(const MultiMap& A, const WeightConfig& config = {});

/// Hash of the factor entries, recorded as the operator's provenance.
std::uint64_t fingerprint(const std::vector<Matrix>& blocks);

}  // namespace palmsdp
