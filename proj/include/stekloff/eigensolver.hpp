#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stekloff/assembly.hpp"

namespace stekloff {

class EigenSolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Which { NearestShift, SmallestMagnitude };

struct EigenRequest {
  int nev = 8;
  double shift = -2.0;
  int max_iterations = 3000;
  int subspace_dim = 0;  // 0 picks max(2 * nev + 1, 20)
  double tolerance = 1e-8;
  Which which = Which::NearestShift;
  bool retry_shifts = true;

  void validate() const;
};

struct EigenPair {
  Complex lambda;
  CVector x;  // over (u_i, u_b, q)
  double residual = 0.0;
};

/// Finite eigenpairs of A x = −λ B x.
struct EigenResult {
  std::vector<EigenPair> pairs;
  std::vector<std::string> warnings;
  double shift = 0.0;
  int discarded_infinite = 0;
  int discarded_zero = 0;

  std::vector<Complex> values() const;
};

/// ‖A x + λ B x‖₂ / ‖x‖₂
double pencil_residual(const BlockSystem& system, Complex lambda, const CVector& x);

/// Shift-invert Arnoldi on x ↦ (A + σB)⁻¹ B x. Ritz values ν map back through
/// λ = σ − 1/ν. Infinite directions (ν ≈ 0) and the λ = 0 modes carried by the
/// scalar block alone are discarded. Pairs come back sorted by distance to the
/// shift (NearestShift) or by ascending |Re λ| (SmallestMagnitude).
EigenResult shift_invert_solve(const BlockSystem& system, const EigenRequest& request);

/// Dense QZ on (A, −B) for small pencils, with the same filtering and result
/// contract as shift_invert_solve; returns every finite eigenpair sorted by
/// ascending |Re λ|.
EigenResult dense_solve(const BlockSystem& system, Index dimension_cap = 2000, double tolerance = 1e-8);

/// Sorts pairs by ascending |Re λ|, breaking ties by Im λ.
void sort_by_magnitude(EigenResult& result);

struct ClusterPolicy {
  std::vector<int> sizes;  // explicit cluster sizes; empty means gap-based
  double gap = 0.05;       // new cluster when |λ_{k+1} − λ_k| > gap · |λ_k|
};

/// Partitions eigenvalues (already in ascending |Re λ| order) into clusters.
std::vector<std::vector<Complex>> cluster_eigenvalues(const std::vector<Complex>& values,
                                                      const ClusterPolicy& policy);

}  // namespace stekloff
