#pragma once

#include <string>

#include "stekloff/mesh.hpp"

namespace stekloff::testing {

/// Worst-case defects of the discrete operator identities over `trials`
/// random inputs on one mesh. All entries are relative (scaled) quantities.
struct InvariantDefects {
  double sh_idempotence = 0.0;
  double splus_idempotence = 0.0;
  double gradient_orthogonality = 0.0;
  double gradient_kill = 0.0;
  double de_rham = 0.0;
  double symmetry = 0.0;
  double z_membership = 0.0;
  double th_adjoint = 0.0;
  double loop_closure = 0.0;
  double th_eigen = 0.0;
  int samples = 0;
  int eigenpairs = 0;
};

InvariantDefects measure_invariants(const Mesh& mesh, int trials, unsigned seed, double kappa = 1.0);

}  // namespace stekloff::testing
