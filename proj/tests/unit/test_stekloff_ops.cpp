#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "invariants.hpp"
#include "random_fields.hpp"
#include "stekloff/eigensolver.hpp"

using namespace stekloff;
using namespace stekloff::testing;

TEST_CASE("operator invariants on cube and L-shape") {
  for (const Mesh& m : {generate_cube_mesh(2), generate_lshape_mesh(2)}) {
    const InvariantDefects d = measure_invariants(m, 20, 7);
    CHECK(d.samples == 20);
    CHECK(d.sh_idempotence <= 1e-10);
    CHECK(d.splus_idempotence <= 1e-10);
    CHECK(d.gradient_orthogonality <= 1e-10);
    CHECK(d.gradient_kill <= 1e-10);
    CHECK(d.de_rham <= 1e-12);
    CHECK(d.symmetry <= 1e-14);
    CHECK(d.z_membership <= 1e-9);
    CHECK(d.th_adjoint <= 1e-10);
    CHECK(d.loop_closure <= 1e-8);
    CHECK(d.th_eigen <= 1e-8);
  }
}

TEST_CASE("field representations") {
  const Mesh m = generate_cube_mesh(1);
  const DofMap d = DofMap::build(m);
  const SurfaceOperators ops(m, d);
  CHECK(ops.n_faces() == 12);
  CHECK(ops.n_boundary_vertices() == 8);
  CHECK(ops.n_boundary_edges() == 18);
  CHECK(ops.boundary_slot(d.pinned_vertex()) == ops.pinned_slot());
  std::mt19937_64 rng(3);
  const auto s = random_scalar(ops, rng);
  CHECK(ops.gradient_whitney(s).representation() == BoundaryTangentField::Representation::Whitney);
  CHECK(ops.surface_gradient(s).representation() == BoundaryTangentField::Representation::PerFace);
  CHECK(random_field(ops, rng).representation() == BoundaryTangentField::Representation::Mixed);
  // Whitney and per-face forms of the same gradient coincide
  CHECK(ops.norm(axpy(ops.gradient_whitney(s), -1.0, ops.surface_gradient(s))) < 1e-13 * ops.norm(ops.surface_gradient(s)));
  // curls are tangential and already in the range of S_h
  const auto c = ops.surface_curl(s);
  CHECK(ops.norm(axpy(apply_Sh(ops, c), -1.0, c)) < 1e-12 * ops.norm(c));
  CHECK(ops.norm(ops.zero_field()) == 0.0);
}

TEST_CASE("source solve near a Neumann eigenvalue is rejected") {
  const Mesh m = generate_cube_mesh(1);
  const DofMap d = DofMap::build(m);
  const Index ne = d.n_edge_dofs();
  const Eigen::MatrixXd K = Eigen::MatrixXd(assemble_curl_curl(m, d).real()).topLeftCorner(ne, ne);
  const Eigen::MatrixXd M = Eigen::MatrixXd(assemble_mass(m, MaterialField::constant(1.0), d).real()).topLeftCorner(ne, ne);
  const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M);
  double k2 = 0.0;
  for (Index i = 0; i < ne; ++i)
    if (es.eigenvalues()[i] > 1e-8) {
      k2 = es.eigenvalues()[i];
      break;
    }
  REQUIRE(k2 > 0.0);
  CHECK_THROWS_AS(SourceSolver(m, d, Wavenumber(std::sqrt(k2)), MaterialField::constant(1.0)), NearSingularError);
  CHECK_NOTHROW(SourceSolver(m, d, Wavenumber(0.5 * std::sqrt(k2)), MaterialField::constant(1.0)));
}

TEST_CASE("mismatched field sizes are rejected") {
  const Mesh m = generate_cube_mesh(1);
  const DofMap d = DofMap::build(m);
  const SurfaceOperators ops(m, d);
  BoundaryTangentField bad;
  bad.whitney = CVector::Zero(5);
  CHECK_THROWS_AS(apply_Sh(ops, bad), OperatorError);
}
