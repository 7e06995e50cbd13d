#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "stekloff/assembly.hpp"

using namespace stekloff;

namespace {

// Coefficients of the Whitney interpolant: line integral of F along every edge
// (exact for F = a + b × x, which lies in the lowest-order space).
CVector interpolate(const Mesh& m, const DofMap& dofs, const std::function<Vec3(const Point3&)>& F) {
  CVector u = CVector::Zero(dofs.n_total());
  const auto& edges = m.edge_table().edges;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Point3& a = m.points()[static_cast<std::size_t>(edges[e].low)];
    const Point3& b = m.points()[static_cast<std::size_t>(edges[e].high)];
    u[dofs.edge_dof(static_cast<Index>(e))] = F(0.5 * (a + b)).dot(b - a);
  }
  return u;
}

Complex quad_form(const SparseMatrix& M, const CVector& u) { return u.dot(M * u); }

}  // namespace

TEST_CASE("DOF layout on the Kuhn cube n=1") {
  const Mesh m = generate_cube_mesh(1);
  const DofMap d = DofMap::build(m);
  CHECK(d.n_boundary_edges() == 18);
  CHECK(d.n_interior_edges() == 1);
  CHECK(d.n_scalar() == 7);
  CHECK(d.n_total() == 26);
  CHECK(d.pinned_vertex() == 0);
  CHECK(d.scalar_dof(0) == -1);
  for (Index dof = 0; dof < d.n_edge_dofs(); ++dof) {
    CHECK(d.edge_dof(d.dof_edge(dof)) == dof);
    CHECK(d.is_boundary_dof(dof) == m.is_boundary_edge(d.dof_edge(dof)));
  }
  const DofMap p = DofMap::build(m, PinRule{5});
  CHECK(p.pinned_vertex() == 5);
  CHECK(p.scalar_dof(5) == -1);
}

TEST_CASE("symmetry of the assembled pencil") {
  for (const Mesh& m : {generate_cube_mesh(2), generate_lshape_mesh(2)})
    for (Formulation f : {Formulation::Sh, Formulation::ShPlus}) {
      const BlockSystem s = assemble_system(m, Wavenumber(1.3), MaterialField::constant(1.7), f);
      CHECK(hermitian_defect(s.A) <= 1e-14);
      CHECK(hermitian_defect(s.B) <= 1e-14);
      const SparseMatrix At = s.A.transpose();
      CHECK((At - s.A).norm() <= 1e-14 * s.A.norm());
    }
}

TEST_CASE("discrete de Rham: curl-curl kills gradients") {
  const Mesh m = generate_lshape_mesh(4);
  const DofMap d = DofMap::build(m);
  const SparseMatrix K = assemble_curl_curl(m, d).topLeftCorner(d.n_edge_dofs(), d.n_edge_dofs());
  const RealSparseMatrix G = gradient_matrix(m, d);
  const SparseMatrix KG = K * G.cast<Complex>();
  CHECK(KG.norm() <= 1e-12 * K.norm() * G.norm());
}

TEST_CASE("exact energies of affine fields") {
  const Mesh m = generate_cube_mesh(3);
  const DofMap d = DofMap::build(m);
  const SparseMatrix K = assemble_curl_curl(m, d);
  const SparseMatrix M = assemble_mass(m, MaterialField::constant(2.0), d);
  // u = ∇x: no curl, ∫ ε |u|² = 2
  const CVector gx = interpolate(m, d, [](const Point3&) { return Vec3(1, 0, 0); });
  CHECK(std::abs(quad_form(K, gx)) < 1e-12);
  CHECK(quad_form(M, gx).real() == doctest::Approx(2.0).epsilon(1e-12));
  // u = b × x: curl u = 2b
  const Vec3 b(0.3, -0.5, 0.7);
  const CVector r = interpolate(m, d, [&](const Point3& x) { return Vec3(b.cross(x)); });
  CHECK(quad_form(K, r).real() == doctest::Approx(4.0 * b.squaredNorm()).epsilon(1e-12));
  const SparseMatrix A = assemble_A(m, Wavenumber(1.5), MaterialField::constant(2.0), d);
  CHECK((A - (K - 2.25 * M)).norm() <= 1e-14 * A.norm());
}

TEST_CASE("S_h coupling annihilates surface gradients") {
  const Mesh m = generate_cube_mesh(2);
  const BlockSystem s = assemble_system(m, Wavenumber(1.0), MaterialField::constant(1.0), Formulation::Sh);
  const Index ne = s.dofs.n_edge_dofs(), nq = s.dofs.n_scalar();
  const SparseMatrix Bb = s.B.block(0, ne, ne, nq);
  const SparseMatrix Gt = gradient_matrix(m, s.dofs).cast<Complex>().transpose();
  const SparseMatrix prod = Gt * Bb;
  CHECK(prod.norm() <= 1e-14 * Bb.norm() * std::sqrt(double(Gt.nonZeros())));
  // interior rows of B vanish
  CHECK(s.B.block(0, 0, s.dofs.n_interior_edges(), s.dofs.n_total()).norm() == 0.0);
  CHECK(s.A.block(0, ne, ne, nq).norm() == 0.0);
}

TEST_CASE("S_h+ blocks") {
  const Mesh m = generate_cube_mesh(2);
  const BlockSystem s = assemble_system(m, Wavenumber(1.0), MaterialField::constant(1.0), Formulation::ShPlus);
  const Index ni = s.dofs.n_interior_edges(), nb = s.dofs.n_boundary_edges(), ne = s.dofs.n_edge_dofs();
  const Index nq = s.dofs.n_scalar();
  // trace mass is positive definite on boundary edges
  const Eigen::MatrixXd Mbb = Eigen::MatrixXd(s.B.block(ni, ni, nb, nb).real());
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Mbb).eigenvalues().minCoeff() > 0.0);
  // the scalar block is the (pinned) surface stiffness: SPD
  const Eigen::MatrixXd H = Eigen::MatrixXd(s.B.block(ne, ne, nq, nq).real());
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues().minCoeff() > 0.0);
  // C_b ψ for ψ = surface gradient pairing equals the trace mass applied to the gradient
  const RealSparseMatrix G = gradient_matrix(m, s.dofs);
  Eigen::MatrixXd Gq = Eigen::MatrixXd::Zero(nb, nq);
  for (Index k = 0; k < nq; ++k) Gq.col(k) = Eigen::MatrixXd(G).block(ni, s.dofs.scalar_vertex(k), nb, 1);
  const Eigen::MatrixXd Cb = Eigen::MatrixXd(s.B.block(ni, ne, nb, nq).real());
  CHECK((Cb - Mbb * Gq).norm() <= 1e-13 * Cb.norm());
}

TEST_CASE("source right-hand side") {
  const Mesh m = generate_cube_mesh(2);
  const DofMap d = DofMap::build(m);
  std::vector<std::string> warnings;
  const CVector normal = assemble_source_rhs(
      m, d, [&](Index f, const Point3&) { return CVec3(face_geometry(m, f).normal.cast<Complex>()); }, &warnings);
  CHECK(normal.norm() < 1e-13);
  CHECK_FALSE(warnings.empty());
  warnings.clear();
  const CVector t = assemble_source_rhs(
      m, d, [&](Index f, const Point3&) { return face_geometry(m, f).tangential(CVec3(1.0, 2.0, 0.5)); }, &warnings);
  CHECK(warnings.empty());
  CHECK(t.head(d.n_interior_edges()).norm() == 0.0);
  CHECK(t.norm() > 0.1);
}

TEST_CASE("formulation names") {
  CHECK(to_string(Formulation::Sh) == "sh");
  CHECK(formulation_from_string("shplus") == Formulation::ShPlus);
  CHECK_THROWS_AS(formulation_from_string("x"), AssemblyError);
}
