#include "invariants.hpp"

#include <algorithm>

#include "random_fields.hpp"
#include "stekloff/eigensolver.hpp"

namespace stekloff::testing {

namespace {

double rel(double a, double b) { return b > 0.0 ? a / b : a; }

}  // namespace

InvariantDefects measure_invariants(const Mesh& mesh, int trials, unsigned seed, double kappa) {
  InvariantDefects d;
  std::mt19937_64 rng(seed);
  const Wavenumber k(kappa);
  const MaterialField eps = MaterialField::constant(1.0);
  const BlockSystem sh = assemble_system(mesh, k, eps, Formulation::Sh);
  const BlockSystem sp = assemble_system(mesh, k, eps, Formulation::ShPlus);
  const SurfaceOperators ops(mesh, sh.dofs);
  const SourceSolver solver(mesh, sh.dofs, k, eps);

  for (int t = 0; t < trials; ++t) {
    const BoundaryTangentField mu = random_field(ops, rng);
    const BoundaryTangentField s = apply_Sh(ops, mu);
    d.sh_idempotence = std::max(d.sh_idempotence, rel(ops.norm(axpy(apply_Sh(ops, s), -1.0, s)), ops.norm(s)));
    const BoundaryTangentField p = apply_Splus(ops, mu);
    d.splus_idempotence = std::max(d.splus_idempotence, rel(ops.norm(axpy(apply_Splus(ops, p), -1.0, p)), ops.norm(p)));

    const BoundaryTangentField g = ops.surface_gradient(random_scalar(ops, rng));
    d.gradient_orthogonality =
        std::max(d.gradient_orthogonality, rel(std::abs(ops.inner(s, g)), ops.norm(s) * ops.norm(g)));
    const BoundaryTangentField gw = ops.gradient_whitney(random_scalar(ops, rng));
    d.gradient_kill = std::max({d.gradient_kill, rel(ops.norm(apply_Sh(ops, gw)), ops.norm(gw)),
                                rel(ops.norm(apply_Splus(ops, gw)), ops.norm(gw))});

    // T_h is symmetric with respect to ⟨·, S_h ·⟩ on surface-divergence-free data
    const BoundaryTangentField f1 = apply_Sh(ops, random_field(ops, rng));
    const BoundaryTangentField f2 = apply_Sh(ops, random_field(ops, rng));
    const Complex l = ops.inner(apply_Th(ops, solver, f1), apply_Sh(ops, f2));
    const Complex r = std::conj(ops.inner(apply_Th(ops, solver, f2), apply_Sh(ops, f1)));
    d.th_adjoint = std::max(d.th_adjoint, rel(std::abs(l - r), std::abs(l)));
    ++d.samples;
  }

  const Index ne = sh.dofs.n_edge_dofs();
  const SparseMatrix K = assemble_curl_curl(mesh, sh.dofs).topLeftCorner(ne, ne);
  const SparseMatrix M = assemble_mass(mesh, eps, sh.dofs).topLeftCorner(ne, ne);
  const SparseMatrix G = gradient_matrix(mesh, sh.dofs).cast<Complex>();
  d.de_rham = rel(SparseMatrix(K * G).norm(), K.norm() * G.norm());
  for (const auto* s : {&sh, &sp}) d.symmetry = std::max({d.symmetry, hermitian_defect(s->A), hermitian_defect(s->B)});

  EigenRequest req;
  req.nev = std::max(trials, 8);
  req.shift = -0.1;
  req.which = Which::SmallestMagnitude;
  for (const auto* s : {&sh, &sp}) {
    const EigenResult er = shift_invert_solve(*s, req);
    for (const auto& pr : er.pairs) {
      const CVector u = pr.x.head(ne);
      const CVector Mu = M * u;
      for (Index v = 0; v < G.cols(); ++v) {
        const CVector gv = G.col(v);
        d.z_membership = std::max(d.z_membership, rel(std::abs(gv.dot(Mu)), gv.norm() * Mu.norm()));
      }
      if (s == &sh) {
        // eigenpair ↔ source problem: u solves a(u, v) = ⟨−λ S_h u_T, v_T⟩ and T_h(S_h u_T) = −S_h u_T / λ
        const BoundaryTangentField shu = apply_Sh(ops, ops.trace(u));
        const CVector u2 = solver.solve(ops, axpy(ops.zero_field(), -pr.lambda, shu));
        d.loop_closure = std::max(d.loop_closure, rel((u2 - u).norm(), u.norm()));
        const BoundaryTangentField th = apply_Th(ops, solver, shu);
        d.th_eigen = std::max(d.th_eigen, rel(ops.norm(axpy(th, 1.0 / pr.lambda, shu)), ops.norm(shu)));
      }
      ++d.eigenpairs;
    }
  }
  return d;
}

}  // namespace stekloff::testing
