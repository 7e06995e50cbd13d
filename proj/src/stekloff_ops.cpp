#include "stekloff/stekloff_ops.hpp"

#include <cmath>

#include <Eigen/SparseCholesky>
#include <fmt/format.h>

namespace stekloff {

BoundaryTangentField::Representation BoundaryTangentField::representation() const {
  if (has_whitney() && has_faces()) return Representation::Mixed;
  return has_faces() ? Representation::PerFace : Representation::Whitney;
}

struct SurfaceOperators::Impl {
  std::vector<TriGeometry> tris;
  std::vector<std::array<Index, 3>> vertex_slot;  // per face vertex
  std::vector<std::array<Index, 3>> edge_slot;    // per face edge, boundary-block index
  std::vector<Index> slot_of_vertex;
  Index pinned_slot = -1;
  Index n_slots = 0;
  std::vector<Index> reduced;  // slot -> row of the pinned system, -1 for the pinned slot
  Eigen::SimplicialLDLT<RealSparseMatrix> stiffness;
};

SurfaceOperators::SurfaceOperators(const Mesh& mesh, const DofMap& dofs)
    : mesh_(&mesh), dofs_(&dofs), impl_(std::make_unique<Impl>()) {
  auto& d = *impl_;
  const auto& bt = mesh.boundary();
  d.slot_of_vertex.assign(mesh.n_vertices(), -1);
  for (std::size_t k = 0; k < bt.boundary_vertex_ids.size(); ++k)
    d.slot_of_vertex[static_cast<std::size_t>(bt.boundary_vertex_ids[k])] = static_cast<Index>(k);
  d.n_slots = static_cast<Index>(bt.boundary_vertex_ids.size());
  d.pinned_slot = d.slot_of_vertex[static_cast<std::size_t>(dofs.pinned_vertex())];

  d.reduced.assign(static_cast<std::size_t>(d.n_slots), -1);
  Index row = 0;
  for (Index s = 0; s < d.n_slots; ++s)
    if (s != d.pinned_slot) d.reduced[static_cast<std::size_t>(s)] = row++;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(bt.faces.size() * 9);
  for (std::size_t f = 0; f < bt.faces.size(); ++f) {
    d.tris.push_back(face_geometry(mesh, static_cast<Index>(f)));
    std::array<Index, 3> vs{}, es{};
    for (int k = 0; k < 3; ++k) {
      vs[static_cast<std::size_t>(k)] = d.slot_of_vertex[static_cast<std::size_t>(bt.faces[f].vertex_ids[static_cast<std::size_t>(k)])];
      es[static_cast<std::size_t>(k)] = dofs.edge_dof(bt.face_edges[f][static_cast<std::size_t>(k)]) - dofs.n_interior_edges();
    }
    d.vertex_slot.push_back(vs);
    d.edge_slot.push_back(es);
    const Mat3 s = local_surface_stiffness_from_curls(d.tris.back());
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const Index ri = d.reduced[static_cast<std::size_t>(vs[static_cast<std::size_t>(i)])];
        const Index rj = d.reduced[static_cast<std::size_t>(vs[static_cast<std::size_t>(j)])];
        if (ri >= 0 && rj >= 0) trip.emplace_back(ri, rj, s(i, j));
      }
  }
  RealSparseMatrix m(row, row);
  m.setFromTriplets(trip.begin(), trip.end());
  d.stiffness.compute(m);
  if (d.stiffness.info() != Eigen::Success) throw OperatorError("surface stiffness factorization failed");
}

SurfaceOperators::~SurfaceOperators() = default;
SurfaceOperators::SurfaceOperators(SurfaceOperators&&) noexcept = default;
SurfaceOperators& SurfaceOperators::operator=(SurfaceOperators&&) noexcept = default;

Index SurfaceOperators::n_faces() const { return static_cast<Index>(impl_->tris.size()); }
Index SurfaceOperators::n_boundary_vertices() const { return impl_->n_slots; }
Index SurfaceOperators::boundary_slot(Index vertex) const {
  return impl_->slot_of_vertex[static_cast<std::size_t>(vertex)];
}
Index SurfaceOperators::pinned_slot() const { return impl_->pinned_slot; }

namespace {

void check_shape(const SurfaceOperators& ops, const BoundaryTangentField& f) {
  if (f.has_whitney() && f.whitney.size() != ops.n_boundary_edges())
    throw OperatorError(fmt::format("Whitney part has {} coefficients, expected {}", f.whitney.size(),
                                    ops.n_boundary_edges()));
  if (f.has_faces() && static_cast<Index>(f.faces.size()) != ops.n_faces())
    throw OperatorError(fmt::format("per-face part has {} entries, expected {}", f.faces.size(), ops.n_faces()));
}

}  // namespace

CVec3 SurfaceOperators::evaluate(const BoundaryTangentField& field, Index face, const Barycentric& b) const {
  const auto& d = *impl_;
  CVec3 v = CVec3::Zero();
  if (field.has_whitney())
    for (int k = 0; k < 3; ++k)
      v += field.whitney[d.edge_slot[static_cast<std::size_t>(face)][static_cast<std::size_t>(k)]] *
           surface_whitney_eval(d.tris[static_cast<std::size_t>(face)], k, b).cast<Complex>();
  if (field.has_faces()) v += field.faces[static_cast<std::size_t>(face)];
  return v;
}

Complex SurfaceOperators::inner(const BoundaryTangentField& a, const BoundaryTangentField& b) const {
  check_shape(*this, a);
  check_shape(*this, b);
  const auto& quad = tri_rule_degree4();
  Complex sum = 0.0;
  for (Index f = 0; f < n_faces(); ++f) {
    const double scale = 2.0 * impl_->tris[static_cast<std::size_t>(f)].area;
    for (std::size_t q = 0; q < quad.size(); ++q)
      sum += quad.weights[q] * scale * evaluate(a, f, quad.points[q]).dot(evaluate(b, f, quad.points[q]));
  }
  // Eigen's dot conjugates its first argument
  return std::conj(sum);
}

double SurfaceOperators::norm(const BoundaryTangentField& a) const { return std::sqrt(std::abs(inner(a, a))); }

BoundaryTangentField SurfaceOperators::zero_field() const {
  BoundaryTangentField f;
  f.whitney = CVector::Zero(n_boundary_edges());
  return f;
}

BoundaryTangentField SurfaceOperators::surface_curl(const BoundaryScalar& s) const {
  if (s.values.size() != impl_->n_slots) throw OperatorError("boundary scalar has the wrong length");
  BoundaryTangentField out;
  out.faces.resize(impl_->tris.size(), CVec3::Zero());
  for (std::size_t f = 0; f < impl_->tris.size(); ++f)
    for (int j = 0; j < 3; ++j)
      out.faces[f] += s.values[impl_->vertex_slot[f][static_cast<std::size_t>(j)]] *
                      stekloff::surface_curl(impl_->tris[f], j).cast<Complex>();
  return out;
}

BoundaryTangentField SurfaceOperators::surface_gradient(const BoundaryScalar& s) const {
  if (s.values.size() != impl_->n_slots) throw OperatorError("boundary scalar has the wrong length");
  BoundaryTangentField out;
  out.faces.resize(impl_->tris.size(), CVec3::Zero());
  for (std::size_t f = 0; f < impl_->tris.size(); ++f)
    for (int j = 0; j < 3; ++j)
      out.faces[f] += s.values[impl_->vertex_slot[f][static_cast<std::size_t>(j)]] *
                      impl_->tris[f].grad[static_cast<std::size_t>(j)].cast<Complex>();
  return out;
}

BoundaryTangentField SurfaceOperators::gradient_whitney(const BoundaryScalar& s) const {
  if (s.values.size() != impl_->n_slots) throw OperatorError("boundary scalar has the wrong length");
  BoundaryTangentField out;
  out.whitney = CVector::Zero(n_boundary_edges());
  const auto& edges = mesh_->edge_table().edges;
  for (Index k = 0; k < n_boundary_edges(); ++k) {
    const Edge& e = edges[static_cast<std::size_t>(dofs_->dof_edge(dofs_->n_interior_edges() + k))];
    out.whitney[k] = s.values[boundary_slot(e.high)] - s.values[boundary_slot(e.low)];
  }
  return out;
}

BoundaryTangentField SurfaceOperators::trace(const CVector& u) const {
  if (u.size() < dofs_->n_edge_dofs()) throw OperatorError("edge coefficient vector is too short");
  BoundaryTangentField out;
  out.whitney = u.segment(dofs_->n_interior_edges(), n_boundary_edges());
  return out;
}

CVector SurfaceOperators::pair_with_curls(const BoundaryTangentField& mu) const {
  check_shape(*this, mu);
  const auto& quad = tri_rule_degree4();
  CVector out = CVector::Zero(impl_->n_slots);
  for (std::size_t f = 0; f < impl_->tris.size(); ++f) {
    const auto& tri = impl_->tris[f];
    CVec3 integral = CVec3::Zero();
    for (std::size_t q = 0; q < quad.size(); ++q)
      integral += quad.weights[q] * 2.0 * tri.area * evaluate(mu, static_cast<Index>(f), quad.points[q]);
    for (int j = 0; j < 3; ++j)
      out[impl_->vertex_slot[f][static_cast<std::size_t>(j)]] +=
          integral.dot(stekloff::surface_curl(tri, j).cast<Complex>());
  }
  return out.conjugate();
}

CVector SurfaceOperators::pair_with_gradients(const BoundaryTangentField& mu) const {
  check_shape(*this, mu);
  const auto& quad = tri_rule_degree4();
  CVector out = CVector::Zero(impl_->n_slots);
  for (std::size_t f = 0; f < impl_->tris.size(); ++f) {
    const auto& tri = impl_->tris[f];
    CVec3 integral = CVec3::Zero();
    for (std::size_t q = 0; q < quad.size(); ++q)
      integral += quad.weights[q] * 2.0 * tri.area * evaluate(mu, static_cast<Index>(f), quad.points[q]);
    for (int j = 0; j < 3; ++j)
      out[impl_->vertex_slot[f][static_cast<std::size_t>(j)]] +=
          integral.dot(tri.grad[static_cast<std::size_t>(j)].cast<Complex>());
  }
  return out.conjugate();
}

CVector SurfaceOperators::pair_with_whitney(const BoundaryTangentField& fld) const {
  check_shape(*this, fld);
  const auto& quad = tri_rule_degree4();
  CVector out = CVector::Zero(n_boundary_edges());
  for (std::size_t f = 0; f < impl_->tris.size(); ++f) {
    const auto& tri = impl_->tris[f];
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const CVec3 v = evaluate(fld, static_cast<Index>(f), quad.points[q]);
      const double w = quad.weights[q] * 2.0 * tri.area;
      for (int k = 0; k < 3; ++k)
        out[impl_->edge_slot[f][static_cast<std::size_t>(k)]] +=
            w * v.cwiseProduct(surface_whitney_eval(tri, k, quad.points[q]).cast<Complex>()).sum();
    }
  }
  return out;
}

BoundaryScalar SurfaceOperators::solve_surface(const CVector& rhs) const {
  const auto& d = *impl_;
  if (rhs.size() != d.n_slots) throw OperatorError("surface right-hand side has the wrong length");
  Eigen::VectorXd re(d.n_slots - 1), im(d.n_slots - 1);
  for (Index s = 0; s < d.n_slots; ++s) {
    const Index r = d.reduced[static_cast<std::size_t>(s)];
    if (r < 0) continue;
    re[r] = rhs[s].real();
    im[r] = rhs[s].imag();
  }
  const Eigen::VectorXd xr = d.stiffness.solve(re), xi = d.stiffness.solve(im);
  if (d.stiffness.info() != Eigen::Success) throw OperatorError("surface solve failed");
  BoundaryScalar out;
  out.values = CVector::Zero(d.n_slots);
  for (Index s = 0; s < d.n_slots; ++s) {
    const Index r = d.reduced[static_cast<std::size_t>(s)];
    if (r >= 0) out.values[s] = Complex(xr[r], xi[r]);
  }
  return out;
}

BoundaryTangentField SurfaceOperators::apply_Sh(const BoundaryTangentField& mu) const {
  return surface_curl(solve_surface(pair_with_curls(mu)));
}

BoundaryTangentField SurfaceOperators::apply_Splus(const BoundaryTangentField& mu) const {
  const BoundaryScalar p = solve_surface(-pair_with_gradients(mu));
  BoundaryTangentField out = mu;
  const BoundaryTangentField g = surface_gradient(p);
  if (out.has_faces())
    for (std::size_t f = 0; f < out.faces.size(); ++f) out.faces[f] += g.faces[f];
  else
    out.faces = g.faces;
  return out;
}

SourceSolver::SourceSolver(const Mesh& mesh, const DofMap& dofs, const Wavenumber& kappa, const MaterialField& eps)
    : lu_([&] {
        const SparseMatrix a = assemble_A(mesh, kappa, eps, dofs);
        const Index ne = dofs.n_edge_dofs();
        try {
          return SparseLu(block(a, 0, ne, 0, ne));
        } catch (const FactorizationError& e) {
          throw NearSingularError(
              fmt::format("source problem is singular: κ² = {} is a discrete Neumann eigenvalue ({})",
                          kappa.squared(), e.what()),
              0.0);
        }
      }()) {
  if (!(lu_.rcond() >= kRcondThreshold))
    throw NearSingularError(fmt::format("source problem is near-singular (rcond ≈ {:.3g}): κ² = {} is at or "
                                        "near a discrete Neumann eigenvalue",
                                        lu_.rcond(), kappa.squared()),
                            lu_.rcond());
}

CVector SourceSolver::solve(const SurfaceOperators& ops, const BoundaryTangentField& f) const {
  const DofMap& dofs = ops.dofs();
  CVector rhs = CVector::Zero(dofs.n_edge_dofs());
  rhs.segment(dofs.n_interior_edges(), dofs.n_boundary_edges()) = ops.pair_with_whitney(f);
  return lu_.solve(rhs);
}

BoundaryTangentField apply_Sh(const SurfaceOperators& ops, const BoundaryTangentField& mu) { return ops.apply_Sh(mu); }

BoundaryTangentField apply_Splus(const SurfaceOperators& ops, const BoundaryTangentField& mu) {
  return ops.apply_Splus(mu);
}

CVector solve_source(const SurfaceOperators& ops, const Wavenumber& kappa, const MaterialField& eps,
                     const BoundaryTangentField& f) {
  return SourceSolver(ops.mesh(), ops.dofs(), kappa, eps).solve(ops, f);
}

BoundaryTangentField apply_Th(const SurfaceOperators& ops, const SourceSolver& solver, const BoundaryTangentField& f) {
  return ops.apply_Sh(ops.trace(solver.solve(ops, f)));
}

BoundaryTangentField apply_Th(const SurfaceOperators& ops, const Wavenumber& kappa, const MaterialField& eps,
                              const BoundaryTangentField& f) {
  return apply_Th(ops, SourceSolver(ops.mesh(), ops.dofs(), kappa, eps), f);
}

BoundaryTangentField axpy(const BoundaryTangentField& a, Complex c, const BoundaryTangentField& b) {
  BoundaryTangentField out = a;
  if (b.has_whitney()) {
    if (out.has_whitney()) out.whitney += c * b.whitney;
    else out.whitney = c * b.whitney;
  }
  if (b.has_faces()) {
    if (!out.has_faces()) out.faces.assign(b.faces.size(), CVec3::Zero());
    for (std::size_t f = 0; f < b.faces.size(); ++f) out.faces[f] += c * b.faces[f];
  }
  return out;
}

}  // namespace stekloff
