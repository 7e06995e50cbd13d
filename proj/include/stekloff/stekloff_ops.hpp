#pragma once

#include <memory>
#include <stdexcept>
#include <vector>

#include "stekloff/assembly.hpp"
#include "stekloff/sparse_lu.hpp"

namespace stekloff {

class OperatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// κ² sits at (or numerically next to) a discrete Neumann eigenvalue, so the
/// source problem has no stable solution.
class NearSingularError : public OperatorError {
 public:
  NearSingularError(const std::string& what, double rcond) : OperatorError(what), rcond_(rcond) {}
  double rcond() const { return rcond_; }

 private:
  double rcond_;
};

/// Tangential boundary field, stored as a sum of a surface Whitney part (one
/// coefficient per boundary edge, in DofMap boundary-block order) and a
/// per-face constant tangent vector part. Either part may be empty (= zero).
struct BoundaryTangentField {
  enum class Representation { Whitney, PerFace, Mixed };

  CVector whitney;            // size n_boundary_edges or 0
  std::vector<CVec3> faces;  // size n_boundary_faces or 0

  Representation representation() const;
  bool has_whitney() const { return whitney.size() > 0; }
  bool has_faces() const { return !faces.empty(); }
};

/// P1 field over the boundary vertices (in ascending vertex order); the entry of
/// the pinned vertex is always zero.
struct BoundaryScalar {
  CVector values;
};

/// Surface machinery for one mesh: face geometry, the pinned P1 stiffness
/// factorization and the Whitney/P1 pairing matrices. Immutable after
/// construction, so concurrent readers are safe.
class SurfaceOperators {
 public:
  SurfaceOperators(const Mesh& mesh, const DofMap& dofs);
  ~SurfaceOperators();
  SurfaceOperators(SurfaceOperators&&) noexcept;
  SurfaceOperators& operator=(SurfaceOperators&&) noexcept;

  const Mesh& mesh() const { return *mesh_; }
  const DofMap& dofs() const { return *dofs_; }
  Index n_faces() const;
  Index n_boundary_vertices() const;
  Index n_boundary_edges() const { return dofs_->n_boundary_edges(); }

  /// Position of `vertex` in the boundary vertex list, or -1.
  Index boundary_slot(Index vertex) const;
  /// Position of the pinned vertex in the boundary vertex list.
  Index pinned_slot() const;

  /// Field value on face f at barycentric point b.
  CVec3 evaluate(const BoundaryTangentField& field, Index face, const Barycentric& b) const;
  /// ∫_Γ a · conj(b)
  Complex inner(const BoundaryTangentField& a, const BoundaryTangentField& b) const;
  double norm(const BoundaryTangentField& a) const;

  BoundaryTangentField zero_field() const;
  /// curl_Γ s as per-face constants.
  BoundaryTangentField surface_curl(const BoundaryScalar& s) const;
  /// ∇_Γ s as per-face constants.
  BoundaryTangentField surface_gradient(const BoundaryScalar& s) const;
  /// ∇_Γ s expanded in surface Whitney coefficients (exact).
  BoundaryTangentField gradient_whitney(const BoundaryScalar& s) const;
  /// Tangential trace of an edge coefficient vector (boundary block).
  BoundaryTangentField trace(const CVector& edge_coefficients) const;

  /// ⟨μ, curl_Γ φ_v⟩ and ⟨μ, ∇_Γ φ_v⟩ for every boundary vertex.
  CVector pair_with_curls(const BoundaryTangentField& mu) const;
  CVector pair_with_gradients(const BoundaryTangentField& mu) const;
  /// ⟨f, (W_i)_T⟩ for every boundary edge.
  CVector pair_with_whitney(const BoundaryTangentField& f) const;

  /// Solves the pinned surface stiffness system M_H1 q = rhs (rhs over boundary
  /// vertices; the pinned row is dropped).
  BoundaryScalar solve_surface(const CVector& rhs) const;

  /// S_h μ = curl_Γ q_h with ⟨curl_Γ q_h, curl_Γ ψ⟩ = ⟨μ, curl_Γ ψ⟩.
  BoundaryTangentField apply_Sh(const BoundaryTangentField& mu) const;
  /// S_h⁺ μ = μ + ∇_Γ p_h with ⟨∇_Γ p_h, ∇_Γ ψ⟩ = −⟨μ, ∇_Γ ψ⟩.
  BoundaryTangentField apply_Splus(const BoundaryTangentField& mu) const;

 private:
  struct Impl;
  const Mesh* mesh_;
  const DofMap* dofs_;
  std::unique_ptr<Impl> impl_;
};

/// Factorized source problem a(u, v) = ⟨f, v_T⟩ over all edge DOFs.
class SourceSolver {
 public:
  static constexpr double kRcondThreshold = 1e-12;

  /// Throws NearSingularError when the edge block of A is (nearly) singular.
  SourceSolver(const Mesh& mesh, const DofMap& dofs, const Wavenumber& kappa, const MaterialField& eps);

  /// Edge coefficients u_h (length n_edge_dofs).
  CVector solve(const SurfaceOperators& ops, const BoundaryTangentField& f) const;
  double rcond() const { return lu_.rcond(); }

 private:
  SparseLu lu_;
};

BoundaryTangentField apply_Sh(const SurfaceOperators& ops, const BoundaryTangentField& mu);
BoundaryTangentField apply_Splus(const SurfaceOperators& ops, const BoundaryTangentField& mu);
CVector solve_source(const SurfaceOperators& ops, const Wavenumber& kappa, const MaterialField& eps,
                     const BoundaryTangentField& f);
/// T_h f = S_h (u_h)_T.
BoundaryTangentField apply_Th(const SurfaceOperators& ops, const SourceSolver& solver, const BoundaryTangentField& f);
BoundaryTangentField apply_Th(const SurfaceOperators& ops, const Wavenumber& kappa, const MaterialField& eps,
                              const BoundaryTangentField& f);

/// a + c·b
BoundaryTangentField axpy(const BoundaryTangentField& a, Complex c, const BoundaryTangentField& b);

}  // namespace stekloff
