#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "stekloff/femcore.hpp"
#include "stekloff/mesh.hpp"

namespace stekloff {

using SparseMatrix = Eigen::SparseMatrix<Complex>;
using RealSparseMatrix = Eigen::SparseMatrix<double>;
using CVector = Eigen::VectorXcd;

class AssemblyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Which boundary vertex carries the zero constraint that realizes the quotient
/// by constants. A negative vertex selects the lowest-index boundary vertex.
struct PinRule {
  Index vertex = -1;
};

/// Unknown ordering (u_i, u_b, q): interior edges, boundary edges, then the
/// unpinned boundary vertices, each block in ascending mesh index.
class DofMap {
 public:
  static DofMap build(const Mesh& mesh, PinRule pin = {});

  Index n_interior_edges() const { return n_interior_; }
  Index n_boundary_edges() const { return n_boundary_; }
  Index n_edge_dofs() const { return n_interior_ + n_boundary_; }
  Index n_scalar() const { return static_cast<Index>(scalar_to_vertex_.size()); }
  Index n_total() const { return n_edge_dofs() + n_scalar(); }

  /// Edge DOF in [0, n_edge_dofs).
  Index edge_dof(Index edge) const { return edge_to_dof_[static_cast<std::size_t>(edge)]; }
  Index dof_edge(Index dof) const { return dof_to_edge_[static_cast<std::size_t>(dof)]; }
  bool is_boundary_dof(Index dof) const { return dof >= n_interior_ && dof < n_edge_dofs(); }

  /// Global unknown index of the scalar on `vertex`, or -1 for the pinned vertex
  /// and interior vertices.
  Index scalar_dof(Index vertex) const { return vertex_to_scalar_[static_cast<std::size_t>(vertex)]; }
  Index scalar_vertex(Index k) const { return scalar_to_vertex_[static_cast<std::size_t>(k)]; }
  Index pinned_vertex() const { return pinned_; }

 private:
  Index n_interior_ = 0;
  Index n_boundary_ = 0;
  Index pinned_ = -1;
  std::vector<Index> edge_to_dof_, dof_to_edge_;
  std::vector<Index> vertex_to_scalar_, scalar_to_vertex_;
};

enum class Formulation { Sh, ShPlus };

std::string to_string(Formulation f);
Formulation formulation_from_string(const std::string& s);

/// Sparse pencil A x = −λ B x over (u_i, u_b, q).
struct BlockSystem {
  SparseMatrix A;
  SparseMatrix B;
  Formulation formulation = Formulation::Sh;
  DofMap dofs;
};

struct Triplet {
  Index row;
  Index col;
  Complex value;
};

/// Builds a compressed matrix, summing duplicates in a fixed order (entries
/// sorted by coordinate, then by value) so the result does not depend on the
/// order in which contributions were generated.
SparseMatrix assemble_sorted(Index rows, Index cols, std::vector<Triplet> entries);

/// Curl-curl minus κ² ε-mass on the edge block; scalar rows and columns are empty.
SparseMatrix assemble_A(const Mesh& mesh, const Wavenumber& kappa, const MaterialField& eps, const DofMap& dofs);

/// Edge-block curl-curl matrix alone (n_total × n_total layout).
SparseMatrix assemble_curl_curl(const Mesh& mesh, const DofMap& dofs);

/// Edge-block ε-mass alone (n_total × n_total layout).
SparseMatrix assemble_mass(const Mesh& mesh, const MaterialField& eps, const DofMap& dofs);

/// Right-hand pencil matrix for either formulation.
SparseMatrix assemble_B(const Mesh& mesh, const DofMap& dofs, Formulation formulation);

BlockSystem assemble_system(const Mesh& mesh, const Wavenumber& kappa, const MaterialField& eps,
                            Formulation formulation, PinRule pin = {});

/// Tangential boundary data f(face, x); only the tangential part is used.
using BoundaryFieldSampler = std::function<CVec3(Index face, const Point3& x)>;

/// ∫_Γ f · (W_i)_T for every edge DOF (zero on interior edges). Non-tangential
/// samples are projected and reported through `warnings`.
CVector assemble_source_rhs(const Mesh& mesh, const DofMap& dofs, const BoundaryFieldSampler& f,
                            std::vector<std::string>* warnings = nullptr);

/// Vertex-to-edge incidence over edge DOFs: column v holds the Whitney
/// coefficients of ∇φ_v (+1 at the high end, −1 at the low end).
RealSparseMatrix gradient_matrix(const Mesh& mesh, const DofMap& dofs);

/// Extracts a diagonal block [r0, r0+nr) × [c0, c0+nc).
SparseMatrix block(const SparseMatrix& m, Index r0, Index nr, Index c0, Index nc);

/// Largest |m_ij − conj(m_ji)| relative to the largest |m_ij|.
double hermitian_defect(const SparseMatrix& m);

void write_matrix_market(std::ostream& out, const SparseMatrix& m);

}  // namespace stekloff
