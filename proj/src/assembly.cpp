#include "stekloff/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <tuple>

#include <fmt/format.h>

namespace stekloff {

DofMap DofMap::build(const Mesh& mesh, PinRule pin) {
  const auto& bt = mesh.boundary();
  if (bt.boundary_vertex_ids.empty() || bt.boundary_edge_ids.empty())
    throw AssemblyError("mesh has an empty boundary");

  DofMap d;
  const auto ne = mesh.n_edges();
  d.edge_to_dof_.assign(ne, -1);
  d.dof_to_edge_.reserve(ne);
  for (std::size_t e = 0; e < ne; ++e)
    if (!mesh.is_boundary_edge(static_cast<Index>(e))) {
      d.edge_to_dof_[e] = static_cast<Index>(d.dof_to_edge_.size());
      d.dof_to_edge_.push_back(static_cast<Index>(e));
    }
  d.n_interior_ = static_cast<Index>(d.dof_to_edge_.size());
  for (Index e : bt.boundary_edge_ids) {
    d.edge_to_dof_[static_cast<std::size_t>(e)] = static_cast<Index>(d.dof_to_edge_.size());
    d.dof_to_edge_.push_back(e);
  }
  d.n_boundary_ = static_cast<Index>(bt.boundary_edge_ids.size());

  if (pin.vertex < 0) {
    d.pinned_ = bt.boundary_vertex_ids.front();
  } else {
    if (static_cast<std::size_t>(pin.vertex) >= mesh.n_vertices() || !mesh.is_boundary_vertex(pin.vertex))
      throw AssemblyError(fmt::format("pinned vertex {} is not a boundary vertex", pin.vertex));
    d.pinned_ = pin.vertex;
  }

  d.vertex_to_scalar_.assign(mesh.n_vertices(), -1);
  const Index base = d.n_edge_dofs();
  for (Index v : bt.boundary_vertex_ids) {
    if (v == d.pinned_) continue;
    d.vertex_to_scalar_[static_cast<std::size_t>(v)] = base + static_cast<Index>(d.scalar_to_vertex_.size());
    d.scalar_to_vertex_.push_back(v);
  }
  return d;
}

std::string to_string(Formulation f) { return f == Formulation::Sh ? "sh" : "shplus"; }

Formulation formulation_from_string(const std::string& s) {
  if (s == "sh") return Formulation::Sh;
  if (s == "shplus") return Formulation::ShPlus;
  throw AssemblyError("unknown formulation '" + s + "' (expected sh or shplus)");
}

SparseMatrix assemble_sorted(Index rows, Index cols, std::vector<Triplet> entries) {
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return std::make_tuple(a.col, a.row, a.value.real(), a.value.imag()) <
           std::make_tuple(b.col, b.row, b.value.real(), b.value.imag());
  });
  std::vector<Eigen::Triplet<Complex>> merged;
  merged.reserve(entries.size() / 2 + 1);
  for (std::size_t i = 0; i < entries.size();) {
    Complex sum = 0.0;
    std::size_t j = i;
    while (j < entries.size() && entries[j].row == entries[i].row && entries[j].col == entries[i].col)
      sum += entries[j++].value;
    merged.emplace_back(entries[i].row, entries[i].col, sum);
    i = j;
  }
  SparseMatrix m(rows, cols);
  m.setFromTriplets(merged.begin(), merged.end());
  m.makeCompressed();
  return m;
}

namespace {

enum class VolumeTerm { CurlCurl, Mass, Both };

SparseMatrix assemble_volume(const Mesh& mesh, const DofMap& dofs, const MaterialField* eps, double kappa2,
                             VolumeTerm term) {
  std::vector<Triplet> entries;
  entries.reserve(mesh.n_tets() * 36);
  const auto& et = mesh.edge_table();
  for (std::size_t t = 0; t < mesh.n_tets(); ++t) {
    const TetGeometry g = tet_geometry(mesh, static_cast<Index>(t));
    Mat6 local = Mat6::Zero();
    if (term != VolumeTerm::Mass) local += local_curl_curl(g);
    if (term == VolumeTerm::Mass) local += local_mass(g, *eps, mesh.tets()[t].region_tag);
    if (term == VolumeTerm::Both) local -= kappa2 * local_mass(g, *eps, mesh.tets()[t].region_tag);
    std::array<Index, 6> rows{};
    for (int k = 0; k < 6; ++k)
      rows[static_cast<std::size_t>(k)] = dofs.edge_dof(et.tet_edges[t][static_cast<std::size_t>(k)]);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        entries.push_back({rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)], local(i, j)});
  }
  return assemble_sorted(dofs.n_total(), dofs.n_total(), std::move(entries));
}

}  // namespace

SparseMatrix assemble_A(const Mesh& mesh, const Wavenumber& kappa, const MaterialField& eps, const DofMap& dofs) {
  return assemble_volume(mesh, dofs, &eps, kappa.squared(), VolumeTerm::Both);
}

SparseMatrix assemble_curl_curl(const Mesh& mesh, const DofMap& dofs) {
  return assemble_volume(mesh, dofs, nullptr, 0.0, VolumeTerm::CurlCurl);
}

SparseMatrix assemble_mass(const Mesh& mesh, const MaterialField& eps, const DofMap& dofs) {
  return assemble_volume(mesh, dofs, &eps, 0.0, VolumeTerm::Mass);
}

SparseMatrix assemble_B(const Mesh& mesh, const DofMap& dofs, Formulation formulation) {
  const auto& bt = mesh.boundary();
  std::vector<Triplet> entries;
  entries.reserve(bt.faces.size() * 27);
  for (std::size_t f = 0; f < bt.faces.size(); ++f) {
    const TriGeometry tri = face_geometry(mesh, static_cast<Index>(f));
    const TetGeometry tet = tet_geometry(mesh, bt.faces[f].tet);
    const BoundaryPairings pr = local_boundary_pairings(tri, tet);
    const Mat3 stiff = local_surface_stiffness(tri);

    std::array<Index, 3> erow{}, qcol{};
    for (int k = 0; k < 3; ++k) {
      erow[static_cast<std::size_t>(k)] = dofs.edge_dof(bt.face_edges[f][static_cast<std::size_t>(k)]);
      qcol[static_cast<std::size_t>(k)] = dofs.scalar_dof(tri.vertex_ids[static_cast<std::size_t>(k)]);
    }

    const Mat3& coupling = formulation == Formulation::Sh ? pr.curl : pr.grad;
    const double stiff_sign = formulation == Formulation::Sh ? -1.0 : 1.0;
    for (int i = 0; i < 3; ++i) {
      const Index e = erow[static_cast<std::size_t>(i)];
      for (int j = 0; j < 3; ++j) {
        const Index q = qcol[static_cast<std::size_t>(j)];
        if (q >= 0) {
          entries.push_back({e, q, coupling(i, j)});
          entries.push_back({q, e, coupling(i, j)});
        }
        if (formulation == Formulation::ShPlus)
          entries.push_back({e, erow[static_cast<std::size_t>(j)], pr.trace_mass(i, j)});
      }
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const Index qi = qcol[static_cast<std::size_t>(i)], qj = qcol[static_cast<std::size_t>(j)];
        if (qi >= 0 && qj >= 0) entries.push_back({qi, qj, stiff_sign * stiff(i, j)});
      }
  }
  return assemble_sorted(dofs.n_total(), dofs.n_total(), std::move(entries));
}

BlockSystem assemble_system(const Mesh& mesh, const Wavenumber& kappa, const MaterialField& eps,
                            Formulation formulation, PinRule pin) {
  BlockSystem s;
  s.dofs = DofMap::build(mesh, pin);
  s.formulation = formulation;
  s.A = assemble_A(mesh, kappa, eps, s.dofs);
  s.B = assemble_B(mesh, s.dofs, formulation);
  return s;
}

CVector assemble_source_rhs(const Mesh& mesh, const DofMap& dofs, const BoundaryFieldSampler& f,
                            std::vector<std::string>* warnings) {
  CVector rhs = CVector::Zero(dofs.n_edge_dofs());
  const auto& bt = mesh.boundary();
  const auto& quad = tri_rule_degree4();
  std::size_t projected = 0;
  for (std::size_t fi = 0; fi < bt.faces.size(); ++fi) {
    const TriGeometry tri = face_geometry(mesh, static_cast<Index>(fi));
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const auto& b = quad.points[q];
      CVec3 val = f(static_cast<Index>(fi), tri.map(b));
      const double normal_part = std::abs(val.dot(tri.normal.cast<Complex>()));
      if (normal_part > 1e-10 * std::max(1.0, val.norm())) {
        ++projected;
        val = tri.tangential(val);
      }
      const double w = quad.weights[q] * 2.0 * tri.area;
      for (int k = 0; k < 3; ++k) {
        const Vec3 wk = surface_whitney_eval(tri, k, b);
        // basis functions are real, so ⟨f, W_k⟩ needs no conjugation
        rhs[dofs.edge_dof(bt.face_edges[fi][static_cast<std::size_t>(k)])] +=
            w * val.cwiseProduct(wk.cast<Complex>()).sum();
      }
    }
  }
  if (projected && warnings)
    warnings->push_back(fmt::format("projected {} non-tangential boundary sample(s)", projected));
  return rhs;
}

RealSparseMatrix gradient_matrix(const Mesh& mesh, const DofMap& dofs) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(mesh.n_edges() * 2);
  const auto& edges = mesh.edge_table().edges;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Index row = dofs.edge_dof(static_cast<Index>(e));
    t.emplace_back(row, edges[e].low, -1.0);
    t.emplace_back(row, edges[e].high, 1.0);
  }
  RealSparseMatrix g(dofs.n_edge_dofs(), static_cast<Index>(mesh.n_vertices()));
  g.setFromTriplets(t.begin(), t.end());
  return g;
}

SparseMatrix block(const SparseMatrix& m, Index r0, Index nr, Index c0, Index nc) {
  return m.block(r0, c0, nr, nc);
}

double hermitian_defect(const SparseMatrix& m) {
  const SparseMatrix d = SparseMatrix(m - SparseMatrix(m.adjoint()));
  double scale = 0.0, defect = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  for (int k = 0; k < d.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(d, k); it; ++it) defect = std::max(defect, std::abs(it.value()));
  return scale > 0.0 ? defect / scale : defect;
}

void write_matrix_market(std::ostream& out, const SparseMatrix& m) {
  out << "%%MatrixMarket matrix coordinate complex general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      out << fmt::format("{} {} {:.17g} {:.17g}\n", it.row() + 1, it.col() + 1, it.value().real(),
                         it.value().imag());
}

}  // namespace stekloff
