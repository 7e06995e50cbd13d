#include "stekloff/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

namespace stekloff {

namespace {

struct FaceRecord {
  std::array<Index, 3> key;
  Index tet;
  int local_face;
};

double max_edge_length(const std::array<Point3, 4>& p) {
  double m = 0.0;
  for (const auto& e : kTetEdges) m = std::max(m, (p[e[1]] - p[e[0]]).norm());
  return m;
}

bool is_degenerate(const std::array<Point3, 4>& p) {
  const double len = max_edge_length(p);
  return std::abs(signed_volume(p)) <= 1e-12 * len * len * len;
}

}  // namespace

Index EdgeTable::find(Index a, Index b) const {
  const Edge key{std::min(a, b), std::max(a, b)};
  auto it = std::lower_bound(edges.begin(), edges.end(), key);
  if (it == edges.end() || *it != key) return -1;
  return static_cast<Index>(it - edges.begin());
}

bool ValidationReport::mentions(const std::string& needle) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const std::string& v) { return v.find(needle) != std::string::npos; });
}

double signed_volume(const std::array<Point3, 4>& p) {
  return (p[1] - p[0]).dot((p[2] - p[0]).cross(p[3] - p[0])) / 6.0;
}

Mesh Mesh::from_cells(std::vector<Point3> points, std::vector<Tetrahedron> tets) {
  Mesh m;
  m.points_ = std::move(points);
  m.tets_ = std::move(tets);
  const auto nt = m.tets_.size();

  auto& et = m.edges_;
  et.edges.reserve(nt * 6);
  for (const auto& t : m.tets_) {
    for (const auto& le : kTetEdges) {
      const Index a = t.vertex_ids[le[0]], b = t.vertex_ids[le[1]];
      et.edges.push_back({std::min(a, b), std::max(a, b)});
    }
  }
  std::sort(et.edges.begin(), et.edges.end());
  et.edges.erase(std::unique(et.edges.begin(), et.edges.end()), et.edges.end());

  et.tet_edges.resize(nt);
  et.tet_signs.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& v = m.tets_[t].vertex_ids;
    for (int k = 0; k < 6; ++k) {
      const Index a = v[kTetEdges[k][0]], b = v[kTetEdges[k][1]];
      et.tet_edges[t][k] = et.find(a, b);
      et.tet_signs[t][k] = a < b ? 1 : -1;
    }
  }

  std::vector<FaceRecord> faces;
  faces.reserve(nt * 4);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& v = m.tets_[t].vertex_ids;
    for (int k = 0; k < 4; ++k) {
      std::array<Index, 3> key{v[kTetFaces[k][0]], v[kTetFaces[k][1]], v[kTetFaces[k][2]]};
      std::sort(key.begin(), key.end());
      faces.push_back({key, static_cast<Index>(t), k});
    }
  }
  std::sort(faces.begin(), faces.end(), [](const FaceRecord& a, const FaceRecord& b) {
    return std::tie(a.key, a.tet, a.local_face) < std::tie(b.key, b.tet, b.local_face);
  });

  auto& bt = m.boundary_;
  for (std::size_t i = 0; i < faces.size();) {
    std::size_t j = i;
    while (j < faces.size() && faces[j].key == faces[i].key) ++j;
    const std::size_t mult = j - i;
    ++m.n_faces_;
    m.max_face_multiplicity_ = std::max(m.max_face_multiplicity_, mult);
    if (mult == 1) {
      const auto& rec = faces[i];
      const auto& v = m.tets_[static_cast<std::size_t>(rec.tet)].vertex_ids;
      std::array<Index, 3> tri{v[kTetFaces[rec.local_face][0]], v[kTetFaces[rec.local_face][1]],
                               v[kTetFaces[rec.local_face][2]]};
      const Point3& opp = m.points_[static_cast<std::size_t>(v[rec.local_face])];
      const Point3& pa = m.points_[static_cast<std::size_t>(tri[0])];
      const Point3& pb = m.points_[static_cast<std::size_t>(tri[1])];
      const Point3& pc = m.points_[static_cast<std::size_t>(tri[2])];
      if ((pb - pa).cross(pc - pa).dot(pa - opp) < 0.0) std::swap(tri[1], tri[2]);
      bt.faces.push_back({tri, rec.tet, rec.local_face, 0});
    }
    i = j;
  }

  m.edge_on_boundary_.assign(et.edges.size(), false);
  m.vertex_on_boundary_.assign(m.points_.size(), false);
  bt.face_edges.resize(bt.faces.size());
  bt.face_signs.resize(bt.faces.size());
  for (std::size_t f = 0; f < bt.faces.size(); ++f) {
    const auto& v = bt.faces[f].vertex_ids;
    for (int k = 0; k < 3; ++k) {
      const Index a = v[kTriEdges[k][0]], b = v[kTriEdges[k][1]];
      const Index e = et.find(a, b);
      bt.face_edges[f][k] = e;
      bt.face_signs[f][k] = a < b ? 1 : -1;
      if (e >= 0) m.edge_on_boundary_[static_cast<std::size_t>(e)] = true;
      m.vertex_on_boundary_[static_cast<std::size_t>(v[k])] = true;
    }
  }
  for (std::size_t e = 0; e < et.edges.size(); ++e)
    if (m.edge_on_boundary_[e]) bt.boundary_edge_ids.push_back(static_cast<Index>(e));
  for (std::size_t v = 0; v < m.points_.size(); ++v)
    if (m.vertex_on_boundary_[v]) bt.boundary_vertex_ids.push_back(static_cast<Index>(v));
  return m;
}

std::array<Point3, 4> Mesh::tet_points(Index t) const {
  const auto& v = tets_[static_cast<std::size_t>(t)].vertex_ids;
  return {points_[static_cast<std::size_t>(v[0])], points_[static_cast<std::size_t>(v[1])],
          points_[static_cast<std::size_t>(v[2])], points_[static_cast<std::size_t>(v[3])]};
}

std::array<Point3, 3> Mesh::face_points(Index f) const {
  const auto& v = boundary_.faces[static_cast<std::size_t>(f)].vertex_ids;
  return {points_[static_cast<std::size_t>(v[0])], points_[static_cast<std::size_t>(v[1])],
          points_[static_cast<std::size_t>(v[2])]};
}

double Mesh::signed_volume(Index t) const { return stekloff::signed_volume(tet_points(t)); }

long Mesh::volume_euler_characteristic() const {
  return static_cast<long>(n_vertices()) - static_cast<long>(n_edges()) +
         static_cast<long>(n_faces()) - static_cast<long>(n_tets());
}

long Mesh::boundary_euler_characteristic() const {
  return static_cast<long>(boundary_.boundary_vertex_ids.size()) -
         static_cast<long>(boundary_.boundary_edge_ids.size()) +
         static_cast<long>(boundary_.faces.size());
}

void canonicalize_orientation(const std::vector<Point3>& points, std::vector<Tetrahedron>& tets) {
  for (std::size_t t = 0; t < tets.size(); ++t) {
    auto& v = tets[t].vertex_ids;
    std::array<Index, 4> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw MeshError("tet " + std::to_string(t) + " has a repeated vertex");
    std::array<Point3, 4> p;
    for (int k = 0; k < 4; ++k) {
      if (v[k] < 0 || static_cast<std::size_t>(v[k]) >= points.size())
        throw MeshError("tet " + std::to_string(t) + " references a missing vertex");
      p[k] = points[static_cast<std::size_t>(v[k])];
    }
    if (is_degenerate(p)) throw MeshError("tet " + std::to_string(t) + " is degenerate (zero volume)");
    if (signed_volume(p) < 0.0) std::swap(v[2], v[3]);
  }
}

ValidationReport validate_mesh(const Mesh& mesh) {
  ValidationReport r;
  auto add = [&](std::string s) { r.violations.push_back(std::move(s)); };
  const auto& pts = mesh.points();

  for (const auto& p : pts)
    if (!p.allFinite()) {
      add("non-finite vertex coordinate");
      break;
    }

  if (mesh.n_tets() == 0) add("mesh has no tetrahedra");

  std::size_t bad_volume = 0, repeated = 0;
  for (std::size_t t = 0; t < mesh.n_tets(); ++t) {
    auto v = mesh.tets()[t].vertex_ids;
    std::sort(v.begin(), v.end());
    if (std::adjacent_find(v.begin(), v.end()) != v.end()) {
      ++repeated;
      continue;
    }
    const auto p = mesh.tet_points(static_cast<Index>(t));
    if (is_degenerate(p) || signed_volume(p) <= 0.0) ++bad_volume;
  }
  if (repeated) add(std::to_string(repeated) + " tet(s) with repeated vertex ids");
  if (bad_volume) add(std::to_string(bad_volume) + " tet(s) with non-positive volume");

  if (mesh.max_face_multiplicity() > 2) add("face shared by >2 tets");

  const auto& et = mesh.edge_table();
  bool edge_ok = true;
  for (std::size_t i = 1; i < et.edges.size(); ++i)
    if (!(et.edges[i - 1] < et.edges[i])) edge_ok = false;
  for (const auto& e : et.edges)
    if (e.low >= e.high) edge_ok = false;
  for (std::size_t t = 0; t < mesh.n_tets() && edge_ok; ++t) {
    const auto& v = mesh.tets()[t].vertex_ids;
    for (int k = 0; k < 6; ++k) {
      const Index a = v[kTetEdges[k][0]], b = v[kTetEdges[k][1]];
      const Index id = et.tet_edges[t][k];
      const int s = et.tet_signs[t][k];
      if (id < 0 || (s != 1 && s != -1)) {
        edge_ok = false;
        break;
      }
      const auto& e = et.edges[static_cast<std::size_t>(id)];
      const Index from = s > 0 ? a : b, to = s > 0 ? b : a;
      if (e.low != from || e.high != to) edge_ok = false;
    }
  }
  if (!edge_ok) add("edge table inconsistent with tet connectivity");

  const auto& bt = mesh.boundary();
  if (bt.faces.empty()) add("empty boundary");

  // Each boundary edge must be used by exactly two boundary faces, traversed in
  // opposite directions (closed, consistently oriented surface).
  std::vector<int> use(mesh.n_edges(), 0), dir(mesh.n_edges(), 0);
  for (std::size_t f = 0; f < bt.faces.size(); ++f) {
    for (int k = 0; k < 3; ++k) {
      const Index e = bt.face_edges[f][k];
      if (e < 0) continue;
      ++use[static_cast<std::size_t>(e)];
      // counter-clockwise walk 0->1->2->0 runs local edge {0,2} backwards
      dir[static_cast<std::size_t>(e)] += (k == 1 ? -1 : 1) * bt.face_signs[f][k];
    }
  }
  std::size_t open_edges = 0, misoriented = 0;
  for (Index e : bt.boundary_edge_ids) {
    if (use[static_cast<std::size_t>(e)] != 2) ++open_edges;
    else if (dir[static_cast<std::size_t>(e)] != 0) ++misoriented;
  }
  if (open_edges)
    add(std::to_string(open_edges) + " boundary edge(s) not shared by exactly 2 boundary faces");
  if (misoriented) add(std::to_string(misoriented) + " boundary edge(s) with inconsistent face orientation");

  std::size_t inward = 0;
  for (std::size_t f = 0; f < bt.faces.size(); ++f) {
    const auto p = mesh.face_points(static_cast<Index>(f));
    const auto tp = mesh.tet_points(bt.faces[f].tet);
    const Point3 tc = (tp[0] + tp[1] + tp[2] + tp[3]) / 4.0;
    const Point3 fc = (p[0] + p[1] + p[2]) / 3.0;
    if ((p[1] - p[0]).cross(p[2] - p[0]).dot(fc - tc) <= 0.0) ++inward;
  }
  if (inward) add(std::to_string(inward) + " boundary face(s) with inward normal");

  const long chi = mesh.volume_euler_characteristic();
  if (chi != 1) add("volume Euler characteristic V-E+F-T = " + std::to_string(chi) + " (expected 1)");
  const long chi_b = mesh.boundary_euler_characteristic();
  if (chi_b != 2) {
    std::string msg = "boundary Euler characteristic Vb-Eb+Fb = " + std::to_string(chi_b) + " (expected 2)";
    if (chi_b > 2) msg += ": boundary not closed around cavity (more than one component)";
    add(msg);
  }
  return r;
}

void require_valid(const Mesh& mesh) {
  const auto report = validate_mesh(mesh);
  if (report.ok()) return;
  std::ostringstream os;
  os << "invalid mesh:";
  for (const auto& v : report.violations) os << "\n  " << v;
  throw MeshError(os.str());
}

MeshStats mesh_stats(const Mesh& mesh) {
  MeshStats s;
  for (std::size_t t = 0; t < mesh.n_tets(); ++t) {
    const auto p = mesh.tet_points(static_cast<Index>(t));
    s.h = std::max(s.h, max_edge_length(p));
  }
  s.n_boundary_edges = mesh.boundary().boundary_edge_ids.size();
  s.n_edges = mesh.n_edges();
  s.n_vertices = mesh.n_vertices();
  s.n_tets = mesh.n_tets();
  s.n_boundary_faces = mesh.boundary().faces.size();
  s.n_boundary_vertices = mesh.boundary().boundary_vertex_ids.size();
  return s;
}

namespace {

template <class Keep>
Mesh kuhn_grid(int n, Keep keep_cell) {
  const int np = n + 1;
  auto vid = [np](int i, int j, int k) { return static_cast<Index>((k * np + j) * np + i); };

  static constexpr std::array<std::array<int, 3>, 6> kAxisOrders{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};

  std::vector<Point3> grid(static_cast<std::size_t>(np) * np * np);
  for (int k = 0; k < np; ++k)
    for (int j = 0; j < np; ++j)
      for (int i = 0; i < np; ++i)
        grid[static_cast<std::size_t>(vid(i, j, k))] =
            Point3(static_cast<double>(i) / n, static_cast<double>(j) / n, static_cast<double>(k) / n);

  std::vector<Tetrahedron> tets;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        if (!keep_cell(i, j, k)) continue;
        for (const auto& order : kAxisOrders) {
          std::array<int, 3> c{i, j, k};
          Tetrahedron t;
          t.vertex_ids[0] = vid(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[static_cast<std::size_t>(order[static_cast<std::size_t>(s)])];
            t.vertex_ids[static_cast<std::size_t>(s) + 1] = vid(c[0], c[1], c[2]);
          }
          tets.push_back(t);
        }
      }

  // Compact away grid vertices not touched by any kept cell.
  std::vector<Index> remap(grid.size(), -1);
  for (const auto& t : tets)
    for (Index v : t.vertex_ids) remap[static_cast<std::size_t>(v)] = 0;
  std::vector<Point3> points;
  for (std::size_t v = 0; v < grid.size(); ++v)
    if (remap[v] == 0) {
      remap[v] = static_cast<Index>(points.size());
      points.push_back(grid[v]);
    }
  for (auto& t : tets)
    for (Index& v : t.vertex_ids) v = remap[static_cast<std::size_t>(v)];

  canonicalize_orientation(points, tets);
  Mesh mesh = Mesh::from_cells(std::move(points), std::move(tets));
  require_valid(mesh);
  return mesh;
}

}  // namespace

Mesh generate_cube_mesh(int n) {
  if (n < 1) throw MeshError("cube mesh needs n >= 1");
  return kuhn_grid(n, [](int, int, int) { return true; });
}

Mesh generate_lshape_mesh(int n) {
  if (n < 2 || n % 2 != 0) throw MeshError("L-shaped mesh needs a positive even n");
  const int half = n / 2;
  return kuhn_grid(n, [half](int i, int j, int k) { return !(i >= half && j >= half && k >= half); });
}

}  // namespace stekloff
