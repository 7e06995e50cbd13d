#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace stekloff {

using Index = int;
using Point3 = Eigen::Vector3d;

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Tetrahedron {
  std::array<Index, 4> vertex_ids{};
  int region_tag = 1;
};

/// Local edge k of a tetrahedron joins local vertices kTetEdges[k][0] -> kTetEdges[k][1].
inline constexpr std::array<std::array<int, 2>, 6> kTetEdges{
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

/// Local face k is the face opposite local vertex k.
inline constexpr std::array<std::array<int, 3>, 4> kTetFaces{
    {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};

/// Local edge k of a triangle joins local vertices kTriEdges[k][0] -> kTriEdges[k][1].
inline constexpr std::array<std::array<int, 2>, 3> kTriEdges{{{0, 1}, {0, 2}, {1, 2}}};

struct Edge {
  Index low = 0;
  Index high = 0;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Global edges oriented from the lower to the higher vertex index.
struct EdgeTable {
  std::vector<Edge> edges;
  std::vector<std::array<Index, 6>> tet_edges;
  // +1 iff the local edge direction runs low -> high.
  std::vector<std::array<std::int8_t, 6>> tet_signs;

  Index find(Index a, Index b) const;  // -1 if absent
};

struct BoundaryFace {
  std::array<Index, 3> vertex_ids{};  // counter-clockwise seen from outside
  Index tet = -1;
  int local_face = -1;
  int tag = 0;
};

struct BoundaryTriangulation {
  std::vector<BoundaryFace> faces;
  std::vector<std::array<Index, 3>> face_edges;  // global edge per kTriEdges slot
  std::vector<std::array<std::int8_t, 3>> face_signs;
  std::vector<Index> boundary_edge_ids;    // ascending
  std::vector<Index> boundary_vertex_ids;  // ascending
};

struct MeshStats {
  double h = 0.0;
  std::size_t n_boundary_edges = 0;
  std::size_t n_edges = 0;
  std::size_t n_vertices = 0;
  std::size_t n_tets = 0;
  std::size_t n_boundary_faces = 0;
  std::size_t n_boundary_vertices = 0;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
  bool mentions(const std::string& needle) const;
};

/// Tetrahedral mesh with derived edge and boundary topology. Immutable once built.
class Mesh {
 public:
  Mesh() = default;

  /// Builds edge and face topology from raw cells. Performs no validation, so
  /// malformed input still yields an object that validate_mesh can inspect.
  static Mesh from_cells(std::vector<Point3> points, std::vector<Tetrahedron> tets);

  const std::vector<Point3>& points() const { return points_; }
  const std::vector<Tetrahedron>& tets() const { return tets_; }
  const EdgeTable& edge_table() const { return edges_; }
  const BoundaryTriangulation& boundary() const { return boundary_; }

  std::size_t n_vertices() const { return points_.size(); }
  std::size_t n_edges() const { return edges_.edges.size(); }
  std::size_t n_faces() const { return n_faces_; }
  std::size_t n_tets() const { return tets_.size(); }
  std::size_t max_face_multiplicity() const { return max_face_multiplicity_; }

  bool is_boundary_edge(Index e) const { return edge_on_boundary_[static_cast<std::size_t>(e)]; }
  bool is_boundary_vertex(Index v) const { return vertex_on_boundary_[static_cast<std::size_t>(v)]; }

  std::array<Point3, 4> tet_points(Index t) const;
  std::array<Point3, 3> face_points(Index f) const;
  double signed_volume(Index t) const;

  long volume_euler_characteristic() const;
  long boundary_euler_characteristic() const;

  void set_boundary_tag(Index f, int tag) { boundary_.faces[static_cast<std::size_t>(f)].tag = tag; }

 private:
  std::vector<Point3> points_;
  std::vector<Tetrahedron> tets_;
  EdgeTable edges_;
  BoundaryTriangulation boundary_;
  std::vector<bool> edge_on_boundary_;
  std::vector<bool> vertex_on_boundary_;
  std::size_t n_faces_ = 0;
  std::size_t max_face_multiplicity_ = 0;
};

double signed_volume(const std::array<Point3, 4>& p);

/// Swaps two vertices of every negatively oriented tet. Throws MeshError on a
/// degenerate tet (|volume| below a relative tolerance) or a repeated vertex.
void canonicalize_orientation(const std::vector<Point3>& points, std::vector<Tetrahedron>& tets);

ValidationReport validate_mesh(const Mesh& mesh);

/// Throws MeshError listing every violation.
void require_valid(const Mesh& mesh);

MeshStats mesh_stats(const Mesh& mesh);

/// Unit cube split into n^3 subcubes, each Kuhn-subdivided into 6 tets.
Mesh generate_cube_mesh(int n);

/// Unit cube with the octant {x,y,z >= 1/2} removed. n must be even.
Mesh generate_lshape_mesh(int n);

}  // namespace stekloff
