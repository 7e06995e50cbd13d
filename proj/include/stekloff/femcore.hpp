#pragma once

#include <array>
#include <complex>
#include <functional>
#include <map>
#include <stdexcept>

#include <Eigen/Core>

#include "stekloff/mesh.hpp"
#include "stekloff/quadrature.hpp"

namespace stekloff {

using Complex = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using Barycentric = std::array<double, 4>;

class FemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Positive wavenumber κ.
class Wavenumber {
 public:
  explicit Wavenumber(double kappa);
  double value() const { return kappa_; }
  double squared() const { return kappa_ * kappa_; }

 private:
  double kappa_;
};

/// Relative permittivity ε_r given per region tag, either as a constant or as a
/// smooth function with a declared lower bound.
class MaterialField {
 public:
  using Function = std::function<double(const Point3&)>;

  MaterialField() = default;
  static MaterialField constant(double value);

  /// Value used for region tags without an explicit entry.
  MaterialField& set_default(double value);
  MaterialField& set_region(int tag, double value);
  MaterialField& set_region(int tag, Function fn, double lower_bound);

  bool is_constant(int tag) const;
  double constant_value(int tag) const;
  double value(int tag, const Point3& x) const;
  /// α with ε_r >= α > 0 over all declared regions.
  double lower_bound() const;

 private:
  struct Entry {
    double value = 1.0;
    Function fn;
    double alpha = 1.0;
  };
  const Entry& entry(int tag) const;

  Entry default_{};
  std::map<int, Entry> regions_;
};

/// Affine tetrahedron with barycentric gradients. `signs[k]` orients local edge k
/// (±1); +1 everywhere means the local ordering kTetEdges.
struct TetGeometry {
  std::array<Point3, 4> points;
  std::array<Vec3, 4> grad;
  double volume = 0.0;
  std::array<int, 4> vertex_ids{-1, -1, -1, -1};
  std::array<int, 6> signs{1, 1, 1, 1, 1, 1};

  static TetGeometry from_points(const std::array<Point3, 4>& p);
  Point3 map(const Barycentric& b) const;
};

/// Flat triangle with unit normal from the counter-clockwise vertex order and
/// surface gradients of the P1 hats. `signs[k]` orients local edge kTriEdges[k].
struct TriGeometry {
  std::array<Point3, 3> points;
  std::array<Vec3, 3> grad;
  Vec3 normal;
  double area = 0.0;
  std::array<int, 3> vertex_ids{-1, -1, -1};
  std::array<int, 3> signs{1, 1, 1};

  static TriGeometry from_points(const std::array<Point3, 3>& p);
  Point3 map(const Barycentric& b) const;
  /// (ν×v)×ν
  Vec3 tangential(const Vec3& v) const { return v - normal * normal.dot(v); }
  CVec3 tangential(const CVec3& v) const;
};

/// Geometry of tet t with global edge orientation signs and vertex ids.
TetGeometry tet_geometry(const Mesh& mesh, Index t);
/// Geometry of boundary face f with global edge orientation signs and vertex ids.
TriGeometry face_geometry(const Mesh& mesh, Index f);

/// Lowest-order Nédélec (Whitney) function λa∇λb − λb∇λa of a tet edge.
Vec3 whitney_edge_eval(const TetGeometry& tet, int local_edge, const Barycentric& point);
/// Constant curl 2∇λa×∇λb of a Whitney function.
Vec3 whitney_edge_curl(const TetGeometry& tet, int local_edge);

/// Intrinsic surface Whitney function of a triangle edge.
Vec3 surface_whitney_eval(const TriGeometry& tri, int local_edge, const Barycentric& point);
/// curl_Γ φ = ∇_Γ φ × ν for the P1 hat of local vertex i.
Vec3 surface_curl(const TriGeometry& tri, int local_vertex);

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat3 = Eigen::Matrix3d;

/// ∫_K curl W_i · curl W_j, exact.
Mat6 local_curl_curl(const TetGeometry& tet);

/// ∫_K ε_r W_i · W_j. Closed form when ε_r is constant in `region`, otherwise `quad`.
Mat6 local_mass(const TetGeometry& tet, const MaterialField& eps, int region,
                const QuadratureRule& quad = tet_rule_degree4());

/// ∫_F ∇_Γ φ_i · ∇_Γ φ_j.
Mat3 local_surface_stiffness(const TriGeometry& tri);
/// ∫_F curl_Γ φ_i · curl_Γ φ_j; equal to local_surface_stiffness on flat faces.
Mat3 local_surface_stiffness_from_curls(const TriGeometry& tri);

struct BoundaryPairings {
  Mat3 curl;        // [i][j] = ∫_F curl_Γ φ_j · (W_i)_T
  Mat3 grad;        // [i][j] = ∫_F ∇_Γ φ_j · (W_i)_T
  Mat3 trace_mass;  // [i][j] = ∫_F (W_i)_T · (W_j)_T
};

/// Boundary pairings from the tangential traces of the volume Whitney functions
/// of `tet` whose edges lie in `tri`. Rows follow the triangle's local edges
/// (kTriEdges, oriented by tri.signs); columns follow the triangle's vertices.
/// Vertex ids of both geometries must be set.
BoundaryPairings local_boundary_pairings(const TriGeometry& tri, const TetGeometry& tet,
                                         const QuadratureRule& quad = tri_rule_degree4());

/// Barycentric coordinates on the tet of a point given by face barycentrics.
/// `face_to_tet[k]` is the tet-local index of face vertex k.
Barycentric face_to_tet_barycentric(const Barycentric& face_point, const std::array<int, 3>& face_to_tet);

/// Tet-local vertex indices of the triangle's vertices; throws FemError when the
/// triangle is not a face of the tet.
std::array<int, 3> match_face(const TriGeometry& tri, const TetGeometry& tet);

}  // namespace stekloff
