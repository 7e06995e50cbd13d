#include "stekloff/femcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

namespace stekloff {

Wavenumber::Wavenumber(double kappa) : kappa_(kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw FemError("wavenumber must be real and positive");
}

MaterialField MaterialField::constant(double value) {
  MaterialField m;
  m.set_default(value);
  return m;
}

MaterialField& MaterialField::set_default(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) throw FemError("permittivity must be positive");
  default_ = Entry{value, {}, value};
  return *this;
}

MaterialField& MaterialField::set_region(int tag, double value) {
  if (!(value > 0.0) || !std::isfinite(value)) throw FemError("permittivity must be positive");
  regions_[tag] = Entry{value, {}, value};
  return *this;
}

MaterialField& MaterialField::set_region(int tag, Function fn, double lower_bound) {
  if (!fn) throw FemError("empty permittivity function");
  if (!(lower_bound > 0.0)) throw FemError("permittivity lower bound must be positive");
  regions_[tag] = Entry{0.0, std::move(fn), lower_bound};
  return *this;
}

const MaterialField::Entry& MaterialField::entry(int tag) const {
  auto it = regions_.find(tag);
  return it == regions_.end() ? default_ : it->second;
}

bool MaterialField::is_constant(int tag) const { return !entry(tag).fn; }

double MaterialField::constant_value(int tag) const {
  const auto& e = entry(tag);
  if (e.fn) throw FemError("region " + std::to_string(tag) + " has a variable permittivity");
  return e.value;
}

double MaterialField::value(int tag, const Point3& x) const {
  const auto& e = entry(tag);
  return e.fn ? e.fn(x) : e.value;
}

double MaterialField::lower_bound() const {
  double a = default_.alpha;
  for (const auto& [tag, e] : regions_) a = std::min(a, e.alpha);
  return a;
}

TetGeometry TetGeometry::from_points(const std::array<Point3, 4>& p) {
  TetGeometry g;
  g.points = p;
  Eigen::Matrix3d jac;
  jac.col(0) = p[1] - p[0];
  jac.col(1) = p[2] - p[0];
  jac.col(2) = p[3] - p[0];
  const double det = jac.determinant();
  g.volume = det / 6.0;
  double len = 0.0;
  for (const auto& e : kTetEdges) len = std::max(len, (p[e[1]] - p[e[0]]).norm());
  if (!(det > 1e-12 * len * len * len)) throw FemError("degenerate or negatively oriented tetrahedron");
  const Eigen::Matrix3d inv = jac.inverse();
  for (int k = 0; k < 3; ++k) g.grad[static_cast<std::size_t>(k) + 1] = inv.row(k).transpose();
  g.grad[0] = -(g.grad[1] + g.grad[2] + g.grad[3]);
  return g;
}

Point3 TetGeometry::map(const Barycentric& b) const {
  return b[0] * points[0] + b[1] * points[1] + b[2] * points[2] + b[3] * points[3];
}

TriGeometry TriGeometry::from_points(const std::array<Point3, 3>& p) {
  TriGeometry g;
  g.points = p;
  const Vec3 cr = (p[1] - p[0]).cross(p[2] - p[0]);
  const double twice_area = cr.norm();
  const double len = std::max({(p[1] - p[0]).norm(), (p[2] - p[1]).norm(), (p[0] - p[2]).norm()});
  if (!(twice_area > 1e-12 * len * len)) throw FemError("degenerate triangle");
  g.area = 0.5 * twice_area;
  g.normal = cr / twice_area;
  for (int i = 0; i < 3; ++i) {
    const auto& a = p[static_cast<std::size_t>((i + 1) % 3)];
    const auto& b = p[static_cast<std::size_t>((i + 2) % 3)];
    g.grad[static_cast<std::size_t>(i)] = g.normal.cross(b - a) / twice_area;
  }
  return g;
}

Point3 TriGeometry::map(const Barycentric& b) const {
  return b[0] * points[0] + b[1] * points[1] + b[2] * points[2];
}

CVec3 TriGeometry::tangential(const CVec3& v) const {
  const CVec3 n = normal.cast<Complex>();
  return v - n * n.dot(v);  // dot conjugates n, which is real
}

TetGeometry tet_geometry(const Mesh& mesh, Index t) {
  TetGeometry g = TetGeometry::from_points(mesh.tet_points(t));
  const auto& tet = mesh.tets()[static_cast<std::size_t>(t)];
  g.vertex_ids = tet.vertex_ids;
  const auto& s = mesh.edge_table().tet_signs[static_cast<std::size_t>(t)];
  for (int k = 0; k < 6; ++k) g.signs[static_cast<std::size_t>(k)] = s[static_cast<std::size_t>(k)];
  return g;
}

TriGeometry face_geometry(const Mesh& mesh, Index f) {
  TriGeometry g = TriGeometry::from_points(mesh.face_points(f));
  const auto& bt = mesh.boundary();
  g.vertex_ids = bt.faces[static_cast<std::size_t>(f)].vertex_ids;
  const auto& s = bt.face_signs[static_cast<std::size_t>(f)];
  for (int k = 0; k < 3; ++k) g.signs[static_cast<std::size_t>(k)] = s[static_cast<std::size_t>(k)];
  return g;
}

Vec3 whitney_edge_eval(const TetGeometry& tet, int local_edge, const Barycentric& point) {
  const auto [a, b] = kTetEdges[static_cast<std::size_t>(local_edge)];
  const Vec3 w = point[static_cast<std::size_t>(a)] * tet.grad[static_cast<std::size_t>(b)] -
                 point[static_cast<std::size_t>(b)] * tet.grad[static_cast<std::size_t>(a)];
  return tet.signs[static_cast<std::size_t>(local_edge)] * w;
}

Vec3 whitney_edge_curl(const TetGeometry& tet, int local_edge) {
  const auto [a, b] = kTetEdges[static_cast<std::size_t>(local_edge)];
  return 2.0 * tet.signs[static_cast<std::size_t>(local_edge)] *
         tet.grad[static_cast<std::size_t>(a)].cross(tet.grad[static_cast<std::size_t>(b)]);
}

Vec3 surface_whitney_eval(const TriGeometry& tri, int local_edge, const Barycentric& point) {
  const auto [a, b] = kTriEdges[static_cast<std::size_t>(local_edge)];
  const Vec3 w = point[static_cast<std::size_t>(a)] * tri.grad[static_cast<std::size_t>(b)] -
                 point[static_cast<std::size_t>(b)] * tri.grad[static_cast<std::size_t>(a)];
  return tri.signs[static_cast<std::size_t>(local_edge)] * w;
}

Vec3 surface_curl(const TriGeometry& tri, int local_vertex) {
  return tri.grad[static_cast<std::size_t>(local_vertex)].cross(tri.normal);
}

Mat6 local_curl_curl(const TetGeometry& tet) {
  std::array<Vec3, 6> c;
  for (int k = 0; k < 6; ++k) c[static_cast<std::size_t>(k)] = whitney_edge_curl(tet, k);
  Mat6 k_mat;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      k_mat(i, j) = tet.volume * c[static_cast<std::size_t>(i)].dot(c[static_cast<std::size_t>(j)]);
  return k_mat;
}

namespace {

// ∫_K λ_i λ_j = |K| (1 + δ_ij) / 20
double lambda_product_integral(int i, int j, double volume) { return volume * (i == j ? 2.0 : 1.0) / 20.0; }

Mat6 unit_mass_closed_form(const TetGeometry& tet) {
  Mat6 m;
  for (int i = 0; i < 6; ++i) {
    const auto [a, b] = kTetEdges[static_cast<std::size_t>(i)];
    for (int j = i; j < 6; ++j) {
      const auto [c, d] = kTetEdges[static_cast<std::size_t>(j)];
      auto g = [&](int p, int q) { return tet.grad[static_cast<std::size_t>(p)].dot(tet.grad[static_cast<std::size_t>(q)]); };
      const double v = tet.volume;
      const double val = lambda_product_integral(a, c, v) * g(b, d) - lambda_product_integral(a, d, v) * g(b, c) -
                         lambda_product_integral(b, c, v) * g(a, d) + lambda_product_integral(b, d, v) * g(a, c);
      m(i, j) = m(j, i) = tet.signs[static_cast<std::size_t>(i)] * tet.signs[static_cast<std::size_t>(j)] * val;
    }
  }
  return m;
}

}  // namespace

Mat6 local_mass(const TetGeometry& tet, const MaterialField& eps, int region, const QuadratureRule& quad) {
  if (eps.is_constant(region)) {
    const double e = eps.constant_value(region);
    if (!(e > 0.0)) throw FemError("non-positive permittivity");
    return e * unit_mass_closed_form(tet);
  }
  if (quad.dim != 3) throw FemError("local_mass needs a tetrahedral rule");
  Mat6 m = Mat6::Zero();
  for (std::size_t q = 0; q < quad.size(); ++q) {
    const auto& b = quad.points[q];
    const double e = eps.value(region, tet.map(b));
    if (!(e > 0.0) || !std::isfinite(e)) throw FemError("non-positive permittivity sampled");
    std::array<Vec3, 6> w;
    for (int k = 0; k < 6; ++k) w[static_cast<std::size_t>(k)] = whitney_edge_eval(tet, k, b);
    const double scale = quad.weights[q] * 6.0 * tet.volume * e;
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) m(i, j) += scale * w[static_cast<std::size_t>(i)].dot(w[static_cast<std::size_t>(j)]);
  }
  return m;
}

Mat3 local_surface_stiffness(const TriGeometry& tri) {
  Mat3 s;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      s(i, j) = tri.area * tri.grad[static_cast<std::size_t>(i)].dot(tri.grad[static_cast<std::size_t>(j)]);
  return s;
}

Mat3 local_surface_stiffness_from_curls(const TriGeometry& tri) {
  Mat3 s;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s(i, j) = tri.area * surface_curl(tri, i).dot(surface_curl(tri, j));
  return s;
}

std::array<int, 3> match_face(const TriGeometry& tri, const TetGeometry& tet) {
  std::array<int, 3> out{-1, -1, -1};
  for (int k = 0; k < 3; ++k) {
    const int id = tri.vertex_ids[static_cast<std::size_t>(k)];
    if (id < 0) throw FemError("triangle vertex ids are not set");
    for (int l = 0; l < 4; ++l)
      if (tet.vertex_ids[static_cast<std::size_t>(l)] == id) out[static_cast<std::size_t>(k)] = l;
    if (out[static_cast<std::size_t>(k)] < 0) throw FemError("triangle is not a face of the tetrahedron");
  }
  return out;
}

Barycentric face_to_tet_barycentric(const Barycentric& face_point, const std::array<int, 3>& face_to_tet) {
  Barycentric b{0.0, 0.0, 0.0, 0.0};
  for (int k = 0; k < 3; ++k)
    b[static_cast<std::size_t>(face_to_tet[static_cast<std::size_t>(k)])] = face_point[static_cast<std::size_t>(k)];
  return b;
}

BoundaryPairings local_boundary_pairings(const TriGeometry& tri, const TetGeometry& tet,
                                         const QuadratureRule& quad) {
  if (quad.dim != 2) throw FemError("boundary pairings need a triangle rule");
  const auto f2t = match_face(tri, tet);

  // Tet-local edge carrying each triangle-local edge.
  std::array<int, 3> tet_edge{};
  for (int k = 0; k < 3; ++k) {
    const int ta = f2t[static_cast<std::size_t>(kTriEdges[static_cast<std::size_t>(k)][0])];
    const int tb = f2t[static_cast<std::size_t>(kTriEdges[static_cast<std::size_t>(k)][1])];
    for (int e = 0; e < 6; ++e) {
      const auto& le = kTetEdges[static_cast<std::size_t>(e)];
      if ((le[0] == ta && le[1] == tb) || (le[0] == tb && le[1] == ta)) tet_edge[static_cast<std::size_t>(k)] = e;
    }
  }

  std::array<Vec3, 3> curls, grads;
  for (int j = 0; j < 3; ++j) {
    curls[static_cast<std::size_t>(j)] = surface_curl(tri, j);
    grads[static_cast<std::size_t>(j)] = tri.grad[static_cast<std::size_t>(j)];
  }

  BoundaryPairings out{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
  for (std::size_t q = 0; q < quad.size(); ++q) {
    const Barycentric tb = face_to_tet_barycentric(quad.points[q], f2t);
    std::array<Vec3, 3> wt;
    for (int i = 0; i < 3; ++i)
      wt[static_cast<std::size_t>(i)] =
          tri.tangential(whitney_edge_eval(tet, tet_edge[static_cast<std::size_t>(i)], tb));
    const double w = quad.weights[q] * 2.0 * tri.area;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const auto& wi = wt[static_cast<std::size_t>(i)];
        out.curl(i, j) += w * curls[static_cast<std::size_t>(j)].dot(wi);
        out.grad(i, j) += w * grads[static_cast<std::size_t>(j)].dot(wi);
        out.trace_mass(i, j) += w * wi.dot(wt[static_cast<std::size_t>(j)]);
      }
  }
  return out;
}

}  // namespace stekloff
