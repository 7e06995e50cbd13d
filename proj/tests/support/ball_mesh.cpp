#include "ball_mesh.hpp"

#include <cmath>

#include "stekloff/msh_io.hpp"

namespace stekloff::testing {

Mesh generate_ball_mesh(int n) {
  const Mesh cube = generate_cube_mesh(n);
  std::vector<Point3> pts;
  pts.reserve(cube.n_vertices());
  for (const Point3& p : cube.points()) {
    const Point3 x = 2.0 * p - Point3::Ones();
    const double r2 = x.norm();
    pts.push_back(r2 > 0.0 ? Point3(x * (x.lpNorm<Eigen::Infinity>() / r2)) : x);
  }
  std::vector<Tetrahedron> tets = cube.tets();
  canonicalize_orientation(pts, tets);
  return Mesh::from_cells(std::move(pts), std::move(tets));
}

void write_ball_msh(const std::filesystem::path& path, int n) { write_msh_file(path, generate_ball_mesh(n)); }

double ball_eigenvalue(int l, double kappa) {
  const auto ul = static_cast<unsigned>(l);
  const double j = std::sph_bessel(ul, kappa);
  const double dj = std::sph_bessel(ul - 1, kappa) - (l + 1) / kappa * j;
  return -(1.0 + kappa * dj / j);
}

}  // namespace stekloff::testing
