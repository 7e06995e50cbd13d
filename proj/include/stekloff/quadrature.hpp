#pragma once

#include <array>
#include <vector>

namespace stekloff {

/// Barycentric quadrature on the reference tet (volume 1/6) or triangle (area 1/2);
/// weights sum to that reference measure.
/// Triangle rules leave the fourth barycentric coordinate at zero.
struct QuadratureRule {
  std::vector<std::array<double, 4>> points;
  std::vector<double> weights;
  int degree = 0;
  int dim = 3;

  std::size_t size() const { return weights.size(); }
  double reference_measure() const { return dim == 3 ? 1.0 / 6.0 : 0.5; }
};

/// Keast 11-point rule, exact for degree 4 (one negative weight).
const QuadratureRule& tet_rule_degree4();

/// Dunavant 6-point rule, exact for degree 4.
const QuadratureRule& tri_rule_degree4();

}  // namespace stekloff
