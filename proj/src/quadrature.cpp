#include "stekloff/quadrature.hpp"

#include <cmath>
#include <utility>

namespace stekloff {

namespace {

QuadratureRule make_keast11() {
  QuadratureRule q;
  q.degree = 4;
  q.dim = 3;
  q.points.push_back({0.25, 0.25, 0.25, 0.25});
  q.weights.push_back(-74.0 / 5625.0);

  const double a = 1.0 / 14.0, b = 11.0 / 14.0;
  for (int k = 0; k < 4; ++k) {
    std::array<double, 4> p{a, a, a, a};
    p[static_cast<std::size_t>(k)] = b;
    q.points.push_back(p);
    q.weights.push_back(343.0 / 45000.0);
  }

  const double c = (1.0 + std::sqrt(5.0 / 14.0)) / 4.0, d = (1.0 - std::sqrt(5.0 / 14.0)) / 4.0;
  static constexpr std::array<std::array<int, 2>, 6> kPairs{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
  for (const auto& pr : kPairs) {
    std::array<double, 4> p{d, d, d, d};
    p[static_cast<std::size_t>(pr[0])] = c;
    p[static_cast<std::size_t>(pr[1])] = c;
    q.points.push_back(p);
    q.weights.push_back(56.0 / 2250.0);
  }
  return q;
}

QuadratureRule make_dunavant6() {
  QuadratureRule q;
  q.degree = 4;
  q.dim = 2;
  const double a1 = 0.445948490915964886318329253883, w1 = 0.223381589678011465944827266640;
  const double a2 = 0.091576213509770743459571463402, w2 = 0.109951743655321867638505609174;
  for (const auto& [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
    const double b = 1.0 - 2.0 * a;
    for (int k = 0; k < 3; ++k) {
      std::array<double, 4> p{a, a, a, 0.0};
      p[static_cast<std::size_t>(k)] = b;
      q.points.push_back(p);
      q.weights.push_back(0.5 * w);
    }
  }
  return q;
}

}  // namespace

const QuadratureRule& tet_rule_degree4() {
  static const QuadratureRule rule = make_keast11();
  return rule;
}

const QuadratureRule& tri_rule_degree4() {
  static const QuadratureRule rule = make_dunavant6();
  return rule;
}

}  // namespace stekloff
