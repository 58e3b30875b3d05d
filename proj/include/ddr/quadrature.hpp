#ifndef DDR_QUADRATURE_HPP
#define DDR_QUADRATURE_HPP

#include <ddr/common.hpp>

namespace ddr {

/// Quadrature node; `simplex` is the submesh tetrahedron used to evaluate broken fields at this node
struct QuadratureNode {
  Vec3 x;
  double w;
  Index simplex = -1;
};

using QuadratureRule = std::vector<QuadratureNode>;

/// Highest exactness degree supported by the simplex rules
constexpr int max_quadrature_degree = 30;

/// Gauss-Jacobi nodes and weights on [-1,1] for the weight (1-x)^alpha (1+x)^beta
void gauss_jacobi(int n, double alpha, double beta, std::vector<double>& x, std::vector<double>& w);

QuadratureRule segment_rule(const Vec3& a, const Vec3& b, int degree, Index simplex = -1);
QuadratureRule triangle_rule(const Vec3& a, const Vec3& b, const Vec3& c, int degree, Index simplex = -1);
QuadratureRule tetrahedron_rule(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, int degree,
                                Index simplex = -1);

/// Appends `other` to `rule`
void append(QuadratureRule& rule, const QuadratureRule& other);

double measure(const QuadratureRule& rule);

} // namespace ddr

#endif
