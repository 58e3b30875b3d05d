#include <gtest/gtest.h>

#include <cmath>

#include <ddr/mesh.hpp>
#include <ddr/quadrature.hpp>

using namespace ddr;

namespace {

double factorial(int n) { return std::tgamma(n + 1.0); }

} // namespace

TEST(Quadrature, SegmentIntegratesMonomials) {
  for (int p = 0; p <= 12; ++p) {
    const auto rule = segment_rule(Vec3(0, 0, 0), Vec3(2, 0, 0), p);
    double s = 0.0;
    for (const auto& q : rule) {
      s += q.w * std::pow(q.x.x(), p);
    }
    EXPECT_NEAR(s, std::pow(2.0, p + 1) / (p + 1), 1e-12 * std::pow(2.0, p + 1));
  }
}

TEST(Quadrature, TriangleIntegratesMonomials) {
  for (int a = 0; a <= 6; ++a) {
    for (int b = 0; a + b <= 6; ++b) {
      const auto rule = triangle_rule(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), a + b);
      double s = 0.0;
      for (const auto& q : rule) {
        s += q.w * std::pow(q.x.x(), a) * std::pow(q.x.y(), b);
      }
      EXPECT_NEAR(s, factorial(a) * factorial(b) / factorial(a + b + 2), 1e-14);
    }
  }
}

TEST(Quadrature, TetrahedronIntegratesMonomials) {
  for (int a = 0; a <= 5; ++a) {
    for (int b = 0; a + b <= 5; ++b) {
      for (int c = 0; a + b + c <= 5; ++c) {
        const auto rule = tetrahedron_rule(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1), a + b + c);
        double s = 0.0;
        for (const auto& q : rule) {
          s += q.w * std::pow(q.x.x(), a) * std::pow(q.x.y(), b) * std::pow(q.x.z(), c);
        }
        EXPECT_NEAR(s, factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3), 1e-14);
      }
    }
  }
}

TEST(Quadrature, CubeThroughSubmesh) {
  const Mesh mesh = gen_tet_cube(1);
  double s = 0.0;
  for (const auto& S : mesh.simplices()) {
    const auto& P = mesh.points();
    for (const auto& q : tetrahedron_rule(P[S.points[0]], P[S.points[1]], P[S.points[2]], P[S.points[3]], 3)) {
      s += q.w * q.x.x() * q.x.x() * q.x.y();
    }
  }
  EXPECT_NEAR(s, 1.0 / 6.0, 1e-14);
}

TEST(Quadrature, RejectsExcessiveDegree) {
  EXPECT_THROW(segment_rule(Vec3(0, 0, 0), Vec3(1, 0, 0), max_quadrature_degree + 1), Error);
}
