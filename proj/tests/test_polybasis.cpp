#include <gtest/gtest.h>

#include <ddr/polybasis.hpp>

using namespace ddr;

namespace {

struct Tet {
  Vec3 a{0.1, 0.0, 0.2}, b{1.0, 0.1, 0.0}, c{0.2, 0.9, 0.1}, d{0.0, 0.2, 1.1};
  Vec3 center() const { return (a + b + c + d) / 4.0; }
  QuadratureRule rule(int degree) const { return tetrahedron_rule(a, b, c, d, degree); }
};

Eigen::MatrixXd gram(const PolySet& p, const QuadratureRule& rule) {
  const auto v = p.evaluate(rule);
  return integrate_products(v, v, rule);
}

} // namespace

TEST(PolyBasis, DimensionFormulas) {
  EXPECT_EQ(dim({EntityKind::Cell, Family::RT, 1}), 4);
  EXPECT_EQ(dim({EntityKind::Cell, Family::NE, 1}), 6);
  EXPECT_EQ(dim({EntityKind::Face, Family::RT, 1}), 3);
  EXPECT_EQ(dim({EntityKind::Cell, Family::Scalar, 2}), 10);
  EXPECT_EQ(dim({EntityKind::Cell, Family::NE, 2}), 20);
  EXPECT_EQ(dim({EntityKind::Cell, Family::RT, 2}), 15);
  EXPECT_THROW(dim({EntityKind::Edge, Family::RT, 1}), Error);
}

TEST(PolyBasis, ScalarBasisIsOrthonormalAndHierarchical) {
  const Tet t;
  const auto rule = t.rule(10);
  const ScalarBasis basis(Frame::cell(t.center(), 1.0), 4, rule);
  const auto s = scalar_poly(basis, 4);
  EXPECT_LT((gram(s, rule) - Eigen::MatrixXd::Identity(35, 35)).norm(), 1e-11);
  // The first basis function is constant
  const auto v = basis.values(rule);
  EXPECT_LT((v.col(0).array() - v(0, 0)).abs().maxCoeff(), 1e-12);
}

TEST(PolyBasis, SpacesAreOrthonormalWithExpectedDimensions) {
  const Tet t;
  const auto rule = t.rule(12);
  const ScalarBasis basis(Frame::cell(t.center(), 1.0), 4, rule);
  for (int l = 1; l <= 3; ++l) {
    const auto rt = rt_space(basis, l);
    const auto ne = ne_space(basis, l);
    EXPECT_EQ(rt.size(), dim({EntityKind::Cell, Family::RT, l}));
    EXPECT_EQ(ne.size(), dim({EntityKind::Cell, Family::NE, l}));
    EXPECT_LT((gram(rt, rule) - Eigen::MatrixXd::Identity(rt.size(), rt.size())).norm(), 1e-10);
    EXPECT_LT((gram(ne, rule) - Eigen::MatrixXd::Identity(ne.size(), ne.size())).norm(), 1e-10);
  }
}

TEST(PolyBasis, FaceRotAndKoszulSplit) {
  const Vec3 a(0, 0, 0), b(1, 0, 1), c(0, 1, 0);
  const Vec3 n = (b - a).cross(c - a).normalized();
  const auto rule = triangle_rule(a, b, c, 10);
  const ScalarBasis basis(Frame::face((a + b + c) / 3.0, 1.0, n, b - a), 4, rule);
  for (int k = 0; k <= 2; ++k) {
    const auto [range, compl_] = koszul_split(basis, k, KoszulSplit::FaceRot);
    EXPECT_EQ(range.size() + compl_.size(), 2 * poly_dim(2, k));
  }
  // Face vectors lie in the tangent plane
  const auto v = vector_poly(basis, 2).evaluate(rule);
  for (Index i = 0; i < v.functions(); ++i) {
    for (Index q = 0; q < v.points(); ++q) {
      EXPECT_NEAR(v.comp[0](q, i) * n.x() + v.comp[1](q, i) * n.y() + v.comp[2](q, i) * n.z(), 0.0, 1e-12);
    }
  }
}

TEST(PolyBasis, CellKoszulSplits) {
  const Tet t;
  const auto rule = t.rule(12);
  const ScalarBasis basis(Frame::cell(t.center(), 1.0), 4, rule);
  for (int k = 0; k <= 3; ++k) {
    for (auto which : {KoszulSplit::CellGrad, KoszulSplit::CellCurl}) {
      const auto [range, compl_] = koszul_split(basis, k, which);
      EXPECT_EQ(range.size() + compl_.size(), 3 * poly_dim(3, k));
    }
    // (x - x_T) x P^{k-1}(T)^3 has dimension 3 dim P^{k-1} - dim P^{k-2}
    EXPECT_EQ(koszul_cross_space(basis, k).size(), 3 * poly_dim(3, k - 1) - poly_dim(3, k - 2));
  }
}

TEST(PolyBasis, DifferentialOperatorsMatchFiniteDifferences) {
  const Tet t;
  const auto rule = t.rule(8);
  const ScalarBasis basis(Frame::cell(t.center(), 0.7), 3, rule);
  const auto v = vector_poly(basis, 2);
  const auto cv = curl(v);
  const auto dv = div(v);
  const Vec3 x = t.center() + Vec3(0.05, -0.02, 0.03);
  const double h = 1e-5;
  auto eval = [&](const PolySet& p, const Vec3& y) {
    QuadratureRule r{{y, 1.0, -1}};
    return p.evaluate(r);
  };
  for (Index i = 0; i < v.size(); i += 7) {
    Mat3 J;
    for (int j = 0; j < 3; ++j) {
      const auto fp = eval(v, x + h * Vec3::Unit(j));
      const auto fm = eval(v, x - h * Vec3::Unit(j));
      for (int c = 0; c < 3; ++c) {
        J(c, j) = (fp.comp[c](0, i) - fm.comp[c](0, i)) / (2 * h);
      }
    }
    const auto cx = eval(cv, x);
    EXPECT_NEAR(cx.comp[0](0, i), J(2, 1) - J(1, 2), 1e-7);
    EXPECT_NEAR(cx.comp[1](0, i), J(0, 2) - J(2, 0), 1e-7);
    EXPECT_NEAR(cx.comp[2](0, i), J(1, 0) - J(0, 1), 1e-7);
    EXPECT_NEAR(eval(dv, x).comp[0](0, i), J.trace(), 1e-7);
  }
}

TEST(PolyBasis, CurlOfGradVanishes) {
  const Tet t;
  const auto rule = t.rule(8);
  const ScalarBasis basis(Frame::cell(t.center(), 1.0), 4, rule);
  EXPECT_LT(curl(grad(scalar_poly(basis, 4))).coef.norm(), 1e-9);
  EXPECT_LT(div(curl(vector_poly(basis, 4))).coef.norm(), 1e-9);
}

TEST(PolyBasis, ProjectionReproducesPolynomials) {
  const Tet t;
  const auto rule = t.rule(10);
  const ScalarBasis basis(Frame::cell(t.center(), 1.0), 3, rule);
  Eigen::MatrixXd f(rule.size(), 1);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const Vec3& x = rule[q].x;
    f(q, 0) = 1.0 + x.x() * x.y() - 2.0 * x.z() * x.z() * x.x();
  }
  const auto s = scalar_poly(basis, 3);
  const Eigen::VectorXd c = project(s, rule, f);
  const Eigen::MatrixXd back = s.evaluate(rule).comp[0] * c;
  EXPECT_LT((back - f).cwiseAbs().maxCoeff(), 1e-11);
}
