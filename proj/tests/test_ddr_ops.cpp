#include <gtest/gtest.h>

#include <cmath>

#include <ddr/ddr_ops.hpp>

using namespace ddr;

namespace {

struct Case {
  std::string family;
  int n;
  int k;
};

std::string case_name(const testing::TestParamInfo<Case>& info) {
  return info.param.family + std::to_string(info.param.n) + "_k" + std::to_string(info.param.k);
}

/// Polynomial of total degree `deg` with generic coefficients
double poly(const Vec3& x, int deg, int seed) {
  double s = 0.3 + 0.1 * seed;
  for (int a = 0; a <= deg; ++a) {
    for (int b = 0; a + b <= deg; ++b) {
      for (int c = 0; a + b + c <= deg; ++c) {
        s += std::sin(1.0 + a + 2 * b + 3 * c + seed) * std::pow(x.x(), a) * std::pow(x.y(), b) * std::pow(x.z(), c);
      }
    }
  }
  return s;
}

/// Gradient by central differences is not exact, so polynomial gradients are differentiated by hand
Vec3 poly_grad(const Vec3& x, int deg, int seed) {
  Vec3 g = Vec3::Zero();
  for (int a = 0; a <= deg; ++a) {
    for (int b = 0; a + b <= deg; ++b) {
      for (int c = 0; a + b + c <= deg; ++c) {
        const double w = std::sin(1.0 + a + 2 * b + 3 * c + seed);
        if (a > 0) g.x() += w * a * std::pow(x.x(), a - 1) * std::pow(x.y(), b) * std::pow(x.z(), c);
        if (b > 0) g.y() += w * b * std::pow(x.x(), a) * std::pow(x.y(), b - 1) * std::pow(x.z(), c);
        if (c > 0) g.z() += w * c * std::pow(x.x(), a) * std::pow(x.y(), b) * std::pow(x.z(), c - 1);
      }
    }
  }
  return g;
}

Vec3 vpoly(const Vec3& x, int deg) { return {poly(x, deg, 1), poly(x, deg, 4), poly(x, deg, 9)}; }

/// Cartesian values of coordinates c in the family s at the rule nodes
Eigen::MatrixXd values(const PolySet& s, const Eigen::VectorXd& c, const QuadratureRule& rule) {
  const FieldValues v = s.evaluate(rule);
  Eigen::MatrixXd out(rule.size(), v.ncomp);
  for (int a = 0; a < v.ncomp; ++a) {
    out.col(a) = v.comp[a] * c;
  }
  return out;
}

/// Polynomial vector field with its curl and divergence
struct VectorPoly {
  int deg;
  Vec3 value(const Vec3& x) const { return vpoly(x, deg); }
  Vec3 curl(const Vec3& x) const {
    const Vec3 g1 = poly_grad(x, deg, 1), g2 = poly_grad(x, deg, 4), g3 = poly_grad(x, deg, 9);
    return {g3.y() - g2.z(), g1.z() - g3.x(), g2.x() - g1.y()};
  }
  double div(const Vec3& x) const { return poly_grad(x, deg, 1).x() + poly_grad(x, deg, 4).y() + poly_grad(x, deg, 9).z(); }
};

class Operators : public testing::TestWithParam<Case> {
protected:
  void SetUp() override {
    mesh_ = std::make_unique<Mesh>(make_mesh(GetParam().family, GetParam().n, 7));
    ctx_ = std::make_unique<DdrContext>(*mesh_, GetParam().k);
    ops_ = std::make_unique<DdrOperators>(*ctx_);
  }
  std::unique_ptr<Mesh> mesh_;
  std::unique_ptr<DdrContext> ctx_;
  std::unique_ptr<DdrOperators> ops_;
};

} // namespace

TEST_P(Operators, ComplexProperty) {
  const auto q = random_dofs(ops_->layout(SpaceKind::Grad), 1);
  const auto v = random_dofs(ops_->layout(SpaceKind::Curl), 2);
  const auto Gq = ops_->uG() * q;
  EXPECT_LE((ops_->uC() * Gq).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, Gq.cwiseAbs().maxCoeff()));
  const auto Cv = ops_->uC() * v;
  EXPECT_LE((ops_->D() * Cv).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, Cv.cwiseAbs().maxCoeff()));
}

TEST_P(Operators, Commutation) {
  const auto& Lg = ops_->layout(SpaceKind::Grad);
  const auto& Lc = ops_->layout(SpaceKind::Curl);
  const auto& Ld = ops_->layout(SpaceKind::Div);
  // Degree k+1 inputs, and degree k+3 for which the entity rules are still exact
  for (int deg : {GetParam().k + 1, GetParam().k + 3}) {
    const VectorPoly v{deg};
    auto q = [deg](const Vec3& x) { return poly(x, deg, 5); };
    auto dq = [deg](const Vec3& x) { return poly_grad(x, deg, 5); };
    const Eigen::VectorXd a = ops_->uG() * interpolate_grad(Lg, sampler(q));
    const Eigen::VectorXd b = interpolate_curl(Lc, sampler(dq));
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-10 * b.cwiseAbs().maxCoeff()) << "degree " << deg;
    const Eigen::VectorXd c = ops_->uC() * interpolate_curl(Lc, sampler([&](const Vec3& x) { return v.value(x); }));
    const Eigen::VectorXd d = interpolate_div(Ld, sampler([&](const Vec3& x) { return v.curl(x); }));
    EXPECT_LE((c - d).cwiseAbs().maxCoeff(), 1e-10 * d.cwiseAbs().maxCoeff()) << "degree " << deg;
    const Eigen::VectorXd e = ops_->D() * interpolate_div(Ld, sampler([&](const Vec3& x) { return v.value(x); }));
    const Eigen::VectorXd f = project_pk(*ctx_, sampler([&](const Vec3& x) { return v.div(x); }));
    EXPECT_LE((e - f).cwiseAbs().maxCoeff(), 1e-10 * f.cwiseAbs().maxCoeff()) << "degree " << deg;
  }
}

TEST_P(Operators, PolynomialConsistency) {
  const int k = GetParam().k;
  const auto& Lg = ops_->layout(SpaceKind::Grad);
  const auto& Lc = ops_->layout(SpaceKind::Curl);
  const auto& Ld = ops_->layout(SpaceKind::Div);
  auto q = [k](const Vec3& x) { return poly(x, k + 1, 0); };
  auto dq = [k](const Vec3& x) { return poly_grad(x, k + 1, 0); };
  auto v = [k](const Vec3& x) { return vpoly(x, k); };
  const auto Iq = interpolate_grad(Lg, sampler(q));
  const auto Iv = interpolate_curl(Lc, sampler(v));
  const auto Iw = interpolate_div(Ld, sampler(v));
  for (Index t = 0; t < mesh_->n_cells(); ++t) {
    const auto& d = ctx_->cell(t);
    const auto pg = values(d.p_kp1, ops_->potential(SpaceKind::Grad, t).apply(Iq), d.rule);
    const auto gt = values(d.vec_k, ops_->cell_gradient(t).apply(Iq), d.rule);
    const auto pc = values(d.vec_k, ops_->potential(SpaceKind::Curl, t).apply(Iv), d.rule);
    const auto pd = values(d.vec_k, ops_->potential(SpaceKind::Div, t).apply(Iw), d.rule);
    for (std::size_t i = 0; i < d.rule.size(); ++i) {
      const Vec3& x = d.rule[i].x;
      ASSERT_NEAR(pg(i, 0), q(x), 1e-10) << "cell " << t;
      ASSERT_LE((gt.row(i).transpose() - dq(x)).norm(), 1e-9) << "cell " << t;
      ASSERT_LE((pc.row(i).transpose() - v(x)).norm(), 1e-9) << "cell " << t;
      ASSERT_LE((pd.row(i).transpose() - v(x)).norm(), 1e-9) << "cell " << t;
    }
  }
  // Stabilizations vanish on interpolates of polynomials
  for (auto [space, z] : {std::pair{SpaceKind::Grad, Iq}, {SpaceKind::Curl, Iv}, {SpaceKind::Div, Iw}}) {
    // S is positive semidefinite, so s(z, z) = 0 iff S z = 0; the linear residual avoids cancellation
    const Eigen::MatrixXd S(ops_->stabilization_matrix(space));
    const double scale = (S.cwiseAbs() * z.cwiseAbs()).norm();
    EXPECT_LE((S * z).norm(), 1e-10 * std::max(scale, 1e-4 * z.norm())) << to_string(space);
  }
}

TEST_P(Operators, Relations) {
  const auto q = random_dofs(ops_->layout(SpaceKind::Grad), 11);
  const auto v = random_dofs(ops_->layout(SpaceKind::Curl), 12);
  const auto w = random_dofs(ops_->layout(SpaceKind::Div), 13);
  const auto r = relation_residuals(*ops_, q, v, w);
  EXPECT_LE(r.grad, 1e-9);
  EXPECT_LE(r.curl, 1e-9);
  EXPECT_LE(r.div, 1e-9);
}

TEST_P(Operators, PotentialsOfDiscreteDerivatives) {
  const auto q = random_dofs(ops_->layout(SpaceKind::Grad), 21);
  const auto v = random_dofs(ops_->layout(SpaceKind::Curl), 22);
  const Eigen::VectorXd Gq = ops_->uG() * q;
  const Eigen::VectorXd Cv = ops_->uC() * v;
  for (Index t = 0; t < mesh_->n_cells(); ++t) {
    const auto a = ops_->potential(SpaceKind::Curl, t).apply(Gq);
    const auto b = ops_->cell_gradient(t).apply(q);
    EXPECT_LE((a - b).norm(), 1e-10 * std::max(1.0, b.norm()));
    const auto c = ops_->potential(SpaceKind::Div, t).apply(Cv);
    const auto d = ops_->cell_curl(t).apply(v);
    EXPECT_LE((c - d).norm(), 1e-10 * std::max(1.0, d.norm()));
  }
}

TEST_P(Operators, InnerProductsAreSymmetricPositive) {
  for (const auto& mu : {Parameter::identity(), Parameter::diagonal(), Parameter::piecewise(*mesh_)}) {
    for (auto space : {SpaceKind::Grad, SpaceKind::Curl, SpaceKind::Div}) {
      const SparseMatrix A = ops_->inner_product_matrix(space, mu);
      EXPECT_LE(Eigen::MatrixXd(A - SparseMatrix(A.transpose())).cwiseAbs().maxCoeff(), 1e-12);
      const auto z = random_dofs(ops_->layout(space), 31);
      EXPECT_GT(z.dot(A * z), 0.0);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Meshes, Operators,
                         testing::Values(Case{"tet", 1, 0}, Case{"tet", 1, 1}, Case{"tet", 1, 2}, Case{"hex", 1, 0},
                                         Case{"hex", 2, 1}, Case{"hex", 1, 2}, Case{"agglo", 2, 0},
                                         Case{"agglo", 2, 1}, Case{"agglo", 1, 2}),
                         case_name);

//------------------------------------------------------------------------------
// Hand-computed values
//------------------------------------------------------------------------------

TEST(OperatorValues, EdgeGradientOfUnitEdge) {
  const Mesh mesh = gen_hex_cube(1);
  const DdrContext ctx(mesh, 0);
  const DdrOperators ops(ctx);
  const auto& L = ops.layout(SpaceKind::Grad);
  for (Index e = 0; e < mesh.n_edges(); ++e) {
    Eigen::VectorXd q = Eigen::VectorXd::Zero(L.size());
    q(L.vertex_offset(mesh.edges()[e].vertices[1])) = 1.0;
    // P^0(E) orthonormal basis is 1/sqrt(|E|) = 1 on unit edges
    const auto g = ops.edge_gradient(e).apply(q);
    ASSERT_EQ(g.size(), 1);
    EXPECT_NEAR(g(0), 1.0, 1e-13);
  }
}

TEST(OperatorValues, DivergenceOfPositionOnCube) {
  const Mesh mesh = gen_hex_cube(1);
  const DdrContext ctx(mesh, 0);
  const DdrOperators ops(ctx);
  const Vec3 x0(0.5, 0.5, 0.5);
  const auto w = interpolate_div(ops.layout(SpaceKind::Div), sampler([&](const Vec3& x) { return Vec3(x - x0); }));
  const Eigen::VectorXd d = ops.D() * w;
  ASSERT_EQ(d.size(), 1);
  // Coordinate of the constant 3 in the orthonormal basis {1} of the unit cube
  EXPECT_NEAR(d(0), 3.0, 1e-12);
}

//------------------------------------------------------------------------------
// Boundary conditions and traces
//------------------------------------------------------------------------------

class MaskedOperators : public testing::TestWithParam<Case> {};

TEST_P(MaskedOperators, SubcomplexAndVanishingTraces) {
  const Mesh mesh = make_mesh(GetParam().family, GetParam().n, 3);
  const DdrContext ctx(mesh, GetParam().k);
  const DdrOperators ops(ctx);
  for (const Gamma& gamma : {Gamma::xmin(mesh), Gamma::all(mesh)}) {
    const auto& Lg = ops.layout(SpaceKind::Grad);
    const auto& Lc = ops.layout(SpaceKind::Curl);
    const auto& Ld = ops.layout(SpaceKind::Div);
    const auto q = random_dofs(Lg, 1, &gamma);
    const auto v = random_dofs(Lc, 2, &gamma);
    const Eigen::VectorXd Gq = ops.uG() * q, Cv = ops.uC() * v;
    EXPECT_LE((Gq - apply_mask(Lc, Gq, gamma)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((Cv - apply_mask(Ld, Cv, gamma)).cwiseAbs().maxCoeff(), 1e-12);
    for (Index f = 0; f < mesh.n_faces(); ++f) {
      if (gamma.face[f]) {
        EXPECT_LE(ops.face_trace(f).apply(q).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LE(ops.face_tangential_trace(f).apply(v).cwiseAbs().maxCoeff(), 1e-12);
      }
    }
    for (Index e = 0; e < mesh.n_edges(); ++e) {
      if (gamma.edge[e]) {
        EXPECT_LE(ops.edge_trace(e).apply(q).cwiseAbs().maxCoeff(), 1e-12);
      }
    }
  }
}

TEST_P(MaskedOperators, TraceProjectionsReturnComponents) {
  const Mesh mesh = make_mesh(GetParam().family, GetParam().n, 3);
  const int k = GetParam().k;
  const DdrContext ctx(mesh, k);
  const DdrOperators ops(ctx);
  const auto& L = ops.layout(SpaceKind::Grad);
  const auto q = random_dofs(L, 5);
  // Hierarchical orthonormal bases: the leading coordinates are the lower-degree projection
  for (Index e = 0; e < mesh.n_edges(); ++e) {
    const auto tr = ops.edge_trace(e).apply(q);
    if (k > 0) {
      EXPECT_LE((tr.head(k) - q.segment(L.edge_offset(e), k)).cwiseAbs().maxCoeff(), 1e-12);
    }
    const auto& E = mesh.edges()[e];
    const Eigen::MatrixXd ends = ctx.edge(e).basis->values(
        std::vector<Vec3>{mesh.vertex_position(E.vertices[0]), mesh.vertex_position(E.vertices[1])});
    EXPECT_NEAR((ends * tr)(0), q(L.vertex_offset(E.vertices[0])), 1e-12);
    EXPECT_NEAR((ends * tr)(1), q(L.vertex_offset(E.vertices[1])), 1e-12);
  }
  const Index nkm1 = poly_dim(2, k - 1);
  for (Index f = 0; f < mesh.n_faces() && nkm1 > 0; ++f) {
    const auto tr = ops.face_trace(f).apply(q);
    EXPECT_LE((tr.head(nkm1) - q.segment(L.face_offset(f), nkm1)).cwiseAbs().maxCoeff(), 1e-11);
  }
}

INSTANTIATE_TEST_SUITE_P(Meshes, MaskedOperators,
                         testing::Values(Case{"tet", 1, 1}, Case{"hex", 2, 0}, Case{"agglo", 2, 1}, Case{"hex", 1, 2}),
                         case_name);

TEST(OperatorValues, InnerProductOfPolynomialInterpolates) {
  const Mesh mesh = gen_agglomerated(2, 2);
  const DdrContext ctx(mesh, 1);
  const DdrOperators ops(ctx);
  auto p = [](const Vec3& x) { return Vec3(1 + x.y(), 2 * x.z() - x.x(), 0.5); };
  const auto z = interpolate_curl(ops.layout(SpaceKind::Curl), sampler(p));
  double exact = 0.0;
  for (Index t = 0; t < mesh.n_cells(); ++t) {
    for (const auto& node : ctx.cell(t).rule) {
      exact += node.w * p(node.x).squaredNorm();
    }
  }
  EXPECT_NEAR(inner_product(ops, SpaceKind::Curl, Parameter::identity(), z, z), exact, 1e-11 * exact);
  const auto y = random_dofs(ops.layout(SpaceKind::Curl), 3);
  const auto mu = Parameter::piecewise(mesh);
  EXPECT_NEAR(inner_product(ops, SpaceKind::Curl, mu, z, y), inner_product(ops, SpaceKind::Curl, mu, y, z), 1e-12);
}

TEST(OperatorValues, ParameterValidation) {
  const Mesh mesh = gen_hex_cube(1);
  const DdrContext ctx(mesh, 0);
  const DdrOperators ops(ctx);
  const Parameter bad{"bad", [](const Vec3&, Index) { return Mat3(-Mat3::Identity()); }};
  EXPECT_THROW(ops.inner_product_matrix(SpaceKind::Div, bad), Error);
  const Parameter skew{"skew", [](const Vec3&, Index) {
                         Mat3 m = Mat3::Identity();
                         m(0, 1) = 1.0;
                         return m;
                       }};
  EXPECT_THROW(ops.inner_product_matrix(SpaceKind::Div, skew), Error);
  EXPECT_THROW(Parameter::parse("nope", mesh), Error);
  EXPECT_NEAR(cell_magnitude(ctx, Parameter::diagonal(), 0), 5.0, 1e-13);
  EXPECT_NEAR(cell_magnitude(ctx, Parameter::diagonal(), 0, SpaceKind::Grad), 8.0 / 3.0, 1e-13);
}
