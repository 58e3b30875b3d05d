#include <gtest/gtest.h>

#include <cmath>

#include <ddr/ddr_ops.hpp>
#include <ddr/fe_space.hpp>

using namespace ddr;

namespace {

/// Dense orthonormal basis of the conforming subspace (kernel of the constraints)
Eigen::MatrixXd conforming_basis(const FeSpace& fe) {
  if (fe.constraints().rows() == 0) {
    return Eigen::MatrixXd::Identity(fe.broken_dim(), fe.broken_dim());
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu{Eigen::MatrixXd(fe.constraints())};
  lu.setThreshold(1e-10);
  const Eigen::MatrixXd K = lu.kernel();
  return Eigen::HouseholderQR<Eigen::MatrixXd>(K).householderQ() * Eigen::MatrixXd::Identity(K.rows(), K.cols());
}

Eigen::VectorXd random_member(const FeSpace& fe, unsigned seed) {
  std::srand(seed);
  const Eigen::MatrixXd B = conforming_basis(fe);
  return B * Eigen::VectorXd::Random(B.cols());
}

} // namespace

//------------------------------------------------------------------------------
// Dimensions
//------------------------------------------------------------------------------

TEST(FeSpace, LowestOrderDimensionsCountSubmeshEntities) {
  const Mesh mesh = gen_tet_cube(1);
  const Gamma none = Gamma::none(mesh);
  EXPECT_EQ(FeSpace(mesh, FeFamily::Lagrange, 1, none).dimension(), mesh.n_points());
  EXPECT_EQ(FeSpace(mesh, FeFamily::Nedelec, 1, none).dimension(), static_cast<Index>(mesh.subedges().size()));
  EXPECT_EQ(FeSpace(mesh, FeFamily::RaviartThomas, 1, none).dimension(), static_cast<Index>(mesh.subfaces().size()));
  EXPECT_EQ(FeSpace(mesh, FeFamily::Broken, 0, none).dimension(), mesh.n_simplices());
}

TEST(FeSpace, QuadraticLagrangeCountsPointsAndEdges) {
  const Mesh mesh = gen_tet_cube(1);
  const FeSpace lag(mesh, FeFamily::Lagrange, 2, Gamma::none(mesh));
  EXPECT_EQ(lag.dimension(), mesh.n_points() + static_cast<Index>(mesh.subedges().size()));
}

TEST(FeSpace, SingleTetWithWholeBoundary) {
  const Mesh mesh = gen_single_tet();
  const Gamma all = Gamma::all(mesh);
  EXPECT_EQ(FeSpace(mesh, FeFamily::RaviartThomas, 1, all).dimension(), 0);
  EXPECT_EQ(FeSpace(mesh, FeFamily::Nedelec, 1, all).dimension(), 0);
  EXPECT_EQ(FeSpace(mesh, FeFamily::Lagrange, 1, all).dimension(), 0);
  // Interior bubbles of the quadratic RT space: 15 - 4 * 3
  EXPECT_EQ(FeSpace(mesh, FeFamily::RaviartThomas, 2, all).dimension(), 3);
}

TEST(FeSpace, RejectsDegreeZeroConformingFamilies) {
  const Mesh mesh = gen_single_tet();
  EXPECT_THROW(FeSpace(mesh, FeFamily::Nedelec, 0, Gamma::none(mesh)), Error);
}

//------------------------------------------------------------------------------
// Exactness
//------------------------------------------------------------------------------

class Exactness : public ::testing::TestWithParam<std::tuple<int, std::string>> {};

TEST_P(Exactness, KernelsMatchImages) {
  const auto [degree, gname] = GetParam();
  const Mesh mesh = gen_tet_cube(1);
  const Gamma gamma = Gamma::parse(mesh, gname);
  const ExactnessDims d = exactness_dims(mesh, degree, gamma);
  EXPECT_EQ(d.ker_grad, gamma.empty() ? 1 : 0);
  EXPECT_EQ(d.ker_curl, d.im_grad);
  EXPECT_EQ(d.ker_div, d.im_curl);
  EXPECT_EQ(d.im_div, gamma.is_all(mesh) ? d.broken - 1 : d.broken);
  // Euler characteristic of the cube relative to Gamma vanishes unless Gamma is empty
  const Index chi = d.lagrange - d.nedelec + d.raviart_thomas - d.broken;
  EXPECT_EQ(chi, gamma.empty() ? 1 : gamma.is_all(mesh) ? -1 : 0);
}

INSTANTIATE_TEST_SUITE_P(FeSpace, Exactness,
                         ::testing::Combine(::testing::Values(1, 2), ::testing::Values("none", "all", "xmin")),
                         [](const auto& info) {
                           return "l" + std::to_string(std::get<0>(info.param)) + "_" + std::get<1>(info.param);
                         });

TEST(FeSpace, DifferentialsPreserveConformity) {
  const Mesh mesh = gen_tet_cube(1);
  for (const char* gname : {"none", "xmin"}) {
    const Gamma gamma = Gamma::parse(mesh, gname);
    const FeSpace lag(mesh, FeFamily::Lagrange, 2, gamma), ne(mesh, FeFamily::Nedelec, 2, gamma),
        rt(mesh, FeFamily::RaviartThomas, 2, gamma), p(mesh, FeFamily::Broken, 1, gamma);
    const auto q = random_member(lag, 1), v = random_member(ne, 2);
    EXPECT_LE(lag.constraint_residual(q), 1e-12);
    const Eigen::VectorXd gq = differential_matrix(lag, ne) * q;
    const Eigen::VectorXd cv = differential_matrix(ne, rt) * v;
    EXPECT_LE(ne.constraint_residual(gq), 1e-11) << gname;
    EXPECT_LE(rt.constraint_residual(cv), 1e-11) << gname;
    EXPECT_LE((differential_matrix(ne, rt) * gq).norm(), 1e-11 * gq.norm());
    EXPECT_LE((differential_matrix(rt, p) * cv).norm(), 1e-11 * cv.norm());
  }
}

TEST(FeSpace, ProjectionOfGlobalPolynomialIsConformingAndPointwiseExact) {
  const Mesh mesh = gen_tet_cube(2);
  const FeSpace ne(mesh, FeFamily::Nedelec, 2, Gamma::none(mesh));
  auto f = [](const Vec3& x) { return Vec3(1 + x.y(), x.x() - 2 * x.z(), 3 * x.y()); };
  const Eigen::VectorXd x = ne.project(sampler(f));
  EXPECT_LE(ne.constraint_residual(x), 1e-12);
  const Vec3 p(0.31, 0.77, 0.12);
  EXPECT_LE((ne.vector_sampler(x)(p, -1) - f(p)).norm(), 1e-12);
  EXPECT_EQ(locate_simplex(mesh, Vec3(2, 0, 0)), -1);
}

//------------------------------------------------------------------------------
// DDR interpolation of finite element members
//------------------------------------------------------------------------------

TEST(FeInterpolation, AgreesWithCanonicalInterpolationOnPolynomials) {
  const Mesh mesh = gen_tet_cube(2);
  const Gamma none = Gamma::none(mesh);
  for (int k : {0, 1}) {
    const DdrContext ctx(mesh, k);
    const int l = k + 1;
    auto q = [](const Vec3& x) { return 1 + x.x() - x.y() * x.z() + x.z() * x.z(); };
    auto v = [](const Vec3& x) { return Vec3(x.y() * x.z(), 1 + x.x(), x.z() - x.x() * x.y()); };
    {
      const FeSpace fe(mesh, FeFamily::Lagrange, l + 1, none);
      const DofLayout L(ctx, SpaceKind::Grad);
      const Eigen::VectorXd a = interpolate_fe(L, fe, fe.project(sampler(q)));
      EXPECT_LE((a - interpolate_grad(L, sampler(q))).norm(), 1e-11) << k;
    }
    {
      const FeSpace fe(mesh, FeFamily::Nedelec, 3, none);
      const DofLayout L(ctx, SpaceKind::Curl);
      const Eigen::VectorXd a = interpolate_fe(L, fe, fe.project(sampler(v)));
      EXPECT_LE((a - interpolate_curl(L, sampler(v))).norm(), 1e-11) << k;
    }
    {
      const FeSpace fe(mesh, FeFamily::RaviartThomas, 3, none);
      const DofLayout L(ctx, SpaceKind::Div);
      const Eigen::VectorXd a = interpolate_fe(L, fe, fe.project(sampler(v)));
      EXPECT_LE((a - interpolate_div(L, sampler(v))).norm(), 1e-11) << k;
    }
  }
}

TEST(FeInterpolation, CommutesOnConformingMembers) {
  const Mesh mesh = gen_tet_cube(1);
  const Gamma gamma = Gamma::xmin(mesh);
  for (int k : {0, 1}) {
    const int l = k + 2;
    const DdrContext ctx(mesh, k);
    const DdrOperators ops(ctx);
    const DofLayout Lg(ctx, SpaceKind::Grad), Lc(ctx, SpaceKind::Curl), Ld(ctx, SpaceKind::Div);
    const FeSpace lag(mesh, FeFamily::Lagrange, l, gamma), ne(mesh, FeFamily::Nedelec, l, gamma),
        rt(mesh, FeFamily::RaviartThomas, l, gamma);
    const auto q = random_member(lag, 3), v = random_member(ne, 4);
    const Eigen::VectorXd Iq = interpolate_fe(Lg, lag, q), Iv = interpolate_fe(Lc, ne, v);
    const Eigen::VectorXd gq = interpolate_fe(Lc, ne, differential_matrix(lag, ne) * q);
    const Eigen::VectorXd cv = interpolate_fe(Ld, rt, differential_matrix(ne, rt) * v);
    EXPECT_LE((gq - ops.uG() * Iq).norm(), 1e-10 * gq.norm()) << k;
    EXPECT_LE((cv - ops.uC() * Iv).norm(), 1e-10 * cv.norm()) << k;
    // Members vanishing on Gamma interpolate into the masked subspace
    for (Index i : masked_dofs(Lc, gamma)) {
      EXPECT_LE(std::abs(Iv(i)), 1e-12);
    }
  }
}

TEST(FeInterpolation, RejectsNonconformingMembers) {
  const Mesh mesh = gen_tet_cube(1);
  const DdrContext ctx(mesh, 0);
  const FeSpace lag(mesh, FeFamily::Lagrange, 1, Gamma::none(mesh));
  std::srand(5);
  const Eigen::VectorXd x = Eigen::VectorXd::Random(lag.broken_dim());
  EXPECT_GT(lag.constraint_residual(x), 1e-3);
  EXPECT_THROW(interpolate_fe(DofLayout(ctx, SpaceKind::Grad), lag, x), Error);
  EXPECT_THROW(interpolation_matrix(DofLayout(ctx, SpaceKind::Curl), lag), Error);
}

TEST(FeInterpolation, ProjectionMatricesReproducePolynomials) {
  const Mesh mesh = gen_tet_cube(1);
  const DdrContext ctx(mesh, 1);
  const FeSpace lag(mesh, FeFamily::Lagrange, 2, Gamma::none(mesh));
  auto q = [](const Vec3& x) { return x.x() * x.y() - 0.5 * x.z(); };
  const Eigen::VectorXd x = lag.project(sampler(q));
  const Eigen::VectorXd cells = cell_projection_matrix(ctx, lag) * x;
  const Eigen::VectorXd faces = face_projection_matrix(ctx, lag) * x;
  Index row = 0;
  for (Index t = 0; t < mesh.n_cells(); ++t) {
    const auto& d = ctx.cell(t);
    Eigen::MatrixXd vals(d.rule.size(), 1);
    for (std::size_t i = 0; i < d.rule.size(); ++i) {
      vals(i, 0) = q(d.rule[i].x);
    }
    EXPECT_LE((cells.segment(row, d.p_k.size()) - project(d.p_k, d.rule, vals)).norm(), 1e-12);
    row += d.p_k.size();
  }
  EXPECT_EQ(row, cells.size());
  EXPECT_EQ(faces.size(), mesh.n_faces() * ctx.face(0).p_k.size());
}
