#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <ddr/fields.hpp>

using namespace ddr;

namespace {

constexpr double pi = std::numbers::pi;

/// Dense orthonormal basis of the conforming subspace
Eigen::MatrixXd conforming_basis(const FeSpace& fe) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu{Eigen::MatrixXd(fe.constraints())};
  lu.setThreshold(1e-10);
  return lu.kernel();
}

Eigen::VectorXd random_member(const FeSpace& fe, unsigned seed) {
  std::srand(seed);
  const Eigen::MatrixXd B = conforming_basis(fe);
  return B * Eigen::VectorXd::Random(B.cols());
}

/// lproj^k_{T_h} of a scalar field with a high-degree rule on each cell's simplices
Eigen::VectorXd accurate_cell_projection(const DdrContext& ctx, const ScalarSampler& f) {
  const Mesh& m = ctx.mesh();
  const Index n = ctx.cell(0).p_k.size();
  Eigen::VectorXd out(m.n_cells() * n);
  for (Index t = 0; t < m.n_cells(); ++t) {
    QuadratureRule rule;
    for (Index s : m.cells()[t].simplices) {
      const auto& S = m.simplices()[s];
      append(rule, tetrahedron_rule(m.points()[S.points[0]], m.points()[S.points[1]], m.points()[S.points[2]],
                                    m.points()[S.points[3]], 20, s));
    }
    Eigen::MatrixXd v(rule.size(), 1);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      v(q, 0) = f(rule[q].x, rule[q].simplex);
    }
    out.segment(t * n, n) = project(ctx.cell(t).p_k, rule, v);
  }
  return out;
}

double relative(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-300});
}

} // namespace

//------------------------------------------------------------------------------
// Constrained solver
//------------------------------------------------------------------------------

TEST(ConstrainedSolver, MatchesDenseKktWithRedundantRows) {
  // Oracle: x = x_p + N (N^T M N)^{-1} N^T (b - M x_p) with a dense null-space basis N
  std::srand(3);
  const Index n = 12;
  Eigen::MatrixXd B = Eigen::MatrixXd::Random(n, n);
  const Eigen::MatrixXd Md = B * B.transpose() + Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd Ad = Eigen::MatrixXd::Random(5, n);
  Ad.row(4) = 2.0 * Ad.row(0) - Ad.row(1);
  const Eigen::VectorXd b = Eigen::VectorXd::Random(n);
  const Eigen::VectorXd xr = Eigen::VectorXd::Random(n);
  const Eigen::VectorXd r = Ad * xr;
  const Eigen::MatrixXd N = Eigen::FullPivLU<Eigen::MatrixXd>(Ad).kernel();
  const Eigen::VectorXd xo = xr + N * (N.transpose() * Md * N).ldlt().solve(N.transpose() * (b - Md * xr));

  const ConstrainedSolver solver(Md.sparseView(), Ad.sparseView());
  const auto res = solver.solve(b, r);
  EXPECT_TRUE(res.converged);
  EXPECT_LE((res.x - xo).norm(), 1e-10 * xo.norm());
  EXPECT_LE((Ad * res.x - r).norm(), 1e-10 * r.norm());
  // Reused factorization on a second right-hand side
  const auto res2 = solver.solve(2.0 * b, 2.0 * r);
  EXPECT_LE((res2.x - 2.0 * xo).norm(), 1e-10 * xo.norm());
}

TEST(ConstrainedSolver, ReportsInfeasibleData) {
  Eigen::MatrixXd Ad(2, 3);
  Ad << 1, 0, 0, 2, 0, 0;
  const ConstrainedSolver solver(Eigen::MatrixXd::Identity(3, 3).sparseView(), Ad.sparseView());
  const auto res = solver.try_solve(Eigen::VectorXd::Zero(3), Eigen::Vector2d(1.0, 1.0));
  EXPECT_FALSE(res.converged);
  EXPECT_GT(res.feasibility, 0.1);
  EXPECT_THROW(solver.solve(Eigen::VectorXd::Zero(3), Eigen::Vector2d(1.0, 1.0), "test"), Error);
  EXPECT_TRUE(solver.solve(Eigen::VectorXd::Zero(3), Eigen::Vector2d(1.0, 2.0)).converged);
}

//------------------------------------------------------------------------------
// Manufactured fields
//------------------------------------------------------------------------------

TEST(Fields, DerivativesMatchFiniteDifferences) {
  const VectorField v = manufactured_curl_field(Compatibility::All);
  const ScalarField q = manufactured_scalar(Compatibility::Xmin);
  const Vec3 x(0.3, 0.61, 0.27);
  const double e = 1e-5;
  Mat3 J;
  Vec3 g;
  for (int j = 0; j < 3; ++j) {
    const Vec3 d = e * Vec3::Unit(j);
    J.col(j) = (v(x + d) - v(x - d)) / (2 * e);
    g(j) = (q(x + d) - q(x - d)) / (2 * e);
  }
  EXPECT_LE((J - v.jacobian(x)).norm(), 1e-8);
  EXPECT_LE((g - q.gradient()(x)).norm(), 1e-8);
  const Vec3 c(J(2, 1) - J(1, 2), J(0, 2) - J(2, 0), J(1, 0) - J(0, 1));
  EXPECT_LE((c - v.curl()(x)).norm(), 1e-8);
  EXPECT_NEAR(J.trace(), v.div()(x), 1e-8);
  EXPECT_LE(v.curl().div()(x), 1e-12);
  EXPECT_LE(q.gradient().curl()(x).norm(), 1e-12);
}

TEST(Fields, CompatibleTracesVanish) {
  const ScalarField q = manufactured_scalar(Compatibility::All);
  const VectorField v = manufactured_curl_field(Compatibility::All);
  const VectorField w = manufactured_div_field(Compatibility::Xmin);
  EXPECT_EQ(q(Vec3(0.2, 1.0, 0.4)), 0.0);
  EXPECT_LE(v(Vec3(0.3, 0.0, 0.7)).cross(Vec3::UnitY()).norm(), 1e-15);
  EXPECT_EQ(w(Vec3(0.0, 0.3, 0.9)).x(), 0.0);
  EXPECT_NE(w(Vec3(1.0, 0.3, 0.9)).x(), 0.0);
}

//------------------------------------------------------------------------------
// Quasi-interpolators
//------------------------------------------------------------------------------

class CochainDiagram : public ::testing::TestWithParam<std::tuple<int, std::string>> {};

TEST_P(CochainDiagram, CommutesOnSmoothFields) {
  const auto [k, gname] = GetParam();
  const Mesh mesh = gen_tet_cube(2);
  const Gamma gamma = Gamma::parse(mesh, gname);
  const Compatibility c = compatibility_for(mesh, gamma);
  const DdrContext ctx(mesh, k);
  const DdrOperators ops(ctx);
  const QuasiInterpolator qi(ops, k + 1, gamma);
  const ScalarField q = manufactured_scalar(c);
  const VectorField v = manufactured_curl_field(c);
  const VectorField w = manufactured_div_field(c);

  const Eigen::VectorXd qq = qi.ddr_grad(q.input());
  EXPECT_LE(relative(ops.uG() * qq, qi.ddr_curl(q.gradient().input())), 1e-8);
  const Eigen::VectorXd qv = qi.ddr_curl(v.input());
  EXPECT_LE(relative(ops.uC() * qv, qi.ddr_div(v.curl().input())), 1e-8);
  const Eigen::VectorXd qw = qi.ddr_div(w.input());
  EXPECT_LE(relative(ops.D() * qw, accurate_cell_projection(ctx, w.div().sampler())), 1e-8);
  // Outputs lie in the masked subspaces
  for (auto [space, z] : {std::pair{SpaceKind::Grad, qq}, {SpaceKind::Curl, qv}, {SpaceKind::Div, qw}}) {
    double worst = 0.0;
    for (Index i : masked_dofs(ops.layout(space), gamma)) {
      worst = std::max(worst, std::abs(z(i)));
    }
    EXPECT_LE(worst, 1e-10 * z.norm()) << to_string(space);
  }
  EXPECT_LE(qi.worst_feasibility(), 1e-11);
}

INSTANTIATE_TEST_SUITE_P(QuasiInterpolator, CochainDiagram,
                         ::testing::Combine(::testing::Values(0, 1), ::testing::Values("none", "all", "xmin")),
                         [](const auto& info) {
                           return "k" + std::to_string(std::get<0>(info.param)) + "_" + std::get<1>(info.param);
                         });

TEST(QuasiInterpolator, ProjectionPropertyOnConformingMembers) {
  const Mesh mesh = gen_tet_cube(1);
  for (const char* gname : {"none", "xmin", "all"}) {
    const Gamma gamma = Gamma::parse(mesh, gname);
    const DdrContext ctx(mesh, 0);
    const DdrOperators ops(ctx);
    const QuasiInterpolator qi(ops, 2, gamma);
    const auto q = random_member(qi.lagrange(), 1), v = random_member(qi.nedelec(), 2),
               w = random_member(qi.raviart_thomas(), 3);
    EXPECT_LE(relative(qi.fe_grad_member(q), q), 1e-10) << gname;
    EXPECT_LE(relative(qi.fe_curl_member(v), v), 1e-10) << gname;
    EXPECT_LE(relative(qi.fe_div_member(w), w), 1e-10) << gname;
  }
}

TEST(QuasiInterpolator, ReproducesGlobalPolynomials) {
  const Mesh mesh = gen_tet_cube(2);
  const Gamma none = Gamma::none(mesh);
  using F = Function1D;
  for (int k : {0, 1}) {
    const DdrContext ctx(mesh, k);
    const DdrOperators ops(ctx);
    const QuasiInterpolator qi(ops, k + 1, none);
    // Degree k + 1 scalar, degree k vector
    const ScalarField q = ScalarField::separable(1.0, F::polynomial({0.5, 1.0}), F::polynomial({1.0, k == 1 ? -2.0 : 0.0}),
                                                 F::constant(1.0)) +
                          ScalarField::separable(0.3, F::constant(1.0), F::constant(1.0), F::polynomial({1.0, 2.0}));
    const VectorField v({ScalarField::separable(1.0, F::constant(1.0), F::polynomial({2.0, k == 1 ? 1.0 : 0.0}),
                                                F::constant(1.0)),
                         ScalarField::separable(-1.0, F::constant(1.0), F::constant(1.0), F::constant(1.0)),
                         ScalarField::separable(0.5, F::polynomial({1.0, k == 1 ? 3.0 : 0.0}), F::constant(1.0),
                                                F::constant(1.0))});
    EXPECT_LE(relative(qi.ddr_grad(q.input()), interpolate_grad(ops.layout(SpaceKind::Grad), q.sampler())), 1e-10);
    EXPECT_LE(relative(qi.ddr_curl(v.input()), interpolate_curl(ops.layout(SpaceKind::Curl), v.sampler())), 1e-10);
    EXPECT_LE(relative(qi.ddr_div(v.input()), interpolate_div(ops.layout(SpaceKind::Div), v.sampler())), 1e-10);
  }
}

TEST(QuasiInterpolator, RejectsLowDegree) {
  const Mesh mesh = gen_tet_cube(1);
  const DdrContext ctx(mesh, 1);
  const DdrOperators ops(ctx);
  EXPECT_THROW(QuasiInterpolator(ops, 1, Gamma::none(mesh)), Error);
}

//------------------------------------------------------------------------------
// Liftings
//------------------------------------------------------------------------------

TEST(Lifting, CurlLiftingIsARightInverseOfTheQuasiInterpolator) {
  const Mesh mesh = gen_tet_cube(1);
  for (const char* gname : {"none", "all"}) {
    const Gamma gamma = Gamma::parse(mesh, gname);
    const DdrContext ctx(mesh, 0);
    const DdrOperators ops(ctx);
    const Lifting lift(ops, gamma);
    const QuasiInterpolator qi(ops, 3, gamma);
    const DofLayout& L = ops.layout(SpaceKind::Curl);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const Eigen::VectorXd v = random_dofs(L, seed, &gamma);
      const Eigen::VectorXd xi = lift.curl(v);
      EXPECT_LE(lift.nedelec().constraint_residual(xi), 1e-10);
      EXPECT_LE(relative(interpolation_matrix(L, lift.nedelec()) * xi, v), 1e-10) << gname;
      EXPECT_LE(relative(cell_projection_matrix(ctx, lift.nedelec()) * xi, lift.curl_potentials(v)), 1e-10);
      EXPECT_LE(relative(qi.interpolation(SpaceKind::Curl) * qi.fe_curl_member(xi), v), 1e-8) << gname;
    }
  }
}

TEST(Lifting, GradLiftingMatchesInterpolatesAndFaceTraces) {
  const Mesh mesh = gen_tet_cube(1);
  const Gamma gamma = Gamma::xmin(mesh);
  const DdrContext ctx(mesh, 0);
  const DdrOperators ops(ctx);
  const Lifting lift(ops, gamma);
  const Eigen::VectorXd q = random_dofs(ops.layout(SpaceKind::Grad), 5, &gamma);
  const Eigen::VectorXd xi = lift.grad(q);
  EXPECT_LE(relative(interpolation_matrix(ops.layout(SpaceKind::Grad), lift.lagrange()) * xi, q), 1e-10);
  EXPECT_LE(relative(face_projection_matrix(ctx, lift.lagrange()) * xi, lift.face_traces(q)), 1e-10);
}

TEST(Lifting, ReproducesConformingPolynomialPreimages) {
  // v = I_curl(p) for a constant p: p itself is feasible, and the minimizer interpolates to v
  const Mesh mesh = gen_tet_cube(1);
  const DdrContext ctx(mesh, 0);
  const DdrOperators ops(ctx);
  const Lifting lift(ops, Gamma::none(mesh));
  const DofLayout& L = ops.layout(SpaceKind::Curl);
  const Eigen::VectorXd v = interpolate_curl(L, sampler([](const Vec3&) { return Vec3(1.0, -2.0, 0.5); }));
  const Eigen::VectorXd xi = lift.curl(v);
  EXPECT_LE(relative(interpolation_matrix(L, lift.nedelec()) * xi, v), 1e-10);
  // Constant fields are curl-free and minimize the L2 norm among fields with the same cell averages
  const Vec3 p = lift.nedelec().vector_sampler(xi)(Vec3(0.3, 0.2, 0.7), -1);
  EXPECT_LE((p - Vec3(1.0, -2.0, 0.5)).norm(), 1e-8);
}

//------------------------------------------------------------------------------
// Approximation measures
//------------------------------------------------------------------------------

TEST(ApproxMeasures, VanishOnPolynomialsOfMatchingDegree) {
  const Mesh mesh = gen_tet_cube(2);
  using F = Function1D;
  for (int k : {0, 1}) {
    const DdrContext ctx(mesh, k);
    // Degree k + 1 scalar, degree k vector
    const ScalarField q = ScalarField::separable(2.0, F::polynomial({1.0, 1.0}), F::polynomial({1.0, k + 0.0}),
                                                 F::constant(1.0));
    const VectorField v({ScalarField::separable(1.0, F::polynomial({1.0, k + 0.0}), F::constant(1.0), F::constant(1.0)),
                         ScalarField::separable(2.0, F::constant(1.0), F::constant(1.0), F::constant(1.0)),
                         ScalarField::separable(1.0, F::constant(1.0), F::polynomial({0.0, k + 0.0}), F::constant(1.0))});
    EXPECT_LE(appr(ctx, SpaceKind::Grad, q.input()), 1e-12);
    EXPECT_LE(appr(ctx, SpaceKind::Curl, v.input()), 1e-12);
    EXPECT_LE(appr(ctx, SpaceKind::Div, v.input()), 1e-12);
    EXPECT_LE(bppr_grad(ctx, q.input()), 1e-12);
    EXPECT_LE(bppr(ctx, SpaceKind::Curl, v.input()), 1e-12);
    EXPECT_LE(bppr(ctx, SpaceKind::Div, v.input()), 1e-12);
    EXPECT_EQ(tppr(ctx, Gamma::xmin(mesh), sampler([](const Vec3&) { return 0.0; })), 0.0);
  }
}

TEST(ApproxMeasures, QuadraticGradientBestApproximationHalvesUnderRefinement) {
  using F = Function1D;
  const ScalarField q = ScalarField::separable(1.0, F::polynomial({0.0, 0.0, 1.0}), F::constant(1.0), F::constant(1.0));
  const Mesh m1 = gen_tet_cube(2), m2 = gen_tet_cube(4);
  const DdrContext c1(m1, 0), c2(m2, 0);
  const double b1 = bppr_grad(c1, q.input()), b2 = bppr_grad(c2, q.input());
  EXPECT_GT(b1, 1e-3);
  EXPECT_NEAR(std::log2(b1 / b2), 1.0, 1e-10);
}

TEST(ApproxMeasures, BoundaryProjectionErrorsAndWeights) {
  const Mesh mesh = gen_tet_cube(2);
  const DdrContext ctx(mesh, 0);
  const Gamma gamma = Gamma::xmin(mesh);
  EXPECT_EQ(complement_faces(mesh, gamma).size(), 5u * 8u);
  auto xi = sampler([](const Vec3& x) { return std::sin(pi * x.y()) + x.z(); });
  const double t = tppr(ctx, gamma, xi);
  EXPECT_GT(t, 0.0);
  EXPECT_EQ(tppr(ctx, Gamma::all(mesh), xi), 0.0);
  auto zeta = sampler([](const Vec3& x) { return Vec3(0.0, x.y() * x.y(), std::cos(x.x())); });
  const double one = tppr_div(ctx, gamma, zeta, [](Index) { return 1.0; });
  const double quarter = tppr_div(ctx, gamma, zeta, [](Index) { return 0.25; });
  EXPECT_NEAR(quarter, 2.0 * one, 1e-12 * one);
}
