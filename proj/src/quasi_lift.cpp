#include <ddr/quasi_lift.hpp>

#include <cmath>

namespace ddr {

namespace {

Eigen::VectorXd weights(const QuadratureRule& rule) {
  Eigen::VectorXd w(rule.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    w(q) = rule[q].w;
  }
  return w;
}

Eigen::MatrixXd sample(const QuadratureRule& rule, const ScalarSampler& f) {
  Eigen::MatrixXd v(rule.size(), 1);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    v(q, 0) = f(rule[q].x, rule[q].simplex);
  }
  return v;
}

Eigen::MatrixXd sample(const QuadratureRule& rule, const VectorSampler& f) {
  Eigen::MatrixXd v(rule.size(), 3);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    v.row(q) = f(rule[q].x, rule[q].simplex).transpose();
  }
  return v;
}

/// Cartesian values (npts x ncomp) of the member of `space` with coordinates c
Eigen::MatrixXd member_values(const FieldValues& fv, const Eigen::VectorXd& c) {
  Eigen::MatrixXd v(fv.points(), fv.ncomp);
  for (int comp = 0; comp < fv.ncomp; ++comp) {
    v.col(comp) = fv.comp[comp] * c;
  }
  return v;
}

/// Integral of |f|^2 over the rule
double integrate_square(const Eigen::MatrixXd& f, const QuadratureRule& rule) {
  return weights(rule).dot(f.rowwise().squaredNorm());
}

/// |f - lproj f|^2 for an orthonormal family
double projection_error(const PolySet& space, const QuadratureRule& rule, const Eigen::MatrixXd& f) {
  const Eigen::VectorXd c = project(space, rule, f);
  return integrate_square(f - member_values(space.evaluate(rule), c), rule);
}

/// Zero right-hand side for the conformity rows followed by `data`
Eigen::VectorXd with_conformity(const FeSpace& fe, const Eigen::VectorXd& data) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(fe.constraints().rows() + data.size());
  r.tail(data.size()) = data;
  return r;
}

SparseMatrix identity(Index n) {
  SparseMatrix I(n, n);
  I.setIdentity();
  return I;
}

} // namespace

//------------------------------------------------------------------------------
// QuasiInterpolator
//------------------------------------------------------------------------------

QuasiInterpolator::QuasiInterpolator(const DdrOperators& ops, int ell, const Gamma& gamma, ConstrainedOptions options)
    : ops_(ops), ell_(ell), gamma_(gamma), options_(options), lag_(ops.mesh(), FeFamily::Lagrange, ell, gamma),
      ne_(ops.mesh(), FeFamily::Nedelec, ell, gamma), rt_(ops.mesh(), FeFamily::RaviartThomas, ell, gamma),
      p_(ops.mesh(), FeFamily::Broken, ell - 1, gamma) {
  if (ell < ops.k() + 1) {
    throw Error("QuasiInterpolator: degree " + std::to_string(ell) + " below k + 1 = " + std::to_string(ops.k() + 1));
  }
  grad_ = differential_matrix(lag_, ne_);
  curl_ = differential_matrix(ne_, rt_);
  div_ = differential_matrix(rt_, p_);
  // With Gamma the whole boundary the divergence of RT^l_G has zero mean
  if (gamma.is_all(ops.mesh())) {
    constant_ = p_.project(sampler([](const Vec3&) { return 1.0; }));
  }
}

QuasiInterpolator::~QuasiInterpolator() = default;

const ConstrainedSolver& QuasiInterpolator::solver(int stage) const {
  if (!solvers_[stage]) {
    const FeSpace& fe = stage == 0 ? rt_ : stage == 1 ? ne_ : lag_;
    const SparseMatrix& D = stage == 0 ? div_ : stage == 1 ? curl_ : grad_;
    solvers_[stage] = std::make_unique<ConstrainedSolver>(identity(fe.broken_dim()),
                                                          vstack({&fe.constraints(), &D}), options_);
  }
  return *solvers_[stage];
}

Eigen::VectorXd QuasiInterpolator::rt_stage(const Eigen::VectorXd& w, const Eigen::VectorXd& div_w) const {
  Eigen::VectorXd d = div_w;
  if (constant_.size() > 0) {
    d -= constant_ * (constant_.dot(d) / constant_.squaredNorm());
  }
  const auto res = solver(0).solve(w, with_conformity(rt_, d), "Raviart-Thomas quasi-interpolation");
  worst_feasibility_ = std::max(worst_feasibility_, res.feasibility);
  return res.x;
}

Eigen::VectorXd QuasiInterpolator::ne_stage(const Eigen::VectorXd& v, const Eigen::VectorXd& curl_rt) const {
  const auto res = solver(1).solve(v, with_conformity(ne_, curl_rt), "Nedelec quasi-interpolation");
  worst_feasibility_ = std::max(worst_feasibility_, res.feasibility);
  return res.x;
}

Eigen::VectorXd QuasiInterpolator::lag_stage(const Eigen::VectorXd& q, const Eigen::VectorXd& grad_ne) const {
  const auto res = solver(2).solve(q, with_conformity(lag_, grad_ne), "Lagrange quasi-interpolation");
  worst_feasibility_ = std::max(worst_feasibility_, res.feasibility);
  return res.x;
}

Eigen::VectorXd QuasiInterpolator::fe_div(const VectorInput& w) const {
  if (!w.value || !w.div) {
    throw Error("QuasiInterpolator::fe_div: field and divergence required");
  }
  return rt_stage(rt_.project(w.value), p_.project(w.div));
}

Eigen::VectorXd QuasiInterpolator::fe_curl(const VectorInput& v) const {
  if (!v.value || !v.curl) {
    throw Error("QuasiInterpolator::fe_curl: field and curl required");
  }
  const Eigen::VectorXd c = rt_stage(rt_.project(v.curl), Eigen::VectorXd::Zero(p_.broken_dim()));
  return ne_stage(ne_.project(v.value), c);
}

Eigen::VectorXd QuasiInterpolator::fe_grad(const ScalarInput& q) const {
  if (!q.value || !q.grad) {
    throw Error("QuasiInterpolator::fe_grad: field and gradient required");
  }
  const Eigen::VectorXd g = ne_stage(ne_.project(q.grad), Eigen::VectorXd::Zero(rt_.broken_dim()));
  return lag_stage(lag_.project(q.value), g);
}

Eigen::VectorXd QuasiInterpolator::fe_div_member(const Eigen::VectorXd& x) const {
  return rt_stage(x, div_ * x);
}

Eigen::VectorXd QuasiInterpolator::fe_curl_member(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd c = rt_stage(curl_ * x, Eigen::VectorXd::Zero(p_.broken_dim()));
  return ne_stage(x, c);
}

Eigen::VectorXd QuasiInterpolator::fe_grad_member(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd g = ne_stage(grad_ * x, Eigen::VectorXd::Zero(rt_.broken_dim()));
  return lag_stage(x, g);
}

const SparseMatrix& QuasiInterpolator::interpolation(SpaceKind space) const {
  const int i = static_cast<int>(space);
  if (!interp_[i]) {
    const FeSpace& fe = space == SpaceKind::Grad ? lag_ : space == SpaceKind::Curl ? ne_ : rt_;
    interp_[i] = std::make_unique<SparseMatrix>(interpolation_matrix(ops_.layout(space), fe));
  }
  return *interp_[i];
}

//------------------------------------------------------------------------------
// Lifting
//------------------------------------------------------------------------------

Lifting::Lifting(const DdrOperators& ops, const Gamma& gamma, ConstrainedOptions options)
    : ops_(ops), ell_(ops.k() + 3), gamma_(gamma), options_(options),
      lag_(ops.mesh(), FeFamily::Lagrange, ops.k() + 3, gamma), ne_(ops.mesh(), FeFamily::Nedelec, ops.k() + 3, gamma),
      rt_(ops.mesh(), FeFamily::RaviartThomas, ops.k() + 3, gamma) {
  curl_ = differential_matrix(ne_, rt_);
  grad_ = differential_matrix(lag_, ne_);
}

Lifting::~Lifting() = default;

Eigen::VectorXd Lifting::curl_potentials(const Eigen::VectorXd& v) const {
  const Mesh& m = ops_.mesh();
  const Index n = ops_.context().cell(0).vec_k.size();
  Eigen::VectorXd out(m.n_cells() * n);
  for (Index t = 0; t < m.n_cells(); ++t) {
    out.segment(t * n, n) = ops_.potential(SpaceKind::Curl, t).apply(v);
  }
  return out;
}

Eigen::VectorXd Lifting::face_traces(const Eigen::VectorXd& q) const {
  const DdrContext& ctx = ops_.context();
  std::vector<Eigen::VectorXd> parts;
  Index size = 0;
  for (Index f = 0; f < ctx.mesh().n_faces(); ++f) {
    const auto& d = ctx.face(f);
    const Eigen::VectorXd c = ops_.face_trace(f).apply(q);
    parts.push_back(project(d.p_k, d.rule, member_values(d.p_kp1.evaluate(d.rule), c)));
    size += parts.back().size();
  }
  Eigen::VectorXd out(size);
  Index row = 0;
  for (const auto& p : parts) {
    out.segment(row, p.size()) = p;
    row += p.size();
  }
  return out;
}

Eigen::VectorXd Lifting::curl(const Eigen::VectorXd& v) const {
  if (!curl_solver_) {
    const SparseMatrix M = identity(ne_.broken_dim()) + SparseMatrix(curl_.transpose() * curl_);
    const SparseMatrix I = interpolation_matrix(ops_.layout(SpaceKind::Curl), ne_);
    const SparseMatrix P = cell_projection_matrix(ops_.context(), ne_);
    curl_solver_ = std::make_unique<ConstrainedSolver>(M, vstack({&ne_.constraints(), &I, &P}), options_);
  }
  const Eigen::VectorXd pots = curl_potentials(v);
  Eigen::VectorXd rhs(v.size() + pots.size());
  rhs << v, pots;
  const auto res = curl_solver_->solve(Eigen::VectorXd::Zero(ne_.broken_dim()), with_conformity(ne_, rhs),
                                       "curl lifting");
  worst_feasibility_ = std::max(worst_feasibility_, res.feasibility);
  return res.x;
}

Eigen::VectorXd Lifting::grad(const Eigen::VectorXd& q) const {
  if (!grad_solver_) {
    const SparseMatrix M = identity(lag_.broken_dim()) + SparseMatrix(grad_.transpose() * grad_);
    const SparseMatrix I = interpolation_matrix(ops_.layout(SpaceKind::Grad), lag_);
    const SparseMatrix P = face_projection_matrix(ops_.context(), lag_);
    grad_solver_ = std::make_unique<ConstrainedSolver>(M, vstack({&lag_.constraints(), &I, &P}), options_);
  }
  const Eigen::VectorXd traces = face_traces(q);
  Eigen::VectorXd rhs(q.size() + traces.size());
  rhs << q, traces;
  const auto res = grad_solver_->solve(Eigen::VectorXd::Zero(lag_.broken_dim()), with_conformity(lag_, rhs),
                                       "grad lifting");
  worst_feasibility_ = std::max(worst_feasibility_, res.feasibility);
  return res.x;
}

//------------------------------------------------------------------------------
// Approximation measures
//------------------------------------------------------------------------------

namespace {

/// Patch sums of per-cell errors a (field) and b (differential), weighted by h_T^2 on b
double patch_measure(const Mesh& mesh, const std::vector<double>& a, const std::vector<double>& b,
                     Index only_cell = -1) {
  double total = 0.0;
  for (Index t = 0; t < mesh.n_cells(); ++t) {
    if (only_cell >= 0 && t != only_cell) {
      continue;
    }
    const double h2 = std::pow(mesh.cells()[t].diameter, 2);
    for (Index s : polytopal_patch(mesh, t).members) {
      total += a[s] + h2 * b[s];
    }
  }
  return std::sqrt(total);
}

void vector_errors(const DdrContext& ctx, SpaceKind space, const VectorInput& v, std::vector<double>& a,
                   std::vector<double>& b) {
  if (space == SpaceKind::Grad) {
    throw Error("appr: vector input for the grad space");
  }
  const Index nc = ctx.mesh().n_cells();
  a.assign(nc, 0.0);
  b.assign(nc, 0.0);
  for (Index t = 0; t < nc; ++t) {
    const auto& d = ctx.cell(t);
    a[t] = projection_error(d.vec_k, d.rule, sample(d.rule, v.value));
    if (space == SpaceKind::Curl) {
      b[t] = projection_error(d.vec_k, d.rule, sample(d.rule, v.curl));
    } else {
      b[t] = projection_error(d.p_k, d.rule, sample(d.rule, v.div));
    }
  }
}

} // namespace

double appr(const DdrContext& ctx, SpaceKind space, const ScalarInput& q) {
  if (space != SpaceKind::Grad) {
    throw Error("appr: scalar input for a vector space");
  }
  const Index nc = ctx.mesh().n_cells();
  std::vector<double> a(nc), b(nc);
  for (Index t = 0; t < nc; ++t) {
    const auto& d = ctx.cell(t);
    a[t] = projection_error(d.p_kp1, d.rule, sample(d.rule, q.value));
    b[t] = projection_error(vector_poly(*d.basis, ctx.k() + 1), d.rule, sample(d.rule, q.grad));
  }
  return patch_measure(ctx.mesh(), a, b);
}

double appr(const DdrContext& ctx, SpaceKind space, const VectorInput& v) {
  std::vector<double> a, b;
  vector_errors(ctx, space, v, a, b);
  return patch_measure(ctx.mesh(), a, b);
}

double appr_cell(const DdrContext& ctx, SpaceKind space, const VectorInput& v, Index cell) {
  std::vector<double> a, b;
  vector_errors(ctx, space, v, a, b);
  return patch_measure(ctx.mesh(), a, b, cell);
}

double bppr_grad(const DdrContext& ctx, const ScalarInput& q) {
  const int k = ctx.k();
  double total = 0.0;
  for (Index t = 0; t < ctx.mesh().n_cells(); ++t) {
    const auto& d = ctx.cell(t);
    const PolySet s = scalar_poly(*d.basis, k + 1);
    PolySet nonconstant{s.basis, 1, s.coef.bottomRows(s.size() - 1)};
    const PolySet G = orthonormal_span(grad(nonconstant), s.size() - 1, "gradients");
    total += projection_error(G, d.rule, sample(d.rule, q.grad));
  }
  return std::sqrt(total);
}

double bppr(const DdrContext& ctx, SpaceKind space, const VectorInput& v) {
  if (space == SpaceKind::Grad) {
    throw Error("bppr: use bppr_grad for the grad space");
  }
  const int k = ctx.k();
  double total = 0.0;
  for (Index t = 0; t < ctx.mesh().n_cells(); ++t) {
    const auto& d = ctx.cell(t);
    const PolySet Z = space == SpaceKind::Curl ? ne_space(*d.basis, k + 1) : rt_space(*d.basis, k + 1);
    const PolySet dZ = space == SpaceKind::Curl ? curl(Z) : div(Z);
    const FieldValues zv = Z.evaluate(d.rule), dzv = dZ.evaluate(d.rule);
    const Eigen::MatrixXd f = sample(d.rule, v.value);
    const Eigen::MatrixXd df = space == SpaceKind::Curl ? sample(d.rule, v.curl) : sample(d.rule, v.div);
    // Graph-norm least squares; Z is orthonormal in L2
    const Eigen::MatrixXd G =
        Eigen::MatrixXd::Identity(Z.size(), Z.size()) + integrate_products(dzv, dzv, d.rule);
    const Eigen::VectorXd rhs = integrate_against(zv, f, d.rule) + integrate_against(dzv, df, d.rule);
    const Eigen::VectorXd c = G.ldlt().solve(rhs);
    total += integrate_square(f - member_values(zv, c), d.rule) + integrate_square(df - member_values(dzv, c), d.rule);
  }
  return std::sqrt(total);
}

namespace {

/// Copy of a face rule whose nodes carry the face index in place of the simplex hint
QuadratureRule face_nodes(QuadratureRule rule, Index face) {
  for (auto& node : rule) {
    node.simplex = face;
  }
  return rule;
}

} // namespace

std::vector<Index> complement_faces(const Mesh& mesh, const Gamma& gamma) {
  std::vector<Index> out;
  for (Index f = 0; f < mesh.n_faces(); ++f) {
    if (mesh.faces()[f].cells.size() == 1 && !gamma.face[f]) {
      out.push_back(f);
    }
  }
  return out;
}

double tppr(const DdrContext& ctx, const Gamma& gamma, const ScalarSampler& xi) {
  double total = 0.0;
  for (Index f : complement_faces(ctx.mesh(), gamma)) {
    const auto& d = ctx.face(f);
    total += projection_error(d.p_k, d.rule, sample(face_nodes(d.rule, f), xi));
  }
  return std::sqrt(total);
}

double tppr_div(const DdrContext& ctx, const Gamma& gamma, const VectorSampler& zeta,
                const std::function<double(Index face)>& alpha) {
  double total = 0.0;
  for (Index f : complement_faces(ctx.mesh(), gamma)) {
    const auto& d = ctx.face(f);
    total += projection_error(rt_space(*d.basis, ctx.k() + 1), d.rule, sample(face_nodes(d.rule, f), zeta)) / alpha(f);
  }
  return std::sqrt(total);
}

} // namespace ddr
