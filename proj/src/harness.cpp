#include "harness_detail.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

namespace ddr {

//------------------------------------------------------------------------------
// Reports
//------------------------------------------------------------------------------

bool ExperimentReport::passed() const { return failures().empty(); }

std::vector<ReportRow> ExperimentReport::failures() const {
  std::vector<ReportRow> out;
  for (const auto& r : rows) {
    if (r.pass && !*r.pass) {
      out.push_back(r);
    }
  }
  return out;
}

void ExperimentReport::append(const ExperimentReport& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

namespace {

std::string number(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

std::string pass_text(const std::optional<bool>& pass) {
  if (!pass) {
    return "";
  }
  return *pass ? "pass" : "fail";
}

} // namespace

std::string ExperimentReport::csv() const {
  std::ostringstream os;
  os << "experiment,k,ell,mesh,n,h,metric,value,rate,pass\n";
  for (const auto& r : rows) {
    os << r.experiment << ',' << r.k << ',' << r.ell << ',' << r.mesh << ',' << (r.n ? std::to_string(*r.n) : "")
       << ',' << (r.h ? number(*r.h) : "") << ',' << r.metric << ',' << number(r.value) << ','
       << (r.rate ? number(*r.rate) : "") << ',' << pass_text(r.pass) << '\n';
  }
  return os.str();
}

std::string ExperimentReport::markdown() const {
  std::ostringstream os;
  os << "| experiment | k | ell | mesh | n | metric | value | gate | result |\n";
  os << "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    if (!r.pass) {
      continue;
    }
    os << "| " << r.experiment << " | " << r.k << " | " << r.ell << " | " << r.mesh << " | "
       << (r.n ? std::to_string(*r.n) : "all") << " | " << r.metric << " | " << number(r.value) << " | " << r.gate
       << " | " << pass_text(r.pass) << " |\n";
  }
  const auto failed = failures();
  os << "\n" << (failed.empty() ? "All gated criteria pass." : std::to_string(failed.size()) + " gated row(s) fail.")
     << "\n";
  return os.str();
}

double fit_rate(const std::vector<double>& h, const std::vector<double>& values) {
  if (h.size() != values.size()) {
    throw Error("fit_rate: sizes differ");
  }
  const std::size_t n = h.size();
  if (n < 3) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = n - 3; i < n; ++i) {
    if (!(h[i] > 0.0) || !(values[i] > 0.0)) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    const double x = std::log(h[i]), y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (3.0 * sxy - sx * sy) / (3.0 * sxx - sx * sx);
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) {
      continue;
    }
    try {
      const auto dash = tok.find('-', 1);
      if (dash == std::string::npos) {
        out.push_back(std::stoi(tok));
      } else {
        const int a = std::stoi(tok.substr(0, dash)), b = std::stoi(tok.substr(dash + 1));
        for (int i = a; i <= b; ++i) {
          out.push_back(i);
        }
      }
    } catch (const std::logic_error&) {
      throw Error("invalid integer list '" + text + "'");
    }
  }
  if (out.empty()) {
    throw Error("empty integer list '" + text + "'");
  }
  return out;
}

//------------------------------------------------------------------------------
// Shared helpers
//------------------------------------------------------------------------------

namespace detail {

Level make_level(const ExperimentConfig& config, int n) { return make_level(config, n, config.k); }

Level make_level(const ExperimentConfig& config, int n, int k) {
  Level l;
  l.n = n;
  l.mesh = std::make_unique<Mesh>(make_mesh(config.mesh, n, config.seed));
  l.ctx = std::make_unique<DdrContext>(*l.mesh, k);
  l.ops = std::make_unique<DdrOperators>(*l.ctx);
  l.gamma = Gamma::parse(*l.mesh, config.gamma);
  l.h = l.mesh->h_max();
  return l;
}

Mat3 constant_parameter(const Parameter& mu, const Mesh& mesh, const std::string& experiment) {
  const Mat3 m = mu.value(mesh.cells()[0].center, 0);
  for (Index t = 0; t < mesh.n_cells(); ++t) {
    if ((mu.value(mesh.cells()[t].center, t) - m).norm() > 1e-14 * m.norm()) {
      throw Error(experiment + ": needs a constant parameter (got '" + mu.name + "')");
    }
  }
  return m;
}

ReportBuilder::ReportBuilder(const ExperimentConfig& config, std::string experiment, int ell)
    : config_(config), experiment_(std::move(experiment)), ell_(ell) {}

void ReportBuilder::row(const Level& level, const std::string& metric, double value, std::optional<bool> pass,
                        const std::string& gate) {
  report_.rows.push_back({experiment_, config_.k, ell_, config_.mesh, level.n, level.h, metric, value, {}, pass, gate});
}

void ReportBuilder::aggregate(const std::string& metric, double value, std::optional<double> rate,
                              std::optional<bool> pass, const std::string& gate) {
  report_.rows.push_back({experiment_, config_.k, ell_, config_.mesh, {}, {}, metric, value, rate, pass, gate});
}

void ReportBuilder::regularity(const Level& level) {
  const RegularityReport r = regularity_report(*level.mesh, false);
  row(level, "mesh.h", r.h);
  row(level, "mesh.min_cell_inradius_ratio", r.min_cell_inradius_ratio);
  row(level, "mesh.min_face_inradius_ratio", r.min_face_inradius_ratio);
  row(level, "mesh.max_polytopal_patch", static_cast<double>(r.max_polytopal_patch));
}

void ReportBuilder::bounded_by(const std::string& metric, const std::vector<const Level*>& levels,
                               const std::vector<double>& values, double tol) {
  const std::string gate = "<= " + number(tol);
  double worst = 0.0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    row(*levels[i], metric, values[i], values[i] <= tol, gate);
    worst = std::max(worst, values[i]);
  }
  aggregate(metric + ".max", worst, {}, worst <= tol, gate);
}

void ReportBuilder::series(const std::string& metric, const std::vector<const Level*>& levels,
                           const std::vector<double>& values, std::optional<double> min_slope) {
  std::vector<double> hs;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    row(*levels[i], metric, values[i]);
    hs.push_back(levels[i]->h);
  }
  const double slope = fit_rate(hs, values);
  if (min_slope && levels.size() >= 3) {
    aggregate(metric + ".slope", slope, slope, slope >= *min_slope, ">= " + number(*min_slope));
  } else {
    aggregate(metric + ".slope", slope, slope, {}, "");
  }
}

void ReportBuilder::stable(const std::string& metric, const std::vector<const Level*>& levels,
                           const std::vector<double>& values, double max_ratio) {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    row(*levels[i], metric, values[i]);
  }
  const double r = max_over_min(values);
  aggregate(metric + ".max_over_min", r, {}, r <= max_ratio, "<= " + number(max_ratio));
}

CellField cell_field(const ScalarSampler& f) {
  return [f](const QuadratureRule& rule, Index) {
    Eigen::MatrixXd v(rule.size(), 1);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      v(q, 0) = f(rule[q].x, rule[q].simplex);
    }
    return v;
  };
}

CellField cell_field(const VectorSampler& f) {
  return [f](const QuadratureRule& rule, Index) {
    Eigen::MatrixXd v(rule.size(), 3);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      v.row(q) = f(rule[q].x, rule[q].simplex).transpose();
    }
    return v;
  };
}

CellField weighted(const Parameter& mu, const ScalarSampler& f) {
  return [mu, f](const QuadratureRule& rule, Index cell) {
    Eigen::MatrixXd v(rule.size(), 1);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      v(q, 0) = mu.scalar(rule[q].x, cell) * f(rule[q].x, rule[q].simplex);
    }
    return v;
  };
}

CellField weighted(const Parameter& mu, const VectorSampler& f) {
  return [mu, f](const QuadratureRule& rule, Index cell) {
    Eigen::MatrixXd v(rule.size(), 3);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      v.row(q) = (mu.value(rule[q].x, cell) * f(rule[q].x, rule[q].simplex)).transpose();
    }
    return v;
  };
}

Eigen::MatrixXd potential_values(const DdrOperators& ops, SpaceKind space, Index cell, const Eigen::VectorXd& z,
                                 const QuadratureRule& rule) {
  const FieldValues fv = ops.potential_space(space, cell).evaluate(rule);
  const Eigen::VectorXd c = ops.potential(space, cell).apply(z);
  Eigen::MatrixXd v(rule.size(), fv.ncomp);
  for (int a = 0; a < fv.ncomp; ++a) {
    v.col(a) = fv.comp[a] * c;
  }
  return v;
}

double potential_error(const DdrOperators& ops, SpaceKind space, const Eigen::VectorXd& z, const CellField& f) {
  double total = 0.0;
  for (Index t = 0; t < ops.mesh().n_cells(); ++t) {
    const auto& rule = ops.context().cell(t).rule;
    const Eigen::MatrixXd e = f(rule, t) - potential_values(ops, space, t, z, rule);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      total += rule[q].w * e.row(q).squaredNorm();
    }
  }
  return std::sqrt(total);
}

Eigen::VectorXd potential_load(const DdrOperators& ops, SpaceKind space, const CellField& f) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(ops.layout(space).size());
  for (Index t = 0; t < ops.mesh().n_cells(); ++t) {
    const auto& rule = ops.context().cell(t).rule;
    const Eigen::VectorXd c = integrate_against(ops.potential_space(space, t).evaluate(rule), f(rule, t), rule);
    const LocalMap& P = ops.potential(space, t);
    const Eigen::VectorXd local = P.matrix.transpose() * c;
    for (std::size_t i = 0; i < P.dofs.size(); ++i) {
      b(P.dofs[i]) += local(i);
    }
  }
  return b;
}

Eigen::VectorXd divergence_load(const DdrOperators& ops, const CellField& f) {
  Eigen::VectorXd c(ops.pk_size());
  const Index n = poly_dim(3, ops.k());
  for (Index t = 0; t < ops.mesh().n_cells(); ++t) {
    const auto& d = ops.context().cell(t);
    c.segment(t * n, n) = integrate_against(d.p_k.evaluate(d.rule), f(d.rule, t), d.rule);
  }
  return ops.D().transpose() * c;
}

Vec3 outer_normal(const Mesh& mesh, Index face) {
  const auto& F = mesh.faces()[face];
  if (F.cells.size() != 1) {
    throw Error("outer_normal: face " + std::to_string(face) + " is interior");
  }
  const auto& T = mesh.cells()[F.cells[0]];
  for (std::size_t i = 0; i < T.faces.size(); ++i) {
    if (T.faces[i] == face) {
      return T.face_orientations[i] * F.normal;
    }
  }
  throw Error("outer_normal: inconsistent face-cell incidence");
}

Eigen::VectorXd accurate_pk_projection(const DdrContext& ctx, const ScalarSampler& f, int degree) {
  const Mesh& m = ctx.mesh();
  const Index n = ctx.cell(0).p_k.size();
  Eigen::VectorXd out(m.n_cells() * n);
  for (Index t = 0; t < m.n_cells(); ++t) {
    QuadratureRule rule;
    for (Index s : m.cells()[t].simplices) {
      const auto& p = m.simplices()[s].points;
      append(rule, tetrahedron_rule(m.points()[p[0]], m.points()[p[1]], m.points()[p[2]], m.points()[p[3]], degree, s));
    }
    Eigen::MatrixXd v(rule.size(), 1);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      v(q, 0) = f(rule[q].x, rule[q].simplex);
    }
    out.segment(t * n, n) = project(ctx.cell(t).p_k, rule, v);
  }
  return out;
}

std::vector<Index> free_dofs(const DofLayout& layout, const Gamma& gamma) {
  std::vector<bool> masked(layout.size(), false);
  for (Index i : masked_dofs(layout, gamma)) {
    masked[i] = true;
  }
  std::vector<Index> out;
  for (Index i = 0; i < layout.size(); ++i) {
    if (!masked[i]) {
      out.push_back(i);
    }
  }
  return out;
}

double component_dual_norm(const DofLayout& layout, const Eigen::VectorXd& r, const Gamma& gamma) {
  const Eigen::VectorXd w = component_weights(layout);
  double total = 0.0;
  for (Index i : free_dofs(layout, gamma)) {
    total += r(i) * r(i) / w(i);
  }
  return std::sqrt(total);
}

double matrix_dual_norm(const SparseMatrix& G, const Eigen::VectorXd& r, const std::vector<Index>& free) {
  std::vector<Index> pos(G.rows(), -1);
  for (std::size_t i = 0; i < free.size(); ++i) {
    pos[free[i]] = static_cast<Index>(i);
  }
  std::vector<Triplet> trips;
  for (Index j = 0; j < G.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(G, j); it; ++it) {
      if (pos[it.row()] >= 0 && pos[it.col()] >= 0) {
        trips.emplace_back(pos[it.row()], pos[it.col()], it.value());
      }
    }
  }
  const Index n = static_cast<Index>(free.size());
  SparseMatrix Gf(n, n);
  Gf.setFromTriplets(trips.begin(), trips.end());
  Eigen::VectorXd rf(n);
  for (Index i = 0; i < n; ++i) {
    rf(i) = r(free[i]);
  }
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(Gf);
  if (ldlt.info() != Eigen::Success) {
    throw Error("matrix_dual_norm: factorization failed");
  }
  return std::sqrt(std::max(0.0, rf.dot(ldlt.solve(rf))));
}

SparseMatrix diagonal(const Eigen::VectorXd& d) {
  SparseMatrix D(d.size(), d.size());
  std::vector<Triplet> trips;
  for (Index i = 0; i < d.size(); ++i) {
    trips.emplace_back(i, i, d(i));
  }
  D.setFromTriplets(trips.begin(), trips.end());
  return D;
}

SparseMatrix graph_gram(const DofLayout& layout, const SparseMatrix& d, const DofLayout& target) {
  return diagonal(component_weights(layout)) + SparseMatrix(d.transpose() * diagonal(component_weights(target)) * d);
}

double max_over_min(const std::vector<double>& v) {
  if (v.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi / *lo;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) {
      return false;
    }
  }
  return true;
}

Eigen::VectorXd random_conforming_member(const FeSpace& fe, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd y(fe.broken_dim());
  for (Index i = 0; i < y.size(); ++i) {
    y(i) = unif(rng);
  }
  SparseMatrix I(y.size(), y.size());
  I.setIdentity();
  const ConstrainedSolver solver(I, fe.constraints());
  return solver.solve(y, Eigen::VectorXd::Zero(fe.constraints().rows()), "conforming member").x;
}

} // namespace detail

using namespace detail;

//------------------------------------------------------------------------------
// Complex verification
//------------------------------------------------------------------------------

namespace {

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double relative_max(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return max_abs(a - b) / std::max({max_abs(a), max_abs(b), 1e-300});
}

/// |a - b| relative to the larger of |a|, |b| and the scale of the data they derive from
double relative(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double scale = 0.0) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), scale, 1e-300});
}

double masked_fraction(const DofLayout& layout, const Eigen::VectorXd& z, const Gamma& gamma, double scale = 0.0) {
  double worst = 0.0;
  for (Index i : masked_dofs(layout, gamma)) {
    worst = std::max(worst, std::abs(z(i)));
  }
  return worst / std::max({max_abs(z), scale, 1e-300});
}

/// Largest pointwise error of the cell potentials of z against f on the cell rules, relative to max |f|
double potential_consistency(const DdrOperators& ops, SpaceKind space, const Eigen::VectorXd& z, const CellField& f) {
  double err = 0.0, scale = 0.0;
  for (Index t = 0; t < ops.mesh().n_cells(); ++t) {
    const auto& rule = ops.context().cell(t).rule;
    const Eigen::MatrixXd exact = f(rule, t);
    err = std::max(err, (exact - potential_values(ops, space, t, z, rule)).cwiseAbs().maxCoeff());
    scale = std::max(scale, exact.cwiseAbs().maxCoeff());
  }
  return err / std::max(scale, 1e-300);
}

/// |S z| relative to the entrywise scale |S| |z|; S is semidefinite so S z = 0 iff s(z, z) = 0
double stabilization_consistency(const DdrOperators& ops, SpaceKind space, const Eigen::VectorXd& z) {
  const SparseMatrix S = ops.stabilization_matrix(space);
  SparseMatrix absS = S.cwiseAbs();
  const double scale = (absS * z.cwiseAbs()).norm();
  return (S * z).norm() / std::max({scale, 1e-4 * z.norm(), 1e-300});
}

} // namespace

ExperimentReport run_verify_complex(const ExperimentConfig& config) {
  ReportBuilder out(config, "verify_complex", config.k);
  const int samples = config.samples > 0 ? config.samples : 20;
  const double tol = config.tol > 0.0 ? config.tol : 1e-10;
  const double rel_tol = config.tol > 0.0 ? 10.0 * config.tol : 1e-9;
  std::vector<Level> levels;
  std::vector<const Level*> ptr;
  std::vector<double> cgrad, ccurl, mgrad, mcurl, comm_g, comm_c, comm_d, pot_g, pot_c, pot_d, stab, rel;
  for (int n : config.n) {
    levels.push_back(make_level(config, n));
    const Level& L = levels.back();
    ptr.push_back(&L);
    out.regularity(L);
    const DdrOperators& ops = *L.ops;
    const DofLayout& Lg = ops.layout(SpaceKind::Grad);
    const DofLayout& Lc = ops.layout(SpaceKind::Curl);
    const DofLayout& Ld = ops.layout(SpaceKind::Div);
    const Gamma mask = L.gamma.empty() ? Gamma::xmin(*L.mesh) : L.gamma;

    double a = 0.0, b = 0.0, c = 0.0, d = 0.0, r = 0.0;
    for (int i = 0; i < samples; ++i) {
      const std::uint64_t s = config.seed * 1000 + 3 * i;
      const Eigen::VectorXd q = random_dofs(Lg, s + 1), v = random_dofs(Lc, s + 2), w = random_dofs(Ld, s + 3);
      a = std::max(a, component_norm(Ld, ops.uC() * (ops.uG() * q)) / component_norm(Lg, q));
      b = std::max(b, (ops.D() * (ops.uC() * v)).norm() / component_norm(Lc, v));
      const Eigen::VectorXd qm = random_dofs(Lg, s + 1, &mask), vm = random_dofs(Lc, s + 2, &mask);
      c = std::max(c, masked_fraction(Lc, ops.uG() * qm, mask));
      d = std::max(d, masked_fraction(Ld, ops.uC() * vm, mask));
      const RelationResiduals rr = relation_residuals(ops, q, v, w);
      r = std::max({r, rr.grad, rr.curl, rr.div});
    }
    cgrad.push_back(a);
    ccurl.push_back(b);
    mgrad.push_back(c);
    mcurl.push_back(d);
    rel.push_back(r);

    // Canonical commutation and consistency on global polynomials
    const int k = config.k;
    const ScalarField q = random_polynomial(k + 1, config.seed + 11);
    const VectorField v = random_polynomial_vector(k + 1, config.seed + 12);
    comm_g.push_back(relative_max(ops.uG() * interpolate_grad(Lg, q.sampler()), interpolate_curl(Lc, q.gradient().sampler())));
    comm_c.push_back(relative_max(ops.uC() * interpolate_curl(Lc, v.sampler()), interpolate_div(Ld, v.curl().sampler())));
    comm_d.push_back(relative_max(ops.D() * interpolate_div(Ld, v.sampler()), project_pk(*L.ctx, v.div().sampler())));

    const VectorField vk = random_polynomial_vector(k, config.seed + 13);
    const Eigen::VectorXd Iq = interpolate_grad(Lg, q.sampler());
    const Eigen::VectorXd Iv = interpolate_curl(Lc, vk.sampler());
    const Eigen::VectorXd Iw = interpolate_div(Ld, vk.sampler());
    pot_g.push_back(potential_consistency(ops, SpaceKind::Grad, Iq, cell_field(q.sampler())));
    pot_c.push_back(potential_consistency(ops, SpaceKind::Curl, Iv, cell_field(vk.sampler())));
    pot_d.push_back(potential_consistency(ops, SpaceKind::Div, Iw, cell_field(vk.sampler())));
    stab.push_back(std::max({stabilization_consistency(ops, SpaceKind::Grad, Iq),
                             stabilization_consistency(ops, SpaceKind::Curl, Iv),
                             stabilization_consistency(ops, SpaceKind::Div, Iw)}));
  }
  out.bounded_by("complex.curl_grad", ptr, cgrad, tol);
  out.bounded_by("complex.div_curl", ptr, ccurl, tol);
  out.bounded_by("subcomplex.grad", ptr, mgrad, tol);
  out.bounded_by("subcomplex.curl", ptr, mcurl, tol);
  out.bounded_by("commutation.grad", ptr, comm_g, tol);
  out.bounded_by("commutation.curl", ptr, comm_c, tol);
  out.bounded_by("commutation.div", ptr, comm_d, tol);
  out.bounded_by("consistency.potential_grad", ptr, pot_g, tol);
  out.bounded_by("consistency.potential_curl", ptr, pot_c, tol);
  out.bounded_by("consistency.potential_div", ptr, pot_d, tol);
  out.bounded_by("consistency.stabilization", ptr, stab, tol);
  out.bounded_by("relations", ptr, rel, rel_tol);
  return out.take();
}

//------------------------------------------------------------------------------
// Quasi-interpolator verification
//------------------------------------------------------------------------------

ExperimentReport run_verify_qi(const ExperimentConfig& config) {
  const int ell = config.degree();
  ReportBuilder out(config, "verify_qi", ell);
  const int samples = config.samples > 0 ? config.samples : 10;
  const double tol = config.tol > 0.0 ? config.tol : 1e-8;
  std::vector<Level> levels;
  levels.reserve(config.n.size());
  std::vector<const Level*> ptr;
  std::vector<double> sq_g, sq_c, sq_d, fe_g, fe_c, fe_d, masked, proj, left, pkh, feas;
  for (int n : config.n) {
    levels.push_back(make_level(config, n));
    const Level& L = levels.back();
    ptr.push_back(&L);
    out.regularity(L);
    const DdrOperators& ops = *L.ops;
    const QuasiInterpolator qi(ops, ell, L.gamma);
    const Compatibility c = compatibility_for(*L.mesh, L.gamma);
    const ScalarField q = manufactured_scalar(c);
    const VectorField v = manufactured_curl_field(c);
    const VectorField w = manufactured_div_field(c);

    // Finite element squares; the scales are the broken projections of the data, since the
    // conforming spaces may be trivial on coarse meshes with Gamma = boundary
    const Eigen::VectorXd fq = qi.fe_grad(q.input()), fv = qi.fe_curl(v.input()), fw = qi.fe_div(w.input());
    fe_g.push_back(relative(qi.grad_matrix() * fq, qi.fe_curl(q.gradient().input()),
                            qi.nedelec().project(q.gradient().sampler()).norm()));
    fe_c.push_back(relative(qi.curl_matrix() * fv, qi.fe_div(v.curl().input()),
                            qi.raviart_thomas().project(v.curl().sampler()).norm()));
    fe_d.push_back(relative(qi.div_matrix() * fw, qi.broken().project(w.div().sampler()),
                            qi.broken().project(w.div().sampler()).norm()));

    // DDR squares, scaled by the canonical interpolates
    const DofLayout& Lg = ops.layout(SpaceKind::Grad);
    const DofLayout& Lc = ops.layout(SpaceKind::Curl);
    const DofLayout& Ld = ops.layout(SpaceKind::Div);
    const Eigen::VectorXd qq = qi.interpolation(SpaceKind::Grad) * fq;
    const Eigen::VectorXd qv = qi.interpolation(SpaceKind::Curl) * fv;
    const Eigen::VectorXd qw = qi.interpolation(SpaceKind::Div) * fw;
    sq_g.push_back(relative(ops.uG() * qq, qi.ddr_curl(q.gradient().input()),
                            interpolate_curl(Lc, q.gradient().sampler()).norm()));
    sq_c.push_back(relative(ops.uC() * qv, qi.ddr_div(v.curl().input()), interpolate_div(Ld, v.curl().sampler()).norm()));
    sq_d.push_back(relative(ops.D() * qw, accurate_pk_projection(*L.ctx, w.div().sampler())));
    // All components may be masked (coarse mesh, Gamma = boundary): the floor is the L2 norm of the field
    masked.push_back(std::max({masked_fraction(Lg, qq, L.gamma, qi.lagrange().project(q.sampler()).norm()),
                               masked_fraction(Lc, qv, L.gamma, qi.nedelec().project(v.sampler()).norm()),
                               masked_fraction(Ld, qw, L.gamma, qi.raviart_thomas().project(w.sampler()).norm())}));

    // Projection property on conforming members
    double p = 0.0;
    for (std::uint64_t i = 0; i < 2; ++i) {
      const std::uint64_t s = config.seed * 1000 + 10 * n + 3 * i;
      const Eigen::VectorXd xq = random_conforming_member(qi.lagrange(), s + 1);
      const Eigen::VectorXd xv = random_conforming_member(qi.nedelec(), s + 2);
      const Eigen::VectorXd xw = random_conforming_member(qi.raviart_thomas(), s + 3);
      // Floors: the expected norm of the random broken vectors the members are drawn from
      auto floor = [](const FeSpace& fe) { return std::sqrt(fe.broken_dim() / 3.0); };
      p = std::max({p, relative(qi.fe_grad_member(xq), xq, floor(qi.lagrange())),
                    relative(qi.fe_curl_member(xv), xv, floor(qi.nedelec())),
                    relative(qi.fe_div_member(xw), xw, floor(qi.raviart_thomas()))});
    }
    proj.push_back(p);

    // Lifting left inverse with the degree k + 3 quasi-interpolator
    const Lifting lift(ops, L.gamma);
    const QuasiInterpolator qi3(ops, ops.k() + 3, L.gamma);
    const SparseMatrix Pk = cell_projection_matrix(*L.ctx, lift.nedelec());
    double li = 0.0, lp = 0.0;
    for (int i = 0; i < samples; ++i) {
      const Eigen::VectorXd vh = random_dofs(Lc, config.seed * 1000 + 101 + i, &L.gamma);
      const Eigen::VectorXd xi = lift.curl(vh);
      li = std::max(li, relative(qi3.interpolation(SpaceKind::Curl) * qi3.fe_curl_member(xi), vh));
      lp = std::max(lp, relative(Pk * xi, lift.curl_potentials(vh)));
    }
    left.push_back(li);
    pkh.push_back(lp);
    feas.push_back(std::max({qi.worst_feasibility(), qi3.worst_feasibility(), lift.worst_feasibility()}));
  }
  out.bounded_by("cochain.grad_curl", ptr, sq_g, tol);
  out.bounded_by("cochain.curl_div", ptr, sq_c, tol);
  out.bounded_by("cochain.div", ptr, sq_d, tol);
  out.bounded_by("fe_cochain.grad_curl", ptr, fe_g, tol);
  out.bounded_by("fe_cochain.curl_div", ptr, fe_c, tol);
  out.bounded_by("fe_cochain.div", ptr, fe_d, tol);
  out.bounded_by("masked_components", ptr, masked, 1e-10);
  out.bounded_by("projection_property", ptr, proj, 1e-10);
  out.bounded_by("lift.left_inverse", ptr, left, tol);
  out.bounded_by("lift.cell_projection", ptr, pkh, tol);
  for (std::size_t i = 0; i < ptr.size(); ++i) {
    out.row(*ptr[i], "solver.worst_feasibility", feas[i]);
  }
  return out.take();
}

//------------------------------------------------------------------------------
// Dispatch
//------------------------------------------------------------------------------

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"verify_complex", "rates_primal", "rates_adjoint", "constants",
                                              "compactness",    "verify_qi",    "boundedness"};
  return names;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  if (config.experiment == "verify_complex") {
    return run_verify_complex(config);
  }
  if (config.experiment == "rates_primal") {
    return run_rates_primal(config);
  }
  if (config.experiment == "rates_adjoint") {
    return run_rates_adjoint(config);
  }
  if (config.experiment == "constants") {
    return run_constants(config);
  }
  if (config.experiment == "compactness") {
    return run_compactness(config);
  }
  if (config.experiment == "verify_qi") {
    return run_verify_qi(config);
  }
  if (config.experiment == "boundedness") {
    return run_boundedness(config);
  }
  throw Error("unknown experiment '" + config.experiment + "'");
}

} // namespace ddr
