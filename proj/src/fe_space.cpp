#include <ddr/fe_space.hpp>

#include <ddr/constrained_solver.hpp>

#include <map>
#include <memory>

namespace ddr {

std::string to_string(FeFamily family) {
  switch (family) {
  case FeFamily::Lagrange:
    return "Lagrange";
  case FeFamily::Nedelec:
    return "Nedelec";
  case FeFamily::RaviartThomas:
    return "Raviart-Thomas";
  case FeFamily::Broken:
    return "broken";
  }
  return "?";
}

namespace {

std::array<Vec3, 4> simplex_points(const Mesh& m, Index s) {
  const auto& S = m.simplices()[s];
  return {m.points()[S.points[0]], m.points()[S.points[1]], m.points()[S.points[2]], m.points()[S.points[3]]};
}

Eigen::VectorXd weights(const QuadratureRule& rule) {
  Eigen::VectorXd w(rule.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    w(q) = rule[q].w;
  }
  return w;
}

/// Appends rows `row0 + i` of (left * V) to a triplet list
void add_rows(std::vector<Triplet>& trips, Index row0, const Eigen::MatrixXd& left, const SparseMatrix& V) {
  const SparseMatrix P = SparseMatrix(left.sparseView()) * V;
  for (Index j = 0; j < P.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(P, j); it; ++it) {
      trips.emplace_back(row0 + it.row(), it.col(), it.value());
    }
  }
}

/// Sum_c d_c V_c
SparseMatrix along(const SparseValues& v, const Vec3& d) {
  SparseMatrix out = d(0) * v.comp[0];
  for (int c = 1; c < 3; ++c) {
    out += d(c) * v.comp[c];
  }
  return out;
}

} // namespace

//------------------------------------------------------------------------------
// FeSpace
//------------------------------------------------------------------------------

FeSpace::FeSpace(const Mesh& mesh, FeFamily family, int degree, const Gamma& gamma)
    : mesh_(mesh), family_(family), degree_(degree), gamma_(gamma) {
  if (degree < (family == FeFamily::Broken ? 0 : 1)) {
    throw Error("FeSpace: degree " + std::to_string(degree) + " too low for " + to_string(family));
  }
  const Index ns = mesh.n_simplices();
  bases_.resize(ns);
  locals_.resize(ns);
  rules_.resize(ns);
  data_rules_.resize(ns);
  for (Index s = 0; s < ns; ++s) {
    const auto p = simplex_points(mesh, s);
    rules_[s] = tetrahedron_rule(p[0], p[1], p[2], p[3], 2 * degree + 4, s);
    data_rules_[s] = tetrahedron_rule(p[0], p[1], p[2], p[3], std::max(2 * degree + 4, data_quadrature_degree), s);
    double diam = 0.0;
    for (int a = 0; a < 4; ++a) {
      for (int b = a + 1; b < 4; ++b) {
        diam = std::max(diam, (p[a] - p[b]).norm());
      }
    }
    bases_[s] = std::make_unique<ScalarBasis>(Frame::cell((p[0] + p[1] + p[2] + p[3]) / 4.0, diam), degree, rules_[s]);
    switch (family) {
    case FeFamily::Lagrange:
    case FeFamily::Broken:
      locals_[s] = scalar_poly(*bases_[s], degree);
      break;
    case FeFamily::Nedelec:
      locals_[s] = ne_space(*bases_[s], degree);
      break;
    case FeFamily::RaviartThomas:
      locals_[s] = rt_space(*bases_[s], degree);
      break;
    }
  }
  local_dim_ = ns > 0 ? locals_[0].size() : 0;
  build_constraints();
}

void FeSpace::build_constraints() {
  const Mesh& m = mesh_;
  std::vector<Triplet> trips;
  Index rows = 0;
  if (family_ != FeFamily::Broken) {
    const int qd = 2 * degree_ + 2;
    for (const auto& sf : m.subfaces()) {
      const bool interior = sf.simplices.size() == 2;
      const bool on_gamma = sf.simplices.size() == 1 && sf.face >= 0 && gamma_.face[sf.face];
      if (!interior && !on_gamma) {
        continue;
      }
      const Vec3& a = m.points()[sf.points[0]];
      const Vec3& b = m.points()[sf.points[1]];
      const Vec3& c = m.points()[sf.points[2]];
      const Vec3 n = (b - a).cross(c - a).normalized();
      const QuadratureRule rule = triangle_rule(a, b, c, qd);
      const double diam = std::max({(b - a).norm(), (c - a).norm(), (c - b).norm()});
      const ScalarBasis tb(Frame::face((a + b + c) / 3.0, diam, n, b - a), degree_, rule);
      PolySet tests;
      switch (family_) {
      case FeFamily::Lagrange:
        tests = scalar_poly(tb, degree_);
        break;
      case FeFamily::Nedelec:
        // Tangent test fields see only the tangential trace
        tests = vector_poly(tb, degree_);
        break;
      default:
        tests = scalar_poly(tb, degree_ - 1);
        break;
      }
      const FieldValues tv = tests.evaluate(rule);
      const Eigen::VectorXd w = weights(rule);
      for (std::size_t side = 0; side < sf.simplices.size(); ++side) {
        const Index s = sf.simplices[side];
        const double sign = side == 0 ? 1.0 : -1.0;
        const FieldValues uv = locals_[s].evaluate(bases_[s]->values(rule));
        Eigen::MatrixXd block;
        if (family_ == FeFamily::RaviartThomas) {
          Eigen::MatrixXd un = n(0) * uv.comp[0] + n(1) * uv.comp[1] + n(2) * uv.comp[2];
          block = tv.comp[0].transpose() * w.asDiagonal() * un;
        } else {
          block = integrate_products(tv, uv, rule);
        }
        for (Index i = 0; i < block.rows(); ++i) {
          for (Index j = 0; j < block.cols(); ++j) {
            if (block(i, j) != 0.0) {
              trips.emplace_back(rows + i, offset(s) + j, sign * block(i, j));
            }
          }
        }
      }
      rows += tests.size();
    }
  }
  constraints_.resize(rows, broken_dim());
  constraints_.setFromTriplets(trips.begin(), trips.end());
}

Index FeSpace::dimension() const {
  if (dimension_ < 0) {
    dimension_ = broken_dim() - numerical_rank(constraints_);
  }
  return dimension_;
}

double FeSpace::constraint_residual(const Eigen::VectorXd& x) const {
  if (constraints_.rows() == 0) {
    return 0.0;
  }
  return (constraints_ * x).norm() / std::max(x.norm(), 1e-300);
}

SparseValues FeSpace::evaluate(const QuadratureRule& rule) const {
  SparseValues out;
  out.ncomp = is_vector() ? 3 : 1;
  std::map<Index, std::vector<Index>> by_simplex;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    Index s = rule[q].simplex;
    if (s < 0) {
      s = locate_simplex(mesh_, rule[q].x);
      if (s < 0) {
        throw Error("FeSpace::evaluate: node outside the mesh");
      }
    }
    by_simplex[s].push_back(q);
  }
  std::array<std::vector<Triplet>, 3> trips;
  for (const auto& [s, nodes] : by_simplex) {
    std::vector<Vec3> pts;
    for (Index q : nodes) {
      pts.push_back(rule[q].x);
    }
    const FieldValues v = locals_[s].evaluate(bases_[s]->values(pts));
    for (int c = 0; c < out.ncomp; ++c) {
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (Index j = 0; j < local_dim_; ++j) {
          if (v.comp[c](i, j) != 0.0) {
            trips[c].emplace_back(nodes[i], offset(s) + j, v.comp[c](i, j));
          }
        }
      }
    }
  }
  for (int c = 0; c < out.ncomp; ++c) {
    out.comp[c].resize(rule.size(), broken_dim());
    out.comp[c].setFromTriplets(trips[c].begin(), trips[c].end());
  }
  return out;
}

Eigen::VectorXd FeSpace::project(const ScalarSampler& f) const {
  if (is_vector()) {
    throw Error("FeSpace::project: scalar field for a vector family");
  }
  Eigen::VectorXd x(broken_dim());
  for (Index s = 0; s < mesh_.n_simplices(); ++s) {
    const QuadratureRule& rule = data_rules_[s];
    Eigen::MatrixXd v(rule.size(), 1);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      v(q, 0) = f(rule[q].x, s);
    }
    x.segment(offset(s), local_dim_) = ddr::project(locals_[s], rule, v);
  }
  return x;
}

Eigen::VectorXd FeSpace::project(const VectorSampler& f) const {
  if (!is_vector()) {
    throw Error("FeSpace::project: vector field for a scalar family");
  }
  Eigen::VectorXd x(broken_dim());
  for (Index s = 0; s < mesh_.n_simplices(); ++s) {
    const QuadratureRule& rule = data_rules_[s];
    Eigen::MatrixXd v(rule.size(), 3);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      v.row(q) = f(rule[q].x, s).transpose();
    }
    x.segment(offset(s), local_dim_) = ddr::project(locals_[s], rule, v);
  }
  return x;
}

ScalarSampler FeSpace::scalar_sampler(const Eigen::VectorXd& x) const {
  if (is_vector()) {
    throw Error("FeSpace::scalar_sampler: vector family");
  }
  auto data = std::make_shared<const Eigen::VectorXd>(x);
  return [this, data](const Vec3& p, Index s) {
    if (s < 0 && (s = locate_simplex(mesh_, p)) < 0) {
      throw Error("FeSpace: point outside the mesh");
    }
    const FieldValues v = locals_[s].evaluate(bases_[s]->values(std::vector<Vec3>{p}));
    return v.comp[0].row(0).dot(data->segment(offset(s), local_dim_));
  };
}

VectorSampler FeSpace::vector_sampler(const Eigen::VectorXd& x) const {
  if (!is_vector()) {
    throw Error("FeSpace::vector_sampler: scalar family");
  }
  auto data = std::make_shared<const Eigen::VectorXd>(x);
  return [this, data](const Vec3& p, Index s) {
    if (s < 0 && (s = locate_simplex(mesh_, p)) < 0) {
      throw Error("FeSpace: point outside the mesh");
    }
    const FieldValues v = locals_[s].evaluate(bases_[s]->values(std::vector<Vec3>{p}));
    const auto c = data->segment(offset(s), local_dim_);
    return Vec3(v.comp[0].row(0).dot(c), v.comp[1].row(0).dot(c), v.comp[2].row(0).dot(c));
  };
}

Index locate_simplex(const Mesh& mesh, const Vec3& x) {
  for (Index s = 0; s < mesh.n_simplices(); ++s) {
    const auto p = simplex_points(mesh, s);
    Mat3 A;
    A << p[1] - p[0], p[2] - p[0], p[3] - p[0];
    const Vec3 l = A.partialPivLu().solve(x - p[0]);
    if (l.minCoeff() >= -1e-10 && l.sum() <= 1.0 + 1e-10) {
      return s;
    }
  }
  return -1;
}

Index numerical_rank(const SparseMatrix& A, double tol) {
  if (A.rows() == 0 || A.cols() == 0) {
    return 0;
  }
  if (A.rows() * A.cols() <= 6'000'000) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr{Eigen::MatrixXd(A)};
    qr.setThreshold(tol);
    return qr.rank();
  }
  SparseMatrix B = A;
  B.makeCompressed();
  Eigen::SparseQR<SparseMatrix, Eigen::COLAMDOrdering<int>> qr;
  double scale = 0.0;
  for (Index j = 0; j < B.cols(); ++j) {
    scale = std::max(scale, B.col(j).norm());
  }
  qr.setPivotThreshold(tol * scale);
  qr.compute(B);
  if (qr.info() != Eigen::Success) {
    throw Error("numerical_rank: sparse QR failed");
  }
  return qr.rank();
}

//------------------------------------------------------------------------------
// Differentials and exactness
//------------------------------------------------------------------------------

SparseMatrix differential_matrix(const FeSpace& from, const FeSpace& to) {
  const bool ok = (from.family() == FeFamily::Lagrange && to.family() == FeFamily::Nedelec &&
                   to.degree() == from.degree()) ||
                  (from.family() == FeFamily::Nedelec && to.family() == FeFamily::RaviartThomas &&
                   to.degree() == from.degree()) ||
                  (from.family() == FeFamily::RaviartThomas && to.family() == FeFamily::Broken &&
                   to.degree() == from.degree() - 1);
  if (!ok || &from.mesh() != &to.mesh()) {
    throw Error("differential_matrix: incompatible spaces " + to_string(from.family()) + " -> " +
                to_string(to.family()));
  }
  std::vector<Triplet> trips;
  for (Index s = 0; s < from.mesh().n_simplices(); ++s) {
    const PolySet& u = from.local(s);
    const PolySet du = from.family() == FeFamily::Lagrange ? grad(u) : from.family() == FeFamily::Nedelec ? curl(u) : div(u);
    const auto& rule = from.rule(s);
    const Eigen::MatrixXd block = integrate_products(to.local(s).evaluate(rule), du.evaluate(rule), rule);
    // Entries that are zero up to quadrature rounding are dropped
    const double floor = 1e-12 * block.cwiseAbs().maxCoeff();
    for (Index i = 0; i < block.rows(); ++i) {
      for (Index j = 0; j < block.cols(); ++j) {
        if (std::abs(block(i, j)) > floor) {
          trips.emplace_back(to.offset(s) + i, from.offset(s) + j, block(i, j));
        }
      }
    }
  }
  SparseMatrix D(to.broken_dim(), from.broken_dim());
  D.setFromTriplets(trips.begin(), trips.end());
  return D;
}

namespace {

SparseMatrix stack2(const SparseMatrix& a, const SparseMatrix& b) {
  return vstack({&a, &b});
}

} // namespace

ExactnessDims exactness_dims(const Mesh& mesh, int degree, const Gamma& gamma) {
  const FeSpace lag(mesh, FeFamily::Lagrange, degree, gamma);
  const FeSpace ne(mesh, FeFamily::Nedelec, degree, gamma);
  const FeSpace rt(mesh, FeFamily::RaviartThomas, degree, gamma);
  const FeSpace p(mesh, FeFamily::Broken, degree - 1, gamma);
  ExactnessDims d{};
  d.lagrange = lag.dimension();
  d.nedelec = ne.dimension();
  d.raviart_thomas = rt.dimension();
  d.broken = p.dimension();
  d.ker_grad = lag.broken_dim() - numerical_rank(stack2(lag.constraints(), differential_matrix(lag, ne)));
  d.ker_curl = ne.broken_dim() - numerical_rank(stack2(ne.constraints(), differential_matrix(ne, rt)));
  d.ker_div = rt.broken_dim() - numerical_rank(stack2(rt.constraints(), differential_matrix(rt, p)));
  d.im_grad = d.lagrange - d.ker_grad;
  d.im_curl = d.nedelec - d.ker_curl;
  d.im_div = d.raviart_thomas - d.ker_div;
  return d;
}

//------------------------------------------------------------------------------
// DDR interpolation of finite element fields
//------------------------------------------------------------------------------

SparseMatrix interpolation_matrix(const DofLayout& layout, const FeSpace& fe) {
  const DdrContext& ctx = layout.context();
  const Mesh& m = ctx.mesh();
  const FeFamily expected = layout.space() == SpaceKind::Grad   ? FeFamily::Lagrange
                            : layout.space() == SpaceKind::Curl ? FeFamily::Nedelec
                                                                : FeFamily::RaviartThomas;
  if (fe.family() != expected || &fe.mesh() != &m) {
    throw Error("interpolation_matrix: " + to_string(fe.family()) + " family for the " + to_string(layout.space()) +
                " space");
  }
  std::vector<Triplet> trips;
  // Rows of the orthonormal projection onto `space` of the scalar values S
  auto project_rows = [&](Index row0, const PolySet& space, const QuadratureRule& rule, const SparseMatrix& S) {
    const Eigen::MatrixXd left = space.evaluate(rule).comp[0].transpose() * weights(rule).asDiagonal();
    add_rows(trips, row0, left, S);
  };
  auto project_vector_rows = [&](Index row0, const PolySet& space, const QuadratureRule& rule, const SparseValues& V) {
    const FieldValues sv = space.evaluate(rule);
    for (int c = 0; c < 3; ++c) {
      add_rows(trips, row0, sv.comp[c].transpose() * weights(rule).asDiagonal(), V.comp[c]);
    }
  };
  switch (layout.space()) {
  case SpaceKind::Grad:
    for (Index v = 0; v < m.n_vertices(); ++v) {
      const Index p = m.vertices()[v].point;
      const QuadratureRule node{{m.points()[p], 1.0, m.point_simplices(p).front()}};
      add_rows(trips, layout.vertex_offset(v), Eigen::MatrixXd::Ones(1, 1), fe.evaluate(node).comp[0]);
    }
    for (Index e = 0; e < m.n_edges() && layout.edge_dim() > 0; ++e) {
      project_rows(layout.edge_offset(e), ctx.edge(e).p_km1, ctx.edge(e).rule, fe.evaluate(ctx.edge(e).rule).comp[0]);
    }
    for (Index f = 0; f < m.n_faces() && layout.face_dim() > 0; ++f) {
      project_rows(layout.face_offset(f), ctx.face(f).p_km1, ctx.face(f).rule, fe.evaluate(ctx.face(f).rule).comp[0]);
    }
    for (Index t = 0; t < m.n_cells() && layout.cell_dim() > 0; ++t) {
      project_rows(layout.cell_offset(t), ctx.cell(t).p_km1, ctx.cell(t).rule, fe.evaluate(ctx.cell(t).rule).comp[0]);
    }
    break;
  case SpaceKind::Curl:
    for (Index e = 0; e < m.n_edges(); ++e) {
      const auto& d = ctx.edge(e);
      project_rows(layout.edge_offset(e), d.p_k, d.rule, along(fe.evaluate(d.rule), m.edges()[e].tangent));
    }
    for (Index f = 0; f < m.n_faces() && layout.face_dim() > 0; ++f) {
      project_vector_rows(layout.face_offset(f), ctx.face(f).rt_k, ctx.face(f).rule, fe.evaluate(ctx.face(f).rule));
    }
    for (Index t = 0; t < m.n_cells() && layout.cell_dim() > 0; ++t) {
      project_vector_rows(layout.cell_offset(t), ctx.cell(t).rt_k, ctx.cell(t).rule, fe.evaluate(ctx.cell(t).rule));
    }
    break;
  case SpaceKind::Div:
    for (Index f = 0; f < m.n_faces(); ++f) {
      const auto& d = ctx.face(f);
      project_rows(layout.face_offset(f), d.p_k, d.rule, along(fe.evaluate(d.rule), m.faces()[f].normal));
    }
    for (Index t = 0; t < m.n_cells() && layout.cell_dim() > 0; ++t) {
      project_vector_rows(layout.cell_offset(t), ctx.cell(t).ne_k, ctx.cell(t).rule, fe.evaluate(ctx.cell(t).rule));
    }
    break;
  }
  SparseMatrix I(layout.size(), fe.broken_dim());
  I.setFromTriplets(trips.begin(), trips.end());
  return I;
}

Eigen::VectorXd interpolate_fe(const DofLayout& layout, const FeSpace& fe, const Eigen::VectorXd& x, double tol) {
  const double r = fe.constraint_residual(x);
  if (r > tol) {
    throw Error("interpolate_fe: " + to_string(fe.family()) + " field with non-single-valued traces (residual " +
                std::to_string(r) + ")");
  }
  return interpolation_matrix(layout, fe) * x;
}

SparseMatrix cell_projection_matrix(const DdrContext& ctx, const FeSpace& fe) {
  const Mesh& m = ctx.mesh();
  std::vector<Triplet> trips;
  Index row = 0;
  for (Index t = 0; t < m.n_cells(); ++t) {
    const auto& d = ctx.cell(t);
    const PolySet& space = fe.is_vector() ? d.vec_k : d.p_k;
    const FieldValues sv = space.evaluate(d.rule);
    const SparseValues V = fe.evaluate(d.rule);
    for (int c = 0; c < V.ncomp; ++c) {
      add_rows(trips, row, sv.comp[c].transpose() * weights(d.rule).asDiagonal(), V.comp[c]);
    }
    row += space.size();
  }
  SparseMatrix P(row, fe.broken_dim());
  P.setFromTriplets(trips.begin(), trips.end());
  return P;
}

SparseMatrix face_projection_matrix(const DdrContext& ctx, const FeSpace& fe) {
  if (fe.is_vector()) {
    throw Error("face_projection_matrix: scalar family expected");
  }
  const Mesh& m = ctx.mesh();
  std::vector<Triplet> trips;
  Index row = 0;
  for (Index f = 0; f < m.n_faces(); ++f) {
    const auto& d = ctx.face(f);
    add_rows(trips, row, d.p_k.evaluate(d.rule).comp[0].transpose() * weights(d.rule).asDiagonal(),
             fe.evaluate(d.rule).comp[0]);
    row += d.p_k.size();
  }
  SparseMatrix P(row, fe.broken_dim());
  P.setFromTriplets(trips.begin(), trips.end());
  return P;
}

} // namespace ddr
