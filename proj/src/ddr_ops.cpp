#include <ddr/ddr_ops.hpp>

#include <algorithm>
#include <sstream>

namespace ddr {

Eigen::VectorXd LocalMap::apply(const Eigen::VectorXd& z) const {
  Eigen::VectorXd local(dofs.size());
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    local(i) = z(dofs[i]);
  }
  return matrix * local;
}

//------------------------------------------------------------------------------
// Parameters
//------------------------------------------------------------------------------

Parameter Parameter::identity() {
  return {"id", [](const Vec3&, Index) { return Mat3::Identity().eval(); }};
}

Parameter Parameter::diagonal() {
  return {"diag", [](const Vec3&, Index) { return Vec3(1.0, 2.0, 5.0).asDiagonal().toDenseMatrix(); }};
}

Parameter Parameter::piecewise(const Mesh& mesh) {
  std::vector<double> value(mesh.n_cells());
  for (Index t = 0; t < mesh.n_cells(); ++t) {
    value[t] = mesh.cells()[t].center.x() < 0.5 ? 1.0 : 10.0;
  }
  return {"piecewise", [value](const Vec3&, Index cell) {
            if (cell < 0) {
              throw Error("piecewise parameter evaluated without a cell");
            }
            return (value[cell] * Mat3::Identity()).eval();
          }};
}

Parameter Parameter::parse(const std::string& name, const Mesh& mesh) {
  if (name == "id") {
    return identity();
  }
  if (name == "diag") {
    return diagonal();
  }
  if (name == "piecewise") {
    return piecewise(mesh);
  }
  throw Error("unknown parameter '" + name + "' (expected id, diag or piecewise)");
}

//------------------------------------------------------------------------------
// Local assembly helpers
//------------------------------------------------------------------------------

namespace {

Eigen::VectorXd weights(const QuadratureRule& rule) {
  Eigen::VectorXd w(rule.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    w(q) = rule[q].w;
  }
  return w;
}

/// Component of Cartesian field values along a fixed direction
Eigen::MatrixXd along(const FieldValues& v, const Vec3& d) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(v.points(), v.functions());
  for (int c = 0; c < 3; ++c) {
    if (d(c) != 0.0) {
      out += d(c) * v.comp[c];
    }
  }
  return out;
}

/// Values of v x n
FieldValues cross_normal(const FieldValues& v, const Vec3& n) {
  FieldValues out;
  out.ncomp = 3;
  for (int c = 0; c < 3; ++c) {
    const int a = (c + 1) % 3, b = (c + 2) % 3;
    out.comp[c] = v.comp[a] * n(b) - v.comp[b] * n(a);
  }
  return out;
}

/// Tangential part v - (v.n) n
FieldValues tangential(const FieldValues& v, const Vec3& n) {
  const Eigen::MatrixXd vn = along(v, n);
  FieldValues out;
  out.ncomp = 3;
  for (int c = 0; c < 3; ++c) {
    out.comp[c] = v.comp[c] - n(c) * vn;
  }
  return out;
}

/// M(:, dofs of inner) += left * inner.matrix, with M indexed by the sorted list `dofs`
void add_mapped(Eigen::MatrixXd& M, const std::vector<Index>& dofs, const Eigen::MatrixXd& left, const LocalMap& inner) {
  const Eigen::MatrixXd prod = left * inner.matrix;
  for (std::size_t j = 0; j < inner.dofs.size(); ++j) {
    const auto it = std::lower_bound(dofs.begin(), dofs.end(), inner.dofs[j]);
    if (it == dofs.end() || *it != inner.dofs[j]) {
      throw Error("add_mapped: component outside the target closure");
    }
    M.col(it - dofs.begin()) += prod.col(j);
  }
}

LocalMap selection(Index offset, Index n) {
  LocalMap m;
  for (Index i = 0; i < n; ++i) {
    m.dofs.push_back(offset + i);
  }
  m.matrix = Eigen::MatrixXd::Identity(n, n);
  return m;
}

Eigen::MatrixXd solve_square(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const std::string& what) {
  if (A.rows() != A.cols()) {
    throw Error(what + ": non-square local system");
  }
  if (A.rows() == 0) {
    return Eigen::MatrixXd::Zero(0, B.cols());
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  lu.setThreshold(1e-10);
  if (!lu.isInvertible()) {
    throw Error(what + ": singular local system");
  }
  Eigen::MatrixXd X = lu.solve(B);
  const double scale = std::max(1.0, B.cwiseAbs().maxCoeff());
  if ((A * X - B).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw Error(what + ": inconsistent local system");
  }
  return X;
}

/// Rows [from, end) of a family
PolySet rows_from(const PolySet& p, Index from) {
  return PolySet{p.basis, p.ncomp, p.coef.bottomRows(p.size() - from)};
}

/// Gram matrix of the L2 products between a hierarchical family (rows) and P^n of the same basis
Eigen::MatrixXd hierarchical_products(const PolySet& scalar, Index n) {
  return scalar.coef.leftCols(n);
}

std::string name(const char* op, const char* kind, Index id) { return std::string(op) + " on " + kind + " " + std::to_string(id); }

} // namespace

//------------------------------------------------------------------------------
// Construction
//------------------------------------------------------------------------------

DdrOperators::DdrOperators(const DdrContext& ctx)
    : ctx_(ctx), grad_(ctx, SpaceKind::Grad), curl_(ctx, SpaceKind::Curl), div_(ctx, SpaceKind::Div) {
  build_edges();
  build_faces();
  build_cells();
  build_stabilizations();
  assemble_globals();
}

const DofLayout& DdrOperators::layout(SpaceKind space) const {
  switch (space) {
  case SpaceKind::Grad:
    return grad_;
  case SpaceKind::Curl:
    return curl_;
  default:
    return div_;
  }
}

const LocalMap& DdrOperators::potential(SpaceKind space, Index t) const {
  switch (space) {
  case SpaceKind::Grad:
    return cell_pgrad_[t];
  case SpaceKind::Curl:
    return cell_pcurl_[t];
  default:
    return cell_pdiv_[t];
  }
}

const PolySet& DdrOperators::potential_space(SpaceKind space, Index t) const {
  return space == SpaceKind::Grad ? ctx_.cell(t).p_kp1 : ctx_.cell(t).vec_k;
}

const LocalMap& DdrOperators::stabilization(SpaceKind space, Index t) const {
  switch (space) {
  case SpaceKind::Grad:
    return stab_grad_[t];
  case SpaceKind::Curl:
    return stab_curl_[t];
  default:
    return stab_div_[t];
  }
}

void DdrOperators::build_edges() {
  const Mesh& m = mesh();
  const int k = this->k();
  for (Index e = 0; e < m.n_edges(); ++e) {
    const auto& E = m.edges()[e];
    const auto& d = ctx_.edge(e);
    const auto dofs = grad_.closure_dofs({EntityKind::Edge, e});
    // Closure order: vertices[0], vertices[1], then P^{k-1}(E) components
    Eigen::MatrixXd tr = Eigen::MatrixXd::Zero(k + 2, k + 2);
    tr.block(0, 2, k, k).setIdentity();
    const Eigen::MatrixXd phi =
        d.basis->values(std::vector<Vec3>{m.vertex_position(E.vertices[0]), m.vertex_position(E.vertices[1])});
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(2, k + 2);
    rhs.leftCols(2).setIdentity();
    rhs.rightCols(k) -= phi.leftCols(k);
    tr.bottomRows(2) = solve_square(phi.rightCols(2), rhs, name("edge trace", "edge", e));
    edge_trace_.push_back({dofs, tr});
    const Eigen::MatrixXd Dt = d.basis->derivative(0).transpose();
    edge_grad_.push_back({dofs, Dt.topRows(k + 1) * tr});
  }
}

void DdrOperators::build_faces() {
  const Mesh& m = mesh();
  const int k = this->k();
  const Index nkm1 = poly_dim(2, k - 1), nk = poly_dim(2, k), nkp1 = poly_dim(2, k + 1);
  for (Index f = 0; f < m.n_faces(); ++f) {
    const auto& F = m.faces()[f];
    const auto& d = ctx_.face(f);
    const auto gd = grad_.closure_dofs({EntityKind::Face, f});
    const auto cd = curl_.closure_dofs({EntityKind::Face, f});

    // Edge terms sum_E omega_FE int_E tr_E (v . n_FE) for a test family v
    auto grad_edge_terms = [&](const PolySet& v, Eigen::MatrixXd& M) {
      for (std::size_t j = 0; j < F.edges.size(); ++j) {
        const Index e = F.edges[j];
        const auto& ed = ctx_.edge(e);
        const Vec3 nFE = F.normal.cross(m.edges()[e].tangent);
        const Eigen::MatrixXd vn = along(v.evaluate(ed.rule), nFE);
        const Eigen::MatrixXd psi = ed.p_kp1.evaluate(ed.rule).comp[0];
        add_mapped(M, gd, F.edge_orientations[j] * (vn.transpose() * weights(ed.rule).asDiagonal() * psi),
                   edge_trace_[e]);
      }
    };

    // G_F tested on P^k(F)^2
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d.vec_k.size(), gd.size());
    if (nkm1 > 0) {
      add_mapped(G, gd, -hierarchical_products(div(d.vec_k), nkm1), selection(grad_.face_offset(f), nkm1));
    }
    grad_edge_terms(d.vec_k, G);
    face_grad_.push_back({gd, G});

    // tr_F tested on (x - x_F) P^{k+1}(F)
    const PolySet Z = koszul_space(*d.basis, k + 2);
    Eigen::MatrixXd rhs = -(Z.coef * d.vec_k.coef.transpose()) * G;
    grad_edge_terms(Z, rhs);
    face_trace_.push_back({gd, solve_square(div(Z).coef.leftCols(nkp1), rhs, name("face trace", "face", f))});

    // C_F tested on P^k(F); omega_FE t_E runs clockwise, hence the minus sign
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(nk, cd.size());
    auto curl_edge_terms = [&](const PolySet& r, double sign, Eigen::MatrixXd& M) {
      for (std::size_t j = 0; j < F.edges.size(); ++j) {
        const Index e = F.edges[j];
        const auto& ed = ctx_.edge(e);
        const Eigen::MatrixXd rv = r.evaluate(ed.rule).comp[0];
        const Eigen::MatrixXd psi = ed.p_k.evaluate(ed.rule).comp[0];
        add_mapped(M, cd, sign * F.edge_orientations[j] * (rv.transpose() * weights(ed.rule).asDiagonal() * psi),
                   selection(curl_.edge_offset(e), curl_.edge_dim()));
      }
    };
    if (curl_.face_dim() > 0) {
      add_mapped(C, cd, rot(d.p_k).coef * d.rt_k.coef.transpose(), selection(curl_.face_offset(f), curl_.face_dim()));
    }
    curl_edge_terms(d.p_k, -1.0, C);
    face_curl_.push_back({cd, C});

    // trt_F: range part against rot P^{k+1}(F), complement matched to v_F on (x - x_F) P^{k-1}(F)
    const PolySet R = rows_from(rot(d.p_kp1), 1);
    const PolySet Zc = koszul_space(*d.basis, k);
    Eigen::MatrixXd A(R.size() + Zc.size(), d.vec_k.size());
    A << R.coef * d.vec_k.coef.transpose(), Zc.coef * d.vec_k.coef.transpose();
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(A.rows(), cd.size());
    {
      Eigen::MatrixXd top = Eigen::MatrixXd::Zero(R.size(), cd.size());
      // int_F C_F r for r in the nonconstant part of the hierarchical P^{k+1}(F) basis
      Eigen::MatrixXd sel = Eigen::MatrixXd::Zero(nkp1 - 1, nk);
      for (Index i = 1; i < nk; ++i) {
        sel(i - 1, i) = 1.0;
      }
      top += sel * C;
      curl_edge_terms(rows_from(d.p_kp1, 1), 1.0, top);
      B.topRows(R.size()) = top;
      if (Zc.size() > 0) {
        Eigen::MatrixXd bottom = Eigen::MatrixXd::Zero(Zc.size(), cd.size());
        add_mapped(bottom, cd, Zc.coef * d.rt_k.coef.transpose(), selection(curl_.face_offset(f), curl_.face_dim()));
        B.bottomRows(Zc.size()) = bottom;
      }
    }
    face_trt_.push_back({cd, solve_square(A, B, name("tangential trace", "face", f))});
  }
}

void DdrOperators::build_cells() {
  const Mesh& m = mesh();
  const int k = this->k();
  const Index nkm1 = poly_dim(3, k - 1), nk = poly_dim(3, k), nkp1 = poly_dim(3, k + 1);
  for (Index t = 0; t < m.n_cells(); ++t) {
    const auto& T = m.cells()[t];
    const auto& d = ctx_.cell(t);
    const auto gd = grad_.closure_dofs({EntityKind::Cell, t});
    const auto cd = curl_.closure_dofs({EntityKind::Cell, t});
    const auto dd = div_.closure_dofs({EntityKind::Cell, t});

    // sum_F omega_TF int_F tr_F (v . n_F)
    auto trace_terms = [&](const PolySet& v, Eigen::MatrixXd& M) {
      for (std::size_t i = 0; i < T.faces.size(); ++i) {
        const Index f = T.faces[i];
        const auto& fd = ctx_.face(f);
        const Eigen::MatrixXd vn = along(v.evaluate(fd.rule), m.faces()[f].normal);
        const Eigen::MatrixXd psi = fd.p_kp1.evaluate(fd.rule).comp[0];
        add_mapped(M, gd, T.face_orientations[i] * (vn.transpose() * weights(fd.rule).asDiagonal() * psi),
                   face_trace_[f]);
      }
    };
    // sum_F omega_TF int_F (z x n_F) . trt_F
    auto tangential_terms = [&](const PolySet& z, double sign, Eigen::MatrixXd& M) {
      for (std::size_t i = 0; i < T.faces.size(); ++i) {
        const Index f = T.faces[i];
        const auto& fd = ctx_.face(f);
        const FieldValues zn = cross_normal(z.evaluate(fd.rule), m.faces()[f].normal);
        const FieldValues tv = fd.vec_k.evaluate(fd.rule);
        add_mapped(M, cd, sign * T.face_orientations[i] * integrate_products(zn, tv, fd.rule), face_trt_[f]);
      }
    };
    // sum_F omega_TF int_F r w_F
    auto flux_terms = [&](const PolySet& r, double sign, Eigen::MatrixXd& M) {
      for (std::size_t i = 0; i < T.faces.size(); ++i) {
        const Index f = T.faces[i];
        const auto& fd = ctx_.face(f);
        const Eigen::MatrixXd rv = r.evaluate(fd.rule).comp[0];
        const Eigen::MatrixXd psi = fd.p_k.evaluate(fd.rule).comp[0];
        add_mapped(M, dd, sign * T.face_orientations[i] * (rv.transpose() * weights(fd.rule).asDiagonal() * psi),
                   selection(div_.face_offset(f), div_.face_dim()));
      }
    };

    // G_T tested on P^k(T)^3
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d.vec_k.size(), gd.size());
    if (nkm1 > 0) {
      add_mapped(G, gd, -hierarchical_products(div(d.vec_k), nkm1), selection(grad_.cell_offset(t), nkm1));
    }
    trace_terms(d.vec_k, G);
    cell_grad_.push_back({gd, G});

    // P_grad tested on (x - x_T) P^{k+1}(T)
    {
      const PolySet Z = koszul_space(*d.basis, k + 2);
      Eigen::MatrixXd rhs = -(Z.coef * d.vec_k.coef.transpose()) * G;
      trace_terms(Z, rhs);
      cell_pgrad_.push_back({gd, solve_square(div(Z).coef.leftCols(nkp1), rhs, name("gradient potential", "cell", t))});
    }

    // C_T tested on P^k(T)^3
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(d.vec_k.size(), cd.size());
    if (curl_.cell_dim() > 0) {
      add_mapped(C, cd, curl(d.vec_k).coef * d.rt_k.coef.transpose(), selection(curl_.cell_offset(t), curl_.cell_dim()));
    }
    tangential_terms(d.vec_k, 1.0, C);
    cell_curl_.push_back({cd, C});

    // P_curl: range part against curl of (x - x_T) x P^k(T)^3, complement matched to v_T on (x - x_T) P^{k-1}(T)
    {
      const PolySet Zg = koszul_cross_space(*d.basis, k + 1);
      const PolySet Zr = koszul_space(*d.basis, k);
      Eigen::MatrixXd A(Zg.size() + Zr.size(), d.vec_k.size());
      A << curl(Zg).coef * d.vec_k.coef.transpose(), Zr.coef * d.vec_k.coef.transpose();
      Eigen::MatrixXd top = (Zg.coef * d.vec_k.coef.transpose()) * C;
      tangential_terms(Zg, -1.0, top);
      Eigen::MatrixXd bottom = Eigen::MatrixXd::Zero(Zr.size(), cd.size());
      if (Zr.size() > 0) {
        add_mapped(bottom, cd, Zr.coef * d.rt_k.coef.transpose(), selection(curl_.cell_offset(t), curl_.cell_dim()));
      }
      Eigen::MatrixXd B(A.rows(), cd.size());
      B << top, bottom;
      cell_pcurl_.push_back({cd, solve_square(A, B, name("curl potential", "cell", t))});
    }

    // D_T tested on P^k(T)
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(nk, dd.size());
    if (div_.cell_dim() > 0) {
      add_mapped(D, dd, -grad(d.p_k).coef * d.ne_k.coef.transpose(), selection(div_.cell_offset(t), div_.cell_dim()));
    }
    flux_terms(d.p_k, 1.0, D);
    cell_div_.push_back({dd, D});

    // P_div: range part against grad P^{k+1}(T), complement matched to w_T on (x - x_T) x P^{k-1}(T)^3
    {
      const PolySet Gq = grad(rows_from(d.p_kp1, 1));
      const PolySet Zc = koszul_cross_space(*d.basis, k);
      Eigen::MatrixXd A(Gq.size() + Zc.size(), d.vec_k.size());
      A << Gq.coef * d.vec_k.coef.transpose(), Zc.coef * d.vec_k.coef.transpose();
      Eigen::MatrixXd sel = Eigen::MatrixXd::Zero(nkp1 - 1, nk);
      for (Index i = 1; i < nk; ++i) {
        sel(i - 1, i) = 1.0;
      }
      Eigen::MatrixXd top = -sel * D;
      flux_terms(rows_from(d.p_kp1, 1), 1.0, top);
      Eigen::MatrixXd bottom = Eigen::MatrixXd::Zero(Zc.size(), dd.size());
      if (Zc.size() > 0) {
        add_mapped(bottom, dd, Zc.coef * d.ne_k.coef.transpose(), selection(div_.cell_offset(t), div_.cell_dim()));
      }
      Eigen::MatrixXd B(A.rows(), dd.size());
      B << top, bottom;
      cell_pdiv_.push_back({dd, solve_square(A, B, name("divergence potential", "cell", t))});
    }
  }
}

//------------------------------------------------------------------------------
// Stabilizations
//------------------------------------------------------------------------------

void DdrOperators::build_stabilizations() {
  const Mesh& m = mesh();
  for (Index t = 0; t < m.n_cells(); ++t) {
    const auto& T = m.cells()[t];
    const auto& d = ctx_.cell(t);
    const double hT = T.diameter;

    // grad: faces weighted by h_T, edges by h_T^2
    {
      const LocalMap& P = cell_pgrad_[t];
      Eigen::MatrixXd S = Eigen::MatrixXd::Zero(P.dofs.size(), P.dofs.size());
      for (Index f : T.faces) {
        const auto& fd = ctx_.face(f);
        Eigen::MatrixXd Dm = Eigen::MatrixXd::Zero(fd.rule.size(), P.dofs.size());
        add_mapped(Dm, P.dofs, d.p_kp1.evaluate(fd.rule).comp[0], P);
        add_mapped(Dm, P.dofs, -fd.p_kp1.evaluate(fd.rule).comp[0], face_trace_[f]);
        S += hT * Dm.transpose() * weights(fd.rule).asDiagonal() * Dm;
      }
      for (Index e : T.edges) {
        const auto& ed = ctx_.edge(e);
        Eigen::MatrixXd Dm = Eigen::MatrixXd::Zero(ed.rule.size(), P.dofs.size());
        add_mapped(Dm, P.dofs, d.p_kp1.evaluate(ed.rule).comp[0], P);
        add_mapped(Dm, P.dofs, -ed.p_kp1.evaluate(ed.rule).comp[0], edge_trace_[e]);
        S += hT * hT * Dm.transpose() * weights(ed.rule).asDiagonal() * Dm;
      }
      stab_grad_.push_back({P.dofs, S});
    }

    // curl: tangential traces on faces, tangential components on edges
    {
      const LocalMap& P = cell_pcurl_[t];
      Eigen::MatrixXd S = Eigen::MatrixXd::Zero(P.dofs.size(), P.dofs.size());
      for (Index f : T.faces) {
        const auto& fd = ctx_.face(f);
        const FieldValues pt = tangential(d.vec_k.evaluate(fd.rule), m.faces()[f].normal);
        const FieldValues tv = fd.vec_k.evaluate(fd.rule);
        for (int c = 0; c < 3; ++c) {
          Eigen::MatrixXd Dm = Eigen::MatrixXd::Zero(fd.rule.size(), P.dofs.size());
          add_mapped(Dm, P.dofs, pt.comp[c], P);
          add_mapped(Dm, P.dofs, -tv.comp[c], face_trt_[f]);
          S += hT * Dm.transpose() * weights(fd.rule).asDiagonal() * Dm;
        }
      }
      for (Index e : T.edges) {
        const auto& ed = ctx_.edge(e);
        Eigen::MatrixXd Dm = Eigen::MatrixXd::Zero(ed.rule.size(), P.dofs.size());
        add_mapped(Dm, P.dofs, along(d.vec_k.evaluate(ed.rule), m.edges()[e].tangent), P);
        add_mapped(Dm, P.dofs, -ed.p_k.evaluate(ed.rule).comp[0], selection(curl_.edge_offset(e), curl_.edge_dim()));
        S += hT * hT * Dm.transpose() * weights(ed.rule).asDiagonal() * Dm;
      }
      stab_curl_.push_back({P.dofs, S});
    }

    // div: normal components on faces
    {
      const LocalMap& P = cell_pdiv_[t];
      Eigen::MatrixXd S = Eigen::MatrixXd::Zero(P.dofs.size(), P.dofs.size());
      for (Index f : T.faces) {
        const auto& fd = ctx_.face(f);
        Eigen::MatrixXd Dm = Eigen::MatrixXd::Zero(fd.rule.size(), P.dofs.size());
        add_mapped(Dm, P.dofs, along(d.vec_k.evaluate(fd.rule), m.faces()[f].normal), P);
        add_mapped(Dm, P.dofs, -fd.p_k.evaluate(fd.rule).comp[0], selection(div_.face_offset(f), div_.face_dim()));
        S += hT * Dm.transpose() * weights(fd.rule).asDiagonal() * Dm;
      }
      stab_div_.push_back({P.dofs, S});
    }
  }
}

//------------------------------------------------------------------------------
// Global matrices
//------------------------------------------------------------------------------

namespace {

void scatter(std::vector<Triplet>& trips, Index row0, const LocalMap& map) {
  for (Index i = 0; i < map.matrix.rows(); ++i) {
    for (std::size_t j = 0; j < map.dofs.size(); ++j) {
      const double v = map.matrix(i, j);
      if (v != 0.0) {
        trips.emplace_back(row0 + i, map.dofs[j], v);
      }
    }
  }
}

void scatter_square(std::vector<Triplet>& trips, const std::vector<Index>& dofs, const Eigen::MatrixXd& M) {
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    for (std::size_t j = 0; j < dofs.size(); ++j) {
      if (M(i, j) != 0.0) {
        trips.emplace_back(dofs[i], dofs[j], M(i, j));
      }
    }
  }
}

} // namespace

void DdrOperators::assemble_globals() {
  const Mesh& m = mesh();
  std::vector<Triplet> tg, tc, td;
  for (Index e = 0; e < m.n_edges(); ++e) {
    scatter(tg, curl_.edge_offset(e), edge_grad_[e]);
  }
  for (Index f = 0; f < m.n_faces(); ++f) {
    const auto& d = ctx_.face(f);
    if (curl_.face_dim() > 0) {
      scatter(tg, curl_.face_offset(f), {face_grad_[f].dofs, d.rt_k.coef * d.vec_k.coef.transpose() * face_grad_[f].matrix});
    }
    scatter(tc, div_.face_offset(f), face_curl_[f]);
  }
  const Index nk = poly_dim(3, k());
  for (Index t = 0; t < m.n_cells(); ++t) {
    const auto& d = ctx_.cell(t);
    if (curl_.cell_dim() > 0) {
      scatter(tg, curl_.cell_offset(t), {cell_grad_[t].dofs, d.rt_k.coef * d.vec_k.coef.transpose() * cell_grad_[t].matrix});
    }
    if (div_.cell_dim() > 0) {
      scatter(tc, div_.cell_offset(t), {cell_curl_[t].dofs, d.ne_k.coef * d.vec_k.coef.transpose() * cell_curl_[t].matrix});
    }
    scatter(td, t * nk, cell_div_[t]);
  }
  uG_.resize(curl_.size(), grad_.size());
  uG_.setFromTriplets(tg.begin(), tg.end());
  uC_.resize(div_.size(), curl_.size());
  uC_.setFromTriplets(tc.begin(), tc.end());
  D_.resize(pk_size(), div_.size());
  D_.setFromTriplets(td.begin(), td.end());
}

SparseMatrix DdrOperators::stabilization_matrix(SpaceKind space) const {
  std::vector<Triplet> trips;
  for (Index t = 0; t < mesh().n_cells(); ++t) {
    const LocalMap& S = stabilization(space, t);
    scatter_square(trips, S.dofs, S.matrix);
  }
  const Index n = layout(space).size();
  SparseMatrix A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

double cell_magnitude(const DdrContext& ctx, const Parameter& mu, Index cell, SpaceKind space) {
  const auto& rule = ctx.cell(cell).rule;
  Mat3 avg = Mat3::Zero();
  double vol = 0.0;
  for (const auto& q : rule) {
    const Mat3 M = mu.value(q.x, cell);
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff())) {
      throw Error("parameter " + mu.name + " is not symmetric");
    }
    avg += q.w * M;
    vol += q.w;
  }
  avg /= vol;
  if (space == SpaceKind::Grad) {
    return std::abs(avg.trace() / 3.0);
  }
  return Eigen::SelfAdjointEigenSolver<Mat3>(avg).eigenvalues().cwiseAbs().maxCoeff();
}

double cell_magnitude(const DdrContext& ctx, const Parameter& mu, Index cell) {
  return cell_magnitude(ctx, mu, cell, SpaceKind::Curl);
}

namespace {

/// int_T mu phi_i . phi_j for the potential family of a cell
Eigen::MatrixXd weighted_mass(const PolySet& space, const QuadratureRule& rule, const Parameter& mu, Index cell,
                              bool scalar) {
  const FieldValues v = space.evaluate(rule);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(space.size(), space.size());
  std::vector<Mat3> values(rule.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    values[q] = mu.value(rule[q].x, cell);
    if (Eigen::SelfAdjointEigenSolver<Mat3>(values[q]).eigenvalues().minCoeff() <= 0.0) {
      throw Error("parameter " + mu.name + " is not coercive on cell " + std::to_string(cell));
    }
  }
  if (scalar) {
    Eigen::VectorXd w(rule.size());
    for (std::size_t q = 0; q < rule.size(); ++q) {
      w(q) = rule[q].w * values[q].trace() / 3.0;
    }
    return v.comp[0].transpose() * w.asDiagonal() * v.comp[0];
  }
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      Eigen::VectorXd w(rule.size());
      for (std::size_t q = 0; q < rule.size(); ++q) {
        w(q) = rule[q].w * values[q](a, b);
      }
      if (w.cwiseAbs().maxCoeff() > 0.0) {
        M += v.comp[a].transpose() * w.asDiagonal() * v.comp[b];
      }
    }
  }
  return M;
}

} // namespace

SparseMatrix DdrOperators::inner_product_matrix(SpaceKind space, const Parameter& mu) const {
  std::vector<Triplet> trips;
  for (Index t = 0; t < mesh().n_cells(); ++t) {
    const LocalMap& P = potential(space, t);
    const Eigen::MatrixXd Mmu =
        weighted_mass(potential_space(space, t), ctx_.cell(t).rule, mu, t, space == SpaceKind::Grad);
    const Eigen::MatrixXd local = P.matrix.transpose() * Mmu * P.matrix +
                                  cell_magnitude(ctx_, mu, t, space) * stabilization(space, t).matrix;
    scatter_square(trips, P.dofs, local);
  }
  const Index n = layout(space).size();
  SparseMatrix A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

SparseMatrix DdrOperators::potential_mass_matrix(SpaceKind space) const {
  std::vector<Triplet> trips;
  for (Index t = 0; t < mesh().n_cells(); ++t) {
    const LocalMap& P = potential(space, t);
    scatter_square(trips, P.dofs, P.matrix.transpose() * P.matrix);
  }
  const Index n = layout(space).size();
  SparseMatrix A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

double inner_product(const DdrOperators& ops, SpaceKind space, const Parameter& mu, const Eigen::VectorXd& z,
                     const Eigen::VectorXd& y) {
  return z.dot(ops.inner_product_matrix(space, mu) * y);
}

double l2_norm(const DdrOperators& ops, SpaceKind space, const Parameter& mu, const Eigen::VectorXd& z) {
  return std::sqrt(std::max(0.0, inner_product(ops, space, mu, z, z)));
}

Eigen::VectorXd project_pk(const DdrContext& ctx, const ScalarSampler& f) {
  const Index nk = poly_dim(3, ctx.k());
  Eigen::VectorXd out(ctx.mesh().n_cells() * nk);
  for (Index t = 0; t < ctx.mesh().n_cells(); ++t) {
    const auto& d = ctx.cell(t);
    Eigen::MatrixXd v(d.rule.size(), 1);
    for (std::size_t q = 0; q < d.rule.size(); ++q) {
      v(q, 0) = f(d.rule[q].x, d.rule[q].simplex);
    }
    out.segment(t * nk, nk) = project(d.p_k, d.rule, v);
  }
  return out;
}

//------------------------------------------------------------------------------
// Relation residuals
//------------------------------------------------------------------------------

namespace {

/// Cartesian values (npts x ncomp) of the polynomial with coordinates c in family s
Eigen::MatrixXd field_values(const PolySet& s, const Eigen::VectorXd& c, const QuadratureRule& rule) {
  const FieldValues v = s.evaluate(rule);
  Eigen::MatrixXd out(rule.size(), v.ncomp);
  for (int a = 0; a < v.ncomp; ++a) {
    out.col(a) = v.comp[a] * c;
  }
  return out;
}

struct Accumulator {
  double res = 0.0, scale = 0.0;
  void add(const Eigen::VectorXd& r, const Eigen::VectorXd& size) {
    res = std::max(res, r.cwiseAbs().maxCoeff());
    scale = std::max(scale, size.maxCoeff());
  }
  double value() const { return scale > 0.0 ? res / scale : 0.0; }
};

} // namespace

RelationResiduals relation_residuals(const DdrOperators& ops, const Eigen::VectorXd& q, const Eigen::VectorXd& v,
                                     const Eigen::VectorXd& w) {
  const DdrContext& ctx = ops.context();
  const Mesh& m = ctx.mesh();
  const int k = ctx.k();
  const Eigen::VectorXd Gq = ops.uG() * q;
  const Eigen::VectorXd Cv = ops.uC() * v;
  const Eigen::VectorXd Dw = ops.D() * w;
  const Index nk = poly_dim(3, k);
  Accumulator ag, ac, ad;
  for (Index t = 0; t < m.n_cells(); ++t) {
    const auto& T = m.cells()[t];
    const auto& d = ctx.cell(t);
    const ScalarBasis& basis = *d.basis;
    const QuadratureRule& rule = d.rule;

    // Grad relation over RT^{k+1}(T)
    {
      const PolySet Z = rt_space(basis, k + 1);
      const Eigen::MatrixXd pc = field_values(d.vec_k, ops.potential(SpaceKind::Curl, t).apply(Gq), rule);
      const Eigen::MatrixXd pg = field_values(d.p_kp1, ops.potential(SpaceKind::Grad, t).apply(q), rule);
      const Eigen::VectorXd t1 = integrate_against(Z.evaluate(rule), pc, rule);
      const Eigen::VectorXd t2 = integrate_against(div(Z).evaluate(rule), pg, rule);
      Eigen::VectorXd t3 = Eigen::VectorXd::Zero(Z.size());
      for (std::size_t i = 0; i < T.faces.size(); ++i) {
        const Index f = T.faces[i];
        const auto& fd = ctx.face(f);
        const Eigen::MatrixXd tr = field_values(fd.p_kp1, ops.face_trace(f).apply(q), fd.rule);
        const Eigen::MatrixXd zn = along(Z.evaluate(fd.rule), m.faces()[f].normal);
        t3 += T.face_orientations[i] * zn.transpose() * weights(fd.rule).asDiagonal() * tr;
      }
      ag.add(t1 + t2 - t3, t1.cwiseAbs() + t2.cwiseAbs() + t3.cwiseAbs());
    }

    // Curl relation over NE^{k+1}(T)
    {
      const PolySet Z = ne_space(basis, k + 1);
      const Eigen::MatrixXd pd = field_values(d.vec_k, ops.potential(SpaceKind::Div, t).apply(Cv), rule);
      const Eigen::MatrixXd pc = field_values(d.vec_k, ops.potential(SpaceKind::Curl, t).apply(v), rule);
      const Eigen::VectorXd t1 = integrate_against(Z.evaluate(rule), pd, rule);
      const Eigen::VectorXd t2 = integrate_against(curl(Z).evaluate(rule), pc, rule);
      Eigen::VectorXd t3 = Eigen::VectorXd::Zero(Z.size());
      for (std::size_t i = 0; i < T.faces.size(); ++i) {
        const Index f = T.faces[i];
        const auto& fd = ctx.face(f);
        const Eigen::MatrixXd trt = field_values(fd.vec_k, ops.face_tangential_trace(f).apply(v), fd.rule);
        t3 += T.face_orientations[i] * integrate_against(cross_normal(Z.evaluate(fd.rule), m.faces()[f].normal), trt, fd.rule);
      }
      ac.add(t1 - t2 - t3, t1.cwiseAbs() + t2.cwiseAbs() + t3.cwiseAbs());
    }

    // Div relation over P^{k+1}(T)
    {
      const PolySet Q = d.p_kp1;
      const Eigen::MatrixXd dv = field_values(d.p_k, Dw.segment(t * nk, nk), rule);
      const Eigen::MatrixXd pd = field_values(d.vec_k, ops.potential(SpaceKind::Div, t).apply(w), rule);
      const Eigen::VectorXd t1 = integrate_against(Q.evaluate(rule), dv, rule);
      const Eigen::VectorXd t2 = integrate_against(grad(Q).evaluate(rule), pd, rule);
      Eigen::VectorXd t3 = Eigen::VectorXd::Zero(Q.size());
      const DofLayout& L = ops.layout(SpaceKind::Div);
      for (std::size_t i = 0; i < T.faces.size(); ++i) {
        const Index f = T.faces[i];
        const auto& fd = ctx.face(f);
        const Eigen::MatrixXd wf = field_values(fd.p_k, w.segment(L.face_offset(f), L.face_dim()), fd.rule);
        t3 += T.face_orientations[i] * integrate_against(Q.evaluate(fd.rule), wf, fd.rule);
      }
      ad.add(t1 + t2 - t3, t1.cwiseAbs() + t2.cwiseAbs() + t3.cwiseAbs());
    }
  }
  return {ag.value(), ac.value(), ad.value()};
}

std::string to_triplets(const SparseMatrix& A) {
  std::ostringstream os;
  os.precision(17);
  os << "% " << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
  for (Index j = 0; j < A.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(A, j); it; ++it) {
      os << it.row() << " " << it.col() << " " << it.value() << "\n";
    }
  }
  return os.str();
}

} // namespace ddr
