#include <ddr/ddr_core.hpp>

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

namespace ddr {

ScalarSampler sampler(std::function<double(const Vec3&)> f) {
  return [f = std::move(f)](const Vec3& x, Index) { return f(x); };
}

VectorSampler sampler(std::function<Vec3(const Vec3&)> f) {
  return [f = std::move(f)](const Vec3& x, Index) { return f(x); };
}

//------------------------------------------------------------------------------
// DdrContext
//------------------------------------------------------------------------------

DdrContext::DdrContext(const Mesh& mesh, int k) : mesh_(mesh), k_(k) {
  if (k < 0) {
    throw Error("DdrContext: negative degree");
  }
  const int qd = quadrature_degree();
  const auto& P = mesh.points();
  edges_.resize(mesh.n_edges());
  for (Index e = 0; e < mesh.n_edges(); ++e) {
    const auto& E = mesh.edges()[e];
    EdgeData& d = edges_[e];
    for (Index se : E.subedges) {
      const auto& S = mesh.subedges()[se];
      append(d.rule, segment_rule(P[S.points[0]], P[S.points[1]], qd, S.simplices[0]));
    }
    d.basis = std::make_unique<ScalarBasis>(Frame::edge(E.center, E.length, E.tangent), k + 1, d.rule);
    d.p_km1 = scalar_poly(*d.basis, k - 1);
    d.p_k = scalar_poly(*d.basis, k);
    d.p_kp1 = scalar_poly(*d.basis, k + 1);
  }
  faces_.resize(mesh.n_faces());
  for (Index f = 0; f < mesh.n_faces(); ++f) {
    const auto& F = mesh.faces()[f];
    FaceData& d = faces_[f];
    for (Index sf : F.subfaces) {
      const auto& S = mesh.subfaces()[sf];
      append(d.rule, triangle_rule(P[S.points[0]], P[S.points[1]], P[S.points[2]], qd, S.simplices[0]));
    }
    const Vec3 t1 = mesh.vertex_position(F.vertices[1]) - mesh.vertex_position(F.vertices[0]);
    d.basis = std::make_unique<ScalarBasis>(Frame::face(F.center, F.diameter, F.normal, t1), k + 2, d.rule);
    d.p_km1 = scalar_poly(*d.basis, k - 1);
    d.p_k = scalar_poly(*d.basis, k);
    d.p_kp1 = scalar_poly(*d.basis, k + 1);
    d.vec_k = vector_poly(*d.basis, k);
    d.rt_k = rt_space(*d.basis, k);
  }
  cells_.resize(mesh.n_cells());
  for (Index t = 0; t < mesh.n_cells(); ++t) {
    const auto& T = mesh.cells()[t];
    CellData& d = cells_[t];
    for (Index s : T.simplices) {
      const auto& S = mesh.simplices()[s];
      append(d.rule, tetrahedron_rule(P[S.points[0]], P[S.points[1]], P[S.points[2]], P[S.points[3]], qd, s));
    }
    d.basis = std::make_unique<ScalarBasis>(Frame::cell(T.center, T.diameter), k + 2, d.rule);
    d.p_km1 = scalar_poly(*d.basis, k - 1);
    d.p_k = scalar_poly(*d.basis, k);
    d.p_kp1 = scalar_poly(*d.basis, k + 1);
    d.vec_k = vector_poly(*d.basis, k);
    d.rt_k = rt_space(*d.basis, k);
    d.ne_k = ne_space(*d.basis, k);
  }
}

//------------------------------------------------------------------------------
// DofLayout
//------------------------------------------------------------------------------

DofLayout::DofLayout(const DdrContext& ctx, SpaceKind space) : ctx_(&ctx), space_(space) {
  const int k = ctx.k();
  switch (space) {
  case SpaceKind::Grad:
    dims_ = {1, poly_dim(1, k - 1), poly_dim(2, k - 1), poly_dim(3, k - 1)};
    break;
  case SpaceKind::Curl:
    dims_ = {0, poly_dim(1, k), dim({EntityKind::Face, Family::RT, k}), dim({EntityKind::Cell, Family::RT, k})};
    break;
  case SpaceKind::Div:
    dims_ = {0, 0, poly_dim(2, k), dim({EntityKind::Cell, Family::NE, k})};
    break;
  }
  const Mesh& m = ctx.mesh();
  const std::array<Index, 4> counts{m.n_vertices(), m.n_edges(), m.n_faces(), m.n_cells()};
  Index off = 0;
  for (int i = 0; i < 4; ++i) {
    offsets_[i] = off;
    off += counts[i] * dims_[i];
  }
  size_ = off;
}

std::vector<Index> DofLayout::closure_dofs(const EntityRef& entity) const {
  const Mesh& m = mesh();
  std::set<Index> vs, es, fs, ts;
  auto add_edge = [&](Index e) {
    es.insert(e);
    vs.insert(m.edges()[e].vertices.begin(), m.edges()[e].vertices.end());
  };
  auto add_face = [&](Index f) {
    fs.insert(f);
    for (Index e : m.faces()[f].edges) {
      add_edge(e);
    }
  };
  switch (entity.kind) {
  case EntityKind::Edge:
    add_edge(entity.id);
    break;
  case EntityKind::Face:
    add_face(entity.id);
    break;
  case EntityKind::Cell:
    ts.insert(entity.id);
    for (Index f : m.cells()[entity.id].faces) {
      add_face(f);
    }
    break;
  default:
    throw Error("closure_dofs: unsupported entity kind");
  }
  std::vector<Index> out;
  auto push = [&](const std::set<Index>& ids, Index d, auto offset) {
    for (Index i : ids) {
      for (Index j = 0; j < d; ++j) {
        out.push_back(offset(i) + j);
      }
    }
  };
  push(vs, dims_[0], [this](Index i) { return vertex_offset(i); });
  push(es, dims_[1], [this](Index i) { return edge_offset(i); });
  push(fs, dims_[2], [this](Index i) { return face_offset(i); });
  push(ts, dims_[3], [this](Index i) { return cell_offset(i); });
  return out;
}

//------------------------------------------------------------------------------
// Interpolators
//------------------------------------------------------------------------------

namespace {

Eigen::MatrixXd sample(const QuadratureRule& rule, const ScalarSampler& q) {
  Eigen::MatrixXd f(rule.size(), 1);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    f(i, 0) = q(rule[i].x, rule[i].simplex);
  }
  return f;
}

Eigen::MatrixXd sample(const QuadratureRule& rule, const VectorSampler& v) {
  Eigen::MatrixXd f(rule.size(), 3);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    f.row(i) = v(rule[i].x, rule[i].simplex).transpose();
  }
  return f;
}

void check_space(const DofLayout& layout, SpaceKind expected, const char* what) {
  if (layout.space() != expected) {
    throw Error(std::string(what) + ": layout of the wrong space");
  }
}

} // namespace

Eigen::VectorXd interpolate_grad(const DofLayout& layout, const ScalarSampler& q) {
  check_space(layout, SpaceKind::Grad, "interpolate_grad");
  const DdrContext& ctx = layout.context();
  const Mesh& m = ctx.mesh();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(layout.size());
  for (Index v = 0; v < m.n_vertices(); ++v) {
    const Index p = m.vertices()[v].point;
    z(layout.vertex_offset(v)) = q(m.points()[p], m.point_simplices(p).front());
  }
  for (Index e = 0; e < m.n_edges() && layout.edge_dim() > 0; ++e) {
    const auto& d = ctx.edge(e);
    z.segment(layout.edge_offset(e), layout.edge_dim()) = project(d.p_km1, d.rule, sample(d.rule, q));
  }
  for (Index f = 0; f < m.n_faces() && layout.face_dim() > 0; ++f) {
    const auto& d = ctx.face(f);
    z.segment(layout.face_offset(f), layout.face_dim()) = project(d.p_km1, d.rule, sample(d.rule, q));
  }
  for (Index t = 0; t < m.n_cells() && layout.cell_dim() > 0; ++t) {
    const auto& d = ctx.cell(t);
    z.segment(layout.cell_offset(t), layout.cell_dim()) = project(d.p_km1, d.rule, sample(d.rule, q));
  }
  return z;
}

Eigen::VectorXd interpolate_curl(const DofLayout& layout, const VectorSampler& v) {
  check_space(layout, SpaceKind::Curl, "interpolate_curl");
  const DdrContext& ctx = layout.context();
  const Mesh& m = ctx.mesh();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(layout.size());
  for (Index e = 0; e < m.n_edges(); ++e) {
    const auto& d = ctx.edge(e);
    const Vec3 t = m.edges()[e].tangent;
    Eigen::MatrixXd f = sample(d.rule, v) * t;
    z.segment(layout.edge_offset(e), layout.edge_dim()) = project(d.p_k, d.rule, f);
  }
  for (Index f = 0; f < m.n_faces() && layout.face_dim() > 0; ++f) {
    const auto& d = ctx.face(f);
    // The RT(F) basis is tangent, so testing v tests its tangential trace
    z.segment(layout.face_offset(f), layout.face_dim()) = project(d.rt_k, d.rule, sample(d.rule, v));
  }
  for (Index t = 0; t < m.n_cells() && layout.cell_dim() > 0; ++t) {
    const auto& d = ctx.cell(t);
    z.segment(layout.cell_offset(t), layout.cell_dim()) = project(d.rt_k, d.rule, sample(d.rule, v));
  }
  return z;
}

Eigen::VectorXd interpolate_div(const DofLayout& layout, const VectorSampler& w) {
  check_space(layout, SpaceKind::Div, "interpolate_div");
  const DdrContext& ctx = layout.context();
  const Mesh& m = ctx.mesh();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(layout.size());
  for (Index f = 0; f < m.n_faces(); ++f) {
    const auto& d = ctx.face(f);
    Eigen::MatrixXd g = sample(d.rule, w) * m.faces()[f].normal;
    z.segment(layout.face_offset(f), layout.face_dim()) = project(d.p_k, d.rule, g);
  }
  for (Index t = 0; t < m.n_cells() && layout.cell_dim() > 0; ++t) {
    const auto& d = ctx.cell(t);
    z.segment(layout.cell_offset(t), layout.cell_dim()) = project(d.ne_k, d.rule, sample(d.rule, w));
  }
  return z;
}

//------------------------------------------------------------------------------
// Component norms
//------------------------------------------------------------------------------

namespace {

/// Adds the face-level weights of face f, scaled by s
void add_face_weights(const DofLayout& layout, Index f, double s, Eigen::VectorXd& w) {
  const Mesh& m = layout.mesh();
  const auto& F = m.faces()[f];
  const double hF = F.diameter;
  w.segment(layout.face_offset(f), layout.face_dim()).array() += s;
  for (Index e : F.edges) {
    w.segment(layout.edge_offset(e), layout.edge_dim()).array() += s * hF;
  }
  for (Index v : F.vertices) {
    w.segment(layout.vertex_offset(v), layout.vertex_dim()).array() += s * hF * hF;
  }
}

Eigen::VectorXd cell_weights(const DofLayout& layout, Index t) {
  const Mesh& m = layout.mesh();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(layout.size());
  w.segment(layout.cell_offset(t), layout.cell_dim()).array() += 1.0;
  for (Index f : m.cells()[t].faces) {
    add_face_weights(layout, f, m.cells()[t].diameter, w);
  }
  return w;
}

} // namespace

Eigen::VectorXd component_weights(const DofLayout& layout) {
  const Mesh& m = layout.mesh();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(layout.size());
  for (Index t = 0; t < m.n_cells(); ++t) {
    w.segment(layout.cell_offset(t), layout.cell_dim()).array() += 1.0;
    for (Index f : m.cells()[t].faces) {
      add_face_weights(layout, f, m.cells()[t].diameter, w);
    }
  }
  return w;
}

double component_norm(const DofLayout& layout, const Eigen::VectorXd& z) {
  return std::sqrt((component_weights(layout).array() * z.array().square()).sum());
}

double component_norm_cell(const DofLayout& layout, const Eigen::VectorXd& z, Index cell) {
  return std::sqrt((cell_weights(layout, cell).array() * z.array().square()).sum());
}

double component_norm_face(const DofLayout& layout, const Eigen::VectorXd& z, Index face) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(layout.size());
  add_face_weights(layout, face, 1.0, w);
  return std::sqrt((w.array() * z.array().square()).sum());
}

//------------------------------------------------------------------------------
// Masks, random vectors, restriction, CSV
//------------------------------------------------------------------------------

std::vector<Index> masked_dofs(const DofLayout& layout, const Gamma& gamma) {
  const Mesh& m = layout.mesh();
  std::vector<Index> out;
  for (Index v = 0; v < m.n_vertices(); ++v) {
    if (gamma.vertex[v]) {
      for (Index j = 0; j < layout.vertex_dim(); ++j) {
        out.push_back(layout.vertex_offset(v) + j);
      }
    }
  }
  for (Index e = 0; e < m.n_edges(); ++e) {
    if (gamma.edge[e]) {
      for (Index j = 0; j < layout.edge_dim(); ++j) {
        out.push_back(layout.edge_offset(e) + j);
      }
    }
  }
  for (Index f = 0; f < m.n_faces(); ++f) {
    if (gamma.face[f]) {
      for (Index j = 0; j < layout.face_dim(); ++j) {
        out.push_back(layout.face_offset(f) + j);
      }
    }
  }
  return out;
}

Eigen::VectorXd apply_mask(const DofLayout& layout, const Eigen::VectorXd& z, const Gamma& gamma) {
  Eigen::VectorXd out = z;
  for (Index i : masked_dofs(layout, gamma)) {
    out(i) = 0.0;
  }
  return out;
}

Eigen::VectorXd random_dofs(const DofLayout& layout, std::uint64_t seed, const Gamma* gamma) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd z(layout.size());
  for (Index i = 0; i < z.size(); ++i) {
    z(i) = u(rng);
  }
  return gamma ? apply_mask(layout, z, *gamma) : z;
}

Eigen::VectorXd restrict_to(const DofLayout& layout, const Eigen::VectorXd& z, const EntityRef& entity) {
  const auto dofs = layout.closure_dofs(entity);
  Eigen::VectorXd out(dofs.size());
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    out(i) = z(dofs[i]);
  }
  return out;
}

namespace {

std::string layout_header(const DofLayout& layout) {
  const Mesh& m = layout.mesh();
  std::ostringstream os;
  os << "# space=" << to_string(layout.space()) << ",k=" << layout.k() << ",vertices=" << m.n_vertices()
     << ",edges=" << m.n_edges() << ",faces=" << m.n_faces() << ",cells=" << m.n_cells() << ",size=" << layout.size();
  return os.str();
}

} // namespace

std::string dofs_to_csv(const DofLayout& layout, const Eigen::VectorXd& z) {
  std::ostringstream os;
  os << layout_header(layout) << "\nindex,value\n";
  char buf[64];
  for (Index i = 0; i < z.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%td,%.17g\n", i, z(i));
    os << buf;
  }
  return os.str();
}

Eigen::VectorXd dofs_from_csv(const DofLayout& layout, const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);
  if (line != layout_header(layout)) {
    throw Error("dofs_from_csv: layout header mismatch: '" + line + "'");
  }
  std::getline(is, line);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(layout.size());
  Index count = 0;
  while (std::getline(is, line)) {
    if (line.empty()) {
      continue;
    }
    const auto comma = line.find(',');
    const Index i = std::stol(line.substr(0, comma));
    if (i < 0 || i >= layout.size()) {
      throw Error("dofs_from_csv: index out of range");
    }
    z(i) = std::stod(line.substr(comma + 1));
    ++count;
  }
  if (count != layout.size()) {
    throw Error("dofs_from_csv: wrong number of entries");
  }
  return z;
}

} // namespace ddr
