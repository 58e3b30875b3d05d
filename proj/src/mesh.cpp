#include <ddr/mesh.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace ddr {

namespace {

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

double diameter_of(const std::vector<Vec3>& pts) {
  double h = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      h = std::max(h, (pts[i] - pts[j]).norm());
    }
  }
  return h;
}

/// Point-in-polygon test in the plane of a face (crossing number)
bool inside_polygon(const std::vector<Vec3>& loop, const Vec3& n, const Vec3& x) {
  Vec3 t1 = loop[1] - loop[0];
  t1 = (t1 - t1.dot(n) * n).normalized();
  const Vec3 t2 = n.cross(t1);
  auto proj = [&](const Vec3& p) { return Eigen::Vector2d((p - loop[0]).dot(t1), (p - loop[0]).dot(t2)); };
  const Eigen::Vector2d q = proj(x);
  bool inside = false;
  for (std::size_t i = 0, j = loop.size() - 1; i < loop.size(); j = i++) {
    const Eigen::Vector2d a = proj(loop[i]), b = proj(loop[j]);
    if ((a.y() > q.y()) != (b.y() > q.y())) {
      const double xc = a.x() + (q.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (q.x() < xc) {
        inside = !inside;
      }
    }
  }
  return inside;
}

bool inside_tet(const std::array<Vec3, 4>& p, const Vec3& x, double tol) {
  Mat3 A;
  A << p[1] - p[0], p[2] - p[0], p[3] - p[0];
  const Vec3 l = A.partialPivLu().solve(x - p[0]);
  return l.minCoeff() >= -tol && l.sum() <= 1.0 + tol;
}

bool inside_triangle(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& x, double tol) {
  const Vec3 n = (b - a).cross(c - a);
  const double area2 = n.squaredNorm();
  const double l1 = (c - b).cross(x - b).dot(n) / area2;
  const double l2 = (a - c).cross(x - c).dot(n) / area2;
  const double l3 = 1.0 - l1 - l2;
  return l1 >= -tol && l2 >= -tol && l3 >= -tol;
}

/// Distance from x to the triangle abc
double point_triangle_distance(const Vec3& x, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = x - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) {
    return ap.norm();
  }
  const Vec3 bp = x - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) {
    return bp.norm();
  }
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    return (x - (a + d1 / (d1 - d3) * ab)).norm();
  }
  const Vec3 cp = x - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) {
    return cp.norm();
  }
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    return (x - (a + d2 / (d2 - d6) * ac)).norm();
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    return (x - (b + (d4 - d3) / ((d4 - d3) + (d5 - d6)) * (c - b))).norm();
  }
  const double denom = 1.0 / (va + vb + vc);
  return (x - (a + ab * (vb * denom) + ac * (vc * denom))).norm();
}

double point_segment_distance(const Vec3& x, const Vec3& a, const Vec3& b) {
  const Vec3 d = b - a;
  const double t = std::clamp((x - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (x - (a + t * d)).norm();
}

std::string entity(const std::string& kind, Index i) { return kind + " " + std::to_string(i); }

} // namespace

//------------------------------------------------------------------------------
// Construction
//------------------------------------------------------------------------------

Mesh::Mesh(const MeshDescription& desc) : points_(desc.points), gamma_faces_(desc.gamma_faces) {
  const Index np = static_cast<Index>(points_.size());
  auto check_point = [&](Index p) {
    if (p < 0 || p >= np) {
      throw Error("mesh: point index " + std::to_string(p) + " out of range");
    }
  };
  if (desc.parent.size() != desc.simplices.size()) {
    throw Error("mesh: submesh parent map has the wrong length");
  }
  const Index ncells = static_cast<Index>(desc.cells.size());
  if (ncells == 0) {
    throw Error("mesh: no cells");
  }

  // Simplices, positively oriented
  double hbox = 0.0;
  for (const auto& p : points_) {
    hbox = std::max(hbox, p.cwiseAbs().maxCoeff());
  }
  for (std::size_t s = 0; s < desc.simplices.size(); ++s) {
    Simplex S{desc.simplices[s], desc.parent[s], 0.0};
    for (Index p : S.points) {
      check_point(p);
    }
    if (S.cell < 0 || S.cell >= ncells) {
      throw Error("mesh: " + entity("simplex", s) + " has an invalid parent cell");
    }
    double v = signed_volume(points_[S.points[0]], points_[S.points[1]], points_[S.points[2]], points_[S.points[3]]);
    if (v < 0) {
      std::swap(S.points[2], S.points[3]);
      v = -v;
    }
    const double hs = diameter_of({points_[S.points[0]], points_[S.points[1]], points_[S.points[2]], points_[S.points[3]]});
    if (!(v > 1e-12 * hs * hs * hs)) {
      throw Error("mesh: degenerate entity: " + entity("simplex", s) + " has zero volume");
    }
    S.volume = v;
    simplices_.push_back(S);
  }
  point_simplices_.assign(np, {});
  for (std::size_t s = 0; s < simplices_.size(); ++s) {
    for (Index p : simplices_[s].points) {
      point_simplices_[p].push_back(static_cast<Index>(s));
    }
  }

  // Polytopal vertices: points used by face loops
  point_vertex_.assign(np, -1);
  {
    std::set<Index> used;
    for (const auto& loop : desc.faces) {
      for (Index p : loop) {
        check_point(p);
        used.insert(p);
      }
    }
    for (Index p : used) {
      point_vertex_[p] = static_cast<Index>(vertices_.size());
      vertices_.push_back({p, {}});
    }
  }

  // Faces and edges
  std::map<std::pair<Index, Index>, Index> edge_of;
  for (std::size_t f = 0; f < desc.faces.size(); ++f) {
    const auto& loop = desc.faces[f];
    if (loop.size() < 3) {
      throw Error("mesh: " + entity("face", f) + " has fewer than 3 vertices");
    }
    if (std::set<Index>(loop.begin(), loop.end()).size() != loop.size()) {
      throw Error("mesh: " + entity("face", f) + " loop repeats a vertex");
    }
    Face F;
    std::vector<Vec3> pts;
    for (Index p : loop) {
      F.vertices.push_back(point_vertex_[p]);
      pts.push_back(points_[p]);
    }
    const std::size_t nv = loop.size();
    Vec3 N = Vec3::Zero();
    for (std::size_t i = 0; i < nv; ++i) {
      N += pts[i].cross(pts[(i + 1) % nv]);
    }
    F.diameter = diameter_of(pts);
    if (!(N.norm() > 1e-14 * F.diameter * F.diameter)) {
      throw Error("mesh: degenerate entity: " + entity("face", f) + " has zero area");
    }
    F.normal = N.normalized();
    // Signed fan areas give area and centroid for non-convex loops
    double area = 0.0;
    Vec3 c = Vec3::Zero();
    for (std::size_t i = 1; i + 1 < nv; ++i) {
      const double a = 0.5 * (pts[i] - pts[0]).cross(pts[i + 1] - pts[0]).dot(F.normal);
      area += a;
      c += a * (pts[0] + pts[i] + pts[i + 1]) / 3.0;
    }
    F.area = area;
    F.center = c / area;
    for (const auto& p : pts) {
      if (std::abs((p - F.center).dot(F.normal)) > 1e-12 * F.diameter) {
        throw Error("mesh: " + entity("face", f) + " is not planar");
      }
    }
    for (std::size_t i = 0; i < nv; ++i) {
      const Index a = F.vertices[i], b = F.vertices[(i + 1) % nv];
      const auto key = std::make_pair(std::min(a, b), std::max(a, b));
      auto it = edge_of.find(key);
      Index e;
      if (it == edge_of.end()) {
        e = static_cast<Index>(edges_.size());
        edge_of[key] = e;
        Edge E;
        E.vertices = {key.first, key.second};
        const Vec3 pa = vertex_position(key.first), pb = vertex_position(key.second);
        E.length = (pb - pa).norm();
        if (!(E.length > 1e-14 * std::max(1.0, hbox))) {
          throw Error("mesh: degenerate entity: " + entity("edge", e) + " has zero length");
        }
        E.tangent = (pb - pa) / E.length;
        E.center = 0.5 * (pa + pb);
        edges_.push_back(E);
      } else {
        e = it->second;
      }
      F.edges.push_back(e);
      // Loop runs counter-clockwise; omega_FE t_E must run clockwise
      F.edge_orientations.push_back(edges_[e].vertices[0] == a ? -1 : 1);
      edges_[e].faces.push_back(static_cast<Index>(f));
    }
    faces_.push_back(F);
  }
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    for (Index v : edges_[e].vertices) {
      vertices_[v].edges.push_back(static_cast<Index>(e));
    }
  }

  // Cells
  for (Index t = 0; t < ncells; ++t) {
    Cell T;
    std::set<Index> es, vs;
    double surface = 0.0;
    Vec3 flux = Vec3::Zero();
    double volume = 0.0;
    for (const auto& [f, o] : desc.cells[t]) {
      if (f < 0 || f >= static_cast<Index>(faces_.size()) || (o != 1 && o != -1)) {
        throw Error("mesh: " + entity("cell", t) + " references an invalid face");
      }
      T.faces.push_back(f);
      T.face_orientations.push_back(o);
      faces_[f].cells.push_back(t);
      const Face& F = faces_[f];
      es.insert(F.edges.begin(), F.edges.end());
      vs.insert(F.vertices.begin(), F.vertices.end());
      surface += F.area;
      flux += o * F.area * F.normal;
      volume += o * F.area * F.center.dot(F.normal) / 3.0;
    }
    if (std::set<Index>(T.faces.begin(), T.faces.end()).size() != T.faces.size()) {
      throw Error("mesh: " + entity("cell", t) + " lists a face twice");
    }
    if (flux.norm() > 1e-12 * surface) {
      throw Error("mesh: " + entity("cell", t) + " violates the divergence theorem (open surface)");
    }
    if (!(volume > 0.0)) {
      throw Error("mesh: " + entity("cell", t) + " has non-positive volume (face orientations point inward)");
    }
    T.edges.assign(es.begin(), es.end());
    T.vertices.assign(vs.begin(), vs.end());
    std::vector<Vec3> pts;
    for (Index v : T.vertices) {
      pts.push_back(vertex_position(v));
    }
    T.diameter = diameter_of(pts);
    T.volume = volume;
    cells_.push_back(T);
  }
  for (std::size_t s = 0; s < simplices_.size(); ++s) {
    cells_[simplices_[s].cell].simplices.push_back(static_cast<Index>(s));
  }
  for (Index t = 0; t < ncells; ++t) {
    Cell& T = cells_[t];
    if (T.simplices.empty()) {
      throw Error("mesh: " + entity("cell", t) + " has no simplices");
    }
    double vol = 0.0;
    Vec3 c = Vec3::Zero();
    for (Index s : T.simplices) {
      const auto& S = simplices_[s];
      const double v = S.volume;
      vol += v;
      c += v * (points_[S.points[0]] + points_[S.points[1]] + points_[S.points[2]] + points_[S.points[3]]) / 4.0;
    }
    if (std::abs(vol - T.volume) > 1e-10 * T.volume) {
      throw Error("mesh: " + entity("cell", t) + " is not matched by its simplices (volume mismatch)");
    }
    T.center = c / vol;
    bool inside = false;
    for (Index s : T.simplices) {
      const auto& S = simplices_[s];
      if (inside_tet({points_[S.points[0]], points_[S.points[1]], points_[S.points[2]], points_[S.points[3]]}, T.center,
                     1e-12)) {
        inside = true;
        break;
      }
    }
    if (!inside) {
      throw Error("mesh: center of " + entity("cell", t) + " lies outside the cell");
    }
  }
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const Face& F = faces_[f];
    if (F.cells.empty() || F.cells.size() > 2) {
      throw Error("mesh: " + entity("face", f) + " belongs to " + std::to_string(F.cells.size()) + " cells");
    }
    if (F.cells.size() == 2) {
      const auto orient = [&](Index t) {
        const auto& T = cells_[t];
        for (std::size_t i = 0; i < T.faces.size(); ++i) {
          if (T.faces[i] == static_cast<Index>(f)) {
            return T.face_orientations[i];
          }
        }
        return 0;
      };
      if (orient(F.cells[0]) != -orient(F.cells[1])) {
        throw Error("mesh: interior " + entity("face", f) + " does not have opposite orientations");
      }
    }
  }

  // Sub-faces
  std::map<std::array<Index, 3>, Index> subface_of;
  for (std::size_t s = 0; s < simplices_.size(); ++s) {
    const auto& P = simplices_[s].points;
    for (int omit = 0; omit < 4; ++omit) {
      std::array<Index, 3> tri;
      int j = 0;
      for (int i = 0; i < 4; ++i) {
        if (i != omit) {
          tri[j++] = P[i];
        }
      }
      std::sort(tri.begin(), tri.end());
      auto it = subface_of.find(tri);
      if (it == subface_of.end()) {
        subface_of[tri] = static_cast<Index>(subfaces_.size());
        subfaces_.push_back({tri, {static_cast<Index>(s)}, -1});
      } else {
        subfaces_[it->second].simplices.push_back(static_cast<Index>(s));
      }
    }
  }
  for (std::size_t sf = 0; sf < subfaces_.size(); ++sf) {
    SubFace& SF = subfaces_[sf];
    if (SF.simplices.size() > 2) {
      throw Error("mesh: " + entity("sub-face", sf) + " shared by more than two simplices");
    }
    const Index c0 = simplices_[SF.simplices[0]].cell;
    const Index c1 = SF.simplices.size() == 2 ? simplices_[SF.simplices[1]].cell : -1;
    if (c0 == c1) {
      continue;
    }
    const Vec3 a = points_[SF.points[0]], b = points_[SF.points[1]], c = points_[SF.points[2]];
    const Vec3 g = (a + b + c) / 3.0;
    for (Index f : cells_[c0].faces) {
      const Face& F = faces_[f];
      const bool pair_ok = c1 < 0 ? F.cells.size() == 1 : (F.cells.size() == 2 && (F.cells[0] == c1 || F.cells[1] == c1));
      if (!pair_ok) {
        continue;
      }
      const double tol = 1e-10 * F.diameter;
      if (std::abs((a - F.center).dot(F.normal)) > tol || std::abs((b - F.center).dot(F.normal)) > tol ||
          std::abs((c - F.center).dot(F.normal)) > tol) {
        continue;
      }
      std::vector<Vec3> loop;
      for (Index v : F.vertices) {
        loop.push_back(vertex_position(v));
      }
      if (inside_polygon(loop, F.normal, g)) {
        SF.face = f;
        faces_[f].subfaces.push_back(static_cast<Index>(sf));
        break;
      }
    }
    if (SF.face < 0) {
      throw Error("mesh: submesh is not matching: " + entity("sub-face", sf) + " lies on no polytopal face");
    }
  }
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    Face& F = faces_[f];
    double area = 0.0;
    bool center_inside = false;
    std::set<Index> loop_points;
    for (Index v : F.vertices) {
      loop_points.insert(vertices_[v].point);
    }
    for (Index sf : F.subfaces) {
      const auto& P = subfaces_[sf].points;
      area += 0.5 * (points_[P[1]] - points_[P[0]]).cross(points_[P[2]] - points_[P[0]]).norm();
      center_inside = center_inside || inside_triangle(points_[P[0]], points_[P[1]], points_[P[2]], F.center, 1e-12);
      for (Index p : P) {
        if (!loop_points.count(p) && point_vertex_[p] >= 0) {
          throw Error("mesh: " + entity("face", f) + " has a hanging vertex in its interior");
        }
      }
    }
    if (std::abs(area - F.area) > 1e-10 * F.area) {
      throw Error("mesh: submesh is not matching: " + entity("face", f) + " is not covered by sub-faces");
    }
    if (!center_inside) {
      throw Error("mesh: center of " + entity("face", f) + " lies outside the face");
    }
  }

  // Sub-edges
  std::map<std::pair<Index, Index>, Index> subedge_of;
  std::vector<std::vector<Index>> point_subedges(np);
  for (std::size_t s = 0; s < simplices_.size(); ++s) {
    const auto& P = simplices_[s].points;
    for (int i = 0; i < 4; ++i) {
      for (int j = i + 1; j < 4; ++j) {
        const auto key = std::make_pair(std::min(P[i], P[j]), std::max(P[i], P[j]));
        auto it = subedge_of.find(key);
        if (it == subedge_of.end()) {
          const Index id = static_cast<Index>(subedges_.size());
          subedge_of[key] = id;
          subedges_.push_back({{key.first, key.second}, {static_cast<Index>(s)}, -1});
          point_subedges[key.first].push_back(id);
          point_subedges[key.second].push_back(id);
        } else {
          subedges_[it->second].simplices.push_back(static_cast<Index>(s));
        }
      }
    }
  }
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    Edge& E = edges_[e];
    const Index pa = vertices_[E.vertices[0]].point, pb = vertices_[E.vertices[1]].point;
    const Vec3 xa = points_[pa];
    Index cur = pa;
    double tcur = 0.0;
    while (cur != pb) {
      Index best = -1, next = -1;
      double tbest = 2.0;
      for (Index se : point_subedges[cur]) {
        const Index q = subedges_[se].points[0] == cur ? subedges_[se].points[1] : subedges_[se].points[0];
        const Vec3 d = points_[q] - xa;
        const double t = d.dot(E.tangent) / E.length;
        if ((d - t * E.length * E.tangent).norm() > 1e-10 * E.length) {
          continue;
        }
        if (t > tcur + 1e-12 && t <= 1.0 + 1e-12 && t < tbest) {
          tbest = t;
          best = se;
          next = q;
        }
      }
      if (best < 0) {
        throw Error("mesh: submesh is not matching: " + entity("edge", e) + " is not a union of sub-edges");
      }
      if (subedges_[best].edge >= 0) {
        throw Error("mesh: " + entity("sub-edge", best) + " belongs to two polytopal edges");
      }
      subedges_[best].edge = static_cast<Index>(e);
      E.subedges.push_back(best);
      cur = next;
      tcur = tbest;
    }
  }

  for (Index g : gamma_faces_) {
    if (g < 0 || g >= n_faces() || !is_boundary(g)) {
      throw Error("mesh: gamma face " + std::to_string(g) + " is not a boundary face");
    }
  }
}

double Mesh::h_max() const {
  double h = 0.0;
  for (const auto& T : cells_) {
    h = std::max(h, T.diameter);
  }
  return h;
}

MeshDescription Mesh::description() const {
  MeshDescription d;
  d.points = points_;
  for (const auto& F : faces_) {
    std::vector<Index> loop;
    for (Index v : F.vertices) {
      loop.push_back(vertices_[v].point);
    }
    d.faces.push_back(loop);
  }
  for (const auto& T : cells_) {
    std::vector<std::pair<Index, int>> c;
    for (std::size_t i = 0; i < T.faces.size(); ++i) {
      c.emplace_back(T.faces[i], T.face_orientations[i]);
    }
    d.cells.push_back(c);
  }
  for (const auto& S : simplices_) {
    d.simplices.push_back(S.points);
    d.parent.push_back(S.cell);
  }
  d.gamma_faces = gamma_faces_;
  return d;
}

//------------------------------------------------------------------------------
// Gamma
//------------------------------------------------------------------------------

Gamma Gamma::none(const Mesh& mesh) {
  return {std::vector<bool>(mesh.n_faces(), false), std::vector<bool>(mesh.n_edges(), false),
          std::vector<bool>(mesh.n_vertices(), false)};
}

Gamma Gamma::from_faces(const Mesh& mesh, const std::vector<Index>& faces) {
  Gamma g = none(mesh);
  for (Index f : faces) {
    if (f < 0 || f >= mesh.n_faces() || !mesh.is_boundary(f)) {
      throw Error("Gamma: face " + std::to_string(f) + " is not a boundary face");
    }
    g.face[f] = true;
    for (Index e : mesh.faces()[f].edges) {
      g.edge[e] = true;
    }
    for (Index v : mesh.faces()[f].vertices) {
      g.vertex[v] = true;
    }
  }
  return g;
}

Gamma Gamma::all(const Mesh& mesh) {
  std::vector<Index> faces;
  for (Index f = 0; f < mesh.n_faces(); ++f) {
    if (mesh.is_boundary(f)) {
      faces.push_back(f);
    }
  }
  return from_faces(mesh, faces);
}

Gamma Gamma::xmin(const Mesh& mesh) {
  std::vector<Index> faces;
  for (Index f = 0; f < mesh.n_faces(); ++f) {
    if (!mesh.is_boundary(f)) {
      continue;
    }
    bool on = true;
    for (Index v : mesh.faces()[f].vertices) {
      on = on && std::abs(mesh.vertex_position(v).x()) < 1e-12;
    }
    if (on) {
      faces.push_back(f);
    }
  }
  return from_faces(mesh, faces);
}

Gamma Gamma::parse(const Mesh& mesh, const std::string& spec) {
  if (spec == "none") {
    return none(mesh);
  }
  if (spec == "all") {
    return all(mesh);
  }
  if (spec == "xmin") {
    return xmin(mesh);
  }
  if (spec.rfind("ids:", 0) == 0) {
    std::vector<Index> ids;
    std::stringstream ss(spec.substr(4));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) {
        ids.push_back(std::stol(tok));
      }
    }
    return from_faces(mesh, ids);
  }
  throw Error("Gamma: unknown specification '" + spec + "'");
}

bool Gamma::empty() const { return std::none_of(face.begin(), face.end(), [](bool b) { return b; }); }

bool Gamma::is_all(const Mesh& mesh) const {
  for (Index f = 0; f < mesh.n_faces(); ++f) {
    if (mesh.is_boundary(f) && !face[f]) {
      return false;
    }
  }
  return true;
}

//------------------------------------------------------------------------------
// Patches
//------------------------------------------------------------------------------

namespace {

std::vector<Index> cell_points(const Mesh& mesh, Index t) {
  std::set<Index> pts;
  for (Index s : mesh.cells()[t].simplices) {
    pts.insert(mesh.simplices()[s].points.begin(), mesh.simplices()[s].points.end());
  }
  return {pts.begin(), pts.end()};
}

std::set<Index> simplices_touching(const Mesh& mesh, const std::set<Index>& points) {
  std::set<Index> out;
  for (Index p : points) {
    out.insert(mesh.point_simplices(p).begin(), mesh.point_simplices(p).end());
  }
  return out;
}

Patch simplicial_patch(const Mesh& mesh, const std::set<Index>& seed_points, Index parent_cell) {
  std::set<Index> level = simplices_touching(mesh, seed_points);
  for (int l = 0; l < 3; ++l) {
    std::set<Index> pts;
    for (Index s : level) {
      pts.insert(mesh.simplices()[s].points.begin(), mesh.simplices()[s].points.end());
    }
    level = simplices_touching(mesh, pts);
  }
  Patch P{Patch::Kind::Simplicial, {level.begin(), level.end()}, true, 0};
  const Patch pp = polytopal_patch(mesh, parent_cell);
  const std::set<Index> allowed(pp.members.begin(), pp.members.end());
  std::set<Index> verts;
  std::set<std::array<Index, 2>> edges;
  std::set<std::array<Index, 3>> faces;
  for (Index s : P.members) {
    const auto& S = mesh.simplices()[s];
    P.contained = P.contained && allowed.count(S.cell) > 0;
    auto p = S.points;
    std::sort(p.begin(), p.end());
    verts.insert(p.begin(), p.end());
    for (int i = 0; i < 4; ++i) {
      for (int j = i + 1; j < 4; ++j) {
        edges.insert({p[i], p[j]});
        for (int k = j + 1; k < 4; ++k) {
          faces.insert({p[i], p[j], p[k]});
        }
      }
    }
  }
  P.euler_characteristic = static_cast<long>(verts.size()) - static_cast<long>(edges.size()) +
                           static_cast<long>(faces.size()) - static_cast<long>(P.members.size());
  return P;
}

} // namespace

Patch polytopal_patch(const Mesh& mesh, Index cell) {
  std::set<Index> cells;
  for (Index p : cell_points(mesh, cell)) {
    for (Index s : mesh.point_simplices(p)) {
      cells.insert(mesh.simplices()[s].cell);
    }
  }
  return {Patch::Kind::Polytopal, {cells.begin(), cells.end()}, true, 1};
}

Patch simplicial_patch_of_simplex(const Mesh& mesh, Index simplex) {
  const auto& S = mesh.simplices()[simplex];
  return simplicial_patch(mesh, {S.points.begin(), S.points.end()}, S.cell);
}

Patch simplicial_patch_of_cell(const Mesh& mesh, Index cell) {
  const auto pts = cell_points(mesh, cell);
  return simplicial_patch(mesh, {pts.begin(), pts.end()}, cell);
}

//------------------------------------------------------------------------------
// Regularity
//------------------------------------------------------------------------------

RegularityReport regularity_report(const Mesh& mesh, bool with_simplicial_patches) {
  RegularityReport r{1e300, 1e300, 0, 0, 0, true, mesh.h_max()};
  const auto& P = mesh.points();
  for (Index t = 0; t < mesh.n_cells(); ++t) {
    const auto& T = mesh.cells()[t];
    double rad = 1e300;
    for (Index f : T.faces) {
      for (Index sf : mesh.faces()[f].subfaces) {
        const auto& q = mesh.subfaces()[sf].points;
        rad = std::min(rad, point_triangle_distance(T.center, P[q[0]], P[q[1]], P[q[2]]));
      }
    }
    if (!(rad > 1e-12 * T.diameter)) {
      throw Error("regularity_report: degenerate entity: cell " + std::to_string(t));
    }
    r.min_cell_inradius_ratio = std::min(r.min_cell_inradius_ratio, rad / T.diameter);
    r.max_simplices_per_cell = std::max(r.max_simplices_per_cell, static_cast<Index>(T.simplices.size()));
    r.max_polytopal_patch = std::max(r.max_polytopal_patch, static_cast<Index>(polytopal_patch(mesh, t).members.size()));
  }
  for (Index f = 0; f < mesh.n_faces(); ++f) {
    const auto& F = mesh.faces()[f];
    double rad = 1e300;
    for (Index e : F.edges) {
      const auto& E = mesh.edges()[e];
      rad = std::min(rad, point_segment_distance(F.center, mesh.vertex_position(E.vertices[0]),
                                                 mesh.vertex_position(E.vertices[1])));
    }
    if (!(rad > 1e-12 * F.diameter)) {
      throw Error("regularity_report: degenerate entity: face " + std::to_string(f));
    }
    r.min_face_inradius_ratio = std::min(r.min_face_inradius_ratio, rad / F.diameter);
  }
  if (with_simplicial_patches) {
    for (Index s = 0; s < static_cast<Index>(mesh.simplices().size()); ++s) {
      const Patch p = simplicial_patch_of_simplex(mesh, s);
      r.max_simplicial_patch = std::max(r.max_simplicial_patch, static_cast<Index>(p.members.size()));
      r.all_patches_contained = r.all_patches_contained && p.contained;
    }
  }
  return r;
}

} // namespace ddr
