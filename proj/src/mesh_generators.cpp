#include <ddr/mesh.hpp>

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace ddr {

namespace {

/// Polytopal face of a group of simplices: one connected planar patch of boundary triangles towards one neighbour
struct GroupFace {
  Index neighbour; ///< neighbouring group, -1 on the domain boundary
  std::vector<Index> loop; ///< counter-clockwise around the outward normal of the group
  std::vector<std::array<Index, 3>> triangles;
  Vec3 normal;
};

/// Tetrahedral submesh with a grouping of simplices into cells
class Grouping {
public:
  Grouping(std::vector<Vec3> points, std::vector<std::array<Index, 4>> simplices)
      : points_(std::move(points)), simplices_(std::move(simplices)), point_simplices_(points_.size()) {
    for (std::size_t s = 0; s < simplices_.size(); ++s) {
      for (Index p : simplices_[s]) {
        point_simplices_[p].push_back(static_cast<Index>(s));
      }
      for (int omit = 0; omit < 4; ++omit) {
        auto tri = triangle(static_cast<Index>(s), omit);
        std::sort(tri.begin(), tri.end());
        across_[tri].push_back(static_cast<Index>(s));
      }
    }
    group_.resize(simplices_.size());
    std::iota(group_.begin(), group_.end(), 0);
  }

  const std::vector<Vec3>& points() const { return points_; }
  const std::vector<std::array<Index, 4>>& simplices() const { return simplices_; }
  std::vector<Index>& group() { return group_; }

  /// Triangle of simplex s opposite to local vertex omit, oriented outward
  std::array<Index, 3> oriented_triangle(Index s, int omit) const {
    auto t = triangle(s, omit);
    const Vec3& a = points_[t[0]];
    const Vec3 n = (points_[t[1]] - a).cross(points_[t[2]] - a);
    if (n.dot(points_[simplices_[s][omit]] - a) > 0) {
      std::swap(t[1], t[2]);
    }
    return t;
  }

  /// Simplex across the triangle of s opposite to omit, -1 on the boundary
  Index neighbour(Index s, int omit) const {
    auto tri = triangle(s, omit);
    std::sort(tri.begin(), tri.end());
    for (Index o : across_.at(tri)) {
      if (o != s) {
        return o;
      }
    }
    return -1;
  }

  std::vector<Index> members(Index g) const {
    std::vector<Index> m;
    for (std::size_t s = 0; s < group_.size(); ++s) {
      if (group_[s] == g) {
        m.push_back(static_cast<Index>(s));
      }
    }
    return m;
  }

  /// Faces of the group; false if a face is not a simple star-shaped polygon
  bool faces(const std::vector<Index>& members, std::vector<GroupFace>& out, double margin) const {
    out.clear();
    const Index g = group_[members[0]];
    std::map<Index, std::vector<std::array<Index, 3>>> by_neighbour;
    for (Index s : members) {
      for (int omit = 0; omit < 4; ++omit) {
        const Index o = neighbour(s, omit);
        if (o >= 0 && group_[o] == g) {
          continue;
        }
        by_neighbour[o < 0 ? -1 : group_[o]].push_back(oriented_triangle(s, omit));
      }
    }
    for (const auto& [nb, tris] : by_neighbour) {
      // Cluster by plane, then split into edge-connected components
      std::vector<int> cluster(tris.size(), -1);
      std::vector<std::pair<Vec3, double>> planes;
      for (std::size_t i = 0; i < tris.size(); ++i) {
        const Vec3& a = points_[tris[i][0]];
        const Vec3 n = (points_[tris[i][1]] - a).cross(points_[tris[i][2]] - a).normalized();
        const double d = n.dot(a);
        for (std::size_t c = 0; c < planes.size(); ++c) {
          if (n.dot(planes[c].first) > 1.0 - 1e-10 && std::abs(d - planes[c].second) < 1e-10) {
            cluster[i] = static_cast<int>(c);
            break;
          }
        }
        if (cluster[i] < 0) {
          cluster[i] = static_cast<int>(planes.size());
          planes.emplace_back(n, d);
        }
      }
      std::vector<int> comp(tris.size());
      std::iota(comp.begin(), comp.end(), 0);
      std::function<int(int)> root = [&](int i) { return comp[i] == i ? i : comp[i] = root(comp[i]); };
      std::map<std::pair<Index, Index>, int> edge_owner;
      for (std::size_t i = 0; i < tris.size(); ++i) {
        for (int j = 0; j < 3; ++j) {
          const Index a = tris[i][j], b = tris[i][(j + 1) % 3];
          const auto key = std::make_pair(std::min(a, b), std::max(a, b));
          auto it = edge_owner.find(key);
          if (it == edge_owner.end()) {
            edge_owner[key] = static_cast<int>(i);
          } else if (cluster[it->second] == cluster[i]) {
            comp[root(static_cast<int>(i))] = root(it->second);
          }
        }
      }
      std::map<int, std::vector<std::array<Index, 3>>> components;
      for (std::size_t i = 0; i < tris.size(); ++i) {
        components[root(static_cast<int>(i))].push_back(tris[i]);
      }
      for (const auto& [c, ctris] : components) {
        GroupFace F{nb, {}, ctris, planes[cluster[c]].first};
        if (!boundary_loop(F, margin)) {
          return false;
        }
        out.push_back(std::move(F));
      }
    }
    return true;
  }

  /// Star-shapedness of a group with respect to its volume centroid
  bool star_shaped(const std::vector<Index>& members, const std::vector<GroupFace>& faces, double margin) const {
    Vec3 c = Vec3::Zero();
    double vol = 0.0;
    std::vector<Vec3> pts;
    for (Index s : members) {
      const auto& S = simplices_[s];
      const double v = std::abs((points_[S[1]] - points_[S[0]]).dot((points_[S[2]] - points_[S[0]]).cross(points_[S[3]] - points_[S[0]])));
      vol += v;
      c += v * (points_[S[0]] + points_[S[1]] + points_[S[2]] + points_[S[3]]) / 4.0;
      for (Index p : S) {
        pts.push_back(points_[p]);
      }
    }
    c /= vol;
    double h = 0.0;
    for (const auto& p : pts) {
      for (const auto& q : pts) {
        h = std::max(h, (p - q).norm());
      }
    }
    for (const auto& F : faces) {
      for (const auto& t : F.triangles) {
        if ((c - points_[t[0]]).dot(F.normal) > -margin * h) {
          return false;
        }
      }
    }
    return true;
  }

  /// No point interior to a face of the group may touch a third group
  bool no_hanging_points(Index g, const std::vector<GroupFace>& faces) const {
    for (const auto& F : faces) {
      const std::set<Index> loop(F.loop.begin(), F.loop.end());
      for (const auto& t : F.triangles) {
        for (Index p : t) {
          if (loop.count(p)) {
            continue;
          }
          for (Index s : point_simplices_[p]) {
            if (group_[s] != g && group_[s] != F.neighbour) {
              return false;
            }
          }
          if (F.neighbour >= 0 && boundary_point(p)) {
            return false;
          }
        }
      }
    }
    return true;
  }

private:
  std::array<Index, 3> triangle(Index s, int omit) const {
    std::array<Index, 3> t;
    int j = 0;
    for (int i = 0; i < 4; ++i) {
      if (i != omit) {
        t[j++] = simplices_[s][i];
      }
    }
    return t;
  }

  bool boundary_point(Index p) const {
    for (Index s : point_simplices_[p]) {
      for (int omit = 0; omit < 4; ++omit) {
        if (simplices_[s][omit] != p && neighbour(s, omit) < 0) {
          return true;
        }
      }
    }
    return false;
  }

  /// Extracts the boundary loop of a planar triangle patch and checks it is simple and star-shaped
  bool boundary_loop(GroupFace& F, double margin) const {
    std::set<std::pair<Index, Index>> directed;
    for (const auto& t : F.triangles) {
      for (int j = 0; j < 3; ++j) {
        directed.insert({t[j], t[(j + 1) % 3]});
      }
    }
    std::map<Index, Index> next;
    for (const auto& [a, b] : directed) {
      if (directed.count({b, a})) {
        continue;
      }
      if (next.count(a)) {
        return false;
      }
      next[a] = b;
    }
    const Index start = next.begin()->first;
    Index cur = start;
    do {
      F.loop.push_back(cur);
      cur = next.at(cur);
    } while (cur != start && F.loop.size() <= next.size());
    if (F.loop.size() != next.size()) {
      return false;
    }
    double area = 0.0, h = 0.0;
    Vec3 c = Vec3::Zero();
    for (const auto& t : F.triangles) {
      const double a = 0.5 * (points_[t[1]] - points_[t[0]]).cross(points_[t[2]] - points_[t[0]]).norm();
      area += a;
      c += a * (points_[t[0]] + points_[t[1]] + points_[t[2]]) / 3.0;
    }
    c /= area;
    for (Index p : F.loop) {
      for (Index q : F.loop) {
        h = std::max(h, (points_[p] - points_[q]).norm());
      }
    }
    for (std::size_t i = 0; i < F.loop.size(); ++i) {
      const Vec3& a = points_[F.loop[i]];
      const Vec3& b = points_[F.loop[(i + 1) % F.loop.size()]];
      if ((b - a).cross(c - a).dot(F.normal) < margin * h * (b - a).norm()) {
        return false;
      }
    }
    return true;
  }

  std::vector<Vec3> points_;
  std::vector<std::array<Index, 4>> simplices_;
  std::vector<std::vector<Index>> point_simplices_;
  std::map<std::array<Index, 3>, std::vector<Index>> across_;
  std::vector<Index> group_;
};

/// Builds the description of the polytopal mesh whose cells are the simplex groups
MeshDescription describe(Grouping& grouping) {
  auto& group = grouping.group();
  std::map<Index, Index> renumber;
  for (Index g : group) {
    renumber.emplace(g, 0);
  }
  Index next = 0;
  for (auto& [g, id] : renumber) {
    id = next++;
  }
  for (Index& g : group) {
    g = renumber[g];
  }
  MeshDescription d;
  d.points = grouping.points();
  d.simplices = grouping.simplices();
  d.parent = group;
  d.cells.resize(next);
  for (Index g = 0; g < next; ++g) {
    std::vector<GroupFace> faces;
    if (!grouping.faces(grouping.members(g), faces, 0.0)) {
      throw Error("mesh generator: invalid cell " + std::to_string(g));
    }
    for (const auto& F : faces) {
      if (F.neighbour >= 0 && F.neighbour < g) {
        continue;
      }
      const Index f = static_cast<Index>(d.faces.size());
      d.faces.push_back(F.loop);
      d.cells[g].emplace_back(f, 1);
      if (F.neighbour >= 0) {
        d.cells[F.neighbour].emplace_back(f, -1);
      }
    }
  }
  return d;
}

/// Kuhn split of the unit cube into n^3 sub-cubes of 6 tetrahedra; cube index of each simplex in `cube`
Grouping kuhn_cube(int n, std::vector<Index>* cube = nullptr) {
  if (n < 1) {
    throw Error("mesh generator: n must be positive");
  }
  std::vector<Vec3> points;
  auto id = [n](int i, int j, int k) { return static_cast<Index>((k * (n + 1) + j) * (n + 1) + i); };
  for (int k = 0; k <= n; ++k) {
    for (int j = 0; j <= n; ++j) {
      for (int i = 0; i <= n; ++i) {
        points.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n, static_cast<double>(k) / n);
      }
    }
  }
  std::vector<std::array<Index, 4>> simplices;
  std::array<int, 3> perm{0, 1, 2};
  std::vector<std::array<int, 3>> perms;
  do {
    perms.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        for (const auto& p : perms) {
          std::array<int, 3> c{i, j, k};
          std::array<Index, 4> S;
          S[0] = id(c[0], c[1], c[2]);
          for (int m = 0; m < 3; ++m) {
            ++c[p[m]];
            S[m + 1] = id(c[0], c[1], c[2]);
          }
          simplices.push_back(S);
          if (cube) {
            cube->push_back((k * n + j) * n + i);
          }
        }
      }
    }
  }
  return Grouping(std::move(points), std::move(simplices));
}

} // namespace

Mesh gen_tet_cube(int n) {
  Grouping g = kuhn_cube(n);
  return Mesh(describe(g));
}

Mesh gen_hex_cube(int n) {
  std::vector<Index> cube;
  Grouping g = kuhn_cube(n, &cube);
  g.group() = cube;
  return Mesh(describe(g));
}

Mesh gen_agglomerated(int n, std::uint64_t seed) {
  constexpr std::size_t max_group = 6;
  constexpr double cell_margin = 0.05, face_margin = 0.05;
  Grouping g = kuhn_cube(n);
  auto& group = g.group();
  std::vector<std::pair<Index, Index>> pairs;
  for (Index s = 0; s < static_cast<Index>(g.simplices().size()); ++s) {
    for (int omit = 0; omit < 4; ++omit) {
      const Index o = g.neighbour(s, omit);
      if (o > s) {
        pairs.emplace_back(s, o);
      }
    }
  }
  std::mt19937_64 rng(seed);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  for (const auto& [s, o] : pairs) {
    const Index g1 = group[s], g2 = group[o];
    if (g1 == g2) {
      continue;
    }
    auto m1 = g.members(g1);
    const auto m2 = g.members(g2);
    if (m1.size() + m2.size() > max_group) {
      continue;
    }
    for (Index t : m2) {
      group[t] = g1;
    }
    m1.insert(m1.end(), m2.begin(), m2.end());
    std::vector<GroupFace> faces;
    const bool ok = g.faces(m1, faces, face_margin) && g.star_shaped(m1, faces, cell_margin) &&
                    g.no_hanging_points(g1, faces);
    if (!ok) {
      for (Index t : m2) {
        group[t] = g2;
      }
    }
  }
  return Mesh(describe(g));
}

Mesh gen_single_tet() {
  MeshDescription d;
  d.points = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  d.simplices = {{0, 1, 2, 3}};
  d.parent = {0};
  d.faces = {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}};
  d.cells = {{{0, 1}, {1, 1}, {2, 1}, {3, 1}}};
  return Mesh(d);
}

Mesh make_mesh(const std::string& family, int n, std::uint64_t seed) {
  if (family == "tet") {
    return gen_tet_cube(n);
  }
  if (family == "hex") {
    return gen_hex_cube(n);
  }
  if (family == "agglo") {
    return gen_agglomerated(n, seed);
  }
  throw Error("unknown mesh family '" + family + "' (expected tet, hex or agglo)");
}

} // namespace ddr
