#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>

#include <ddr/mesh.hpp>

using namespace ddr;

namespace {

long euler(const Mesh& m) { return m.n_vertices() - m.n_edges() + m.n_faces() - m.n_cells(); }

double total_volume(const Mesh& m) {
  double v = 0.0;
  for (const auto& T : m.cells()) {
    v += T.volume;
  }
  return v;
}

} // namespace

TEST(Mesh, TetCubeCounts) {
  const Mesh m = gen_tet_cube(1);
  EXPECT_EQ(m.n_cells(), 6);
  EXPECT_EQ(m.n_vertices(), 8);
  EXPECT_EQ(m.n_edges(), 19);
  EXPECT_EQ(m.n_faces(), 18);
  EXPECT_NEAR(total_volume(m), 1.0, 1e-14);
}

TEST(Mesh, HexCubeCounts) {
  const Mesh m = gen_hex_cube(2);
  EXPECT_EQ(m.n_cells(), 8);
  EXPECT_EQ(m.n_vertices(), 27);
  EXPECT_EQ(m.n_edges(), 54);
  EXPECT_EQ(m.n_faces(), 36);
  for (const auto& F : m.faces()) {
    EXPECT_EQ(F.vertices.size(), 4u);
    EXPECT_NEAR(F.area, 0.25, 1e-14);
  }
  EXPECT_EQ(euler(m), 1);
}

TEST(Mesh, EulerCharacteristicOfAllFamilies) {
  for (int n = 1; n <= 3; ++n) {
    EXPECT_EQ(euler(gen_tet_cube(n)), 1);
    EXPECT_EQ(euler(gen_hex_cube(n)), 1);
  }
  const Mesh a = gen_agglomerated(2, 0);
  EXPECT_EQ(euler(a), 1);
  EXPECT_LT(a.n_cells(), 48);
  EXPECT_NEAR(total_volume(a), 1.0, 1e-13);
}

TEST(Mesh, AgglomerationIsDeterministic) {
  const Mesh a = gen_agglomerated(2, 7), b = gen_agglomerated(2, 7);
  EXPECT_EQ(a.n_cells(), b.n_cells());
  EXPECT_EQ(a.n_faces(), b.n_faces());
}

TEST(Mesh, OrientationConventions) {
  const Mesh m = gen_hex_cube(1);
  const auto& T = m.cells()[0];
  for (std::size_t i = 0; i < T.faces.size(); ++i) {
    const auto& F = m.faces()[T.faces[i]];
    // omega_TF n_F points away from the cell center
    EXPECT_GT(T.face_orientations[i] * F.normal.dot(F.center - T.center), 0.0);
    // omega_FE t_E runs clockwise, so n_F x (omega_FE t_E) points out of the face
    for (std::size_t j = 0; j < F.edges.size(); ++j) {
      const auto& E = m.edges()[F.edges[j]];
      const Vec3 nFE = F.normal.cross(F.edge_orientations[j] * E.tangent);
      EXPECT_GT(nFE.dot(E.center - F.center), 0.0);
    }
  }
}

TEST(Mesh, SubEntitiesMatchParents) {
  const Mesh m = gen_agglomerated(2, 3);
  for (const auto& F : m.faces()) {
    double a = 0.0;
    for (Index sf : F.subfaces) {
      const auto& p = m.subfaces()[sf].points;
      const auto& P = m.points();
      a += 0.5 * (P[p[1]] - P[p[0]]).cross(P[p[2]] - P[p[0]]).norm();
    }
    EXPECT_NEAR(a, F.area, 1e-13);
  }
  for (const auto& E : m.edges()) {
    double l = 0.0;
    for (Index se : E.subedges) {
      const auto& p = m.subedges()[se].points;
      l += (m.points()[p[0]] - m.points()[p[1]]).norm();
    }
    EXPECT_NEAR(l, E.length, 1e-13);
  }
}

TEST(Mesh, JsonRoundTrip) {
  const Mesh m = gen_agglomerated(2, 1);
  const Mesh r(description_from_json(description_to_json(m.description())));
  EXPECT_EQ(r.n_cells(), m.n_cells());
  EXPECT_EQ(r.n_faces(), m.n_faces());
  EXPECT_EQ(r.n_edges(), m.n_edges());
  for (Index t = 0; t < m.n_cells(); ++t) {
    EXPECT_EQ((r.cells()[t].center - m.cells()[t].center).norm(), 0.0);
  }
  const std::string path = testing::TempDir() + "mesh_roundtrip.json";
  save_mesh(m, path);
  EXPECT_EQ(load_mesh(path).n_faces(), m.n_faces());
  std::remove(path.c_str());
}

TEST(Mesh, RejectsInvalidMeshes) {
  auto d = gen_hex_cube(1).description();
  {
    auto bad = d;
    bad.cells[0][0].second *= -1;
    EXPECT_THROW(Mesh{bad}, Error);
  }
  {
    auto bad = d;
    bad.points[bad.faces[0][0]] += Vec3(1e-3, 1e-3, 1e-3);
    EXPECT_THROW(Mesh{bad}, Error);
  }
  {
    auto bad = d;
    bad.cells[0].pop_back();
    EXPECT_THROW(Mesh{bad}, Error);
  }
  {
    auto bad = d;
    bad.simplices.pop_back();
    bad.parent.pop_back();
    EXPECT_THROW(Mesh{bad}, Error);
  }
  EXPECT_THROW(description_from_json("{\"vertices\": [[0,0]]}"), Error);
  EXPECT_THROW(make_mesh("prism", 1), Error);
}

TEST(Mesh, GammaSelections) {
  const Mesh m = gen_hex_cube(2);
  const auto none = Gamma::parse(m, "none");
  const auto all = Gamma::parse(m, "all");
  const auto xmin = Gamma::parse(m, "xmin");
  EXPECT_TRUE(none.empty());
  EXPECT_TRUE(all.is_all(m));
  EXPECT_EQ(std::count(xmin.face.begin(), xmin.face.end(), true), 4);
  EXPECT_EQ(std::count(xmin.vertex.begin(), xmin.vertex.end(), true), 9);
  EXPECT_EQ(std::count(xmin.edge.begin(), xmin.edge.end(), true), 12);
  EXPECT_THROW(Gamma::parse(m, "ids:0,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20,21,22,23,24,25"), Error);
  EXPECT_THROW(Gamma::parse(m, "left"), Error);
}

TEST(Mesh, RegularityOfHexMesh) {
  const Mesh m = gen_hex_cube(2);
  const auto r = regularity_report(m);
  EXPECT_NEAR(r.min_cell_inradius_ratio, 1.0 / (2.0 * std::sqrt(3.0)), 1e-12);
  EXPECT_NEAR(r.min_face_inradius_ratio, 1.0 / (2.0 * std::sqrt(2.0)), 1e-12);
  EXPECT_EQ(r.max_simplices_per_cell, 6);
  EXPECT_EQ(r.max_polytopal_patch, 8);
  EXPECT_NEAR(r.h, std::sqrt(3.0) / 2.0, 1e-14);
}

TEST(Mesh, PatchesAreContractible) {
  const Mesh m = gen_tet_cube(2);
  for (Index s = 0; s < 48; s += 5) {
    EXPECT_EQ(simplicial_patch_of_simplex(m, s).euler_characteristic, 1);
  }
  const auto p = polytopal_patch(m, 0);
  EXPECT_FALSE(p.members.empty());
}
