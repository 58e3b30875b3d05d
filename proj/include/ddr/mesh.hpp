#ifndef DDR_MESH_HPP
#define DDR_MESH_HPP

#include <array>
#include <cstdint>
#include <string>

#include <ddr/common.hpp>

namespace ddr {

/// Raw description of a polytopal mesh with its matching simplicial submesh (the JSON file layout)
struct MeshDescription {
  std::vector<Vec3> points;
  std::vector<std::vector<Index>> faces;                ///< oriented point loops
  std::vector<std::vector<std::pair<Index, int>>> cells; ///< (face, omega_TF)
  std::vector<std::array<Index, 4>> simplices;
  std::vector<Index> parent; ///< simplex -> cell
  std::vector<Index> gamma_faces;
};

/// Oriented polytopal mesh with a matching tetrahedral submesh
class Mesh {
public:
  struct Vertex {
    Index point;
    std::vector<Index> edges;
  };
  struct Edge {
    std::array<Index, 2> vertices; ///< tangent points from vertices[0] to vertices[1]
    Vec3 tangent, center;
    double length;
    std::vector<Index> faces;
    std::vector<Index> subedges;
  };
  struct Face {
    std::vector<Index> vertices; ///< loop, counter-clockwise around the normal
    std::vector<Index> edges;    ///< edges[i] joins vertices[i] and vertices[i+1]
    std::vector<int> edge_orientations; ///< omega_FE: omega_FE t_E is clockwise on the face boundary
    Vec3 normal, center;
    double diameter, area;
    std::vector<Index> cells;
    std::vector<Index> subfaces;
  };
  struct Cell {
    std::vector<Index> faces;
    std::vector<int> face_orientations; ///< omega_TF: omega_TF n_F points out of the cell
    std::vector<Index> edges, vertices;
    Vec3 center;
    double diameter, volume;
    std::vector<Index> simplices;
  };
  struct Simplex {
    std::array<Index, 4> points; ///< positively oriented
    Index cell;
    double volume;
  };
  struct SubFace {
    std::array<Index, 3> points;
    std::vector<Index> simplices;
    Index face = -1; ///< parent polytopal face, -1 if inside a cell
  };
  struct SubEdge {
    std::array<Index, 2> points;
    std::vector<Index> simplices;
    Index edge = -1; ///< parent polytopal edge, -1 if not on the skeleton
  };

  /// Builds and validates a mesh; throws Error naming the first violated invariant
  explicit Mesh(const MeshDescription& desc);

  const std::vector<Vec3>& points() const { return points_; }
  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<Simplex>& simplices() const { return simplices_; }
  const std::vector<SubFace>& subfaces() const { return subfaces_; }
  const std::vector<SubEdge>& subedges() const { return subedges_; }

  Index n_vertices() const { return static_cast<Index>(vertices_.size()); }
  Index n_edges() const { return static_cast<Index>(edges_.size()); }
  Index n_faces() const { return static_cast<Index>(faces_.size()); }
  Index n_cells() const { return static_cast<Index>(cells_.size()); }
  Index n_points() const { return static_cast<Index>(points_.size()); }
  Index n_simplices() const { return static_cast<Index>(simplices_.size()); }

  const Vec3& vertex_position(Index v) const { return points_[vertices_[v].point]; }
  /// Polytopal vertex at a point, -1 if the point is interior to a face or cell
  Index point_vertex(Index p) const { return point_vertex_[p]; }
  const std::vector<Index>& point_simplices(Index p) const { return point_simplices_[p]; }
  bool is_boundary(Index face) const { return faces_[face].cells.size() == 1; }
  /// Largest cell diameter
  double h_max() const;

  /// Gamma tags supplied with the description
  const std::vector<Index>& gamma_faces() const { return gamma_faces_; }
  /// Raw description (round trip for serialization)
  MeshDescription description() const;

private:
  std::vector<Vec3> points_;
  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  std::vector<Face> faces_;
  std::vector<Cell> cells_;
  std::vector<Simplex> simplices_;
  std::vector<SubFace> subfaces_;
  std::vector<SubEdge> subedges_;
  std::vector<Index> point_vertex_;
  std::vector<std::vector<Index>> point_simplices_;
  std::vector<Index> gamma_faces_;
};

//------------------------------------------------------------------------------
// Boundary part Gamma
//------------------------------------------------------------------------------

/// Boundary faces in Gamma and the edges/vertices in its closure
struct Gamma {
  std::vector<bool> face, edge, vertex;

  static Gamma none(const Mesh& mesh);
  static Gamma all(const Mesh& mesh);
  static Gamma from_faces(const Mesh& mesh, const std::vector<Index>& faces);
  /// Boundary faces lying on the plane x = 0
  static Gamma xmin(const Mesh& mesh);
  /// Parses none | all | xmin | ids:i,j,...
  static Gamma parse(const Mesh& mesh, const std::string& spec);

  bool empty() const;
  /// True when Gamma is the whole boundary
  bool is_all(const Mesh& mesh) const;
};

//------------------------------------------------------------------------------
// Generators and I/O
//------------------------------------------------------------------------------

/// Unit cube, n^3 sub-cubes each split into 6 Kuhn tetrahedra, the tetrahedra being the cells
Mesh gen_tet_cube(int n);
/// Unit cube, n^3 hexahedral cells with the Kuhn split as submesh
Mesh gen_hex_cube(int n);
/// Tetrahedral cube with tetrahedra greedily merged into star-shaped polytopes
Mesh gen_agglomerated(int n, std::uint64_t seed);
/// Single reference tetrahedron
Mesh gen_single_tet();
/// Dispatch on tet | hex | agglo
Mesh make_mesh(const std::string& family, int n, std::uint64_t seed = 0);

MeshDescription description_from_json(const std::string& text);
std::string description_to_json(const MeshDescription& desc);
Mesh load_mesh(const std::string& path);
void save_mesh(const Mesh& mesh, const std::string& path);

//------------------------------------------------------------------------------
// Patches and regularity
//------------------------------------------------------------------------------

struct Patch {
  enum class Kind { Polytopal, Simplicial } kind;
  std::vector<Index> members;  ///< cells or simplices
  bool contained = true;       ///< simplicial patch inside the polytopal patch of the parent cell
  long euler_characteristic = 1;
};

/// Cells whose closure meets the closure of cell T
Patch polytopal_patch(const Mesh& mesh, Index cell);
/// 4-level simplicial patch around a simplex
Patch simplicial_patch_of_simplex(const Mesh& mesh, Index simplex);
/// 4-level simplicial patch around a cell
Patch simplicial_patch_of_cell(const Mesh& mesh, Index cell);

struct RegularityReport {
  double min_cell_inradius_ratio;
  double min_face_inradius_ratio;
  Index max_simplices_per_cell;
  Index max_polytopal_patch;
  Index max_simplicial_patch;
  bool all_patches_contained;
  double h;
};

/// Ratios of inradius to diameter and patch sizes; throws on a degenerate entity
RegularityReport regularity_report(const Mesh& mesh, bool with_simplicial_patches = true);

} // namespace ddr

#endif
