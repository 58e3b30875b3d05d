#ifndef DDR_DDR_CORE_HPP
#define DDR_DDR_CORE_HPP

#include <functional>
#include <memory>

#include <ddr/mesh.hpp>
#include <ddr/polybasis.hpp>

namespace ddr {

//------------------------------------------------------------------------------
// Fields
//------------------------------------------------------------------------------

/// Pointwise field; the simplex hint selects the piece of piecewise-polynomial inputs (-1 if unknown)
using ScalarSampler = std::function<double(const Vec3& x, Index simplex)>;
using VectorSampler = std::function<Vec3(const Vec3& x, Index simplex)>;

ScalarSampler sampler(std::function<double(const Vec3&)> f);
VectorSampler sampler(std::function<Vec3(const Vec3&)> f);

//------------------------------------------------------------------------------
// Local polynomial data
//------------------------------------------------------------------------------

/// Quadrature rules, orthonormal bases and component spaces of every mesh entity at degree k
class DdrContext {
public:
  struct EdgeData {
    QuadratureRule rule;
    std::unique_ptr<ScalarBasis> basis; ///< P^{k+1}(E)
    PolySet p_km1, p_k, p_kp1;
  };
  struct FaceData {
    QuadratureRule rule;
    std::unique_ptr<ScalarBasis> basis; ///< P^{k+2}(F)
    PolySet p_km1, p_k, p_kp1, vec_k, rt_k;
  };
  struct CellData {
    QuadratureRule rule;
    std::unique_ptr<ScalarBasis> basis; ///< P^{k+2}(T)
    PolySet p_km1, p_k, p_kp1, vec_k, rt_k, ne_k;
  };

  DdrContext(const Mesh& mesh, int k);
  DdrContext(const DdrContext&) = delete;
  DdrContext& operator=(const DdrContext&) = delete;

  const Mesh& mesh() const { return mesh_; }
  int k() const { return k_; }
  /// Exactness degree of the entity quadrature rules
  int quadrature_degree() const { return 2 * k_ + 6; }
  const EdgeData& edge(Index e) const { return edges_[e]; }
  const FaceData& face(Index f) const { return faces_[f]; }
  const CellData& cell(Index t) const { return cells_[t]; }

private:
  const Mesh& mesh_;
  int k_;
  std::vector<EdgeData> edges_;
  std::vector<FaceData> faces_;
  std::vector<CellData> cells_;
};

//------------------------------------------------------------------------------
// Global DOF layout
//------------------------------------------------------------------------------

struct EntityRef {
  EntityKind kind; ///< Edge, Face or Cell
  Index id;
};

/// Numbering of the components of a DDR space: vertices, edges, faces, cells, each by id
class DofLayout {
public:
  DofLayout(const DdrContext& ctx, SpaceKind space);

  const DdrContext& context() const { return *ctx_; }
  const Mesh& mesh() const { return ctx_->mesh(); }
  SpaceKind space() const { return space_; }
  int k() const { return ctx_->k(); }
  Index size() const { return size_; }

  Index vertex_dim() const { return dims_[0]; }
  Index edge_dim() const { return dims_[1]; }
  Index face_dim() const { return dims_[2]; }
  Index cell_dim() const { return dims_[3]; }

  Index vertex_offset(Index v) const { return offsets_[0] + v * dims_[0]; }
  Index edge_offset(Index e) const { return offsets_[1] + e * dims_[1]; }
  Index face_offset(Index f) const { return offsets_[2] + f * dims_[2]; }
  Index cell_offset(Index t) const { return offsets_[3] + t * dims_[3]; }

  /// Global indices of the components attached to the closure of an entity
  std::vector<Index> closure_dofs(const EntityRef& entity) const;

private:
  const DdrContext* ctx_;
  SpaceKind space_;
  std::array<Index, 4> dims_{}, offsets_{};
  Index size_ = 0;
};

//------------------------------------------------------------------------------
// Interpolators, norms, masks
//------------------------------------------------------------------------------

Eigen::VectorXd interpolate_grad(const DofLayout& layout, const ScalarSampler& q);
Eigen::VectorXd interpolate_curl(const DofLayout& layout, const VectorSampler& v);
Eigen::VectorXd interpolate_div(const DofLayout& layout, const VectorSampler& w);

/// Squared component-norm weights: |||z|||^2 = sum_i weight_i z_i^2 (orthonormal component bases)
Eigen::VectorXd component_weights(const DofLayout& layout);
double component_norm(const DofLayout& layout, const Eigen::VectorXd& z);
double component_norm_cell(const DofLayout& layout, const Eigen::VectorXd& z, Index cell);
double component_norm_face(const DofLayout& layout, const Eigen::VectorXd& z, Index face);

/// Components forced to zero by homogeneous values on Gamma
std::vector<Index> masked_dofs(const DofLayout& layout, const Gamma& gamma);
Eigen::VectorXd apply_mask(const DofLayout& layout, const Eigen::VectorXd& z, const Gamma& gamma);
/// Uniform coefficients in [-1,1], masked
Eigen::VectorXd random_dofs(const DofLayout& layout, std::uint64_t seed, const Gamma* gamma = nullptr);
Eigen::VectorXd restrict_to(const DofLayout& layout, const Eigen::VectorXd& z, const EntityRef& entity);

/// Flat CSV with a layout header line
std::string dofs_to_csv(const DofLayout& layout, const Eigen::VectorXd& z);
Eigen::VectorXd dofs_from_csv(const DofLayout& layout, const std::string& text);

} // namespace ddr

#endif
