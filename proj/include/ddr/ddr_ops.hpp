#ifndef DDR_DDR_OPS_HPP
#define DDR_DDR_OPS_HPP

#include <ddr/ddr_core.hpp>

namespace ddr {

//------------------------------------------------------------------------------
// Local maps and physical parameters
//------------------------------------------------------------------------------

/// Dense map acting on a sorted list of global components
struct LocalMap {
  std::vector<Index> dofs;
  Eigen::MatrixXd matrix;

  Eigen::VectorXd apply(const Eigen::VectorXd& z) const;
};

/// Symmetric coercive parameter; scalar uses take a third of the trace
struct Parameter {
  std::string name;
  std::function<Mat3(const Vec3& x, Index cell)> value;

  double scalar(const Vec3& x, Index cell) const { return value(x, cell).trace() / 3.0; }

  static Parameter identity();
  /// Constant diag(1, 2, 5)
  static Parameter diagonal();
  /// Piecewise constant: 1 on cells with center x < 1/2, 10 elsewhere
  static Parameter piecewise(const Mesh& mesh);
  /// Parses id | diag | piecewise
  static Parameter parse(const std::string& name, const Mesh& mesh);
};

//------------------------------------------------------------------------------
// Discrete operators, potentials and stabilizations
//------------------------------------------------------------------------------

/// Assembled DDR operators uG, uC, D with all local reconstructions
class DdrOperators {
public:
  explicit DdrOperators(const DdrContext& ctx);
  DdrOperators(const DdrOperators&) = delete;
  DdrOperators& operator=(const DdrOperators&) = delete;

  const DdrContext& context() const { return ctx_; }
  const Mesh& mesh() const { return ctx_.mesh(); }
  int k() const { return ctx_.k(); }
  const DofLayout& layout(SpaceKind space) const;
  /// Size of P^k(T_h), numbered cell by cell
  Index pk_size() const { return mesh().n_cells() * poly_dim(3, k()); }

  const SparseMatrix& uG() const { return uG_; }
  const SparseMatrix& uC() const { return uC_; }
  const SparseMatrix& D() const { return D_; }

  // Edge maps (grad space; tr in P^{k+1}(E), G in P^k(E))
  const LocalMap& edge_trace(Index e) const { return edge_trace_[e]; }
  const LocalMap& edge_gradient(Index e) const { return edge_grad_[e]; }
  // Face maps (G_F, trt_F in P^k(F)^2 frame components, tr_F in P^{k+1}(F), C_F in P^k(F))
  const LocalMap& face_gradient(Index f) const { return face_grad_[f]; }
  const LocalMap& face_trace(Index f) const { return face_trace_[f]; }
  const LocalMap& face_curl(Index f) const { return face_curl_[f]; }
  const LocalMap& face_tangential_trace(Index f) const { return face_trt_[f]; }
  // Cell maps (vector quantities in P^k(T)^3, P_grad in P^{k+1}(T), D_T in P^k(T))
  const LocalMap& cell_gradient(Index t) const { return cell_grad_[t]; }
  const LocalMap& cell_curl(Index t) const { return cell_curl_[t]; }
  const LocalMap& cell_divergence(Index t) const { return cell_div_[t]; }
  const LocalMap& potential(SpaceKind space, Index t) const;
  /// Orthonormal family in which potential(space, t) is expressed
  const PolySet& potential_space(SpaceKind space, Index t) const;
  /// Gram matrix of s_{space,T} on the closure components of T
  const LocalMap& stabilization(SpaceKind space, Index t) const;

  /// Global matrix of s_{space,h}
  SparseMatrix stabilization_matrix(SpaceKind space) const;
  /// Global matrix of the mu-weighted inner product
  SparseMatrix inner_product_matrix(SpaceKind space, const Parameter& mu) const;
  /// Global matrix of the unweighted L2 product of the potentials (no stabilization)
  SparseMatrix potential_mass_matrix(SpaceKind space) const;

private:
  void build_edges();
  void build_faces();
  void build_cells();
  void build_stabilizations();
  void assemble_globals();

  const DdrContext& ctx_;
  DofLayout grad_, curl_, div_;
  std::vector<LocalMap> edge_trace_, edge_grad_;
  std::vector<LocalMap> face_grad_, face_trace_, face_curl_, face_trt_;
  std::vector<LocalMap> cell_grad_, cell_pgrad_, cell_curl_, cell_pcurl_, cell_div_, cell_pdiv_;
  std::vector<LocalMap> stab_grad_, stab_curl_, stab_div_;
  SparseMatrix uG_, uC_, D_;
};

/// Scalar magnitude of mu on a cell: spectral norm of its cell average (a third of its trace for Grad)
double cell_magnitude(const DdrContext& ctx, const Parameter& mu, Index cell, SpaceKind space);
double cell_magnitude(const DdrContext& ctx, const Parameter& mu, Index cell);

double inner_product(const DdrOperators& ops, SpaceKind space, const Parameter& mu, const Eigen::VectorXd& z,
                     const Eigen::VectorXd& y);
double l2_norm(const DdrOperators& ops, SpaceKind space, const Parameter& mu, const Eigen::VectorXd& z);

/// Coordinates of the L2 projection of a broken polynomial field onto P^k(T_h)
Eigen::VectorXd project_pk(const DdrContext& ctx, const ScalarSampler& f);

//------------------------------------------------------------------------------
// Relation residuals and export
//------------------------------------------------------------------------------

/// Maximal relative residuals of the cell integration-by-parts relations linking potentials and operators
struct RelationResiduals {
  double grad = 0.0; ///< tested on RT^{k+1}(T)
  double curl = 0.0; ///< tested on NE^{k+1}(T)
  double div = 0.0;  ///< tested on P^{k+1}(T)
};
RelationResiduals relation_residuals(const DdrOperators& ops, const Eigen::VectorXd& q, const Eigen::VectorXd& v,
                                     const Eigen::VectorXd& w);

/// Coordinate (row col value) text export, 0-based, with a size header line
std::string to_triplets(const SparseMatrix& A);

} // namespace ddr

#endif
