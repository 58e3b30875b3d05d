#ifndef DDR_FE_SPACE_HPP
#define DDR_FE_SPACE_HPP

#include <ddr/ddr_core.hpp>

namespace ddr {

//------------------------------------------------------------------------------
// Conforming spaces on the simplicial submesh
//------------------------------------------------------------------------------

enum class FeFamily { Lagrange, Nedelec, RaviartThomas, Broken };

std::string to_string(FeFamily family);

/// Sparse Cartesian values of a broken family at quadrature nodes: comp[c] is npts x broken dimension
struct SparseValues {
  int ncomp = 1;
  std::array<SparseMatrix, 3> comp;
};

/// Lag^l, NE^l, RT^l or broken P^l on the submesh, as a broken orthonormal family plus conformity constraints
class FeSpace {
public:
  /// Minimal exactness degree of the rules projecting sampled data
  static constexpr int data_quadrature_degree = 16;

  FeSpace(const Mesh& mesh, FeFamily family, int degree, const Gamma& gamma);
  FeSpace(const FeSpace&) = delete;
  FeSpace& operator=(const FeSpace&) = delete;

  const Mesh& mesh() const { return mesh_; }
  FeFamily family() const { return family_; }
  int degree() const { return degree_; }
  const Gamma& gamma() const { return gamma_; }
  bool is_vector() const { return family_ == FeFamily::Nedelec || family_ == FeFamily::RaviartThomas; }

  Index local_dim() const { return local_dim_; }
  Index broken_dim() const { return mesh_.n_simplices() * local_dim_; }
  Index offset(Index simplex) const { return simplex * local_dim_; }

  /// Orthonormal scalar basis of P^degree on a simplex
  const ScalarBasis& basis(Index simplex) const { return *bases_[simplex]; }
  /// Orthonormal local family on a simplex
  const PolySet& local(Index simplex) const { return locals_[simplex]; }
  /// Simplex rule exact for products of members with degree-4 data
  const QuadratureRule& rule(Index simplex) const { return rules_[simplex]; }
  /// Higher-degree simplex rule used to project non-polynomial data
  const QuadratureRule& data_rule(Index simplex) const { return data_rules_[simplex]; }

  /// Interface jump moments and homogeneous Gamma trace moments; conforming members form its kernel
  const SparseMatrix& constraints() const { return constraints_; }
  /// dim = broken dimension - rank(constraints)
  Index dimension() const;
  /// |C x| / max(|x|, tiny)
  double constraint_residual(const Eigen::VectorXd& x) const;

  /// Values of the broken family at rule nodes, on the simplex each node designates
  SparseValues evaluate(const QuadratureRule& rule) const;
  /// L2 projection of a field onto the broken family, integrated with the data rules
  Eigen::VectorXd project(const ScalarSampler& f) const;
  Eigen::VectorXd project(const VectorSampler& f) const;
  /// L2 norm of a broken member (orthonormal coordinates)
  double l2_norm(const Eigen::VectorXd& x) const { return x.norm(); }

  /// Pointwise evaluation; a negative simplex hint triggers point location
  ScalarSampler scalar_sampler(const Eigen::VectorXd& x) const;
  VectorSampler vector_sampler(const Eigen::VectorXd& x) const;

private:
  void build_constraints();

  const Mesh& mesh_;
  FeFamily family_;
  int degree_;
  Gamma gamma_;
  Index local_dim_ = 0;
  std::vector<std::unique_ptr<ScalarBasis>> bases_;
  std::vector<PolySet> locals_;
  std::vector<QuadratureRule> rules_, data_rules_;
  SparseMatrix constraints_;
  mutable Index dimension_ = -1;
};

/// Simplex containing x (within a relative tolerance), -1 if none
Index locate_simplex(const Mesh& mesh, const Vec3& x);

/// Numerical rank of a sparse matrix (dense pivoted QR for small sizes, sparse QR otherwise)
Index numerical_rank(const SparseMatrix& A, double tol = 1e-9);

//------------------------------------------------------------------------------
// Differentials and exactness
//------------------------------------------------------------------------------

/// Matrix of the elementwise grad/curl/div from `from` to the broken coordinates of `to`
SparseMatrix differential_matrix(const FeSpace& from, const FeSpace& to);

/// Kernel and image dimensions along Lag^l -> NE^l -> RT^l -> P^{l-1}
struct ExactnessDims {
  Index lagrange, nedelec, raviart_thomas, broken;
  Index ker_grad, im_grad, ker_curl, im_curl, ker_div, im_div;
};
ExactnessDims exactness_dims(const Mesh& mesh, int degree, const Gamma& gamma);

//------------------------------------------------------------------------------
// DDR interpolation of finite element fields
//------------------------------------------------------------------------------

/// Canonical DDR interpolation restricted to a conforming family (Lagrange->grad, Nedelec->curl, RT->div)
SparseMatrix interpolation_matrix(const DofLayout& layout, const FeSpace& fe);
/// Interpolation of a member; throws if its traces are not single-valued to `tol`
Eigen::VectorXd interpolate_fe(const DofLayout& layout, const FeSpace& fe, const Eigen::VectorXd& x,
                               double tol = 1e-9);

/// L2 projection of a member onto P^k(T) (scalar) or P^k(T)^3 (vector) on every cell, stacked by cell
SparseMatrix cell_projection_matrix(const DdrContext& ctx, const FeSpace& fe);
/// L2 projection of the trace of a scalar member onto P^k(F) on every face, stacked by face
SparseMatrix face_projection_matrix(const DdrContext& ctx, const FeSpace& fe);

} // namespace ddr

#endif
