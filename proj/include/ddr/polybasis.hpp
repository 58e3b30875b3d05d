#ifndef DDR_POLYBASIS_HPP
#define DDR_POLYBASIS_HPP

#include <array>
#include <utility>

#include <ddr/common.hpp>
#include <ddr/quadrature.hpp>

namespace ddr {

//------------------------------------------------------------------------------
// Space descriptors and dimension formulas
//------------------------------------------------------------------------------

enum class EntityKind { Edge, Face, Cell, Simplex };
enum class Family { Scalar, Vector, RT, NE };

struct PolySpace {
  EntityKind entity;
  Family family;
  int degree;
};

/// Dimension of P^degree in `d` variables (0 for negative degree)
Index poly_dim(int d, int degree);
Index dim(const PolySpace& space);

//------------------------------------------------------------------------------
// Local frames and monomials
//------------------------------------------------------------------------------

/// Affine frame of an entity: local coordinates are axes * (x - origin) / scale
struct Frame {
  Vec3 origin = Vec3::Zero();
  double scale = 1.0;
  int dim = 3;
  Mat3 axes = Mat3::Identity(); ///< rows are the frame axes

  Vec3 axis(int a) const { return axes.row(a).transpose(); }
  Eigen::Vector3d local(const Vec3& x) const;

  static Frame cell(const Vec3& origin, double scale);
  /// Face frame with tangents (t1, n x t1), so that t1 x t2 = n
  static Frame face(const Vec3& origin, double scale, const Vec3& normal, const Vec3& t1);
  static Frame edge(const Vec3& origin, double scale, const Vec3& tangent);
};

/// Monomials of total degree <= degree in `dim` variables, ordered by degree
class Monomials {
public:
  Monomials(int dim, int degree);
  int dim() const { return dim_; }
  int degree() const { return degree_; }
  Index size() const { return static_cast<Index>(exponents_.size()); }
  const std::array<int, 3>& exponent(Index i) const { return exponents_[i]; }
  /// Index of an exponent, -1 if its degree exceeds the set
  Index index(const std::array<int, 3>& e) const;
  void values(const Eigen::Vector3d& xi, double* out) const;

private:
  int dim_, degree_;
  std::vector<std::array<int, 3>> exponents_;
};

//------------------------------------------------------------------------------
// Orthonormal hierarchical scalar basis
//------------------------------------------------------------------------------

/// L2-orthonormal basis of P^degree on an entity, nested: its first poly_dim(d, j) members span P^j
class ScalarBasis {
public:
  ScalarBasis(const Frame& frame, int degree, const QuadratureRule& rule);

  const Frame& frame() const { return frame_; }
  int degree() const { return monomials_.degree(); }
  int dim() const { return frame_.dim; }
  Index size() const { return monomials_.size(); }

  /// Values at the rule nodes, npts x size
  Eigen::MatrixXd values(const QuadratureRule& rule) const;
  Eigen::MatrixXd values(const std::vector<Vec3>& points) const;

  /// Coordinate map (acting on row coordinates) of the physical derivative along frame axis a
  const Eigen::MatrixXd& derivative(int a) const { return derivative_[a]; }
  /// Coordinate map of multiplication by the local coordinate xi_a; inputs must have degree < degree()
  const Eigen::MatrixXd& multiply(int a) const { return multiply_[a]; }
  /// Monomial coefficients (rows) of the basis functions
  const Eigen::MatrixXd& coefficients() const { return coef_; }

private:
  Frame frame_;
  Monomials monomials_;
  Eigen::MatrixXd coef_, coef_inv_;
  std::array<Eigen::MatrixXd, 3> derivative_, multiply_;
};

//------------------------------------------------------------------------------
// Sets of (vector) polynomial functions over a scalar basis
//------------------------------------------------------------------------------

/// Cartesian values of a function family at quadrature nodes: comp[c] is npts x nfunctions
struct FieldValues {
  int ncomp = 1;
  std::array<Eigen::MatrixXd, 3> comp;
  Index points() const { return comp[0].rows(); }
  Index functions() const { return comp[0].cols(); }
};

/// Family of polynomial functions with `ncomp` components along the frame axes, each expanded in a ScalarBasis
struct PolySet {
  const ScalarBasis* basis = nullptr;
  int ncomp = 1;
  Eigen::MatrixXd coef; ///< one row per function, blocks of basis->size() per component

  Index size() const { return coef.rows(); }
  FieldValues evaluate(const QuadratureRule& rule) const;
  FieldValues evaluate(const Eigen::MatrixXd& basis_values) const;
};

/// First poly_dim(d, degree) basis functions
PolySet scalar_poly(const ScalarBasis& basis, int degree);
/// P^degree with frame-aligned components (ncomp = basis dimension)
PolySet vector_poly(const ScalarBasis& basis, int degree);
/// Orthonormal basis of the span of `generators`; throws unless the rank equals `expected`
PolySet orthonormal_span(const PolySet& generators, Index expected, const std::string& what);
/// Concatenation of two families with the same basis and components
PolySet stack(const PolySet& a, const PolySet& b);

PolySet grad(const PolySet& scalar);
PolySet div(const PolySet& vector);
PolySet curl(const PolySet& vector);
/// Face rotor of a scalar: grad_F r x n_F
PolySet rot(const PolySet& scalar);
/// Scalar face rotor of a tangent field
PolySet rot_scalar(const PolySet& vector);
/// (x - x_P) p for scalar p
PolySet koszul(const PolySet& scalar);
/// (x - x_T) x p for vector p
PolySet koszul_cross(const PolySet& vector);

/// RT^degree on the entity of the basis (dimension 2 or 3)
PolySet rt_space(const ScalarBasis& basis, int degree);
/// NE^degree on a three-dimensional entity
PolySet ne_space(const ScalarBasis& basis, int degree);
/// (x - x_P) P^{degree-1}
PolySet koszul_space(const ScalarBasis& basis, int degree);
/// (x - x_T) x P^{degree-1}^3
PolySet koszul_cross_space(const ScalarBasis& basis, int degree);

/// Range and complement parts of a Koszul decomposition of vector P^k
enum class KoszulSplit {
  FaceRot,  ///< P^k(F)^2 = rot P^{k+1}(F) + (x-x_F) P^{k-1}(F)
  CellCurl, ///< P^k(T)^3 = curl NE^{k+1}(T) + (x-x_T) P^{k-1}(T)
  CellGrad  ///< P^k(T)^3 = grad P^{k+1}(T) + (x-x_T) x P^{k-1}(T)^3
};
std::pair<PolySet, PolySet> koszul_split(const ScalarBasis& basis, int k, KoszulSplit which);

//------------------------------------------------------------------------------
// Integration helpers
//------------------------------------------------------------------------------

/// Matrix of integrals of a_i . b_j
Eigen::MatrixXd integrate_products(const FieldValues& a, const FieldValues& b, const QuadratureRule& rule);
/// Vector of integrals of a_i . f, with f given by its Cartesian values (npts x ncomp)
Eigen::VectorXd integrate_against(const FieldValues& a, const Eigen::MatrixXd& f, const QuadratureRule& rule);
/// Coordinates of the L2 projection of f onto an orthonormal family
Eigen::VectorXd project(const PolySet& space, const QuadratureRule& rule, const Eigen::MatrixXd& f);

} // namespace ddr

#endif
