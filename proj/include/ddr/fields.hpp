#ifndef DDR_FIELDS_HPP
#define DDR_FIELDS_HPP

#include <array>
#include <cstdint>

#include <ddr/quasi_lift.hpp>

namespace ddr {

//------------------------------------------------------------------------------
// Manufactured fields with exact derivatives
//------------------------------------------------------------------------------

/// Sum of pieces P(t) sin(a t + b), closed under differentiation and polynomial multiplication
struct Function1D {
  struct Piece {
    std::vector<double> poly; ///< coefficients of 1, t, t^2, ...
    double a = 0.0, b = 0.0;
  };
  std::vector<Piece> pieces;

  double operator()(double t) const;
  Function1D derivative() const;
  Function1D times(const std::vector<double>& poly) const;

  static Function1D polynomial(const std::vector<double>& poly);
  static Function1D constant(double c) { return polynomial({c}); }
  /// amplitude * sin(a t + b)
  static Function1D sine(double a, double b, double amplitude = 1.0);
  /// amplitude * cos(a t + b)
  static Function1D cosine(double a, double b, double amplitude = 1.0);
};

class VectorField;

/// Sum of separable terms c f_x(x) f_y(y) f_z(z)
class ScalarField {
public:
  struct Term {
    double c = 1.0;
    std::array<Function1D, 3> f;
  };

  ScalarField() = default;
  explicit ScalarField(std::vector<Term> terms) : terms_(std::move(terms)) {}
  static ScalarField separable(double c, Function1D fx, Function1D fy, Function1D fz);
  static ScalarField zero() { return ScalarField(); }

  double operator()(const Vec3& x) const;
  ScalarField partial(int axis) const;
  VectorField gradient() const;
  ScalarField times(int axis, const std::vector<double>& poly) const;
  ScalarField operator+(const ScalarField& o) const;
  ScalarField scaled(double s) const;
  const std::vector<Term>& terms() const { return terms_; }

  ScalarSampler sampler() const;
  ScalarInput input() const;

private:
  std::vector<Term> terms_;
};

class VectorField {
public:
  VectorField() = default;
  explicit VectorField(std::array<ScalarField, 3> c) : comp_(std::move(c)) {}

  const ScalarField& operator[](int i) const { return comp_[i]; }
  Vec3 operator()(const Vec3& x) const;
  /// J(i, j) = d v_i / d x_j
  Mat3 jacobian(const Vec3& x) const;
  VectorField curl() const;
  ScalarField div() const;
  /// Componentwise product of component i by the polynomial factor along `axis`
  VectorField times(int component, int axis, const std::vector<double>& poly) const;
  /// Constant matrix times the field
  VectorField left_multiply(const Mat3& A) const;

  VectorSampler sampler() const;
  VectorInput input() const;

private:
  std::array<ScalarField, 3> comp_;
};

//------------------------------------------------------------------------------
// Registry
//------------------------------------------------------------------------------

/// Boundary compatibility of a manufactured field
enum class Compatibility { None, Xmin, All };

/// Compatibility needed for a boundary part: Xmin when Gamma lies in {x = 0}, All otherwise (if nonempty)
Compatibility compatibility_for(const Mesh& mesh, const Gamma& gamma);

/// Smooth trigonometric fields multiplied by distance-like factors so that the relevant trace
/// (value, tangential or normal component) vanishes on the requested part of the unit cube boundary
ScalarField manufactured_scalar(Compatibility c);
VectorField manufactured_curl_field(Compatibility c);
VectorField manufactured_div_field(Compatibility c);

/// Seeded family of smooth fields of unit-order amplitude, used for operator-norm sampling
ScalarField random_scalar_field(std::uint64_t seed, Compatibility c);
VectorField random_vector_field(std::uint64_t seed, Compatibility c, SpaceKind space);

/// Polynomial of total degree `degree` with seeded coefficients in [-1, 1] on every monomial
ScalarField random_polynomial(int degree, std::uint64_t seed);
/// random_polynomial made compatible with the boundary part like the manufactured fields
ScalarField random_compatible_polynomial(int degree, std::uint64_t seed, Compatibility c);
VectorField random_compatible_polynomial_vector(int degree, std::uint64_t seed, Compatibility c, SpaceKind space);
VectorField random_polynomial_vector(int degree, std::uint64_t seed);

} // namespace ddr

#endif
