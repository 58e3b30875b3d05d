#include <ddr/fields.hpp>

#include <cmath>
#include <numbers>
#include <random>

namespace ddr {

//------------------------------------------------------------------------------
// Function1D
//------------------------------------------------------------------------------

namespace {

double horner(const std::vector<double>& p, double t) {
  double v = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) {
    v = v * t + *it;
  }
  return v;
}

std::vector<double> poly_derivative(const std::vector<double>& p) {
  std::vector<double> d;
  for (std::size_t i = 1; i < p.size(); ++i) {
    d.push_back(static_cast<double>(i) * p[i]);
  }
  return d;
}

std::vector<double> poly_product(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.empty() || q.empty()) {
    return {};
  }
  std::vector<double> r(p.size() + q.size() - 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < q.size(); ++j) {
      r[i + j] += p[i] * q[j];
    }
  }
  return r;
}

constexpr double half_pi = std::numbers::pi / 2.0;

} // namespace

double Function1D::operator()(double t) const {
  double v = 0.0;
  for (const auto& p : pieces) {
    v += horner(p.poly, t) * std::sin(p.a * t + p.b);
  }
  return v;
}

Function1D Function1D::derivative() const {
  Function1D d;
  for (const auto& p : pieces) {
    // (P sin(a t + b))' = P' sin(a t + b) + a P sin(a t + b + pi/2)
    auto dp = poly_derivative(p.poly);
    if (!dp.empty()) {
      d.pieces.push_back({std::move(dp), p.a, p.b});
    }
    if (p.a != 0.0) {
      std::vector<double> ap = p.poly;
      for (double& c : ap) {
        c *= p.a;
      }
      d.pieces.push_back({std::move(ap), p.a, p.b + half_pi});
    }
  }
  return d;
}

Function1D Function1D::times(const std::vector<double>& poly) const {
  Function1D r;
  for (const auto& p : pieces) {
    r.pieces.push_back({poly_product(p.poly, poly), p.a, p.b});
  }
  return r;
}

Function1D Function1D::polynomial(const std::vector<double>& poly) {
  return Function1D{{{poly, 0.0, half_pi}}};
}

Function1D Function1D::sine(double a, double b, double amplitude) {
  return Function1D{{{{amplitude}, a, b}}};
}

Function1D Function1D::cosine(double a, double b, double amplitude) {
  return Function1D{{{{amplitude}, a, b + half_pi}}};
}

//------------------------------------------------------------------------------
// ScalarField and VectorField
//------------------------------------------------------------------------------

ScalarField ScalarField::separable(double c, Function1D fx, Function1D fy, Function1D fz) {
  return ScalarField({Term{c, {std::move(fx), std::move(fy), std::move(fz)}}});
}

double ScalarField::operator()(const Vec3& x) const {
  double v = 0.0;
  for (const auto& t : terms_) {
    v += t.c * t.f[0](x.x()) * t.f[1](x.y()) * t.f[2](x.z());
  }
  return v;
}

ScalarField ScalarField::partial(int axis) const {
  std::vector<Term> out;
  for (const auto& t : terms_) {
    Term d = t;
    d.f[axis] = t.f[axis].derivative();
    if (!d.f[axis].pieces.empty()) {
      out.push_back(std::move(d));
    }
  }
  return ScalarField(std::move(out));
}

VectorField ScalarField::gradient() const {
  return VectorField({partial(0), partial(1), partial(2)});
}

ScalarField ScalarField::times(int axis, const std::vector<double>& poly) const {
  std::vector<Term> out = terms_;
  for (auto& t : out) {
    t.f[axis] = t.f[axis].times(poly);
  }
  return ScalarField(std::move(out));
}

ScalarField ScalarField::operator+(const ScalarField& o) const {
  std::vector<Term> out = terms_;
  out.insert(out.end(), o.terms_.begin(), o.terms_.end());
  return ScalarField(std::move(out));
}

ScalarField ScalarField::scaled(double s) const {
  std::vector<Term> out = terms_;
  for (auto& t : out) {
    t.c *= s;
  }
  return ScalarField(std::move(out));
}

ScalarSampler ScalarField::sampler() const {
  auto self = std::make_shared<const ScalarField>(*this);
  return [self](const Vec3& x, Index) { return (*self)(x); };
}

ScalarInput ScalarField::input() const {
  return {sampler(), gradient().sampler()};
}

Vec3 VectorField::operator()(const Vec3& x) const {
  return Vec3(comp_[0](x), comp_[1](x), comp_[2](x));
}

Mat3 VectorField::jacobian(const Vec3& x) const {
  Mat3 J;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      J(i, j) = comp_[i].partial(j)(x);
    }
  }
  return J;
}

VectorField VectorField::curl() const {
  return VectorField({comp_[2].partial(1) + comp_[1].partial(2).scaled(-1.0),
                      comp_[0].partial(2) + comp_[2].partial(0).scaled(-1.0),
                      comp_[1].partial(0) + comp_[0].partial(1).scaled(-1.0)});
}

ScalarField VectorField::div() const {
  return comp_[0].partial(0) + comp_[1].partial(1) + comp_[2].partial(2);
}

VectorField VectorField::times(int component, int axis, const std::vector<double>& poly) const {
  std::array<ScalarField, 3> c = comp_;
  c[component] = c[component].times(axis, poly);
  return VectorField(std::move(c));
}

VectorField VectorField::left_multiply(const Mat3& A) const {
  std::array<ScalarField, 3> c;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (A(i, j) != 0.0) {
        c[i] = c[i] + comp_[j].scaled(A(i, j));
      }
    }
  }
  return VectorField(std::move(c));
}

VectorSampler VectorField::sampler() const {
  auto self = std::make_shared<const VectorField>(*this);
  return [self](const Vec3& x, Index) { return (*self)(x); };
}

VectorInput VectorField::input() const {
  return {sampler(), curl().sampler(), div().sampler()};
}

//------------------------------------------------------------------------------
// Registry
//------------------------------------------------------------------------------

namespace {

const std::vector<double> distance_x{0.0, 1.0};
const std::vector<double> bubble{0.0, 1.0, -1.0};

ScalarField compatible_scalar(ScalarField q, Compatibility c) {
  if (c == Compatibility::Xmin) {
    return q.times(0, distance_x);
  }
  if (c == Compatibility::All) {
    return q.times(0, bubble).times(1, bubble).times(2, bubble);
  }
  return q;
}

/// Tangential trace vanishing: component i carries the factors of the other axes
VectorField compatible_curl(VectorField v, Compatibility c) {
  if (c == Compatibility::Xmin) {
    return v.times(1, 0, distance_x).times(2, 0, distance_x);
  }
  if (c == Compatibility::All) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (j != i) {
          v = v.times(i, j, bubble);
        }
      }
    }
  }
  return v;
}

/// Normal trace vanishing: component i carries the factor of its own axis
VectorField compatible_div(VectorField v, Compatibility c) {
  if (c == Compatibility::Xmin) {
    return v.times(0, 0, distance_x);
  }
  if (c == Compatibility::All) {
    for (int i = 0; i < 3; ++i) {
      v = v.times(i, i, bubble);
    }
  }
  return v;
}

using F = Function1D;
constexpr double pi = std::numbers::pi;

// Order-one frequencies: the fields are resolved on the coarse refinements used by the rate studies
ScalarField base_scalar() {
  return ScalarField::separable(1.0, F::sine(1.1, 0.1), F::cosine(0.9, -0.2), F::sine(1.2, 0.3)) +
         ScalarField::separable(0.5, F::cosine(0.8, 0.4), F::constant(1.0), F::sine(1.0, 0.2));
}

VectorField base_vector() {
  return VectorField({ScalarField::separable(1.0, F::cosine(0.8, 0.0), F::sine(1.1, 0.3), F::cosine(1.0, 0.2)),
                      ScalarField::separable(1.0, F::cosine(1.2, -0.1), F::cosine(0.9, 0.0), F::sine(1.0, 0.5)),
                      ScalarField::separable(1.0, F::sine(1.0, 0.3), F::cosine(1.1, 0.0), F::cosine(0.7, 0.0))});
}

ScalarField random_component(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> freq(0.5 * pi, 2.0 * pi), phase(0.0, 2.0 * pi), amp(-1.0, 1.0);
  ScalarField s;
  for (int term = 0; term < 2; ++term) {
    s = s + ScalarField::separable(amp(rng), F::sine(freq(rng), phase(rng)), F::sine(freq(rng), phase(rng)),
                                   F::sine(freq(rng), phase(rng)));
  }
  return s;
}

} // namespace

Compatibility compatibility_for(const Mesh& mesh, const Gamma& gamma) {
  if (gamma.empty()) {
    return Compatibility::None;
  }
  for (Index f = 0; f < mesh.n_faces(); ++f) {
    if (gamma.face[f] && std::abs(mesh.faces()[f].center.x()) > 1e-12) {
      return Compatibility::All;
    }
  }
  return Compatibility::Xmin;
}

ScalarField manufactured_scalar(Compatibility c) {
  return compatible_scalar(base_scalar(), c);
}

VectorField manufactured_curl_field(Compatibility c) {
  return compatible_curl(base_vector(), c);
}

VectorField manufactured_div_field(Compatibility c) {
  return compatible_div(base_vector(), c);
}

ScalarField random_scalar_field(std::uint64_t seed, Compatibility c) {
  std::mt19937_64 rng(seed);
  return compatible_scalar(random_component(rng), c);
}

VectorField random_vector_field(std::uint64_t seed, Compatibility c, SpaceKind space) {
  std::mt19937_64 rng(seed);
  VectorField v({random_component(rng), random_component(rng), random_component(rng)});
  if (space == SpaceKind::Div) {
    return compatible_div(std::move(v), c);
  }
  return compatible_curl(std::move(v), c);
}

ScalarField random_polynomial(int degree, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  auto monomial = [](int p) {
    std::vector<double> c(p + 1, 0.0);
    c[p] = 1.0;
    return F::polynomial(c);
  };
  ScalarField s;
  for (int a = 0; a <= degree; ++a) {
    for (int b = 0; a + b <= degree; ++b) {
      for (int c = 0; a + b + c <= degree; ++c) {
        s = s + ScalarField::separable(coef(rng), monomial(a), monomial(b), monomial(c));
      }
    }
  }
  return s;
}

ScalarField random_compatible_polynomial(int degree, std::uint64_t seed, Compatibility c) {
  return compatible_scalar(random_polynomial(degree, seed), c);
}

VectorField random_polynomial_vector(int degree, std::uint64_t seed) {
  return VectorField({random_polynomial(degree, 3 * seed + 1), random_polynomial(degree, 3 * seed + 2),
                      random_polynomial(degree, 3 * seed + 3)});
}

VectorField random_compatible_polynomial_vector(int degree, std::uint64_t seed, Compatibility c, SpaceKind space) {
  VectorField v = random_polynomial_vector(degree, seed);
  if (space == SpaceKind::Div) {
    return compatible_div(std::move(v), c);
  }
  return compatible_curl(std::move(v), c);
}

} // namespace ddr
