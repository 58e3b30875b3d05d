#include <ddr/polybasis.hpp>

#include <cmath>

namespace ddr {

//------------------------------------------------------------------------------
// Dimensions
//------------------------------------------------------------------------------

Index poly_dim(int d, int degree) {
  if (degree < 0) {
    return 0;
  }
  switch (d) {
  case 0:
    return 1;
  case 1:
    return degree + 1;
  case 2:
    return (degree + 1) * (degree + 2) / 2;
  case 3:
    return (degree + 1) * (degree + 2) * (degree + 3) / 6;
  default:
    throw Error("poly_dim: unsupported dimension " + std::to_string(d));
  }
}

namespace {

int entity_dim(EntityKind e) {
  switch (e) {
  case EntityKind::Edge:
    return 1;
  case EntityKind::Face:
    return 2;
  default:
    return 3;
  }
}

Index rt_dim(int d, int l) {
  if (l <= 0) {
    return 0;
  }
  return d == 2 ? l * (l + 2) : l * (l + 1) * (l + 3) / 2;
}

Index ne_dim(int l) { return l <= 0 ? 0 : l * (l + 2) * (l + 3) / 2; }

} // namespace

Index dim(const PolySpace& space) {
  const int d = entity_dim(space.entity);
  const int l = space.degree;
  switch (space.family) {
  case Family::Scalar:
    return poly_dim(d, l);
  case Family::Vector:
    return d * poly_dim(d, l);
  case Family::RT:
    if (d == 1) {
      throw Error("dim: RT spaces are not defined on edges");
    }
    return rt_dim(d, l);
  case Family::NE:
    if (d == 1) {
      throw Error("dim: NE spaces are not defined on edges");
    }
    return d == 2 ? rt_dim(2, l) : ne_dim(l);
  }
  return 0;
}

//------------------------------------------------------------------------------
// Frames and monomials
//------------------------------------------------------------------------------

Eigen::Vector3d Frame::local(const Vec3& x) const {
  Eigen::Vector3d xi = Eigen::Vector3d::Zero();
  const Vec3 d = (x - origin) / scale;
  for (int a = 0; a < dim; ++a) {
    xi(a) = axes.row(a).dot(d);
  }
  return xi;
}

Frame Frame::cell(const Vec3& origin, double scale) {
  Frame f;
  f.origin = origin;
  f.scale = scale;
  f.dim = 3;
  f.axes = Mat3::Identity();
  return f;
}

Frame Frame::face(const Vec3& origin, double scale, const Vec3& normal, const Vec3& t1) {
  Frame f;
  f.origin = origin;
  f.scale = scale;
  f.dim = 2;
  const Vec3 n = normal.normalized();
  const Vec3 a = (t1 - t1.dot(n) * n).normalized();
  f.axes.row(0) = a.transpose();
  f.axes.row(1) = n.cross(a).transpose();
  f.axes.row(2) = n.transpose();
  return f;
}

Frame Frame::edge(const Vec3& origin, double scale, const Vec3& tangent) {
  Frame f;
  f.origin = origin;
  f.scale = scale;
  f.dim = 1;
  f.axes = Mat3::Zero();
  f.axes.row(0) = tangent.normalized().transpose();
  return f;
}

Monomials::Monomials(int dim, int degree) : dim_(dim), degree_(degree) {
  if (dim < 1 || dim > 3 || degree < 0) {
    throw Error("Monomials: invalid dimension or degree");
  }
  for (int d = 0; d <= degree; ++d) {
    if (dim == 1) {
      exponents_.push_back({d, 0, 0});
    } else if (dim == 2) {
      for (int a = d; a >= 0; --a) {
        exponents_.push_back({a, d - a, 0});
      }
    } else {
      for (int a = d; a >= 0; --a) {
        for (int b = d - a; b >= 0; --b) {
          exponents_.push_back({a, b, d - a - b});
        }
      }
    }
  }
}

Index Monomials::index(const std::array<int, 3>& e) const {
  const int d = e[0] + e[1] + e[2];
  if (d > degree_) {
    return -1;
  }
  // offset of degree d block, then position inside the block
  const Index offset = poly_dim(dim_, d - 1);
  if (dim_ == 1) {
    return offset;
  }
  if (dim_ == 2) {
    return offset + (d - e[0]);
  }
  // a descending, then b descending: position = sum_{a' > a} (d - a' + 1) + (d - a - b)
  Index pos = 0;
  for (int a = d; a > e[0]; --a) {
    pos += d - a + 1;
  }
  return offset + pos + (d - e[0] - e[1]);
}

void Monomials::values(const Eigen::Vector3d& xi, double* out) const {
  std::array<std::vector<double>, 3> pw;
  for (int a = 0; a < dim_; ++a) {
    pw[a].resize(degree_ + 1);
    pw[a][0] = 1.0;
    for (int p = 1; p <= degree_; ++p) {
      pw[a][p] = pw[a][p - 1] * xi(a);
    }
  }
  for (Index i = 0; i < size(); ++i) {
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) {
      v *= pw[a][exponents_[i][a]];
    }
    out[i] = v;
  }
}

//------------------------------------------------------------------------------
// ScalarBasis
//------------------------------------------------------------------------------

namespace {

Eigen::MatrixXd monomial_values(const Frame& frame, const Monomials& m, const QuadratureRule& rule) {
  Eigen::MatrixXd V(rule.size(), m.size());
  std::vector<double> row(m.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    m.values(frame.local(rule[q].x), row.data());
    for (Index i = 0; i < m.size(); ++i) {
      V(q, i) = row[i];
    }
  }
  return V;
}

Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& V, const QuadratureRule& rule) {
  Eigen::VectorXd w(rule.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    w(q) = rule[q].w;
  }
  return V.transpose() * w.asDiagonal() * V;
}

Eigen::MatrixXd inverse_cholesky_factor(const Eigen::MatrixXd& G) {
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) {
    throw Error("ScalarBasis: mass matrix is not positive definite (degenerate entity or insufficient quadrature)");
  }
  const Index n = G.rows();
  Eigen::MatrixXd L = llt.matrixL();
  return L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
}

} // namespace

ScalarBasis::ScalarBasis(const Frame& frame, int degree, const QuadratureRule& rule)
    : frame_(frame), monomials_(frame.dim, degree) {
  const Eigen::MatrixXd V = monomial_values(frame_, monomials_, rule);
  // Two passes of Cholesky-based Gram-Schmidt recover orthonormality lost to monomial conditioning
  coef_ = inverse_cholesky_factor(weighted_gram(V, rule));
  const Eigen::MatrixXd V1 = V * coef_.transpose();
  coef_ = inverse_cholesky_factor(weighted_gram(V1, rule)) * coef_;
  const Index n = monomials_.size();
  coef_inv_ = coef_.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));

  for (int a = 0; a < 3; ++a) {
    derivative_[a] = Eigen::MatrixXd::Zero(n, n);
    multiply_[a] = Eigen::MatrixXd::Zero(n, n);
  }
  for (int a = 0; a < frame_.dim; ++a) {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n), M = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
      std::array<int, 3> e = monomials_.exponent(i);
      if (e[a] > 0) {
        std::array<int, 3> f = e;
        f[a] -= 1;
        D(i, monomials_.index(f)) = e[a];
      }
      std::array<int, 3> g = e;
      g[a] += 1;
      const Index j = monomials_.index(g);
      if (j >= 0) {
        M(i, j) = 1.0;
      }
    }
    derivative_[a] = coef_ * D * coef_inv_ / frame_.scale;
    multiply_[a] = coef_ * M * coef_inv_;
  }
}

Eigen::MatrixXd ScalarBasis::values(const QuadratureRule& rule) const {
  return monomial_values(frame_, monomials_, rule) * coef_.transpose();
}

Eigen::MatrixXd ScalarBasis::values(const std::vector<Vec3>& points) const {
  QuadratureRule rule;
  for (const auto& p : points) {
    rule.push_back({p, 1.0, -1});
  }
  return values(rule);
}

//------------------------------------------------------------------------------
// PolySet
//------------------------------------------------------------------------------

FieldValues PolySet::evaluate(const QuadratureRule& rule) const { return evaluate(basis->values(rule)); }

FieldValues PolySet::evaluate(const Eigen::MatrixXd& bv) const {
  const Index nb = basis->size();
  const Index n = size();
  FieldValues out;
  if (ncomp == 1) {
    out.ncomp = 1;
    out.comp[0] = bv * coef.transpose();
    return out;
  }
  out.ncomp = 3;
  for (int c = 0; c < 3; ++c) {
    out.comp[c] = Eigen::MatrixXd::Zero(bv.rows(), n);
  }
  for (int a = 0; a < ncomp; ++a) {
    const Eigen::MatrixXd Va = bv * coef.middleCols(a * nb, nb).transpose();
    const Vec3 ax = basis->frame().axis(a);
    for (int c = 0; c < 3; ++c) {
      if (ax(c) != 0.0) {
        out.comp[c] += ax(c) * Va;
      }
    }
  }
  return out;
}

PolySet scalar_poly(const ScalarBasis& basis, int degree) {
  if (degree > basis.degree()) {
    throw Error("scalar_poly: degree exceeds the basis degree");
  }
  const Index n = poly_dim(basis.dim(), degree);
  PolySet s{&basis, 1, Eigen::MatrixXd::Zero(n, basis.size())};
  s.coef.leftCols(n).setIdentity();
  return s;
}

PolySet vector_poly(const ScalarBasis& basis, int degree) {
  if (degree > basis.degree()) {
    throw Error("vector_poly: degree exceeds the basis degree");
  }
  const int d = basis.dim();
  const Index n = poly_dim(d, degree);
  const Index nb = basis.size();
  PolySet s{&basis, d, Eigen::MatrixXd::Zero(d * n, d * nb)};
  for (int a = 0; a < d; ++a) {
    s.coef.block(a * n, a * nb, n, n).setIdentity();
  }
  return s;
}

PolySet orthonormal_span(const PolySet& generators, Index expected, const std::string& what) {
  PolySet out{generators.basis, generators.ncomp, Eigen::MatrixXd(0, generators.coef.cols())};
  if (generators.size() == 0) {
    if (expected != 0) {
      throw Error("orthonormal_span(" + what + "): empty generator set, expected dimension " + std::to_string(expected));
    }
    return out;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(generators.coef, Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  Index rank = 0;
  const double smax = s.size() > 0 ? s(0) : 0.0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > 1e-9 * smax) {
      ++rank;
    }
  }
  if (rank != expected) {
    throw Error("orthonormal_span(" + what + "): rank " + std::to_string(rank) + " differs from expected dimension " +
                std::to_string(expected));
  }
  out.coef = svd.matrixV().leftCols(rank).transpose();
  return out;
}

PolySet stack(const PolySet& a, const PolySet& b) {
  if (a.basis != b.basis || a.ncomp != b.ncomp) {
    throw Error("stack: incompatible families");
  }
  PolySet s{a.basis, a.ncomp, Eigen::MatrixXd(a.size() + b.size(), a.coef.cols())};
  s.coef << a.coef, b.coef;
  return s;
}

namespace {

Eigen::MatrixXd block(const PolySet& p, int a) {
  const Index nb = p.basis->size();
  return p.coef.middleCols(a * nb, nb);
}

void check_multipliable(const PolySet& p) {
  const int d = p.basis->dim();
  const Index low = poly_dim(d, p.basis->degree() - 1);
  const Index nb = p.basis->size();
  const double scale = std::max(1.0, p.coef.cwiseAbs().maxCoeff());
  for (int a = 0; a < p.ncomp; ++a) {
    if (nb > low && p.coef.middleCols(a * nb + low, nb - low).cwiseAbs().maxCoeff() > 1e-11 * scale) {
      throw Error("koszul: input degree too high for the ambient basis");
    }
  }
}

} // namespace

PolySet grad(const PolySet& s) {
  if (s.ncomp != 1) {
    throw Error("grad: scalar family expected");
  }
  const int d = s.basis->dim();
  const Index nb = s.basis->size();
  PolySet out{s.basis, d, Eigen::MatrixXd(s.size(), d * nb)};
  for (int a = 0; a < d; ++a) {
    out.coef.middleCols(a * nb, nb) = s.coef * s.basis->derivative(a);
  }
  return out;
}

PolySet div(const PolySet& v) {
  const int d = v.basis->dim();
  if (v.ncomp != d) {
    throw Error("div: vector family expected");
  }
  PolySet out{v.basis, 1, Eigen::MatrixXd::Zero(v.size(), v.basis->size())};
  for (int a = 0; a < d; ++a) {
    out.coef += block(v, a) * v.basis->derivative(a);
  }
  return out;
}

PolySet curl(const PolySet& v) {
  if (v.basis->dim() != 3 || v.ncomp != 3) {
    throw Error("curl: three-dimensional vector family expected");
  }
  const Index nb = v.basis->size();
  PolySet out{v.basis, 3, Eigen::MatrixXd(v.size(), 3 * nb)};
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    out.coef.middleCols(a * nb, nb) = block(v, c) * v.basis->derivative(b) - block(v, b) * v.basis->derivative(c);
  }
  return out;
}

PolySet rot(const PolySet& s) {
  if (s.basis->dim() != 2 || s.ncomp != 1) {
    throw Error("rot: scalar face family expected");
  }
  const Index nb = s.basis->size();
  PolySet out{s.basis, 2, Eigen::MatrixXd(s.size(), 2 * nb)};
  out.coef.leftCols(nb) = s.coef * s.basis->derivative(1);
  out.coef.rightCols(nb) = -s.coef * s.basis->derivative(0);
  return out;
}

PolySet rot_scalar(const PolySet& v) {
  if (v.basis->dim() != 2 || v.ncomp != 2) {
    throw Error("rot_scalar: tangent face family expected");
  }
  PolySet out{v.basis, 1, block(v, 1) * v.basis->derivative(0) - block(v, 0) * v.basis->derivative(1)};
  return out;
}

PolySet koszul(const PolySet& s) {
  if (s.ncomp != 1) {
    throw Error("koszul: scalar family expected");
  }
  check_multipliable(s);
  const int d = s.basis->dim();
  const Index nb = s.basis->size();
  const double h = s.basis->frame().scale;
  PolySet out{s.basis, d, Eigen::MatrixXd(s.size(), d * nb)};
  for (int a = 0; a < d; ++a) {
    out.coef.middleCols(a * nb, nb) = h * s.coef * s.basis->multiply(a);
  }
  return out;
}

PolySet koszul_cross(const PolySet& v) {
  if (v.basis->dim() != 3 || v.ncomp != 3) {
    throw Error("koszul_cross: three-dimensional vector family expected");
  }
  check_multipliable(v);
  const Index nb = v.basis->size();
  const double h = v.basis->frame().scale;
  PolySet out{v.basis, 3, Eigen::MatrixXd(v.size(), 3 * nb)};
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    out.coef.middleCols(a * nb, nb) = h * (block(v, c) * v.basis->multiply(b) - block(v, b) * v.basis->multiply(c));
  }
  return out;
}

PolySet rt_space(const ScalarBasis& basis, int degree) {
  const int d = basis.dim();
  if (degree <= 0) {
    return PolySet{&basis, d, Eigen::MatrixXd(0, d * basis.size())};
  }
  const PolySet gen = stack(vector_poly(basis, degree - 1), koszul(scalar_poly(basis, degree - 1)));
  return orthonormal_span(gen, rt_dim(d, degree), "RT");
}

PolySet ne_space(const ScalarBasis& basis, int degree) {
  if (basis.dim() != 3) {
    throw Error("ne_space: three-dimensional entity expected");
  }
  if (degree <= 0) {
    return PolySet{&basis, 3, Eigen::MatrixXd(0, 3 * basis.size())};
  }
  const PolySet p = vector_poly(basis, degree - 1);
  return orthonormal_span(stack(p, koszul_cross(p)), ne_dim(degree), "NE");
}

PolySet koszul_space(const ScalarBasis& basis, int degree) {
  const int d = basis.dim();
  if (degree <= 0) {
    return PolySet{&basis, d, Eigen::MatrixXd(0, d * basis.size())};
  }
  return orthonormal_span(koszul(scalar_poly(basis, degree - 1)), poly_dim(d, degree - 1), "Koszul");
}

PolySet koszul_cross_space(const ScalarBasis& basis, int degree) {
  if (degree <= 0) {
    return PolySet{&basis, 3, Eigen::MatrixXd(0, 3 * basis.size())};
  }
  // x x p vanishes only for p parallel to x
  const Index expected = 3 * poly_dim(3, degree - 1) - poly_dim(3, degree - 2);
  return orthonormal_span(koszul_cross(vector_poly(basis, degree - 1)), expected, "Koszul cross");
}

std::pair<PolySet, PolySet> koszul_split(const ScalarBasis& basis, int k, KoszulSplit which) {
  const int d = basis.dim();
  PolySet range, complement;
  switch (which) {
  case KoszulSplit::FaceRot:
    if (d != 2) {
      throw Error("koszul_split: face basis expected");
    }
    range = orthonormal_span(rot(scalar_poly(basis, k + 1)), poly_dim(2, k + 1) - 1, "rot range");
    complement = koszul_space(basis, k);
    break;
  case KoszulSplit::CellCurl:
    if (d != 3) {
      throw Error("koszul_split: cell basis expected");
    }
    range = orthonormal_span(curl(ne_space(basis, k + 1)), ne_dim(k + 1) - (poly_dim(3, k + 1) - 1), "curl range");
    complement = koszul_space(basis, k);
    break;
  case KoszulSplit::CellGrad:
    if (d != 3) {
      throw Error("koszul_split: cell basis expected");
    }
    range = orthonormal_span(grad(scalar_poly(basis, k + 1)), poly_dim(3, k + 1) - 1, "grad range");
    complement = koszul_cross_space(basis, k);
    break;
  }
  const Index total = d * poly_dim(d, k);
  if (range.size() + complement.size() != total) {
    throw Error("koszul_split: dimensions do not add up");
  }
  orthonormal_span(stack(range, complement), total, "Koszul split sum");
  return {range, complement};
}

//------------------------------------------------------------------------------
// Integration
//------------------------------------------------------------------------------

Eigen::MatrixXd integrate_products(const FieldValues& a, const FieldValues& b, const QuadratureRule& rule) {
  if (a.ncomp != b.ncomp) {
    throw Error("integrate_products: component mismatch");
  }
  Eigen::VectorXd w(rule.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    w(q) = rule[q].w;
  }
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(a.functions(), b.functions());
  for (int c = 0; c < a.ncomp; ++c) {
    M.noalias() += a.comp[c].transpose() * w.asDiagonal() * b.comp[c];
  }
  return M;
}

Eigen::VectorXd integrate_against(const FieldValues& a, const Eigen::MatrixXd& f, const QuadratureRule& rule) {
  if (f.cols() != a.ncomp || f.rows() != static_cast<Index>(rule.size())) {
    throw Error("integrate_against: shape mismatch");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(a.functions());
  for (int c = 0; c < a.ncomp; ++c) {
    Eigen::VectorXd wf(rule.size());
    for (std::size_t q = 0; q < rule.size(); ++q) {
      wf(q) = rule[q].w * f(q, c);
    }
    out.noalias() += a.comp[c].transpose() * wf;
  }
  return out;
}

Eigen::VectorXd project(const PolySet& space, const QuadratureRule& rule, const Eigen::MatrixXd& f) {
  return integrate_against(space.evaluate(rule), f, rule);
}

} // namespace ddr
