#include <ddr/quadrature.hpp>

#include <cmath>

namespace ddr {

void gauss_jacobi(int n, double alpha, double beta, std::vector<double>& x, std::vector<double>& w) {
  if (n < 1) {
    throw Error("gauss_jacobi: need at least one node");
  }
  const double ab = alpha + beta;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double s = 2.0 * i + ab;
    J(i, i) = (i == 0) ? (beta - alpha) / (ab + 2.0) : (beta * beta - alpha * alpha) / (s * (s + 2.0));
    if (i > 0) {
      const double b = 4.0 * i * (i + alpha) * (i + beta) * (i + ab) / (s * s * (s + 1.0) * (s - 1.0));
      J(i, i - 1) = J(i - 1, i) = std::sqrt(b);
    }
  }
  const double mu0 = std::pow(2.0, ab + 1.0) * std::tgamma(alpha + 1.0) * std::tgamma(beta + 1.0) / std::tgamma(ab + 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    x[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    w[i] = mu0 * v0 * v0;
  }
}

namespace {

int points_for_degree(int degree) {
  if (degree > max_quadrature_degree) {
    throw Error("quadrature degree " + std::to_string(degree) + " exceeds the maximum supported degree " +
                std::to_string(max_quadrature_degree));
  }
  return std::max(1, (degree + 2) / 2);
}

/// Nodes/weights on [0,1] for the weight (1-t)^alpha
void unit_rule(int n, double alpha, std::vector<double>& t, std::vector<double>& w) {
  gauss_jacobi(n, alpha, 0.0, t, w);
  const double scale = std::pow(0.5, alpha + 1.0);
  for (int i = 0; i < n; ++i) {
    t[i] = 0.5 * (1.0 + t[i]);
    w[i] *= scale;
  }
}

} // namespace

QuadratureRule segment_rule(const Vec3& a, const Vec3& b, int degree, Index simplex) {
  const int n = points_for_degree(degree);
  std::vector<double> t, w;
  unit_rule(n, 0.0, t, w);
  const double len = (b - a).norm();
  QuadratureRule rule;
  rule.reserve(n);
  for (int i = 0; i < n; ++i) {
    rule.push_back({a + t[i] * (b - a), w[i] * len, simplex});
  }
  return rule;
}

QuadratureRule triangle_rule(const Vec3& a, const Vec3& b, const Vec3& c, int degree, Index simplex) {
  const int n = points_for_degree(degree);
  std::vector<double> s, ws, t, wt;
  unit_rule(n, 0.0, s, ws);
  unit_rule(n, 1.0, t, wt);
  const double jac = (b - a).cross(c - a).norm();
  QuadratureRule rule;
  rule.reserve(n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double u = s[i] * (1.0 - t[j]);
      const double v = t[j];
      rule.push_back({a + u * (b - a) + v * (c - a), ws[i] * wt[j] * jac, simplex});
    }
  }
  return rule;
}

QuadratureRule tetrahedron_rule(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, int degree,
                                Index simplex) {
  const int n = points_for_degree(degree);
  std::vector<double> s, ws, t, wt, r, wr;
  unit_rule(n, 0.0, s, ws);
  unit_rule(n, 1.0, t, wt);
  unit_rule(n, 2.0, r, wr);
  const double jac = std::abs((b - a).dot((c - a).cross(d - a)));
  QuadratureRule rule;
  rule.reserve(n * n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int l = 0; l < n; ++l) {
        const double u = s[i] * (1.0 - t[j]) * (1.0 - r[l]);
        const double v = t[j] * (1.0 - r[l]);
        const double z = r[l];
        rule.push_back({a + u * (b - a) + v * (c - a) + z * (d - a), ws[i] * wt[j] * wr[l] * jac, simplex});
      }
    }
  }
  return rule;
}

void append(QuadratureRule& rule, const QuadratureRule& other) {
  rule.insert(rule.end(), other.begin(), other.end());
}

double measure(const QuadratureRule& rule) {
  double m = 0.0;
  for (const auto& q : rule) {
    m += q.w;
  }
  return m;
}

} // namespace ddr
