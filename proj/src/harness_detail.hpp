#ifndef DDR_HARNESS_DETAIL_HPP
#define DDR_HARNESS_DETAIL_HPP

#include <functional>
#include <memory>

#include <ddr/fields.hpp>
#include <ddr/harness.hpp>

namespace ddr::detail {

//------------------------------------------------------------------------------
// Mesh levels
//------------------------------------------------------------------------------

/// Mesh, context and operators of one refinement, with stable addresses
struct Level {
  int n = 0;
  std::unique_ptr<Mesh> mesh;
  std::unique_ptr<DdrContext> ctx;
  std::unique_ptr<DdrOperators> ops;
  Gamma gamma;
  double h = 0.0;
};

Level make_level(const ExperimentConfig& config, int n);
Level make_level(const ExperimentConfig& config, int n, int k);

/// Constant parameters only; the adjoint and compactness experiments differentiate mu
Mat3 constant_parameter(const Parameter& mu, const Mesh& mesh, const std::string& experiment);

//------------------------------------------------------------------------------
// Report assembly
//------------------------------------------------------------------------------

class ReportBuilder {
public:
  ReportBuilder(const ExperimentConfig& config, std::string experiment, int ell);

  /// Per-mesh row, optionally gated
  void row(const Level& level, const std::string& metric, double value, std::optional<bool> pass = {},
           const std::string& gate = "");
  /// Aggregate row (no mesh)
  void aggregate(const std::string& metric, double value, std::optional<double> rate, std::optional<bool> pass,
                 const std::string& gate);
  /// Mesh regularity summary rows
  void regularity(const Level& level);
  /// Gate max_i value_i <= tol per mesh and overall
  void bounded_by(const std::string& metric, const std::vector<const Level*>& levels,
                  const std::vector<double>& values, double tol);
  /// Per-mesh rows plus an aggregate row with the fitted slope, gated by slope >= min_slope when given
  void series(const std::string& metric, const std::vector<const Level*>& levels, const std::vector<double>& values,
              std::optional<double> min_slope);
  /// Per-mesh rows plus an aggregate max/min row gated by <= max_ratio
  void stable(const std::string& metric, const std::vector<const Level*>& levels, const std::vector<double>& values,
              double max_ratio);

  ExperimentReport take() { return std::move(report_); }

private:
  const ExperimentConfig& config_;
  std::string experiment_;
  int ell_;
  ExperimentReport report_;
};

//------------------------------------------------------------------------------
// Integrals against potentials
//------------------------------------------------------------------------------

/// Values of a field at the nodes of a rule on a cell (npts x ncomp)
using CellField = std::function<Eigen::MatrixXd(const QuadratureRule& rule, Index cell)>;

CellField cell_field(const ScalarSampler& f);
CellField cell_field(const VectorSampler& f);
/// mu(x) f(x) with the matrix parameter, or its scalar part for scalar fields
CellField weighted(const Parameter& mu, const ScalarSampler& f);
CellField weighted(const Parameter& mu, const VectorSampler& f);

/// Potential values of z on a cell at the nodes of a rule
Eigen::MatrixXd potential_values(const DdrOperators& ops, SpaceKind space, Index cell, const Eigen::VectorXd& z,
                                 const QuadratureRule& rule);
/// (sum_T |f - P_T z|^2_T)^{1/2} with the cell rules
double potential_error(const DdrOperators& ops, SpaceKind space, const Eigen::VectorXd& z, const CellField& f);
/// Vector b with b_i = sum_T int_T f . P_T e_i
Eigen::VectorXd potential_load(const DdrOperators& ops, SpaceKind space, const CellField& f);
/// Vector b with b_i = int_Omega f D e_i for the divergence space
Eigen::VectorXd divergence_load(const DdrOperators& ops, const CellField& f);

/// Unit outer normal of a boundary face
Vec3 outer_normal(const Mesh& mesh, Index face);

/// Cell L2 projection onto P^k with a rule of the given degree on every simplex (accurate reference)
Eigen::VectorXd accurate_pk_projection(const DdrContext& ctx, const ScalarSampler& f, int degree = 20);

//------------------------------------------------------------------------------
// Norms
//------------------------------------------------------------------------------

/// sup over unmasked y of |r . y| / |||y|||: sqrt(sum r_i^2 / weight_i)
double component_dual_norm(const DofLayout& layout, const Eigen::VectorXd& r, const Gamma& gamma);
/// sqrt(r^T G^{-1} r) on the unmasked components, G symmetric positive definite there
double matrix_dual_norm(const SparseMatrix& G, const Eigen::VectorXd& r, const std::vector<Index>& free);
/// Indices not in masked_dofs(layout, gamma)
std::vector<Index> free_dofs(const DofLayout& layout, const Gamma& gamma);
SparseMatrix diagonal(const Eigen::VectorXd& d);
/// Gram matrix of the graph norm |||z|||^2 + |||d z|||^2
SparseMatrix graph_gram(const DofLayout& layout, const SparseMatrix& d, const DofLayout& target);

double max_over_min(const std::vector<double>& v);
bool strictly_decreasing(const std::vector<double>& v);

/// L2-closest conforming member to a seeded random broken vector
Eigen::VectorXd random_conforming_member(const FeSpace& fe, std::uint64_t seed);

} // namespace ddr::detail

#endif
