#ifndef DDR_QUASI_LIFT_HPP
#define DDR_QUASI_LIFT_HPP

#include <memory>

#include <ddr/constrained_solver.hpp>
#include <ddr/ddr_ops.hpp>
#include <ddr/fe_space.hpp>

namespace ddr {

//------------------------------------------------------------------------------
// Inputs with their differentials
//------------------------------------------------------------------------------

/// Scalar field with its gradient
struct ScalarInput {
  ScalarSampler value;
  VectorSampler grad;
};

/// Vector field with its curl and divergence (either may be left empty when the operator does not need it)
struct VectorInput {
  VectorSampler value;
  VectorSampler curl;
  ScalarSampler div;
};

//------------------------------------------------------------------------------
// Commuting quasi-interpolators
//------------------------------------------------------------------------------

/// Global-best commuting quasi-interpolators onto Lag^l_G -> NE^l_G -> RT^l_G and their DDR compositions.
/// Each finite element stage is the L2-closest conforming member whose differential equals the
/// quasi-interpolate of the differential, which makes every square of the cochain diagram commute.
class QuasiInterpolator {
public:
  QuasiInterpolator(const DdrOperators& ops, int ell, const Gamma& gamma, ConstrainedOptions options = {});
  ~QuasiInterpolator();
  QuasiInterpolator(const QuasiInterpolator&) = delete;
  QuasiInterpolator& operator=(const QuasiInterpolator&) = delete;

  const DdrOperators& operators() const { return ops_; }
  int degree() const { return ell_; }
  const Gamma& gamma() const { return gamma_; }

  const FeSpace& lagrange() const { return lag_; }
  const FeSpace& nedelec() const { return ne_; }
  const FeSpace& raviart_thomas() const { return rt_; }
  /// Broken P^{l-1}, the target of the divergence
  const FeSpace& broken() const { return p_; }

  // Stages on broken data (orthonormal coordinates of the broken projections)
  Eigen::VectorXd rt_stage(const Eigen::VectorXd& w, const Eigen::VectorXd& div_w) const;
  Eigen::VectorXd ne_stage(const Eigen::VectorXd& v, const Eigen::VectorXd& curl_rt) const;
  Eigen::VectorXd lag_stage(const Eigen::VectorXd& q, const Eigen::VectorXd& grad_ne) const;

  // Finite element quasi-interpolators of smooth fields
  Eigen::VectorXd fe_grad(const ScalarInput& q) const;
  Eigen::VectorXd fe_curl(const VectorInput& v) const;
  Eigen::VectorXd fe_div(const VectorInput& w) const;

  // Finite element quasi-interpolators of members of the broken families of the same degree
  Eigen::VectorXd fe_grad_member(const Eigen::VectorXd& x) const;
  Eigen::VectorXd fe_curl_member(const Eigen::VectorXd& x) const;
  Eigen::VectorXd fe_div_member(const Eigen::VectorXd& x) const;

  // DDR quasi-interpolators: canonical interpolation of the finite element quasi-interpolates
  Eigen::VectorXd ddr_grad(const ScalarInput& q) const { return interpolation(SpaceKind::Grad) * fe_grad(q); }
  Eigen::VectorXd ddr_curl(const VectorInput& v) const { return interpolation(SpaceKind::Curl) * fe_curl(v); }
  Eigen::VectorXd ddr_div(const VectorInput& w) const { return interpolation(SpaceKind::Div) * fe_div(w); }

  /// Canonical DDR interpolation restricted to the conforming family of `space`
  const SparseMatrix& interpolation(SpaceKind space) const;
  /// Elementwise differentials between the broken families
  const SparseMatrix& grad_matrix() const { return grad_; }
  const SparseMatrix& curl_matrix() const { return curl_; }
  const SparseMatrix& div_matrix() const { return div_; }

  /// Largest relative feasibility of the stage solves performed so far
  double worst_feasibility() const { return worst_feasibility_; }

private:
  const ConstrainedSolver& solver(int stage) const;

  const DdrOperators& ops_;
  int ell_;
  Gamma gamma_;
  ConstrainedOptions options_;
  FeSpace lag_, ne_, rt_, p_;
  SparseMatrix grad_, curl_, div_;
  Eigen::VectorXd constant_;
  mutable std::array<std::unique_ptr<ConstrainedSolver>, 3> solvers_;
  mutable std::array<std::unique_ptr<SparseMatrix>, 3> interp_;
  mutable double worst_feasibility_ = 0.0;
};

//------------------------------------------------------------------------------
// Conforming liftings
//------------------------------------------------------------------------------

/// Conforming liftings of degree k+3 with prescribed DDR interpolates and polynomial projections
class Lifting {
public:
  Lifting(const DdrOperators& ops, const Gamma& gamma, ConstrainedOptions options = {});
  ~Lifting();
  Lifting(const Lifting&) = delete;
  Lifting& operator=(const Lifting&) = delete;

  int degree() const { return ell_; }
  const FeSpace& lagrange() const { return lag_; }
  const FeSpace& nedelec() const { return ne_; }
  const FeSpace& raviart_thomas() const { return rt_; }

  /// argmin |xi|^2 + |curl xi|^2 over NE^{k+3}_G with I_curl xi = v and lproj^k xi = P_curl v on every cell
  Eigen::VectorXd curl(const Eigen::VectorXd& v) const;
  /// argmin |xi|^2 + |grad xi|^2 over Lag^{k+3}_G with I_grad xi = q and lproj^k_F xi = lproj^k_F tr_F q on every face
  Eigen::VectorXd grad(const Eigen::VectorXd& q) const;

  /// Stacked cellwise P_curl coordinates (vec_k families)
  Eigen::VectorXd curl_potentials(const Eigen::VectorXd& v) const;
  /// Stacked facewise lproj^k tr_F coordinates (p_k families)
  Eigen::VectorXd face_traces(const Eigen::VectorXd& q) const;

  const SparseMatrix& curl_matrix() const { return curl_; }
  const SparseMatrix& grad_matrix() const { return grad_; }
  double worst_feasibility() const { return worst_feasibility_; }

private:
  const DdrOperators& ops_;
  int ell_;
  Gamma gamma_;
  ConstrainedOptions options_;
  FeSpace lag_, ne_, rt_;
  SparseMatrix curl_, grad_;
  mutable std::unique_ptr<ConstrainedSolver> curl_solver_, grad_solver_;
  mutable double worst_feasibility_ = 0.0;
};

//------------------------------------------------------------------------------
// Approximation measures
//------------------------------------------------------------------------------

/// Patch-based best approximation error of a field and its differential by P^{k_space} (global version)
double appr(const DdrContext& ctx, SpaceKind space, const ScalarInput& q);
double appr(const DdrContext& ctx, SpaceKind space, const VectorInput& v);
/// Local version on the polytopal patch of a cell
double appr_cell(const DdrContext& ctx, SpaceKind space, const VectorInput& v, Index cell);

/// Broken best approximation of grad q by gradients of P^{k+1}(T)
double bppr_grad(const DdrContext& ctx, const ScalarInput& q);
/// Broken best approximation by NE^{k+1}(T) (Curl) or RT^{k+1}(T) (Div) in the graph norm
double bppr(const DdrContext& ctx, SpaceKind space, const VectorInput& v);

/// Boundary faces outside Gamma
std::vector<Index> complement_faces(const Mesh& mesh, const Gamma& gamma);
/// sum over faces outside Gamma of |xi - lproj^k_F xi|^2, square-rooted.
/// Here and in tppr_div the second sampler argument is the face index, so that traces can use the normal.
double tppr(const DdrContext& ctx, const Gamma& gamma, const ScalarSampler& xi);
/// sum over faces outside Gamma of alpha_F^{-1} |zeta - RT^{k+1}_F projection of zeta|^2, square-rooted
double tppr_div(const DdrContext& ctx, const Gamma& gamma, const VectorSampler& zeta,
                const std::function<double(Index face)>& alpha);

} // namespace ddr

#endif
