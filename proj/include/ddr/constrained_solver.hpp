#ifndef DDR_CONSTRAINED_SOLVER_HPP
#define DDR_CONSTRAINED_SOLVER_HPP

#include <memory>

#include <ddr/common.hpp>

namespace ddr {

//------------------------------------------------------------------------------
// Equality-constrained quadratic minimization
//------------------------------------------------------------------------------

struct ConstrainedOptions {
  /// Relative feasibility and stationarity targets
  double tol = 1e-12;
  /// Penalty, relative to the largest diagonal entry of M (constraint rows are normalized)
  double penalty = 1e4;
  /// Proximal shift, relative to the largest diagonal entry of M
  double proximal = 1e-12;
  int max_iterations = 200;
  /// A feasibility gap that stalls below this level is accepted as the rounding floor of computed data
  double stall_tolerance = 1e-8;
};

struct ConstrainedResult {
  Eigen::VectorXd x, multipliers;
  int iterations = 0;
  /// |A x - r| / max(|r|, |x|, |b| / max diag M) with unit-norm constraint rows
  double feasibility = 0.0;
  /// Relative change of the last iterate, equal to the scaled Lagrangian gradient in exact arithmetic
  double stationarity = 0.0;
  bool converged = false;
};

/// min 1/2 x^T M x - b^T x subject to A x = r, M symmetric positive definite, A possibly rank deficient.
/// Proximal method of multipliers on the regularized system M + delta I + beta A^T A, factorized once
/// and reused for every right-hand side.
class ConstrainedSolver {
public:
  ConstrainedSolver(const SparseMatrix& M, const SparseMatrix& A, ConstrainedOptions options = {});
  ~ConstrainedSolver();
  ConstrainedSolver(const ConstrainedSolver&) = delete;
  ConstrainedSolver& operator=(const ConstrainedSolver&) = delete;

  Index n_unknowns() const { return M_.rows(); }
  Index n_constraints() const { return A_.rows(); }
  const ConstrainedOptions& options() const { return options_; }

  /// Throws when the constraints are inconsistent: the feasibility stalls above stall_tolerance (a stalled gap
  /// below it is accepted as the rounding floor of computed data); the error reports the gap prefixed by `what`
  ConstrainedResult solve(const Eigen::VectorXd& b, const Eigen::VectorXd& r, const std::string& what = "") const;
  /// Same iteration, never throws; `converged` reports the outcome
  ConstrainedResult try_solve(const Eigen::VectorXd& b, const Eigen::VectorXd& r) const;

private:
  struct Factor;
  SparseMatrix M_, A_;
  Eigen::VectorXd row_scale_;
  ConstrainedOptions options_;
  double beta_ = 0.0, delta_ = 0.0;
  SparseMatrix K_;
  std::unique_ptr<Factor> factor_;
};

/// Row-wise concatenation of sparse matrices with equal column counts
SparseMatrix vstack(const std::vector<const SparseMatrix*>& blocks);

} // namespace ddr

#endif
