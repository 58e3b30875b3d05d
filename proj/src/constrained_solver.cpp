#include <ddr/constrained_solver.hpp>

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace ddr {

struct ConstrainedSolver::Factor {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
};

ConstrainedSolver::ConstrainedSolver(const SparseMatrix& M, const SparseMatrix& A, ConstrainedOptions options)
    : M_(M), options_(options), factor_(std::make_unique<Factor>()) {
  if (M.rows() != M.cols() || (A.rows() > 0 && A.cols() != M.cols())) {
    throw Error("ConstrainedSolver: incompatible sizes");
  }
  // Unit-norm rows. Rows that vanish up to rounding are dropped from the operator but keep their
  // datum, so a nonzero datum on them shows up as a feasibility gap.
  row_scale_ = Eigen::VectorXd::Ones(A.rows());
  Eigen::VectorXd op_scale = Eigen::VectorXd::Zero(A.rows());
  {
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(A.rows());
    for (Index j = 0; j < A.outerSize(); ++j) {
      for (SparseMatrix::InnerIterator it(A, j); it; ++it) {
        sq(it.row()) += it.value() * it.value();
      }
    }
    const double largest = A.rows() > 0 ? std::sqrt(sq.maxCoeff()) : 0.0;
    for (Index i = 0; i < A.rows(); ++i) {
      const double norm = std::sqrt(sq(i));
      if (norm > 1e-12 * largest) {
        row_scale_(i) = op_scale(i) = 1.0 / norm;
      }
    }
  }
  if (A.rows() > 0) {
    A_ = op_scale.asDiagonal() * A;
    A_.prune(0.0);
  } else {
    A_.resize(0, M.cols());
  }
  double mmax = 0.0;
  for (Index i = 0; i < M.rows(); ++i) {
    mmax = std::max(mmax, std::abs(M.coeff(i, i)));
  }
  if (!(mmax > 0.0)) {
    throw Error("ConstrainedSolver: objective matrix has no positive diagonal");
  }
  beta_ = options_.penalty * mmax;
  delta_ = options_.proximal * mmax;
  SparseMatrix I(M.rows(), M.cols());
  I.setIdentity();
  K_ = M_ + delta_ * I;
  if (A_.rows() > 0) {
    K_ += beta_ * SparseMatrix(A_.transpose() * A_);
  }
  K_.makeCompressed();
  factor_->ldlt.compute(K_);
  if (factor_->ldlt.info() != Eigen::Success) {
    throw Error("ConstrainedSolver: factorization failed");
  }
}

ConstrainedSolver::~ConstrainedSolver() = default;

ConstrainedResult ConstrainedSolver::try_solve(const Eigen::VectorXd& b, const Eigen::VectorXd& r) const {
  if (b.size() != M_.rows() || r.size() != A_.rows()) {
    throw Error("ConstrainedSolver: right-hand side sizes do not match");
  }
  const Eigen::VectorXd rs = row_scale_.cwiseProduct(r);
  ConstrainedResult out;
  out.x = Eigen::VectorXd::Zero(b.size());
  out.multipliers = Eigen::VectorXd::Zero(rs.size());
  const Eigen::VectorXd fixed = b + beta_ * (A_.transpose() * rs);
  // Scale of the solution implied by the data; keeps the relative measures meaningful when x = 0
  const double scale = std::max({rs.norm(), b.norm() * options_.penalty / beta_, 1e-300});
  auto solve_k = [&](const Eigen::VectorXd& rhs) {
    Eigen::VectorXd x = factor_->ldlt.solve(rhs);
    // One step of iterative refinement against the penalized matrix
    x += factor_->ldlt.solve(rhs - K_ * x);
    return x;
  };
  std::vector<double> history;
  double last_step = 0.0;
  for (int it = 1; it <= options_.max_iterations; ++it) {
    const Eigen::VectorXd rhs = fixed + delta_ * out.x - A_.transpose() * out.multipliers;
    const Eigen::VectorXd previous = out.x;
    out.x = solve_k(rhs);
    const Eigen::VectorXd gap = A_ * out.x - rs;
    out.multipliers += beta_ * gap;
    out.iterations = it;
    out.feasibility = gap.size() > 0 ? gap.norm() / std::max(scale, out.x.norm()) : 0.0;
    // M x - b + A^T lambda equals -delta (x - previous) exactly; evaluating it directly only
    // exposes the rounding of beta * gap, so the relative step is the stationarity measure
    out.stationarity = (out.x - previous).norm() / std::max(scale, out.x.norm());
    // Once the step stops contracting it sits at the rounding floor of the penalized solve, which
    // scales with the condition number of M + beta A^T A
    const bool at_floor = it > 1 && out.stationarity <= 1e-6 && out.stationarity > 0.5 * last_step;
    last_step = out.stationarity;
    if (out.feasibility <= options_.tol && (out.stationarity <= options_.tol || at_floor)) {
      out.converged = true;
      break;
    }
    if (out.x.norm() == 0.0 && rs.norm() == 0.0 && b.norm() == 0.0) {
      out.converged = true;
      break;
    }
    history.push_back(out.feasibility);
    // Stalled feasibility: below stall_tolerance it is the rounding floor of data that are themselves
    // computed (accepted), above it the datum is not in the range of A (rejected)
    const std::size_t window = 6;
    if (history.size() > window && history.back() > 0.5 * history[history.size() - 1 - window]) {
      out.converged = out.feasibility <= options_.stall_tolerance && (out.stationarity <= options_.tol || at_floor);
      break;
    }
  }
  // Unscaled multipliers: A^T lambda is invariant under the row scaling
  out.multipliers = row_scale_.cwiseProduct(out.multipliers);
  return out;
}

namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

} // namespace

ConstrainedResult ConstrainedSolver::solve(const Eigen::VectorXd& b, const Eigen::VectorXd& r,
                                           const std::string& what) const {
  ConstrainedResult out = try_solve(b, r);
  if (!out.converged) {
    const std::string prefix = what.empty() ? "constrained solve" : what;
    throw Error(prefix + ": " + (out.feasibility > options_.tol ? "infeasible constraint datum" : "no convergence") +
                " (relative gap " + sci(out.feasibility) + ", step " + sci(out.stationarity) + ", " +
                std::to_string(out.iterations) + " iterations)");
  }
  return out;
}

SparseMatrix vstack(const std::vector<const SparseMatrix*>& blocks) {
  if (blocks.empty()) {
    return SparseMatrix();
  }
  const Index cols = blocks.front()->cols();
  std::vector<Triplet> trips;
  Index rows = 0;
  for (const SparseMatrix* b : blocks) {
    if (b->cols() != cols) {
      throw Error("vstack: column counts differ");
    }
    for (Index j = 0; j < b->outerSize(); ++j) {
      for (SparseMatrix::InnerIterator it(*b, j); it; ++it) {
        trips.emplace_back(rows + it.row(), it.col(), it.value());
      }
    }
    rows += b->rows();
  }
  SparseMatrix out(rows, cols);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

} // namespace ddr
