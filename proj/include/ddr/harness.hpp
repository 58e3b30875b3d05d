#ifndef DDR_HARNESS_HPP
#define DDR_HARNESS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <ddr/common.hpp>

namespace ddr {

//------------------------------------------------------------------------------
// Configuration and reports
//------------------------------------------------------------------------------

struct ExperimentConfig {
  std::string experiment;
  int k = 0;
  /// Finite element degree of the quasi-interpolators; -1 selects k + 1
  int ell = -1;
  std::string mesh = "tet";
  std::vector<int> n{1, 2, 3, 4};
  std::string gamma = "none";
  std::string mu = "id";
  std::string alpha = "hF";
  std::uint64_t seed = 0;
  /// Overrides the tolerance of the identity gates when positive
  double tol = 0.0;
  /// Number of random samples; 0 selects the experiment default
  int samples = 0;
  /// compactness only: curl | div | both
  std::string side = "both";

  int degree() const { return ell < 0 ? k + 1 : ell; }
};

/// One CSV line; `n` is empty on aggregate rows, `pass` is empty on ungated rows
struct ReportRow {
  std::string experiment;
  int k = 0;
  int ell = 0;
  std::string mesh;
  std::optional<int> n;
  std::optional<double> h;
  std::string metric;
  double value = 0.0;
  std::optional<double> rate;
  std::optional<bool> pass;
  /// Gate description shown in the markdown summary
  std::string gate;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;

  bool passed() const;
  /// Gated rows that failed
  std::vector<ReportRow> failures() const;
  void append(const ExperimentReport& other);

  std::string csv() const;
  std::string markdown() const;
};

/// Least-squares slope of log(value) against log(h) on the last three points; NaN with fewer than
/// three points or a nonpositive value
double fit_rate(const std::vector<double>& h, const std::vector<double>& values);

/// Parses "1,2,4" and ranges "1-4" (also mixed, "1-3,5")
std::vector<int> parse_int_list(const std::string& text);

//------------------------------------------------------------------------------
// Experiments
//------------------------------------------------------------------------------

/// Complex property, subcomplex invariance, commutation and polynomial consistency, relation residuals
ExperimentReport run_verify_complex(const ExperimentConfig& config);
/// Errors |z - P qi z|, s(qi z, qi z)^{1/2} and the inner product consistency residual, with rates
ExperimentReport run_rates_primal(const ExperimentConfig& config);
/// Adjoint consistency defects against random masked test vectors, with the bounding measures
ExperimentReport run_rates_adjoint(const ExperimentConfig& config);
/// Sampled and exact trace constants, stabilization ratio and norm-equivalence brackets
ExperimentReport run_constants(const ExperimentConfig& config);
/// Discrete Maxwell saddle problems on the refinement sequence: bounds, stabilization decay, Cauchy differences
ExperimentReport run_compactness(const ExperimentConfig& config);
/// Cochain diagram of the quasi-interpolators, projection property and lifting left inverse
ExperimentReport run_verify_qi(const ExperimentConfig& config);
/// Sampled operator ratios of the quasi-interpolators and the curl lifting
ExperimentReport run_boundedness(const ExperimentConfig& config);

/// Dispatch on config.experiment; throws Error on an unknown name
ExperimentReport run_experiment(const ExperimentConfig& config);
/// Names accepted by run_experiment
const std::vector<std::string>& experiment_names();

} // namespace ddr

#endif
