#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include <ddr/harness.hpp>

int main(int argc, char** argv) {
  ddr::ExperimentConfig config;
  std::string n_list = "1-4", out_path;

  CLI::App app{"Discrete de Rham verification harness"};
  app.add_option("experiment", config.experiment, "Experiment to run")
      ->required()
      ->check(CLI::IsMember(ddr::experiment_names()));
  app.add_option("--k", config.k, "DDR polynomial degree")->check(CLI::Range(0, 4));
  app.add_option("--ell", config.ell, "Finite element degree of the quasi-interpolators (default k+1)");
  app.add_option("--mesh", config.mesh, "Mesh family")->check(CLI::IsMember({"tet", "hex", "agglo"}));
  app.add_option("--n", n_list, "Refinement list, e.g. 1-4 or 1,2,4");
  app.add_option("--gamma", config.gamma, "Boundary part: none | all | xmin | ids:<list>");
  app.add_option("--mu", config.mu, "Parameter: id | diag | piecewise")->check(CLI::IsMember({"id", "diag", "piecewise"}));
  app.add_option("--alpha", config.alpha, "Boundary weight: hF | one")->check(CLI::IsMember({"hF", "one"}));
  app.add_option("--seed", config.seed, "Random seed");
  app.add_option("--tol", config.tol, "Tolerance of the identity gates (default per experiment)");
  app.add_option("--samples", config.samples, "Number of random samples (default per experiment)");
  app.add_option("--side", config.side, "Compactness side")->check(CLI::IsMember({"curl", "div", "both"}));
  app.add_option("--out", out_path, "CSV output path; the markdown summary goes to <out>.md (default: stdout)");
  CLI11_PARSE(app, argc, argv);

  try {
    config.n = ddr::parse_int_list(n_list);
    const ddr::ExperimentReport report = ddr::run_experiment(config);
    if (out_path.empty()) {
      std::cout << report.csv() << "\n" << report.markdown();
    } else {
      std::ofstream(out_path) << report.csv();
      std::ofstream(out_path + ".md") << report.markdown();
      std::cout << report.markdown();
    }
    return report.passed() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "ddr-kit: " << e.what() << "\n";
    return 2;
  }
}
