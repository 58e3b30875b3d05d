#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <ddr/harness.hpp>

using namespace ddr;

namespace {

using RowFilter = std::function<bool(const ReportRow&)>;

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

RowFilter prefixes(std::vector<std::string> p) {
  return [p = std::move(p)](const ReportRow& r) {
    for (const auto& x : p) {
      if (starts_with(r.metric, x)) {
        return true;
      }
    }
    return false;
  };
}

RowFilter all_rows() {
  return [](const ReportRow&) { return true; };
}

std::string describe(const ExperimentConfig& c) {
  std::ostringstream os;
  os << c.experiment << " k=" << c.k << " ell=" << c.degree() << " mesh=" << c.mesh << " gamma=" << c.gamma
     << " mu=" << c.mu;
  return os.str();
}

/// One acceptance criterion: a list of runs and the gated rows of each run that belong to it
class Criterion {
public:
  Criterion(int id, std::string title) : id_(id), title_(std::move(title)) {}

  void check(const ExperimentReport& report, const ExperimentConfig& config, const RowFilter& filter) {
    for (const auto& r : report.rows) {
      if (!r.pass || !filter(r)) {
        continue;
      }
      ++gated_;
      if (!*r.pass) {
        std::ostringstream os;
        os << r.metric << "=" << r.value << " [" << describe(config) << (r.n ? " n=" + std::to_string(*r.n) : "")
           << "]";
        failures_.push_back(os.str());
      }
    }
  }

  void error(const ExperimentConfig& config, const std::string& what) {
    failures_.push_back("error in " + describe(config) + ": " + what);
  }

  void add_seconds(double s) { seconds_ += s; }

  bool passed() const { return gated_ > 0 && failures_.empty(); }

  std::string line() const {
    std::ostringstream os;
    os << "criterion " << id_ << ": " << (passed() ? "PASS" : "FAIL") << " " << title_ << " (" << gated_
       << " gated rows, " << failures_.size() << " failed, ";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f s)", seconds_);
    os << buf;
    if (!failures_.empty()) {
      os << "; first failure: " << failures_.front();
    }
    return os.str();
  }

private:
  int id_;
  std::string title_;
  int gated_ = 0;
  std::vector<std::string> failures_;
  double seconds_ = 0.0;
};

class Runner {
public:
  explicit Runner(std::string out_dir) : out_dir_(std::move(out_dir)) {
    if (!out_dir_.empty()) {
      std::filesystem::create_directories(out_dir_);
    }
  }

  /// Runs one configuration and attributes its rows to the given criteria
  void run(const ExperimentConfig& config, const std::vector<std::pair<Criterion*, RowFilter>>& targets) {
    const auto start = std::chrono::steady_clock::now();
    try {
      const ExperimentReport report = run_experiment(config);
      for (const auto& [c, f] : targets) {
        c->check(report, config, f);
      }
      if (!out_dir_.empty()) {
        std::ofstream(out_dir_ + "/" + file_name(config)) << report.csv();
      }
    } catch (const std::exception& e) {
      for (const auto& [c, f] : targets) {
        c->error(config, e.what());
      }
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto& [c, f] : targets) {
      c->add_seconds(s / static_cast<double>(targets.size()));
    }
  }

private:
  std::string file_name(const ExperimentConfig& c) {
    std::ostringstream os;
    os << ++count_ << "_" << c.experiment << "_k" << c.k << "_l" << c.degree() << "_" << c.mesh << "_" << c.gamma
       << "_" << c.mu << ".csv";
    return os.str();
  }

  std::string out_dir_;
  int count_ = 0;
};

ExperimentConfig make(const std::string& experiment, int k, std::vector<int> n) {
  ExperimentConfig c;
  c.experiment = experiment;
  c.k = k;
  c.n = std::move(n);
  return c;
}

} // namespace

int main(int argc, char** argv) {
  Runner runner(argc > 1 ? argv[1] : "");
  std::vector<Criterion> crit;
  crit.emplace_back(1, "complex property, k=0,1, tet/hex/agglo n=2");
  crit.emplace_back(2, "commutation, polynomial consistency and relation residuals");
  crit.emplace_back(3, "quasi-interpolator cochain diagram and projection property, tet n=2");
  crit.emplace_back(4, "lifting left inverse, k=0, ell=3, tet n=1");
  crit.emplace_back(5, "primal consistency rates, k=0,1, tet n=1..4");
  crit.emplace_back(6, "adjoint consistency rates, mu=id/diag, gamma=xmin, k=0,1, tet n=1..4");
  crit.emplace_back(7, "discrete trace constants, tet n=1..4");
  crit.emplace_back(8, "grad stabilization bound, tet n=1..4");
  crit.emplace_back(9, "Maxwell compactness, curl and div sides, gamma=all, mu=id/diag, tet n=1..4");
  crit.emplace_back(10, "quasi-interpolator and lifting boundedness, tet n=1..3");

  for (int k : {0, 1}) {
    for (const char* mesh : {"tet", "hex", "agglo"}) {
      ExperimentConfig c = make("verify_complex", k, {2});
      c.mesh = mesh;
      runner.run(c, {{&crit[0], prefixes({"complex.", "subcomplex."})},
                     {&crit[1], prefixes({"commutation.", "consistency.", "relations"})}});
    }
  }
  for (int k : {0, 1}) {
    for (const char* gamma : {"none", "all", "xmin"}) {
      ExperimentConfig c = make("verify_qi", k, {2});
      c.ell = k + 1;
      c.gamma = gamma;
      runner.run(c, {{&crit[2], [](const ReportRow& r) { return !starts_with(r.metric, "lift."); }}});
    }
  }
  for (const char* gamma : {"none", "all"}) {
    ExperimentConfig c = make("verify_qi", 0, {1});
    c.ell = 3;
    c.gamma = gamma;
    c.samples = 10;
    runner.run(c, {{&crit[3], prefixes({"lift."})}});
  }
  for (int k : {0, 1}) {
    runner.run(make("rates_primal", k, {1, 2, 3, 4}), {{&crit[4], all_rows()}});
  }
  for (int k : {0, 1}) {
    for (const char* mu : {"id", "diag"}) {
      ExperimentConfig c = make("rates_adjoint", k, {1, 2, 3, 4});
      c.mu = mu;
      c.gamma = "xmin";
      runner.run(c, {{&crit[5], all_rows()}});
    }
  }
  for (int k : {0, 1}) {
    for (const char* gamma : {"none", "xmin"}) {
      ExperimentConfig c = make("constants", k, {1, 2, 3, 4});
      c.gamma = gamma;
      runner.run(c, {{&crit[6], prefixes({"trace."})}, {&crit[7], prefixes({"stabilization_ratio"})}});
    }
  }
  for (int k : {0, 1}) {
    for (const char* mu : {"id", "diag"}) {
      ExperimentConfig c = make("compactness", k, {1, 2, 3, 4});
      c.mu = mu;
      c.gamma = "all";
      runner.run(c, {{&crit[8], all_rows()}});
    }
  }
  for (int k : {0, 1}) {
    for (const char* gamma : {"none", "xmin"}) {
      ExperimentConfig c = make("boundedness", k, {1, 2, 3});
      c.gamma = gamma;
      runner.run(c, {{&crit[9], all_rows()}});
    }
  }

  int failed = 0;
  for (const auto& c : crit) {
    std::cout << c.line() << "\n";
    failed += c.passed() ? 0 : 1;
  }
  std::cout << (crit.size() - failed) << "/" << crit.size() << " criteria pass\n";
  return failed == 0 ? 0 : 1;
}
