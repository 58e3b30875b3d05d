#include <gtest/gtest.h>

#include <cmath>

#include <ddr/harness.hpp>

using namespace ddr;

TEST(Harness, FitRateRecoversSyntheticSlope) {
  const std::vector<double> h{1.0, 0.5, 0.25, 0.125};
  std::vector<double> e;
  for (double x : h) {
    e.push_back(3.0 * x * x);
  }
  EXPECT_NEAR(fit_rate(h, e), 2.0, 1e-10);
  // Halving errors per halving of h
  EXPECT_NEAR(fit_rate(h, {8.0, 4.0, 2.0, 1.0}), 1.0, 1e-10);
}

TEST(Harness, FitRateNeedsThreePositivePoints) {
  EXPECT_TRUE(std::isnan(fit_rate({1.0, 0.5}, {1.0, 0.5})));
  EXPECT_TRUE(std::isnan(fit_rate({1.0, 0.5, 0.25}, {1.0, 0.0, 0.25})));
}

TEST(Harness, ParseIntList) {
  EXPECT_EQ(parse_int_list("1-4"), (std::vector<int>{1, 2, 3, 4}));
  EXPECT_EQ(parse_int_list("1,2,4"), (std::vector<int>{1, 2, 4}));
  EXPECT_EQ(parse_int_list("1-3,5"), (std::vector<int>{1, 2, 3, 5}));
  EXPECT_THROW(parse_int_list("a"), Error);
  EXPECT_THROW(parse_int_list(""), Error);
}

TEST(Harness, CsvLayout) {
  ExperimentReport r;
  r.rows.push_back({"x", 1, 2, "tet", 3, 0.5, "m", 0.25, std::nullopt, true, "<= 1"});
  r.rows.push_back({"x", 1, 2, "tet", std::nullopt, std::nullopt, "m.slope", 2.0, 2.0, std::nullopt, ""});
  EXPECT_EQ(r.csv(), "experiment,k,ell,mesh,n,h,metric,value,rate,pass\n"
                     "x,1,2,tet,3,5.000000e-01,m,2.500000e-01,,pass\n"
                     "x,1,2,tet,,,m.slope,2.000000e+00,2.000000e+00,\n");
  EXPECT_TRUE(r.passed());
  r.rows[0].pass = false;
  EXPECT_FALSE(r.passed());
  EXPECT_EQ(r.failures().size(), 1u);
}

TEST(Harness, UnknownExperimentThrows) {
  ExperimentConfig c;
  c.experiment = "nope";
  EXPECT_THROW(run_experiment(c), Error);
}

TEST(Harness, VerifyComplexOnCoarseMesh) {
  ExperimentConfig c;
  c.experiment = "verify_complex";
  c.n = {1};
  const ExperimentReport r = run_experiment(c);
  EXPECT_TRUE(r.passed()) << r.markdown();
  EXPECT_FALSE(r.rows.empty());
}

TEST(Harness, CompactnessGatesOnCoarseSequence) {
  ExperimentConfig c;
  c.experiment = "compactness";
  c.k = 1;
  c.gamma = "all";
  c.n = {1, 2, 3};
  const ExperimentReport r = run_experiment(c);
  for (const auto& row : r.rows) {
    if (row.metric.find("orthogonality") != std::string::npos && row.pass) {
      EXPECT_TRUE(*row.pass) << row.metric;
    }
  }
}
