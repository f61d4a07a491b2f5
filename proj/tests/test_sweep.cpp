#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cmcglue/sweep.hpp"

using namespace cmcglue;

namespace {

SweepConfig small_config() {
  SweepConfig cfg;
  cfg.epsilons = {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};
  cfg.grid_n = 1025;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::pair<double, double>> power_series(double c, double p, int count) {
  std::vector<std::pair<double, double>> s;
  for (int k = 4; k < 4 + count; ++k) {
    const double e = std::ldexp(1.0, -k);
    s.emplace_back(e, c * std::pow(e, p));
  }
  return s;
}

}  // namespace

TEST(FitRate, ExactPowerLaw) {
  const RateFit f = fit_rate("q", power_series(3.0, 0.7, 6), 0.875, 0.2);
  EXPECT_NEAR(f.slope, 0.7, 1e-12);
  EXPECT_NEAR(f.intercept, std::log(3.0), 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
  EXPECT_TRUE(f.pass);
  EXPECT_FALSE(fit_rate("q", power_series(3.0, 0.6, 6), 0.875, 0.2).pass);
}

TEST(FitRate, PerturbedPowerLaw) {
  auto s = power_series(1.0, 0.875, 6);
  for (std::size_t i = 0; i < s.size(); ++i) s[i].second *= 1.0 + 0.1 * std::sin(3.0 * i);
  EXPECT_NEAR(fit_rate("q", s, 0.875, 0.2).slope, 0.875, 0.05);
}

TEST(FitRate, RejectsDegenerateSeries) {
  EXPECT_THROW(fit_rate("q", power_series(1.0, 1.0, 3), 1.0, 0.2), ValidationError);
  auto s = power_series(1.0, 1.0, 5);
  s[2].second = 0.0;
  EXPECT_THROW(fit_rate("q", s, 1.0, 0.2), ValidationError);
  s[2].second = -1.0;
  EXPECT_THROW(fit_rate("q", s, 1.0, 0.2), ValidationError);
}

TEST(Config, DefaultsValidate) {
  const SweepConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.epsilons.size(), 6u);
  EXPECT_EQ(cfg.epsilons.back(), 1.0 / 512);
}

TEST(Config, NestedAndDottedKeys) {
  SweepConfig cfg;
  apply_config(cfg, nlohmann::json::parse(R"({"grid": {"n": 513}, "tol.picard": 1e-10, "mu0": {"c": 1.5}})"));
  EXPECT_EQ(cfg.grid_n, 513u);
  EXPECT_EQ(cfg.tol_picard, 1e-10);
  EXPECT_EQ(cfg.mu0_c, 1.5);
  apply_config(cfg, {{"epsilons", "0.0625,0.03125,0.015625,0.0078125"}, {"parallel", "false"}, {"k_outer", "[2.1,2.5]"}});
  EXPECT_EQ(cfg.epsilons.size(), 4u);
  EXPECT_FALSE(cfg.parallel);
  EXPECT_EQ(cfg.k_outer.second, 2.5);
}

TEST(Config, RoundTripsThroughJson) {
  SweepConfig a = small_config();
  a.seed = 99;
  SweepConfig b;
  apply_config(b, a.to_json());
  EXPECT_EQ(b.to_json().dump(), a.to_json().dump());
}

TEST(Config, RejectsBadInput) {
  SweepConfig cfg;
  try {
    apply_config(cfg, {{"grid.size", 10}});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "unknown config key: grid.size");
  }
  EXPECT_THROW(apply_config(cfg, {{"nu", "fast"}}), ValidationError);
  EXPECT_THROW(apply_config(cfg, {{"grid.n", 100.5}}), ValidationError);
  SweepConfig big;
  big.epsilons = {0.5, 0.25};
  EXPECT_THROW(big.validate(), ValidationError);
  SweepConfig up;
  up.epsilons = {1.0 / 64, 1.0 / 32};
  EXPECT_THROW(up.validate(), ValidationError);
  SweepConfig nu;
  nu.nu = 2.0;
  EXPECT_THROW(nu.validate(), ValidationError);
  EXPECT_THROW(load_sweep_config("/nonexistent/config.json"), ValidationError);
}

TEST(Catalogue, TargetsFollowNu) {
  const auto q = quantity_catalogue(1.75);
  EXPECT_EQ(q.size(), 22u);
  for (const auto& s : q) {
    if (s.name == "glued_divergence_norm") {
      EXPECT_DOUBLE_EQ(s.target, -0.125);
    }
    if (s.name == "lichnerowicz_defect_norm") {
      EXPECT_DOUBLE_EQ(s.target, 0.875);
    }
    if (s.name.rfind("limit_inner", 0) == 0) {
      EXPECT_DOUBLE_EQ(s.target, 0.125);
    }
  }
}

TEST(Limits, AdmissibilityGuard) {
  const double eps = 1.0 / 64;
  const RadialGrid grid = RadialGrid::logarithmic(0.75 * eps, 3.0, 1025);
  const GluedData gl = glue({1.5, eps, 1.75}, models::de_sitter(0.1, 0.0), models::maximal_slice(1.0, 2.0), grid);
  const Profile one(grid.size(), 1.0);
  try {
    limit_errors(gl, one, gl.mu_eps, {0.5, 1.0}, {1.25, 1.75});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_STREQ(e.what(), "compact set not admissible for this ε");
  }
  EXPECT_THROW(limit_errors(gl, one, gl.mu_eps, {2.2, 2.6}, {1.25, 10.0}), ValidationError);
  const LimitErrors le = limit_errors(gl, one, gl.mu_eps, {2.2, 2.6}, {1.25, 1.75});
  EXPECT_EQ(le.preconformal_outer, 0.0);
  EXPECT_EQ(le.outer_metric[0], 0.0);
}

TEST(Sweep, SmallRunPassesItsChecks) {
  const SweepRun run = run_sweep(small_config());
  ASSERT_EQ(run.results.size(), 4u);
  for (const auto& r : run.results) EXPECT_TRUE(r.ok) << r.stage << ": " << r.message;
  for (const auto& c : sweep_checks(run))
    if (c.name.rfind("rate ", 0) != 0) {
      EXPECT_TRUE(c.pass) << c.name << " " << c.detail;
    }
}

TEST(Sweep, FailedEpsilonIsRecorded) {
  SweepConfig cfg = small_config();
  cfg.M = 40.0;  // horizon far outside the inner grid end
  const SweepRun run = run_sweep(cfg);
  EXPECT_FALSE(run.results.front().ok);
  EXPECT_EQ(run.results.front().stage, "glue");
  EXPECT_NE(results_csv(run).find(",failed,1\n"), std::string::npos);
}

TEST(Sweep, DeterministicAndOrderIndependent) {
  SweepConfig cfg = small_config();
  const std::string a = results_csv(run_sweep(cfg));
  cfg.parallel = false;
  const std::string b = results_csv(run_sweep(cfg));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, results_csv(run_sweep(cfg)));
}

TEST(Sweep, ReportRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "cmcglue_report_test";
  std::filesystem::remove_all(dir);
  const SweepRun run = run_sweep(small_config());
  emit_report(run, dir.string());
  EXPECT_TRUE(std::filesystem::exists(dir / "results.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "lichnerowicz_defect_norm.svg"));
  const SweepRun back = load_run(dir.string());
  ASSERT_EQ(back.fits.size(), run.fits.size());
  for (std::size_t i = 0; i < run.fits.size(); ++i) EXPECT_EQ(back.fits[i].slope, run.fits[i].slope);
  const std::string csv = slurp(dir / "results.csv"), manifest = slurp(dir / "manifest.json");
  emit_report(back, dir.string());
  EXPECT_EQ(slurp(dir / "results.csv"), csv);
  EXPECT_EQ(slurp(dir / "manifest.json"), manifest);
  std::filesystem::remove_all(dir);
}
