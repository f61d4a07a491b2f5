#include <cmath>

#include <gtest/gtest.h>

#include "cmcglue/gluing_engine.hpp"

using namespace cmcglue;

namespace {

GluedData make_glued(double eps, double C = 1.5) {
  const RadialGrid grid = RadialGrid::logarithmic(0.75 * eps, 3.0, 2049);
  return glue(GluingConfig{C, eps, 1.75}, models::de_sitter(0.1, 0.0), models::maximal_slice(1.0, 2.0), grid);
}

}  // namespace

TEST(Cutoff, ReferenceValues) {
  const Cutoff chi;
  EXPECT_NEAR(chi(2.5), 0.5, 1e-15);
  EXPECT_NEAR(chi(1.7), 0.95172519114845514741, 1e-14);
  EXPECT_NEAR(cutoff_eval(chi, 2.0, 1), -0.55929919526374821188, 1e-13);
  EXPECT_NEAR(cutoff_eval(chi, 2.0, 2), -0.54912474391633697714, 1e-12);
  EXPECT_NEAR(cutoff_eval(chi, 2.0, 3), 1.9157831343680975602, 1e-11);
  EXPECT_NEAR(cutoff_eval(chi, 2.0, 4), -2.8659594938330785360, 1e-10);
  EXPECT_THROW(cutoff_eval(chi, 2.0, 5), ValidationError);
}

TEST(Cutoff, ExactPlateaus) {
  const Cutoff chi;
  for (double s : {-3.0, 0.0, 1.0}) EXPECT_EQ(chi(s), 1.0);
  for (double s : {4.0, 7.0}) EXPECT_EQ(chi(s), 0.0);
  double prev = 1.0;
  for (int k = 1; k < 300; ++k) {
    const double v = chi(1.0 + 3.0 * k / 300.0);
    EXPECT_LE(v, prev);
    prev = v;
  }
}

TEST(GluingConfig, Validation) {
  EXPECT_THROW((GluingConfig{1.0, 0.01, 1.75}.validate()), ValidationError);
  EXPECT_THROW((GluingConfig{2.0, 0.07, 1.75}.validate()), ValidationError);
  EXPECT_THROW((GluingConfig{2.0, 0.01, 1.5}.validate()), ValidationError);
  EXPECT_THROW((GluingConfig{2.0, 0.01, 2.0}.validate()), ValidationError);
  EXPECT_NO_THROW((GluingConfig{2.0, 0.0625, 1.75}.validate()));
}

TEST(Weight, PiecesAndPlateaus) {
  const WeightFunction w = WeightFunction::glued({1.5, 1.0 / 64, 1.75});
  const double Ce = 1.5 / 64;
  EXPECT_EQ(w(0.5 * Ce), Ce);
  EXPECT_EQ(w(1.5 * Ce), Ce);
  EXPECT_EQ(w(0.2), 0.2);
  EXPECT_EQ(w(2.0), 1.0 / 1.5);
  // Continuity across every joint.
  for (double r : {1.5 * Ce, 2.0 * Ce, 1.0 / 3.0, 2.0 / 4.5})
    EXPECT_NEAR(w(r * (1 + 1e-12)), w(r * (1 - 1e-12)), 1e-10);
  EXPECT_THROW(weight_eval(w, 0.0), ValidationError);
}

TEST(Regions, Classification) {
  const GluingConfig cfg{1.5, 1.0 / 64, 1.75};
  const double s = cfg.sqrt_eps();
  EXPECT_EQ(region_classify(cfg, 0.4 * s).second, MuRegime::ae_exact);
  EXPECT_EQ(region_classify(cfg, 0.7 * s).second, MuRegime::inner_transition);
  EXPECT_EQ(region_classify(cfg, 2.0 * s).second, MuRegime::silent);
  EXPECT_EQ(region_classify(cfg, 5.0 * s).second, MuRegime::outer_transition);
  EXPECT_EQ(region_classify(cfg, 9.0 * s).second, MuRegime::m_exact);
  EXPECT_EQ(region_classify(cfg, s).first, MetricRegime::ae_exact);
  EXPECT_EQ(region_classify(cfg, 2.0 * s).first, MetricRegime::transition);
  EXPECT_EQ(region_classify(cfg, 4.0 * s).first, MetricRegime::m_exact);
}

TEST(Glue, StructureHoldsBitwise) {
  for (int k = 4; k <= 9; ++k) {
    const GluedData d = make_glued(std::ldexp(1.0, -k));
    const GlueStructure gs = glue_structure(d);
    EXPECT_TRUE(gs.mu_zero_on_silent_band) << k;
    EXPECT_TRUE(gs.metric_matches_sources) << k;
    EXPECT_TRUE(gs.mu_matches_sources) << k;
    EXPECT_EQ(gs.violation_outside, 0u) << k;
    EXPECT_GT(gs.violation_nodes, 0u) << k;
  }
}

TEST(Glue, DivergenceVanishesAwayFromTheBands) {
  const GluedData d = make_glued(1.0 / 128);
  const double s = d.config.sqrt_eps();
  const Profile div = momentum_residual(d.g_eps, CmcExtrinsicCurvature{0.0, d.mu_eps}, d.grid);
  double inside = 0.0;
  for (std::size_t i = 0; i < d.grid.size(); ++i) {
    const double r = d.grid.r(i);
    if (r > 0.5 * s && r < s) inside = std::max(inside, std::abs(div[i]));
  }
  EXPECT_GT(inside, 1.0);
}

TEST(Glue, RejectsShortOrCoarseGrids) {
  const GluingConfig cfg{1.5, 1.0 / 64, 1.75};
  const auto bg = models::de_sitter(0.1, 0.0);
  const auto ae = models::maximal_slice(1.0, 2.0);
  EXPECT_THROW(glue(cfg, bg, ae, RadialGrid::logarithmic(0.1, 3.0, 2049)), ValidationError);
  EXPECT_THROW(glue(cfg, bg, ae, RadialGrid::logarithmic(0.01, 1.0, 2049)), ValidationError);
  EXPECT_THROW(glue(cfg, bg, ae, RadialGrid::logarithmic(0.01, 3.0, 65)), ValidationError);
}

TEST(Glue, AeRangeIsChecked) {
  // With c = 0.5 the slice ends near rho = 2, inside the inner grid end.
  const GluingConfig cfg{1.5, 1.0 / 64, 1.75};
  const RadialGrid grid = RadialGrid::logarithmic(0.75 / 64, 3.0, 2049);
  EXPECT_THROW(glue(cfg, models::de_sitter(0.1, 0.0), models::maximal_slice(1.0, 0.5), grid), ValidationError);
}

TEST(Chart, NearlyFlatInTheGluingBand) {
  const GluedData d = make_glued(1.0 / 256);
  const ChartSample c = chart_rescaled_metric(d, 2.0 * d.config.sqrt_eps());
  EXPECT_EQ(c.t.front(), -0.5);
  EXPECT_EQ(c.t.back(), 0.5);
  EXPECT_LT(c.deviation, 0.2);
  EXPECT_LE(c.cutoff_derivative[0], 1.0);
  EXPECT_THROW(chart_rescaled_metric(d, 1.0), ValidationError);
}
