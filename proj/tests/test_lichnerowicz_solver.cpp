#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cmcglue/lichnerowicz_solver.hpp"
#include "cmcglue/mode_laplacian.hpp"
#include "oracle_values.hpp"

using namespace cmcglue;

namespace {

LichnerowiczProblem smooth_problem(std::size_t n, double Lambda = 0.3, double tau = 0.2) {
  const RadialGrid g = RadialGrid::uniform(1.0, 2.0, n);
  return {g, models::schwarzschild(0.1).metric_on(g), bowen_york_mu(0.5, g), tau, Lambda};
}

LichnerowiczProblem glued_problem(double eps) {
  const RadialGrid grid = RadialGrid::logarithmic(0.75 * eps, 3.0, 2049);
  const GluedData gl =
      glue({1.5, eps, 1.75}, models::de_sitter(0.1, 0.0), models::maximal_slice(1.0, 2.0), grid);
  return make_problem(gl, repair_momentum(gl).mu_tilde, 0.1);
}

double sup_abs(const Profile& f, std::size_t skip = 0) {
  double s = 0.0;
  for (std::size_t i = skip; i + skip < f.size(); ++i) s = std::max(s, std::abs(f[i]));
  return s;
}

}  // namespace

TEST(Lichnerowicz, QuadraticRemainderMatchesClosedForm) {
  const RadialGrid g = RadialGrid::uniform(1.0, 2.0, 8);
  // 6 m^2 / 8 = 1 isolates the phi^-7 remainder; Lambda = 4 isolates phi^5.
  LichnerowiczProblem p{g, RadialMetric::flat(8), {Profile(8, std::sqrt(4.0 / 3.0)), {}}, 0.0, 0.0};
  for (double q : q_remainder(p, Profile(8, 0.1))) EXPECT_NEAR(q, oracle::q_negative_seven, 1e-15);
  LichnerowiczProblem p5{g, RadialMetric::flat(8), TraceFreeRadialTensor::zero(8), 0.0, 4.0};
  for (double q : q_remainder(p5, Profile(8, 0.1))) EXPECT_NEAR(q, oracle::q_fifth, 1e-15);
}

TEST(Lichnerowicz, LinearizationIdentity) {
  const LichnerowiczProblem p = smooth_problem(201);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-0.05, 0.05);
  Profile eta(201);
  for (double& e : eta) e = U(rng);
  const Profile lhs = n_residual_eta(p, eta), N1 = n_residual(p, Profile(201, 1.0));
  const Profile L = linearized_apply(p, eta), Q = q_remainder(p, eta);
  for (std::size_t i = 0; i < eta.size(); ++i)
    EXPECT_NEAR(lhs[i], N1[i] + L[i] + Q[i], 1e-12 * (std::abs(lhs[i]) + std::abs(L[i]) + 1.0));
}

TEST(Lichnerowicz, MatrixMatchesOperator) {
  const LichnerowiczProblem p = smooth_problem(101);
  Profile eta = p.grid.sample([](double r) { return 0.01 * std::sin(4.0 * r); });
  const Profile Le = linearized_apply(p, eta), Me = linearized_matrix(p).multiply(eta);
  for (std::size_t i = 1; i + 1 < eta.size(); ++i) EXPECT_NEAR(Me[i], Le[i], 1e-10 * std::max(1.0, std::abs(Le[i])));
  EXPECT_EQ(Me.front(), eta.front());
  EXPECT_EQ(Me.back(), eta.back());
}

TEST(Lichnerowicz, TrivialDataGivesUnitFactor) {
  const RadialGrid g = RadialGrid::uniform(1.0, 2.0, 65);
  const LichnerowiczProblem p{g, RadialMetric::flat(65), TraceFreeRadialTensor::zero(65), 0.0, 0.0};
  const PicardResult r = picard_solve(p);
  EXPECT_EQ(r.report.iterations, 1);
  for (double v : r.phi) EXPECT_EQ(v, 1.0);
}

TEST(Lichnerowicz, PicardConvergesOnGluedData) {
  for (double eps : {1.0 / 16, 1.0 / 512}) {
    const LichnerowiczProblem p = glued_problem(eps);
    const PicardResult r = picard_solve(p, {1e-9, 200, 1.75, std::nullopt});
    EXPECT_LE(r.report.final_residual, 1e-9);
    EXPECT_FALSE(r.report.contraction_ratios.empty());
    for (double q : r.report.contraction_ratios) EXPECT_LT(q, 1.0);
    for (double v : r.phi) EXPECT_GT(v, 0.0);
    EXPECT_EQ(r.phi.front(), 1.0);
    EXPECT_EQ(r.phi.back(), 1.0);
    EXPECT_LE(lichnerowicz_measure(p, n_residual_eta(p, r.eta)), 1e-9);
  }
}

TEST(Lichnerowicz, ReportsIterationLimit) {
  const LichnerowiczProblem p = glued_problem(1.0 / 64);
  try {
    picard_solve(p, {1e-30, 2, 1.75, std::nullopt});
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_STREQ(e.what(), "Picard iteration exceeded max_iter");
  }
}

TEST(Lichnerowicz, PositivityIsEnforced) {
  LichnerowiczProblem p = smooth_problem(33);
  EXPECT_THROW(q_remainder(p, Profile(33, -1.5)), NumericalError);
  EXPECT_THROW(n_residual(p, Profile(33, 0.0)), NumericalError);
  p.bc_min = -1.0;
  EXPECT_THROW(picard_solve(p), ValidationError);
  EXPECT_THROW(picard_solve(smooth_problem(33), {0.0, 10, 1.75, std::nullopt}), ValidationError);
}

TEST(ConformalTransform, LawsAgreeWithDirectEvaluation) {
  // Conformal-law residuals against those computed from phi^4 g directly.
  // The warped metric carries derivatives built from the same phi stencils,
  // so the two agree to rounding at every interior node.
  for (std::size_t n : {101, 401}) {
    const LichnerowiczProblem p = smooth_problem(n);
    const Profile phi = p.grid.sample([](double r) { return 1.0 + 0.1 * std::sin(3.0 * r); });
    const TransformedData t = conformal_transform(p, phi);
    const Profile H = transformed_hamiltonian(p, phi), Hw = warped_hamiltonian_residual(t.metric, t.K, p.Lambda, p.grid);
    const Profile D = transformed_momentum(p, phi), Dw = warped_momentum_residual(t.metric, t.K, p.grid);
    Profile dh(n), dd(n);
    for (std::size_t i = 0; i < n; ++i) {
      dh[i] = H[i] - Hw[i];
      dd[i] = D[i] - Dw[i];
    }
    EXPECT_LE(sup_abs(dd, 1), 1e-12);
    EXPECT_LE(sup_abs(dh, 1), 1e-12 * sup_abs(H, 1));
  }
}

TEST(ConformalTransform, PreservesMeanCurvature) {
  const LichnerowiczProblem p = smooth_problem(65);
  const Profile phi = p.grid.sample([](double r) { return 1.0 + 0.2 * r; });
  const TransformedData t = conformal_transform(p, phi);
  for (std::size_t i = 0; i < 65; ++i) {
    EXPECT_NEAR(t.K.trace(i), p.tau, 1e-15);
    EXPECT_NEAR(t.A_rr[i], std::pow(phi[i], 4) * p.g.A()[i], 1e-14);
  }
}

TEST(Spectrum, RoundSphereKernelConverges) {
  const double l1 = injectivity_spectrum(round_sphere_spectrum(3.0, 0.0, 200)).smallest_magnitude;
  const SpectrumResult r2 = injectivity_spectrum(round_sphere_spectrum(3.0, 0.0, 400));
  EXPECT_TRUE(r2.has_kernel);
  EXPECT_GE(std::log2(l1 / r2.smallest_magnitude), 1.8);
  // Remaining eigenvalues are 3 + Lap modes.
  EXPECT_NEAR(r2.eigenvalues[1], 3.0 + oracle::sphere_modes[0], 1e-3);
  EXPECT_NEAR(r2.eigenvalues[2], 3.0 + oracle::sphere_modes[2], 1e-3);
}

TEST(Spectrum, CmcSphereShift) {
  const SpectrumResult r = injectivity_spectrum(round_sphere_spectrum(1.0, 3.0, 400));
  EXPECT_FALSE(r.has_kernel);
  EXPECT_NEAR(r.smallest_magnitude, 3.0 - 1.0, 0.02 * 2.0);
}

TEST(Spectrum, FlatBallDirichlet) {
  const SpectrumResult r = injectivity_spectrum(flat_ball_spectrum(800));
  EXPECT_NEAR(r.eigenvalues[0], oracle::ball_dirichlet_first, 1e-4 * std::abs(oracle::ball_dirichlet_first));
}

TEST(Spectrum, RejectsEmptyInterval) {
  SpectrumProblem sp = flat_ball_spectrum(10);
  sp.x_max = 0.0;
  EXPECT_THROW(injectivity_spectrum(sp), ValidationError);
}

TEST(Kid, CandidatesConvergeAtSecondOrder) {
  EXPECT_GE(std::log2(de_sitter_zonal_kid(200).sup() / de_sitter_zonal_kid(400).sup()), 1.8);
  EXPECT_GE(std::log2(schwarzschild_lapse_kid(1.0, 200).sup() / schwarzschild_lapse_kid(1.0, 400).sup()), 1.8);
}

TEST(Kid, WrongLapseDoesNotConverge) {
  const RadialGrid grid = RadialGrid::uniform(3.0, 10.0, 401);
  const RadialMetric g = models::schwarzschild(1.0).metric_on(grid);
  const KidCandidate c{Profile(401, 1.0), {Profile(401, 0.0)}};
  EXPECT_GT(kid_residual(g, CmcExtrinsicCurvature{0.0, TraceFreeRadialTensor::zero(401)}, 0.0, c, grid).sup(), 1e-3);
}
