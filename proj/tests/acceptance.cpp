// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "cmcglue/sweep.hpp"
#include "oracle_values.hpp"

using namespace cmcglue;

namespace {

constexpr double kPolyTol = 1e-10;
constexpr double kKernelOrder = 1.8;
constexpr double kOdeTol = 1e-12;
constexpr double kHamTol = 1e-10;
constexpr double kRateMargin = 0.2;
constexpr double kDivergenceR2 = 0.95;
constexpr double kRepairRatio = 1e-8;
constexpr double kSpectrumOrder = 1.8;
constexpr double kTauRelTol = 0.02;
constexpr double kKidOrder = 1.8;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

const RateFit& fit(const SweepRun& run, const std::string& q) {
  for (const auto& f : run.fits)
    if (f.quantity == q) return f;
  throw std::runtime_error("missing fit " + q);
}

// Slope must clear target - margin; the fit must exist.
void require_slope(Outcome& o, const SweepRun& run, const std::string& q, double floor) {
  const RateFit& f = fit(run, q);
  const bool ok = f.error.empty() && f.slope >= floor;
  o.pass = o.pass && ok;
  o.detail += " " + q + fmt("=%.3f", f.slope) + (ok ? "" : "(<" + fmt("%.3f", floor) + ")");
}

Outcome kernel_suite() {
  Outcome o;
  double worst_order = 1e9;
  int failed = 0;
  for (const auto& c : verify_kernel_suite(4, 512, kKernelOrder)) {
    if (!c.pass) ++failed;
    if (!c.polynomial) worst_order = std::min(worst_order, c.order);
  }
  const RadialGrid g = kernel_grid(512);
  const Profile r2 = g.sample([](double r) { return r * r; });
  double poly = 0.0;
  for (int l = 1; l <= 4; ++l) {
    const ModeVectorField out = apply_flat_mode({{l, 0}, r2, g.nodes(), r2}, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = g.r(i);
      poly = std::max({poly, std::abs(out.u[i] - oracle::poly_U(l)),
                       std::abs(out.v[i] - r * oracle::poly_V_over_r(l)),
                       std::abs(out.w[i] - r * r * oracle::poly_W_over_r2(l))});
    }
  }
  for (double v : apply_flat_mode({{0, 0}, r2, {}, {}}, g).u) poly = std::max(poly, std::abs(v - oracle::poly_U_l0));
  o.pass = failed == 0 && worst_order >= kKernelOrder && poly <= kPolyTol;
  o.detail = fmt("min order %.3f, failed cases %.0f, polynomial residual %.2e", worst_order, failed, poly);
  return o;
}

Outcome sds_equation() {
  const RadialGrid g = RadialGrid::uniform(0.3, 0.8, 501);
  double ode = 0.0, ham = 0.0;
  for (double M : {0.0, 1.0})
    for (double L : {0.0, 3.0})
      for (double e : {0.01, 0.1}) {
        const RadialMetric m = sds_profile({M, L, e}, g);
        for (double v : ode_residual(m, L, g)) ode = std::max(ode, std::abs(v));
        const auto K = CmcExtrinsicCurvature{0.0, TraceFreeRadialTensor::zero(g.size())};
        for (double v : hamiltonian_residual(m, K, L, g)) ham = std::max(ham, std::abs(v));
      }
  return {ode <= kOdeTol && ham <= kHamTol, fmt("ode %.2e, hamiltonian %.2e", ode, ham)};
}

Outcome glue_structure_all(const SweepRun& run) {
  Outcome o;
  int bad = 0;
  for (const auto& r : run.results) {
    const auto& v = r.values;
    const bool ok = r.ok && v.at("glue_mu_zero_on_silent_band") == 1.0 && v.at("glue_metric_matches_sources") == 1.0 &&
                    v.at("glue_mu_matches_sources") == 1.0 && v.at("glue_violation_nodes_outside_bands") == 0.0;
    if (!ok) ++bad;
  }
  o.pass = bad == 0;
  o.detail = fmt("%.0f of %.0f runs with exact structure", run.results.size() - bad, run.results.size());
  return o;
}

Outcome divergence_rate(const SweepRun& run, double nu) {
  const RateFit& f = fit(run, "glued_divergence_norm");
  const double floor = nu / 2.0 - 1.0 - kRateMargin;
  return {f.error.empty() && f.slope >= floor && f.r2 >= kDivergenceR2,
          fmt("slope %.4f (>= %.3f), r2 %.4f", f.slope, floor, f.r2)};
}

Outcome repair(const SweepRun& run, double nu) {
  Outcome o;
  double worst = 0.0;
  for (const auto& r : run.results) worst = r.ok ? std::max(worst, r.values.at("repair_residual_ratio")) : 1e300;
  o.pass = worst <= kRepairRatio;
  o.detail = fmt("max ratio %.2e;", worst);
  require_slope(o, run, "repair_field_norm", nu / 2.0 - kRateMargin);
  require_slope(o, run, "repair_correction_norm", nu / 2.0 - kRateMargin);
  return o;
}

Outcome lichnerowicz(const SweepRun& run, double nu) {
  Outcome o;
  double worst = 0.0;
  for (const auto& r : run.results) {
    if (!r.ok || r.contraction_ratios.empty()) worst = 1e300;
    for (double q : r.contraction_ratios) worst = std::max(worst, q);
  }
  o.pass = worst < 1.0;
  o.detail = fmt("max contraction %.4f;", worst);
  require_slope(o, run, "lichnerowicz_defect_norm", nu / 2.0 - kRateMargin);
  require_slope(o, run, "conformal_factor_deviation", nu / 2.0 - kRateMargin);
  return o;
}

Outcome limits(const SweepRun& run, double nu) {
  Outcome o;
  double pre = 0.0;
  for (const auto& r : run.results) pre = r.ok ? std::max(pre, r.values.at("limit_outer_metric_preconformal")) : 1e300;
  o.pass = pre == 0.0;
  o.detail = fmt("preconformal %.1e;", pre);
  for (const char* q : {"limit_outer_metric_c0", "limit_outer_metric_c1", "limit_outer_curvature_c0",
                        "limit_outer_curvature_c1"})
    require_slope(o, run, q, nu / 2.0 - kRateMargin);
  for (const char* q : {"limit_inner_metric_c0", "limit_inner_metric_c1", "limit_inner_curvature_c0",
                        "limit_inner_curvature_c1"})
    require_slope(o, run, q, 1.0 - nu / 2.0 - kRateMargin);
  return o;
}

Outcome closure(const SweepRun& run) {
  const double bound = 10.0 * (run.config.tol_picard + run.config.tol_linear);
  double h = 0.0, m = 0.0;
  for (const auto& r : run.results) {
    h = r.ok ? std::max(h, r.values.at("transformed_hamiltonian_residual")) : 1e300;
    m = r.ok ? std::max(m, r.values.at("transformed_momentum_residual")) : 1e300;
  }
  return {h <= bound && m <= bound, fmt("hamiltonian %.2e, momentum %.2e, bound %.2e", h, m, bound)};
}

Outcome diagnostics() {
  const double s1 = injectivity_spectrum(round_sphere_spectrum(3.0, 0.0, 200)).smallest_magnitude;
  const double s2 = injectivity_spectrum(round_sphere_spectrum(3.0, 0.0, 400)).smallest_magnitude;
  const double order = std::log2(s1 / s2);
  const double tau = 3.0, Lambda = 1.0, expect = tau * tau / 3.0 - Lambda;
  const double got = injectivity_spectrum(round_sphere_spectrum(Lambda, tau, 400)).smallest_magnitude;
  const double rel = std::abs(got - expect) / expect;
  const double kd = std::log2(de_sitter_zonal_kid(200).sup() / de_sitter_zonal_kid(400).sup());
  const double ks = std::log2(schwarzschild_lapse_kid(1.0, 200).sup() / schwarzschild_lapse_kid(1.0, 400).sup());
  Outcome o;
  o.pass = order >= kSpectrumOrder && rel <= kTauRelTol && kd >= kKidOrder && ks >= kKidOrder;
  o.detail = fmt("kernel order %.3f, shifted case rel. error %.2e,", order, rel) +
             fmt(" KID orders %.3f / %.3f", kd, ks);
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const SweepConfig& base, const SweepRun& first) {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "cmcglue_acceptance";
  fs::remove_all(root);
  emit_report(first, (root / "a").string());
  SweepConfig again = base;
  emit_report(run_sweep(again), (root / "b").string());
  SweepConfig serial = base;
  serial.parallel = false;
  const SweepRun s = run_sweep(serial);
  const bool same_csv = slurp(root / "a" / "results.csv") == slurp(root / "b" / "results.csv");
  const bool same_manifest = slurp(root / "a" / "manifest.json") == slurp(root / "b" / "manifest.json");
  const bool serial_csv = results_csv(s) == slurp(root / "a" / "results.csv");
  fs::remove_all(root);
  return {same_csv && same_manifest && serial_csv,
          std::string("repeat csv ") + (same_csv ? "identical" : "differs") + ", manifest " +
              (same_manifest ? "identical" : "differs") + ", serial csv " + (serial_csv ? "identical" : "differs")};
}

}  // namespace

int main() {
  const SweepConfig cfg;
  const SweepRun run = run_sweep(cfg);
  for (const auto& r : run.results)
    if (!r.ok) std::printf("note: eps=%g failed in %s: %s\n", r.epsilon, r.stage.c_str(), r.message.c_str());

  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"kernel suite", kernel_suite},
      {"Schwarzschild-de Sitter profile", sds_equation},
      {"gluing structure", [&] { return glue_structure_all(run); }},
      {"momentum residual rate", [&] { return divergence_rate(run, cfg.nu); }},
      {"momentum repair", [&] { return repair(run, cfg.nu); }},
      {"Lichnerowicz defect and solution rates", [&] { return lichnerowicz(run, cfg.nu); }},
      {"point-particle limits", [&] { return limits(run, cfg.nu); }},
      {"constraint closure", [&] { return closure(run); }},
      {"injectivity and KID diagnostics", diagnostics},
      {"determinism and parallel/serial equivalence", [&] { return determinism(cfg, run); }},
  };
  int failed = 0, k = 0;
  for (const auto& [name, check] : criteria) {
    ++k;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", k, name, o.detail.c_str());
  }
  return failed == 0 ? 0 : 1;
}
