#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cmcglue/error.hpp"
#include "cmcglue/gluing_engine.hpp"
#include "cmcglue/lichnerowicz_solver.hpp"
#include "cmcglue/mode_laplacian.hpp"
#include "cmcglue/model_library.hpp"
#include "cmcglue/radial_fields.hpp"
#include "cmcglue/weighted_norms.hpp"

namespace cmcglue {

inline constexpr const char* tool_version = "1.0.0";

using Interval = std::pair<double, double>;

struct SweepConfig {
  double C = 1.5;
  std::vector<double> epsilons = {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512};
  double nu = 1.75;
  std::size_t grid_n = 2049;
  double grid_rmin = 0.75;  // inner end in AE units: r_min = eps * grid_rmin
  double grid_rmax = 3.0;
  double tol_linear = 1e-8;
  double tol_picard = 1e-9;
  double M = 1.0;
  double Lambda = 0.1;
  double tau = 0.0;
  double mu0_c = 2.0;
  Interval k_outer{2.2, 2.6};   // r, compact side
  Interval k_inner{1.25, 1.75};  // rho, AE side
  double margin = 0.2;
  std::string out_dir = "sweep_out";
  bool parallel = true;
  std::uint64_t seed = 12345;

  void validate() const {
    if (epsilons.empty()) throw ValidationError("epsilons must not be empty");
    if (!(C > 1.0)) throw ValidationError("C must exceed 1");
    if (!(nu > 1.5 && nu < 2.0)) throw ValidationError("nu must lie strictly inside (3/2, 2)");
    const double emax = 1.0 / (4.0 * C * C);
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
      if (!(epsilons[i] > 0.0) || epsilons[i] > emax * (1.0 + 1e-12))
        throw ValidationError("epsilon must lie in (0, (2C)^-2]");
      if (i > 0 && !(epsilons[i] < epsilons[i - 1])) throw ValidationError("epsilons must be strictly decreasing");
    }
    if (grid_n < 64) throw ValidationError("grid.n must be at least 64");
    if (!(grid_rmin > 0.0) || grid_rmin > C / 2.0) throw ValidationError("grid.rmin must lie in (0, C/2]");
    if (!(grid_rmax >= 2.0 / C)) throw ValidationError("grid.rmax must be at least 2/C");
    if (!(tol_linear > 0.0) || !(tol_picard > 0.0)) throw ValidationError("tolerances must be positive");
    if (!(M >= 0.0)) throw ValidationError("mass must be nonnegative");
    if (!(k_outer.first < k_outer.second) || !(k_inner.first < k_inner.second))
      throw ValidationError("compact sets must be nonempty intervals");
    if (!(margin >= 0.0)) throw ValidationError("margin must be nonnegative");
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["C"] = C;
    j["epsilons"] = epsilons;
    j["nu"] = nu;
    j["grid.n"] = grid_n;
    j["grid.rmin"] = grid_rmin;
    j["grid.rmax"] = grid_rmax;
    j["tol.linear"] = tol_linear;
    j["tol.picard"] = tol_picard;
    j["M"] = M;
    j["Lambda"] = Lambda;
    j["tau"] = tau;
    j["mu0.c"] = mu0_c;
    j["k_outer"] = {k_outer.first, k_outer.second};
    j["k_inner"] = {k_inner.first, k_inner.second};
    j["margin"] = margin;
    j["out_dir"] = out_dir;
    j["parallel"] = parallel;
    j["seed"] = seed;
    return j;
  }
};

namespace detail {

inline void flatten_into(const nlohmann::json& j, const std::string& prefix, nlohmann::json& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) flatten_into(*it, key, out);
    else out[key] = *it;
  }
}

inline double parse_number(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ValidationError("config key " + key + ": not a number: " + text);
  }
  if (used != text.size()) throw ValidationError("config key " + key + ": not a number: " + text);
  return v;
}

inline std::vector<double> parse_list(const std::string& key, std::string text) {
  text.erase(std::remove_if(text.begin(), text.end(), [](char c) { return c == '[' || c == ']' || c == ' '; }),
             text.end());
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(key, item));
  return out;
}

inline double as_number(const std::string& key, const nlohmann::json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse_number(key, v.get<std::string>());
  throw ValidationError("config key " + key + ": expected a number");
}

inline std::vector<double> as_list(const std::string& key, const nlohmann::json& v) {
  if (v.is_array()) {
    std::vector<double> out;
    for (const auto& e : v) out.push_back(as_number(key, e));
    return out;
  }
  if (v.is_string()) return parse_list(key, v.get<std::string>());
  if (v.is_number()) return {v.get<double>()};
  throw ValidationError("config key " + key + ": expected a list of numbers");
}

inline bool as_bool(const std::string& key, const nlohmann::json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) return v.get<long long>() != 0;
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "off" || s == "no") return false;
  }
  throw ValidationError("config key " + key + ": expected a boolean");
}

inline Interval as_interval(const std::string& key, const nlohmann::json& v) {
  const auto l = as_list(key, v);
  if (l.size() != 2) throw ValidationError("config key " + key + ": expected two numbers");
  return {l[0], l[1]};
}

}  // namespace detail

// Applies a JSON object (nested or with dotted keys) on top of cfg.
inline void apply_config(SweepConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  nlohmann::json flat = nlohmann::json::object();
  detail::flatten_into(j, "", flat);
  for (auto it = flat.begin(); it != flat.end(); ++it) {
    const std::string& k = it.key();
    const auto& v = *it;
    if (k == "C") cfg.C = detail::as_number(k, v);
    else if (k == "epsilons") cfg.epsilons = detail::as_list(k, v);
    else if (k == "nu") cfg.nu = detail::as_number(k, v);
    else if (k == "grid.n") {
      const double n = detail::as_number(k, v);
      if (!(n >= 0.0) || n != std::floor(n)) throw ValidationError("config key grid.n: expected a positive integer");
      cfg.grid_n = static_cast<std::size_t>(n);
    } else if (k == "grid.rmin") cfg.grid_rmin = detail::as_number(k, v);
    else if (k == "grid.rmax") cfg.grid_rmax = detail::as_number(k, v);
    else if (k == "tol.linear") cfg.tol_linear = detail::as_number(k, v);
    else if (k == "tol.picard") cfg.tol_picard = detail::as_number(k, v);
    else if (k == "M") cfg.M = detail::as_number(k, v);
    else if (k == "Lambda") cfg.Lambda = detail::as_number(k, v);
    else if (k == "tau") cfg.tau = detail::as_number(k, v);
    else if (k == "mu0.c") cfg.mu0_c = detail::as_number(k, v);
    else if (k == "k_outer") cfg.k_outer = detail::as_interval(k, v);
    else if (k == "k_inner") cfg.k_inner = detail::as_interval(k, v);
    else if (k == "margin") cfg.margin = detail::as_number(k, v);
    else if (k == "out_dir") {
      if (!v.is_string()) throw ValidationError("config key out_dir: expected a string");
      cfg.out_dir = v.get<std::string>();
    } else if (k == "parallel") cfg.parallel = detail::as_bool(k, v);
    else if (k == "seed") {
      const double s = detail::as_number(k, v);
      if (!(s >= 0.0) || s != std::floor(s)) throw ValidationError("config key seed: expected a nonnegative integer");
      cfg.seed = static_cast<std::uint64_t>(s);
    } else {
      throw ValidationError("unknown config key: " + k);
    }
  }
}

inline SweepConfig load_sweep_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed config file " + path + ": " + e.what());
  }
  SweepConfig cfg;
  apply_config(cfg, j);
  return cfg;
}

// Fitted quantities and their expected exponents.
struct QuantitySpec {
  std::string name;
  double target;
  std::string meaning;
};

inline std::vector<QuantitySpec> quantity_catalogue(double nu) {
  return {
      {"glued_mu_norm_m1", 0.0, "||mu_eps||_{0,0,-1}"},
      {"glued_mu_norm_m2_outer", 0.0, "||mu_eps||_{0,0,-2;U}"},
      {"glued_mu_norm_0_inner", 1.0, "||mu_eps||_{0,0,0;V}"},
      {"glued_divergence_norm", nu / 2.0 - 1.0, "||(div mu_eps)^#||_{0,0,nu}"},
      {"repair_field_norm", nu / 2.0, "||X_eps||_{0,0,nu}"},
      {"repair_correction_norm", nu / 2.0, "||mu~ - mu_eps||_{0,0,nu-2}"},
      {"repair_square_change_norm", nu / 2.0, "|| |mu~|^2 - |mu_eps|^2 ||_{0,0,nu+1}"},
      {"repair_square_change_norm_outer", nu / 2.0, "|| |mu~|^2 - |mu_eps|^2 ||_{0,0,nu;U}"},
      {"repaired_square_norm_2", 0.0, "|| |mu~|^2 ||_{0,0,2}"},
      {"repaired_square_norm_0_outer", 0.0, "|| |mu~|^2 ||_{0,0,0;U}"},
      {"repaired_square_norm_inner", nu - 1.0, "|| |mu~|^2 ||_{0,0,nu+1;V}"},
      {"repaired_square_norm_middle", nu / 2.0, "|| |mu~|^2 ||_{0,0,nu;W}"},
      {"lichnerowicz_defect_norm", nu / 2.0, "||N_eps(1)||_{0,0,nu+1}"},
      {"conformal_factor_deviation", nu / 2.0, "||phi_eps - 1||_{0,0,nu-1}"},
      {"limit_outer_metric_c0", nu / 2.0, "||phi^4 g_eps - g||_{C^0(K_outer)}"},
      {"limit_outer_metric_c1", nu / 2.0, "||phi^4 g_eps - g||_{C^1(K_outer)}"},
      {"limit_outer_curvature_c0", nu / 2.0, "||K'_eps - K||_{C^0(K_outer)}"},
      {"limit_outer_curvature_c1", nu / 2.0, "||K'_eps - K||_{C^1(K_outer)}"},
      {"limit_inner_metric_c0", 1.0 - nu / 2.0, "||eps^-2 phi^4 g_eps - g0||_{C^0(K_inner)}"},
      {"limit_inner_metric_c1", 1.0 - nu / 2.0, "||eps^-2 phi^4 g_eps - g0||_{C^1(K_inner)}"},
      {"limit_inner_curvature_c0", 1.0 - nu / 2.0, "||eps^-1 K'_eps - K0||_{C^0(K_inner)}"},
      {"limit_inner_curvature_c1", 1.0 - nu / 2.0, "||eps^-1 K'_eps - K0||_{C^1(K_inner)}"},
  };
}

struct RateFit {
  std::string quantity;
  std::vector<std::pair<double, double>> points;  // (eps, value)
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
  double target = 0.0, margin = 0.2;
  bool pass = false;
  std::string error;  // set when the series could not be fitted
};

// Least-squares line through (log eps, log value); pass iff slope >= target - margin.
inline RateFit fit_rate(const std::string& quantity, const std::vector<std::pair<double, double>>& series,
                        double target, double margin) {
  if (series.size() < 4) throw ValidationError("rate fit needs at least 4 points");
  for (const auto& [e, v] : series) {
    if (!(e > 0.0) || !std::isfinite(e)) throw ValidationError("rate fit needs positive epsilons");
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("rate fit needs finite positive values");
  }
  const double n = static_cast<double>(series.size());
  double sx = 0, sy = 0;
  for (const auto& [e, v] : series) {
    sx += std::log(e);
    sy += std::log(v);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [e, v] : series) {
    const double dx = std::log(e) - mx, dy = std::log(v) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw ValidationError("rate fit needs distinct epsilons");
  RateFit f;
  f.quantity = quantity;
  f.points = series;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  f.target = target;
  f.margin = margin;
  f.pass = f.slope >= target - margin;
  return f;
}

// Errors of the transformed data against the two limits on compact sets.
// Outer: i_eps = identity on r, measured in the background frame. Inner:
// iota_eps(rho) = eps rho, measured in the AE frame in rho units.
struct LimitErrors {
  double outer_metric[2] = {0, 0}, outer_curvature[2] = {0, 0};
  double inner_metric[2] = {0, 0}, inner_curvature[2] = {0, 0};
  double preconformal_outer = 0.0;  // sup |A_eps - A| / A on K_outer
};

namespace detail {

inline std::pair<std::size_t, std::size_t> node_range(const RadialGrid& grid, double lo, double hi) {
  std::size_t i0 = grid.size(), i1 = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.r(i) >= lo && grid.r(i) <= hi) {
      i0 = std::min(i0, i);
      i1 = std::max(i1, i);
    }
  }
  if (i0 > i1) throw ValidationError("compact set contains no grid nodes");
  return {i0, i1};
}

// sup |T| + sup |nabla T| (k = 1) over nodes [i0, i1] of a sub-grid.
inline void ck_norms(const FrameTensor& T, const RadialMetric& g, const RadialGrid& grid, std::size_t i0,
                     std::size_t i1, double out[2]) {
  const Profile m0 = T.modulus();
  const Profile m1 = covariant_derivative(T, g, grid).modulus();
  double s0 = 0.0, s1 = 0.0;
  for (std::size_t i = i0; i <= i1; ++i) {
    s0 = std::max(s0, m0[i]);
    s1 = std::max(s1, m1[i]);
  }
  out[0] = s0;
  out[1] = s0 + s1;
}

}  // namespace detail

inline LimitErrors limit_errors(const GluedData& glued, const Profile& phi, const TraceFreeRadialTensor& mu_tilde,
                                const Interval& k_outer, const Interval& k_inner) {
  const auto& grid = glued.grid;
  const double eps = glued.config.epsilon, s = glued.config.sqrt_eps();
  detail::require_size(phi.size(), grid);
  detail::require_size(mu_tilde.size(), grid);
  if (!(k_outer.first >= 8.0 * s && k_outer.second <= grid.r_max()) ||
      !(eps * k_inner.second <= 0.5 * s && eps * k_inner.first >= grid.r_min()))
    throw ValidationError("compact set not admissible for this ε");

  const std::size_t collar = 4;
  LimitErrors out;
  const Profile Ae = glued.g_eps.A();
  const double tau = glued.tau;

  auto run = [&](double lo, double hi, double scale, const RadialModel& model, bool inner, double metric_out[2],
                 double curv_out[2]) {
    const auto [a, b] = detail::node_range(grid, lo, hi);
    if (a < collar || b + collar >= grid.size()) throw ValidationError("compact set not admissible for this ε");
    const std::size_t j0 = a - collar, j1 = b + collar;
    std::vector<double> nodes;
    for (std::size_t i = j0; i <= j1; ++i) nodes.push_back(grid.r(i) / scale);
    const RadialGrid sub = RadialGrid::from_nodes(nodes);
    const RadialMetric g = model.metric_on(sub);
    const Profile A = g.A();
    const std::size_t n = sub.size();
    Profile hr(n), ht(n), kr(n), kt(n);
    const Profile mref = model.mu_on(sub).m;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = j0 + k;
      const double f = phi[i], f4 = f * f * f * f, fm2 = 1.0 / (f * f);
      hr[k] = (f4 * Ae[i] - A[k]) / A[k];
      ht[k] = f4 - 1.0;
      // K' = phi^-2 mu~ + (tau/3) phi^4 g_eps, covariant, then frame.
      const double Krr = (fm2 * 2.0 * mu_tilde.m[i] + tau / 3.0 * f4) * Ae[i] / A[k];
      const double Ktt = -fm2 * mu_tilde.m[i] + tau / 3.0 * f4;
      const double ref_tau = inner ? model.tau : tau;
      if (inner) {
        kr[k] = eps * Krr - (2.0 * mref[k] + ref_tau / 3.0);
        kt[k] = eps * Ktt - (-mref[k] + ref_tau / 3.0);
      } else {
        kr[k] = Krr - (2.0 * mref[k] + ref_tau / 3.0);
        kt[k] = Ktt - (-mref[k] + ref_tau / 3.0);
      }
    }
    detail::ck_norms(FrameTensor::diagonal(hr, ht), g, sub, collar, collar + (b - a), metric_out);
    detail::ck_norms(FrameTensor::diagonal(kr, kt), g, sub, collar, collar + (b - a), curv_out);
  };

  run(k_outer.first, k_outer.second, 1.0, glued.gluer.background, false, out.outer_metric, out.outer_curvature);
  run(eps * k_inner.first, eps * k_inner.second, eps, glued.ae, true, out.inner_metric,
      out.inner_curvature);

  const auto [a, b] = detail::node_range(grid, k_outer.first, k_outer.second);
  for (std::size_t i = a; i <= b; ++i) {
    const double A = glued.gluer.background.A_at(grid.r(i));
    out.preconformal_outer = std::max(out.preconformal_outer, std::abs(Ae[i] - A) / A);
  }
  return out;
}

struct EpsilonResult {
  double epsilon = 0.0;
  bool ok = true;
  std::string stage;    // failing stage, empty on success
  std::string message;  // error text, empty on success
  std::map<std::string, double> values;
  std::vector<double> contraction_ratios;
};

namespace detail {

inline double interior_collar_sup(const Profile& f, std::size_t collar) {
  double s = 0.0;
  for (std::size_t i = collar; i + collar < f.size(); ++i) s = std::max(s, std::abs(f[i]));
  return s;
}

}  // namespace detail

// The whole pipeline for one epsilon. Stage errors are recorded, not thrown.
inline EpsilonResult run_epsilon(const SweepConfig& cfg, std::size_t index) {
  EpsilonResult res;
  res.epsilon = cfg.epsilons.at(index);
  const double eps = res.epsilon, nu = cfg.nu;
  auto& v = res.values;
  std::string stage = "glue";
  try {
    const GluingConfig gc{cfg.C, eps, nu};
    const RadialGrid grid = RadialGrid::logarithmic(eps * cfg.grid_rmin, cfg.grid_rmax, cfg.grid_n);
    const RadialModel bg = models::de_sitter(cfg.Lambda, cfg.tau);
    const AEProfile ae = models::maximal_slice(cfg.M, cfg.mu0_c);
    const GluedData gl = glue(gc, bg, ae, grid);
    const RadialMetric& g = gl.g_eps;
    const WeightFunction& w = gl.weight;
    const double s = gc.sqrt_eps();

    const GlueStructure gs = glue_structure(gl);
    v["glue_mu_zero_on_silent_band"] = gs.mu_zero_on_silent_band ? 1.0 : 0.0;
    v["glue_metric_matches_sources"] = gs.metric_matches_sources ? 1.0 : 0.0;
    v["glue_mu_matches_sources"] = gs.mu_matches_sources ? 1.0 : 0.0;
    v["glue_violation_nodes_outside_bands"] = static_cast<double>(gs.violation_outside);

    stage = "glued norms";
    auto norm = [&](const FrameTensor& T, double nuv, std::optional<Interval> wsub = {}) {
      NormSpec sp;
      sp.nu = nuv;
      sp.p = T.p;
      sp.q = T.q;
      sp.weight_subset = wsub;
      return weighted_norm(T, g, w, sp, grid);
    };
    const Interval U{s / 4.0, std::numeric_limits<double>::infinity()};
    const Interval V{0.0, 12.0 * s};
    const Interval W{s / 4.0, 12.0 * s};
    const FrameTensor mu = FrameTensor::trace_free(gl.mu_eps);
    v["glued_mu_norm_m1"] = norm(mu, -1.0);
    v["glued_mu_norm_m2_outer"] = norm(mu, -2.0, U);
    v["glued_mu_norm_0_inner"] = norm(mu, 0.0, V);
    const RadialVectorField div = divergence_sharp(g, gl.mu_eps, grid);
    v["glued_divergence_norm"] = norm(FrameTensor::radial_vector(div.u, g), nu);

    stage = "repair";
    RepairOptions ro;
    ro.nu = nu;
    ro.tol = cfg.tol_linear;
    const RepairResult rep = repair_momentum(gl, ro);
    v["repair_field_norm"] = rep.report.x_norm;
    v["repair_residual_ratio"] = rep.report.residual_ratio;
    v["repair_condition_estimate"] = rep.report.condition_estimate;
    const std::size_t n = grid.size();
    Profile dm(n), dsq(n);
    const Profile sq_new = rep.mu_tilde.norm_squared(), sq_old = gl.mu_eps.norm_squared();
    for (std::size_t i = 0; i < n; ++i) {
      dm[i] = rep.mu_tilde.m[i] - gl.mu_eps.m[i];
      dsq[i] = sq_new[i] - sq_old[i];
    }
    v["repair_correction_norm"] = norm(FrameTensor::trace_free(TraceFreeRadialTensor{dm, {}}), nu - 2.0);
    v["repair_square_change_norm"] = norm(FrameTensor::scalar(dsq), nu + 1.0);
    v["repair_square_change_norm_outer"] = norm(FrameTensor::scalar(dsq), nu, U);
    v["repaired_square_norm_2"] = norm(FrameTensor::scalar(sq_new), 2.0);
    v["repaired_square_norm_0_outer"] = norm(FrameTensor::scalar(sq_new), 0.0, U);
    v["repaired_square_norm_inner"] = norm(FrameTensor::scalar(sq_new), nu + 1.0, V);
    v["repaired_square_norm_middle"] = norm(FrameTensor::scalar(sq_new), nu, W);

    stage = "lichnerowicz";
    const LichnerowiczProblem P = make_problem(gl, rep.mu_tilde, cfg.Lambda);
    const Profile N1 = n_residual(P, Profile(n, 1.0));
    v["lichnerowicz_defect_norm"] = norm(FrameTensor::scalar(N1), nu + 1.0);
    {
      // Randomized check of N(1 + eta) = N(1) + L eta + Q(eta) on this data.
      std::mt19937_64 rng(cfg.seed + index);
      std::uniform_real_distribution<double> U01(-1.0, 1.0);
      Profile eta(n);
      for (double& e : eta) e = 0.05 * U01(rng);
      const Profile lhs = n_residual_eta(P, eta), Le = linearized_apply(P, eta), Q = q_remainder(P, eta);
      Profile d(n);
      for (std::size_t i = 0; i < n; ++i) d[i] = lhs[i] - N1[i] - Le[i] - Q[i];
      Profile scale(n);
      for (std::size_t i = 0; i < n; ++i) scale[i] = std::abs(lhs[i]) + std::abs(N1[i]) + std::abs(Le[i]) + 1.0;
      double worst = 0.0;
      for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(d[i]) / scale[i]);
      v["lichnerowicz_identity_defect"] = worst;
    }
    PicardOptions po;
    po.tol = cfg.tol_picard;
    po.nu = nu;
    const PicardResult sol = picard_solve(P, po);
    res.contraction_ratios = sol.report.contraction_ratios;
    double worst_ratio = 0.0;
    for (double r : sol.report.contraction_ratios) worst_ratio = std::max(worst_ratio, r);
    v["picard_iterations"] = sol.report.iterations;
    v["picard_max_contraction"] = worst_ratio;
    v["picard_residual"] = sol.report.final_residual;
    v["picard_residual_sup"] = sol.report.final_residual_sup;
    v["lichnerowicz_condition_estimate"] = sol.report.condition_estimate;
    v["conformal_factor_deviation"] = sol.report.eta_norm;

    stage = "transform";
    const Profile Hp = transformed_hamiltonian_eta(P, sol.eta);
    const Profile Dp = transformed_momentum(P, sol.phi);
    Profile wH(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double wi = w(grid.r(i));
      wH[i] = wi * wi * Hp[i];
    }
    const Profile div_eps = momentum_residual(g, CmcExtrinsicCurvature{gl.tau, gl.mu_eps}, grid);
    v["transformed_hamiltonian_residual"] = detail::interior_collar_sup(wH, 2);
    v["transformed_momentum_residual"] = detail::interior_collar_sup(Dp, 2) / detail::interior_collar_sup(div_eps, 2);
    const TransformedData T = conformal_transform(P, sol.phi);
    double trace_dev = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace_dev = std::max(trace_dev, std::abs(T.K.trace(i) - gl.tau));
    v["transformed_trace_deviation"] = trace_dev;

    stage = "limits";
    const LimitErrors le = limit_errors(gl, sol.phi, rep.mu_tilde, cfg.k_outer, cfg.k_inner);
    v["limit_outer_metric_c0"] = le.outer_metric[0];
    v["limit_outer_metric_c1"] = le.outer_metric[1];
    v["limit_outer_curvature_c0"] = le.outer_curvature[0];
    v["limit_outer_curvature_c1"] = le.outer_curvature[1];
    v["limit_inner_metric_c0"] = le.inner_metric[0];
    v["limit_inner_metric_c1"] = le.inner_metric[1];
    v["limit_inner_curvature_c0"] = le.inner_curvature[0];
    v["limit_inner_curvature_c1"] = le.inner_curvature[1];
    v["limit_outer_metric_preconformal"] = le.preconformal_outer;
  } catch (const std::exception& e) {
    res.ok = false;
    res.stage = stage;
    res.message = e.what();
  }
  return res;
}

struct SweepCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SweepRun {
  SweepConfig config;
  std::vector<EpsilonResult> results;  // config order (decreasing eps)
  std::vector<RateFit> fits;           // catalogue order
};

inline std::vector<RateFit> fit_catalogue(const SweepConfig& cfg, const std::vector<EpsilonResult>& results) {
  std::vector<RateFit> fits;
  for (const auto& q : quantity_catalogue(cfg.nu)) {
    std::vector<std::pair<double, double>> series;
    for (const auto& r : results) {
      const auto it = r.values.find(q.name);
      if (r.ok && it != r.values.end()) series.emplace_back(r.epsilon, it->second);
    }
    try {
      fits.push_back(fit_rate(q.name, series, q.target, cfg.margin));
    } catch (const ValidationError& e) {
      RateFit f;
      f.quantity = q.name;
      f.points = series;
      f.target = q.target;
      f.margin = cfg.margin;
      f.error = e.what();
      fits.push_back(std::move(f));
    }
  }
  return fits;
}

inline SweepRun run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  SweepRun run;
  run.config = cfg;
  const std::size_t k = cfg.epsilons.size();
  if (cfg.parallel) {
    std::vector<std::future<EpsilonResult>> jobs;
    for (std::size_t i = 0; i < k; ++i) jobs.push_back(std::async(std::launch::async, run_epsilon, std::cref(cfg), i));
    for (auto& j : jobs) run.results.push_back(j.get());
  } else {
    for (std::size_t i = 0; i < k; ++i) run.results.push_back(run_epsilon(cfg, i));
  }
  run.fits = fit_catalogue(cfg, run.results);
  return run;
}

// Per-run assertions: every fit, and per epsilon the structural and
// tolerance checks.
inline std::vector<SweepCheck> sweep_checks(const SweepRun& run) {
  std::vector<SweepCheck> out;
  const auto& cfg = run.config;
  for (const auto& f : run.fits) {
    char buf[160];
    if (f.error.empty())
      std::snprintf(buf, sizeof buf, "slope %.4f target %.4f margin %.2f r2 %.4f", f.slope, f.target, f.margin, f.r2);
    else
      std::snprintf(buf, sizeof buf, "not fitted: %s", f.error.c_str());
    out.push_back({"rate " + f.quantity, f.error.empty() && f.pass, buf});
  }
  const double combined = 10.0 * (cfg.tol_picard + cfg.tol_linear);
  for (const auto& r : run.results) {
    char eps[32];
    std::snprintf(eps, sizeof eps, "eps=%.6g", r.epsilon);
    if (!r.ok) {
      out.push_back({std::string("pipeline ") + eps, false, r.stage + ": " + r.message});
      continue;
    }
    const auto& v = r.values;
    auto add = [&](const std::string& name, bool pass, double value) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6g", value);
      out.push_back({name + " " + eps, pass, buf});
    };
    add("glue structure", v.at("glue_mu_zero_on_silent_band") == 1.0 && v.at("glue_metric_matches_sources") == 1.0 &&
                              v.at("glue_mu_matches_sources") == 1.0 &&
                              v.at("glue_violation_nodes_outside_bands") == 0.0,
        v.at("glue_violation_nodes_outside_bands"));
    add("repair ratio", v.at("repair_residual_ratio") <= cfg.tol_linear, v.at("repair_residual_ratio"));
    add("picard contraction", v.at("picard_max_contraction") < 1.0, v.at("picard_max_contraction"));
    add("transformed hamiltonian", v.at("transformed_hamiltonian_residual") <= combined,
        v.at("transformed_hamiltonian_residual"));
    add("transformed momentum", v.at("transformed_momentum_residual") <= combined,
        v.at("transformed_momentum_residual"));
    add("preconformal outer error", v.at("limit_outer_metric_preconformal") == 0.0,
        v.at("limit_outer_metric_preconformal"));
  }
  return out;
}

inline std::string results_csv(const SweepRun& run) {
  std::string out = "epsilon,quantity,value\n";
  char buf[128];
  for (const auto& r : run.results) {
    if (!r.ok) {
      std::snprintf(buf, sizeof buf, "%.17g,failed,1\n", r.epsilon);
      out += buf;
      continue;
    }
    for (const auto& [name, value] : r.values) {
      std::snprintf(buf, sizeof buf, "%.17g,%s,%.17g\n", r.epsilon, name.c_str(), value);
      out += buf;
    }
  }
  return out;
}

inline nlohmann::json manifest_json(const SweepRun& run) {
  nlohmann::json j;
  j["tool"] = "cmcglue";
  j["version"] = tool_version;
  j["config"] = run.config.to_json();
  j["cases"] = nlohmann::json::array();
  for (const auto& r : run.results) {
    nlohmann::json c;
    c["epsilon"] = r.epsilon;
    c["status"] = r.ok ? "ok" : "failed";
    if (!r.ok) {
      c["stage"] = r.stage;
      c["message"] = r.message;
    }
    c["contraction_ratios"] = r.contraction_ratios;
    j["cases"].push_back(c);
  }
  j["fits"] = nlohmann::json::array();
  for (const auto& f : run.fits) {
    nlohmann::json o;
    o["quantity"] = f.quantity;
    o["target"] = f.target;
    o["margin"] = f.margin;
    o["points"] = f.points.size();
    if (f.error.empty()) {
      o["slope"] = f.slope;
      o["intercept"] = f.intercept;
      o["r2"] = f.r2;
      o["pass"] = f.pass;
    } else {
      o["error"] = f.error;
      o["pass"] = false;
    }
    j["fits"].push_back(o);
  }
  return j;
}

// log10(eps) against log10(value) with the fitted line.
inline std::string rate_plot_svg(const RateFit& f) {
  const double W = 480, H = 360, L = 70, R = 20, T = 40, B = 50;
  std::vector<double> xs, ys;
  for (const auto& [e, v] : f.points) {
    xs.push_back(std::log10(e));
    ys.push_back(std::log10(v));
  }
  double x0 = *std::min_element(xs.begin(), xs.end()), x1 = *std::max_element(xs.begin(), xs.end());
  double y0 = *std::min_element(ys.begin(), ys.end()), y1 = *std::max_element(ys.begin(), ys.end());
  const double fy0 = (f.intercept + f.slope * x0 * std::log(10.0)) / std::log(10.0);
  const double fy1 = (f.intercept + f.slope * x1 * std::log(10.0)) / std::log(10.0);
  y0 = std::min({y0, fy0, fy1});
  y1 = std::max({y1, fy0, fy1});
  if (x1 - x0 < 1e-12) x1 = x0 + 1.0;
  if (y1 - y0 < 1e-12) y1 = y0 + 1.0;
  const double px = (x1 - x0) * 0.05, py = (y1 - y0) * 0.08;
  x0 -= px;
  x1 += px;
  y0 -= py;
  y1 += py;
  auto X = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto Y = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(2);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << f.quantity
    << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    o << "<text x=\"" << X(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"10\">" << xv
      << "</text>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << Y(yv) + 3 << "\" text-anchor=\"end\" font-size=\"10\">" << yv
      << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
    << "log10(epsilon)</text>\n";
  o << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
    << (T + H - B) / 2 << ")\">log10(value)</text>\n";
  o << "<line x1=\"" << X(xs.front()) << "\" y1=\"" << Y(fy0 + 0.0) << "\" x2=\"" << X(xs.back()) << "\" y2=\""
    << Y(fy1) << "\" stroke=\"steelblue\" stroke-width=\"1.5\"/>\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    o << "<circle cx=\"" << X(xs[i]) << "\" cy=\"" << Y(ys[i]) << "\" r=\"3.5\" fill=\"firebrick\"/>\n";
  o.precision(4);
  o << "<text x=\"" << W - R << "\" y=\"" << T + 4 << "\" text-anchor=\"end\" font-size=\"11\">slope " << f.slope
    << " (target " << f.target << ")</text>\n";
  o << "</svg>\n";
  return o.str();
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace detail

// results.csv, manifest.json and one SVG per fitted quantity.
inline void emit_report(const SweepRun& run, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir + ": " + ec.message());
  detail::write_file(fs::path(dir) / "results.csv", results_csv(run));
  detail::write_file(fs::path(dir) / "manifest.json", manifest_json(run).dump(2) + "\n");
  for (const auto& f : run.fits)
    if (f.error.empty()) detail::write_file(fs::path(dir) / (f.quantity + ".svg"), rate_plot_svg(f));
}

// Rebuilds a run from a results.csv and manifest.json pair.
inline SweepRun load_run(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path mpath = fs::path(dir) / "manifest.json", cpath = fs::path(dir) / "results.csv";
  std::ifstream min(mpath);
  if (!min) throw ValidationError("cannot open " + mpath.string());
  nlohmann::json m;
  try {
    min >> m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed " + mpath.string() + ": " + e.what());
  }
  SweepRun run;
  apply_config(run.config, m.at("config"));
  std::ifstream cin(cpath);
  if (!cin) throw ValidationError("cannot open " + cpath.string());
  std::string line;
  std::getline(cin, line);
  if (line != "epsilon,quantity,value") throw ValidationError("unexpected header in " + cpath.string());
  std::map<double, EpsilonResult, std::greater<double>> by_eps;
  while (std::getline(cin, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string e, q, val;
    if (!std::getline(ss, e, ',') || !std::getline(ss, q, ',') || !std::getline(ss, val))
      throw ValidationError("malformed row in " + cpath.string() + ": " + line);
    const double eps = detail::parse_number("epsilon", e);
    auto& r = by_eps[eps];
    r.epsilon = eps;
    if (q == "failed") r.ok = false;
    else r.values[q] = detail::parse_number(q, val);
  }
  for (const auto& c : m.at("cases")) {
    const double eps = c.at("epsilon").get<double>();
    auto it = by_eps.find(eps);
    if (it == by_eps.end()) continue;
    if (c.contains("stage")) it->second.stage = c.at("stage").get<std::string>();
    if (c.contains("message")) it->second.message = c.at("message").get<std::string>();
    it->second.contraction_ratios = c.at("contraction_ratios").get<std::vector<double>>();
  }
  for (auto& [eps, r] : by_eps) run.results.push_back(std::move(r));
  run.fits = fit_catalogue(run.config, run.results);
  return run;
}

}  // namespace cmcglue
