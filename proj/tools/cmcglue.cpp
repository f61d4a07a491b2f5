// cmcglue command-line driver.
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cmcglue/sweep.hpp"

using namespace cmcglue;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0, exit_validation = 1, exit_numerical = 2, exit_acceptance = 3;

const char* const config_keys[] = {"C",      "epsilons", "nu",      "grid.n",  "grid.rmin", "grid.rmax",
                                   "tol.linear", "tol.picard", "M",   "Lambda",  "tau",       "mu0.c",
                                   "k_outer", "k_inner", "margin",  "out_dir", "parallel",  "seed"};

struct Globals {
  std::string config_path;
  std::map<std::string, std::string> flags;
};

SweepConfig resolve_config(const Globals& g) {
  SweepConfig cfg;
  if (!g.config_path.empty()) cfg = load_sweep_config(g.config_path);
  json over = json::object();
  for (const auto& [k, v] : g.flags) over[k] = v;
  apply_config(cfg, over);
  cfg.validate();
  return cfg;
}

struct Pipeline {
  RadialGrid grid;
  GluedData glued;
};

Pipeline build(const SweepConfig& cfg, double eps, const std::string& ae_path) {
  const RadialGrid grid = RadialGrid::logarithmic(eps * cfg.grid_rmin, cfg.grid_rmax, cfg.grid_n);
  const AEProfile ae = ae_path.empty() ? models::maximal_slice(cfg.M, cfg.mu0_c) : load_ae_profile(ae_path);
  GluedData gl = glue(GluingConfig{cfg.C, eps, cfg.nu}, models::de_sitter(cfg.Lambda, cfg.tau), ae, grid);
  return {grid, std::move(gl)};
}

double pick_epsilon(const SweepConfig& cfg, std::optional<double> eps) {
  const double e = eps ? *eps : cfg.epsilons.front();
  GluingConfig{cfg.C, e, cfg.nu}.validate();
  return e;
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gluing of CMC initial data: glue, repair, Lichnerowicz solve, rate sweep"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  for (const char* key : config_keys) {
    app.add_option_function<std::string>(std::string("--") + key, [&g, key](const std::string& v) { g.flags[key] = v; },
                                         std::string("override config key ") + key);
  }

  std::optional<double> eps;
  std::string ae_path;

  auto* gen = app.add_subcommand("generate", "write a model profile file");
  std::string model = "maximal-slice", out_path;
  double rho_min = 1.0, rho_max = 100.0;
  std::size_t samples = 2001;
  gen->add_option("--model", model, "maximal-slice | schwarzschild | flat")
      ->check(CLI::IsMember({"maximal-slice", "schwarzschild", "flat"}));
  gen->add_option("--output,-o", out_path, "profile file to write")->required();
  gen->add_option("--rho-min", rho_min);
  gen->add_option("--rho-max", rho_max);
  gen->add_option("--samples", samples);

  auto* glue_cmd = app.add_subcommand("glue", "glue the model data at one epsilon and report the structure");
  auto* repair_cmd = app.add_subcommand("repair", "glue and repair the momentum constraint");
  auto* solve_cmd = app.add_subcommand("solve", "glue, repair and solve the Lichnerowicz equation");
  std::string profile_out;
  for (auto* c : {glue_cmd, repair_cmd, solve_cmd}) {
    c->add_option("--epsilon", eps, "gluing parameter (default: first of epsilons)");
    c->add_option("--ae", ae_path, "AE profile file (default: maximal-slice model)")->check(CLI::ExistingFile);
  }
  glue_cmd->add_option("--profile-out", profile_out, "write r, A, m, regimes as CSV");
  solve_cmd->add_option("--profile-out", profile_out, "write r, phi as CSV");

  auto* vk = app.add_subcommand("verify-kernel", "check the flat mode operator on its catalogued kernel");
  std::size_t vk_n = 512;
  int vk_l = 4;
  vk->add_option("--n", vk_n, "coarse node count (fine grid has twice as many)");
  vk->add_option("--lmax", vk_l, "largest angular index");

  auto* spec = app.add_subcommand("spectrum", "smallest eigenvalues of the traced injectivity operator");
  std::string spec_case = "sphere";
  std::size_t cells = 400;
  double spec_tau = 3.0, spec_lambda = 1.0;
  spec->add_option("--case", spec_case, "sphere | cmc-sphere | flat-ball")
      ->check(CLI::IsMember({"sphere", "cmc-sphere", "flat-ball"}));
  spec->add_option("--cells", cells);
  spec->add_option("--tau-value", spec_tau, "tau for cmc-sphere");
  spec->add_option("--lambda-value", spec_lambda, "Lambda for cmc-sphere");

  auto* kid = app.add_subcommand("kid", "KID residuals of radial candidates");
  std::string kid_case = "de-sitter";
  std::size_t kid_n = 400;
  kid->add_option("--case", kid_case, "de-sitter | schwarzschild")
      ->check(CLI::IsMember({"de-sitter", "schwarzschild"}));
  kid->add_option("--n", kid_n);

  auto* sweep = app.add_subcommand("sweep", "run the epsilon sweep and write the report");
  bool check = false;
  sweep->add_flag("--check", check, "exit 3 unless every rate and per-run check passes");

  auto* report = app.add_subcommand("report", "refit and replot a finished sweep");
  std::string report_dir;
  report->add_option("--dir", report_dir, "sweep output directory (default: out_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? exit_ok : exit_validation;
  }

  try {
    const SweepConfig cfg = resolve_config(g);

    if (*gen) {
      AEProfile ae = model == "maximal-slice" ? models::maximal_slice(cfg.M, cfg.mu0_c)
                     : model == "schwarzschild" ? models::schwarzschild(cfg.M)
                                                : models::flat_end();
      write_ae_profile(out_path, ae, RadialGrid::logarithmic(rho_min, rho_max, samples));
      print({{"model", model}, {"output", out_path}, {"samples", samples}});
      return exit_ok;
    }

    if (*glue_cmd || *repair_cmd || *solve_cmd) {
      const double e = pick_epsilon(cfg, eps);
      const Pipeline p = build(cfg, e, ae_path);
      const GlueStructure gs = glue_structure(p.glued);
      json out = {{"epsilon", e},
                  {"nodes", p.grid.size()},
                  {"r_min", p.grid.r_min()},
                  {"r_max", p.grid.r_max()},
                  {"glue",
                   {{"mu_zero_on_silent_band", gs.mu_zero_on_silent_band},
                    {"metric_matches_sources", gs.metric_matches_sources},
                    {"mu_matches_sources", gs.mu_matches_sources},
                    {"violation_nodes", gs.violation_nodes},
                    {"violation_nodes_outside_bands", gs.violation_outside}}}};
      if (*glue_cmd) {
        if (!profile_out.empty()) {
          std::FILE* f = std::fopen(profile_out.c_str(), "w");
          if (!f) throw std::runtime_error("cannot write " + profile_out);
          std::fprintf(f, "r,A,m,metric_regime,mu_regime\n");
          for (std::size_t i = 0; i < p.grid.size(); ++i)
            std::fprintf(f, "%.17g,%.17g,%.17g,%s,%s\n", p.grid.r(i), p.glued.g_eps.values()[i],
                         p.glued.mu_eps.m[i], to_string(p.glued.metric_regime[i]),
                         to_string(p.glued.mu_regime[i]));
          std::fclose(f);
        }
        print(out);
        return gs.ok() ? exit_ok : exit_numerical;
      }
      RepairOptions ro;
      ro.nu = cfg.nu;
      ro.tol = cfg.tol_linear;
      const RepairResult rep = repair_momentum(p.glued, ro);
      out["repair"] = {{"x_norm", rep.report.x_norm},
                       {"condition_estimate", rep.report.condition_estimate},
                       {"source_sup", rep.report.source_sup},
                       {"residual_sup", rep.report.residual_sup},
                       {"residual_ratio", rep.report.residual_ratio},
                       {"refinement_steps", rep.report.refinement_steps}};
      if (*repair_cmd) {
        print(out);
        return exit_ok;
      }
      const LichnerowiczProblem P = make_problem(p.glued, rep.mu_tilde, cfg.Lambda);
      PicardOptions po;
      po.tol = cfg.tol_picard;
      po.nu = cfg.nu;
      const PicardResult sol = picard_solve(P, po);
      out["solve"] = {{"iterations", sol.report.iterations},
                      {"contraction_ratios", sol.report.contraction_ratios},
                      {"final_residual", sol.report.final_residual},
                      {"final_residual_sup", sol.report.final_residual_sup},
                      {"eta_norm", sol.report.eta_norm},
                      {"condition_estimate", sol.report.condition_estimate}};
      if (!profile_out.empty()) {
        std::FILE* f = std::fopen(profile_out.c_str(), "w");
        if (!f) throw std::runtime_error("cannot write " + profile_out);
        std::fprintf(f, "r,phi\n");
        for (std::size_t i = 0; i < p.grid.size(); ++i) std::fprintf(f, "%.17g,%.17g\n", p.grid.r(i), sol.phi[i]);
        std::fclose(f);
      }
      print(out);
      return exit_ok;
    }

    if (*vk) {
      bool all = true;
      std::printf("%-3s %-12s %-15s %-12s %-12s %-8s %s\n", "l", "growth", "family", "res(n)", "res(2n)", "order",
                  "status");
      for (const auto& c : verify_kernel_suite(vk_l, vk_n)) {
        all = all && c.pass;
        std::printf("%-3d %-12s %-15s %-12.4e %-12.4e %-8.3f %s\n", c.l, to_string(c.tag.growth),
                    to_string(c.tag.family), c.coarse, c.fine, c.polynomial ? 0.0 : c.order,
                    c.polynomial ? (c.pass ? "exact" : "FAIL") : (c.pass ? "ok" : "FAIL"));
      }
      return all ? exit_ok : exit_acceptance;
    }

    if (*spec) {
      const SpectrumProblem sp = spec_case == "sphere"       ? round_sphere_spectrum(3.0, 0.0, cells)
                                 : spec_case == "cmc-sphere" ? round_sphere_spectrum(spec_lambda, spec_tau, cells)
                                                             : flat_ball_spectrum(cells);
      const SpectrumResult r = injectivity_spectrum(sp);
      print({{"case", spec_case}, {"cells", cells}, {"eigenvalues", r.eigenvalues},
             {"smallest_magnitude", r.smallest_magnitude}, {"kernel", r.has_kernel}});
      return exit_ok;
    }

    if (*kid) {
      auto run = [&](std::size_t n) {
        return kid_case == "de-sitter" ? de_sitter_zonal_kid(n).sup() : schwarzschild_lapse_kid(cfg.M, n).sup();
      };
      const double coarse = run(kid_n), fine = run(2 * kid_n);
      print({{"case", kid_case}, {"n", kid_n}, {"residual_sup", coarse}, {"residual_sup_refined", fine},
             {"order", std::log2(coarse / fine)}});
      return exit_ok;
    }

    if (*sweep) {
      const SweepRun run = run_sweep(cfg);
      emit_report(run, cfg.out_dir);
      const auto checks = sweep_checks(run);
      bool all = true;
      for (const auto& c : checks) {
        all = all && c.pass;
        std::printf("%s %s: %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
      }
      std::printf("report written to %s\n", cfg.out_dir.c_str());
      return check && !all ? exit_acceptance : exit_ok;
    }

    if (*report) {
      const std::string dir = report_dir.empty() ? cfg.out_dir : report_dir;
      const SweepRun run = load_run(dir);
      for (const auto& f : run.fits) {
        if (f.error.empty() && !f.points.empty())
          std::printf("%-34s slope %8.4f  target %7.4f  r2 %6.4f  %s\n", f.quantity.c_str(), f.slope, f.target, f.r2,
                      f.pass ? "pass" : "FAIL");
        else
          std::printf("%-34s not fitted: %s\n", f.quantity.c_str(), f.error.c_str());
      }
      emit_report(run, dir);
      return exit_ok;
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_validation;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return exit_numerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_numerical;
  }
  return exit_ok;
}
