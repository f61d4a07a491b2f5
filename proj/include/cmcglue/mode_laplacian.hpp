#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "cmcglue/banded.hpp"
#include "cmcglue/error.hpp"
#include "cmcglue/gluing_engine.hpp"
#include "cmcglue/radial_fields.hpp"
#include "cmcglue/weighted_norms.hpp"

namespace cmcglue {

struct ModeIndex {
  int l = 0;
  int m = 0;

  double lambda() const { return static_cast<double>(l) * static_cast<double>(l + 1); }
  void validate() const {
    if (l < 0 || m < -l || m > l) throw ValidationError("invalid mode index");
  }
};

// One (l, m) block of a vector field: u phi_lm d_r + v V_lm + w W_lm.
// v and w are empty for l = 0.
struct ModeVectorField {
  ModeIndex index;
  Profile u, v, w;
};

enum class Growth { at_infinity, at_origin };
enum class Family { radial_special, v_coupled_a, v_coupled_b, w };

struct KernelFamilyTag {
  Growth growth = Growth::at_infinity;
  Family family = Family::radial_special;
};

inline const char* to_string(Growth g) { return g == Growth::at_infinity ? "at-infinity" : "at-origin"; }
inline const char* to_string(Family f) {
  switch (f) {
    case Family::radial_special: return "radial-special";
    case Family::v_coupled_a: return "V-coupled-a";
    case Family::v_coupled_b: return "V-coupled-b";
    case Family::w: return "W";
  }
  return "?";
}

inline std::vector<KernelFamilyTag> all_kernel_families() {
  std::vector<KernelFamilyTag> out;
  for (Growth g : {Growth::at_infinity, Growth::at_origin})
    for (Family f : {Family::radial_special, Family::v_coupled_a, Family::v_coupled_b, Family::w})
      out.push_back({g, f});
  return out;
}

namespace detail {

inline bool all_zero(const Profile& f) {
  return std::all_of(f.begin(), f.end(), [](double x) { return x == 0.0; });
}

inline void check_mode(const ModeVectorField& f, const RadialGrid& grid) {
  f.index.validate();
  require_positive_radii(grid);
  require_size(f.u.size(), grid);
  if (f.index.l == 0) {
    if ((!f.v.empty() && !all_zero(f.v)) || (!f.w.empty() && !all_zero(f.w)))
      throw ValidationError("undefined angular mode");
  } else {
    if (f.v.size() != grid.size() || f.w.size() != grid.size())
      throw ValidationError("profile length does not match grid");
  }
}

}  // namespace detail

// Flat vector Laplacian restricted to one spherical-harmonic block:
// U = -[(2/3)u'' + (4/3)u'/r - (4/3)u/r^2 - (lam/2)u/r^2 + (sqrt(lam)/r)v - (sqrt(lam)/6)v']
// V = -[(sqrt(lam)/6)u' + (4 sqrt(lam)/3)u/r + 2r v' + (1 - 2lam/3)v + (r^2/2)v'']
// W = -[(r^2/2)w'' + 2r w' + (1 - lam/2)w]
inline ModeVectorField apply_flat_mode(const ModeVectorField& f, const RadialGrid& grid) {
  detail::check_mode(f, grid);
  const std::size_t n = grid.size();
  const double lam = f.index.lambda(), sl = std::sqrt(lam);
  const Profile du = fd_derivative(f.u, 1, grid), d2u = fd_derivative(f.u, 2, grid);
  ModeVectorField out;
  out.index = f.index;
  out.u.resize(n);
  if (f.index.l == 0) {
    for (std::size_t i = 0; i < n; ++i) {
      const double r = grid.r(i);
      out.u[i] = -((2.0 / 3.0) * d2u[i] + (4.0 / 3.0) * du[i] / r - (4.0 / 3.0) * f.u[i] / (r * r));
    }
    return out;
  }
  const Profile dv = fd_derivative(f.v, 1, grid), d2v = fd_derivative(f.v, 2, grid);
  const Profile dw = fd_derivative(f.w, 1, grid), d2w = fd_derivative(f.w, 2, grid);
  out.v.resize(n);
  out.w.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = grid.r(i);
    out.u[i] = -((2.0 / 3.0) * d2u[i] + (4.0 / 3.0) * du[i] / r - (4.0 / 3.0) * f.u[i] / (r * r) -
                 (lam / 2.0) * f.u[i] / (r * r) + (sl / r) * f.v[i] - (sl / 6.0) * dv[i]);
    out.v[i] = -((sl / 6.0) * du[i] + (4.0 * sl / 3.0) * f.u[i] / r + 2.0 * r * dv[i] +
                 (1.0 - 2.0 * lam / 3.0) * f.v[i] + (r * r / 2.0) * d2v[i]);
    out.w[i] = -((r * r / 2.0) * d2w[i] + 2.0 * r * dw[i] + (1.0 - lam / 2.0) * f.w[i]);
  }
  return out;
}

// Catalogued kernel elements of the flat block operator.
inline ModeVectorField kernel_mode(const KernelFamilyTag& tag, const ModeIndex& index, const RadialGrid& grid) {
  index.validate();
  const std::size_t n = grid.size();
  ModeVectorField f;
  f.index = index;
  f.u.assign(n, 0.0);
  if (tag.family == Family::radial_special) {
    if (index.l != 0) throw ValidationError("radial-special kernel fields live in the l = 0 block");
    for (std::size_t i = 0; i < n; ++i) {
      const double r = grid.r(i);
      f.u[i] = tag.growth == Growth::at_infinity ? r : 1.0 / (r * r);
    }
    return f;
  }
  if (index.l < 1) throw ValidationError("indexed kernel families need l >= 1");
  detail::require_positive_radii(grid);
  const int l = index.l;
  const double L = l, sl = std::sqrt(index.lambda());
  f.v.assign(n, 0.0);
  f.w.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = grid.r(i);
    auto P = [r](int e) { return std::pow(r, e); };
    if (tag.growth == Growth::at_infinity) {
      switch (tag.family) {
        case Family::v_coupled_a:
          f.u[i] = (L - 6.0) * sl * P(l + 1);
          f.v[i] = L * (L + 9.0) * P(l);
          break;
        case Family::v_coupled_b:
          f.u[i] = sl * P(l - 1);
          f.v[i] = (L + 1.0) * P(l - 2);
          break;
        case Family::w:
          f.w[i] = P(l - 1);
          break;
        default:
          break;
      }
    } else {
      switch (tag.family) {
        case Family::v_coupled_a:
          f.u[i] = (L + 7.0) * sl * P(-l);
          f.v[i] = -(L + 1.0) * (L - 8.0) * P(-l - 1);
          break;
        case Family::v_coupled_b:
          f.u[i] = sl * P(-l - 2);
          f.v[i] = -L * P(-l - 3);
          break;
        case Family::w:
          f.w[i] = P(-l - 2);
          break;
        default:
          break;
      }
    }
  }
  return f;
}

// Dirichlet values of each active component at r_min and r_max.
struct ModeBoundary {
  double u_min = 0.0, u_max = 0.0;
  double v_min = 0.0, v_max = 0.0;
  double w_min = 0.0, w_max = 0.0;
};

namespace detail {

inline std::vector<double> solve_or_throw(BandedMatrix M, std::vector<double> b) {
  return BandedLU(std::move(M), "mode system singular on this annulus").solve(std::move(b));
}

}  // namespace detail

// Direct FD solve of apply_flat_mode(f) = rhs at interior nodes with Dirichlet
// data at both ends. The coupled (u, v) pair is interleaved node by node.
inline ModeVectorField solve_mode_bvp(const ModeIndex& index, const ModeVectorField& rhs, const ModeBoundary& bc,
                                      const RadialGrid& grid) {
  detail::check_mode(rhs, grid);
  const std::size_t n = grid.size();
  const double lam = index.lambda(), sl = std::sqrt(lam);
  const BandedMatrix G1 = fd_matrix(grid, 1), G2 = fd_matrix(grid, 2);
  ModeVectorField out;
  out.index = index;

  auto interior_band = [&](std::size_t i, auto&& emit) {
    for (std::size_t j = i - 1; j <= i + 1; ++j) emit(j, G1(i, j), G2(i, j));
  };

  if (index.l == 0) {
    BandedMatrix M(n, 1, 1);
    std::vector<double> b(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double r = grid.r(i);
      interior_band(i, [&](std::size_t j, double d1, double d2) {
        M.at(i, j) += -((2.0 / 3.0) * d2 + (4.0 / 3.0) * d1 / r);
      });
      M.at(i, i) += (4.0 / 3.0) / (r * r);
      b[i] = rhs.u[i];
    }
    M.at(0, 0) = 1.0;
    M.at(n - 1, n - 1) = 1.0;
    b[0] = bc.u_min;
    b[n - 1] = bc.u_max;
    out.u = detail::solve_or_throw(std::move(M), std::move(b));
    return out;
  }

  // (u, v) block: unknown 2i is u_i, 2i+1 is v_i.
  BandedMatrix M(2 * n, 3, 3);
  std::vector<double> b(2 * n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double r = grid.r(i);
    const std::size_t eu = 2 * i, ev = 2 * i + 1;
    interior_band(i, [&](std::size_t j, double d1, double d2) {
      M.at(eu, 2 * j) += -((2.0 / 3.0) * d2 + (4.0 / 3.0) * d1 / r);
      M.at(eu, 2 * j + 1) += (sl / 6.0) * d1;
      M.at(ev, 2 * j) += -(sl / 6.0) * d1;
      M.at(ev, 2 * j + 1) += -(2.0 * r * d1 + (r * r / 2.0) * d2);
    });
    M.at(eu, 2 * i) += (4.0 / 3.0) / (r * r) + (lam / 2.0) / (r * r);
    M.at(eu, 2 * i + 1) += -sl / r;
    M.at(ev, 2 * i) += -(4.0 * sl / 3.0) / r;
    M.at(ev, 2 * i + 1) += -(1.0 - 2.0 * lam / 3.0);
    b[eu] = rhs.u[i];
    b[ev] = rhs.v[i];
  }
  M.at(0, 0) = 1.0;
  M.at(1, 1) = 1.0;
  M.at(2 * n - 2, 2 * n - 2) = 1.0;
  M.at(2 * n - 1, 2 * n - 1) = 1.0;
  b[0] = bc.u_min;
  b[1] = bc.v_min;
  b[2 * n - 2] = bc.u_max;
  b[2 * n - 1] = bc.v_max;
  const std::vector<double> z = detail::solve_or_throw(std::move(M), std::move(b));
  out.u.resize(n);
  out.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.u[i] = z[2 * i];
    out.v[i] = z[2 * i + 1];
  }

  BandedMatrix W(n, 1, 1);
  std::vector<double> bw(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double r = grid.r(i);
    interior_band(i, [&](std::size_t j, double d1, double d2) {
      W.at(i, j) += -((r * r / 2.0) * d2 + 2.0 * r * d1);
    });
    W.at(i, i) += -(1.0 - lam / 2.0);
    bw[i] = rhs.w[i];
  }
  W.at(0, 0) = 1.0;
  W.at(n - 1, n - 1) = 1.0;
  bw[0] = bc.w_min;
  bw[n - 1] = bc.w_max;
  out.w = detail::solve_or_throw(std::move(W), std::move(bw));
  return out;
}

struct RepairOptions {
  double nu = 1.75;
  double tol = 1e-8;  // sup|div mu~| / sup|div mu_eps| over interior nodes
};

struct RepairReport {
  double x_norm = 0.0;            // ||X||_{0,0,nu}
  double condition_estimate = 0;  // largest / smallest LU pivot
  double source_sup = 0.0;        // sup |div mu_eps| over interior nodes
  double residual_sup = 0.0;      // sup |div mu~| over interior nodes
  double residual_ratio = 0.0;
  int refinement_steps = 0;
};

struct RepairResult {
  TraceFreeRadialTensor mu_tilde;
  RadialVectorField X;
  RepairReport report;
};

namespace detail {

inline double interior_sup(const Profile& f) {
  double s = 0.0;
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s = std::max(s, std::abs(f[i]));
  return s;
}

}  // namespace detail

// mu~ = mu_eps + D X with L X = (div mu_eps)^# in the glued metric and
// X = 0 at both ends. The operator is the chained discretization, so the
// discrete divergence of mu~ vanishes up to the linear solve.
inline RepairResult repair_momentum(const GluedData& glued, const RepairOptions& opts = {}) {
  const RadialGrid& grid = glued.grid;
  const std::size_t n = grid.size();
  const RadialMetric& g = glued.g_eps;
  const CmcExtrinsicCurvature K{glued.tau, glued.mu_eps};
  const Profile source_cov = momentum_residual(g, K, grid);
  const Profile A = g.A();
  std::vector<double> S(n);
  for (std::size_t i = 0; i < n; ++i) S[i] = source_cov[i] / A[i];

  RepairResult res;
  res.report.source_sup = detail::interior_sup(source_cov);

  BandedMatrix L = vector_laplacian_matrix(g, grid);
  // Boundary rows scaled to the interior diagonal so pivoting keeps them exact.
  L.clear_row(0);
  L.clear_row(n - 1);
  L.at(0, 0) = std::abs(L(1, 1));
  L.at(n - 1, n - 1) = std::abs(L(n - 2, n - 2));
  const BandedMatrix Lcopy = L;
  const BandedLU lu(std::move(L), "vector Laplacian singular on this annulus");
  res.report.condition_estimate = lu.pivot_ratio();
  std::vector<double> b = S;
  b[0] = 0.0;
  b[n - 1] = 0.0;
  std::vector<double> x = lu.solve(b);

  auto build = [&](const std::vector<double>& u) {
    RadialVectorField X{u};
    TraceFreeRadialTensor DX = conformal_killing_apply(g, X, grid);
    const Profile dDX = fd_derivative(DX.m, 1, grid);
    const Profile dmu = glued.mu_eps.derivative(grid);
    TraceFreeRadialTensor mt;
    mt.m.resize(n);
    mt.dm.emplace(n);
    for (std::size_t i = 0; i < n; ++i) {
      mt.m[i] = glued.mu_eps.m[i] + DX.m[i];
      (*mt.dm)[i] = dmu[i] + dDX[i];
    }
    return mt;
  };

  TraceFreeRadialTensor mt = build(x);
  Profile div = momentum_residual(g, CmcExtrinsicCurvature{glued.tau, mt}, grid);
  const double scale = res.report.source_sup > 0.0 ? res.report.source_sup : 1.0;
  // Iterative refinement on the residual of the assembled system.
  for (int step = 0; step < 3 && detail::interior_sup(div) > opts.tol * scale * 1e-3; ++step) {
    const std::vector<double> Lx = Lcopy.multiply(x);
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Lx[i];
    const std::vector<double> dx = lu.solve(r);
    for (std::size_t i = 0; i < n; ++i) x[i] += dx[i];
    mt = build(x);
    div = momentum_residual(g, CmcExtrinsicCurvature{glued.tau, mt}, grid);
    ++res.report.refinement_steps;
  }
  res.report.residual_sup = detail::interior_sup(div);
  res.report.residual_ratio = res.report.source_sup > 0.0 ? res.report.residual_sup / res.report.source_sup : 0.0;
  if (res.report.source_sup > 0.0 && res.report.residual_ratio > opts.tol)
    throw NumericalError("momentum repair did not reach the requested tolerance");

  res.X.u = x;
  res.mu_tilde = std::move(mt);
  NormSpec spec;
  spec.nu = opts.nu;
  spec.p = 1;
  res.report.x_norm = weighted_norm(FrameTensor::radial_vector(res.X.u, g), g, glued.weight, spec, grid);
  return res;
}

struct KernelCheck {
  int l = 0;
  KernelFamilyTag tag;
  double coarse = 0.0, fine = 0.0;  // sup of the residual on n and 2n nodes
  double order = 0.0;               // log2(coarse / fine)
  bool polynomial = false;          // every component is a polynomial of degree <= 2
  double roundoff_bound = 0.0;      // polynomial cases: 16 eps_mach S / h^2 on the fine grid
  bool pass = false;
};

inline double mode_residual_sup(const KernelFamilyTag& tag, const ModeIndex& index, const RadialGrid& grid) {
  const ModeVectorField out = apply_flat_mode(kernel_mode(tag, index, grid), grid);
  double s = 0.0;
  for (const Profile* p : {&out.u, &out.v, &out.w})
    for (double x : *p) s = std::max(s, std::abs(x));
  return s;
}

// Nodes 1 + i/n, i < n: spacing and nodes are exact binary fractions.
inline RadialGrid kernel_grid(std::size_t n) {
  const double nn = static_cast<double>(n);
  return RadialGrid::uniform(1.0, 1.0 + (nn - 1.0) / nn, n);
}

// Every catalogued kernel element for l = 1..l_max plus the two l = 0 fields,
// on kernel_grid(n) and kernel_grid(2n). Non-polynomial cases must converge
// at order >= min_order. Polynomial ones are reproduced exactly by the
// stencils, so only the rounding of the sampled profile remains, amplified
// by 1/h^2; their residual is held to that floor.
inline std::vector<KernelCheck> verify_kernel_suite(int l_max = 4, std::size_t n = 512, double min_order = 1.8) {
  const RadialGrid g1 = kernel_grid(n), g2 = kernel_grid(2 * n);
  const double h = g2.dr_di(0);
  std::vector<KernelCheck> out;
  auto run = [&](int l, const KernelFamilyTag& tag) {
    KernelCheck c;
    c.l = l;
    c.tag = tag;
    const ModeIndex idx{l, 0};
    c.coarse = mode_residual_sup(tag, idx, g1);
    c.fine = mode_residual_sup(tag, idx, g2);
    c.order = c.fine > 0.0 && c.coarse > 0.0 ? std::log2(c.coarse / c.fine)
                                               : std::numeric_limits<double>::infinity();
    const bool up = tag.growth == Growth::at_infinity;
    switch (tag.family) {
      case Family::radial_special: c.polynomial = up; break;
      case Family::v_coupled_a: c.polynomial = up && l + 1 <= 2; break;
      case Family::v_coupled_b: c.polynomial = up && l >= 2 && l - 1 <= 2; break;
      case Family::w: c.polynomial = up && l - 1 <= 2; break;
    }
    if (c.polynomial) {
      const ModeVectorField f = kernel_mode(tag, idx, g2);
      double S = 0.0;
      for (const Profile* p : {&f.u, &f.v, &f.w})
        for (double x : *p) S = std::max(S, std::abs(x));
      c.roundoff_bound = 16.0 * std::numeric_limits<double>::epsilon() * std::max(S, 1.0) / (h * h);
      c.pass = c.coarse <= c.roundoff_bound && c.fine <= c.roundoff_bound;
    } else {
      c.pass = c.order >= min_order;
    }
    out.push_back(c);
  };
  for (const auto& tag : all_kernel_families())
    if (tag.family == Family::radial_special) run(0, tag);
  for (int l = 1; l <= l_max; ++l)
    for (const auto& tag : all_kernel_families())
      if (tag.family != Family::radial_special) run(l, tag);
  return out;
}

}  // namespace cmcglue
