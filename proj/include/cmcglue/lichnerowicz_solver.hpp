#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "cmcglue/banded.hpp"
#include "cmcglue/error.hpp"
#include "cmcglue/gluing_engine.hpp"
#include "cmcglue/model_library.hpp"
#include "cmcglue/radial_fields.hpp"
#include "cmcglue/weighted_norms.hpp"

namespace cmcglue {

// Lap phi - R phi/8 + |mu|^2 phi^-7 / 8 + (Lambda/4 - tau^2/12) phi^5 = 0 on
// an annulus with Dirichlet values at both ends.
struct LichnerowiczProblem {
  RadialGrid grid;
  RadialMetric g;
  TraceFreeRadialTensor mu;
  double tau = 0.0;
  double Lambda = 0.0;
  double bc_min = 1.0, bc_max = 1.0;
  WeightFunction weight = WeightFunction::radius();

  double a() const { return Lambda / 4.0 - tau * tau / 12.0; }

  void validate() const {
    detail::require_size(g.size(), grid);
    detail::require_size(mu.size(), grid);
    detail::require_positive_radii(grid);
    g.require_nondegenerate();
    if (!(bc_min > 0.0) || !(bc_max > 0.0)) throw ValidationError("conformal factor not positive");
  }
};

// From glued (and repaired) data: the weight is the glued w_eps.
inline LichnerowiczProblem make_problem(const GluedData& glued, const TraceFreeRadialTensor& mu_tilde, double Lambda) {
  LichnerowiczProblem p{glued.grid, glued.g_eps, mu_tilde, glued.tau, Lambda};
  p.weight = glued.weight;
  return p;
}

namespace detail {

struct LaplaceCoefficients {
  Profile inv_A, first;  // Lap f = inv_A (f'' + first f')
};

inline LaplaceCoefficients laplace_coefficients(const LichnerowiczProblem& p) {
  const Profile A = p.g.A();
  const Profile dA = p.g.dA(p.grid);
  LaplaceCoefficients c{Profile(A.size()), Profile(A.size())};
  for (std::size_t i = 0; i < A.size(); ++i) {
    c.inv_A[i] = 1.0 / A[i];
    c.first[i] = 2.0 / p.grid.r(i) - dA[i] / (2.0 * A[i]);
  }
  return c;
}

inline void require_positive(const Profile& phi) {
  for (double v : phi)
    if (!(v > 0.0)) throw NumericalError("conformal factor not positive");
}

inline double weighted_sup(const Profile& f, const WeightFunction& w, double e, const RadialGrid& grid,
                           bool interior_only) {
  double s = 0.0;
  const std::size_t lo = interior_only ? 1 : 0;
  const std::size_t hi = interior_only ? f.size() - 1 : f.size();
  for (std::size_t i = lo; i < hi; ++i) s = std::max(s, std::pow(w(grid.r(i)), e) * std::abs(f[i]));
  return s;
}

}  // namespace detail

// Radial Laplace-Beltrami operator (1/A)(f'' + (2/r - A'/2A) f').
inline Profile laplacian(const LichnerowiczProblem& p, const Profile& f) {
  p.validate();
  detail::require_size(f.size(), p.grid);
  const auto c = detail::laplace_coefficients(p);
  const Profile d1 = fd_derivative(f, 1, p.grid);
  const Profile d2 = fd_derivative(f, 2, p.grid);
  Profile out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = c.inv_A[i] * (d2[i] + c.first[i] * d1[i]);
  return out;
}

// -R/8 - (7/8)|mu|^2 + 5a, the zeroth-order coefficient of the linearization.
inline Profile linearized_potential(const LichnerowiczProblem& p) {
  const Profile R = scalar_curvature(p.g, p.grid);
  const Profile mu2 = p.mu.norm_squared();
  Profile h(R.size());
  for (std::size_t i = 0; i < R.size(); ++i) h[i] = -R[i] / 8.0 - 7.0 * mu2[i] / 8.0 + 5.0 * p.a();
  return h;
}

// N(1 + eta) from the perturbation itself. Near the inner end 1/h^2 ~ 1e9,
// so differencing the rounded phi = 1 + eta would put a floor of ~1e-6 on
// the residual; the solver keeps eta as its unknown for this reason.
inline Profile n_residual_eta(const LichnerowiczProblem& p, const Profile& eta) {
  detail::require_size(eta.size(), p.grid);
  for (double e : eta)
    if (!(1.0 + e > 0.0)) throw NumericalError("conformal factor not positive");
  const Profile lap = laplacian(p, eta);
  const Profile R = scalar_curvature(p.g, p.grid);
  const Profile mu2 = p.mu.norm_squared();
  Profile out(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) {
    const double f = 1.0 + eta[i];
    out[i] = lap[i] - R[i] * f / 8.0 + mu2[i] * std::pow(f, -7.0) / 8.0 + p.a() * std::pow(f, 5.0);
  }
  return out;
}

inline Profile n_residual(const LichnerowiczProblem& p, const Profile& phi) {
  detail::require_size(phi.size(), p.grid);
  detail::require_positive(phi);
  Profile eta(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) eta[i] = phi[i] - 1.0;
  return n_residual_eta(p, eta);
}

inline Profile linearized_apply(const LichnerowiczProblem& p, const Profile& eta) {
  const Profile lap = laplacian(p, eta);
  const Profile h = linearized_potential(p);
  Profile out(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) out[i] = lap[i] + h[i] * eta[i];
  return out;
}

// N(1 + eta) - N(1) - L eta.
inline Profile q_remainder(const LichnerowiczProblem& p, const Profile& eta) {
  detail::require_size(eta.size(), p.grid);
  for (double e : eta)
    if (!(1.0 + e > 0.0)) throw NumericalError("conformal factor not positive");
  const Profile mu2 = p.mu.norm_squared();
  Profile out(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) {
    const double e = eta[i], q = 1.0 + e;
    out[i] = mu2[i] / 8.0 * (std::pow(q, -7.0) - 1.0 + 7.0 * e) + p.a() * (std::pow(q, 5.0) - 1.0 - 5.0 * e);
  }
  return out;
}

// Band matrix of linearized_apply with identity rows at both ends.
inline BandedMatrix linearized_matrix(const LichnerowiczProblem& p) {
  p.validate();
  const std::size_t n = p.grid.size();
  const auto c = detail::laplace_coefficients(p);
  const Profile h = linearized_potential(p);
  const BandedMatrix D1 = fd_matrix(p.grid, 1);
  BandedMatrix L = fd_matrix(p.grid, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j0 = i >= 3 ? i - 3 : 0;
    const std::size_t j1 = std::min(n - 1, i + 3);
    for (std::size_t j = j0; j <= j1; ++j) L.at(i, j) = c.inv_A[i] * (L(i, j) + c.first[i] * D1(i, j));
    L.at(i, i) += h[i];
  }
  for (std::size_t i : {std::size_t{0}, n - 1}) {
    L.clear_row(i);
    L.at(i, i) = 1.0;
  }
  return L;
}

struct PicardOptions {
  double tol = 1e-9;  // on sup w^2 |N(phi)| over interior nodes
  int max_iter = 200;
  double nu = 1.75;
  std::optional<Profile> eta0;
};

struct SolveReport {
  int iterations = 0;
  std::vector<double> contraction_ratios;
  double final_residual = 0.0;      // sup w^2 |N(phi)|, interior nodes
  double final_residual_sup = 0.0;  // plain sup |N(phi)|, interior nodes
  double eta_norm = 0.0;            // ||phi - 1||_{0,0,nu-1}
  double condition_estimate = 0.0;
};

struct PicardResult {
  Profile phi;
  Profile eta;  // phi - 1, carried at full precision
  SolveReport report;
};

inline double lichnerowicz_measure(const LichnerowiczProblem& p, const Profile& N) {
  return detail::weighted_sup(N, p.weight, 2.0, p.grid, true);
}

// eta <- -L^{-1}(N(1) + Q(eta)) with the boundary values held fixed.
inline PicardResult picard_solve(const LichnerowiczProblem& p, const PicardOptions& opts = {}) {
  if (!(opts.tol > 0.0)) throw ValidationError("tolerance must be positive");
  if (opts.max_iter < 1) throw ValidationError("max_iter must be positive");
  p.validate();
  const std::size_t n = p.grid.size();
  // Boundary rows scaled to the interior diagonal so pivoting keeps them exact.
  BandedMatrix M = linearized_matrix(p);
  const double s0 = std::abs(M(1, 1)), s1 = std::abs(M(n - 2, n - 2));
  M.at(0, 0) = s0;
  M.at(n - 1, n - 1) = s1;
  const BandedLU lu(std::move(M), "linearized Lichnerowicz operator singular");
  const Profile N1 = n_residual(p, Profile(n, 1.0));

  Profile eta = opts.eta0 ? *opts.eta0 : Profile(n, 0.0);
  detail::require_size(eta.size(), p.grid);
  eta.front() = p.bc_min - 1.0;
  eta.back() = p.bc_max - 1.0;

  PicardResult res;
  res.report.condition_estimate = lu.pivot_ratio();
  double prev_step = -1.0;
  int bad = 0;
  for (int k = 1; k <= opts.max_iter; ++k) {
    const Profile Q = q_remainder(p, eta);
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = -(N1[i] + Q[i]);
    rhs.front() = s0 * (p.bc_min - 1.0);
    rhs.back() = s1 * (p.bc_max - 1.0);
    Profile next = lu.solve(std::move(rhs));

    Profile diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = next[i] - eta[i];
    const double step = detail::weighted_sup(diff, p.weight, opts.nu - 1.0, p.grid, false);
    if (prev_step > 0.0) {
      const double ratio = step / prev_step;
      res.report.contraction_ratios.push_back(ratio);
      bad = ratio >= 1.0 ? bad + 1 : 0;
      if (bad >= 3) throw NumericalError("contraction failure");
    }
    prev_step = step;
    eta = std::move(next);
    res.report.iterations = k;

    const Profile N = n_residual_eta(p, eta);
    res.report.final_residual = lichnerowicz_measure(p, N);
    if (res.report.final_residual <= opts.tol || step == 0.0) {
      res.report.final_residual_sup = detail::weighted_sup(N, p.weight, 0.0, p.grid, true);
      res.report.eta_norm = detail::weighted_sup(eta, p.weight, opts.nu - 1.0, p.grid, false);
      res.phi.resize(n);
      for (std::size_t i = 0; i < n; ++i) res.phi[i] = 1.0 + eta[i];
      res.eta = std::move(eta);
      return res;
    }
  }
  throw NumericalError("Picard iteration exceeded max_iter");
}

// phi^4 g and phi^-2 mu~ + (tau/3) phi^4 g. The new metric is no longer in
// areal form; it is carried as a warped metric a = phi^4 A, b = phi^2 r.
struct TransformedData {
  Profile phi;
  Profile A_rr;  // phi^4 A, the dr^2 coefficient
  WarpedRadialMetric metric;
  CmcExtrinsicCurvature K;
};

inline TransformedData conformal_transform(const LichnerowiczProblem& p, const Profile& phi) {
  p.validate();
  detail::require_size(phi.size(), p.grid);
  detail::require_positive(phi);
  const std::size_t n = phi.size();
  const Profile A = p.g.A();
  const Profile dA = p.g.dA(p.grid);
  const Profile dphi = fd_derivative(phi, 1, p.grid);
  const Profile d2phi = fd_derivative(phi, 2, p.grid);
  const Profile dm = p.mu.derivative(p.grid);

  TransformedData t;
  t.phi = phi;
  t.A_rr.resize(n);
  t.metric.a.resize(n);
  t.metric.b.resize(n);
  t.metric.da.emplace(n);
  t.metric.db.emplace(n);
  t.metric.d2b.emplace(n);
  t.K.tau = p.tau;
  t.K.mu.m.resize(n);
  t.K.mu.dm.emplace(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = phi[i], df = dphi[i], r = p.grid.r(i);
    const double f4 = f * f * f * f;
    t.A_rr[i] = f4 * A[i];
    t.metric.a[i] = t.A_rr[i];
    (*t.metric.da)[i] = 4.0 * f * f * f * df * A[i] + f4 * dA[i];
    t.metric.b[i] = f * f * r;
    (*t.metric.db)[i] = 2.0 * f * df * r + f * f;
    (*t.metric.d2b)[i] = 2.0 * df * df * r + 2.0 * f * d2phi[i] * r + 4.0 * f * df;
    const double f6 = f4 * f * f;
    t.K.mu.m[i] = p.mu.m[i] / f6;
    (*t.K.mu.dm)[i] = dm[i] / f6 - 6.0 * p.mu.m[i] * df / (f6 * f);
  }
  return t;
}

// Constraints of the transformed data through the conformal laws on the base
// discretization: H' = -8 phi^-5 N(phi), div' = phi^-6 div mu~.
inline Profile transformed_hamiltonian_eta(const LichnerowiczProblem& p, const Profile& eta) {
  const Profile N = n_residual_eta(p, eta);
  Profile out(N.size());
  for (std::size_t i = 0; i < N.size(); ++i) out[i] = -8.0 * N[i] / std::pow(1.0 + eta[i], 5.0);
  return out;
}

inline Profile transformed_hamiltonian(const LichnerowiczProblem& p, const Profile& phi) {
  detail::require_positive(phi);
  Profile eta(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) eta[i] = phi[i] - 1.0;
  return transformed_hamiltonian_eta(p, eta);
}

inline Profile transformed_momentum(const LichnerowiczProblem& p, const Profile& phi) {
  detail::require_positive(phi);
  const Profile div = momentum_residual(p.g, CmcExtrinsicCurvature{p.tau, p.mu}, p.grid);
  Profile out(div.size());
  for (std::size_t i = 0; i < div.size(); ++i) out[i] = div[i] / std::pow(phi[i], 6.0);
  return out;
}

// The same two residuals computed directly from the warped metric.
inline Profile warped_hamiltonian_residual(const WarpedRadialMetric& g, const CmcExtrinsicCurvature& K, double Lambda,
                                           const RadialGrid& grid) {
  Profile H = warped_scalar_curvature(g, grid);
  const Profile mu2 = K.mu.norm_squared();
  for (std::size_t i = 0; i < H.size(); ++i) H[i] = H[i] - mu2[i] + (2.0 / 3.0) * K.tau * K.tau - 2.0 * Lambda;
  return H;
}

// 2m' + 6 (b'/b) m.
inline Profile warped_momentum_residual(const WarpedRadialMetric& g, const CmcExtrinsicCurvature& K,
                                        const RadialGrid& grid) {
  detail::require_size(K.mu.size(), grid);
  g.require_nondegenerate();
  const Profile db = fd_derivative(g.b, 1, grid, g.db);
  const Profile dm = K.mu.derivative(grid);
  Profile out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = 2.0 * dm[i] + 6.0 * db[i] / g.b[i] * K.mu.m[i];
  return out;
}

struct KidCandidate {
  Profile C;
  RadialVectorField X;
};

// Mixed rr and angular components of
//   -2 C K + L_X g = 0,
//   -Hess C + (Ric - 2 K^2 + tau K - Lambda g) C + L_X K = 0.
struct KidResidual {
  Profile first_rr, first_angular, second_rr, second_angular;

  double sup(bool interior_only = true) const {
    double s = 0.0;
    for (const Profile* f : {&first_rr, &first_angular, &second_rr, &second_angular}) {
      const std::size_t lo = interior_only ? 1 : 0;
      const std::size_t hi = interior_only ? f->size() - 1 : f->size();
      for (std::size_t i = lo; i < hi; ++i) s = std::max(s, std::abs((*f)[i]));
    }
    return s;
  }
};

inline KidResidual kid_residual(const WarpedRadialMetric& g, const CmcExtrinsicCurvature& K, double Lambda,
                                const KidCandidate& cand, const RadialGrid& grid) {
  const std::size_t n = grid.size();
  detail::require_size(g.a.size(), grid);
  detail::require_size(K.mu.size(), grid);
  detail::require_size(cand.C.size(), grid);
  detail::require_size(cand.X.u.size(), grid);
  g.require_nondegenerate();
  const Profile da = fd_derivative(g.a, 1, grid, g.da);
  const Profile db = fd_derivative(g.b, 1, grid, g.db);
  const Profile d2b = fd_derivative(g.b, 2, grid, g.d2b);
  const Profile dC = fd_derivative(cand.C, 1, grid);
  const Profile d2C = fd_derivative(cand.C, 2, grid);
  const Profile& u = cand.X.u;
  const Profile du = fd_derivative(u, 1, grid);
  const Profile dm = K.mu.derivative(grid);

  KidResidual res{Profile(n), Profile(n), Profile(n), Profile(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double a = g.a[i], b = g.b[i], C = cand.C[i];
    const double bl2 = db[i] * db[i] / a;
    const double bll = d2b[i] / a - da[i] * db[i] / (2.0 * a * a);
    const double ric_r = -2.0 * bll / b;
    const double ric_t = -bll / b + (1.0 - bl2) / (b * b);
    const double hess_r = (d2C[i] - da[i] / (2.0 * a) * dC[i]) / a;
    const double hess_t = db[i] * dC[i] / (a * b);
    const double kr = K.tau / 3.0 + 2.0 * K.mu.m[i];
    const double kt = K.tau / 3.0 - K.mu.m[i];
    const double dkr = 2.0 * dm[i], dkt = -dm[i];

    res.first_rr[i] = -2.0 * C * kr + (u[i] * da[i] + 2.0 * a * du[i]) / a;
    res.first_angular[i] = -2.0 * C * kt + 2.0 * db[i] * u[i] / b;
    // L_X K with covariant K_xx = a kr, K_thth = b^2 kt.
    const double lie_r = (u[i] * (da[i] * kr + a * dkr) + 2.0 * a * kr * du[i]) / a;
    const double lie_t = u[i] * (2.0 * b * db[i] * kt + b * b * dkt) / (b * b);
    res.second_rr[i] = -hess_r + (ric_r - 2.0 * kr * kr + K.tau * kr - Lambda) * C + lie_r;
    res.second_angular[i] = -hess_t + (ric_t - 2.0 * kt * kt + K.tau * kt - Lambda) * C + lie_t;
  }
  return res;
}

inline KidResidual kid_residual(const RadialMetric& g, const CmcExtrinsicCurvature& K, double Lambda,
                                const KidCandidate& cand, const RadialGrid& grid) {
  return kid_residual(WarpedRadialMetric::from_radial(g, grid), K, Lambda, cand, grid);
}

enum class EndCondition { pole, dirichlet };

// Radial sector of Lap_g - (|K|^2 - Lambda) for g = a dx^2 + b^2 dOmega^2 on
// [x_min, x_max], given in closed form so that face values are available.
struct SpectrumProblem {
  std::function<double(double)> a, b;
  std::function<double(double)> K2;  // |K|^2_g; empty means 0
  double Lambda = 0.0;
  double x_min = 0.0, x_max = 1.0;
  std::size_t cells = 200;
  EndCondition left = EndCondition::pole, right = EndCondition::pole;
};

struct SpectrumResult {
  std::vector<double> eigenvalues;  // ascending |lambda|
  double smallest_magnitude = 0.0;
  bool has_kernel = false;
};

// Cell-centred conservative discretization (1/(sqrt a b^2)) ((b^2/sqrt a) f')',
// symmetrized with the volume weights and diagonalized as a tridiagonal
// matrix. Pole faces carry zero flux; Dirichlet faces use the ghost value -f.
inline SpectrumResult injectivity_spectrum(const SpectrumProblem& sp, std::size_t count = 4,
                                           double zero_threshold = 1e-3) {
  if (!sp.a || !sp.b) throw ValidationError("spectrum problem needs a and b");
  if (!(sp.x_max > sp.x_min)) throw ValidationError("empty spectrum interval");
  if (sp.cells < 3) throw ValidationError("insufficient nodes");
  const std::size_t n = sp.cells;
  const double h = (sp.x_max - sp.x_min) / static_cast<double>(n);
  std::vector<double> vol(n), face(n + 1);
  for (std::size_t j = 0; j <= n; ++j) {
    const double x = sp.x_min + h * static_cast<double>(j);
    const double b = sp.b(x), a = sp.a(x);
    if (!(a > 0.0)) throw NumericalError("degenerate metric");
    face[j] = b * b / std::sqrt(a);
  }
  Eigen::VectorXd diag(n), sub(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = sp.x_min + h * (static_cast<double>(i) + 0.5);
    const double a = sp.a(x), b = sp.b(x);
    if (!(a > 0.0) || !(b > 0.0)) throw NumericalError("degenerate metric");
    vol[i] = std::sqrt(a) * b * b;
    const double k2 = sp.K2 ? sp.K2(x) : 0.0;
    double d = -(k2 - sp.Lambda) * vol[i] * h * h;
    if (i > 0) d -= face[i];
    else if (sp.left == EndCondition::dirichlet) d -= 2.0 * face[0];
    if (i + 1 < n) d -= face[i + 1];
    else if (sp.right == EndCondition::dirichlet) d -= 2.0 * face[n];
    diag[static_cast<Eigen::Index>(i)] = d / (vol[i] * h * h);
  }
  for (std::size_t i = 0; i + 1 < n; ++i)
    sub[static_cast<Eigen::Index>(i)] = face[i + 1] / (h * h * std::sqrt(vol[i] * vol[i + 1]));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolve failure");
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.begin(), ev.end(), [](double x, double y) { return std::abs(x) < std::abs(y); });
  if (ev.size() > count) ev.resize(count);
  SpectrumResult res;
  res.eigenvalues = ev;
  res.smallest_magnitude = std::abs(ev.front());
  res.has_kernel = res.smallest_magnitude <= zero_threshold;
  return res;
}

// De Sitter time-symmetric slice: unit round 3-sphere, Lambda = 3, with the
// zonal candidate C = cos x, X = 0, on x in [x0, pi - x0].
inline KidResidual de_sitter_zonal_kid(std::size_t n, double x0 = 0.2) {
  const RadialGrid grid = RadialGrid::uniform(x0, M_PI - x0, n);
  WarpedRadialMetric w;
  w.a.assign(n, 1.0);
  w.da = Profile(n, 0.0);
  w.b = grid.sample([](double x) { return std::sin(x); });
  w.db = grid.sample([](double x) { return std::cos(x); });
  w.d2b = grid.sample([](double x) { return -std::sin(x); });
  const KidCandidate c{grid.sample([](double x) { return std::cos(x); }), {Profile(n, 0.0)}};
  return kid_residual(w, CmcExtrinsicCurvature{0.0, TraceFreeRadialTensor::zero(n)}, 3.0, c, grid);
}

// Time-symmetric Schwarzschild slice on r in [3M, 10M] with the static lapse
// C = sqrt(1 - 2M/r), X = 0.
inline KidResidual schwarzschild_lapse_kid(double M, std::size_t n) {
  if (!(M > 0.0)) throw ValidationError("mass must be positive");
  const RadialGrid grid = RadialGrid::uniform(3.0 * M, 10.0 * M, n);
  const RadialMetric g = models::schwarzschild(M).metric_on(grid);
  const KidCandidate c{grid.sample([M](double r) { return std::sqrt(1.0 - 2.0 * M / r); }), {Profile(n, 0.0)}};
  return kid_residual(g, CmcExtrinsicCurvature{0.0, TraceFreeRadialTensor::zero(n)}, 0.0, c, grid);
}

// Unit round 3-sphere with umbilic K = (tau/3) g, pole to pole.
inline SpectrumProblem round_sphere_spectrum(double Lambda, double tau, std::size_t cells) {
  SpectrumProblem sp;
  sp.a = [](double) { return 1.0; };
  sp.b = [](double x) { return std::sin(x); };
  const double k2 = tau * tau / 3.0;
  if (tau != 0.0) sp.K2 = [k2](double) { return k2; };
  sp.Lambda = Lambda;
  sp.x_min = 0.0;
  sp.x_max = M_PI;
  sp.cells = cells;
  return sp;
}

// Flat unit ball, Dirichlet on the boundary sphere.
inline SpectrumProblem flat_ball_spectrum(std::size_t cells) {
  SpectrumProblem sp;
  sp.a = [](double) { return 1.0; };
  sp.b = [](double x) { return x; };
  sp.right = EndCondition::dirichlet;
  sp.cells = cells;
  return sp;
}

}  // namespace cmcglue
