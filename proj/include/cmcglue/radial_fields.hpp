#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cmcglue/banded.hpp"
#include "cmcglue/error.hpp"
#include "cmcglue/jet.hpp"

namespace cmcglue {

using Profile = std::vector<double>;

enum class Spacing { uniform, logarithmic, mapped };

// Strictly increasing radial nodes. Finite differences are taken in the node
// index and mapped back to r with the chain rule, so uniform, log-uniform and
// arbitrary node sets share one set of stencils.
class RadialGrid {
 public:
  static RadialGrid uniform(double r_min, double r_max, std::size_t n) {
    check_range(r_min, r_max, n);
    if (r_min < 0.0) throw ValidationError("grid radius must be nonnegative");
    RadialGrid g;
    g.spacing_ = Spacing::uniform;
    g.r_.resize(n);
    const double h = (r_max - r_min) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g.r_[i] = r_min + h * static_cast<double>(i);
    g.r_.back() = r_max;
    g.dr_.assign(n, h);
    g.d2r_.assign(n, 0.0);
    return g;
  }

  static RadialGrid logarithmic(double r_min, double r_max, std::size_t n) {
    check_range(r_min, r_max, n);
    if (r_min <= 0.0) throw ValidationError("log-uniform grid needs r_min > 0");
    RadialGrid g;
    g.spacing_ = Spacing::logarithmic;
    g.r_.resize(n);
    const double d = std::log(r_max / r_min) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g.r_[i] = r_min * std::exp(d * static_cast<double>(i));
    g.r_.front() = r_min;
    g.r_.back() = r_max;
    g.dr_.resize(n);
    g.d2r_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      g.dr_[i] = g.r_[i] * d;
      g.d2r_[i] = g.r_[i] * d * d;
    }
    return g;
  }

  static RadialGrid from_nodes(std::vector<double> nodes) {
    if (nodes.size() < 5) throw ValidationError("insufficient nodes");
    for (std::size_t i = 1; i < nodes.size(); ++i)
      if (!(nodes[i] > nodes[i - 1])) throw ValidationError("grid nodes must be strictly increasing");
    RadialGrid g;
    g.spacing_ = Spacing::mapped;
    g.r_ = std::move(nodes);
    g.dr_ = index_derivative(g.r_, 1);
    g.d2r_ = index_derivative(g.r_, 2);
    return g;
  }

  std::size_t size() const { return r_.size(); }
  double r(std::size_t i) const { return r_[i]; }
  double operator[](std::size_t i) const { return r_[i]; }
  const std::vector<double>& nodes() const { return r_; }
  double r_min() const { return r_.front(); }
  double r_max() const { return r_.back(); }
  Spacing spacing() const { return spacing_; }

  // dr/di and d^2r/di^2 at node i.
  double dr_di(std::size_t i) const { return dr_[i]; }
  double d2r_di2(std::size_t i) const { return d2r_[i]; }

  template <class Fn>
  Profile sample(Fn&& f) const {
    Profile out(r_.size());
    for (std::size_t i = 0; i < r_.size(); ++i) out[i] = f(r_[i]);
    return out;
  }

  // Second-order index-space difference stencils: centered inside, one-sided
  // at the two ends. Returns the first node and up to four weights.
  struct Stencil {
    std::size_t first = 0;
    std::size_t count = 0;
    std::array<double, 4> w{};
  };

  static Stencil index_stencil(std::size_t n, std::size_t i, int order) {
    Stencil s;
    if (order == 1) {
      s.count = 3;
      if (i == 0) {
        s.first = 0;
        s.w = {-1.5, 2.0, -0.5, 0.0};
      } else if (i + 1 == n) {
        s.first = n - 3;
        s.w = {0.5, -2.0, 1.5, 0.0};
      } else {
        s.first = i - 1;
        s.w = {-0.5, 0.0, 0.5, 0.0};
      }
    } else {
      if (i == 0) {
        s.first = 0;
        s.count = 4;
        s.w = {2.0, -5.0, 4.0, -1.0};
      } else if (i + 1 == n) {
        s.first = n - 4;
        s.count = 4;
        s.w = {-1.0, 4.0, -5.0, 2.0};
      } else {
        s.first = i - 1;
        s.count = 3;
        s.w = {1.0, -2.0, 1.0, 0.0};
      }
    }
    return s;
  }

  static Profile index_derivative(const Profile& f, int order) {
    const std::size_t n = f.size();
    if (n < 5) throw ValidationError("insufficient nodes");
    Profile out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = apply_stencil(f, index_stencil(n, i, order));
    return out;
  }

  static double apply_stencil(const Profile& f, const Stencil& s) {
    // Integer weights first, so constants difference to exactly zero.
    double acc = 0.0;
    for (std::size_t k = 0; k < s.count; ++k)
      if (s.w[k] != 0.0) acc += s.w[k] * f[s.first + k];
    return acc;
  }

 private:
  static void check_range(double r_min, double r_max, std::size_t n) {
    if (n < 2) throw ValidationError("insufficient nodes");
    if (!(r_min < r_max)) throw ValidationError("grid needs r_min < r_max");
  }

  Spacing spacing_ = Spacing::uniform;
  std::vector<double> r_, dr_, d2r_;
};

// d/dr or d^2/dr^2 of a nodal profile by second-order finite differences.
inline Profile fd_derivative(const Profile& f, int order, const RadialGrid& grid) {
  if (order != 1 && order != 2) throw ValidationError("derivative order must be 1 or 2");
  if (grid.size() < 5) throw ValidationError("insufficient nodes");
  if (f.size() != grid.size()) throw ValidationError("profile length does not match grid");
  const std::size_t n = grid.size();
  Profile fi = RadialGrid::index_derivative(f, 1);
  Profile out(n);
  if (order == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fi[i] / grid.dr_di(i);
    return out;
  }
  Profile fii = RadialGrid::index_derivative(f, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double rs = grid.dr_di(i);
    out[i] = (fii[i] - grid.d2r_di2(i) * fi[i] / rs) / (rs * rs);
  }
  return out;
}

// Uses the exact derivative when one is supplied.
inline Profile fd_derivative(const Profile& f, int order, const RadialGrid& grid,
                             const std::optional<Profile>& analytic) {
  if (analytic) return *analytic;
  return fd_derivative(f, order, grid);
}

// Band matrix of the d/dr (order 1) or d^2/dr^2 (order 2) stencils above.
inline BandedMatrix fd_matrix(const RadialGrid& grid, int order) {
  const std::size_t n = grid.size();
  if (n < 5) throw ValidationError("insufficient nodes");
  BandedMatrix m(n, 3, 3);
  for (std::size_t i = 0; i < n; ++i) {
    const double rs = grid.dr_di(i);
    const auto s1 = RadialGrid::index_stencil(n, i, 1);
    if (order == 1) {
      for (std::size_t k = 0; k < s1.count; ++k) m.at(i, s1.first + k) += s1.w[k] / rs;
    } else {
      const auto s2 = RadialGrid::index_stencil(n, i, 2);
      for (std::size_t k = 0; k < s2.count; ++k) m.at(i, s2.first + k) += s2.w[k] / (rs * rs);
      const double c = -grid.d2r_di2(i) / (rs * rs * rs);
      for (std::size_t k = 0; k < s1.count; ++k) m.at(i, s1.first + k) += c * s1.w[k];
    }
  }
  return m;
}

// Nodal values with optional exact first and second r-derivatives.
struct SampledProfile {
  Profile f;
  std::optional<Profile> df, d2f;
};

// Samples a closed-form profile written as a template over the scalar type;
// evaluation on second-order jets yields exact derivatives.
template <class Fn>
SampledProfile sample_with_derivatives(const RadialGrid& grid, Fn&& fn) {
  const std::size_t n = grid.size();
  SampledProfile s;
  s.f.resize(n);
  s.df.emplace(n);
  s.d2f.emplace(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Jet<2> v = fn(Jet<2>::variable(grid.r(i)));
    s.f[i] = v.value();
    (*s.df)[i] = v.derivative(1);
    (*s.d2f)[i] = v.derivative(2);
  }
  return s;
}

enum class MetricForm { F, A };

// A dr^2 + r^2 dOmega^2, stored either as F (A = 1/(1-F)) or as A.
class RadialMetric {
 public:
  static RadialMetric from_F(Profile F, std::optional<Profile> dF = {}, std::optional<Profile> d2F = {}) {
    return RadialMetric(MetricForm::F, std::move(F), std::move(dF), std::move(d2F));
  }
  static RadialMetric from_A(Profile A, std::optional<Profile> dA = {}, std::optional<Profile> d2A = {}) {
    return RadialMetric(MetricForm::A, std::move(A), std::move(dA), std::move(d2A));
  }
  static RadialMetric from_F(SampledProfile s) {
    return from_F(std::move(s.f), std::move(s.df), std::move(s.d2f));
  }
  static RadialMetric from_A(SampledProfile s) {
    return from_A(std::move(s.f), std::move(s.df), std::move(s.d2f));
  }
  static RadialMetric flat(std::size_t n) {
    return from_F(Profile(n, 0.0), Profile(n, 0.0), Profile(n, 0.0));
  }

  MetricForm form() const { return form_; }
  std::size_t size() const { return v_.size(); }
  const Profile& values() const { return v_; }
  bool has_analytic_derivatives() const { return d1_.has_value(); }
  const std::optional<Profile>& analytic_d1() const { return d1_; }
  const std::optional<Profile>& analytic_d2() const { return d2_; }

  // Throws "degenerate metric" unless A > 0 (F < 1) everywhere.
  void require_nondegenerate() const {
    for (double v : v_) {
      const bool bad = form_ == MetricForm::A ? !(v > 0.0) : !(v < 1.0);
      if (bad) throw NumericalError("degenerate metric");
    }
  }

  Profile A() const {
    if (form_ == MetricForm::A) return v_;
    Profile out(v_.size());
    for (std::size_t i = 0; i < v_.size(); ++i) out[i] = 1.0 / (1.0 - v_[i]);
    return out;
  }
  Profile F() const {
    if (form_ == MetricForm::F) return v_;
    Profile out(v_.size());
    for (std::size_t i = 0; i < v_.size(); ++i) out[i] = 1.0 - 1.0 / v_[i];
    return out;
  }

  // r-derivatives of the stored form: exact if supplied, else FD.
  Profile stored_d1(const RadialGrid& grid) const { return fd_derivative(v_, 1, grid, d1_); }
  Profile stored_d2(const RadialGrid& grid) const { return fd_derivative(v_, 2, grid, d2_); }

  Profile dA(const RadialGrid& grid) const {
    const Profile d = stored_d1(grid);
    if (form_ == MetricForm::A) return d;
    Profile out(v_.size());
    for (std::size_t i = 0; i < v_.size(); ++i) {
      const double q = 1.0 - v_[i];
      out[i] = d[i] / (q * q);
    }
    return out;
  }
  Profile d2A(const RadialGrid& grid) const {
    const Profile d2 = stored_d2(grid);
    if (form_ == MetricForm::A) return d2;
    const Profile d = stored_d1(grid);
    Profile out(v_.size());
    for (std::size_t i = 0; i < v_.size(); ++i) {
      const double q = 1.0 - v_[i];
      out[i] = d2[i] / (q * q) + 2.0 * d[i] * d[i] / (q * q * q);
    }
    return out;
  }
  Profile dF(const RadialGrid& grid) const {
    const Profile d = stored_d1(grid);
    if (form_ == MetricForm::F) return d;
    Profile out(v_.size());
    for (std::size_t i = 0; i < v_.size(); ++i) out[i] = d[i] / (v_[i] * v_[i]);
    return out;
  }

 private:
  RadialMetric(MetricForm form, Profile v, std::optional<Profile> d1, std::optional<Profile> d2)
      : form_(form), v_(std::move(v)), d1_(std::move(d1)), d2_(std::move(d2)) {
    if (d1_ && d1_->size() != v_.size()) throw ValidationError("derivative profile length mismatch");
    if (d2_ && d2_->size() != v_.size()) throw ValidationError("derivative profile length mismatch");
  }

  MetricForm form_;
  Profile v_;
  std::optional<Profile> d1_, d2_;
};

// Trace-free symmetric tensor with mixed components diag(2m, -m, -m).
struct TraceFreeRadialTensor {
  Profile m;
  std::optional<Profile> dm;  // exact dm/dr when known

  static TraceFreeRadialTensor zero(std::size_t n) { return {Profile(n, 0.0), Profile(n, 0.0)}; }

  std::size_t size() const { return m.size(); }

  // Mixed trace; zero by construction of the representation.
  double trace(std::size_t i) const { return 2.0 * m[i] + (-m[i]) + (-m[i]); }

  // |mu|^2_g = mu^a_b mu^b_a = 6 m^2 for every radial metric.
  Profile norm_squared() const {
    Profile out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = 6.0 * m[i] * m[i];
    return out;
  }

  Profile derivative(const RadialGrid& grid) const { return fd_derivative(m, 1, grid, dm); }
};

struct CmcExtrinsicCurvature {
  double tau = 0.0;
  TraceFreeRadialTensor mu;

  // Tr_g K = tau + trace(mu).
  double trace(std::size_t i) const { return tau + mu.trace(i); }
};

// X = u(r) d/dr.
struct RadialVectorField {
  Profile u;
};

namespace detail {

inline void require_positive_radii(const RadialGrid& grid) {
  if (!(grid.r_min() > 0.0)) throw ValidationError("operator needs r_min > 0");
}

inline void require_size(std::size_t n, const RadialGrid& grid) {
  if (n != grid.size()) throw ValidationError("profile length does not match grid");
}

}  // namespace detail

// R(g) = 2(F + rF')/r^2.
inline Profile scalar_curvature(const RadialMetric& g, const RadialGrid& grid) {
  detail::require_size(g.size(), grid);
  detail::require_positive_radii(grid);
  g.require_nondegenerate();
  const Profile F = g.F();
  const Profile dF = g.dF(grid);
  Profile R(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid.r(i);
    R[i] = 2.0 * (F[i] + r * dF[i]) / (r * r);
  }
  return R;
}

// R(g) - |mu|^2 + (2/3) tau^2 - 2 Lambda.
inline Profile hamiltonian_residual(const RadialMetric& g, const CmcExtrinsicCurvature& K, double Lambda,
                                    const RadialGrid& grid) {
  detail::require_size(K.mu.size(), grid);
  Profile H = scalar_curvature(g, grid);
  const Profile mu2 = K.mu.norm_squared();
  for (std::size_t i = 0; i < H.size(); ++i)
    H[i] = H[i] - mu2[i] + (2.0 / 3.0) * K.tau * K.tau - 2.0 * Lambda;
  return H;
}

// (div_g mu)_r = 2m' + 6m/r; the A-dependence of the Christoffel terms cancels.
inline Profile momentum_residual(const RadialMetric& g, const CmcExtrinsicCurvature& K, const RadialGrid& grid) {
  detail::require_size(g.size(), grid);
  detail::require_size(K.mu.size(), grid);
  detail::require_positive_radii(grid);
  g.require_nondegenerate();
  const Profile dm = K.mu.derivative(grid);
  Profile out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = 2.0 * dm[i] + 6.0 * K.mu.m[i] / grid.r(i);
  return out;
}

// DX for X = u d_r: m = (1/3)(u' + (A'/2A) u - u/r).
inline TraceFreeRadialTensor conformal_killing_apply(const RadialMetric& g, const RadialVectorField& X,
                                                     const RadialGrid& grid) {
  detail::require_size(g.size(), grid);
  detail::require_size(X.u.size(), grid);
  detail::require_positive_radii(grid);
  g.require_nondegenerate();
  const Profile A = g.A();
  const Profile dA = g.dA(grid);
  const Profile du = fd_derivative(X.u, 1, grid);
  TraceFreeRadialTensor out;
  out.m.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double b = dA[i] / (2.0 * A[i]) - 1.0 / grid.r(i);
    out.m[i] = (du[i] + b * X.u[i]) / 3.0;
  }
  return out;
}

// LX = -(div DX)^#, discretized directly from the expanded second-order form
// -(2/3A)[u'' + (b + 3/r)u' + (b' + 3b/r)u], b = A'/2A - 1/r.
inline RadialVectorField vector_laplacian_apply(const RadialMetric& g, const RadialVectorField& X,
                                                const RadialGrid& grid) {
  detail::require_size(g.size(), grid);
  detail::require_size(X.u.size(), grid);
  detail::require_positive_radii(grid);
  g.require_nondegenerate();
  const Profile A = g.A();
  const Profile dA = g.dA(grid);
  const Profile d2A = g.d2A(grid);
  const Profile du = fd_derivative(X.u, 1, grid);
  const Profile d2u = fd_derivative(X.u, 2, grid);
  RadialVectorField out;
  out.u.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid.r(i);
    const double b = dA[i] / (2.0 * A[i]) - 1.0 / r;
    const double db = d2A[i] / (2.0 * A[i]) - dA[i] * dA[i] / (2.0 * A[i] * A[i]) + 1.0 / (r * r);
    out.u[i] = -(2.0 / (3.0 * A[i])) * (d2u[i] + (b + 3.0 / r) * du[i] + (db + 3.0 * b / r) * X.u[i]);
  }
  return out;
}

// (div mu)^# for a trace-free tensor: A^{-1}(2m' + 6m/r).
inline RadialVectorField divergence_sharp(const RadialMetric& g, const TraceFreeRadialTensor& mu,
                                          const RadialGrid& grid) {
  const Profile div = momentum_residual(g, CmcExtrinsicCurvature{0.0, mu}, grid);
  const Profile A = g.A();
  RadialVectorField out;
  out.u.resize(div.size());
  for (std::size_t i = 0; i < div.size(); ++i) out.u[i] = div[i] / A[i];
  return out;
}

// -(div DX)^# evaluated by chaining conformal_killing_apply and the
// divergence, each with its own first-derivative stencil.
inline RadialVectorField vector_laplacian_chain(const RadialMetric& g, const RadialVectorField& X,
                                                const RadialGrid& grid) {
  RadialVectorField out = divergence_sharp(g, conformal_killing_apply(g, X, grid), grid);
  for (double& v : out.u) v = -v;
  return out;
}

namespace detail {

inline BandedMatrix banded_product(const BandedMatrix& P, const BandedMatrix& Q) {
  const std::size_t n = P.size();
  BandedMatrix out(n, P.lower() + Q.lower(), P.upper() + Q.upper());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k0 = i >= P.lower() ? i - P.lower() : 0;
    const std::size_t k1 = std::min(n - 1, i + P.upper());
    for (std::size_t k = k0; k <= k1; ++k) {
      const double p = P(i, k);
      if (p == 0.0) continue;
      const std::size_t j0 = k >= Q.lower() ? k - Q.lower() : 0;
      const std::size_t j1 = std::min(n - 1, k + Q.upper());
      for (std::size_t j = j0; j <= j1; ++j) out.at(i, j) += p * Q(k, j);
    }
  }
  return out;
}

}  // namespace detail

// Matrix of vector_laplacian_chain: -A^{-1}(2G + 6/r)(1/3)(G + b), G the
// first-derivative stencil matrix.
inline BandedMatrix vector_laplacian_matrix(const RadialMetric& g, const RadialGrid& grid) {
  detail::require_size(g.size(), grid);
  detail::require_positive_radii(grid);
  g.require_nondegenerate();
  const std::size_t n = grid.size();
  const Profile A = g.A();
  const Profile dA = g.dA(grid);
  const BandedMatrix G = fd_matrix(grid, 1);
  BandedMatrix D = G;
  BandedMatrix Div = G;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = grid.r(i);
    for (std::size_t j = (i >= 3 ? i - 3 : 0); j <= std::min(n - 1, i + 3); ++j) {
      D.at(i, j) /= 3.0;
      Div.at(i, j) *= 2.0;
    }
    D.at(i, i) += (dA[i] / (2.0 * A[i]) - 1.0 / r) / 3.0;
    Div.at(i, i) += 6.0 / r;
  }
  BandedMatrix L = detail::banded_product(Div, D);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j0 = i >= L.lower() ? i - L.lower() : 0;
    const std::size_t j1 = std::min(n - 1, i + L.upper());
    for (std::size_t j = j0; j <= j1; ++j) L.at(i, j) *= -1.0 / A[i];
  }
  return L;
}

// a(x) dx^2 + b(x)^2 dOmega^2 with a general radial coordinate x. Used where
// the areal form is unavailable (round spheres through the equator) and for
// the conformally transformed metric phi^4 g.
struct WarpedRadialMetric {
  Profile a, b;
  std::optional<Profile> da, db, d2b;

  static WarpedRadialMetric from_radial(const RadialMetric& g, const RadialGrid& grid) {
    WarpedRadialMetric w;
    w.a = g.A();
    w.b = grid.nodes();
    if (g.has_analytic_derivatives()) w.da = g.dA(grid);
    w.db = Profile(grid.size(), 1.0);
    w.d2b = Profile(grid.size(), 0.0);
    return w;
  }

  void require_nondegenerate() const {
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!(a[i] > 0.0) || !(b[i] > 0.0)) throw NumericalError("degenerate metric");
  }
};

// R = -4 b_ll/b + 2(1 - b_l^2)/b^2 with l the proper radial distance.
inline Profile warped_scalar_curvature(const WarpedRadialMetric& g, const RadialGrid& grid) {
  detail::require_size(g.a.size(), grid);
  g.require_nondegenerate();
  const Profile da = fd_derivative(g.a, 1, grid, g.da);
  const Profile db = fd_derivative(g.b, 1, grid, g.db);
  const Profile d2b = fd_derivative(g.b, 2, grid, g.d2b);
  Profile R(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double a = g.a[i], b = g.b[i];
    const double bl2 = db[i] * db[i] / a;
    const double bll = d2b[i] / a - da[i] * db[i] / (2.0 * a * a);
    R[i] = -4.0 * bll / b + 2.0 * (1.0 - bl2) / (b * b);
  }
  return R;
}

}  // namespace cmcglue
