#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

#include "cmcglue/error.hpp"
#include "cmcglue/gluing_engine.hpp"
#include "cmcglue/radial_fields.hpp"

namespace cmcglue {

// Spherically symmetric tensor field of rank N, stored by its components in
// the orthonormal frame (e_r, e_theta, e_phi) at an equatorial point. Index
// tuples are flattened base-3, first index most significant. (p, q) is the
// tensor type that enters the weight exponent.
struct FrameTensor {
  int rank = 0;
  int p = 0, q = 0;
  std::vector<Profile> comp;

  static FrameTensor scalar(Profile f) {
    FrameTensor t;
    t.comp.push_back(std::move(f));
    return t;
  }
  // X = u d_r: frame component sqrt(A) u.
  static FrameTensor radial_vector(const Profile& u, const RadialMetric& g) {
    const Profile A = g.A();
    FrameTensor t;
    t.rank = 1;
    t.p = 1;
    t.comp.assign(3, Profile(u.size(), 0.0));
    for (std::size_t i = 0; i < u.size(); ++i) t.comp[0][i] = std::sqrt(A[i]) * u[i];
    return t;
  }
  // omega = w dr: frame component w / sqrt(A).
  static FrameTensor radial_covector(const Profile& w, const RadialMetric& g) {
    const Profile A = g.A();
    FrameTensor t;
    t.rank = 1;
    t.q = 1;
    t.comp.assign(3, Profile(w.size(), 0.0));
    for (std::size_t i = 0; i < w.size(); ++i) t.comp[0][i] = w[i] / std::sqrt(A[i]);
    return t;
  }
  // Symmetric (0,2) tensor with frame components diag(a, b, b).
  static FrameTensor diagonal(const Profile& a, const Profile& b) {
    FrameTensor t;
    t.rank = 2;
    t.q = 2;
    t.comp.assign(9, Profile(a.size(), 0.0));
    t.comp[0] = a;
    t.comp[4] = b;
    t.comp[8] = b;
    return t;
  }
  static FrameTensor trace_free(const TraceFreeRadialTensor& mu) {
    Profile a(mu.m.size()), b(mu.m.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = 2.0 * mu.m[i];
      b[i] = -mu.m[i];
    }
    return diagonal(a, b);
  }

  std::size_t size() const { return comp.empty() ? 0 : comp.front().size(); }

  Profile modulus() const {
    Profile out(size(), 0.0);
    for (const auto& c : comp)
      for (std::size_t i = 0; i < c.size(); ++i) out[i] += c[i] * c[i];
    for (double& v : out) v = std::sqrt(v);
    return out;
  }
};

// Frame connection at the equator: nabla_{e_c} e_a = G[c][a][b] e_b with
// the only nonzero entries G[th][r][th] = G[ph][r][ph] = kappa and
// G[th][th][r] = G[ph][ph][r] = -kappa, kappa = 1/(r sqrt A).
inline FrameTensor covariant_derivative(const FrameTensor& T, const RadialMetric& g, const RadialGrid& grid) {
  const std::size_t n = grid.size();
  detail::require_size(T.size(), grid);
  const Profile A = g.A();
  Profile kappa(n), inv_sqrtA(n);
  for (std::size_t i = 0; i < n; ++i) {
    inv_sqrtA[i] = 1.0 / std::sqrt(A[i]);
    kappa[i] = inv_sqrtA[i] / grid.r(i);
  }
  const int N = T.rank;
  std::size_t stride = 1;
  for (int k = 0; k < N; ++k) stride *= 3;
  FrameTensor out;
  out.rank = N + 1;
  out.p = T.p;
  out.q = T.q + 1;
  out.comp.assign(3 * stride, Profile(n, 0.0));

  auto digit = [](std::size_t idx, int pos, int rank) {
    std::size_t d = idx;
    for (int k = 0; k < rank - 1 - pos; ++k) d /= 3;
    return static_cast<int>(d % 3);
  };
  auto with_digit = [](std::size_t idx, int pos, int rank, int val) {
    std::size_t pw = 1;
    for (int k = 0; k < rank - 1 - pos; ++k) pw *= 3;
    const int old = static_cast<int>((idx / pw) % 3);
    return idx - static_cast<std::size_t>(old) * pw + static_cast<std::size_t>(val) * pw;
  };
  // conn(c, a, b): coefficient of e_b in nabla_{e_c} e_a.
  auto conn = [](int c, int a, int b) -> int {
    if (c == 0) return 0;
    if (a == 0 && b == c) return 1;
    if (a == c && b == 0) return -1;
    return 0;
  };

  for (std::size_t idx = 0; idx < stride; ++idx) {
    const Profile d = fd_derivative(T.comp[idx], 1, grid);
    for (std::size_t i = 0; i < n; ++i) out.comp[idx][i] = inv_sqrtA[i] * d[i];
  }
  for (int c = 0; c < 3; ++c) {
    for (std::size_t idx = 0; idx < stride; ++idx) {
      Profile& dst = out.comp[static_cast<std::size_t>(c) * stride + idx];
      for (int pos = 0; pos < N; ++pos) {
        const int a = digit(idx, pos, N);
        for (int b = 0; b < 3; ++b) {
          const int s = conn(c, a, b);
          if (s == 0) continue;
          const Profile& src = T.comp[with_digit(idx, pos, N, b)];
          for (std::size_t i = 0; i < n; ++i) dst[i] -= static_cast<double>(s) * kappa[i] * src[i];
        }
      }
    }
  }
  return out;
}

struct NormSpec {
  int k = 0;
  double nu = 0.0;
  int p = 0, q = 0;
  WeightKind domain_kind = WeightKind::w_eps;
  std::optional<std::pair<double, double>> radius_subset;  // closed interval in r
  std::optional<std::pair<double, double>> weight_subset;  // open interval in w values

  // -p + q + nu + j
  double exponent(int j) const { return -p + q + nu + j; }
};

inline std::vector<std::size_t> norm_nodes(const RadialGrid& grid, const WeightFunction& w, const NormSpec& spec) {
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid.r(i);
    if (spec.radius_subset && (r < spec.radius_subset->first || r > spec.radius_subset->second)) continue;
    if (spec.weight_subset) {
      const double wv = w(r);
      if (!(wv > spec.weight_subset->first && wv < spec.weight_subset->second)) continue;
    }
    nodes.push_back(i);
  }
  if (nodes.empty()) throw ValidationError("norm subset contains no grid nodes");
  return nodes;
}

// sum_{j<=k} sup_U w^{-p+q+nu+j} |nabla^j T|_g
inline double weighted_norm(const FrameTensor& T, const RadialMetric& g, const WeightFunction& w, const NormSpec& spec,
                            const RadialGrid& grid) {
  if (spec.k < 0 || spec.k > 2) throw ValidationError("derivative order of a norm must be 0..2");
  if (T.p != spec.p || T.q != spec.q) throw ValidationError("tensor type does not match the norm");
  detail::require_size(T.size(), grid);
  const auto nodes = norm_nodes(grid, w, spec);
  double total = 0.0;
  FrameTensor cur = T;
  for (int j = 0; j <= spec.k; ++j) {
    if (j > 0) cur = covariant_derivative(cur, g, grid);
    const Profile mod = cur.modulus();
    const double e = spec.exponent(j);
    double sup = 0.0;
    for (std::size_t i : nodes) sup = std::max(sup, std::pow(w(grid.r(i)), e) * mod[i]);
    total += sup;
  }
  return total;
}

// Plain-profile convenience for scalars.
inline double weighted_norm(const Profile& f, const RadialMetric& g, const WeightFunction& w, const NormSpec& spec,
                            const RadialGrid& grid) {
  return weighted_norm(FrameTensor::scalar(f), g, w, spec, grid);
}

struct MonotonicityGap {
  double lhs = 0.0, mid = 0.0, rhs = 0.0;
};

// ((inf_U w)^{nu2-nu1} |T|_{nu1;U}, |T|_{nu2;U}, (sup_U w)^{nu2-nu1} |T|_{nu1;U}) for k = 0.
inline MonotonicityGap norm_monotonicity_gap(const FrameTensor& T, const RadialMetric& g, const WeightFunction& w,
                                             const NormSpec& spec1, double nu2, const RadialGrid& grid) {
  if (!(spec1.nu < nu2)) throw ValidationError("monotonicity needs nu1 < nu2");
  if (spec1.k != 0) throw ValidationError("monotonicity gap is defined for k = 0");
  NormSpec spec2 = spec1;
  spec2.nu = nu2;
  const auto nodes = norm_nodes(grid, w, spec1);
  double wmin = w(grid.r(nodes.front())), wmax = wmin;
  for (std::size_t i : nodes) {
    wmin = std::min(wmin, w(grid.r(i)));
    wmax = std::max(wmax, w(grid.r(i)));
  }
  const double n1 = weighted_norm(T, g, w, spec1, grid);
  MonotonicityGap gap;
  gap.lhs = std::pow(wmin, nu2 - spec1.nu) * n1;
  gap.mid = weighted_norm(T, g, w, spec2, grid);
  gap.rhs = std::pow(wmax, nu2 - spec1.nu) * n1;
  return gap;
}

}  // namespace cmcglue
