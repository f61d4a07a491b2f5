#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "cmcglue/error.hpp"
#include "cmcglue/jet.hpp"
#include "cmcglue/model_library.hpp"
#include "cmcglue/radial_fields.hpp"

namespace cmcglue {

// chi(s) = psi((4-s)/3) / (psi((4-s)/3) + psi((s-1)/3)), psi(t) = exp(-1/t):
// 1 on (-inf, 1], 0 on [4, inf), smooth, decreasing, chi(2.5) = 1/2.
struct Cutoff {
  int smoothness = 4;  // highest derivative order served by cutoff_eval

  template <class T>
  T operator()(const T& s) const {
    using std::exp;
    if (value_of(s) <= 1.0) return T(1.0);
    if (value_of(s) >= 4.0) return T(0.0);
    const T a = exp(-3.0 / (4.0 - s));
    const T b = exp(-3.0 / (s - 1.0));
    return a / (a + b);
  }
};

inline double cutoff_eval(const Cutoff& chi, double s, int deriv) {
  if (deriv < 0 || deriv > chi.smoothness || deriv > 4) throw ValidationError("cutoff derivative order too high");
  return chi(Jet<4>::variable(s)).derivative(static_cast<std::size_t>(deriv));
}

struct GluingConfig {
  double C = 1.5;
  double epsilon = 1.0 / 16.0;
  double nu = 1.75;

  void validate() const {
    if (!(C > 1.0)) throw ValidationError("C must exceed 1");
    if (!(nu > 1.5 && nu < 2.0)) throw ValidationError("nu must lie strictly inside (3/2, 2)");
    const double emax = 1.0 / (4.0 * C * C);
    if (!(epsilon > 0.0) || epsilon > emax * (1.0 + 1e-12))
      throw ValidationError("epsilon must lie in (0, (2C)^-2]");
  }
  double sqrt_eps() const { return std::sqrt(epsilon); }
};

enum class WeightKind { w_eps, w_M, w_0, r };

// Quintic smoothstep, monotone from 0 to 1 on [0, 1].
template <class T>
T smoothstep5(const T& t) {
  return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

struct WeightFunction {
  WeightKind kind = WeightKind::r;
  double C = 2.0;
  double epsilon = 1.0;

  static WeightFunction glued(const GluingConfig& cfg) { return {WeightKind::w_eps, cfg.C, cfg.epsilon}; }
  static WeightFunction radius() { return {WeightKind::r, 1.0, 1.0}; }

  // Compact side: s below (2C)^-1, plateau C^-1 beyond (3C/2)^-1.
  template <class T>
  T w_M(const T& s) const {
    const double lo = 1.0 / (2.0 * C), hi = 2.0 / (3.0 * C);
    if (value_of(s) <= lo) return s;
    if (value_of(s) >= hi) return T(1.0 / C);
    const T S = smoothstep5((s - lo) / (hi - lo));
    return (1.0 - S) * s + S * (1.0 / C);
  }
  // AE side: plateau C below 3C/2, s beyond 2C.
  template <class T>
  T w_0(const T& s) const {
    const double lo = 1.5 * C, hi = 2.0 * C;
    if (value_of(s) <= lo) return T(C);
    if (value_of(s) >= hi) return s;
    const T S = smoothstep5((s - lo) / (hi - lo));
    return (1.0 - S) * C + S * s;
  }

  template <class T>
  T operator()(const T& r) const {
    switch (kind) {
      case WeightKind::r:
        return r;
      case WeightKind::w_M:
        return w_M(r);
      case WeightKind::w_0:
        return w_0(r);
      case WeightKind::w_eps:
        break;
    }
    const double x = value_of(r);
    if (x <= 1.5 * C * epsilon) return T(C * epsilon);
    if (x < 2.0 * C * epsilon) return epsilon * w_0(r / epsilon);
    if (x <= 1.0 / (2.0 * C)) return r;
    return w_M(r);
  }
};

inline double weight_eval(const WeightFunction& w, double r) {
  if (!(r > 0.0)) throw ValidationError("weight needs a positive radius");
  return w(r);
}

enum class MetricRegime { ae_exact, transition, m_exact };
enum class MuRegime { ae_exact, inner_transition, silent, outer_transition, m_exact };

inline const char* to_string(MetricRegime r) {
  switch (r) {
    case MetricRegime::ae_exact: return "AE-exact";
    case MetricRegime::transition: return "transition";
    case MetricRegime::m_exact: return "M-exact";
  }
  return "?";
}
inline const char* to_string(MuRegime r) {
  switch (r) {
    case MuRegime::ae_exact: return "AE-exact";
    case MuRegime::inner_transition: return "inner-transition";
    case MuRegime::silent: return "silent";
    case MuRegime::outer_transition: return "outer-transition";
    case MuRegime::m_exact: return "M-exact";
  }
  return "?";
}

inline std::pair<MetricRegime, MuRegime> region_classify(const GluingConfig& cfg, double r) {
  const double s = cfg.sqrt_eps();
  MetricRegime g = r <= s ? MetricRegime::ae_exact : (r >= 4.0 * s ? MetricRegime::m_exact : MetricRegime::transition);
  MuRegime mu;
  if (r <= 0.5 * s) mu = MuRegime::ae_exact;
  else if (r < s) mu = MuRegime::inner_transition;
  else if (r <= 4.0 * s) mu = MuRegime::silent;
  else if (r < 8.0 * s) mu = MuRegime::outer_transition;
  else mu = MuRegime::m_exact;
  return {g, mu};
}

// Pointwise glued profiles. Outside the blending bands the source is
// returned untouched, so exact-matching regions are bitwise exact.
struct Gluer {
  GluingConfig cfg;
  RadialModel background;  // compact side, radius r
  RadialModel ae_scaled;   // AE side already rescaled to r
  Cutoff chi;

  template <class T>
  T A(const T& r) const {
    const double x = value_of(r), s = cfg.sqrt_eps();
    if (x <= s) return eval(ae_scaled.A, ae_scaled, r);
    if (x >= 4.0 * s) return eval(background.A, background, r);
    const T c = chi(r / s);
    return c * eval(ae_scaled.A, ae_scaled, r) + (1.0 - c) * eval(background.A, background, r);
  }

  template <class T>
  T m(const T& r) const {
    const double x = value_of(r), s = cfg.sqrt_eps();
    if (x <= 0.5 * s) return eval(ae_scaled.m, ae_scaled, r);
    if (x < s) return chi(6.0 * r / s - 2.0) * eval(ae_scaled.m, ae_scaled, r);
    if (x <= 4.0 * s) return T(0.0);
    if (x < 8.0 * s) return (1.0 - chi(3.0 * r / (4.0 * s) - 2.0)) * eval(background.m, background, r);
    return eval(background.m, background, r);
  }

 private:
  template <class T>
  static T eval(const RadialFn& f, const RadialModel& model, const T& r) {
    model.check_range(value_of(r));
    if (!f) return T(0.0);
    if constexpr (std::is_same_v<T, double>) {
      return f(Jet<2>(r)).value();
    } else {
      return f(r);
    }
  }
};

struct GluedData {
  GluingConfig config;
  RadialGrid grid;
  RadialMetric g_eps;
  TraceFreeRadialTensor mu_eps;
  WeightFunction weight;
  Gluer gluer;
  AEProfile ae;  // unscaled, in rho
  std::vector<MetricRegime> metric_regime;
  std::vector<MuRegime> mu_regime;
  double tau = 0.0;
};

inline std::size_t nodes_in_open_band(const RadialGrid& grid, double lo, double hi) {
  std::size_t k = 0;
  for (double r : grid.nodes())
    if (r > lo && r < hi) ++k;
  return k;
}

// A_eps(r) = chi(r/sqrt eps) A0(r/eps) + (1 - chi) A_M(r), with exact
// derivatives.
inline SampledProfile glue_metric(const GluingConfig& cfg, const RadialModel& background, const AEProfile& ae,
                                  const Cutoff& chi, const RadialGrid& grid) {
  cfg.validate();
  const Gluer gl{cfg, background, scale_ae_data(ae, cfg.epsilon), chi};
  return sample_with_derivatives(grid, [&](const Jet<2>& r) { return gl.A(r); });
}

// m_eps(r) = chi(6r/sqrt eps - 2) eps^-1 m0(r/eps) + (1 - chi(3r/(4 sqrt eps) - 2)) m_M(r).
inline SampledProfile glue_mu(const GluingConfig& cfg, const RadialModel& background, const AEProfile& ae,
                              const Cutoff& chi, const RadialGrid& grid) {
  cfg.validate();
  const Gluer gl{cfg, background, scale_ae_data(ae, cfg.epsilon), chi};
  return sample_with_derivatives(grid, [&](const Jet<2>& r) { return gl.m(r); });
}

inline GluedData glue(const GluingConfig& cfg, const RadialModel& background, const AEProfile& ae,
                      const RadialGrid& grid, const Cutoff& chi = {}) {
  cfg.validate();
  const double s = cfg.sqrt_eps();
  const double lo_needed = cfg.C * cfg.epsilon / 2.0, hi_needed = 2.0 / cfg.C;
  if (grid.r_min() > lo_needed * (1.0 + 1e-9) || grid.r_max() < hi_needed * (1.0 - 1e-9))
    throw ValidationError("grid must span [C eps / 2, 2 / C]");
  const std::pair<double, double> bands[] = {{s, 4.0 * s}, {0.5 * s, s}, {4.0 * s, 8.0 * s}};
  for (const auto& [lo, hi] : bands)
    if (nodes_in_open_band(grid, lo, hi) < 32)
      throw ValidationError("fewer than 32 grid nodes inside a transition band");

  GluedData d{cfg,
              grid,
              RadialMetric::flat(grid.size()),
              TraceFreeRadialTensor::zero(grid.size()),
              WeightFunction::glued(cfg),
              Gluer{cfg, background, scale_ae_data(ae, cfg.epsilon), chi},
              ae,
              {},
              {},
              background.tau};
  d.g_eps = RadialMetric::from_A(sample_with_derivatives(grid, [&](const Jet<2>& r) { return d.gluer.A(r); }));
  auto m = sample_with_derivatives(grid, [&](const Jet<2>& r) { return d.gluer.m(r); });
  d.mu_eps = {std::move(m.f), std::move(m.df)};
  d.g_eps.require_nondegenerate();
  for (double r : grid.nodes()) {
    const auto [gr, mr] = region_classify(cfg, r);
    d.metric_regime.push_back(gr);
    d.mu_regime.push_back(mr);
  }
  return d;
}

// Bitwise checks of the gluing structure on the grid nodes.
struct GlueStructure {
  bool mu_zero_on_silent_band = true;    // m = m' = 0 on [sqrt eps, 4 sqrt eps]
  bool metric_matches_sources = true;    // A_eps equals the source outside (sqrt eps, 4 sqrt eps)
  bool mu_matches_sources = true;        // m_eps equals the source outside (sqrt eps / 2, 8 sqrt eps)
  std::size_t violation_nodes = 0;       // nodes where div mu_eps exceeds roundoff
  std::size_t violation_outside = 0;     // ... lying outside [sqrt eps / 2, 8 sqrt eps]

  bool ok() const { return mu_zero_on_silent_band && metric_matches_sources && mu_matches_sources && violation_outside == 0; }
};

inline GlueStructure glue_structure(const GluedData& d) {
  const double s = d.config.sqrt_eps();
  const Profile A = d.g_eps.values();
  const Profile dm = d.mu_eps.derivative(d.grid);
  GlueStructure out;
  for (std::size_t i = 0; i < d.grid.size(); ++i) {
    const double r = d.grid.r(i);
    const double m = d.mu_eps.m[i];
    if (r >= s && r <= 4.0 * s && (m != 0.0 || dm[i] != 0.0)) out.mu_zero_on_silent_band = false;
    if (r <= s && A[i] != d.gluer.ae_scaled.A_at(r)) out.metric_matches_sources = false;
    if (r >= 4.0 * s && A[i] != d.gluer.background.A_at(r)) out.metric_matches_sources = false;
    if (r <= 0.5 * s && m != d.gluer.ae_scaled.m_at(r)) out.mu_matches_sources = false;
    if (r >= 8.0 * s && m != d.gluer.background.m_at(r)) out.mu_matches_sources = false;
    const double a = 2.0 * dm[i], b = 6.0 * m / r;
    if (std::abs(a + b) > 1e-12 * (std::abs(a) + std::abs(b))) {
      ++out.violation_nodes;
      if (r < 0.5 * s || r > 8.0 * s) ++out.violation_outside;
    }
  }
  return out;
}

struct ChartSample {
  std::vector<double> t;        // chart coordinate along the axis, [-1/2, 1/2]
  std::vector<double> radius;   // |H_P(t)| = x_P (1 + t/2)
  std::vector<double> g_rr;     // radial component of g_P = (4/x_P^2) sigma_P^* g_eps
  std::vector<double> weight;   // w_eps at the sample
  double deviation = 0.0;       // sup |g_P - delta| over the samples
  std::vector<double> cutoff_derivative;  // sup_t |d^k/dt^k chi(|H_P|/sqrt eps)|, k = 0..2
};

// Metric in the dilation chart H_P(x) = x_P + (x_P/2) x, sampled on the axis.
// The chart is centred on a point of the gluing band (4C eps, (4C)^-1).
inline ChartSample chart_rescaled_metric(const GluedData& glued, double x_P, std::size_t samples = 65) {
  const auto& cfg = glued.config;
  if (!(x_P > 4.0 * cfg.C * cfg.epsilon && x_P < 1.0 / (4.0 * cfg.C)))
    throw ValidationError("chart centre outside the gluing band");
  if (samples < 2) throw ValidationError("chart needs at least two samples");
  ChartSample out;
  out.cutoff_derivative.assign(3, 0.0);
  const double s = cfg.sqrt_eps();
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = -0.5 + static_cast<double>(k) / static_cast<double>(samples - 1);
    const double r = x_P * (1.0 + 0.5 * t);
    // Pulling back by the dilation by x_P/2 and multiplying by 4/x_P^2
    // leaves the orthonormal-frame components unchanged.
    const double A = glued.gluer.A(r);
    out.t.push_back(t);
    out.radius.push_back(r);
    out.g_rr.push_back(A);
    out.weight.push_back(glued.weight(r));
    out.deviation = std::max(out.deviation, std::abs(A - 1.0));
    const Jet<2> c = glued.gluer.chi(Jet<2>::variable(r / s));
    double scale = 1.0;
    for (std::size_t j = 0; j <= 2; ++j) {
      out.cutoff_derivative[j] = std::max(out.cutoff_derivative[j], std::abs(scale * c.derivative(j)));
      scale *= x_P / (2.0 * s);
    }
  }
  return out;
}

}  // namespace cmcglue
