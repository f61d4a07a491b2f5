#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cmcglue/error.hpp"
#include "cmcglue/jet.hpp"
#include "cmcglue/radial_fields.hpp"

namespace cmcglue {

using RadialFn = std::function<Jet<2>(const Jet<2>&)>;

// Closed-form spherically symmetric data on x in [x_min, x_max]: metric
// coefficient A(x) of A dx^2 + x^2 dOmega^2 and trace-free profile m(x).
// Serves both as an AE end (x = rho) and as the compact-side background.
struct RadialModel {
  std::string name;
  RadialFn A;
  RadialFn m;  // empty means m = 0
  double tau = 0.0;
  double x_min = 0.0;
  double x_max = std::numeric_limits<double>::infinity();
  std::string range_message = "AE profile range exceeded";

  void check_range(double x) const {
    const double slack = 1e-12 * std::max(1.0, std::abs(x));
    if (!(x >= x_min - slack && x <= x_max + slack)) throw ValidationError(range_message);
  }
  Jet<2> eval_A(const Jet<2>& x) const {
    check_range(x.value());
    return A(x);
  }
  Jet<2> eval_m(const Jet<2>& x) const {
    check_range(x.value());
    if (!m) return Jet<2>(0.0);
    return m(x);
  }
  double A_at(double x) const { return eval_A(Jet<2>::variable(x)).value(); }
  double m_at(double x) const { return eval_m(Jet<2>::variable(x)).value(); }

  // Per-node metric and tensor with exact derivatives.
  RadialMetric metric_on(const RadialGrid& grid) const {
    return RadialMetric::from_A(sample_with_derivatives(grid, [&](const Jet<2>& x) { return eval_A(x); }));
  }
  TraceFreeRadialTensor mu_on(const RadialGrid& grid) const {
    auto s = sample_with_derivatives(grid, [&](const Jet<2>& x) { return eval_m(x); });
    return {std::move(s.f), std::move(s.df)};
  }
};

using AEProfile = RadialModel;

struct SdSParams {
  double M = 0.0;
  double Lambda = 0.0;
  double epsilon = 1.0;
};

// F_eps(r) = (Lambda/3) r^2 + 2 M eps / r.
template <class T>
T sds_F(const SdSParams& p, const T& r) {
  return (p.Lambda / 3.0) * r * r + 2.0 * p.M * p.epsilon / r;
}

inline RadialMetric sds_profile(const SdSParams& p, const RadialGrid& grid) {
  if (p.M < 0.0) throw ValidationError("mass must be nonnegative");
  if (!(p.epsilon > 0.0 && p.epsilon <= 1.0)) throw ValidationError("epsilon must lie in (0, 1]");
  detail::require_positive_radii(grid);
  auto s = sample_with_derivatives(grid, [&](const Jet<2>& r) { return sds_F(p, r); });
  for (double F : s.f)
    if (!(F < 1.0)) throw NumericalError("metric degenerates");
  return RadialMetric::from_F(std::move(s));
}

// F + r F' - Lambda r^2.
inline Profile ode_residual(const RadialMetric& g, double Lambda, const RadialGrid& grid) {
  detail::require_size(g.size(), grid);
  const Profile F = g.F();
  const Profile dF = g.dF(grid);
  Profile out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid.r(i);
    out[i] = F[i] + r * dF[i] - Lambda * r * r;
  }
  return out;
}

// m = c / rho^3, divergence-free for every radial metric.
template <class T>
T bowen_york_m(double c, const T& rho) {
  return c / (rho * rho * rho);
}

inline TraceFreeRadialTensor bowen_york_mu(double c, const RadialGrid& grid) {
  detail::require_positive_radii(grid);
  auto s = sample_with_derivatives(grid, [&](const Jet<2>& r) { return bowen_york_m(c, r); });
  return {std::move(s.f), std::move(s.df)};
}

namespace models {

inline AEProfile flat_end() {
  AEProfile ae;
  ae.name = "flat";
  ae.A = [](const Jet<2>&) { return Jet<2>(1.0); };
  ae.x_min = std::numeric_limits<double>::min();
  return ae;
}

// Time-symmetric Schwarzschild, A0 = (1 - 2M/rho)^-1, rho > 2M.
inline AEProfile schwarzschild(double M) {
  if (M < 0.0) throw ValidationError("mass must be nonnegative");
  AEProfile ae;
  ae.name = "schwarzschild";
  ae.A = [M](const Jet<2>& rho) { return Jet<2>(1.0) / (1.0 - 2.0 * M / rho); };
  ae.x_min = std::max(2.0 * M * (1.0 + 1e-9), std::numeric_limits<double>::min());
  return ae;
}

// Maximal slice of Schwarzschild with Bowen-York momentum:
// A0 = (1 - 2M/rho + c^2/rho^4)^-1, m0 = c/rho^3. Satisfies both
// constraints exactly with tau = 0.
inline AEProfile maximal_slice(double M, double c) {
  if (M < 0.0) throw ValidationError("mass must be nonnegative");
  AEProfile ae;
  ae.name = "maximal-slice";
  ae.A = [M, c](const Jet<2>& rho) {
    const Jet<2> r2 = rho * rho;
    return Jet<2>(1.0) / (1.0 - 2.0 * M / rho + c * c / (r2 * r2));
  };
  ae.m = [c](const Jet<2>& rho) { return bowen_york_m(c, rho); };
  // Lower end of the slice: first zero of 1 - 2M/rho + c^2/rho^4 (if any).
  double lo = std::numeric_limits<double>::min();
  if (M > 0.0) {
    auto q = [&](double x) { return 1.0 - 2.0 * M / x + c * c / (x * x * x * x); };
    double a = 2.0 * M, b = 2.0 * M;
    const double step = 1.0 + 1e-3;
    for (double x = 4.0 * M; x > 1e-6 * M; x /= step) {
      if (q(x) <= 0.0) {
        a = x;
        b = x * step;
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (a + b);
          (q(mid) <= 0.0 ? a : b) = mid;
        }
        lo = b * (1.0 + 1e-9);
        break;
      }
    }
  }
  ae.x_min = lo;
  return ae;
}

// Umbilic de Sitter slice with K = (tau/3) g: F = (Lambda - tau^2/3) r^2 / 3.
inline RadialModel de_sitter(double Lambda, double tau) {
  RadialModel bg;
  bg.name = "de-sitter";
  const double k = (Lambda - tau * tau / 3.0) / 3.0;
  bg.A = [k](const Jet<2>& r) { return Jet<2>(1.0) / (1.0 - k * r * r); };
  bg.tau = tau;
  bg.x_min = std::numeric_limits<double>::min();
  bg.x_max = k > 0.0 ? std::sqrt(1.0 / k) * (1.0 - 1e-9) : std::numeric_limits<double>::infinity();
  bg.range_message = "metric degenerates";
  return bg;
}

// Schwarzschild-de Sitter F-form model as a background.
inline RadialModel schwarzschild_de_sitter(const SdSParams& p) {
  RadialModel bg;
  bg.name = "schwarzschild-de-sitter";
  bg.A = [p](const Jet<2>& r) { return Jet<2>(1.0) / (1.0 - sds_F(p, r)); };
  bg.x_min = std::numeric_limits<double>::min();
  bg.range_message = "metric degenerates";
  return bg;
}

}  // namespace models

// Natural cubic spline evaluated in jet arithmetic, so tabulated profiles
// carry first and second derivatives.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 3 || y_.size() != n) throw ValidationError("spline needs at least three samples");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1])) throw ValidationError("AE profile rho must be strictly increasing");
    // Tridiagonal system for the second derivatives, natural ends.
    m_.assign(n, 0.0);
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
      const double diag = 2.0 * (h0 + h1);
      const double rhs = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
      const double denom = diag - h0 * c[i - 1];
      c[i] = h1 / denom;
      d[i] = (rhs - h0 * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 1;) m_[i] = d[i] - c[i] * m_[i + 1];
  }

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

  template <class T>
  T operator()(const T& xv) const {
    const double x = value_of(xv);
    std::size_t k = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin());
    k = std::clamp<std::size_t>(k, 1, x_.size() - 1) - 1;
    const double h = x_[k + 1] - x_[k];
    const T a = (T(x_[k + 1]) - xv) / h;
    const T b = (xv - T(x_[k])) / h;
    return a * y_[k] + b * y_[k + 1] + ((a * a * a - a) * m_[k] + (b * b * b - b) * m_[k + 1]) * (h * h / 6.0);
  }

 private:
  std::vector<double> x_, y_, m_;
};

// "# ae-profile v1" followed by rows "rho A0 [m0]".
inline AEProfile load_ae_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open AE profile file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ae-profile v1", 0) != 0)
    throw ValidationError("AE profile file lacks the '# ae-profile v1' header: " + path);
  std::vector<double> rho, A0, m0;
  bool has_m = false, first = true;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> cols;
    double v;
    while (ls >> v) cols.push_back(v);
    if (!ls.eof() || cols.size() < 2 || cols.size() > 3)
      throw ValidationError("malformed AE profile row at line " + std::to_string(lineno) + " of " + path);
    if (first) {
      has_m = cols.size() == 3;
      first = false;
    } else if ((cols.size() == 3) != has_m) {
      throw ValidationError("inconsistent column count at line " + std::to_string(lineno) + " of " + path);
    }
    rho.push_back(cols[0]);
    A0.push_back(cols[1]);
    if (has_m) m0.push_back(cols[2]);
  }
  for (std::size_t i = 1; i < rho.size(); ++i)
    if (!(rho[i] > rho[i - 1])) throw ValidationError("AE profile rho must be strictly increasing");
  if (rho.size() < 3) throw ValidationError("AE profile needs at least three rows");
  if (!(rho.front() > 0.0)) throw ValidationError("AE profile rho must be positive");

  AEProfile ae;
  ae.name = "table:" + path;
  auto sa = std::make_shared<CubicSpline>(rho, A0);
  ae.A = [sa](const Jet<2>& x) { return (*sa)(x); };
  if (has_m) {
    auto sm = std::make_shared<CubicSpline>(rho, m0);
    ae.m = [sm](const Jet<2>& x) { return (*sm)(x); };
  }
  ae.x_min = rho.front();
  ae.x_max = rho.back();
  return ae;
}

inline void write_ae_profile(const std::string& path, const AEProfile& ae, const RadialGrid& rho) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write AE profile file: " + path);
  out << "# ae-profile v1\n";
  out.precision(17);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    out << rho.r(i) << ' ' << ae.A_at(rho.r(i));
    if (ae.m) out << ' ' << ae.m_at(rho.r(i));
    out << '\n';
  }
  if (!out) throw ValidationError("failed writing AE profile file: " + path);
}

// (eps^2 g0, eps K0) in the unscaled radius r = eps rho. The mixed
// trace-free profile of the rescaled tensor is eps^-1 m0(r/eps).
inline RadialModel scale_ae_data(const AEProfile& ae, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ValidationError("epsilon must lie in (0, 1]");
  if (epsilon == 1.0) return ae;
  RadialModel out = ae;
  out.name = ae.name + " (scaled)";
  auto base = std::make_shared<AEProfile>(ae);
  out.A = [base, epsilon](const Jet<2>& r) { return base->eval_A(r / epsilon); };
  if (ae.m) out.m = [base, epsilon](const Jet<2>& r) { return base->eval_m(r / epsilon) / epsilon; };
  out.x_min = ae.x_min * epsilon;
  out.x_max = ae.x_max * epsilon;
  return out;
}

struct DecayReport {
  double c = 0.0;                // sup x |A - 1|
  std::vector<double> c_beta;    // sup x^{j+1} |d^j A|, j = 1..max_order
  double tail_c = 0.0;           // same suprema over the outermost octave
  std::vector<double> tail_c_beta;
  bool non_ae = false;           // sup keeps growing with the range end
};

// Decay constants of A over [x0, x1] on a log-uniform sample.
inline DecayReport ae_decay_constants(const AEProfile& ae, double x0, double x1, int max_order = 2,
                                      std::size_t per_octave = 64) {
  if (max_order < 0 || max_order > 2) throw ValidationError("max_order must be 0, 1 or 2");
  if (!(x0 > 0.0) || !(x1 / x0 >= 8.0 * (1.0 - 1e-12))) throw ValidationError("insufficient asymptotic range");
  const double octaves = std::log2(x1 / x0);
  const std::size_t n = static_cast<std::size_t>(std::ceil(octaves * static_cast<double>(per_octave))) + 1;
  const RadialGrid grid = RadialGrid::logarithmic(x0, x1, n);
  std::vector<std::array<double, 3>> q(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = grid.r(i);
    const Jet<2> a = ae.eval_A(Jet<2>::variable(x));
    q[i][0] = x * std::abs(a.value() - 1.0);
    q[i][1] = x * x * std::abs(a.derivative(1));
    q[i][2] = x * x * x * std::abs(a.derivative(2));
  }
  DecayReport rep;
  rep.c_beta.assign(static_cast<std::size_t>(max_order), 0.0);
  rep.tail_c_beta.assign(static_cast<std::size_t>(max_order), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool tail = grid.r(i) >= 0.5 * x1;
    rep.c = std::max(rep.c, q[i][0]);
    if (tail) rep.tail_c = std::max(rep.tail_c, q[i][0]);
    for (int j = 1; j <= max_order; ++j) {
      rep.c_beta[static_cast<std::size_t>(j - 1)] = std::max(rep.c_beta[static_cast<std::size_t>(j - 1)], q[i][j]);
      if (tail)
        rep.tail_c_beta[static_cast<std::size_t>(j - 1)] =
            std::max(rep.tail_c_beta[static_cast<std::size_t>(j - 1)], q[i][j]);
    }
  }
  // Running supremum over nested ranges [x0, x0 2^k]: an AE profile saturates,
  // a non-AE one keeps increasing over every doubling.
  std::vector<double> sups;
  double run = 0.0;
  double next_edge = 8.0 * x0;
  for (std::size_t i = 0; i < n; ++i) {
    run = std::max(run, q[i][0]);
    if (grid.r(i) >= next_edge * (1.0 - 1e-12) || i + 1 == n) {
      sups.push_back(run);
      next_edge *= 2.0;
    }
  }
  bool growing = sups.size() >= 2;
  for (std::size_t k = 1; k < sups.size(); ++k)
    if (!(sups[k] > sups[k - 1] * (1.0 + 1e-3))) growing = false;
  rep.non_ae = growing && rep.c > 0.0;
  return rep;
}

}  // namespace cmcglue
