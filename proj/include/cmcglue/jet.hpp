#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace cmcglue {

// Truncated Taylor polynomial f(x0 + t) = sum_k c[k] t^k, k <= N.
// Closed-form profiles are written once as templates and evaluated either on
// plain doubles or on jets to get exact derivatives.
template <std::size_t N>
class Jet {
 public:
  static constexpr std::size_t order = N;

  constexpr Jet() = default;
  constexpr Jet(double v) { c_[0] = v; }  // NOLINT: implicit lift of constants

  // The independent variable at x0.
  static constexpr Jet variable(double x0) {
    Jet j(x0);
    if constexpr (N >= 1) j.c_[1] = 1.0;
    return j;
  }

  constexpr double value() const { return c_[0]; }
  constexpr double coeff(std::size_t k) const { return c_[k]; }
  constexpr double& coeff(std::size_t k) { return c_[k]; }

  // k-th derivative, k! * c[k].
  constexpr double derivative(std::size_t k) const {
    double f = 1.0;
    for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
    return f * c_[k];
  }

  Jet& operator+=(const Jet& o) {
    for (std::size_t k = 0; k <= N; ++k) c_[k] += o.c_[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (std::size_t k = 0; k <= N; ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator/=(const Jet& o) { return *this = *this / o; }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(Jet a) {
    for (auto& x : a.c_) x = -x;
    return a;
  }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet out;
    for (std::size_t k = 0; k <= N; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j <= k; ++j) s += a.c_[j] * b.c_[k - j];
      out.c_[k] = s;
    }
    return out;
  }
  friend Jet operator/(const Jet& a, const Jet& b) {
    Jet q;
    for (std::size_t k = 0; k <= N; ++k) {
      double s = a.c_[k];
      for (std::size_t j = 1; j <= k; ++j) s -= b.c_[j] * q.c_[k - j];
      q.c_[k] = s / b.c_[0];
    }
    return q;
  }

  friend bool operator<(const Jet& a, const Jet& b) { return a.c_[0] < b.c_[0]; }
  friend bool operator>(const Jet& a, const Jet& b) { return a.c_[0] > b.c_[0]; }
  friend bool operator<=(const Jet& a, const Jet& b) { return a.c_[0] <= b.c_[0]; }
  friend bool operator>=(const Jet& a, const Jet& b) { return a.c_[0] >= b.c_[0]; }

  friend Jet exp(const Jet& f) {
    Jet e;
    e.c_[0] = std::exp(f.c_[0]);
    for (std::size_t k = 1; k <= N; ++k) {
      double s = 0.0;
      for (std::size_t j = 1; j <= k; ++j) s += static_cast<double>(j) * f.c_[j] * e.c_[k - j];
      e.c_[k] = s / static_cast<double>(k);
    }
    return e;
  }
  friend Jet log(const Jet& f) {
    Jet l;
    l.c_[0] = std::log(f.c_[0]);
    for (std::size_t k = 1; k <= N; ++k) {
      double s = 0.0;
      for (std::size_t j = 1; j < k; ++j) s += static_cast<double>(j) * l.c_[j] * f.c_[k - j];
      l.c_[k] = (f.c_[k] - s / static_cast<double>(k)) / f.c_[0];
    }
    return l;
  }
  friend Jet sqrt(const Jet& f) {
    Jet s;
    s.c_[0] = std::sqrt(f.c_[0]);
    for (std::size_t k = 1; k <= N; ++k) {
      double acc = f.c_[k];
      for (std::size_t j = 1; j < k; ++j) acc -= s.c_[j] * s.c_[k - j];
      s.c_[k] = acc / (2.0 * s.c_[0]);
    }
    return s;
  }
  friend Jet pow(const Jet& f, double p) { return exp(p * log(f)); }

 private:
  std::array<double, N + 1> c_{};
};

inline double value_of(double x) { return x; }
template <std::size_t N>
double value_of(const Jet<N>& x) {
  return x.value();
}

// Integer power valid for both doubles and jets (negative exponents allowed).
template <class T>
T ipow(const T& x, int p) {
  T out(1.0);
  const int n = p < 0 ? -p : p;
  for (int i = 0; i < n; ++i) out = out * x;
  if (p < 0) return T(1.0) / out;
  return out;
}

// Value and first two derivatives of a scalar function at a point.
struct Deriv2 {
  double f = 0.0, df = 0.0, d2f = 0.0;
};

template <std::size_t N>
Deriv2 to_deriv2(const Jet<N>& j) {
  static_assert(N >= 2);
  return {j.value(), j.derivative(1), j.derivative(2)};
}

}  // namespace cmcglue
