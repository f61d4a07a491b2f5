#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "cmcglue/error.hpp"

namespace cmcglue {

// Square band matrix with kl sub- and ku super-diagonals. Storage keeps
// kl extra super-diagonals for the fill-in of partial pivoting.
class BandedMatrix {
 public:
  BandedMatrix(std::size_t n, std::size_t kl, std::size_t ku)
      : n_(n), kl_(kl), ku_(ku), width_(2 * kl + ku + 1), a_(n * (2 * kl + ku + 1), 0.0) {}

  std::size_t size() const { return n_; }
  std::size_t lower() const { return kl_; }
  std::size_t upper() const { return ku_; }

  bool in_band(std::size_t i, std::size_t j) const {
    return j + kl_ >= i && j <= i + ku_;
  }

  double operator()(std::size_t i, std::size_t j) const {
    if (!in_band(i, j)) return 0.0;
    return a_[index(i, j)];
  }

  double& at(std::size_t i, std::size_t j) {
    if (!in_band(i, j)) throw ValidationError("band matrix entry outside the band");
    return a_[index(i, j)];
  }

  void clear_row(std::size_t i) {
    const std::size_t j0 = i >= kl_ ? i - kl_ : 0;
    const std::size_t j1 = std::min(n_ - 1, i + ku_);
    for (std::size_t j = j0; j <= j1; ++j) a_[index(i, j)] = 0.0;
  }

  std::vector<double> multiply(const std::vector<double>& x) const {
    std::vector<double> y(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t j0 = i >= kl_ ? i - kl_ : 0;
      const std::size_t j1 = std::min(n_ - 1, i + ku_);
      double s = 0.0;
      for (std::size_t j = j0; j <= j1; ++j) s += a_[index(i, j)] * x[j];
      y[i] = s;
    }
    return y;
  }

 private:
  friend class BandedLU;
  // Row-major with a fixed diagonal offset; column j of row i lives at
  // i*width + (j - i + kl). The extra kl slots on the right take fill-in.
  std::size_t index(std::size_t i, std::size_t j) const { return i * width_ + (j + kl_ - i); }

  std::size_t n_, kl_, ku_, width_;
  std::vector<double> a_;
};

// Gaussian elimination with partial (row) pivoting on a band matrix.
class BandedLU {
 public:
  explicit BandedLU(BandedMatrix m, const std::string& singular_message = "singular banded system")
      : m_(std::move(m)), piv_(m_.n_) {
    const std::size_t n = m_.n_, kl = m_.kl_, ku_fill = m_.kl_ + m_.ku_;
    double scale = 0.0;
    for (double v : m_.a_) scale = std::max(scale, std::abs(v));
    const double tiny = scale * 64.0 * std::numeric_limits<double>::epsilon();
    double pmin = std::numeric_limits<double>::infinity(), pmax = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t last = std::min(n - 1, k + kl);
      std::size_t p = k;
      double best = std::abs(m_.a_[m_.index(k, k)]);
      for (std::size_t i = k + 1; i <= last; ++i) {
        const double v = std::abs(m_.a_[m_.index(i, k)]);
        if (v > best) {
          best = v;
          p = i;
        }
      }
      if (!(best > tiny)) throw NumericalError(singular_message);
      piv_[k] = p;
      const std::size_t jend = std::min(n - 1, k + ku_fill);
      if (p != k) {
        for (std::size_t j = k; j <= jend; ++j) std::swap(m_.a_[m_.index(k, j)], m_.a_[m_.index(p, j)]);
      }
      const double d = m_.a_[m_.index(k, k)];
      pmin = std::min(pmin, std::abs(d));
      pmax = std::max(pmax, std::abs(d));
      for (std::size_t i = k + 1; i <= last; ++i) {
        double& lik = m_.a_[m_.index(i, k)];
        if (lik == 0.0) continue;
        lik /= d;
        for (std::size_t j = k + 1; j <= jend; ++j) m_.a_[m_.index(i, j)] -= lik * m_.a_[m_.index(k, j)];
      }
    }
    pivot_ratio_ = pmax / pmin;
  }

  std::vector<double> solve(std::vector<double> b) const {
    const std::size_t n = m_.n_, kl = m_.kl_, ku_fill = m_.kl_ + m_.ku_;
    for (std::size_t k = 0; k < n; ++k) {
      if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
      const std::size_t last = std::min(n - 1, k + kl);
      for (std::size_t i = k + 1; i <= last; ++i) b[i] -= m_.a_[m_.index(i, k)] * b[k];
    }
    for (std::size_t kk = n; kk-- > 0;) {
      const std::size_t jend = std::min(n - 1, kk + ku_fill);
      double s = b[kk];
      for (std::size_t j = kk + 1; j <= jend; ++j) s -= m_.a_[m_.index(kk, j)] * b[j];
      b[kk] = s / m_.a_[m_.index(kk, kk)];
    }
    return b;
  }

  // Ratio of the largest to the smallest pivot magnitude: a cheap
  // conditioning indicator, reported rather than asserted.
  double pivot_ratio() const { return pivot_ratio_; }

 private:
  BandedMatrix m_;
  std::vector<std::size_t> piv_;
  double pivot_ratio_ = 1.0;
};

}  // namespace cmcglue
