#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "szego/core.hpp"

namespace szego {

// Standard normal CDF via erfc, accurate to ~1e-16 absolute.
inline double gaussian_cdf(double x) noexcept {
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

// Gaussian mass of the half-open interval [lo, hi).
inline double gaussian_mass(double lo, double hi) noexcept { return gaussian_cdf(hi) - gaussian_cdf(lo); }

// P(K > x) for the Kolmogorov distribution K = lim sqrt(n) D_n.
inline double kolmogorov_survival(double x) noexcept {
  if (!(x > 0.0)) return 1.0;
  if (x < 1.18) {
    // P(K <= x) = sqrt(2 pi)/x sum_k exp(-(2k-1)^2 pi^2 / (8 x^2))
    const double c = -std::numbers::pi * std::numbers::pi / (8.0 * x * x);
    double s = 0.0;
    for (int k = 1; k <= 8; ++k) s += std::exp(c * (2 * k - 1) * (2 * k - 1));
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / x * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

struct KsResult {
  double D = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  double scaled() const noexcept { return D * std::sqrt(static_cast<double>(n)); }
};

// Two-sided one-sample Kolmogorov-Smirnov statistic; `sorted` must be ascending.
inline KsResult ks_statistic(std::span<const double> sorted, const std::function<double(double)>& cdf) {
  if (sorted.empty()) throw ValidationError("samples", "KS statistic needs at least one sample");
  if (!std::is_sorted(sorted.begin(), sorted.end())) throw ValidationError("samples", "must be sorted ascending");
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  KsResult r;
  r.D = std::clamp(d, 0.0, 1.0);
  r.n = sorted.size();
  r.p_value = kolmogorov_survival(r.D * std::sqrt(n));
  return r;
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return compensated_sum(xs) / static_cast<double>(xs.size());
}

// Unbiased sample variance (n - 1 denominator); 0 for fewer than two samples.
inline double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  CompensatedSum s;
  for (double x : xs) s += (x - m) * (x - m);
  return s.value() / static_cast<double>(xs.size() - 1);
}

inline double standard_error(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  return std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
}

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;
};

inline Histogram histogram(std::span<const double> xs, double lo, double hi, std::size_t bins) {
  Histogram h{lo, hi, std::vector<std::size_t>(bins, 0)};
  if (bins == 0 || !(hi > lo)) return h;
  for (double x : xs) {
    if (x < lo || x >= hi) continue;
    auto b = static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(bins));
    h.counts[std::min(b, bins - 1)]++;
  }
  return h;
}

}  // namespace szego
