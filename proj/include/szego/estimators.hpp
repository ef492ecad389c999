#pragma once

// Integrated density of states and the two independent routes to the
// limiting variance sigma^2 of the centered trace fluctuations:
//   correlation sum   sigma^2 = sum_l C_l,  C_l = Cov(gamma_00(H), gamma_ll(H))
//   martingale        sigma^2 = E{ (E{A_0 | F_0^inf} - E{A_0 | F_1^inf})^2 },
//                     A_0 = V_0 int_0^1 (gamma'(H|_{V_0 -> u V_0}))_00 du

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "szego/core.hpp"
#include "szego/eigen.hpp"
#include "szego/model.hpp"
#include "szego/parallel.hpp"
#include "szego/stats.hpp"
#include "szego/symbols.hpp"
#include "szego/szego.hpp"

namespace szego {

struct IdsEstimate {
  std::vector<double> energies;
  std::vector<double> values;  // N-hat(E) in [0, 1]
  std::vector<double> standard_errors;
  std::size_t samples = 0;
  std::size_t box_size = 0;
};

// N-hat(E): average over realizations of (number of eigenvalues of H_L <= E) / |L|.
inline IdsEstimate ids_cdf(const PotentialDistribution& dist, std::span<const double> energy_grid, std::int64_t M,
                           std::size_t n_samples, const SeedPolicy& seed, Parallelism par = {}) {
  dist.validate();
  const Box box(M);
  if (n_samples == 0) throw ValidationError("n", "must be positive");
  if (!std::is_sorted(energy_grid.begin(), energy_grid.end()))
    throw ValidationError("energy_grid", "must be ascending");

  const double size = static_cast<double>(box.size());
  const auto fractions = parallel_map(n_samples, par, [&](std::size_t i) {
    const auto h = build_hamiltonian(sample_potential(dist, box.sites(), seed, i), -M);
    const std::vector<double> ev = eigenvalues_tridiagonal(h);
    std::vector<double> frac(energy_grid.size());
    for (std::size_t k = 0; k < energy_grid.size(); ++k) {
      const auto count = std::upper_bound(ev.begin(), ev.end(), energy_grid[k]) - ev.begin();
      frac[k] = static_cast<double>(count) / size;
    }
    return frac;
  });

  IdsEstimate out;
  out.energies.assign(energy_grid.begin(), energy_grid.end());
  out.samples = n_samples;
  out.box_size = box.size();
  std::vector<double> column(n_samples);
  for (std::size_t k = 0; k < energy_grid.size(); ++k) {
    for (std::size_t i = 0; i < n_samples; ++i) column[i] = fractions[i][k];
    out.values.push_back(mean(column));
    out.standard_errors.push_back(standard_error(column));
  }
  return out;
}

// Free-operator IDS N(E) = arccos(-E/2)/pi on [-2, 2].
inline double free_ids(double energy) noexcept {
  if (energy <= -2.0) return 0.0;
  if (energy >= 2.0) return 1.0;
  return std::acos(-energy / 2.0) / std::numbers::pi;
}

struct MeanEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

// Monte Carlo estimate of E{gamma_00(H)} = int gamma dN from independent
// windows [-B, B].
inline MeanEstimate spectral_average(const PotentialDistribution& dist, const Symbol& gamma, std::int64_t B,
                                     std::size_t n_samples, const SeedPolicy& seed, Parallelism par = {}) {
  dist.validate();
  if (n_samples == 0) throw ValidationError("n", "must be positive");
  const auto values = parallel_map(n_samples, par, [&](std::size_t i) {
    return gamma_site_value(Realization(dist, seed, i), gamma, 0, B);
  });
  return {mean(values), standard_error(values), n_samples};
}

struct VarianceEstimate {
  double sigma2 = 0.0;
  double standard_error = 0.0;
  std::string method;
  // correlation route
  std::vector<double> autocovariances;  // C_0 .. C_lmax
  std::vector<double> partial_sums;     // C_0 + 2 sum_{l<=L} C_l, L = 0 .. lmax
  std::size_t sites = 0;
  // martingale route
  std::size_t n_outer = 0;
  std::size_t n_inner = 0;
  int quad_nodes = 0;
  std::int64_t window = 0;
  double inner_noise = 0.0;  // estimated upward bias from finite n_inner
};

namespace detail {

inline void require_gamma_defined_on_k(const Symbol& gamma, const PotentialDistribution& dist) {
  gamma.require_admits(spectral_bound(dist), "spectral bound K");
}

// Variance of a sum estimate from batch means: the estimator `est` is applied
// to each of `batches` contiguous batches.
template <class Est>
double batch_standard_error(std::size_t n, std::size_t batches, Est&& est) {
  std::vector<double> b;
  const std::size_t len = n / batches;
  for (std::size_t k = 0; k < batches; ++k) b.push_back(est(k * len, (k + 1) * len));
  return standard_error(b);
}

}  // namespace detail

inline constexpr std::size_t kCorrelationBatches = 20;

// sigma^2 = C_0 + 2 sum_{l=1}^{lmax} C_l from spatial autocovariances of the
// windowed diagonal gamma_jj along one long realization on sites [0, n_sites).
inline VarianceEstimate correlation_sum_sigma2(const PotentialDistribution& dist, const Symbol& gamma,
                                               std::size_t l_max, std::int64_t B, std::size_t n_sites,
                                               const SeedPolicy& seed, Parallelism par = {},
                                               std::uint64_t realization_index = 0) {
  dist.validate();
  if (l_max >= n_sites) throw ValidationError("l_max", "must be smaller than n_sites");
  if (B < 0) throw ValidationError("B", "must be nonnegative");
  detail::require_gamma_defined_on_k(gamma, dist);

  const Realization r(dist, seed, realization_index);
  const auto n = static_cast<std::int64_t>(n_sites);
  const std::vector<double> v = r.potential({-B, n - 1 + B});
  const auto y = parallel_map(n_sites, par, [&](std::size_t j) {
    return gamma_site_value(std::span<const double>(v).subspan(j, static_cast<std::size_t>(2 * B + 1)), gamma, B);
  });

  const double ybar = mean(y);
  std::vector<double> c(n_sites);
  for (std::size_t j = 0; j < n_sites; ++j) c[j] = y[j] - ybar;

  auto estimate = [&](std::size_t lo, std::size_t hi, std::vector<double>* acov) {
    const double len = static_cast<double>(hi - lo);
    double s2 = 0.0;
    for (std::size_t l = 0; l <= l_max; ++l) {
      CompensatedSum s;
      for (std::size_t j = lo; j + l < hi; ++j) s += c[j] * c[j + l];
      const double cl = s.value() / len;
      if (acov) acov->push_back(cl);
      s2 += (l == 0 ? 1.0 : 2.0) * cl;
    }
    return s2;
  };

  VarianceEstimate out;
  out.method = "correlation_sum";
  out.sites = n_sites;
  out.sigma2 = estimate(0, n_sites, &out.autocovariances);
  double partial = 0.0;
  for (std::size_t l = 0; l < out.autocovariances.size(); ++l) {
    partial += (l == 0 ? 1.0 : 2.0) * out.autocovariances[l];
    out.partial_sums.push_back(partial);
  }
  const std::size_t batches = std::min<std::size_t>(kCorrelationBatches, n_sites / std::max<std::size_t>(1, 2 * l_max + 1));
  if (batches >= 2)
    out.standard_error =
        detail::batch_standard_error(n_sites, batches, [&](std::size_t lo, std::size_t hi) { return estimate(lo, hi, nullptr); });
  return out;
}

struct GaussLegendre {
  std::vector<double> nodes;  // on [0, 1]
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule mapped to [0, 1] (Newton iteration on P_n).
inline GaussLegendre gauss_legendre_unit(int n) {
  if (n < 1) throw ValidationError("quad_nodes", "must be positive");
  GaussLegendre g;
  g.nodes.resize(n);
  g.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    g.nodes[n - 1 - i] = 0.5 * (1.0 + x);
    g.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return g;
}

struct MartingaleOptions {
  std::int64_t window = 24;  // conditioning data truncated to [-window, window]
  std::int64_t buffer = 0;   // extra sites on each side of the window
  int quad_nodes = 8;
  std::size_t n_outer = 400;
  std::size_t n_inner = 100;
};

// A_0 = V_0 int_0^1 (gamma'(H|_{V_0 -> u V_0}))_00 du on the window potential
// `v` whose center entry is V_0.
inline double martingale_a0(std::vector<double> v, const Symbol& gamma, const GaussLegendre& rule) {
  const std::size_t c = v.size() / 2;
  const double v0 = v[c];
  if (v0 == 0.0) return 0.0;
  const std::vector<double> off(v.size() - 1, -1.0);
  auto dgamma = [&gamma](double x) { return gamma.derivative(x); };
  CompensatedSum integral;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    v[c] = rule.nodes[q] * v0;
    const EigenDecomposition e = eig_tridiagonal(v, off, {c, c + 1});
    integral += rule.weights[q] * matrix_function_diagonal(e, dgamma)[0];
  }
  return v0 * integral.value();
}

// Nested Monte Carlo estimate of E{(M^(0))^2}. Outer samples draw V_0 and
// V_1..V_w (the F_0 data); each inner sample redraws V_{-w}..V_{-1} and an
// independent V_0' ~ F, shared between the two conditional expectations.
inline VarianceEstimate martingale_sigma2(const PotentialDistribution& dist, const Symbol& gamma,
                                          const MartingaleOptions& opt, const SeedPolicy& seed,
                                          Parallelism par = {}) {
  dist.validate();
  if (!gamma.has_derivative())
    throw ValidationError("gamma", "martingale estimator needs a symbol with an analytic derivative");
  if (opt.quad_nodes < 4) throw ValidationError("quad_nodes", "must be >= 4");
  if (opt.n_inner < 2) throw ValidationError("n_inner", "must be >= 2");
  if (opt.n_outer < 2) throw ValidationError("n_outer", "must be >= 2");
  if (opt.window < 0 || opt.buffer < 0) throw ValidationError("window", "window and buffer must be nonnegative");
  detail::require_gamma_defined_on_k(gamma, dist);

  const GaussLegendre rule = gauss_legendre_unit(opt.quad_nodes);
  const std::int64_t w = opt.window + opt.buffer;
  const std::size_t len = static_cast<std::size_t>(2 * w + 1);

  struct OuterResult {
    double m = 0.0;
    double inner_var = 0.0;  // variance of the per-inner difference, for the bias estimate
  };
  const auto results = parallel_map(opt.n_outer, par, [&](std::size_t i) {
    const CounterStream base = seed.stream(i);
    const CounterStream right = base.substream(1);
    std::vector<double> v(len);
    for (std::int64_t j = 0; j <= w; ++j) v[static_cast<std::size_t>(j + w)] = dist.quantile(right.uniform(j));

    std::vector<double> diffs(opt.n_inner);
    for (std::size_t r = 0; r < opt.n_inner; ++r) {
      const CounterStream left = base.substream(1000 + r);
      for (std::int64_t j = -w; j < 0; ++j) v[static_cast<std::size_t>(j + w)] = dist.quantile(left.uniform(j));
      std::vector<double> v_prime = v;
      v_prime[static_cast<std::size_t>(w)] = dist.quantile(left.uniform(0));
      diffs[r] = martingale_a0(v, gamma, rule) - martingale_a0(std::move(v_prime), gamma, rule);
    }
    return OuterResult{mean(diffs), sample_variance(diffs)};
  });

  std::vector<double> squares(opt.n_outer), noise(opt.n_outer);
  for (std::size_t i = 0; i < opt.n_outer; ++i) {
    squares[i] = results[i].m * results[i].m;
    noise[i] = results[i].inner_var / static_cast<double>(opt.n_inner);
  }
  VarianceEstimate out;
  out.method = "martingale";
  out.sigma2 = mean(squares);
  out.standard_error = standard_error(squares);
  out.n_outer = opt.n_outer;
  out.n_inner = opt.n_inner;
  out.quad_nodes = opt.quad_nodes;
  out.window = opt.window;
  out.inner_noise = mean(noise);
  return out;
}

struct PositivityVerdict {
  bool pass = false;
  double ratio = 0.0;  // sigma2 / SE
};

// sigma^2 is declared positive when it exceeds three standard errors.
inline PositivityVerdict positivity_check(const VarianceEstimate& e) {
  PositivityVerdict v;
  if (e.standard_error > 0.0) {
    v.ratio = e.sigma2 / e.standard_error;
    v.pass = e.sigma2 > 3.0 * e.standard_error;
  } else {
    v.ratio = e.sigma2 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    v.pass = e.sigma2 > 0.0;
  }
  return v;
}

}  // namespace szego
