#pragma once

// Restricted traces Tr_L phi(a_L(H)) for the Anderson model on a box
// L = [-M, M]. The infinite-volume a(H) is approximated by a(H) on a buffered
// outer box [-M-B, M+B] with open ends; its central (2M+1)-block is the
// restriction a_L(H).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "szego/core.hpp"
#include "szego/eigen.hpp"
#include "szego/model.hpp"
#include "szego/parallel.hpp"
#include "szego/symbols.hpp"

namespace szego {

inline constexpr std::int64_t kDefaultBuffer = 64;
inline constexpr double kDefaultEntryTolerance = 1e-10;

struct BufferedBoxSpec {
  std::int64_t M = 0;
  std::int64_t B = kDefaultBuffer;
  // When set, B is doubled until no inner-block entry moves by more than this.
  std::optional<double> tol_entry;
  std::int64_t max_buffer = 4096;

  static BufferedBoxSpec box(std::int64_t M, std::int64_t B = kDefaultBuffer) {
    BufferedBoxSpec s;
    s.M = M;
    s.B = B;
    return s;
  }

  SiteRange inner() const noexcept { return {-M, M}; }
  SiteRange outer() const noexcept { return {-M - B, M + B}; }
  std::size_t inner_size() const noexcept { return static_cast<std::size_t>(2 * M + 1); }
  std::size_t outer_size() const noexcept { return static_cast<std::size_t>(2 * (M + B) + 1); }

  void validate() const {
    if (M < 0) throw ValidationError("M", "must be nonnegative");
    if (B < 0) throw ValidationError("B", "must be nonnegative");
    if (tol_entry && !(*tol_entry > 0.0)) throw ValidationError("tol_entry", "must be positive");
    if (tol_entry && B == 0) throw ValidationError("B", "adaptive buffering needs B >= 1 to double");
  }
};

namespace detail {

inline void check_outer_length(std::span<const double> potential, const BufferedBoxSpec& spec) {
  spec.validate();
  if (potential.size() != spec.outer_size())
    throw ValidationError("potential", "length " + std::to_string(potential.size()) + " does not match outer box size " +
                                           std::to_string(spec.outer_size()));
}

inline Interval spectrum_hull(const EigenDecomposition& e) { return {e.values.front(), e.values.back()}; }

// A symbol whose range over the spectrum is a single point acts as c * I.
inline std::optional<double> constant_on(const Symbol& s, Interval spectrum) {
  const Interval r = s.range(spectrum);
  if (r.lo == r.hi) return r.lo;
  return std::nullopt;
}

// Decomposition of H on the outer box keeping the inner-box components.
inline EigenDecomposition outer_decomposition(std::span<const double> potential, const BufferedBoxSpec& spec) {
  const std::vector<double> off(potential.size() - 1, -1.0);
  const auto b = static_cast<std::size_t>(spec.B);
  return eig_tridiagonal(potential, off, {b, b + spec.inner_size()});
}

}  // namespace detail

// a_L(H): central (2M+1)-block of a(H_outer); `potential` covers the outer box.
inline SymmetricMatrix symbol_restriction(std::span<const double> potential, const Symbol& a,
                                          const BufferedBoxSpec& spec) {
  detail::check_outer_length(potential, spec);
  const EigenDecomposition e = detail::outer_decomposition(potential, spec);
  const Interval spectrum = detail::spectrum_hull(e);
  a.require_admits(spectrum, "spectrum of the outer-box Hamiltonian");
  if (const auto c = detail::constant_on(a, spectrum)) {
    SymmetricMatrix m(spec.inner_size());
    for (std::size_t i = 0; i < m.order(); ++i) m.set(i, i, *c);
    return m;
  }
  return matrix_function(e, a);
}

struct AdaptiveRestriction {
  SymmetricMatrix matrix;
  std::int64_t buffer = 0;
  double last_change = 0.0;  // max entry change at the final doubling
};

// Fixed-B restriction of a realization, or adaptive doubling when spec.tol_entry is set.
inline AdaptiveRestriction symbol_restriction(const Realization& r, const Symbol& a, BufferedBoxSpec spec) {
  spec.validate();
  AdaptiveRestriction out;
  out.matrix = symbol_restriction(r.potential(spec.outer()), a, spec);
  out.buffer = spec.B;
  if (!spec.tol_entry) return out;

  while (spec.B * 2 <= spec.max_buffer) {
    spec.B *= 2;
    SymmetricMatrix next = symbol_restriction(r.potential(spec.outer()), a, spec);
    double change = 0.0;
    for (std::size_t i = 0; i < next.data().size(); ++i)
      change = std::max(change, std::abs(next.data()[i] - out.matrix.data()[i]));
    out.matrix = std::move(next);
    out.buffer = spec.B;
    out.last_change = change;
    if (change < *spec.tol_entry) return out;
  }
  throw Error("adaptive buffer did not reach tol_entry before max_buffer=" + std::to_string(spec.max_buffer));
}

// Tr_L phi(a_L(H)).
inline double szego_trace(std::span<const double> potential, const Symbol& a, const Symbol& phi,
                          const BufferedBoxSpec& spec) {
  detail::check_outer_length(potential, spec);
  if (a.name() == "identity") {
    // a_L(H) is the inner block of H itself, a tridiagonal matrix.
    const std::span<const double> inner = potential.subspan(static_cast<std::size_t>(spec.B), spec.inner_size());
    const std::vector<double> ev = eigenvalues_tridiagonal(inner, std::vector<double>(inner.size() - 1, -1.0));
    phi.require_admits({ev.front(), ev.back()}, "spectrum of the restricted Hamiltonian");
    if (phi.name() == "identity") return compensated_sum(inner);
    if (const auto c = detail::constant_on(phi, {ev.front(), ev.back()})) return static_cast<double>(ev.size()) * *c;
    return trace_function(ev, phi);
  }
  const EigenDecomposition e = detail::outer_decomposition(potential, spec);
  const Interval spectrum = detail::spectrum_hull(e);
  a.require_admits(spectrum, "spectrum of the outer-box Hamiltonian");
  const Interval a_range = a.range(spectrum);
  phi.require_admits(a_range, "range of the symbol over the spectrum");
  const double n = static_cast<double>(spec.inner_size());
  if (const auto c = detail::constant_on(phi, a_range)) return n * *c;
  if (const auto c = detail::constant_on(a, spectrum)) return n * phi(*c);
  const SymmetricMatrix restricted = matrix_function(e, a);
  return trace_function(eigenvalues_dense(restricted), phi);
}

inline double szego_trace(const Realization& r, const Symbol& a, const Symbol& phi, const BufferedBoxSpec& spec) {
  return szego_trace(r.potential(spec.outer()), a, phi, spec);
}

// (gamma(H_window))_{center,center} for a window [site - B, site + B];
// `window` holds the potential on that window.
inline double gamma_site_value(std::span<const double> window, const Symbol& gamma, std::int64_t B) {
  if (B < 0) throw ValidationError("B", "must be nonnegative");
  if (window.size() != static_cast<std::size_t>(2 * B + 1))
    throw ValidationError("window", "length must be 2B+1");
  const std::vector<double> off(window.size() - 1, -1.0);
  const auto b = static_cast<std::size_t>(B);
  const EigenDecomposition e = eig_tridiagonal(window, off, {b, b + 1});
  const Interval spectrum = detail::spectrum_hull(e);
  gamma.require_admits(spectrum, "spectrum of the window Hamiltonian");
  if (const auto c = detail::constant_on(gamma, spectrum)) return *c;
  return matrix_function_diagonal(e, gamma)[0];
}

inline double gamma_site_value(const Realization& r, const Symbol& gamma, std::int64_t site, std::int64_t B) {
  return gamma_site_value(r.potential({site - B, site + B}), gamma, B);
}

// sum_{j in L} (gamma(H_outer))_{jj}, uncentered.
inline double trace_gamma(std::span<const double> potential, const Symbol& gamma, const BufferedBoxSpec& spec) {
  detail::check_outer_length(potential, spec);
  const EigenDecomposition e = detail::outer_decomposition(potential, spec);
  const Interval spectrum = detail::spectrum_hull(e);
  gamma.require_admits(spectrum, "spectrum of the outer-box Hamiltonian");
  if (const auto c = detail::constant_on(gamma, spectrum)) return static_cast<double>(spec.inner_size()) * *c;
  return compensated_sum(matrix_function_diagonal(e, gamma));
}

struct TruncationGap {
  double restricted_trace = 0.0;  // Tr_L phi(a_L(H))
  double gamma_trace = 0.0;       // Tr_L gamma(H)
  double gap = 0.0;
  double normalized_gap = 0.0;  // gap / |L|^{1/2}
};

// |Tr_L phi(a_L(H)) - Tr_L (phi o a)(H)|.
inline TruncationGap truncation_gap(std::span<const double> potential, const Symbol& a, const Symbol& phi,
                                    std::int64_t M, std::int64_t B) {
  const auto spec = BufferedBoxSpec::box(M, B);
  detail::check_outer_length(potential, spec);
  const EigenDecomposition e = detail::outer_decomposition(potential, spec);
  const Interval spectrum = detail::spectrum_hull(e);
  const Symbol gamma = compose(phi, a, spectrum);

  TruncationGap g;
  if (const auto c = detail::constant_on(a, spectrum)) {
    g.restricted_trace = g.gamma_trace = static_cast<double>(spec.inner_size()) * phi(*c);
  } else {
    const SymmetricMatrix restricted = matrix_function(e, a);
    g.restricted_trace = trace_function(eigenvalues_dense(restricted), phi);
    g.gamma_trace = compensated_sum(matrix_function_diagonal(e, gamma));
  }
  g.gap = std::abs(g.restricted_trace - g.gamma_trace);
  g.normalized_gap = g.gap / std::sqrt(static_cast<double>(spec.inner_size()));
  return g;
}

struct DecayPoint {
  std::int64_t distance = 0;
  double value = 0.0;
};

// max_{|j-k| = d} |a(H)_{jk}| over index pairs at least B/2 away from the ends
// of the outer box, for d = 0 .. (usable width - 1).
inline std::vector<DecayPoint> offdiagonal_decay_profile(std::span<const double> potential, const Symbol& a,
                                                         const BufferedBoxSpec& spec) {
  detail::check_outer_length(potential, spec);
  const std::size_t n = potential.size();
  const std::size_t margin = static_cast<std::size_t>(spec.B / 2);
  if (2 * margin >= n) throw ValidationError("B", "outer box too small for the boundary margin");
  const std::vector<double> off(n - 1, -1.0);
  const EigenDecomposition e = eig_tridiagonal(potential, off, {margin, n - margin});
  a.require_admits(detail::spectrum_hull(e), "spectrum of the outer-box Hamiltonian");
  const SymmetricMatrix fa = matrix_function(e, a);

  const std::size_t w = fa.order();
  std::vector<DecayPoint> profile(w);
  for (std::size_t d = 0; d < w; ++d) {
    double mx = 0.0;
    for (std::size_t j = 0; j + d < w; ++j) mx = std::max(mx, std::abs(fa(j, j + d)));
    profile[d] = {static_cast<std::int64_t>(d), mx};
  }
  return profile;
}

// Least-squares slope of log(value) against log(distance) for distance in
// [dmin, dmax]; points with value <= 0 are skipped.
inline double loglog_slope(std::span<const DecayPoint> series, std::int64_t dmin, std::int64_t dmax) {
  std::vector<double> x, y;
  for (const auto& p : series) {
    if (p.distance < dmin || p.distance > dmax || !(p.value > 0.0)) continue;
    x.push_back(std::log(static_cast<double>(p.distance)));
    y.push_back(std::log(p.value));
  }
  if (x.size() < 2) throw Error("loglog_slope needs at least two positive points in range");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxy / sxx;
}

struct InsensitivityPoint {
  std::int64_t p = 0;
  double mean_abs_diff = 0.0;
};

// For each p: n_pairs potential pairs on [-L, L] that coincide on [-p, p] and
// are independent outside (or identical when independent_outside is false);
// reports the mean |gamma_00(H1) - gamma_00(H2)|.
inline std::vector<InsensitivityPoint> window_insensitivity(const Symbol& gamma, const PotentialDistribution& dist,
                                                            std::span<const std::int64_t> p_list,
                                                            std::int64_t outer_half_width, std::size_t n_pairs,
                                                            const SeedPolicy& seed, Parallelism par = {},
                                                            bool independent_outside = true) {
  dist.validate();
  if (n_pairs == 0) throw ValidationError("n_pairs", "must be positive");
  for (auto p : p_list)
    if (p < 0 || p >= outer_half_width) throw ValidationError("p_list", "each p must satisfy 0 <= p < outer_half_width");

  const SiteRange sites{-outer_half_width, outer_half_width};
  std::vector<InsensitivityPoint> out;
  for (std::size_t ip = 0; ip < p_list.size(); ++ip) {
    const std::int64_t p = p_list[ip];
    const auto diffs = parallel_map(n_pairs, par, [&](std::size_t i) {
      const CounterStream base = seed.stream(i);
      const CounterStream shared = base.substream(0);
      const CounterStream out1 = base.substream(1);
      const CounterStream out2 = independent_outside ? base.substream(2) : out1;
      std::vector<double> v1(sites.size()), v2(sites.size());
      for (std::size_t k = 0; k < sites.size(); ++k) {
        const std::int64_t j = sites.first + static_cast<std::int64_t>(k);
        if (std::abs(j) <= p) {
          v1[k] = v2[k] = dist.quantile(shared.uniform(j));
        } else {
          v1[k] = dist.quantile(out1.uniform(j));
          v2[k] = dist.quantile(out2.uniform(j));
        }
      }
      return std::abs(gamma_site_value(v1, gamma, outer_half_width) - gamma_site_value(v2, gamma, outer_half_width));
    });
    out.push_back({p, compensated_sum(diffs) / static_cast<double>(n_pairs)});
  }
  return out;
}

}  // namespace szego
