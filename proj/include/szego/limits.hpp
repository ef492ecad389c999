#pragma once

// Monte Carlo harnesses for the Gaussian fluctuations of restricted traces:
// the distributional CLT for
//   Sigma_L = |L|^{-1/2} (Tr_L phi(a_L(H)) - |L| mu),
// the almost-sure CLT through logarithmic averages over nested boxes, and the
// finite-volume variance scan Var{Tr}/|L| -> sigma^2.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "szego/core.hpp"
#include "szego/estimators.hpp"
#include "szego/model.hpp"
#include "szego/parallel.hpp"
#include "szego/stats.hpp"
#include "szego/symbols.hpp"
#include "szego/szego.hpp"

namespace szego {

inline constexpr double kKsThreshold = 1.63;  // D sqrt(n), asymptotic p ~ 0.01

enum class Centering { self, ids };

inline const char* to_string(Centering c) noexcept { return c == Centering::self ? "self" : "ids"; }

struct SigmaSamples {
  std::vector<double> traces;
  std::vector<double> sigma;  // Sigma_L per realization
  Centering centering = Centering::self;
  double mu_hat = 0.0;     // centering mean per site
  double mu_se = 0.0;      // its standard error (ids mode)
  std::int64_t M = 0;
  std::int64_t B = 0;
  std::uint64_t master_seed = 0;
};

struct CltReport {
  double sigma2_hat = 0.0;     // unbiased sample variance of Sigma_L
  double second_moment = 0.0;  // mean of Sigma_L^2
  double mean_sigma = 0.0;
  bool degenerate = false;
  bool ks_skipped = false;
  KsResult ks;
  bool ks_pass = false;
  Histogram histogram;
  double centering_error_budget = 0.0;  // |L|^{1/2} SE(mu-hat), ids mode
};

struct CltOptions {
  std::int64_t M = 256;
  std::int64_t B = kDefaultBuffer;
  std::size_t n = 1000;
  Centering centering = Centering::self;
  std::size_t n_mu = 0;  // spectral_average samples for ids centering; 0 means 4n
  double ks_threshold = kKsThreshold;
};

struct CltRun {
  SigmaSamples samples;
  CltReport report;
};

// Restricted traces for realizations 0..n-1 of the box [-M, M].
inline std::vector<double> sample_traces(const PotentialDistribution& dist, const Symbol& a, const Symbol& phi,
                                         const BufferedBoxSpec& spec, std::size_t n, const SeedPolicy& seed,
                                         Parallelism par = {}) {
  return parallel_map(n, par, [&](std::size_t i) { return szego_trace(Realization(dist, seed, i), a, phi, spec); });
}

inline CltRun run_clt(const PotentialDistribution& dist, const Symbol& a, const Symbol& phi, const CltOptions& opt,
                      const SeedPolicy& seed, Parallelism par = {}) {
  dist.validate();
  if (opt.n < 30) throw ValidationError("n", "CLT run needs at least 30 realizations");
  const auto spec = BufferedBoxSpec::box(opt.M, opt.B);
  spec.validate();
  const double size = static_cast<double>(spec.inner_size());
  const double root = std::sqrt(size);

  CltRun run;
  SigmaSamples& s = run.samples;
  CltReport& rep = run.report;
  s.centering = opt.centering;
  s.M = opt.M;
  s.B = opt.B;
  s.master_seed = seed.master_seed;
  s.traces = sample_traces(dist, a, phi, spec, opt.n, seed, par);

  if (opt.centering == Centering::self) {
    s.mu_hat = mean(s.traces) / size;
    const double tbar = mean(s.traces);
    for (double t : s.traces) s.sigma.push_back((t - tbar) / root);
  } else {
    const Symbol gamma = compose(phi, a, spectral_bound(dist));
    // Independent stream family for the centering constant.
    const SeedPolicy mu_seed{detail::mix64(seed.master_seed ^ 0x1d5c0ffee0ddf00dULL)};
    const MeanEstimate mu = spectral_average(dist, gamma, opt.B, opt.n_mu ? opt.n_mu : 4 * opt.n, mu_seed, par);
    s.mu_hat = mu.mean;
    s.mu_se = mu.standard_error;
    for (double t : s.traces) s.sigma.push_back((t - size * mu.mean) / root);
    rep.centering_error_budget = root * mu.standard_error;
  }

  rep.mean_sigma = mean(s.sigma);
  rep.sigma2_hat = sample_variance(s.sigma);
  {
    CompensatedSum m2;
    for (double x : s.sigma) m2 += x * x;
    rep.second_moment = m2.value() / static_cast<double>(s.sigma.size());
  }

  double spread = 0.0;
  for (double x : s.sigma) spread = std::max(spread, std::abs(x - rep.mean_sigma));
  const double scale = std::max(1.0, std::abs(mean(s.traces)) / root);
  rep.degenerate = spread <= 1e-10 * scale;

  if (rep.degenerate) {
    rep.ks_skipped = true;
    return run;
  }
  const double sd = std::sqrt(rep.sigma2_hat);
  std::vector<double> z(s.sigma.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = (s.sigma[i] - rep.mean_sigma) / sd;
  std::sort(z.begin(), z.end());
  rep.ks = ks_statistic(z, [](double x) { return gaussian_cdf(x); });
  rep.ks_pass = rep.ks.scaled() <= opt.ks_threshold;
  rep.histogram = histogram(z, -4.0, 4.0, 32);
  return run;
}

// Half-open interval [lo, hi) of the real line, infinite ends allowed.
struct DeltaInterval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool contains(double x) const noexcept { return x >= lo && x < hi; }
  double gaussian_mass() const noexcept { return szego::gaussian_mass(lo, hi); }
};

enum class GridPolicy { automatic, exact, geometric };

// bulk: subtract |L| mu. boundary_corrected: additionally subtract the mean
// edge term E{Tr_L phi(a_L(H)) - Tr_L gamma(H)}, estimated per m from
// independent realizations; it is O(1) and shifts Z_m by O(m^{-1/2}).
enum class AscltCentering { bulk, boundary_corrected };

inline const char* to_string(AscltCentering c) noexcept {
  return c == AscltCentering::bulk ? "bulk" : "boundary_corrected";
}

struct AscltOptions {
  std::int64_t M_max = 300;
  GridPolicy grid = GridPolicy::automatic;
  double ratio = 1.05;  // geometric grid growth factor
  std::int64_t B = kDefaultBuffer;
  std::vector<DeltaInterval> intervals{{-1.0, 1.0}};
  std::optional<double> sigma;     // limiting sigma (not sigma^2); computed inline when absent
  std::optional<double> mu;        // centering mean per site; computed inline when absent
  std::size_t inline_samples = 2000;
  std::uint64_t realization_index = 0;
  AscltCentering centering = AscltCentering::boundary_corrected;
  std::size_t n_boundary = 40;  // realizations per m for the edge term
};

struct AscltTrajectory {
  std::vector<std::int64_t> m;
  std::vector<double> weights;
  std::vector<double> z;                   // Z_m = Sigma_[-m,m] / sigma
  std::vector<std::vector<double>> running;  // running[d][k] = L_{m_k}(Delta_d)
  std::vector<DeltaInterval> intervals;
  std::vector<double> targets;  // Phi(Delta_d)
  std::vector<double> boundary;     // edge term subtracted at each m (0 for bulk centering)
  std::vector<double> boundary_se;  // its standard error
  double sigma = 0.0;
  double mu = 0.0;
  bool exact_grid = true;
  AscltCentering centering = AscltCentering::bulk;

  double final_value(std::size_t d) const { return running[d].back(); }
};

inline bool is_identity(const Symbol& s) { return s.name() == "identity"; }

// Evaluation points: all m in [1, M_max], or a geometric grid with
// trapezoidal weights in log m (weights sum to ~ log M_max + harmonic offset).
inline void asclt_grid(std::int64_t M_max, bool exact, double ratio, std::vector<std::int64_t>& m,
                       std::vector<double>& w) {
  m.clear();
  w.clear();
  if (exact) {
    for (std::int64_t k = 1; k <= M_max; ++k) {
      m.push_back(k);
      w.push_back(1.0 / static_cast<double>(k));
    }
    return;
  }
  double x = 1.0;
  while (true) {
    const auto k = static_cast<std::int64_t>(std::llround(x));
    if (k > M_max) break;
    if (m.empty() || k != m.back()) m.push_back(k);
    x *= ratio;
  }
  if (m.back() != M_max) m.push_back(M_max);
  // Point k represents the log-interval between its neighbours' midpoints;
  // the first point additionally carries the harmonic mass 1 of m = 1.
  const std::size_t n = m.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double lm = std::log(static_cast<double>(m[k]));
    const double left = k == 0 ? lm : 0.5 * (lm + std::log(static_cast<double>(m[k - 1])));
    const double right = k + 1 == n ? lm : 0.5 * (lm + std::log(static_cast<double>(m[k + 1])));
    w.push_back(right - left + (k == 0 ? 1.0 : 0.0));
  }
}

inline AscltTrajectory run_asclt(const PotentialDistribution& dist, const Symbol& a, const Symbol& phi,
                                 const AscltOptions& opt, const SeedPolicy& seed, Parallelism par = {}) {
  dist.validate();
  if (opt.M_max < 1) throw ValidationError("M_max", "must be >= 1");
  if (opt.sigma && !(*opt.sigma > 0.0)) throw ValidationError("sigma", "must be positive");
  if (opt.grid == GridPolicy::geometric && !(opt.ratio > 1.0)) throw ValidationError("ratio", "must exceed 1");
  if (opt.intervals.empty()) throw ValidationError("intervals", "need at least one interval");
  if (opt.centering == AscltCentering::boundary_corrected && opt.n_boundary < 2)
    throw ValidationError("n_boundary", "must be >= 2");

  const bool partial_sums = is_identity(a) && is_identity(phi);
  AscltTrajectory out;
  out.exact_grid = opt.grid == GridPolicy::exact || (opt.grid == GridPolicy::automatic && (partial_sums || opt.M_max <= 300));
  asclt_grid(opt.M_max, out.exact_grid, opt.ratio, out.m, out.weights);
  out.intervals = opt.intervals;
  for (const auto& d : opt.intervals) out.targets.push_back(d.gaussian_mass());

  const Symbol gamma = compose(phi, a, spectral_bound(dist));
  const SeedPolicy aux{detail::mix64(seed.master_seed ^ 0xa5c17ULL)};
  if (opt.mu) {
    out.mu = *opt.mu;
  } else if (partial_sums) {
    out.mu = distribution_moments(dist).mean;
  } else {
    out.mu = spectral_average(dist, gamma, opt.B, opt.inline_samples, aux, par).mean;
  }
  if (opt.sigma) {
    out.sigma = *opt.sigma;
  } else if (partial_sums) {
    out.sigma = std::sqrt(distribution_moments(dist).variance);
  } else {
    const auto est = correlation_sum_sigma2(dist, gamma, 50, 40, std::max<std::size_t>(opt.inline_samples, 5000), aux, par);
    out.sigma = std::sqrt(std::max(est.sigma2, 0.0));
  }
  if (!(out.sigma > 0.0)) throw ValidationError("sigma", "limiting standard deviation must be positive");

  // One realization shared by all nested boxes.
  const Realization r(dist, seed, opt.realization_index);
  std::vector<double> traces(out.m.size());
  if (partial_sums) {
    const std::vector<double> v = r.potential({-opt.M_max, opt.M_max});
    const std::size_t c = static_cast<std::size_t>(opt.M_max);
    for (std::size_t k = 0; k < out.m.size(); ++k) {
      const auto mk = static_cast<std::size_t>(out.m[k]);
      traces[k] = compensated_sum(std::span<const double>(v).subspan(c - mk, 2 * mk + 1));
    }
  } else {
    traces = parallel_map(out.m.size(), par, [&](std::size_t k) {
      return szego_trace(r, a, phi, BufferedBoxSpec::box(out.m[k], opt.B));
    });
  }

  // a = phi = id has no edge term: both traces are the plain potential sum.
  out.centering = partial_sums ? AscltCentering::bulk : opt.centering;
  out.boundary.assign(out.m.size(), 0.0);
  out.boundary_se.assign(out.m.size(), 0.0);
  if (out.centering == AscltCentering::boundary_corrected) {
    const SeedPolicy edge_seed{detail::mix64(seed.master_seed ^ 0xed9e5eedULL)};
    const std::size_t nb = opt.n_boundary;
    const auto gaps = parallel_map(out.m.size() * nb, par, [&](std::size_t idx) {
      const std::int64_t mk = out.m[idx / nb];
      const auto spec = BufferedBoxSpec::box(mk, opt.B);
      const TruncationGap g =
          truncation_gap(Realization(dist, edge_seed, idx % nb).potential(spec.outer()), a, phi, mk, opt.B);
      return g.restricted_trace - g.gamma_trace;
    });
    for (std::size_t k = 0; k < out.m.size(); ++k) {
      const std::span<const double> col(gaps.data() + k * nb, nb);
      out.boundary[k] = mean(col);
      out.boundary_se[k] = standard_error(col);
    }
  }

  out.running.assign(opt.intervals.size(), {});
  std::vector<double> hits(opt.intervals.size(), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < out.m.size(); ++k) {
    const double size = static_cast<double>(2 * out.m[k] + 1);
    const double zk = (traces[k] - size * out.mu - out.boundary[k]) / std::sqrt(size) / out.sigma;
    out.z.push_back(zk);
    total += out.weights[k];
    for (std::size_t d = 0; d < opt.intervals.size(); ++d) {
      if (opt.intervals[d].contains(zk)) hits[d] += out.weights[k];
      out.running[d].push_back(hits[d] / total);
    }
  }
  return out;
}

struct FluctuationPoint {
  std::int64_t M = 0;
  double ratio = 0.0;  // Var{Tr} / |L|
  double standard_error = 0.0;
  double mean_trace = 0.0;
};

// Standard error of the unbiased sample variance from the fourth central moment.
inline double variance_standard_error(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 4) return 0.0;
  const double m = mean(xs);
  CompensatedSum s2, s4;
  for (double x : xs) {
    const double d = (x - m) * (x - m);
    s2 += d;
    s4 += d * d;
  }
  const double nn = static_cast<double>(n);
  const double m2 = s2.value() / nn, m4 = s4.value() / nn;
  const double var = (m4 - m2 * m2 * (nn - 3.0) / (nn - 1.0)) / nn;
  return std::sqrt(std::max(var, 0.0));
}

// Var{Tr_L phi(a_L(H))}/|L| per box size; realizations 0..n-1 are reused at
// every M, so the boxes are nested within each realization.
inline std::vector<FluctuationPoint> fluctuation_scan(const PotentialDistribution& dist, const Symbol& a,
                                                      const Symbol& phi, std::span<const std::int64_t> M_list,
                                                      std::int64_t B, std::size_t n_per_M, const SeedPolicy& seed,
                                                      Parallelism par = {}) {
  dist.validate();
  if (n_per_M < 4) throw ValidationError("n_per_M", "must be >= 4");
  if (!std::is_sorted(M_list.begin(), M_list.end())) throw ValidationError("M_list", "must be ascending");
  std::vector<FluctuationPoint> out;
  for (std::int64_t M : M_list) {
    const auto spec = BufferedBoxSpec::box(M, B);
    spec.validate();
    const std::vector<double> traces = sample_traces(dist, a, phi, spec, n_per_M, seed, par);
    const double size = static_cast<double>(spec.inner_size());
    out.push_back({M, sample_variance(traces) / size, variance_standard_error(traces) / size, mean(traces)});
  }
  return out;
}

struct EntropyReport {
  double alpha = 0.0;
  double beta = 0.0;
  double fermi_energy = 0.0;
  MeanEstimate volume_coefficient;  // mu-hat = int r_alpha(n_F) dN
  std::vector<FluctuationPoint> scan;
  double sigma2_hat = 0.0;  // plateau value: last point of the scan
  double sigma2_se = 0.0;
  bool positive = false;    // sigma2_hat > 3 SE
  CltRun clt;               // at the largest M
};

struct EntropyOptions {
  double alpha = 2.0;
  double beta = 3.0;
  double fermi_energy = 0.0;
  std::vector<std::int64_t> M_list{64, 128};
  std::int64_t B = kDefaultBuffer;
  std::size_t n = 400;
  std::size_t n_mu = 2000;
};

// Renyi entanglement entropy of free fermions at inverse temperature beta:
// a = n_F, phi = r_alpha.
inline EntropyReport entanglement_entropy_experiment(const PotentialDistribution& dist, const EntropyOptions& opt,
                                                     const SeedPolicy& seed, Parallelism par = {}) {
  dist.validate();
  if (opt.M_list.empty()) throw ValidationError("M_list", "must be nonempty");
  const Symbol a = fermi(opt.beta, opt.fermi_energy);
  const Symbol phi = renyi(opt.alpha);
  const Symbol gamma = compose(phi, a, spectral_bound(dist));

  EntropyReport rep;
  rep.alpha = opt.alpha;
  rep.beta = opt.beta;
  rep.fermi_energy = opt.fermi_energy;
  rep.volume_coefficient = spectral_average(dist, gamma, opt.B, opt.n_mu, SeedPolicy{detail::mix64(seed.master_seed + 17)}, par);
  if (opt.n >= 30) {
    // The CLT run at the largest M supplies that scan point from the same traces.
    const std::span<const std::int64_t> head(opt.M_list.data(), opt.M_list.size() - 1);
    rep.scan = fluctuation_scan(dist, a, phi, head, opt.B, opt.n, seed, par);
    CltOptions co;
    co.M = opt.M_list.back();
    co.B = opt.B;
    co.n = opt.n;
    rep.clt = run_clt(dist, a, phi, co, seed, par);
    const auto& tr = rep.clt.samples.traces;
    const double size = static_cast<double>(2 * co.M + 1);
    rep.scan.push_back({co.M, sample_variance(tr) / size, variance_standard_error(tr) / size, mean(tr)});
  } else {
    rep.scan = fluctuation_scan(dist, a, phi, opt.M_list, opt.B, opt.n, seed, par);
  }
  rep.sigma2_hat = rep.scan.back().ratio;
  rep.sigma2_se = rep.scan.back().standard_error;
  rep.positive = rep.sigma2_se > 0.0 ? rep.sigma2_hat > 3.0 * rep.sigma2_se : rep.sigma2_hat > 0.0;
  return rep;
}

}  // namespace szego
