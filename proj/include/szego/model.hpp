#pragma once

// Random potential ensembles, seeded sampling and finite-box Hamiltonians of
// the one-dimensional Anderson model H = H0 + V, (H0 u)_j = -u_{j+1} - u_{j-1}.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "szego/core.hpp"
#include "szego/rng.hpp"

namespace szego {

// Inclusive integer interval of lattice sites.
struct SiteRange {
  std::int64_t first = 0;
  std::int64_t last = -1;

  std::size_t size() const noexcept {
    return last < first ? 0 : static_cast<std::size_t>(last - first + 1);
  }
  bool empty() const noexcept { return last < first; }
  bool contains(std::int64_t j) const noexcept { return j >= first && j <= last; }

  friend bool operator==(const SiteRange&, const SiteRange&) = default;
};

// Symmetric box [-M, M] of 2M+1 sites.
struct Box {
  std::int64_t half_width = 0;

  explicit Box(std::int64_t m) : half_width(m) {
    if (m < 0) throw ValidationError("M", "box half-width must be nonnegative");
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(2 * half_width + 1); }
  SiteRange sites() const noexcept { return {-half_width, half_width}; }
};

class PotentialDistribution {
 public:
  struct Uniform {
    double half_width;
  };
  // Two-point law: +magnitude with probability prob, -magnitude otherwise.
  struct Bernoulli {
    double magnitude;
    double prob;
  };
  struct Discrete {
    std::vector<double> values;
    std::vector<double> weights;
  };
  struct Constant {
    double value;
  };
  using Kind = std::variant<Uniform, Bernoulli, Discrete, Constant>;

  static PotentialDistribution uniform(double half_width) { return PotentialDistribution(Uniform{half_width}); }
  static PotentialDistribution bernoulli(double magnitude, double prob) {
    return PotentialDistribution(Bernoulli{magnitude, prob});
  }
  static PotentialDistribution discrete(std::vector<double> values, std::vector<double> weights) {
    return PotentialDistribution(Discrete{std::move(values), std::move(weights)});
  }
  static PotentialDistribution constant(double value) { return PotentialDistribution(Constant{value}); }

  const Kind& kind() const noexcept { return kind_; }

  std::string name() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Uniform>) return "uniform";
          if constexpr (std::is_same_v<T, Bernoulli>) return "bernoulli";
          if constexpr (std::is_same_v<T, Discrete>) return "discrete";
          if constexpr (std::is_same_v<T, Constant>) return "constant";
        },
        kind_);
  }

  // V-bar = max |v| over the support.
  double bound() const {
    return std::visit(
        [](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            return k.half_width;
          } else if constexpr (std::is_same_v<T, Bernoulli>) {
            return k.magnitude;
          } else if constexpr (std::is_same_v<T, Discrete>) {
            double b = 0.0;
            for (std::size_t i = 0; i < k.values.size(); ++i)
              if (k.weights[i] > 0.0) b = std::max(b, std::abs(k.values[i]));
            return b;
          } else {
            return std::abs(k.value);
          }
        },
        kind_);
  }

  // Inverse-CDF map from one uniform variate in [0,1) to a potential value.
  double quantile(double u) const {
    return std::visit(
        [u](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            return k.half_width * (2.0 * u - 1.0);
          } else if constexpr (std::is_same_v<T, Bernoulli>) {
            return u < k.prob ? k.magnitude : -k.magnitude;
          } else if constexpr (std::is_same_v<T, Discrete>) {
            double acc = 0.0;
            std::size_t last_positive = 0;
            for (std::size_t i = 0; i < k.values.size(); ++i) {
              if (k.weights[i] <= 0.0) continue;
              last_positive = i;
              acc += k.weights[i];
              if (u < acc) return k.values[i];
            }
            return k.values[last_positive];
          } else {
            return k.value;
          }
        },
        kind_);
  }

  // Throws ValidationError naming the offending parameter.
  void validate() const {
    std::visit(
        [](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            if (!(k.half_width >= 0.0) || !std::isfinite(k.half_width))
              throw ValidationError("half_width", "must be a finite nonnegative number");
          } else if constexpr (std::is_same_v<T, Bernoulli>) {
            if (!(k.magnitude > 0.0) || !std::isfinite(k.magnitude))
              throw ValidationError("magnitude", "must be a finite positive number");
            if (!(k.prob >= 0.0 && k.prob <= 1.0)) throw ValidationError("prob", "must lie in [0, 1]");
          } else if constexpr (std::is_same_v<T, Discrete>) {
            if (k.values.empty()) throw ValidationError("values", "must be nonempty");
            if (k.values.size() != k.weights.size())
              throw ValidationError("weights", "must have the same length as values");
            double total = 0.0;
            for (std::size_t i = 0; i < k.values.size(); ++i) {
              if (!std::isfinite(k.values[i])) throw ValidationError("values", "must be finite");
              if (!(k.weights[i] >= 0.0)) throw ValidationError("weights", "must be nonnegative");
              total += k.weights[i];
            }
            if (std::abs(total - 1.0) > 1e-12) throw ValidationError("weights", "must sum to 1");
          } else {
            if (!std::isfinite(k.value)) throw ValidationError("value", "must be finite");
          }
        },
        kind_);
  }

  friend bool operator==(const PotentialDistribution& a, const PotentialDistribution& b) {
    return a.name() == b.name() && std::visit(
                                       [&](const auto& ka) {
                                         using T = std::decay_t<decltype(ka)>;
                                         const auto& kb = std::get<T>(b.kind_);
                                         if constexpr (std::is_same_v<T, Uniform>) return ka.half_width == kb.half_width;
                                         if constexpr (std::is_same_v<T, Bernoulli>)
                                           return ka.magnitude == kb.magnitude && ka.prob == kb.prob;
                                         if constexpr (std::is_same_v<T, Discrete>)
                                           return ka.values == kb.values && ka.weights == kb.weights;
                                         if constexpr (std::is_same_v<T, Constant>) return ka.value == kb.value;
                                       },
                                       a.kind_);
  }

 private:
  explicit PotentialDistribution(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

inline Moments distribution_moments(const PotentialDistribution& dist) {
  using D = PotentialDistribution;
  return std::visit(
      [](const auto& k) -> Moments {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, D::Uniform>) {
          return {0.0, k.half_width * k.half_width / 3.0};
        } else if constexpr (std::is_same_v<T, D::Bernoulli>) {
          const double w = k.magnitude;
          return {w * (2.0 * k.prob - 1.0), 4.0 * w * w * k.prob * (1.0 - k.prob)};
        } else if constexpr (std::is_same_v<T, D::Discrete>) {
          CompensatedSum m, m2;
          for (std::size_t i = 0; i < k.values.size(); ++i) {
            m += k.weights[i] * k.values[i];
            m2 += k.weights[i] * k.values[i] * k.values[i];
          }
          const double mean = m.value();
          return {mean, std::max(0.0, m2.value() - mean * mean)};
        } else {
          return {k.value, 0.0};
        }
      },
      dist.kind());
}

// Fills one value per site of `sites`; site j always consumes counter j of the stream.
inline std::vector<double> sample_potential(const PotentialDistribution& dist, SiteRange sites,
                                            const CounterStream& stream) {
  if (sites.empty()) throw ValidationError("sites", "site interval must be nonempty");
  std::vector<double> v(sites.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = dist.quantile(stream.uniform(sites.first + static_cast<std::int64_t>(i)));
  return v;
}

inline std::vector<double> sample_potential(const PotentialDistribution& dist, SiteRange sites,
                                            const SeedPolicy& seed, std::uint64_t realization_index) {
  dist.validate();
  return sample_potential(dist, sites, seed.stream(realization_index));
}

// One draw of the random potential: V_j for every site j of the lattice,
// materialized on demand for any site range.
struct Realization {
  PotentialDistribution dist;
  CounterStream stream;

  Realization(PotentialDistribution d, CounterStream s) : dist(std::move(d)), stream(s) {}
  Realization(PotentialDistribution d, const SeedPolicy& seed, std::uint64_t index)
      : dist(std::move(d)), stream(seed.stream(index)) {}

  double at(std::int64_t site) const { return dist.quantile(stream.uniform(site)); }
  std::vector<double> potential(SiteRange sites) const { return sample_potential(dist, sites, stream); }
};

enum class ExperimentKind { clt, asclt, variance, ids, entropy, decay, selftest };

struct HypothesisReport {
  bool bounded = true;
  bool zero_mean = false;
  bool zero_in_support = false;
  bool nondegenerate = false;
  std::vector<std::string> warnings;
};

inline bool zero_in_support(const PotentialDistribution& dist) {
  using D = PotentialDistribution;
  return std::visit(
      [](const auto& k) -> bool {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, D::Uniform>) return true;
        if constexpr (std::is_same_v<T, D::Bernoulli>) return false;
        if constexpr (std::is_same_v<T, D::Discrete>) {
          for (std::size_t i = 0; i < k.values.size(); ++i)
            if (k.values[i] == 0.0 && k.weights[i] > 0.0) return true;
          return false;
        }
        if constexpr (std::is_same_v<T, D::Constant>) return k.value == 0.0;
      },
      dist.kind());
}

// Diagnostic only: never throws on a valid law, reports which limit-theorem
// hypotheses the ensemble satisfies for the given experiment.
inline HypothesisReport check_hypotheses(const PotentialDistribution& dist, ExperimentKind kind) {
  HypothesisReport r;
  const Moments mom = distribution_moments(dist);
  r.zero_mean = std::abs(mom.mean) <= 1e-14 * std::max(1.0, dist.bound());
  r.zero_in_support = zero_in_support(dist);
  r.nondegenerate = mom.variance > 0.0;

  const bool fluctuation_experiment = kind == ExperimentKind::clt || kind == ExperimentKind::asclt ||
                                      kind == ExperimentKind::variance || kind == ExperimentKind::entropy;
  if (fluctuation_experiment && !r.nondegenerate)
    r.warnings.emplace_back("degenerate (zero-variance) ensemble: fluctuations vanish identically");
  if (kind == ExperimentKind::entropy) {
    if (!r.zero_in_support)
      r.warnings.emplace_back("0 ∉ supp F: the entropy CLT assumes zero lies in the support of the potential law");
    if (!r.zero_mean) r.warnings.emplace_back("E V_0 != 0: the entropy CLT assumes a zero-mean potential");
  }
  return r;
}

struct TridiagonalOperator {
  std::vector<double> diagonal;
  std::vector<double> off_diagonal;  // size = diagonal.size() - 1
  std::int64_t leftmost_site = 0;

  std::size_t order() const noexcept { return diagonal.size(); }
  SiteRange sites() const noexcept {
    return {leftmost_site, leftmost_site + static_cast<std::int64_t>(diagonal.size()) - 1};
  }
};

// Diagonal = potential, constant hopping -1.
inline TridiagonalOperator build_hamiltonian(std::vector<double> potential, std::int64_t leftmost_site = 0) {
  if (potential.empty()) throw ValidationError("potential", "Hamiltonian needs at least one site");
  TridiagonalOperator h;
  h.off_diagonal.assign(potential.size() - 1, -1.0);
  h.diagonal = std::move(potential);
  h.leftmost_site = leftmost_site;
  return h;
}

// K = [-2 - V-bar, 2 + V-bar] contains the spectrum of every realization.
inline Interval spectral_bound(const PotentialDistribution& dist) {
  dist.validate();
  const double vb = dist.bound();
  return {-2.0 - vb, 2.0 + vb};
}

}  // namespace szego
