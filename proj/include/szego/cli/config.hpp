#pragma once

// Experiment configuration: JSON parsing with field-path diagnostics,
// dotted-path overrides and defaults for every experiment section.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "szego/core.hpp"
#include "szego/limits.hpp"
#include "szego/model.hpp"
#include "szego/symbols.hpp"

namespace szego::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"clt", "asclt", "variance", "ids", "entropy", "decay", "selftest"};
  return kinds;
}

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

// Reads one JSON object, remembering which keys were consumed so that
// leftovers can be reported as unknown fields.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(path_.empty() ? "<root>" : path_, "must be an object");
  }

  const std::string& path() const noexcept { return path_; }
  std::string at(const std::string& key) const { return join_path(path_, key); }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!has(key)) return require(key, fallback);
    const Json& v = j_.at(key);
    if (!v.is_number()) throw ValidationError(at(key), "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ValidationError(at(key), "must be finite");
    return x;
  }

  std::int64_t integer(const std::string& key, std::optional<std::int64_t> fallback = std::nullopt) {
    if (!has(key)) return require(key, fallback);
    const Json& v = j_.at(key);
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      const double x = v.get<double>();
      if (std::floor(x) == x && std::abs(x) < 9.0e15) return static_cast<std::int64_t>(x);
    }
    throw ValidationError(at(key), "must be an integer");
  }

  std::int64_t integer_at_least(const std::string& key, std::int64_t lo, std::optional<std::int64_t> fallback) {
    const std::int64_t v = integer(key, fallback);
    if (v < lo) throw ValidationError(at(key), "must be >= " + std::to_string(lo));
    return v;
  }

  std::size_t count(const std::string& key, std::size_t lo, std::optional<std::size_t> fallback) {
    std::optional<std::int64_t> f;
    if (fallback) f = static_cast<std::int64_t>(*fallback);
    return static_cast<std::size_t>(integer_at_least(key, static_cast<std::int64_t>(lo), f));
  }

  std::uint64_t unsigned_integer(const std::string& key) {
    seen_.insert(key);
    const Json& v = j_.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ValidationError(at(key), "must be a nonnegative integer");
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    if (!has(key)) return require(key, fallback);
    const Json& v = j_.at(key);
    if (!v.is_string()) throw ValidationError(at(key), "must be a string");
    return v.get<std::string>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_boolean()) throw ValidationError(at(key), "must be true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) {
    if (!has(key)) return require(key, fallback);
    const Json& v = j_.at(key);
    if (!v.is_array()) throw ValidationError(at(key), "must be an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ValidationError(at(key) + "[" + std::to_string(i) + "]", "must be a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::vector<std::int64_t> integers(const std::string& key, std::vector<std::int64_t> fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_array()) throw ValidationError(at(key), "must be an array of integers");
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer())
        throw ValidationError(at(key) + "[" + std::to_string(i) + "]", "must be an integer");
      out.push_back(v[i].get<std::int64_t>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key, std::vector<std::string> fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_array()) throw ValidationError(at(key), "must be an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) throw ValidationError(at(key) + "[" + std::to_string(i) + "]", "must be a string");
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ValidationError(at(key), "unknown field");
  }

 private:
  template <class T>
  T require(const std::string& key, const std::optional<T>& fallback) const {
    if (!fallback) throw ValidationError(at(key), "is required");
    return *fallback;
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Runs `fn`, prefixing any parameter-level ValidationError with `path`.
template <class F>
auto with_path(const std::string& path, F&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    if (e.field() == path || e.field().rfind(path + ".", 0) == 0 || e.field().rfind(path + "[", 0) == 0) throw;
    throw ValidationError(join_path(path, e.field()), e.message());
  }
}

inline PotentialDistribution parse_distribution(const Json& j, const std::string& path) {
  Reader r(j, path);
  const std::string kind = r.string("kind");
  PotentialDistribution d = PotentialDistribution::constant(0.0);
  if (kind == "uniform") {
    d = PotentialDistribution::uniform(r.number("half_width", 1.0));
  } else if (kind == "bernoulli") {
    d = PotentialDistribution::bernoulli(r.number("magnitude"), r.number("prob", 0.5));
  } else if (kind == "discrete") {
    d = PotentialDistribution::discrete(r.numbers("values"), r.numbers("weights"));
  } else if (kind == "constant") {
    d = PotentialDistribution::constant(r.number("value", 0.0));
  } else {
    throw ValidationError(r.at("kind"), "unknown distribution kind '" + kind + "'");
  }
  r.finish();
  with_path(path, [&] { d.validate(); return 0; });
  return d;
}

inline Symbol parse_symbol(const Json& j, const std::string& path) {
  Reader r(j, path);
  const std::string kind = r.string("kind");
  auto build = [&]() -> Symbol {
    if (kind == "identity") return identity_symbol();
    if (kind == "constant") return constant_symbol(r.number("value"));
    if (kind == "polynomial") return polynomial(r.numbers("coeffs"));
    if (kind == "fermi") return fermi(r.number("beta"), r.number("fermi_energy", 0.0));
    if (kind == "renyi") return renyi(r.number("alpha"));
    if (kind == "von_neumann") return von_neumann();
    if (kind == "resolvent") return resolvent(r.number("x0"));
    if (kind == "log_shift") return log_shift(r.number("x0"));
    if (kind == "indicator") return indicator(r.number("energy"));
    if (kind == "compose") {
      const Symbol outer = parse_symbol(r.raw("phi"), r.at("phi"));
      const Symbol inner = parse_symbol(r.raw("a"), r.at("a"));
      return compose(outer, inner);
    }
    if (kind == "linear_combination") {
      const double c1 = r.number("c1");
      const Symbol s1 = parse_symbol(r.raw("s1"), r.at("s1"));
      const double c2 = r.number("c2");
      const Symbol s2 = parse_symbol(r.raw("s2"), r.at("s2"));
      return linear_combination(c1, s1, c2, s2);
    }
    throw ValidationError(r.at("kind"), "unknown symbol kind '" + kind + "'");
  };
  Symbol s = with_path(path, build);
  r.finish();
  return s;
}

struct BoxSettings {
  std::int64_t M = 256;
  std::int64_t B = kDefaultBuffer;
};

struct CltSettings {
  std::size_t n = 1000;
  Centering centering = Centering::self;
  std::size_t n_mu = 0;
  double ks_threshold = kKsThreshold;
};

struct AscltSettings {
  std::int64_t M_max = 300;
  GridPolicy grid = GridPolicy::automatic;
  double ratio = 1.05;
  std::vector<DeltaInterval> intervals{{-1.0, 1.0}};
  std::optional<double> sigma;
  std::optional<double> mu;
  std::size_t inline_samples = 20000;
  AscltCentering centering = AscltCentering::boundary_corrected;
  std::size_t n_boundary = 40;
  double tolerance = 0.15;
};

struct VarianceSettings {
  std::vector<std::string> methods{"correlation", "martingale", "fluctuation"};
  std::size_t l_max = 50;
  std::size_t n_sites = 20000;
  std::int64_t correlation_B = 40;
  std::int64_t window = 24;
  std::int64_t buffer = 0;
  int quad_nodes = 8;
  std::size_t n_outer = 400;
  std::size_t n_inner = 100;
  std::vector<std::int64_t> M_list{64, 128, 256, 512};
  std::size_t n_per_M = 400;
  std::vector<std::int64_t> window_scan;  // extra martingale windows for a convergence report
  double tolerance = 0.15;
};

struct IdsSettings {
  std::int64_t M = 512;
  std::size_t n = 200;
  std::optional<double> lo, hi;  // default: the spectral bound
  std::size_t points = 41;
  double tolerance = 0.02;  // against the free IDS, constant(0) only
};

struct EntropySettings {
  double alpha = 2.0;
  double beta = 3.0;
  double fermi_energy = 0.0;
  std::vector<std::int64_t> M_list{64, 128};
  std::size_t n = 400;
  std::size_t n_mu = 2000;
};

struct DecaySettings {
  std::int64_t M = 64;
  std::int64_t d_min = 5;
  std::int64_t d_max = 40;
  double slope_max = -2.0;
  std::vector<std::int64_t> p_list{10, 20, 40};
  std::int64_t outer_half_width = 64;
  std::size_t n_pairs = 50;
  double insensitivity_ratio = 0.1;
  std::vector<std::int64_t> truncation_M{32, 512};
  double truncation_ratio = 0.5;
};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::string out = "out";
  PotentialDistribution dist = PotentialDistribution::uniform(1.0);
  Symbol a = fermi(3.0, 0.0);
  Symbol phi = renyi(2.0);
  BoxSettings box;
  CltSettings clt;
  AscltSettings asclt;
  VarianceSettings variance;
  IdsSettings ids;
  EntropySettings entropy;
  DecaySettings decay;
  std::vector<std::string> warnings;
  Json echo;  // effective input, minus run-environment fields
};

// Sets `root[a][b]...` from a dotted path; the value is parsed as JSON when
// possible and kept as a string otherwise.
inline void apply_override(Json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError(assignment, "override must look like path.to.field=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  Json* node = &root;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw ValidationError(path, "empty path component");
    parts.push_back(part);
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    Json& next = (*node)[parts[i]];
    if (next.is_null()) next = Json::object();
    if (!next.is_object()) throw ValidationError(path, "'" + parts[i] + "' is not an object");
    node = &next;
  }
  (*node)[parts.back()] = std::move(value);
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("--config", "cannot read '" + path + "'");
  Json j = Json::parse(in, nullptr, false, true);
  if (j.is_discarded()) throw ValidationError("--config", "'" + path + "' is not valid JSON");
  if (!j.is_object()) throw ValidationError("<root>", "config must be a JSON object");
  return j;
}

namespace detail {

inline Centering parse_centering(const std::string& s, const std::string& path) {
  if (s == "self") return Centering::self;
  if (s == "ids") return Centering::ids;
  throw ValidationError(path, "must be 'self' or 'ids'");
}

inline GridPolicy parse_grid(const std::string& s, const std::string& path) {
  if (s == "auto") return GridPolicy::automatic;
  if (s == "exact") return GridPolicy::exact;
  if (s == "geometric") return GridPolicy::geometric;
  throw ValidationError(path, "must be 'auto', 'exact' or 'geometric'");
}

inline double parse_endpoint(const Json& v, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  }
  throw ValidationError(path, "must be a number, \"-inf\" or \"inf\"");
}

inline void check_ascending_nonnegative(const std::vector<std::int64_t>& xs, const std::string& path) {
  if (xs.empty()) throw ValidationError(path, "must be nonempty");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] < 0) throw ValidationError(path + "[" + std::to_string(i) + "]", "must be nonnegative");
    if (i > 0 && xs[i] <= xs[i - 1]) throw ValidationError(path, "must be strictly ascending");
  }
}

inline ExperimentKind to_kind(const std::string& e) {
  if (e == "clt") return ExperimentKind::clt;
  if (e == "asclt") return ExperimentKind::asclt;
  if (e == "variance") return ExperimentKind::variance;
  if (e == "ids") return ExperimentKind::ids;
  if (e == "entropy") return ExperimentKind::entropy;
  if (e == "decay") return ExperimentKind::decay;
  return ExperimentKind::selftest;
}

}  // namespace detail

// Full static validation; never runs numerics beyond symbol construction.
inline ExperimentConfig parse_config(const Json& root, const std::string& experiment) {
  ExperimentConfig c;
  Reader r(root, "");
  c.experiment = experiment;
  if (r.has("experiment")) {
    const std::string e = r.string("experiment");
    if (std::find(experiment_kinds().begin(), experiment_kinds().end(), e) == experiment_kinds().end())
      throw ValidationError("experiment", "unknown experiment kind '" + e + "'");
    if (!experiment.empty() && e != experiment)
      throw ValidationError("experiment", "config is for '" + e + "' but '" + experiment + "' was requested");
    c.experiment = e;
  }
  if (c.experiment.empty()) throw ValidationError("experiment", "is required");

  if (r.has("seed")) {
    c.seed = r.unsigned_integer("seed");
  } else {
    c.warnings.push_back("seed missing: defaulted to 0");
  }
  c.threads = r.count("threads", 0, 0);
  c.out = r.string("out", std::string("out"));

  if (r.has("dist")) c.dist = parse_distribution(r.raw("dist"), "dist");
  if (r.has("a")) c.a = parse_symbol(r.raw("a"), "a");
  if (r.has("phi")) c.phi = parse_symbol(r.raw("phi"), "phi");
  const Interval K = spectral_bound(c.dist);

  if (r.has("box")) {
    Reader b(r.raw("box"), "box");
    c.box.M = b.integer_at_least("M", 0, c.box.M);
    c.box.B = b.integer_at_least("B", 0, c.box.B);
    b.finish();
  }

  if (r.has("clt")) {
    Reader s(r.raw("clt"), "clt");
    c.clt.n = s.count("n", 30, c.clt.n);
    c.clt.centering = detail::parse_centering(s.string("centering", std::string("self")), s.at("centering"));
    c.clt.n_mu = s.count("n_mu", 0, c.clt.n_mu);
    c.clt.ks_threshold = s.number("ks_threshold", c.clt.ks_threshold);
    if (!(c.clt.ks_threshold > 0.0)) throw ValidationError(s.at("ks_threshold"), "must be positive");
    s.finish();
  }

  if (r.has("asclt")) {
    Reader s(r.raw("asclt"), "asclt");
    c.asclt.M_max = s.integer_at_least("M_max", 1, c.asclt.M_max);
    c.asclt.grid = detail::parse_grid(s.string("grid", std::string("auto")), s.at("grid"));
    c.asclt.ratio = s.number("ratio", c.asclt.ratio);
    if (!(c.asclt.ratio > 1.0)) throw ValidationError(s.at("ratio"), "must exceed 1");
    if (s.has("intervals")) {
      const Json& iv = s.raw("intervals");
      if (!iv.is_array() || iv.empty()) throw ValidationError(s.at("intervals"), "must be a nonempty array of [lo, hi] pairs");
      c.asclt.intervals.clear();
      for (std::size_t i = 0; i < iv.size(); ++i) {
        const std::string p = s.at("intervals") + "[" + std::to_string(i) + "]";
        if (!iv[i].is_array() || iv[i].size() != 2) throw ValidationError(p, "must be a [lo, hi] pair");
        DeltaInterval d{detail::parse_endpoint(iv[i][0], p + "[0]"), detail::parse_endpoint(iv[i][1], p + "[1]")};
        if (!(d.lo < d.hi)) throw ValidationError(p, "needs lo < hi");
        c.asclt.intervals.push_back(d);
      }
    }
    if (s.has("sigma")) {
      c.asclt.sigma = s.number("sigma");
      if (!(*c.asclt.sigma > 0.0)) throw ValidationError(s.at("sigma"), "must be positive");
    }
    if (s.has("mu")) c.asclt.mu = s.number("mu");
    c.asclt.inline_samples = s.count("inline_samples", 2, c.asclt.inline_samples);
    if (s.has("centering")) {
      const std::string cm = s.string("centering");
      if (cm == "bulk") c.asclt.centering = AscltCentering::bulk;
      else if (cm == "boundary_corrected") c.asclt.centering = AscltCentering::boundary_corrected;
      else throw ValidationError(s.at("centering"), "must be 'bulk' or 'boundary_corrected'");
    }
    c.asclt.n_boundary = s.count("n_boundary", 2, c.asclt.n_boundary);
    c.asclt.tolerance = s.number("tolerance", c.asclt.tolerance);
    s.finish();
  }

  if (r.has("variance")) {
    Reader s(r.raw("variance"), "variance");
    c.variance.methods = s.strings("methods", c.variance.methods);
    for (std::size_t i = 0; i < c.variance.methods.size(); ++i) {
      const auto& m = c.variance.methods[i];
      if (m != "correlation" && m != "martingale" && m != "fluctuation")
        throw ValidationError(s.at("methods") + "[" + std::to_string(i) + "]",
                              "must be 'correlation', 'martingale' or 'fluctuation'");
    }
    c.variance.l_max = s.count("l_max", 0, c.variance.l_max);
    c.variance.n_sites = s.count("n_sites", 2, c.variance.n_sites);
    if (c.variance.l_max >= c.variance.n_sites) throw ValidationError(s.at("l_max"), "must be smaller than n_sites");
    c.variance.correlation_B = s.integer_at_least("B", 0, c.variance.correlation_B);
    c.variance.window = s.integer_at_least("window", 0, c.variance.window);
    c.variance.buffer = s.integer_at_least("buffer", 0, c.variance.buffer);
    c.variance.quad_nodes = static_cast<int>(s.integer_at_least("quad_nodes", 4, c.variance.quad_nodes));
    c.variance.n_outer = s.count("n_outer", 2, c.variance.n_outer);
    c.variance.n_inner = s.count("n_inner", 2, c.variance.n_inner);
    c.variance.M_list = s.integers("M_list", c.variance.M_list);
    detail::check_ascending_nonnegative(c.variance.M_list, s.at("M_list"));
    c.variance.n_per_M = s.count("n_per_M", 4, c.variance.n_per_M);
    c.variance.window_scan = s.integers("window_scan", {});
    for (std::size_t i = 0; i < c.variance.window_scan.size(); ++i)
      if (c.variance.window_scan[i] < 0)
        throw ValidationError(s.at("window_scan") + "[" + std::to_string(i) + "]", "must be nonnegative");
    c.variance.tolerance = s.number("tolerance", c.variance.tolerance);
    s.finish();
  }

  if (r.has("ids")) {
    Reader s(r.raw("ids"), "ids");
    c.ids.M = s.integer_at_least("M", 0, c.ids.M);
    c.ids.n = s.count("n", 1, c.ids.n);
    if (s.has("lo")) c.ids.lo = s.number("lo");
    if (s.has("hi")) c.ids.hi = s.number("hi");
    c.ids.points = s.count("points", 1, c.ids.points);
    c.ids.tolerance = s.number("tolerance", c.ids.tolerance);
    s.finish();
  }
  if (c.ids.lo.value_or(K.lo) > c.ids.hi.value_or(K.hi)) throw ValidationError("ids.lo", "must not exceed ids.hi");

  if (r.has("entropy")) {
    Reader s(r.raw("entropy"), "entropy");
    c.entropy.alpha = s.number("alpha", c.entropy.alpha);
    c.entropy.beta = s.number("beta", c.entropy.beta);
    c.entropy.fermi_energy = s.number("fermi_energy", c.entropy.fermi_energy);
    c.entropy.M_list = s.integers("M_list", c.entropy.M_list);
    detail::check_ascending_nonnegative(c.entropy.M_list, s.at("M_list"));
    c.entropy.n = s.count("n", 4, c.entropy.n);
    c.entropy.n_mu = s.count("n_mu", 1, c.entropy.n_mu);
    with_path("entropy", [&] { renyi(c.entropy.alpha); fermi(c.entropy.beta, c.entropy.fermi_energy); return 0; });
    s.finish();
  }

  if (r.has("decay")) {
    Reader s(r.raw("decay"), "decay");
    c.decay.M = s.integer_at_least("M", 0, c.decay.M);
    c.decay.d_min = s.integer_at_least("d_min", 1, c.decay.d_min);
    c.decay.d_max = s.integer_at_least("d_max", c.decay.d_min + 1, c.decay.d_max);
    c.decay.slope_max = s.number("slope_max", c.decay.slope_max);
    c.decay.p_list = s.integers("p_list", c.decay.p_list);
    detail::check_ascending_nonnegative(c.decay.p_list, s.at("p_list"));
    c.decay.outer_half_width = s.integer_at_least("outer_half_width", 1, c.decay.outer_half_width);
    if (c.decay.p_list.back() >= c.decay.outer_half_width)
      throw ValidationError(s.at("p_list"), "every p must be smaller than outer_half_width");
    c.decay.n_pairs = s.count("n_pairs", 1, c.decay.n_pairs);
    c.decay.insensitivity_ratio = s.number("insensitivity_ratio", c.decay.insensitivity_ratio);
    c.decay.truncation_M = s.integers("truncation_M", c.decay.truncation_M);
    detail::check_ascending_nonnegative(c.decay.truncation_M, s.at("truncation_M"));
    c.decay.truncation_ratio = s.number("truncation_ratio", c.decay.truncation_ratio);
    s.finish();
  }
  if (c.decay.d_max >= 2 * c.decay.M + 1 + c.box.B)
    throw ValidationError("decay.d_max", "exceeds the width of the interior block");
  r.finish();

  // Cross-field checks that depend on the ensemble.
  const bool needs_symbols = c.experiment == "clt" || c.experiment == "asclt" || c.experiment == "variance" ||
                             c.experiment == "decay";
  if (needs_symbols) {
    with_path("a", [&] { c.a.require_admits(K, "spectral bound K"); return 0; });
    with_path("phi", [&] { compose(c.phi, c.a, K); return 0; });
  }
  if (c.experiment == "variance") {
    const Symbol gamma = compose(c.phi, c.a, K);
    const bool martingale = std::find(c.variance.methods.begin(), c.variance.methods.end(), "martingale") !=
                            c.variance.methods.end();
    if (martingale && !gamma.has_derivative())
      throw ValidationError("phi", "martingale estimator needs a symbol pair with an analytic derivative");
  }

  auto add_warnings = [&](ExperimentKind kind) {
    for (const auto& w : check_hypotheses(c.dist, kind).warnings)
      if (std::find(c.warnings.begin(), c.warnings.end(), w) == c.warnings.end()) c.warnings.push_back(w);
  };
  add_warnings(detail::to_kind(c.experiment));
  // An entropy-type symbol pair carries the entropy hypotheses in any experiment.
  if (needs_symbols && (c.phi.name() == "renyi" || c.phi.name() == "von_neumann")) add_warnings(ExperimentKind::entropy);

  c.echo = root;
  c.echo.erase("threads");
  c.echo.erase("out");
  c.echo["experiment"] = c.experiment;
  c.echo["seed"] = c.seed;
  return c;
}

}  // namespace szego::cli
