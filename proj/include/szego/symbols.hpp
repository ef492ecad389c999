#pragma once

// Scalar symbols a, test functions phi and their compositions gamma = phi o a,
// each carrying an analytic derivative (when one exists), a validity predicate
// and a smoothness class.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "szego/core.hpp"

namespace szego {

enum class Smoothness { discontinuous, fourier, analytic };

// Smoothness class; for Smoothness::fourier, theta is the Fourier-moment order.
struct SmoothnessClass {
  Smoothness tag = Smoothness::analytic;
  double theta = std::numeric_limits<double>::infinity();

  bool weaker_than(const SmoothnessClass& o) const noexcept {
    if (tag != o.tag) return tag < o.tag;
    return theta < o.theta;
  }
  friend bool operator==(const SmoothnessClass&, const SmoothnessClass&) = default;
};

inline const char* to_string(Smoothness s) noexcept {
  switch (s) {
    case Smoothness::discontinuous: return "discontinuous";
    case Smoothness::fourier: return "fourier";
    case Smoothness::analytic: return "analytic";
  }
  return "?";
}

class Symbol {
 public:
  using Fn = std::function<double(double)>;
  using RangeFn = std::function<Interval(Interval)>;
  using AdmitsFn = std::function<bool(Interval)>;

  Symbol(std::string name, Fn f, Fn df, Interval domain, SmoothnessClass smooth, RangeFn range,
         AdmitsFn admits = {})
      : name_(std::move(name)),
        f_(std::move(f)),
        df_(std::move(df)),
        domain_(domain),
        smooth_(smooth),
        range_(std::move(range)),
        admits_(std::move(admits)) {}

  const std::string& name() const noexcept { return name_; }
  const Interval& domain() const noexcept { return domain_; }
  const SmoothnessClass& smoothness() const noexcept { return smooth_; }
  bool has_derivative() const noexcept { return static_cast<bool>(df_); }

  double operator()(double x) const { return f_(x); }

  double derivative(double x) const {
    if (!df_) throw DomainError("symbol '" + name_ + "' has no derivative");
    return df_(x);
  }

  // True when the symbol is finite on the whole interval.
  bool admits(Interval on) const { return admits_ ? admits_(on) : domain_.contains(on); }

  // Closed hull of the symbol's values over `on` (which it must admit).
  Interval range(Interval on) const { return range_(on); }

  // Throws DomainError unless the symbol is finite on `on`.
  void require_admits(Interval on, const std::string& what = {}) const {
    if (!admits(on)) {
      std::ostringstream os;
      os << "symbol '" << name_ << "' is not defined on [" << on.lo << ", " << on.hi << "]";
      if (!what.empty()) os << " (" << what << ")";
      throw DomainError(os.str());
    }
  }

 private:
  std::string name_;
  Fn f_;
  Fn df_;
  Interval domain_;
  SmoothnessClass smooth_;
  RangeFn range_;
  AdmitsFn admits_;
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr Interval kRealLine{-kInf, kInf};

inline Interval hull(double a, double b) noexcept { return {std::min(a, b), std::max(a, b)}; }

// Endpoints of the unit interval tolerate this much roundoff before being
// treated as out of domain (eigenvalues of a restricted Fermi matrix can land
// a few ulps outside [0, 1]).
inline constexpr double kUnitSlack = 1e-12;

inline double clamp_unit(double x, const std::string& name) {
  if (!(x >= -kUnitSlack && x <= 1.0 + kUnitSlack))
    throw DomainError("symbol '" + name + "' evaluated outside [0, 1] at " + std::to_string(x));
  return std::clamp(x, 0.0, 1.0);
}

// Range of a function symmetric about 1/2 and monotone on each half of [0, 1],
// with its extremum at 1/2.
template <class F>
Interval unimodal_unit_range(F&& f, Interval on) {
  const double lo = std::clamp(on.lo, 0.0, 1.0);
  const double hi = std::clamp(on.hi, 0.0, 1.0);
  const double flo = f(lo), fhi = f(hi), fmid = f(std::clamp(0.5, lo, hi));
  return {std::min({flo, fhi, fmid}), std::max({flo, fhi, fmid})};
}

// Sampled range for symbols without a closed form; exact at the endpoints.
template <class F>
Interval sampled_range(F&& f, Interval on, int points = 4097) {
  if (!std::isfinite(on.lo) || !std::isfinite(on.hi)) return kRealLine;
  double lo = kInf, hi = -kInf;
  for (int i = 0; i < points; ++i) {
    const double x = on.lo + (on.hi - on.lo) * i / (points - 1);
    const double y = f(x);
    lo = std::min(lo, y);
    hi = std::max(hi, y);
  }
  return {lo, hi};
}

}  // namespace detail

inline Symbol identity_symbol() {
  return Symbol(
      "identity", [](double x) { return x; }, [](double) { return 1.0; }, detail::kRealLine, {},
      [](Interval on) { return on; });
}

inline Symbol constant_symbol(double c) {
  return Symbol(
      "constant", [c](double) { return c; }, [](double) { return 0.0; }, detail::kRealLine, {},
      [c](Interval) { return Interval{c, c}; });
}

// c0 + c1 x + ... + cq x^q.
inline Symbol polynomial(std::vector<double> coeffs) {
  if (coeffs.empty()) coeffs.push_back(0.0);
  auto f = [coeffs](double x) {
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
    return acc;
  };
  auto df = [coeffs](double x) {
    double acc = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 1;) acc = acc * x + static_cast<double>(k) * coeffs[k];
    return acc;
  };
  const bool constant = std::all_of(coeffs.begin() + 1, coeffs.end(), [](double c) { return c == 0.0; });
  return Symbol(
      "polynomial", f, df, detail::kRealLine, {},
      [f, constant, c0 = coeffs[0]](Interval on) {
        if (constant) return Interval{c0, c0};
        return detail::sampled_range(f, on);
      });
}

// Fermi-Dirac distribution n_F(x) = 1 / (exp(beta (x - E_F)) + 1).
inline Symbol fermi(double beta, double fermi_energy) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("beta", "must be a finite positive number");
  if (!std::isfinite(fermi_energy)) throw ValidationError("fermi_energy", "must be finite");
  auto f = [beta, fermi_energy](double x) {
    const double t = beta * (x - fermi_energy);
    if (t > 0.0) {
      const double e = std::exp(-t);
      return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(t));
  };
  auto df = [f, beta](double x) {
    const double n = f(x);
    return -beta * n * (1.0 - n);
  };
  return Symbol("fermi", f, df, detail::kRealLine, {}, [f](Interval on) { return Interval{f(on.hi), f(on.lo)}; });
}

// Binary entropy h1(x) = -x log2 x - (1 - x) log2 (1 - x), with 0 log 0 = 0.
inline Symbol von_neumann() {
  auto f = [](double x) {
    x = detail::clamp_unit(x, "von_neumann");
    double h = 0.0;
    if (x > 0.0) h -= x * std::log2(x);
    if (x < 1.0) h -= (1.0 - x) * std::log2(1.0 - x);
    return h;
  };
  auto df = [](double x) {
    x = detail::clamp_unit(x, "von_neumann");
    return std::log2((1.0 - x) / x);
  };
  return Symbol("von_neumann", f, df, {0.0, 1.0}, {},
                [f](Interval on) { return detail::unimodal_unit_range(f, on); });
}

// Renyi entropy function r_alpha(x) = log2(x^alpha + (1 - x)^alpha) / (1 - alpha);
// alpha = 1 is the von Neumann limit.
inline Symbol renyi(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("alpha", "must be a finite positive number");
  if (alpha == 1.0) return von_neumann();
  auto f = [alpha](double x) {
    x = detail::clamp_unit(x, "renyi");
    if (x == 0.0 || x == 1.0) return 0.0;
    return std::log2(std::pow(x, alpha) + std::pow(1.0 - x, alpha)) / (1.0 - alpha);
  };
  auto df = [alpha](double x) {
    x = detail::clamp_unit(x, "renyi");
    const double pa = std::pow(x, alpha), qa = std::pow(1.0 - x, alpha);
    const double num = alpha * (std::pow(x, alpha - 1.0) - std::pow(1.0 - x, alpha - 1.0));
    return num / ((1.0 - alpha) * std::numbers::ln2 * (pa + qa));
  };
  return Symbol("renyi", f, df, {0.0, 1.0}, {}, [f](Interval on) { return detail::unimodal_unit_range(f, on); });
}

// (x - x0)^{-1}; admissible on intervals not containing x0.
inline Symbol resolvent(double x0) {
  auto f = [x0](double x) { return 1.0 / (x - x0); };
  auto df = [x0](double x) { return -1.0 / ((x - x0) * (x - x0)); };
  return Symbol(
      "resolvent", f, df, detail::kRealLine, {}, [f](Interval on) { return detail::hull(f(on.lo), f(on.hi)); },
      [x0](Interval on) { return x0 < on.lo || x0 > on.hi; });
}

// log(x - x0); admissible on intervals strictly to the right of x0.
inline Symbol log_shift(double x0) {
  auto f = [x0](double x) { return std::log(x - x0); };
  auto df = [x0](double x) { return 1.0 / (x - x0); };
  return Symbol(
      "log_shift", f, df, {x0, detail::kInf}, {}, [f](Interval on) { return Interval{f(on.lo), f(on.hi)}; },
      [x0](Interval on) { return x0 < on.lo; });
}

// Indicator of (-inf, E]; counts eigenvalues not exceeding E. No derivative.
inline Symbol indicator(double energy) {
  auto f = [energy](double x) { return x <= energy ? 1.0 : 0.0; };
  return Symbol("indicator", f, Symbol::Fn{}, detail::kRealLine, {Smoothness::discontinuous, 0.0},
                [f](Interval on) { return detail::hull(f(on.lo), f(on.hi)); });
}

// gamma = phi o a. When `on` is given the composite is restricted to that
// interval (e.g. the spectral bound K) and compatibility is checked there;
// otherwise over the whole domain of a.
inline Symbol compose(const Symbol& phi, const Symbol& a, std::optional<Interval> on = std::nullopt) {
  const Interval dom = on.value_or(a.domain());
  a.require_admits(dom, "inner symbol of composition");
  const Interval a_range = a.range(dom);
  if (!phi.admits(a_range)) {
    std::ostringstream os;
    os << "range [" << a_range.lo << ", " << a_range.hi << "] of '" << a.name() << "' is not inside the domain of '"
       << phi.name() << "'";
    throw DomainError(os.str());
  }
  Symbol::Fn df;
  if (phi.has_derivative() && a.has_derivative())
    df = [phi, a](double x) { return phi.derivative(a(x)) * a.derivative(x); };
  const SmoothnessClass smooth = phi.smoothness().weaker_than(a.smoothness()) ? phi.smoothness() : a.smoothness();
  return Symbol(
      phi.name() + "∘" + a.name(), [phi, a](double x) { return phi(a(x)); }, std::move(df), dom, smooth,
      [phi, a](Interval iv) { return phi.range(a.range(iv)); },
      [a, dom](Interval iv) { return dom.contains(iv) && a.admits(iv); });
}

// c1 phi1 + c2 phi2 (used for linearity checks of the trace functional).
inline Symbol linear_combination(double c1, const Symbol& s1, double c2, const Symbol& s2) {
  Symbol::Fn df;
  if (s1.has_derivative() && s2.has_derivative())
    df = [=](double x) { return c1 * s1.derivative(x) + c2 * s2.derivative(x); };
  auto f = [=](double x) { return c1 * s1(x) + c2 * s2(x); };
  const Interval dom{std::max(s1.domain().lo, s2.domain().lo), std::min(s1.domain().hi, s2.domain().hi)};
  const SmoothnessClass smooth = s1.smoothness().weaker_than(s2.smoothness()) ? s1.smoothness() : s2.smoothness();
  return Symbol(
      "combination", f, std::move(df), dom, smooth, [f](Interval on) { return detail::sampled_range(f, on); },
      [s1, s2](Interval on) { return s1.admits(on) && s2.admits(on); });
}

// Outcome of the Fourier-decay diagnostic.
struct FourierDecay {
  bool polynomial_decay = true;  // false for discontinuous symbols
  double exponent = 0.0;         // fitted p in |F(k)| ~ k^{-p}; +inf when no frequency is above the floor
  double residual = 0.0;         // RMS residual of the log-log fit
  double max_nonzero_magnitude = 0.0;
  std::size_t fitted_points = 0;
  std::string note;
};

namespace detail {

inline void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const auto u = a[i + j];
        const auto v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// C-infinity transition: 0 for t <= 0, 1 for t >= 1.
inline double smooth_step(double t) noexcept {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

}  // namespace detail

// Samples s times a smooth window on `window` (flat on the middle half,
// vanishing with all derivatives at the ends), takes the DFT of the periodic
// grid and fits log|F(k)| against log k on the frequencies above the roundoff
// floor.
inline FourierDecay fourier_decay_probe(const Symbol& s, Interval window, std::size_t grid_size = 1u << 14) {
  if (grid_size < 16 || (grid_size & (grid_size - 1)) != 0)
    throw ValidationError("grid_size", "must be a power of two >= 16");
  if (!(window.hi > window.lo)) throw ValidationError("window", "must have positive width");
  s.require_admits(window, "Fourier probe window");

  const double width = window.hi - window.lo;
  const double ramp = 0.25 * width;
  std::vector<std::complex<double>> g(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double x = window.lo + width * static_cast<double>(i) / static_cast<double>(grid_size);
    const double w = detail::smooth_step((x - window.lo) / ramp) * detail::smooth_step((window.hi - x) / ramp);
    g[i] = w == 0.0 ? 0.0 : s(x) * w;
  }
  detail::fft_inplace(g);

  const std::size_t half = grid_size / 2;
  std::vector<double> mag(half);
  for (std::size_t k = 0; k < half; ++k) mag[k] = std::abs(g[k]) / static_cast<double>(grid_size);

  FourierDecay out;
  const double scale = *std::max_element(mag.begin(), mag.end());
  for (std::size_t k = 1; k < half; ++k) out.max_nonzero_magnitude = std::max(out.max_nonzero_magnitude, mag[k]);
  if (s.smoothness().tag == Smoothness::discontinuous) {
    out.polynomial_decay = false;
    out.note = "no polynomial decay (discontinuous symbol)";
  }

  const double floor = std::max(1e-13 * scale, std::numeric_limits<double>::min());
  std::vector<double> lx, ly;
  for (std::size_t k = 1; k < half; ++k) {
    if (mag[k] <= floor) break;
    lx.push_back(std::log(static_cast<double>(k)));
    ly.push_back(std::log(mag[k]));
  }
  out.fitted_points = lx.size();
  if (lx.size() < 2) {
    out.exponent = detail::kInf;
    if (out.note.empty()) out.note = "no frequency above the roundoff floor";
    return out;
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  const double slope = sxy / sxx;
  double ss = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (my + slope * (lx[i] - mx));
    ss += r * r;
  }
  out.exponent = -slope;
  out.residual = std::sqrt(ss / n);
  return out;
}

}  // namespace szego
