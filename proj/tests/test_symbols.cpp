#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "szego/rng.hpp"
#include "szego/symbols.hpp"

using namespace szego;

namespace {

// Grid of n points in [lo, hi], endpoints included.
std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) xs.push_back(lo + (hi - lo) * i / (n - 1));
  return xs;
}

void expect_derivative_matches_fd(const Symbol& s, double lo, double hi) {
  const double h = 1e-6;
  for (double x : grid(lo, hi, 100)) {
    const double fd = (s(x + h) - s(x - h)) / (2.0 * h);
    const double d = s.derivative(x);
    EXPECT_NEAR(d, fd, 1e-6 * (1.0 + std::abs(d))) << s.name() << " at " << x;
  }
}

}  // namespace

TEST(Symbols, Examples) {
  EXPECT_EQ(fermi(3.0, 0.0)(0.0), 0.5);
  EXPECT_NEAR(fermi(1.0, 0.0)(std::log(3.0)), 0.25, 1e-15);
  EXPECT_EQ(von_neumann()(0.5), 1.0);
  EXPECT_EQ(von_neumann()(0.0), 0.0);
  EXPECT_EQ(von_neumann()(1.0), 0.0);
  EXPECT_NEAR(von_neumann()(0.25), 0.811278124459132863909, 1e-15);
  EXPECT_NEAR(renyi(2.0)(0.5), 1.0, 1e-15);
  EXPECT_EQ(renyi(2.0)(0.0), 0.0);
  EXPECT_NEAR(renyi(2.0)(0.25), -std::log2(0.625), 1e-15);
  EXPECT_EQ(identity_symbol()(-1.75), -1.75);
  EXPECT_EQ(constant_symbol(0.3)(100.0), 0.3);
  EXPECT_EQ(polynomial({1.0, -2.0, 3.0})(2.0), 9.0);
  EXPECT_EQ(polynomial({})(5.0), 0.0);
  EXPECT_EQ(resolvent(5.0)(3.0), -0.5);
  EXPECT_NEAR(log_shift(-4.0)(-4.0 + std::exp(1.0)), 1.0, 1e-15);
  EXPECT_EQ(indicator(0.0)(0.0), 1.0);
  EXPECT_EQ(indicator(0.0)(1e-300), 0.0);
  EXPECT_TRUE(renyi(1.0).name() == "von_neumann");
}

TEST(Symbols, FermiIsStableForLargeArguments) {
  const Symbol f = fermi(50.0, 0.0);
  EXPECT_EQ(f(-100.0), 1.0);
  EXPECT_GE(f(100.0), 0.0);
  EXPECT_LT(f(100.0), 1e-300);
  EXPECT_TRUE(std::isfinite(f.derivative(100.0)));
}

TEST(Symbols, InvalidParameters) {
  EXPECT_THROW(fermi(-1.0, 0.0), ValidationError);
  EXPECT_THROW(fermi(0.0, 0.0), ValidationError);
  EXPECT_THROW(fermi(2.0, std::nan("")), ValidationError);
  EXPECT_THROW(renyi(0.0), ValidationError);
  EXPECT_THROW(renyi(-2.0), ValidationError);
  EXPECT_THROW(renyi(std::numeric_limits<double>::infinity()), ValidationError);
  try {
    fermi(-1.0, 0.0);
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "beta");
  }
}

TEST(Symbols, EntropyRejectsOutsideUnit) {
  EXPECT_THROW(von_neumann()(1.5), DomainError);
  EXPECT_THROW(renyi(2.0)(-0.1), DomainError);
  EXPECT_NO_THROW(von_neumann()(1.0 + 1e-13));
  EXPECT_NO_THROW(renyi(3.0)(-1e-13));
}

TEST(Symbols, DerivativesMatchFiniteDifferences) {
  expect_derivative_matches_fd(identity_symbol(), -3.0, 3.0);
  expect_derivative_matches_fd(constant_symbol(2.0), -3.0, 3.0);
  expect_derivative_matches_fd(polynomial({0.5, -1.0, 0.25, 0.1}), -3.0, 3.0);
  expect_derivative_matches_fd(fermi(3.0, 0.0), -3.0, 3.0);
  expect_derivative_matches_fd(fermi(0.7, 1.2), -3.0, 3.0);
  expect_derivative_matches_fd(von_neumann(), 0.01, 0.99);
  expect_derivative_matches_fd(renyi(2.0), 0.01, 0.99);
  expect_derivative_matches_fd(renyi(0.5), 0.01, 0.99);
  expect_derivative_matches_fd(renyi(3.5), 0.01, 0.99);
  expect_derivative_matches_fd(resolvent(4.0), -3.0, 3.0);
  expect_derivative_matches_fd(log_shift(-4.0), -3.0, 3.0);
  expect_derivative_matches_fd(compose(renyi(2.0), fermi(3.0, 0.0)), -3.0, 3.0);
}

TEST(Symbols, BoundsOnFineGrid) {
  const auto xs = grid(-6.0, 6.0, 10000);
  const auto us = grid(0.0, 1.0, 10000);
  for (double x : xs) {
    const double n = fermi(3.0, 0.2)(x);
    ASSERT_GE(n, 0.0);
    ASSERT_LE(n, 1.0);
    ASSERT_LE(fermi(3.0, 0.2).derivative(x), 0.0);
  }
  for (double u : us) {
    for (const Symbol& s : {von_neumann(), renyi(0.5), renyi(2.0), renyi(3.0)}) {
      const double h = s(u);
      ASSERT_GE(h, -1e-15) << s.name();
      ASSERT_LE(h, 1.0 + 1e-15) << s.name();
    }
    // Renyi entropies decrease in alpha.
    ASSERT_GE(renyi(0.5)(u) + 1e-14, von_neumann()(u));
    ASSERT_GE(von_neumann()(u) + 1e-14, renyi(2.0)(u));
    ASSERT_GE(renyi(2.0)(u) + 1e-14, renyi(3.0)(u));
  }
}

TEST(Symbols, RangeMatchesSampledValues) {
  const Symbol g = compose(renyi(2.0), fermi(3.0, 0.0));
  const Interval K{-3.0, 3.0};
  const Interval r = g.range(K);
  double lo = 1e300, hi = -1e300;
  for (double x : grid(K.lo, K.hi, 10001)) {
    lo = std::min(lo, g(x));
    hi = std::max(hi, g(x));
  }
  EXPECT_NEAR(r.lo, lo, 1e-12);
  EXPECT_NEAR(r.hi, hi, 1e-12);
  const Interval fr = fermi(3.0, 0.0).range(K);
  EXPECT_LT(fr.lo, fr.hi);
  EXPECT_EQ(fr.lo, fermi(3.0, 0.0)(3.0));
  EXPECT_EQ(constant_symbol(0.4).range(K).lo, 0.4);
  EXPECT_EQ(polynomial({1.5}).range(K).hi, 1.5);
}

TEST(Symbols, RenyiApproachesVonNeumann) {
  for (double alpha : {1.0 - 1e-4, 1.0 + 1e-4}) {
    const Symbol r = renyi(alpha);
    for (double u : grid(0.0, 1.0, 201)) EXPECT_NEAR(r(u), von_neumann()(u), 1e-3);
  }
}

TEST(Symbols, ChainRuleForRandomPairs) {
  const CounterStream s(314);
  std::int64_t c = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const double beta = 0.5 + 5.0 * s.uniform(c++);
    const double ef = 2.0 * s.uniform(c++) - 1.0;
    const double alpha = 0.3 + 3.0 * s.uniform(c++);
    const Symbol a = fermi(beta, ef);
    const Symbol phi = alpha == 1.0 ? von_neumann() : renyi(alpha);
    const Symbol g = compose(phi, a, Interval{-3.0, 3.0});
    for (double x : grid(-2.5, 2.5, 25)) {
      const double want = phi.derivative(a(x)) * a.derivative(x);
      EXPECT_NEAR(g.derivative(x), want, 1e-12 * (1.0 + std::abs(want)));
      EXPECT_EQ(g(x), phi(a(x)));
    }
  }
}

TEST(Symbols, ComposeChecksDomain) {
  EXPECT_THROW(compose(von_neumann(), identity_symbol(), Interval{-3.0, 3.0}), DomainError);
  EXPECT_THROW(compose(renyi(2.0), polynomial({0.0, 2.0}), Interval{0.0, 1.0}), DomainError);
  EXPECT_THROW(compose(log_shift(0.0), identity_symbol(), Interval{-1.0, 1.0}), DomainError);
  EXPECT_NO_THROW(compose(log_shift(-4.0), identity_symbol(), Interval{-3.0, 3.0}));
  EXPECT_NO_THROW(compose(von_neumann(), fermi(1.0, 0.0), Interval{-3.0, 3.0}));
  EXPECT_THROW(compose(identity_symbol(), resolvent(0.0), Interval{-1.0, 1.0}), DomainError);
}

TEST(Symbols, ComposeSmoothnessAndDerivative) {
  const Symbol g = compose(identity_symbol(), indicator(0.0));
  EXPECT_FALSE(g.has_derivative());
  EXPECT_EQ(g.smoothness().tag, Smoothness::discontinuous);
  EXPECT_THROW(g.derivative(0.5), DomainError);
  EXPECT_EQ(compose(renyi(2.0), fermi(3.0, 0.0)).smoothness().tag, Smoothness::analytic);
}

TEST(Symbols, AdmissibilityOfSingularSymbols) {
  EXPECT_TRUE(resolvent(4.0).admits({-3.0, 3.0}));
  EXPECT_FALSE(resolvent(0.0).admits({-3.0, 3.0}));
  EXPECT_TRUE(resolvent(-3.5).admits({-3.0, 3.0}));
  EXPECT_TRUE(log_shift(-4.0).admits({-3.0, 3.0}));
  EXPECT_FALSE(log_shift(-3.0).admits({-3.0, 3.0}));
  EXPECT_FALSE(von_neumann().admits({-0.5, 0.5}));
  EXPECT_TRUE(von_neumann().admits({0.0, 1.0}));
  EXPECT_THROW(resolvent(0.0).require_admits({-1.0, 1.0}), DomainError);
}

TEST(Symbols, IndicatorHasNoDerivative) {
  const Symbol s = indicator(0.5);
  EXPECT_FALSE(s.has_derivative());
  EXPECT_THROW(s.derivative(0.0), DomainError);
  EXPECT_EQ(s.smoothness().tag, Smoothness::discontinuous);
}

TEST(Symbols, LinearCombination) {
  const Symbol s = linear_combination(2.0, renyi(2.0), -0.5, von_neumann());
  for (double u : grid(0.01, 0.99, 50)) {
    EXPECT_NEAR(s(u), 2.0 * renyi(2.0)(u) - 0.5 * von_neumann()(u), 1e-15);
    EXPECT_NEAR(s.derivative(u), 2.0 * renyi(2.0).derivative(u) - 0.5 * von_neumann().derivative(u), 1e-12);
  }
  EXPECT_EQ(s.domain().lo, 0.0);
  EXPECT_EQ(s.domain().hi, 1.0);
  EXPECT_FALSE(linear_combination(1.0, identity_symbol(), 1.0, indicator(0.0)).has_derivative());
}

TEST(FourierProbe, SmoothSymbolDecaysFast) {
  const auto fd = fourier_decay_probe(fermi(3.0, 0.0), {-3.0, 3.0});
  EXPECT_TRUE(fd.polynomial_decay);
  EXPECT_GT(fd.exponent, 2.0);
  EXPECT_GE(fd.fitted_points, 2u);
  const auto gd = fourier_decay_probe(compose(renyi(2.0), fermi(3.0, 0.0)), {-3.0, 3.0});
  EXPECT_GT(gd.exponent, 2.0);
}

TEST(FourierProbe, IndicatorHasNoPolynomialDecay) {
  const auto fd = fourier_decay_probe(indicator(0.0), {-3.0, 3.0});
  EXPECT_FALSE(fd.polynomial_decay);
  EXPECT_NE(fd.note.find("no polynomial decay"), std::string::npos);
}

TEST(FourierProbe, ZeroSymbolHasNoSpectrum) {
  // The zero symbol has an identically zero transform.
  const auto z = fourier_decay_probe(constant_symbol(0.0), {-3.0, 3.0});
  EXPECT_EQ(z.max_nonzero_magnitude, 0.0);
  EXPECT_EQ(z.fitted_points, 0u);
  EXPECT_TRUE(std::isinf(z.exponent));
}

TEST(FourierProbe, RejectsBadArguments) {
  EXPECT_THROW(fourier_decay_probe(fermi(3.0, 0.0), {-3.0, 3.0}, 1000), ValidationError);
  EXPECT_THROW(fourier_decay_probe(fermi(3.0, 0.0), {1.0, 1.0}), ValidationError);
  EXPECT_THROW(fourier_decay_probe(log_shift(0.0), {-1.0, 1.0}), DomainError);
}

TEST(Symbols, CatalogueExamples) {
  EXPECT_EQ(fermi(1.0, 0.0)(0.0), 0.5);
  EXPECT_LT(fermi(2.0, 0.5)(1e3), 1e-300);
  EXPECT_EQ(fermi(2.0, 0.5)(-1e3), 1.0);
  EXPECT_EQ(renyi(1.0)(0.5), 1.0);
  EXPECT_EQ(renyi(0.5)(0.0), 0.0);
  EXPECT_EQ(renyi(3.0)(0.0), 0.0);
  EXPECT_NEAR(von_neumann()(0.25), 2.0 - 0.75 * std::log2(3.0), 1e-15);
  EXPECT_EQ(identity_symbol()(3.2), 3.2);
  EXPECT_EQ(resolvent(10.0)(2.0), -0.125);
  EXPECT_EQ(indicator(0.0)(-1.0), 1.0);
  EXPECT_EQ(indicator(0.0)(1.0), 0.0);
  EXPECT_EQ(compose(identity_symbol(), fermi(1.0, 0.0))(0.0), 0.5);
  EXPECT_NEAR(compose(renyi(2.0), fermi(3.0, 0.7))(0.7), 1.0, 1e-15);
}

TEST(FourierProbe, FermiOnWiderWindow) {
  EXPECT_GT(fourier_decay_probe(fermi(3.0, 0.0), {-4.0, 4.0}).exponent, 2.0);
}
