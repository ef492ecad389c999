#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "szego/estimators.hpp"

using namespace szego;

namespace {

const PotentialDistribution kUniform = PotentialDistribution::uniform(1.0);
const PotentialDistribution kFree = PotentialDistribution::constant(0.0);

Symbol gamma_default() { return compose(renyi(2.0), fermi(3.0, 0.0), Interval{-3.0, 3.0}); }

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) xs.push_back(lo + (hi - lo) * i / (n - 1));
  return xs;
}

}  // namespace

TEST(IdsCdf, FreeExamples) {
  const std::int64_t M = 100;
  const double N = 2.0 * M + 1.0;
  const std::vector<double> grid{0.0, 1.0};
  const auto est = ids_cdf(kFree, grid, M, 3, SeedPolicy{1});
  EXPECT_NEAR(est.values[0], 0.5, 1.0 / N);
  EXPECT_NEAR(est.values[1], 2.0 / 3.0, 1.0 / N);
  EXPECT_EQ(est.standard_errors[0], 0.0);
  EXPECT_EQ(est.box_size, 201u);
  EXPECT_NEAR(free_ids(1.0), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(free_ids(0.0), 0.5);
  EXPECT_EQ(free_ids(-3.0), 0.0);
  EXPECT_EQ(free_ids(2.5), 1.0);
}

TEST(IdsCdf, OutsideSpectralBound) {
  for (const auto& d : {kUniform, PotentialDistribution::bernoulli(1.5, 0.3)}) {
    const Interval K = spectral_bound(d);
    const std::vector<double> grid{K.lo - 1.0, K.lo - 1e-9, K.hi, K.hi + 1.0};
    const auto est = ids_cdf(d, grid, 40, 20, SeedPolicy{7});
    EXPECT_EQ(est.values[0], 0.0);
    EXPECT_EQ(est.values[1], 0.0);
    EXPECT_EQ(est.values[2], 1.0);
    EXPECT_EQ(est.values[3], 1.0);
  }
}

TEST(IdsCdf, MonotoneInEnergy) {
  const auto grid = linspace(-3.2, 3.2, 81);
  const auto est = ids_cdf(kUniform, grid, 64, 30, SeedPolicy{2});
  for (std::size_t k = 1; k < grid.size(); ++k) EXPECT_GE(est.values[k], est.values[k - 1]);
  for (double v : est.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(IdsCdf, FreeSupErrorAtLargeBox) {
  const auto grid = linspace(-2.0, 2.0, 41);
  const auto est = ids_cdf(kFree, grid, 512, 200, SeedPolicy{2718});
  double sup = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) sup = std::max(sup, std::abs(est.values[k] - free_ids(grid[k])));
  EXPECT_LE(sup, 0.02);
}

TEST(IdsCdf, RejectsBadInput) {
  const std::vector<double> bad{1.0, 0.0};
  EXPECT_THROW(ids_cdf(kUniform, bad, 10, 5, SeedPolicy{0}), ValidationError);
  const std::vector<double> ok{0.0};
  EXPECT_THROW(ids_cdf(kUniform, ok, 10, 0, SeedPolicy{0}), ValidationError);
  EXPECT_THROW(ids_cdf(kUniform, ok, -1, 5, SeedPolicy{0}), ValidationError);
}

TEST(IdsCdf, DeterministicAcrossThreads) {
  const auto grid = linspace(-3.0, 3.0, 13);
  const auto a = ids_cdf(kUniform, grid, 32, 40, SeedPolicy{5}, Parallelism{1});
  const auto b = ids_cdf(kUniform, grid, 32, 40, SeedPolicy{5}, Parallelism{4});
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.standard_errors, b.standard_errors);
}

TEST(SpectralAverage, Examples) {
  const auto c = spectral_average(kUniform, constant_symbol(0.3), 8, 50, SeedPolicy{1});
  EXPECT_EQ(c.mean, 0.3);
  EXPECT_EQ(c.standard_error, 0.0);
  const auto id = spectral_average(kUniform, identity_symbol(), 8, 4000, SeedPolicy{1});
  EXPECT_NEAR(id.mean, 0.0, 4.0 * id.standard_error);
  EXPECT_NEAR(id.standard_error, std::sqrt(1.0 / 3.0 / 4000.0), 0.1 * id.standard_error);
  const auto f = spectral_average(kFree, fermi(3.0, 0.0), 32, 10, SeedPolicy{1});
  EXPECT_NEAR(f.mean, 0.5, 1e-13);
  EXPECT_THROW(spectral_average(kUniform, identity_symbol(), 8, 0, SeedPolicy{1}), ValidationError);
}

TEST(CorrelationSum, ConstantIsExactlyZero) {
  const auto e = correlation_sum_sigma2(kUniform, constant_symbol(0.7), 10, 8, 2000, SeedPolicy{3});
  EXPECT_EQ(e.sigma2, 0.0);
  EXPECT_EQ(e.standard_error, 0.0);
  for (double c : e.autocovariances) EXPECT_EQ(c, 0.0);
}

TEST(CorrelationSum, IidDiagonal) {
  const auto e = correlation_sum_sigma2(kUniform, identity_symbol(), 20, 4, 40000, SeedPolicy{3});
  ASSERT_EQ(e.autocovariances.size(), 21u);
  ASSERT_EQ(e.partial_sums.size(), 21u);
  EXPECT_NEAR(e.autocovariances[0], 1.0 / 3.0, 0.01);
  for (std::size_t l = 1; l <= 20; ++l) EXPECT_NEAR(e.autocovariances[l], 0.0, 0.01) << l;
  EXPECT_GT(e.standard_error, 0.0);
  EXPECT_NEAR(e.sigma2, 1.0 / 3.0, 4.0 * e.standard_error);
  EXPECT_EQ(e.partial_sums.back(), e.sigma2);
  EXPECT_EQ(e.method, "correlation_sum");
}

TEST(CorrelationSum, DeterministicAcrossThreads) {
  const auto a = correlation_sum_sigma2(kUniform, gamma_default(), 10, 16, 600, SeedPolicy{8}, Parallelism{1});
  const auto b = correlation_sum_sigma2(kUniform, gamma_default(), 10, 16, 600, SeedPolicy{8}, Parallelism{3});
  EXPECT_EQ(a.sigma2, b.sigma2);
  EXPECT_EQ(a.standard_error, b.standard_error);
}

TEST(CorrelationSum, RejectsBadInput) {
  EXPECT_THROW(correlation_sum_sigma2(kUniform, identity_symbol(), 100, 4, 100, SeedPolicy{3}), ValidationError);
  EXPECT_THROW(correlation_sum_sigma2(kUniform, identity_symbol(), 5, -1, 100, SeedPolicy{3}), ValidationError);
  EXPECT_THROW(correlation_sum_sigma2(kUniform, log_shift(0.0), 5, 4, 100, SeedPolicy{3}), DomainError);
}

TEST(GaussLegendre, ExactForLowDegreePolynomials) {
  for (int n : {1, 2, 4, 8, 12}) {
    const auto g = gauss_legendre_unit(n);
    double wsum = 0.0;
    for (double w : g.weights) wsum += w;
    EXPECT_NEAR(wsum, 1.0, 1e-14);
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += g.weights[i] * std::pow(g.nodes[i], p);
      EXPECT_NEAR(s, 1.0 / (p + 1), 1e-14) << "n=" << n << " p=" << p;
    }
  }
  EXPECT_THROW(gauss_legendre_unit(0), ValidationError);
}

TEST(MartingaleA0, MatchesTraceDifference) {
  // A_0 equals Tr gamma(H) - Tr gamma(H with V_0 set to 0) on the window.
  const Symbol g = gamma_default();
  const auto rule = gauss_legendre_unit(12);
  for (std::uint64_t i = 0; i < 5; ++i) {
    const auto v = Realization(kUniform, SeedPolicy{11}, i).potential({-12, 12});
    auto v0 = v;
    v0[12] = 0.0;
    const double want = trace_function(eig_tridiagonal(build_hamiltonian(v)), g) -
                        trace_function(eig_tridiagonal(build_hamiltonian(v0)), g);
    EXPECT_NEAR(martingale_a0(v, g, rule), want, 1e-11) << i;
  }
}

TEST(MartingaleA0, IdentityGivesPotential) {
  const auto rule = gauss_legendre_unit(4);
  const auto v = Realization(kUniform, SeedPolicy{4}, 0).potential({-6, 6});
  EXPECT_NEAR(martingale_a0(v, identity_symbol(), rule), v[6], 1e-14);
  auto z = v;
  z[6] = 0.0;
  EXPECT_EQ(martingale_a0(z, gamma_default(), rule), 0.0);
}

TEST(MartingaleSigma2, IdentityGivesPotentialVariance) {
  MartingaleOptions opt;
  opt.window = 4;
  opt.quad_nodes = 4;
  opt.n_outer = 2000;
  opt.n_inner = 100;
  const auto e = martingale_sigma2(kUniform, identity_symbol(), opt, SeedPolicy{2718});
  // Each outer sample is V_0 - mean of n_inner draws, so E = Var(V_0)(1 + 1/n_inner).
  EXPECT_NEAR(e.sigma2, (1.0 / 3.0) * 1.01, 4.0 * e.standard_error);
  EXPECT_NEAR(e.inner_noise, (1.0 / 3.0) / 100.0, 0.0005);
  EXPECT_EQ(e.method, "martingale");
  EXPECT_TRUE(positivity_check(e).pass);
}

TEST(MartingaleSigma2, ConstantGivesZero) {
  MartingaleOptions opt;
  opt.window = 4;
  opt.n_outer = 20;
  opt.n_inner = 5;
  const auto e = martingale_sigma2(kUniform, constant_symbol(0.4), opt, SeedPolicy{1});
  EXPECT_EQ(e.sigma2, 0.0);
  EXPECT_FALSE(positivity_check(e).pass);
}

TEST(MartingaleSigma2, NonnegativeAndDeterministic) {
  MartingaleOptions opt;
  opt.window = 8;
  opt.n_outer = 16;
  opt.n_inner = 8;
  const auto a = martingale_sigma2(kUniform, gamma_default(), opt, SeedPolicy{6}, Parallelism{1});
  const auto b = martingale_sigma2(kUniform, gamma_default(), opt, SeedPolicy{6}, Parallelism{4});
  EXPECT_GE(a.sigma2, 0.0);
  EXPECT_EQ(a.sigma2, b.sigma2);
  EXPECT_EQ(a.standard_error, b.standard_error);
}

TEST(MartingaleSigma2, RejectsBadInput) {
  MartingaleOptions opt;
  EXPECT_THROW(martingale_sigma2(kUniform, indicator(0.0), opt, SeedPolicy{1}), ValidationError);
  opt.quad_nodes = 2;
  EXPECT_THROW(martingale_sigma2(kUniform, identity_symbol(), opt, SeedPolicy{1}), ValidationError);
  opt.quad_nodes = 8;
  opt.n_inner = 1;
  EXPECT_THROW(martingale_sigma2(kUniform, identity_symbol(), opt, SeedPolicy{1}), ValidationError);
}

TEST(PositivityCheck, Examples) {
  VarianceEstimate e;
  e.sigma2 = 0.1;
  e.standard_error = 0.01;
  EXPECT_TRUE(positivity_check(e).pass);
  EXPECT_NEAR(positivity_check(e).ratio, 10.0, 1e-12);
  e.sigma2 = 0.001;
  EXPECT_FALSE(positivity_check(e).pass);
  e.sigma2 = 0.0;
  e.standard_error = 0.0;
  EXPECT_FALSE(positivity_check(e).pass);
}

TEST(VarianceRoutes, AgreeForIdentity) {
  const auto corr = correlation_sum_sigma2(kUniform, identity_symbol(), 10, 2, 20000, SeedPolicy{31});
  MartingaleOptions opt;
  opt.window = 2;
  opt.quad_nodes = 4;
  opt.n_outer = 1000;
  opt.n_inner = 50;
  const auto mart = martingale_sigma2(kUniform, identity_symbol(), opt, SeedPolicy{31});
  const double debiased = mart.sigma2 - mart.inner_noise;
  EXPECT_NEAR(corr.sigma2, debiased, 4.0 * std::hypot(corr.standard_error, mart.standard_error));
}
