#include <gtest/gtest.h>

#include <atomic>
#include <set>
#include <stdexcept>
#include <vector>

#include "szego/core.hpp"
#include "szego/parallel.hpp"
#include "szego/rng.hpp"

using namespace szego;

TEST(CompensatedSum, RecoversCancelledUnit) {
  const std::vector<double> xs{1e16, 1.0, -1e16};
  EXPECT_EQ(compensated_sum(xs), 1.0);
  double naive = 0.0;
  for (double x : xs) naive += x;
  EXPECT_NE(naive, 1.0);
}

TEST(CompensatedSum, ManySmallTerms) {
  CompensatedSum s;
  for (int i = 0; i < 1000000; ++i) s += 0.1;
  EXPECT_NEAR(s.value(), 100000.0, 1e-9);
}

TEST(Interval, Containment) {
  const Interval k{-3.0, 3.0};
  EXPECT_TRUE(k.contains(0.0));
  EXPECT_TRUE(k.contains(-3.0));
  EXPECT_FALSE(k.contains(3.5));
  EXPECT_TRUE(k.contains(Interval{-1.0, 2.0}));
  EXPECT_FALSE(k.contains(Interval{-1.0, 4.0}));
  EXPECT_DOUBLE_EQ(k.width(), 6.0);
}

TEST(Errors, ValidationErrorCarriesField) {
  const ValidationError e("clt.n", "must be >= 30");
  EXPECT_EQ(e.field(), "clt.n");
  EXPECT_EQ(e.message(), "must be >= 30");
  EXPECT_STREQ(e.what(), "clt.n: must be >= 30");
}

TEST(Errors, ConvergenceErrorReportsOrder) {
  const ConvergenceError e(12, 3, "seed 7");
  EXPECT_EQ(e.order(), 12u);
  EXPECT_EQ(e.index(), 3u);
  EXPECT_NE(std::string(e.what()).find("seed 7"), std::string::npos);
}

TEST(CounterStream, DeterministicAndOrderFree) {
  const CounterStream s(1234);
  std::vector<double> fwd, bwd(100);
  for (int i = 0; i < 100; ++i) fwd.push_back(s.uniform(i));
  for (int i = 99; i >= 0; --i) bwd[i] = s.uniform(i);
  EXPECT_EQ(fwd, bwd);
  for (double u : fwd) {
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(CounterStream, SubstreamsDiffer) {
  const CounterStream s(99);
  std::set<std::uint64_t> keys{s.key(), s.substream(0).key(), s.substream(1).key(), s.substream(2).key()};
  EXPECT_EQ(keys.size(), 4u);
  EXPECT_NE(s.substream(1).uniform(0), s.substream(2).uniform(0));
}

TEST(CounterStream, UniformMoments) {
  const CounterStream s(7);
  const int n = 200000;
  double m = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform(i);
    m += u;
    m2 += u * u;
  }
  m /= n;
  m2 /= n;
  EXPECT_NEAR(m, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(m2 - m * m, 1.0 / 12.0, 0.002);
}

TEST(SeedPolicy, StreamsPerRealization) {
  const SeedPolicy a{42}, b{42}, c{43};
  EXPECT_EQ(a.stream(7).key(), b.stream(7).key());
  EXPECT_NE(a.stream(7).key(), a.stream(8).key());
  EXPECT_NE(a.stream(7).key(), c.stream(7).key());
}

TEST(ParallelMap, IndexOrderedForAnyWorkerCount) {
  auto fn = [](std::size_t i) { return static_cast<double>(i * i) + 0.5; };
  const auto ref = parallel_map(257, Parallelism{1}, fn);
  for (unsigned t : {2u, 3u, 8u}) EXPECT_EQ(parallel_map(257, Parallelism{t}, fn), ref);
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_EQ(ref[i], fn(i));
}

TEST(ParallelMap, EmptyAndSingle) {
  EXPECT_TRUE(parallel_map(0, Parallelism{4}, [](std::size_t) { return 1; }).empty());
  EXPECT_EQ(parallel_map(1, Parallelism{4}, [](std::size_t) { return 5; }).at(0), 5);
}

TEST(ParallelMap, RethrowsTaskError) {
  for (unsigned t : {1u, 4u}) {
    EXPECT_THROW(parallel_map(50, Parallelism{t},
                              [](std::size_t i) -> int {
                                if (i == 17) throw std::runtime_error("boom");
                                return 0;
                              }),
                 std::runtime_error);
  }
}

TEST(Parallelism, ResolvesDefault) {
  EXPECT_GE(Parallelism{}.resolved(), 1u);
  EXPECT_EQ(Parallelism{3}.resolved(), 3u);
}
