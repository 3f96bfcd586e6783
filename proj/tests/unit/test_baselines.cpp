#include <cmath>
#include <numbers>
#include <numeric>

#include <gtest/gtest.h>

#include "aquad/baselines.hpp"

namespace aquad {
namespace {

TargetDensity constant_target(double c) {
  return TargetDensity("const", BoxSupport({-1.0, 0.0}, {1.0, 3.0}), [c](std::span<const double>) { return std::log(c); });
}

TEST(IsUniform, ConstantTargetIsExact) {
  auto t = constant_target(0.5);
  Rng rng(1);
  auto r = is_uniform(t, 50, rng);
  EXPECT_NEAR(r.z.value, 3.0, 1e-12);
  EXPECT_EQ(r.evaluations, 50u);
  EXPECT_EQ(t.eval_count(), 50u);
}

TEST(IsUniform, SingleSample) {
  auto t = make_banana_target(2);
  Rng rng(2), copy(2);
  auto r = is_uniform(t, 1, rng);
  Vector x = uniform_in_box(t.support(), copy);
  double expect = 400.0 * std::exp(banana_log_density(as_span(x), 2));
  EXPECT_NEAR(r.z.value, expect, 1e-12 * std::max(expect, 1e-300));
}

TEST(IsUniform, UnbiasedOnOneDimensionalGaussian) {
  auto t = TargetDensity("n", BoxSupport({-5.0}, {5.0}), [](std::span<const double> x) { return -0.5 * x[0] * x[0]; });
  const double truth = std::sqrt(2 * std::numbers::pi) * std::erf(5.0 / std::sqrt(2.0));
  const int seeds = 10000;
  std::vector<double> z(seeds);
  for (int s = 0; s < seeds; ++s) {
    Rng rng(1000 + s);
    z[s] = is_uniform(t, 20, rng).z.value;
  }
  double mean = std::accumulate(z.begin(), z.end(), 0.0) / seeds;
  double var = 0.0;
  for (double v : z) var += (v - mean) * (v - mean);
  double se = std::sqrt(var / (seeds - 1) / seeds);
  EXPECT_LT(std::abs(mean - truth), 3 * se);
}

TEST(Mh, IndependentUniformAcceptsEverything) {
  auto t = constant_target(2.0);
  Rng rng(3);
  auto r = mh_chain(t, MhKind::independent, 200, 1.0, rng);
  EXPECT_DOUBLE_EQ(r.acceptance_rate, 1.0);
  EXPECT_EQ(r.chain.size(), 200u);
  EXPECT_EQ(t.eval_count(), 200u);
}

TEST(Mh, RandomWalkGaussianMean) {
  auto t = TargetDensity("n", BoxSupport({-50.0}, {50.0}), [](std::span<const double> x) { return -0.5 * x[0] * x[0]; });
  Rng rng(4);
  const std::size_t E = 100000;
  auto r = mh_chain(t, MhKind::random_walk, E, 2.4, rng);
  EXPECT_EQ(r.evaluations, E);
  // Integrated autocorrelation time of RW-MH at this scale is about 3-4.
  double ess = E / 8.0;
  EXPECT_LT(std::abs(r.moments.mean[0]), 3.0 / std::sqrt(ess));
  EXPECT_NEAR(r.moments.variance[0], 1.0, 0.1);
}

TEST(Mh, RandomWalkHistogramMatchesTarget) {
  auto t = TargetDensity("n", BoxSupport({-6.0}, {6.0}), [](std::span<const double> x) { return -0.5 * x[0] * x[0]; });
  Rng rng(5);
  const std::size_t E = 100000;
  auto r = mh_chain(t, MhKind::random_walk, E, 2.4, rng);
  const double edges[] = {-6, -2, -1, -0.5, 0, 0.5, 1, 2, 6};
  const int bins = 8;
  std::vector<double> counts(bins, 0.0);
  for (std::size_t i = 0; i < r.chain.size(); ++i) {
    double x = r.chain.row(i)[0];
    for (int b = 0; b < bins; ++b)
      if (x >= edges[b] && x < edges[b + 1]) counts[b] += 1;
  }
  auto Phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  double norm = Phi(6) - Phi(-6);
  double chi2 = 0.0;
  for (int b = 0; b < bins; ++b) {
    double expect = E * (Phi(edges[b + 1]) - Phi(edges[b])) / norm;
    chi2 += (counts[b] - expect) * (counts[b] - expect) / expect;
  }
  // Correlated samples inflate chi2 by roughly the autocorrelation time.
  EXPECT_LT(chi2 / 8.0, 24.3);
}

TEST(Mh, ChainStaysInSupport) {
  auto t = make_banana_target(2);
  Rng rng(6);
  auto r = mh_chain(t, MhKind::random_walk, 500, 5.0, rng);
  for (std::size_t i = 0; i < r.chain.size(); ++i) EXPECT_TRUE(t.support().contains(r.chain.row(i)));
  EXPECT_EQ(t.eval_count(), 500u);
}

}  // namespace
}  // namespace aquad
