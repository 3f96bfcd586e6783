#include <cmath>
#include <numbers>
#include <numeric>

#include <gtest/gtest.h>

#include "aquad/errors.hpp"
#include "aquad/kernels.hpp"

namespace aquad {
namespace {

TEST(GaussianKernel, PeakValue) {
  GaussianKernelSpec k{0.5, 2, true};
  EXPECT_NEAR(k.peak(), 1.0 / (2.0 * std::numbers::pi * 0.25), 1e-14);
  EXPECT_NEAR(k.log_peak(), std::log(k.peak()), 1e-14);
  std::vector<double> c{1.0, -1.0};
  EXPECT_NEAR(gaussian_eval(k, c, c), k.peak(), 1e-14);
}

TEST(GaussianKernel, UnnormalizedPeakIsOne) {
  GaussianKernelSpec k{2.0, 3, false};
  EXPECT_DOUBLE_EQ(k.peak(), 1.0);
}

TEST(GaussianKernel, RejectsBadBandwidth) {
  EXPECT_THROW((GaussianKernelSpec{0.0, 1, true}.validate()), InvalidArgument);
  EXPECT_THROW((GaussianKernelSpec{-1.0, 1, true}.validate()), InvalidArgument);
}

TEST(GaussianKernel, IntegratesToOne) {
  GaussianKernelSpec k{0.7, 1, true};
  std::vector<double> c{0.3};
  double s = 0.0, dx = 1e-3;
  for (double x = -10.0; x < 10.0; x += dx) {
    std::vector<double> p{x + 0.5 * dx};
    s += gaussian_eval(k, p, c) * dx;
  }
  EXPECT_NEAR(s, 1.0, 1e-9);
}

TEST(GaussianKernel, MomentIntegrals) {
  GaussianKernelSpec k{0.5, 2, true};
  std::vector<double> c{1.0, -2.0};
  auto m1 = gaussian_moment_integral(k, c, 1);
  auto m2 = gaussian_moment_integral(k, c, 2);
  EXPECT_DOUBLE_EQ(m1[0], 1.0);
  EXPECT_DOUBLE_EQ(m1[1], -2.0);
  EXPECT_NEAR(m2[0], 1.25, 1e-15);
  EXPECT_NEAR(m2[1], 4.25, 1e-15);
}

TEST(GaussHermite, OneDimensionalRule) {
  std::vector<double> z, w;
  GaussHermiteRule::one_dimensional(5, z, w);
  ASSERT_EQ(z.size(), 5u);
  EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-14);
  double m2 = 0, m4 = 0, m8 = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    m2 += w[i] * std::pow(z[i], 2);
    m4 += w[i] * std::pow(z[i], 4);
    m8 += w[i] * std::pow(z[i], 8);
  }
  EXPECT_NEAR(m2, 1.0, 1e-13);
  EXPECT_NEAR(m4, 3.0, 1e-13);
  EXPECT_NEAR(m8, 105.0, 1e-10);
}

TEST(GaussHermite, FourthMomentUnderKernel) {
  GaussianKernelSpec k{1.0, 1, true};
  std::vector<double> c{0.0};
  double v = gauss_hermite_integral(k, c, [](std::span<const double> x) { return std::pow(x[0], 4); });
  EXPECT_NEAR(v, 3.0, 1e-12);
}

TEST(GaussHermite, TensorProduct) {
  GaussHermiteRule rule(3, 4);
  EXPECT_EQ(rule.size(), 64u);
  double s = std::accumulate(rule.weights().begin(), rule.weights().end(), 0.0);
  EXPECT_NEAR(s, 1.0, 1e-13);
  EXPECT_THROW(GaussHermiteRule(GaussHermiteRule::max_dim + 1, 3), Unsupported);
}

TEST(NnKernel, Indicator) {
  NnKernelSpec k{2.0, BoxSupport::cube(1, 0, 1), false};
  NodeSet nodes(1, {0.2, 0.8});
  std::vector<double> x{0.3};
  EXPECT_EQ(nn_eval(k, x, nodes, 0), 1);
  EXPECT_EQ(nn_eval(k, x, nodes, 1), 0);
  std::vector<double> mid{0.5};
  EXPECT_EQ(nn_eval(k, mid, nodes, 0), 1);
}

TEST(Voronoi, TwoNodesSplitTheInterval) {
  NnKernelSpec k{2.0, BoxSupport::cube(1, 0, 1), false};
  NodeSet nodes(1, {0.25, 0.75});
  Rng rng(1);
  auto v = voronoi_build(k, nodes, 1 << 14, ProbeSampler::sobol, rng);
  EXPECT_NEAR(v.measures[0], 0.5, 1e-3);
  EXPECT_NEAR(v.measures[1], 0.5, 1e-3);
  EXPECT_EQ(v.probe_count(), std::size_t{1} << 14);
}

TEST(Voronoi, MeasuresPartitionTheVolume) {
  auto box = BoxSupport::cube(3, -2, 2);
  NnKernelSpec k{1.0, box, false};
  Rng rng(7);
  NodeSet nodes(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 30; ++i) {
    std::vector<double> x{u(rng), u(rng), u(rng)};
    nodes.push_back(x);
  }
  auto v = voronoi_build(k, nodes, 20000, ProbeSampler::monte_carlo, rng);
  double s = std::accumulate(v.measures.begin(), v.measures.end(), 0.0);
  EXPECT_NEAR(s, 64.0, 1e-9);
  std::size_t c = std::accumulate(v.counts.begin(), v.counts.end(), std::size_t{0});
  EXPECT_EQ(c, 20000u);
  for (std::size_t m = 0; m < 200; ++m) {
    EXPECT_EQ(nn_eval(k, v.probes.row(m), nodes, v.assignment[m]), 1);
  }
}

}  // namespace
}  // namespace aquad
