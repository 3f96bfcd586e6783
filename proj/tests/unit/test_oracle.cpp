#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "aquad/errors.hpp"
#include "aquad/oracle.hpp"

namespace aquad {
namespace {

TargetDensity unit_gaussian(int dim) {
  return TargetDensity("g", BoxSupport::cube(dim, -10, 10), [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return -0.5 * s;
  });
}

TEST(GridTruth, TruncatedGaussianAnalytic) {
  auto t = unit_gaussian(2);
  auto g = grid_truth(t, 1000);
  double one = std::sqrt(2 * std::numbers::pi) * std::erf(10 / std::sqrt(2.0));
  EXPECT_NEAR(g.z, one * one, 1e-6);
  EXPECT_NEAR(g.mean[0], 0.0, 1e-12);
  EXPECT_NEAR(g.variance[1], 1.0, 1e-6);
  EXPECT_GE(g.z_error, 0.0);
}

TEST(GridTruth, SecondOrderRefinement) {
  auto t = TargetDensity("g", BoxSupport::cube(1, -1, 2), [](std::span<const double> x) { return -x[0] * x[0]; });
  const double exact = 0.5 * std::sqrt(std::numbers::pi) * (std::erf(2.0) + std::erf(1.0));
  double e1 = std::abs(grid_truth(t, 50).z - exact);
  double e2 = std::abs(grid_truth(t, 100).z - exact);
  EXPECT_NEAR(e1 / e2, 4.0, 0.2);
}

TEST(GridTruth, RefusesHighDimension) {
  auto t = unit_gaussian(5);
  EXPECT_THROW(grid_truth(t, 10), Unsupported);
}

TEST(QmcTruth, AgreesWithGrid) {
  auto t = unit_gaussian(3);
  auto q = qmc_truth(t, 1 << 20, 1);
  double one = std::sqrt(2 * std::numbers::pi);
  EXPECT_NEAR(q.z / std::pow(one, 3), 1.0, 0.02);
}

TEST(GridTruth, JsonRoundTrip) {
  auto g = grid_truth(unit_gaussian(1), 100);
  auto back = truth_from_json(to_json(g));
  EXPECT_EQ(back.z, g.z);
  EXPECT_EQ(back.mean[0], g.mean[0]);
  EXPECT_EQ(back.resolution, g.resolution);
}

TEST(RelMse, Trivial) {
  EXPECT_DOUBLE_EQ(rel_mse(std::vector<double>{2.0, 2.0}, 2.0).value, 0.0);
  EXPECT_DOUBLE_EQ(rel_mse(std::vector<double>{4.0}, 2.0).value, 1.0);
  const double eps = 0.1;
  EXPECT_NEAR(rel_mse(std::vector<double>{1 + eps, 1 - eps, 1 + eps, 1 - eps}, 1.0).value, eps * eps, 1e-15);
}

TEST(RelMse, VectorAveragesComponents) {
  Vector truth(2);
  truth << 1.0, 2.0;
  Vector e(2);
  e << 2.0, 2.0;
  EXPECT_DOUBLE_EQ(rel_mse({e}, truth).value, 0.5);
}

TEST(RelMse, ZeroTruthFallsBackToAbsolute) {
  Vector truth(2);
  truth << 0.0, 1.0;
  Vector e(2);
  e << 0.5, 1.0;
  auto r = rel_mse({e}, truth);
  EXPECT_TRUE(r.absolute);
  EXPECT_DOUBLE_EQ(r.value, 0.125);
}

}  // namespace
}  // namespace aquad
