#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "aquad/errors.hpp"
#include "aquad/quadrature.hpp"

namespace aquad {
namespace {

NodeSet random_nodes(int dim, int n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  NodeSet nodes(dim);
  std::vector<double> x(dim);
  for (int i = 0; i < n; ++i) {
    for (auto& v : x) v = u(rng);
    nodes.push_back(x);
  }
  return nodes;
}

std::vector<double> gaussian_logs(const NodeSet& nodes) {
  std::vector<double> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double s = 0.0;
    for (double v : nodes.row(i)) s += (v - 0.5) * (v - 0.5);
    out.push_back(-0.5 * s);
  }
  return out;
}

InterpolantModel gaussian_model(int dim, int n, double h, std::uint64_t seed) {
  auto nodes = random_nodes(dim, n, -3, 3, seed);
  return fit(nodes, gaussian_logs(nodes), GaussianKernelSpec{h, dim, true});
}

TEST(ZHat, SignAndLog) {
  auto z = make_zhat(-2.0, 1.0);
  EXPECT_TRUE(z.negative);
  EXPECT_NEAR(z.value, -2.0 * std::exp(1.0), 1e-12);
  EXPECT_NEAR(z.log_abs, std::log(2.0) + 1.0, 1e-15);
}

TEST(ZHat, GaussianIsBetaSum) {
  auto m = gaussian_model(2, 20, 0.8, 1);
  auto z = z_hat(m);
  EXPECT_NEAR(z.value, m.beta().sum() * std::exp(m.shift()), 1e-12 * std::abs(z.value));
}

TEST(ZHat, NnNeedsMeasures) {
  auto nodes = random_nodes(2, 5, 0, 1, 3);
  NnKernelSpec k{2.0, BoxSupport::cube(2, 0, 1), false};
  auto m = fit(nodes, {0, 0, 0, 0, 0}, k);
  EXPECT_THROW(z_hat(m), MissingMeasures);
  Rng rng(1);
  auto v = voronoi_build(k, nodes, 1000, ProbeSampler::sobol, rng);
  EXPECT_NEAR(z_hat(m, &v).value, 1.0, 1e-12);
}

TEST(ZHat, StaleMeasuresRejected) {
  auto nodes = random_nodes(1, 4, 0, 1, 3);
  NnKernelSpec k{2.0, BoxSupport::cube(1, 0, 1), false};
  auto m = fit(nodes, {0, 0, 0, 0}, k);
  Rng rng(1);
  auto v = voronoi_build(k, nodes, 1000, ProbeSampler::sobol, rng);
  std::vector<double> x{0.123};
  auto m2 = extend(m, x, 0.0);
  EXPECT_THROW(z_hat(m2, &v), InvalidState);
}

TEST(ClosedForm, BetaAndNuFormsAgree) {
  for (int dim : {1, 2, 3}) {
    auto m = gaussian_model(dim, 25, 1.1, 10 + dim);
    for (int r : {1, 2}) {
      auto cf = i_hat_closed_form(m, r);
      for (int k = 0; k < dim; ++k) EXPECT_NEAR(cf.beta_form[k], cf.nu_form[k], 1e-10 * (1.0 + std::abs(cf.beta_form[k])));
    }
  }
}

TEST(ClosedForm, MatchesGaussHermite) {
  for (int dim : {1, 2, 4}) {
    auto m = gaussian_model(dim, 15, 0.9, 20 + dim);
    for (int r : {1, 2}) {
      auto cf = i_hat_closed_form(m, r).beta_form;
      auto gh = i_hat_gauss_hermite(m, MomentRequest::power(r), 5);
      for (int k = 0; k < dim; ++k) EXPECT_NEAR(cf[k], gh[k], 1e-12 * (1.0 + std::abs(cf[k])));
    }
  }
}

TEST(ClosedForm, UnnormalizedKernelUnsupported) {
  auto nodes = random_nodes(1, 3, 0, 1, 2);
  auto m = fit(nodes, {0, 0, 0}, GaussianKernelSpec{0.5, 1, false});
  EXPECT_THROW(i_hat_closed_form(m, 1), Unsupported);
}

TEST(KernelMc, ConvergesToClosedForm) {
  auto m = gaussian_model(2, 10, 1.0, 4);
  Rng rng(5);
  auto mc = i_hat_kernel_mc(m, MomentRequest::power(1), 200000, rng);
  auto cf = i_hat_closed_form(m, 1).beta_form;
  for (int k = 0; k < 2; ++k) EXPECT_NEAR(mc[k], cf[k], 0.02);
}

TEST(KernelIs, EstimatesKernelMeasures) {
  auto m = gaussian_model(1, 6, 0.5, 7);
  Rng rng(8);
  std::vector<std::shared_ptr<const Proposal>> qs{std::make_shared<UniformProposal>(BoxSupport::cube(1, -8, 8))};
  auto r = i_hat_kernel_is(m, MomentRequest::one(), qs, 200000, rng);
  for (double c : r.c_hat) EXPECT_NEAR(c, 1.0, 0.03);
  EXPECT_NEAR(r.z.value / z_hat(m).value, 1.0, 0.03);
}

TEST(Voronoi, SurrogateIsIsByteIdentical) {
  auto box = BoxSupport::cube(2, -2, 2);
  auto nodes = random_nodes(2, 40, -2, 2, 9);
  NnKernelSpec k{2.0, box, false};
  auto m = fit(nodes, gaussian_logs(nodes), k);
  Rng rng(10);
  auto v = voronoi_build(k, nodes, 5000, ProbeSampler::sobol, rng);
  for (auto req : {MomentRequest::one(), MomentRequest::power(1), MomentRequest::power(2)}) {
    auto a = voronoi_estimates(m, req, v);
    auto b = surrogate_is(m, req, box, v.probes);
    EXPECT_EQ(std::memcmp(&a.z.value, &b.z.value, sizeof(double)), 0);
    ASSERT_EQ(a.i_hat.size(), b.i_hat.size());
    EXPECT_EQ(std::memcmp(a.i_hat.data(), b.i_hat.data(), sizeof(double) * a.i_hat.size()), 0);
  }
}

TEST(Voronoi, OnePointFormConstantTarget) {
  auto box = BoxSupport::cube(1, 0, 4);
  auto nodes = random_nodes(1, 10, 0, 4, 2);
  NnKernelSpec k{2.0, box, false};
  auto m = fit(nodes, std::vector<double>(10, std::log(0.25)), k);
  Rng rng(1);
  auto v = voronoi_build(k, nodes, 1 << 12, ProbeSampler::sobol, rng);
  auto e = voronoi_estimates(m, MomentRequest::power(1), v, true);
  EXPECT_NEAR(e.z.value, 1.0, 1e-12);
}

TEST(Estimate, AutoRoutes) {
  Rng rng(1);
  auto g = gaussian_model(2, 10, 0.8, 3);
  auto rep = estimate(g, {MomentRequest::power(1)}, EstimateOptions{}, rng);
  EXPECT_EQ(rep.route, Route::closed_form);

  auto nodes = random_nodes(2, 10, 0, 1, 3);
  NnKernelSpec k{2.0, BoxSupport::cube(2, 0, 1), false};
  auto nn = fit(nodes, gaussian_logs(nodes), k);
  EstimateOptions o;
  o.M = 2000;
  auto r2 = estimate(nn, {MomentRequest::power(1)}, o, rng);
  EXPECT_EQ(r2.route, Route::voronoi);
  EXPECT_GT(r2.z.value, 0.0);
  EXPECT_EQ(r2.M, 2000u);
}

TEST(Estimate, NnRejectsGaussianRoutes) {
  Rng rng(1);
  auto nodes = random_nodes(2, 5, 0, 1, 3);
  NnKernelSpec k{2.0, BoxSupport::cube(2, 0, 1), false};
  auto nn = fit(nodes, gaussian_logs(nodes), k);
  EstimateOptions o;
  o.route = Route::closed_form;
  EXPECT_THROW(estimate(nn, {}, o, rng), Unsupported);
}

TEST(Route, NamesRoundTrip) {
  for (Route r : {Route::automatic, Route::closed_form, Route::gauss_hermite, Route::kernel_mc, Route::kernel_is,
                  Route::voronoi, Route::surrogate_is}) {
    EXPECT_EQ(parse_route(to_string(r)), r);
  }
  EXPECT_THROW(parse_route("simpson"), InvalidArgument);
}

TEST(Proposals, MixtureDensityIntegratesToOne) {
  auto m = gaussian_model(1, 5, 0.5, 3);
  NodeMixtureProposal q(m);
  double s = 0.0, dx = 1e-3;
  for (double x = -15; x < 15; x += dx) {
    std::vector<double> p{x + 0.5 * dx};
    s += std::exp(q.log_density(p)) * dx;
  }
  EXPECT_NEAR(s, 1.0, 1e-6);
}

}  // namespace
}  // namespace aquad
