#include "aquad/kernels.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "aquad/errors.hpp"

namespace aquad {

void GaussianKernelSpec::validate() const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw InvalidArgument("Gaussian bandwidth must be positive");
  if (dim < 1) throw InvalidArgument("Gaussian kernel dimension must be >= 1");
}

double GaussianKernelSpec::log_peak() const {
  if (!normalized) return 0.0;
  return -0.5 * dim * std::log(2.0 * std::numbers::pi) - dim * std::log(bandwidth);
}

double GaussianKernelSpec::peak() const { return std::exp(log_peak()); }

void NnKernelSpec::validate() const {
  if (!(p >= 1.0)) throw InvalidArgument("NN kernel p-norm order must be >= 1");
  if (support.dim() < 1) throw InvalidArgument("NN kernel needs a bounded support");
}

Metric NnKernelSpec::metric() const { return scaled ? Metric::scaled_to(support, p) : Metric(p); }

double gaussian_eval(const GaussianKernelSpec& spec, std::span<const double> x, std::span<const double> center) {
  if (static_cast<int>(x.size()) != spec.dim || center.size() != x.size()) {
    throw InvalidArgument("Gaussian kernel: dimension mismatch");
  }
  double r2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - center[i];
    r2 += d * d;
  }
  return std::exp(spec.log_peak() - r2 / (2.0 * spec.bandwidth * spec.bandwidth));
}

int nn_eval(const NnKernelSpec& spec, std::span<const double> x, const NodeSet& nodes, std::size_t i) {
  if (nodes.empty()) throw InvalidArgument("NN kernel: empty node set");
  if (i >= nodes.size()) throw InvalidArgument("NN kernel: node index out of range");
  NearestIndex index(nodes, spec.metric());
  return index.nearest(x).index == i ? 1 : 0;
}

Vector gaussian_moment_integral(const GaussianKernelSpec& spec, std::span<const double> center, int r) {
  if (static_cast<int>(center.size()) != spec.dim) throw InvalidArgument("moment: dimension mismatch");
  if (!spec.normalized) throw Unsupported("closed-form moments need normalized kernels");
  Vector c = to_vector(center);
  if (r == 1) return c;
  if (r == 2) return c.array().square() + spec.bandwidth * spec.bandwidth;
  throw Unsupported("closed-form moments exist for r in {1, 2}; use the Gauss-Hermite route");
}

void GaussHermiteRule::one_dimensional(int m, std::vector<double>& nodes, std::vector<double>& weights) {
  if (m < 1) throw InvalidArgument("Gauss-Hermite needs at least one point");
  // Jacobi matrix of the probabilists' Hermite polynomials.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  for (int k = 1; k < m; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
  nodes.resize(m);
  weights.resize(m);
  double total = 0.0;
  for (int k = 0; k < m; ++k) {
    nodes[k] = eig.eigenvalues()[k];
    weights[k] = eig.eigenvectors()(0, k) * eig.eigenvectors()(0, k);
    total += weights[k];
  }
  for (double& w : weights) w /= total;
  // Symmetrize to remove eigen-solver round-off.
  for (int k = 0; k < m / 2; ++k) {
    double a = 0.5 * (nodes[m - 1 - k] - nodes[k]);
    double w = 0.5 * (weights[k] + weights[m - 1 - k]);
    nodes[k] = -a;
    nodes[m - 1 - k] = a;
    weights[k] = weights[m - 1 - k] = w;
  }
  if (m % 2 == 1) nodes[m / 2] = 0.0;
}

GaussHermiteRule::GaussHermiteRule(int dim, int points_per_dim) : dim_(dim), m_(points_per_dim), nodes_(dim) {
  if (dim < 1) throw InvalidArgument("Gauss-Hermite dimension must be >= 1");
  if (dim > max_dim) throw Unsupported("tensor Gauss-Hermite is capped at 6 dimensions");
  std::vector<double> z, w;
  one_dimensional(points_per_dim, z, w);
  std::size_t total = 1;
  for (int i = 0; i < dim; ++i) total *= static_cast<std::size_t>(points_per_dim);
  nodes_.reserve(total);
  weights_.reserve(total);
  std::vector<int> digit(dim, 0);
  std::vector<double> point(dim);
  for (std::size_t n = 0; n < total; ++n) {
    double weight = 1.0;
    for (int i = 0; i < dim; ++i) {
      point[i] = z[digit[i]];
      weight *= w[digit[i]];
    }
    nodes_.push_back(point);
    weights_.push_back(weight);
    for (int i = 0; i < dim; ++i) {
      if (++digit[i] < points_per_dim) break;
      digit[i] = 0;
    }
  }
}

double gauss_hermite_integral(const GaussianKernelSpec& spec, std::span<const double> center, const ScalarFn& f,
                              const GaussHermiteRule& rule) {
  if (rule.dim() != spec.dim || static_cast<int>(center.size()) != spec.dim) {
    throw InvalidArgument("Gauss-Hermite: dimension mismatch");
  }
  std::vector<double> x(spec.dim);
  double s = 0.0;
  for (std::size_t m = 0; m < rule.size(); ++m) {
    auto z = rule.nodes().row(m);
    for (int i = 0; i < spec.dim; ++i) x[i] = center[i] + spec.bandwidth * z[i];
    s += rule.weights()[m] * f(x);
  }
  return s;
}

double gauss_hermite_integral(const GaussianKernelSpec& spec, std::span<const double> center, const ScalarFn& f,
                              int points_per_dim) {
  return gauss_hermite_integral(spec, center, f, GaussHermiteRule(spec.dim, points_per_dim));
}

VoronoiApprox voronoi_build(const NnKernelSpec& spec, const NodeSet& nodes, NodeSet probes, ProbeSampler sampler) {
  spec.validate();
  if (nodes.empty()) throw InvalidArgument("Voronoi build: empty node set");
  if (probes.empty()) throw InvalidArgument("Voronoi build: need at least one probe");
  if (probes.dim() != nodes.dim()) throw InvalidArgument("Voronoi build: probe dimension mismatch");
  VoronoiApprox out;
  out.volume = spec.support.volume();
  out.node_fingerprint = nodes.fingerprint();
  out.sampler = sampler;
  NearestIndex index(nodes, spec.metric());
  const std::size_t M = probes.size();
  out.assignment.resize(M);
  out.counts.assign(nodes.size(), 0);
  for (std::size_t m = 0; m < M; ++m) {
    auto k = index.nearest(probes.row(m)).index;
    out.assignment[m] = static_cast<std::uint32_t>(k);
    ++out.counts[k];
  }
  out.measures.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    out.measures[i] = static_cast<double>(out.counts[i]) / static_cast<double>(M) * out.volume;
  }
  out.probes = std::move(probes);
  return out;
}

VoronoiApprox voronoi_build(const NnKernelSpec& spec, const NodeSet& nodes, std::size_t probes, ProbeSampler sampler,
                            Rng& rng) {
  if (probes < 1) throw InvalidArgument("Voronoi build: M must be >= 1");
  return voronoi_build(spec, nodes, sample_box(spec.support, probes, sampler, rng), sampler);
}

}  // namespace aquad
