#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "aquad/geometry.hpp"
#include "aquad/sampling.hpp"

namespace aquad {

/// Isotropic Gaussian basis with covariance h^2 I.
struct GaussianKernelSpec {
  double bandwidth = 1.0;
  int dim = 1;
  /// Normalized kernels integrate to one over R^d (C_i = 1).
  bool normalized = true;

  void validate() const;
  /// k(x, x), the value at the center.
  double peak() const;
  double log_peak() const;
};

/// Nearest-neighbour (Voronoi indicator) basis.
struct NnKernelSpec {
  double p = 2.0;
  BoxSupport support;
  /// Measure distances in box-normalized coordinates.
  bool scaled = false;

  void validate() const;
  Metric metric() const;
};

using KernelSpec = std::variant<GaussianKernelSpec, NnKernelSpec>;

inline bool is_gaussian(const KernelSpec& k) { return std::holds_alternative<GaussianKernelSpec>(k); }

double gaussian_eval(const GaussianKernelSpec& spec, std::span<const double> x, std::span<const double> center);

/// 1 iff node i is the nearest node to x (lowest index wins ties).
int nn_eval(const NnKernelSpec& spec, std::span<const double> x, const NodeSet& nodes, std::size_t i);

/// Componentwise r-th moment of the kernel centred at `center`, r in {1, 2}.
Vector gaussian_moment_integral(const GaussianKernelSpec& spec, std::span<const double> center, int r);

/// Tensor-product Gauss-Hermite rule for the standard normal weight, with
/// normalized weights. Nodes are computed by Golub-Welsch.
class GaussHermiteRule {
 public:
  static constexpr int max_dim = 6;

  GaussHermiteRule(int dim, int points_per_dim);

  int dim() const { return dim_; }
  int points_per_dim() const { return m_; }
  std::size_t size() const { return weights_.size(); }
  /// Standard-normal node template z~_m (row-major, size() x dim()).
  const NodeSet& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

  /// One-dimensional rule.
  static void one_dimensional(int m, std::vector<double>& nodes, std::vector<double>& weights);

 private:
  int dim_;
  int m_;
  NodeSet nodes_;
  std::vector<double> weights_;
};

using ScalarFn = std::function<double(std::span<const double>)>;

/// sum_m w_m f(center + h z~_m), approximating the integral of f against the kernel.
double gauss_hermite_integral(const GaussianKernelSpec& spec, std::span<const double> center, const ScalarFn& f,
                              int points_per_dim = 5);
double gauss_hermite_integral(const GaussianKernelSpec& spec, std::span<const double> center, const ScalarFn& f,
                              const GaussHermiteRule& rule);

/// Probe-based approximation of the Voronoi cells of a node set.
struct VoronoiApprox {
  NodeSet probes;
  std::vector<std::uint32_t> assignment;  // probe -> nearest node
  std::vector<std::size_t> counts;        // |U_i|
  std::vector<double> measures;           // C_i = |U_i| / M * |X|
  double volume = 0.0;                    // |X|
  std::uint64_t node_fingerprint = 0;
  ProbeSampler sampler = ProbeSampler::sobol;

  std::size_t probe_count() const { return assignment.size(); }
};

VoronoiApprox voronoi_build(const NnKernelSpec& spec, const NodeSet& nodes, std::size_t probes, ProbeSampler sampler,
                            Rng& rng);
/// Same as above with a caller-provided probe set.
VoronoiApprox voronoi_build(const NnKernelSpec& spec, const NodeSet& nodes, NodeSet probes, ProbeSampler sampler);

}  // namespace aquad
