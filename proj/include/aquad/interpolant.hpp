#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "aquad/geometry.hpp"
#include "aquad/kernels.hpp"
#include "aquad/sampling.hpp"

namespace aquad {

/// pi_hat(x) = sum_i beta_i k(x, x_i), interpolating exp(log_values) at the nodes.
///
/// Values are held on a shifted scale: d_i = exp(log_i - shift) with shift
/// the largest finite log value, and beta solves (K + jitter I) beta = d on
/// that scale. Gaussian models cache (K + jitter I)^{-1}; NN models have
/// K = I and beta = d.
class InterpolantModel {
 public:
  const KernelSpec& kernel() const { return kernel_; }
  bool gaussian() const { return is_gaussian(kernel_); }
  const GaussianKernelSpec& gaussian_spec() const { return std::get<GaussianKernelSpec>(kernel_); }
  const NnKernelSpec& nn_spec() const { return std::get<NnKernelSpec>(kernel_); }

  int dim() const { return nodes_.dim(); }
  std::size_t size() const { return nodes_.size(); }
  const NodeSet& nodes() const { return nodes_; }
  const std::vector<double>& log_values() const { return log_values_; }
  double shift() const { return shift_; }
  /// d on the shifted scale.
  const Eigen::VectorXd& values() const { return values_; }
  /// beta on the shifted scale.
  const Eigen::VectorXd& beta() const { return beta_; }
  /// (K + jitter I)^{-1}; empty for NN models.
  const Eigen::MatrixXd& inverse() const { return inverse_; }
  double jitter() const { return jitter_; }
  /// Smallest Cholesky pivot of the last full factorization (Gaussian only).
  double smallest_pivot() const { return smallest_pivot_; }
  const NearestIndex& nearest_index() const { return index_; }
  /// Notes such as jitter increases during extend().
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Surrogate on the shifted scale, sum beta_i k(x, x_i).
  double predict_scaled(std::span<const double> x) const;
  /// Kernel vector k(x) = [k(x, x_1), ..., k(x, x_N)] (Gaussian only).
  Eigen::VectorXd kernel_vector(std::span<const double> x) const;

  friend InterpolantModel fit(NodeSet nodes, std::vector<double> log_values, KernelSpec kernel,
                              std::optional<double> jitter);
  friend InterpolantModel extend(InterpolantModel model, std::span<const double> node, double log_value);
  friend InterpolantModel model_from_json(const nlohmann::json& j);

 private:
  void set_values_from_logs();
  void refit_gaussian();

  KernelSpec kernel_;
  NodeSet nodes_;
  std::vector<double> log_values_;
  double shift_ = 0.0;
  Eigen::VectorXd values_;
  Eigen::VectorXd beta_;
  Eigen::MatrixXd inverse_;
  double jitter_ = 0.0;
  double smallest_pivot_ = 0.0;
  NearestIndex index_;
  std::vector<std::string> warnings_;
};

/// Default jitter for a Gaussian fit: 1e-4 * peak^2.
double default_jitter(const GaussianKernelSpec& spec);

/// K + jitter I for a Gaussian kernel over `nodes`.
Eigen::MatrixXd gaussian_gram(const GaussianKernelSpec& spec, const NodeSet& nodes, double jitter);

/// Builds the interpolant. Gaussian kernels solve (K + jitter I) beta = d by
/// Cholesky; NN kernels set beta = d. `jitter` defaults to default_jitter().
InterpolantModel fit(NodeSet nodes, std::vector<double> log_values, KernelSpec kernel,
                     std::optional<double> jitter = std::nullopt);

/// Adds one node. Gaussian models update the cached inverse with the
/// bordered-matrix formula; if the Schur complement falls below
/// 1e-12 k(x,x) the model is refit from scratch with a larger jitter.
InterpolantModel extend(InterpolantModel model, std::span<const double> node, double log_value);

/// pi_hat(x) on the original scale.
double predict(const InterpolantModel& model, std::span<const double> x);

/// GP posterior variance k(x,x) - k(x)^T (K + jitter I)^{-1} k(x), clamped at 0.
double gp_variance(const InterpolantModel& model, std::span<const double> x);

/// max over a shifted Sobol probe set of the Euclidean distance to the
/// nearest node; a lower bound on the fill distance.
double fill_distance(const NodeSet& nodes, const BoxSupport& support, std::size_t probes, Rng& rng);
/// Same with an explicit probe set.
double fill_distance(const NodeSet& nodes, const NodeSet& probes);

/// Exact minimum pairwise Euclidean distance. Needs at least two nodes.
double separation_distance(const NodeSet& nodes);

/// Checkpoint JSON. -inf log values are written as null. With
/// `with_inverse` the cached inverse is stored too, so a reloaded model
/// extends exactly like the original.
nlohmann::json to_json(const InterpolantModel& model, bool with_inverse = false);
/// Restores nodes, log values, shift and beta exactly; the inverse is taken
/// from the JSON when present and refactorized otherwise.
InterpolantModel model_from_json(const nlohmann::json& j);

}  // namespace aquad
