#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "aquad/interpolant.hpp"
#include "aquad/kernels.hpp"
#include "aquad/sampling.hpp"

namespace aquad {

/// The function f in I = int f(x) pi(x) dx / Z.
struct MomentRequest {
  enum class Kind { constant, power, custom };

  Kind kind = Kind::constant;
  int r = 1;  // power: componentwise x^r
  ScalarFn fn;
  std::string label = "one";

  static MomentRequest one() { return {}; }
  static MomentRequest power(int r);
  static MomentRequest custom(ScalarFn fn, std::string label = "custom");

  /// Number of outputs: dim for power requests, 1 otherwise.
  int output_size(int dim) const;
  /// Writes f(x) into out (output_size entries).
  void evaluate(std::span<const double> x, std::span<double> out) const;
};

enum class Route { automatic, closed_form, gauss_hermite, kernel_mc, kernel_is, voronoi, surrogate_is };

std::string_view to_string(Route r);
Route parse_route(std::string_view name);

/// Z-hat with the value shift reapplied. `log_abs` stays finite when
/// `value` under- or overflows.
struct ZHat {
  double value = 0.0;
  double log_abs = 0.0;
  bool negative = false;
};

/// Builds a ZHat from a value on the shifted scale.
ZHat make_zhat(double scaled, double shift);

struct Diagnostics {
  std::optional<double> fill_distance;
  std::optional<double> separation_distance;
  std::optional<double> smallest_pivot;
};

struct EstimateReport {
  ZHat z;
  std::vector<Vector> i_hat;  // one entry per request
  std::vector<std::string> labels;
  Route route = Route::automatic;
  std::size_t M = 0;
  Diagnostics diagnostics;
  std::uint64_t eval_count = 0;
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const EstimateReport& report);

/// sum_i beta_i C_i. Gaussian models need normalized kernels (C_i = 1); NN
/// models need Voronoi measures built on the same nodes.
ZHat z_hat(const InterpolantModel& model, const VoronoiApprox* approx = nullptr);

/// Both algebraic forms of the closed-form moment, sum beta_i J_i / Z and
/// sum nu_i d_i / Z with nu = K^{-1} zeta.
struct ClosedFormMoment {
  Vector beta_form;
  Vector nu_form;
};
ClosedFormMoment i_hat_closed_form(const InterpolantModel& model, int r);

/// J_i by Gauss-Hermite around each node. Needs dim <= 6.
Vector i_hat_gauss_hermite(const InterpolantModel& model, const MomentRequest& request, int points_per_dim = 5);

/// Samples z_{i,m} ~ k(., x_i) and averages f per kernel.
Vector i_hat_kernel_mc(const InterpolantModel& model, const MomentRequest& request, std::size_t M, Rng& rng);

/// Proposal density for the importance-sampling routes.
class Proposal {
 public:
  virtual ~Proposal() = default;
  virtual int dim() const = 0;
  virtual void sample(Rng& rng, std::span<double> out) const = 0;
  virtual double log_density(std::span<const double> x) const = 0;
};

class UniformProposal final : public Proposal {
 public:
  explicit UniformProposal(BoxSupport box);
  int dim() const override { return box_.dim(); }
  void sample(Rng& rng, std::span<double> out) const override;
  double log_density(std::span<const double> x) const override;

 private:
  BoxSupport box_;
  double log_q_;
};

/// Isotropic Gaussian N(center, sd^2 I).
class GaussianProposal final : public Proposal {
 public:
  GaussianProposal(Vector center, double sd);
  int dim() const override { return static_cast<int>(center_.size()); }
  void sample(Rng& rng, std::span<double> out) const override;
  double log_density(std::span<const double> x) const override;

 private:
  Vector center_;
  double sd_;
};

/// Mixture sum_i xi_i N(x_i, C_i) over the model nodes, with xi_i
/// proportional to pi(x_i) and C_i = (distance to the nearest other node)^2 I.
class NodeMixtureProposal final : public Proposal {
 public:
  explicit NodeMixtureProposal(const InterpolantModel& model);
  int dim() const override { return nodes_.dim(); }
  void sample(Rng& rng, std::span<double> out) const override;
  double log_density(std::span<const double> x) const override;

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& scales() const { return sd_; }

 private:
  NodeSet nodes_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<double> sd_;
  std::vector<double> cdf_;
};

struct KernelIsResult {
  Vector i_hat;
  ZHat z;
  std::vector<double> c_hat;  // per-kernel measure estimates
};

/// Per-kernel importance sampling. With a single proposal the M draws are
/// shared by every kernel; otherwise proposals[i] serves kernel i.
KernelIsResult i_hat_kernel_is(const InterpolantModel& model, const MomentRequest& request,
                               const std::vector<std::shared_ptr<const Proposal>>& proposals, std::size_t M, Rng& rng);

struct ProbeEstimate {
  ZHat z;
  Vector i_hat;
};

/// Voronoi estimators from probe assignments. `one_point` uses
/// J_i ~ f(x_i) C_i instead of the probes inside each cell.
ProbeEstimate voronoi_estimates(const InterpolantModel& model, const MomentRequest& request,
                                const VoronoiApprox& approx, bool one_point = false);

enum class SurrogateProposal { uniform, mixture };

/// Importance sampling with the surrogate pi_hat as target; no true
/// evaluations. Samples outside `support` carry zero weight.
ProbeEstimate surrogate_is(const InterpolantModel& model, const MomentRequest& request, SurrogateProposal proposal,
                           const BoxSupport& support, std::size_t M, ProbeSampler sampler, Rng& rng);
/// Uniform proposal over `support` with caller-provided probes.
ProbeEstimate surrogate_is(const InterpolantModel& model, const MomentRequest& request, const BoxSupport& support,
                           const NodeSet& probes);

struct EstimateOptions {
  Route route = Route::automatic;
  std::size_t M = 100000;
  ProbeSampler sampler = ProbeSampler::sobol;
  int gh_points = 5;
  SurrogateProposal proposal = SurrogateProposal::uniform;
  /// Support for the surrogate-IS route with Gaussian kernels.
  std::optional<BoxSupport> support;
  /// Reused when it matches the model nodes (NN route).
  const VoronoiApprox* approx = nullptr;
};

/// Z-hat and every requested moment through one route. The automatic choice
/// is closed-form for Gaussian power moments, Gauss-Hermite for custom f in
/// dim <= 6, kernel MC above, and Voronoi for NN models.
EstimateReport estimate(const InterpolantModel& model, const std::vector<MomentRequest>& requests,
                        const EstimateOptions& options, Rng& rng);

}  // namespace aquad
