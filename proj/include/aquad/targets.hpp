#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aquad/geometry.hpp"

namespace aquad {

/// Black-box unnormalized log-density over a box, with an evaluation counter.
///
/// Every call to log_eval() increments the counter by exactly one, including
/// calls outside the support (which return -infinity without invoking the
/// user function). The counter is atomic so a target can be shared read-only
/// across threads.
class TargetDensity {
 public:
  using LogFn = std::function<double(std::span<const double>)>;

  TargetDensity(std::string name, BoxSupport support, LogFn log_fn);
  TargetDensity(const TargetDensity& other);
  TargetDensity& operator=(const TargetDensity&) = delete;

  const std::string& name() const { return name_; }
  int dim() const { return support_.dim(); }
  const BoxSupport& support() const { return support_; }

  double log_eval(std::span<const double> x) const;
  double log_eval(const Vector& x) const { return log_eval(as_span(x)); }

  std::uint64_t eval_count() const { return count_.load(std::memory_order_relaxed); }

  /// Caps the total number of evaluations; exceeding it throws BudgetExhausted.
  void set_budget(std::optional<std::uint64_t> max_evals) { budget_ = max_evals; }

 private:
  std::string name_;
  BoxSupport support_;
  LogFn log_fn_;
  mutable std::atomic<std::uint64_t> count_{0};
  std::optional<std::uint64_t> budget_;
};

// --- banana -----------------------------------------------------------------

struct BananaParams {
  double B = 4.0;
  double eta0 = 4.0;
  double eta = 3.5;
  double half_width = 10.0;
};

/// log of exp{-(eta - B x1 - x2^2)^2 / (2 eta0^2) - sum_i x_i^2 / (2 eta^2)}
/// on [-10,10]^dim, -infinity outside.
double banana_log_density(std::span<const double> x, int dim, const BananaParams& params = {});
TargetDensity make_banana_target(int dim, const BananaParams& params = {});

// --- multimodal ---------------------------------------------------------------

/// Equal-weight mixture of three N(mu_k, 16 I) in 10-D on [-15,15]^10.
double multimodal_log_density(std::span<const double> x);
TargetDensity make_multimodal_target();

// --- radial velocity ----------------------------------------------------------

/// Solves M = E - e sin E for E. Newton-Raphson from E0 = M (E0 = pi when
/// e > 0.8) with bisection fallback; residual <= 1e-12.
double solve_kepler(double mean_anomaly, double e);

struct Planet {
  double K = 0.0;      // semi-amplitude, m/s
  double omega = 0.0;  // longitude of periastron, rad
  double e = 0.0;      // eccentricity
  double P = 1.0;      // period
  double tau = 0.0;    // time of periastron passage
};

struct RvParams {
  double V0 = 0.0;
  std::vector<Planet> planets;

  int dim() const { return 1 + 5 * static_cast<int>(planets.size()); }
  /// Layout [V0, K1, w1, e1, P1, tau1, K2, ...].
  static RvParams from_vector(std::span<const double> x);
  std::vector<double> to_vector() const;
};

struct RvDataset {
  std::vector<double> times;
  std::vector<double> velocities;

  std::size_t size() const { return times.size(); }
  void validate() const;
  double velocity_range() const;
};

RvDataset read_rv_csv(const std::filesystem::path& path);
void write_rv_csv(const RvDataset& data, const std::filesystem::path& path);

double rv_predict(const RvParams& params, double t);
double rv_sum_squared_residuals(const RvParams& params, const RvDataset& data);
double rv_log_likelihood(const RvParams& params, double sigma_e, const RvDataset& data);
/// Log-likelihood from a stored residual sum of squares.
double rv_log_likelihood_from_sse(double sse, std::size_t count, double sigma_e);
bool rv_prior_indicator(const RvParams& params, const RvDataset& data);

/// The uniform prior on the indicator region, normalized to integrate to one,
/// with its log density and the box that contains it.
struct RvPrior {
  BoxSupport box;
  double log_density = 0.0;
};
RvPrior rv_prior(const RvDataset& data, int planets);

/// log pi(x) = log l(y|x, sigma_e) + log g(x).
TargetDensity make_rv_target(const RvDataset& data, int planets, double sigma_e);

/// Residual sum of squares recovered from a stored log pi value of make_rv_target.
double rv_sse_from_log_target(double log_target, const RvDataset& data, int planets, double sigma_e);

/// Synthetic observations: `count` equally spaced times over [0, span], Gaussian noise.
RvDataset generate_rv_dataset(const RvParams& truth, std::size_t count, double span, double noise_variance,
                              std::uint64_t seed);

/// The reference systems used for the model-selection experiment.
RvParams reference_system(int planets);

}  // namespace aquad
