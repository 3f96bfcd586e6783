#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aquad/interpolant.hpp"
#include "aquad/kernels.hpp"
#include "aquad/sampling.hpp"

namespace aquad {

/// Exponent as a function of the iteration t >= 1.
struct Schedule {
  enum class Kind { constant, reciprocal, table };

  Kind kind = Kind::constant;
  double value = 1.0;         // constant value, or c in c / t
  std::vector<double> table;  // entry t-1; the last entry repeats

  static Schedule constant(double v);
  static Schedule reciprocal(double c);
  static Schedule from_table(std::vector<double> values);

  double at(int t) const;
};

nlohmann::json to_json(const Schedule& s);
Schedule schedule_from_json(const nlohmann::json& j);

enum class Diversity { min_distance, gp_variance };

/// A_t(x) = pi_hat(x)^alpha * D_t(x)^beta (times |f(x)| with include_f).
struct AcquisitionSpec {
  Diversity diversity = Diversity::min_distance;
  double p = 2.0;  // min-distance norm order
  Schedule alpha = Schedule::constant(1.0);
  Schedule beta = Schedule::constant(1.0);
  bool include_f = false;
  ScalarFn f;
  /// Min-distance in box-normalized coordinates.
  bool scaled = false;

  void validate() const;
};

nlohmann::json to_json(const AcquisitionSpec& s);
AcquisitionSpec acquisition_from_json(const nlohmann::json& j);

struct Exponents {
  double alpha = 1.0;
  double beta = 1.0;
};

Exponents schedule_eval(const AcquisitionSpec& spec, int t);

/// Evaluates log A_t over single points or batches. Holds a reference to the
/// model, which must outlive it.
class AcquisitionEvaluator {
 public:
  AcquisitionEvaluator(const AcquisitionSpec& spec, const InterpolantModel& model, const BoxSupport& support, int t);

  /// log A_t(x) without the constant alpha * shift; -inf where A_t = 0.
  double log_value(std::span<const double> x) const;
  /// Batched log_value over the rows of `points`.
  std::vector<double> log_values(const NodeSet& points) const;
  /// alpha * shift, the offset between log_value() and log A_t on the original scale.
  double log_offset() const { return exponents_.alpha * model_.shift(); }
  const Exponents& exponents() const { return exponents_; }
  /// Number of acquisition evaluations so far.
  std::size_t evaluations() const { return evaluations_; }

 private:
  double combine(double scaled_pi, double diversity, std::span<const double> x) const;
  double log_diversity(double d) const;

  const AcquisitionSpec& spec_;
  const InterpolantModel& model_;
  Exponents exponents_;
  Metric metric_;
  bool reuse_model_index_ = false;
  NearestIndex index_;
  mutable std::size_t evaluations_ = 0;
};

/// A_t(x) on the original scale.
double acquisition_eval(const AcquisitionSpec& spec, const InterpolantModel& model, std::span<const double> x,
                        int t = 1, const std::optional<BoxSupport>& support = std::nullopt);

struct SearchBudget {
  std::size_t starts = 512;
  std::size_t perturbations = 64;
  std::size_t refine_top = 8;
  std::size_t refine_steps = 200;
};

nlohmann::json to_json(const SearchBudget& b);
SearchBudget search_budget_from_json(const nlohmann::json& j);

struct AcquisitionResult {
  Vector x;
  double log_value = 0.0;       // log A_t on the original scale
  double best_seed_log_value = 0.0;
  bool fallback = false;        // every candidate scored zero
  std::size_t evaluations = 0;
};

/// Multi-start maximization: shifted Sobol starts plus perturbed nodes,
/// the best few refined by compass search. Never evaluates the target.
AcquisitionResult acquisition_maximize(const AcquisitionSpec& spec, const InterpolantModel& model,
                                       const BoxSupport& support, const SearchBudget& budget, int t, Rng& rng);

}  // namespace aquad
