#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aquad/acquisition.hpp"
#include "aquad/interpolant.hpp"
#include "aquad/quadrature.hpp"
#include "aquad/targets.hpp"
#include "aquad/tuner.hpp"

namespace aquad {

enum class InitMode { uniform, user, presample };
/// NN-U replaces the acquisition step with a uniform draw.
enum class NodePolicy { acquisition, uniform };

struct RunConfig {
  std::size_t n0 = 10;
  InitMode init = InitMode::uniform;
  NodeSet user_nodes;
  std::size_t presample_budget = 10000;
  std::size_t keep_best = 1;
  std::size_t keep_random = 9;

  std::size_t T = 60;
  /// For Gaussian kernels the bandwidth is h0; a non-positive value means
  /// the separation distance of the initial nodes.
  KernelSpec kernel = GaussianKernelSpec{0.0, 2, true};
  bool tune_bandwidth = true;
  /// Retune every this many added nodes; 0 tunes only for the final report.
  std::size_t retune_every = 10;
  int tune_grid_points = 40;
  std::optional<double> jitter;

  AcquisitionSpec acquisition;
  SearchBudget search;
  NodePolicy policy = NodePolicy::acquisition;

  Route route = Route::automatic;
  std::size_t M = 100000;
  ProbeSampler sampler = ProbeSampler::sobol;
  std::vector<MomentRequest> requests = {MomentRequest::power(1), MomentRequest::power(2)};

  std::uint64_t seed = 0;
  /// Z-hat snapshot every this many iterations (0 = off), with M/10 probes.
  std::size_t snapshot_every = 0;
  /// Fill/separation distances every this many iterations (0 = off).
  std::size_t diagnostics_every = 0;
  std::size_t fill_probes = 1 << 14;
  bool final_diagnostics = true;

  std::optional<std::filesystem::path> checkpoint;

  void validate(int dim) const;
  /// Expected number of target evaluations.
  std::size_t budget() const;
};

nlohmann::json to_json(const RunConfig& c);
/// Builds a config for a target of dimension `dim` over `support`.
RunConfig run_config_from_json(const nlohmann::json& j, int dim, const BoxSupport& support);

struct IterationRecord {
  std::size_t t = 0;
  std::size_t nodes = 0;
  Vector node;  // empty at t = 0
  double log_pi = 0.0;
  double log_acquisition = 0.0;
  bool fallback = false;
  bool perturbed = false;
  std::optional<double> fill_distance;
  std::optional<double> separation_distance;
  std::optional<double> log_z_snapshot;
  std::optional<double> bandwidth;
};

nlohmann::json to_json(const IterationRecord& r);

struct RunTrace {
  std::vector<IterationRecord> records;
  std::optional<EstimateReport> report;
  std::optional<InterpolantModel> model;
  std::optional<BandwidthScan> scan;
  std::uint64_t eval_count = 0;
  /// Target evaluations observed during acquisition and quadrature phases.
  std::uint64_t acquisition_target_evals = 0;
  std::uint64_t quadrature_target_evals = 0;
  bool partial = false;
  std::vector<std::string> warnings;
};

/// One JSON object per record, then the final report line.
void write_trace_jsonl(const RunTrace& trace, const std::filesystem::path& path);
nlohmann::json report_json(const RunTrace& trace);

struct InitialNodes {
  NodeSet nodes;
  std::vector<double> log_values;
};

/// Draws `budget` uniform prior samples (all evaluated), keeps the
/// `keep_best` highest and `keep_random` random picks from the rest.
/// Duplicates are dropped.
InitialNodes presample_init(const TargetDensity& target, std::size_t budget, std::size_t keep_best,
                            std::size_t keep_random, Rng& rng);

/// Initial design, then T iterations of fit, acquire, evaluate, extend.
/// Stops with a partial trace and a checkpoint when the target budget runs out.
RunTrace run(const RunConfig& config, const TargetDensity& target);

/// Continues a run from the checkpoint written by run().
RunTrace resume(const RunConfig& config, const TargetDensity& target, const std::filesystem::path& checkpoint);

}  // namespace aquad
