#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "aquad/adaptive.hpp"
#include "aquad/oracle.hpp"
#include "aquad/targets.hpp"

namespace aquad {

// --- experiments ---------------------------------------------------------------

struct MethodSpec {
  enum class Kind { gk_aq, nn_aq, nn_u, nn_aq_diversity_only, nn_aq_tempered, is_uniform, mh_independent, mh_random_walk };

  Kind kind = Kind::nn_aq;
  double v = 0.0;  // random-walk scale
  std::string id;  // e.g. "nn-aq", "mh-rw-2"

  bool adaptive() const;
  bool estimates_z() const;
};

/// Accepts gk-aq, nn-aq, nn-u, nn-aq-diversity-only, nn-aq-tempered,
/// is-uniform, mh-independent and mh-rw-<v>.
MethodSpec parse_method(std::string_view id);

struct TargetSpec {
  std::string kind = "banana";  // banana | multimodal
  int dim = 2;
};

TargetDensity make_target(const TargetSpec& spec);
/// Untruncated mixture moments: Z = 1 and the component-average mean and variance.
GridTruth multimodal_truth();

struct ExperimentConfig {
  std::string id = "experiment";
  TargetSpec target;
  std::vector<MethodSpec> methods;
  std::vector<std::size_t> E;
  std::size_t seeds = 100;
  std::size_t M = 100000;
  std::size_t n0 = 10;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::filesystem::path> truth;
  /// Per-method RunConfig fields, keyed by method id, merged over the defaults.
  nlohmann::json overrides = nlohmann::json::object();
  bool write_traces = false;

  void validate() const;
};

ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);

/// Seed for one (method, E, seed index) cell.
std::uint64_t cell_seed(std::uint64_t master, std::string_view method, std::size_t E, std::size_t index);

/// The adaptive-run configuration a method uses at budget E.
RunConfig method_run_config(const ExperimentConfig& c, const MethodSpec& m, std::size_t E, std::uint64_t seed,
                            const TargetDensity& target);

struct CellResult {
  std::string method;
  std::size_t E = 0;
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::uint64_t eval_count = 0;
  std::uint64_t acquisition_target_evals = 0;
  std::uint64_t quadrature_target_evals = 0;
  std::optional<ZHat> z;
  Vector mean;
  Vector variance;
  std::string route;
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const CellResult& r);
CellResult cell_from_json(const nlohmann::json& j);

/// Runs one cell on a fresh target capped at E evaluations.
CellResult run_cell(const ExperimentConfig& c, const MethodSpec& m, std::size_t E, std::size_t index,
                    RunTrace* trace = nullptr);

struct ResultRow {
  std::string method;
  std::size_t E = 0;
  std::string metric;  // rel_mse_z | mae_z | rel_mse_mean | rel_mse_variance | positive_z
  double mean = 0.0;
  double median = 0.0;
  std::size_t seeds = 0;
  bool absolute = false;
};

struct ResultTable {
  std::vector<ResultRow> rows;

  const ResultRow* find(std::string_view method, std::size_t E, std::string_view metric) const;
};

std::string table_csv(const ResultTable& t);
ResultTable parse_table_csv(std::string_view text);
void write_table_csv(const ResultTable& t, const std::filesystem::path& path);
ResultTable read_table_csv(const std::filesystem::path& path);

/// Aggregates cells per (method, E) in config order.
ResultTable summarize(const ExperimentConfig& c, const std::vector<CellResult>& cells, const GridTruth& truth);

struct ExperimentResult {
  std::vector<CellResult> cells;
  ResultTable table;
};

/// Runs every method x E x seed cell. With an output directory, finished
/// cells are appended to cells.jsonl and skipped on rerun, and the table is
/// written to results.csv.
ExperimentResult run_experiment(const ExperimentConfig& c, const GridTruth& truth);

/// Loads the truth named by the config; multimodal targets use multimodal_truth().
GridTruth experiment_truth(const ExperimentConfig& c);

/// One CSV per panel of a figure: x = E, one column per method, log10 of the
/// mean metric. Figures: fig3, fig4, fig6 (panels a, b, c for Z, mean,
/// variance). Returns the written paths.
std::vector<std::filesystem::path> emit_plot_data(const ResultTable& t, std::string_view figure,
                                                  const std::filesystem::path& dir);

// --- exoplanet -------------------------------------------------------------------

struct ExoplanetConfig {
  double sigma_run = 2.0;
  std::size_t presample = 10000;
  std::size_t keep_best = 1;
  std::size_t keep_random = 9;
  std::size_t T = 500;
  std::size_t M = 100000;
  SearchBudget search;
  std::uint64_t seed = 0;

  static ExoplanetConfig full_scale();
};

struct EvidenceCurve {
  int planets = 0;
  std::vector<double> sigma;
  std::vector<double> log_z;
  bool closed_form = false;
  std::uint64_t eval_count = 0;
  std::vector<std::string> warnings;
};

/// Evidence of the no-planet model: the V0 integral in closed form.
double rv_log_evidence_no_planet(const RvDataset& data, double sigma_e);

/// One NN-AQ run at sigma_run, then Z(sigma) for every grid value from the
/// stored residual sums and the same Voronoi measures. planets = 0 is exact.
EvidenceCurve exoplanet_evidence_profile(const RvDataset& data, int planets, const std::vector<double>& sigmas,
                                         const ExoplanetConfig& c);

/// Long format: sigma,model,log_z.
void write_evidence_csv(const std::vector<EvidenceCurve>& curves, const std::filesystem::path& path);

/// The synthetic dataset for a reference system: 60 times over [0, 180], noise variance 2.
RvDataset reference_dataset(int planets, std::uint64_t seed);

}  // namespace aquad
