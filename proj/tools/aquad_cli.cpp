#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "aquad/adaptive.hpp"
#include "aquad/errors.hpp"
#include "aquad/harness.hpp"
#include "aquad/oracle.hpp"
#include "aquad/tuner.hpp"

using namespace aquad;

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericError = 3;

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << text;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Rows of comma-separated coordinates; a non-numeric first line is a header.
NodeSet read_nodes_csv(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  NodeSet nodes(dim);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric && first) {
      first = false;
      continue;
    }
    first = false;
    if (!numeric || static_cast<int>(row.size()) != dim) throw InvalidArgument(path + ": bad node row '" + line + "'");
    nodes.push_back(row);
  }
  return nodes;
}

struct TargetArgs {
  std::string kind = "banana";
  int dim = 2;
  std::string data;
  int planets = 1;
  double sigma = 2.0;

  void add(CLI::App* app) {
    app->add_option("--target", kind, "banana | multimodal | rv")->check(CLI::IsMember({"banana", "multimodal", "rv"}));
    app->add_option("--dim", dim, "Banana dimension");
    app->add_option("--data", data, "RV dataset CSV (t,y) for --target rv");
    app->add_option("--planets", planets, "RV model order");
    app->add_option("--sigma", sigma, "RV noise standard deviation");
  }

  TargetDensity make() const {
    if (kind == "rv") {
      if (data.empty()) throw InvalidArgument("--target rv needs --data");
      return make_rv_target(read_rv_csv(data), planets, sigma);
    }
    return make_target(TargetSpec{kind, kind == "multimodal" ? 10 : dim});
  }
};

int cmd_run(const std::string& config_path, const TargetArgs& ta, std::optional<std::uint64_t> seed,
            std::optional<std::size_t> T, const std::string& trace_path, const std::string& report_path,
            const std::string& checkpoint, bool resume_run) {
  nlohmann::json j = config_path.empty() ? nlohmann::json::object() : read_json(config_path);
  if (seed) j["seed"] = *seed;
  if (T) j["T"] = *T;
  TargetDensity target = ta.make();
  RunConfig c = run_config_from_json(j, target.dim(), target.support());
  if (!checkpoint.empty()) c.checkpoint = checkpoint;
  RunTrace trace = resume_run ? resume(c, target, checkpoint) : run(c, target);
  if (!trace_path.empty()) write_trace_jsonl(trace, trace_path);
  write_text(report_path, report_json(trace).dump(2) + "\n");
  return 0;
}

int cmd_tune(const TargetArgs& ta, const std::string& nodes_path, std::size_t uniform, std::uint64_t seed,
             const std::string& method, int points, const std::string& out) {
  TargetDensity target = ta.make();
  NodeSet nodes(target.dim());
  if (!nodes_path.empty()) {
    nodes = read_nodes_csv(nodes_path, target.dim());
  } else {
    Rng rng(seed);
    for (std::size_t i = 0; i < uniform; ++i) nodes.push_back(as_span(uniform_in_box(target.support(), rng)));
  }
  std::vector<double> logs;
  for (std::size_t i = 0; i < nodes.size(); ++i) logs.push_back(target.log_eval(nodes.row(i)));
  auto grid = default_bandwidth_grid(nodes, target.support(), points);
  BandwidthScan scan = method == "mll" ? tune_bandwidth_mll(nodes, logs, grid) : tune_bandwidth_zhat(nodes, logs, grid);
  std::string csv = "h,Z_hat,n_negative_beta,selected\r\n";
  for (std::size_t g = 0; g < scan.grid.size(); ++g) {
    csv += fmt(scan.grid[g]) + "," + (std::isnan(scan.z_hat[g]) ? std::string() : fmt(scan.z_hat[g])) + "," +
           std::to_string(scan.negative_beta[g]) + "," + (g == scan.selected_index ? "1" : "0") + "\r\n";
  }
  write_text(out, csv);
  for (const auto& w : scan.warnings) spdlog::warn("{}", w);
  spdlog::info("selected h = {}", scan.selected);
  return 0;
}

int cmd_oracle(const TargetArgs& ta, std::size_t resolution, std::size_t qmc, std::uint64_t seed,
               const std::string& out) {
  TargetDensity target = ta.make();
  GridTruth t = qmc > 0 ? qmc_truth(target, qmc, seed) : grid_truth(target, resolution);
  write_text(out, to_json(t).dump(2) + "\n");
  return 0;
}

int cmd_benchmark(const std::string& config_path, std::uint64_t seed, const std::string& output_dir,
                  std::optional<std::size_t> seeds, const std::string& truth, const std::vector<std::string>& plots) {
  nlohmann::json j = read_json(config_path);
  j["seed"] = seed;
  if (!output_dir.empty()) j["output_dir"] = output_dir;
  if (seeds) j["seeds"] = *seeds;
  if (!truth.empty()) j["truth"] = truth;
  ExperimentConfig c = experiment_from_json(j);
  GridTruth t = experiment_truth(c);
  ExperimentResult r = run_experiment(c, t);
  if (!c.output_dir) std::cout << table_csv(r.table);
  for (const auto& fig : plots) {
    for (const auto& p : emit_plot_data(r.table, fig, c.output_dir ? *c.output_dir / "plots" : "plots")) {
      spdlog::info("wrote {}", p.string());
    }
  }
  return 0;
}

int cmd_exoplanet(const std::string& data, std::optional<int> generate, std::uint64_t seed,
                  const std::vector<int>& models, const std::vector<double>& sigmas, bool full_scale,
                  std::optional<std::size_t> presample, std::optional<std::size_t> T, std::optional<std::size_t> M,
                  const std::string& out) {
  RvDataset d;
  if (!data.empty()) d = read_rv_csv(data);
  else if (generate) d = reference_dataset(*generate, seed);
  else throw InvalidArgument("exoplanet needs --data or --generate");
  ExoplanetConfig c = full_scale ? ExoplanetConfig::full_scale() : ExoplanetConfig{};
  c.seed = seed;
  if (presample) c.presample = *presample;
  if (T) c.T = *T;
  if (M) c.M = *M;
  std::vector<EvidenceCurve> curves;
  for (int s : models) {
    spdlog::info("model S={}", s);
    curves.push_back(exoplanet_evidence_profile(d, s, sigmas, c));
  }
  if (out.empty() || out == "-") {
    std::cout << "sigma,model,log_z\n";
    for (const auto& cv : curves) {
      for (std::size_t k = 0; k < cv.sigma.size(); ++k) std::cout << fmt(cv.sigma[k]) << ',' << cv.planets << ',' << fmt(cv.log_z[k]) << '\n';
    }
  } else {
    write_evidence_csv(curves, out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive interpolative quadrature"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  TargetArgs run_target, tune_target, oracle_target;

  auto* run_cmd = app.add_subcommand("run", "Single adaptive quadrature run");
  std::string run_config, trace_path, report_path, checkpoint;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::size_t> run_T;
  bool resume_flag = false;
  run_cmd->add_option("-c,--config", run_config, "Run config JSON");
  run_target.add(run_cmd);
  run_cmd->add_option("--seed", run_seed, "Seed (overrides config)");
  run_cmd->add_option("--T", run_T, "Iterations (overrides config)");
  run_cmd->add_option("--trace", trace_path, "Trace JSONL output");
  run_cmd->add_option("--report", report_path, "Final report JSON (default stdout)");
  run_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file, rewritten after each iteration");
  run_cmd->add_flag("--resume", resume_flag, "Continue from --checkpoint");

  auto* tune_cmd = app.add_subcommand("tune", "Bandwidth scan as CSV");
  std::string tune_nodes, tune_method = "zhat", tune_out;
  std::size_t tune_uniform = 70;
  std::uint64_t tune_seed = 0;
  int tune_points = 40;
  tune_target.add(tune_cmd);
  tune_cmd->add_option("--nodes", tune_nodes, "Node CSV; default uniform nodes");
  tune_cmd->add_option("--uniform", tune_uniform, "Number of uniform nodes");
  tune_cmd->add_option("--seed", tune_seed, "Seed for uniform nodes");
  tune_cmd->add_option("--method", tune_method, "zhat | mll")->check(CLI::IsMember({"zhat", "mll"}));
  tune_cmd->add_option("--points", tune_points, "Grid size");
  tune_cmd->add_option("-o,--out", tune_out, "CSV output (default stdout)");

  auto* oracle_cmd = app.add_subcommand("oracle", "Ground truth JSON");
  std::size_t resolution = 2000, qmc = 0;
  std::uint64_t oracle_seed = 0;
  std::string oracle_out;
  oracle_target.add(oracle_cmd);
  oracle_cmd->add_option("--resolution", resolution, "Cells per dimension (even)");
  oracle_cmd->add_option("--qmc", qmc, "Use shifted Sobol quadrature with this many points");
  oracle_cmd->add_option("--seed", oracle_seed, "Shift seed for --qmc");
  oracle_cmd->add_option("-o,--out", oracle_out, "JSON output (default stdout)");

  auto* bench_cmd = app.add_subcommand("benchmark", "Experiment sweep");
  std::string bench_config, bench_dir, bench_truth;
  std::uint64_t bench_seed = 0;
  std::optional<std::size_t> bench_seeds;
  std::vector<std::string> plots;
  bench_cmd->add_option("-c,--config", bench_config, "Experiment config JSON")->required();
  bench_cmd->add_option("--seed", bench_seed, "Master seed")->required();
  bench_cmd->add_option("--output-dir", bench_dir, "Output directory");
  bench_cmd->add_option("--seeds", bench_seeds, "Seeds per cell");
  bench_cmd->add_option("--truth", bench_truth, "Truth JSON from `oracle`");
  bench_cmd->add_option("--plot", plots, "Figure ids to emit (fig3, fig4a, ...)");

  auto* exo_cmd = app.add_subcommand("exoplanet", "Evidence profiles over sigma");
  std::string exo_data, exo_out;
  std::optional<int> exo_generate;
  std::uint64_t exo_seed = 0;
  std::vector<int> models{0, 1, 2};
  std::vector<double> sigmas{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  bool full_scale = false;
  std::optional<std::size_t> exo_presample, exo_T, exo_M;
  exo_cmd->add_option("--data", exo_data, "RV dataset CSV");
  exo_cmd->add_option("--generate", exo_generate, "Use the reference dataset with this many planets");
  exo_cmd->add_option("--seed", exo_seed, "Seed")->required();
  exo_cmd->add_option("--models", models, "Model orders")->check(CLI::Range(0, 2));
  exo_cmd->add_option("--sigmas", sigmas, "Sigma grid");
  exo_cmd->add_flag("--full-scale", full_scale, "Full budgets");
  exo_cmd->add_option("--presample", exo_presample, "Presample budget");
  exo_cmd->add_option("--T", exo_T, "Iterations");
  exo_cmd->add_option("--M", exo_M, "Voronoi probes");
  exo_cmd->add_option("-o,--out", exo_out, "CSV output (default stdout)");

  auto* gen_cmd = app.add_subcommand("gen-rv", "Synthetic RV dataset");
  int gen_planets = 1;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen_cmd->add_option("--planets", gen_planets, "Planets in the reference system")->check(CLI::Range(0, 2));
  gen_cmd->add_option("--seed", gen_seed, "Noise seed")->required();
  gen_cmd->add_option("-o,--out", gen_out, "CSV output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
  spdlog::set_pattern("[%l] %v");

  try {
    if (*run_cmd) {
      if (resume_flag && checkpoint.empty()) throw InvalidArgument("--resume needs --checkpoint");
      return cmd_run(run_config, run_target, run_seed, run_T, trace_path, report_path, checkpoint, resume_flag);
    }
    if (*tune_cmd) return cmd_tune(tune_target, tune_nodes, tune_uniform, tune_seed, tune_method, tune_points, tune_out);
    if (*oracle_cmd) return cmd_oracle(oracle_target, resolution, qmc, oracle_seed, oracle_out);
    if (*bench_cmd) return cmd_benchmark(bench_config, bench_seed, bench_dir, bench_seeds, bench_truth, plots);
    if (*exo_cmd) {
      return cmd_exoplanet(exo_data, exo_generate, exo_seed, models, sigmas, full_scale, exo_presample, exo_T, exo_M,
                           exo_out);
    }
    if (*gen_cmd) {
      write_rv_csv(reference_dataset(gen_planets, gen_seed), gen_out);
      return 0;
    }
  } catch (const InvalidArgument& e) {
    spdlog::error("{}", e.what());
    return kConfigError;
  } catch (const Unsupported& e) {
    spdlog::error("{}", e.what());
    return kConfigError;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return kNumericError;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kConfigError;
  }
  return 0;
}
