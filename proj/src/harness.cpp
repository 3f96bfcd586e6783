#include "aquad/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "aquad/baselines.hpp"
#include "aquad/errors.hpp"
#include "aquad/parallel.hpp"

namespace aquad {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string fmt_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s.empty()) return kNaN;
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw InvalidArgument("not a number in CSV: '" + s + "'");
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r') {
      continue;
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

Vector json_vector(const nlohmann::json& j) {
  std::vector<double> v;
  for (const auto& e : j) v.push_back(e.is_null() ? kNaN : e.get<double>());
  return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json vector_json(const Vector& v) {
  auto j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(std::isfinite(v[i]) ? nlohmann::json(v[i]) : nlohmann::json());
  return j;
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  for (double x : v) {
    if (std::isnan(x)) return kNaN;
  }
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string cell_key(std::string_view method, std::size_t E, std::size_t index) {
  return std::string(method) + "|" + std::to_string(E) + "|" + std::to_string(index);
}

double log_sum_exp(const std::vector<double>& v) {
  double mx = kNegInf;
  for (double x : v) mx = std::max(mx, x);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace

// --- methods -----------------------------------------------------------------

bool MethodSpec::adaptive() const {
  return kind != Kind::is_uniform && kind != Kind::mh_independent && kind != Kind::mh_random_walk;
}

bool MethodSpec::estimates_z() const { return kind != Kind::mh_independent && kind != Kind::mh_random_walk; }

MethodSpec parse_method(std::string_view id) {
  MethodSpec m;
  m.id = std::string(id);
  if (id == "gk-aq") m.kind = MethodSpec::Kind::gk_aq;
  else if (id == "nn-aq") m.kind = MethodSpec::Kind::nn_aq;
  else if (id == "nn-u") m.kind = MethodSpec::Kind::nn_u;
  else if (id == "nn-aq-diversity-only") m.kind = MethodSpec::Kind::nn_aq_diversity_only;
  else if (id == "nn-aq-tempered") m.kind = MethodSpec::Kind::nn_aq_tempered;
  else if (id == "is-uniform") m.kind = MethodSpec::Kind::is_uniform;
  else if (id == "mh-independent") m.kind = MethodSpec::Kind::mh_independent;
  else if (id.starts_with("mh-rw-")) {
    m.kind = MethodSpec::Kind::mh_random_walk;
    std::string v(id.substr(6));
    try {
      std::size_t used = 0;
      m.v = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
    } catch (const std::exception&) {
      throw InvalidArgument("bad random-walk scale in method '" + m.id + "'");
    }
    if (!(m.v > 0.0)) throw InvalidArgument("random-walk scale must be positive in '" + m.id + "'");
  } else {
    throw InvalidArgument("unknown method '" + m.id + "'");
  }
  return m;
}

TargetDensity make_target(const TargetSpec& spec) {
  if (spec.kind == "banana") {
    if (spec.dim < 1) throw InvalidArgument("banana dimension must be >= 1");
    return make_banana_target(spec.dim);
  }
  if (spec.kind == "multimodal") {
    if (spec.dim != 10) throw InvalidArgument("the multimodal target is 10-dimensional");
    return make_multimodal_target();
  }
  throw InvalidArgument("unknown target '" + spec.kind + "'");
}

GridTruth multimodal_truth() {
  GridTruth t;
  t.dim = 10;
  t.z = 1.0;
  t.log_z = 0.0;
  const double mu[3][2] = {{5.0, 0.0}, {-7.0, 0.0}, {1.0, 1.0}};  // first axis, other axes
  t.mean.resize(10);
  t.variance.resize(10);
  for (int k = 0; k < 10; ++k) {
    const int a = k == 0 ? 0 : 1;
    double m1 = 0.0, m2 = 0.0;
    for (const auto& c : mu) {
      m1 += c[a] / 3.0;
      m2 += c[a] * c[a] / 3.0;
    }
    t.mean[k] = m1;
    t.variance[k] = 16.0 + m2 - m1 * m1;
  }
  t.mean_error = Vector::Zero(10);
  t.variance_error = Vector::Zero(10);
  return t;
}

// --- config ----------------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (methods.empty()) throw InvalidArgument("experiment needs at least one method");
  if (E.empty()) throw InvalidArgument("experiment needs at least one budget E");
  if (seeds < 1) throw InvalidArgument("experiment needs at least one seed");
  if (!overrides.is_object()) throw InvalidArgument("overrides must be an object keyed by method id");
  for (const auto& m : methods) {
    for (std::size_t e : E) {
      if (e < 1) throw InvalidArgument("E must be >= 1");
      if (m.adaptive() && e < n0) {
        throw InvalidArgument("E=" + std::to_string(e) + " is below N0=" + std::to_string(n0) + " for " + m.id);
      }
    }
  }
  make_target(target);
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  try {
    ExperimentConfig c;
    c.id = j.value("id", c.id);
    if (j.contains("target")) {
      c.target.kind = j["target"].value("kind", c.target.kind);
      c.target.dim = j["target"].value("dim", c.target.kind == "multimodal" ? 10 : 2);
    }
    for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    c.E = j.at("E").get<std::vector<std::size_t>>();
    c.seeds = j.value("seeds", c.seeds);
    c.M = j.value("M", c.M);
    c.n0 = j.value("n0", c.n0);
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output_dir") && !j["output_dir"].is_null()) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("truth") && !j["truth"].is_null()) c.truth = j["truth"].get<std::string>();
    if (j.contains("overrides")) c.overrides = j["overrides"];
    c.write_traces = j.value("write_traces", false);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed experiment config: ") + e.what());
  }
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["id"] = c.id;
  j["target"] = {{"kind", c.target.kind}, {"dim", c.target.dim}};
  auto& ms = j["methods"] = nlohmann::json::array();
  for (const auto& m : c.methods) ms.push_back(m.id);
  j["E"] = c.E;
  j["seeds"] = c.seeds;
  j["M"] = c.M;
  j["n0"] = c.n0;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir ? nlohmann::json(c.output_dir->string()) : nlohmann::json();
  j["truth"] = c.truth ? nlohmann::json(c.truth->string()) : nlohmann::json();
  j["overrides"] = c.overrides;
  j["write_traces"] = c.write_traces;
  return j;
}

std::uint64_t cell_seed(std::uint64_t master, std::string_view method, std::size_t E, std::size_t index) {
  return derive_seed(master, {hash_label(method), E, index});
}

RunConfig method_run_config(const ExperimentConfig& c, const MethodSpec& m, std::size_t E, std::uint64_t seed,
                            const TargetDensity& target) {
  if (!m.adaptive()) throw InvalidArgument(m.id + " is not an adaptive quadrature method");
  if (E < c.n0) throw InvalidArgument("E below N0");
  RunConfig r;
  r.n0 = c.n0;
  r.T = E - c.n0;
  r.M = c.M;
  r.seed = seed;
  r.final_diagnostics = false;
  r.kernel = NnKernelSpec{2.0, target.support(), false};
  switch (m.kind) {
    case MethodSpec::Kind::gk_aq:
      r.kernel = GaussianKernelSpec{0.0, target.dim(), true};
      r.acquisition.diversity = Diversity::gp_variance;
      break;
    case MethodSpec::Kind::nn_aq:
      break;
    case MethodSpec::Kind::nn_u:
      r.policy = NodePolicy::uniform;
      break;
    case MethodSpec::Kind::nn_aq_diversity_only:
      r.acquisition.alpha = Schedule::constant(0.0);
      break;
    case MethodSpec::Kind::nn_aq_tempered:
      r.acquisition.beta = Schedule::reciprocal(200.0);
      break;
    default:
      break;
  }
  if (c.overrides.contains(m.id)) {
    nlohmann::json j = to_json(r);
    j.merge_patch(c.overrides[m.id]);
    j["n0"] = r.n0;
    j["T"] = r.T;
    j["seed"] = seed;
    r = run_config_from_json(j, target.dim(), target.support());
  }
  r.validate(target.dim());
  return r;
}

// --- cells -----------------------------------------------------------------------

nlohmann::json to_json(const CellResult& r) {
  nlohmann::json j;
  j["method"] = r.method;
  j["E"] = r.E;
  j["index"] = r.index;
  j["seed"] = r.seed;
  j["eval_count"] = r.eval_count;
  j["acquisition_target_evals"] = r.acquisition_target_evals;
  j["quadrature_target_evals"] = r.quadrature_target_evals;
  if (r.z) {
    j["z"] = std::isfinite(r.z->value) ? nlohmann::json(r.z->value) : nlohmann::json();
    j["log_abs_z"] = std::isfinite(r.z->log_abs) ? nlohmann::json(r.z->log_abs) : nlohmann::json();
    j["z_negative"] = r.z->negative;
  }
  j["mean"] = vector_json(r.mean);
  j["variance"] = vector_json(r.variance);
  j["route"] = r.route;
  j["warnings"] = r.warnings;
  return j;
}

CellResult cell_from_json(const nlohmann::json& j) {
  CellResult r;
  r.method = j.at("method").get<std::string>();
  r.E = j.at("E").get<std::size_t>();
  r.index = j.at("index").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.eval_count = j.at("eval_count").get<std::uint64_t>();
  r.acquisition_target_evals = j.value("acquisition_target_evals", std::uint64_t{0});
  r.quadrature_target_evals = j.value("quadrature_target_evals", std::uint64_t{0});
  if (j.contains("z")) {
    ZHat z;
    z.value = j["z"].is_null() ? kNaN : j["z"].get<double>();
    z.log_abs = j["log_abs_z"].is_null() ? kNegInf : j["log_abs_z"].get<double>();
    z.negative = j.value("z_negative", false);
    r.z = z;
  }
  r.mean = json_vector(j.at("mean"));
  r.variance = json_vector(j.at("variance"));
  r.route = j.value("route", std::string());
  r.warnings = j.value("warnings", std::vector<std::string>{});
  return r;
}

CellResult run_cell(const ExperimentConfig& c, const MethodSpec& m, std::size_t E, std::size_t index,
                    RunTrace* trace_out) {
  TargetDensity target = make_target(c.target);
  target.set_budget(E);
  CellResult r;
  r.method = m.id;
  r.E = E;
  r.index = index;
  r.seed = cell_seed(c.seed, m.id, E, index);
  Rng rng(r.seed);
  switch (m.kind) {
    case MethodSpec::Kind::is_uniform: {
      IsResult is = is_uniform(target, E, rng);
      r.z = is.z;
      r.mean = is.moments.mean;
      r.variance = is.moments.variance;
      r.route = "baseline-is";
      break;
    }
    case MethodSpec::Kind::mh_independent:
    case MethodSpec::Kind::mh_random_walk: {
      const bool rw = m.kind == MethodSpec::Kind::mh_random_walk;
      MhResult mh = mh_chain(target, rw ? MhKind::random_walk : MhKind::independent, E, m.v, rng);
      r.mean = mh.moments.mean;
      r.variance = mh.moments.variance;
      r.route = rw ? "baseline-mh-rw" : "baseline-mh-independent";
      break;
    }
    default: {
      RunConfig rc = method_run_config(c, m, E, r.seed, target);
      RunTrace trace = run(rc, target);
      r.acquisition_target_evals = trace.acquisition_target_evals;
      r.quadrature_target_evals = trace.quadrature_target_evals;
      r.warnings = trace.warnings;
      if (trace.report) {
        const auto& rep = *trace.report;
        r.z = rep.z;
        r.route = std::string(to_string(rep.route));
        r.mean = rep.i_hat.at(0);
        r.variance = rep.i_hat.at(1) - r.mean.cwiseProduct(r.mean);
      } else {
        r.mean = Vector::Constant(target.dim(), kNaN);
        r.variance = r.mean;
      }
      if (trace_out) *trace_out = std::move(trace);
      break;
    }
  }
  r.eval_count = target.eval_count();
  return r;
}

// --- tables ----------------------------------------------------------------------

const ResultRow* ResultTable::find(std::string_view method, std::size_t E, std::string_view metric) const {
  for (const auto& r : rows) {
    if (r.method == method && r.E == E && r.metric == metric) return &r;
  }
  return nullptr;
}

std::string table_csv(const ResultTable& t) {
  std::ostringstream out;
  out << "method,E,metric,mean,median,seeds,absolute\r\n";
  for (const auto& r : t.rows) {
    out << csv_field(r.method) << ',' << r.E << ',' << csv_field(r.metric) << ',' << fmt_double(r.mean) << ','
        << fmt_double(r.median) << ',' << r.seeds << ',' << (r.absolute ? 1 : 0) << "\r\n";
  }
  return out.str();
}

ResultTable parse_table_csv(std::string_view text) {
  auto rows = parse_csv(text);
  if (rows.empty() || rows[0].size() != 7 || rows[0][0] != "method") {
    throw InvalidArgument("not a result table CSV");
  }
  ResultTable t;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != 7) throw InvalidArgument("result table row " + std::to_string(i) + " has the wrong width");
    ResultRow r;
    r.method = f[0];
    r.E = static_cast<std::size_t>(std::stoull(f[1]));
    r.metric = f[2];
    r.mean = parse_double(f[3]);
    r.median = parse_double(f[4]);
    r.seeds = static_cast<std::size_t>(std::stoull(f[5]));
    r.absolute = f[6] == "1";
    t.rows.push_back(std::move(r));
  }
  return t;
}

void write_table_csv(const ResultTable& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << table_csv(t);
}

ResultTable read_table_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_table_csv(ss.str());
}

ResultTable summarize(const ExperimentConfig& c, const std::vector<CellResult>& cells, const GridTruth& truth) {
  std::map<std::pair<std::string, std::size_t>, std::vector<const CellResult*>> groups;
  for (const auto& cell : cells) groups[{cell.method, cell.E}].push_back(&cell);
  ResultTable t;
  for (const auto& m : c.methods) {
    for (std::size_t E : c.E) {
      auto it = groups.find({m.id, E});
      if (it == groups.end()) continue;
      auto group = it->second;
      std::sort(group.begin(), group.end(), [](auto* a, auto* b) { return a->index < b->index; });
      const std::size_t n = group.size();
      auto add = [&](const std::string& metric, const std::vector<double>& v, bool absolute) {
        t.rows.push_back({m.id, E, metric, mean(v), median(v), n, absolute});
      };
      if (m.estimates_z()) {
        std::vector<double> rel, mae, pos;
        for (const auto* cell : group) {
          const double z = cell->z ? cell->z->value : kNaN;
          rel.push_back(((z - truth.z) / truth.z) * ((z - truth.z) / truth.z));
          mae.push_back(std::abs(z - truth.z));
          pos.push_back(z > 0.0 ? 1.0 : 0.0);
        }
        add("rel_mse_z", rel, false);
        add("mae_z", mae, true);
        add("positive_z", pos, false);
      }
      std::vector<Vector> means, vars;
      for (const auto* cell : group) {
        means.push_back(cell->mean);
        vars.push_back(cell->variance);
      }
      bool abs_mean = false, abs_var = false;
      add("rel_mse_mean", squared_relative_errors(means, truth.mean, &abs_mean), abs_mean);
      add("rel_mse_variance", squared_relative_errors(vars, truth.variance, &abs_var), abs_var);
    }
  }
  return t;
}

GridTruth experiment_truth(const ExperimentConfig& c) {
  if (c.truth) {
    std::ifstream in(*c.truth);
    if (!in) {
      throw InvalidArgument("truth file " + c.truth->string() + " not found; run `aquad oracle` first");
    }
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(std::string("malformed truth file: ") + e.what());
    }
    return truth_from_json(j);
  }
  if (c.target.kind == "multimodal") return multimodal_truth();
  throw InvalidArgument("experiment has no truth file; run `aquad oracle` first and set \"truth\"");
}

ExperimentResult run_experiment(const ExperimentConfig& c, const GridTruth& truth) {
  c.validate();
  if (truth.dim != make_target(c.target).dim()) throw InvalidArgument("truth dimension does not match the target");

  std::map<std::string, CellResult> done;
  std::ofstream log;
  if (c.output_dir) {
    std::filesystem::create_directories(*c.output_dir);
    nlohmann::json cfg = to_json(c);
    cfg.erase("output_dir");
    const auto cfg_path = *c.output_dir / "config.json";
    if (std::filesystem::exists(cfg_path)) {
      std::ifstream in(cfg_path);
      nlohmann::json old = nlohmann::json::parse(in, nullptr, false);
      if (old.is_discarded() || old != cfg) {
        throw InvalidArgument("output directory " + c.output_dir->string() + " holds a different experiment");
      }
    } else {
      std::ofstream(cfg_path) << cfg.dump(2) << '\n';
    }
    const auto cells_path = *c.output_dir / "cells.jsonl";
    std::ifstream in(cells_path);
    std::string line;
    while (std::getline(in, line)) {
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded()) continue;  // torn write from an interrupted run
      CellResult r = cell_from_json(j);
      done.emplace(cell_key(r.method, r.E, r.index), std::move(r));
    }
    in.close();
    log.open(cells_path, std::ios::app);
    if (c.write_traces) std::filesystem::create_directories(*c.output_dir / "traces");
  }

  struct Job {
    const MethodSpec* method;
    std::size_t E;
    std::size_t index;
  };
  std::vector<Job> all, pending;
  for (const auto& m : c.methods) {
    for (std::size_t E : c.E) {
      for (std::size_t i = 0; i < c.seeds; ++i) {
        all.push_back({&m, E, i});
        if (!done.contains(cell_key(m.id, E, i))) pending.push_back({&m, E, i});
      }
    }
  }
  spdlog::info("experiment {}: {} cells, {} to run", c.id, all.size(), pending.size());

  std::mutex mu;
  std::vector<CellResult> fresh(pending.size());
  parallel_for(pending.size(), [&](std::size_t k) {
    const Job& job = pending[k];
    RunTrace trace;
    const bool keep = c.output_dir && c.write_traces && job.method->adaptive();
    CellResult r = run_cell(c, *job.method, job.E, job.index, keep ? &trace : nullptr);
    if (keep) {
      write_trace_jsonl(trace, *c.output_dir / "traces" /
                                   (job.method->id + "_E" + std::to_string(job.E) + "_" +
                                    std::to_string(job.index) + ".jsonl"));
    }
    std::lock_guard lock(mu);
    if (log.is_open()) log << to_json(r).dump() << '\n' << std::flush;
    fresh[k] = std::move(r);
  });
  for (auto& r : fresh) done.insert_or_assign(cell_key(r.method, r.E, r.index), std::move(r));

  ExperimentResult out;
  for (const auto& job : all) out.cells.push_back(done.at(cell_key(job.method->id, job.E, job.index)));
  out.table = summarize(c, out.cells, truth);
  if (c.output_dir) write_table_csv(out.table, *c.output_dir / "results.csv");
  return out;
}

// --- plot data -------------------------------------------------------------------

std::vector<std::filesystem::path> emit_plot_data(const ResultTable& t, std::string_view figure,
                                                  const std::filesystem::path& dir) {
  using Columns = std::vector<std::pair<std::string, std::string>>;
  static const std::map<std::string, Columns, std::less<>> figures = {
      {"fig3",
       {{"nn-aq", "nn_aq"},
        {"is-uniform", "is"},
        {"mh-independent", "imh"},
        {"mh-rw-1", "rwmh_1"},
        {"mh-rw-2", "rwmh_2"},
        {"mh-rw-5", "rwmh_5"}}},
      {"fig4",
       {{"nn-aq", "nn_aq"},
        {"is-uniform", "is"},
        {"nn-u", "nn_u"},
        {"nn-aq-diversity-only", "nn_aq_diversity_only"},
        {"nn-aq-tempered", "nn_aq_tempered"}}},
      {"fig6", {{"gk-aq", "gk_aq"}, {"nn-aq", "nn_aq"}}},
  };
  static const char* metrics[] = {"rel_mse_z", "rel_mse_mean", "rel_mse_variance"};

  std::string base(figure);
  std::optional<char> only;
  if (!figures.contains(base) && !base.empty() && figures.contains(base.substr(0, base.size() - 1))) {
    only = base.back();
    base.pop_back();
  }
  auto it = figures.find(base);
  if (it == figures.end()) throw InvalidArgument("unknown figure id '" + std::string(figure) + "'");
  const char first_panel = base == "fig6" ? 'b' : 'a';
  if (only && (*only < first_panel || *only > first_panel + 2)) {
    throw InvalidArgument("unknown figure id '" + std::string(figure) + "'");
  }

  std::set<std::size_t> Es;
  for (const auto& r : t.rows) Es.insert(r.E);
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (int p = 0; p < 3; ++p) {
    const char panel = static_cast<char>(first_panel + p);
    if (only && *only != panel) continue;
    auto path = dir / (base + panel + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out << "E";
    for (const auto& col : it->second) out << ',' << col.second;
    out << "\r\n";
    for (std::size_t E : Es) {
      out << E;
      for (const auto& col : it->second) {
        const ResultRow* r = t.find(col.first, E, metrics[p]);
        out << ',' << (r && r->mean > 0.0 ? fmt_double(std::log10(r->mean)) : std::string());
      }
      out << "\r\n";
    }
    written.push_back(path);
  }
  return written;
}

// --- exoplanet -------------------------------------------------------------------

ExoplanetConfig ExoplanetConfig::full_scale() {
  ExoplanetConfig c;
  c.presample = 4000000 - 5000;
  c.T = 5000;
  c.M = 10000000;
  return c;
}

double rv_log_evidence_no_planet(const RvDataset& data, double sigma_e) {
  data.validate();
  if (!(sigma_e > 0.0)) throw InvalidArgument("sigma_e must be positive");
  const double n = static_cast<double>(data.size());
  const double ybar = std::accumulate(data.velocities.begin(), data.velocities.end(), 0.0) / n;
  double ss = 0.0;
  for (double y : data.velocities) ss += (y - ybar) * (y - ybar);
  const double var = sigma_e * sigma_e;
  const double sd = sigma_e / std::sqrt(n);
  // P(-20 <= V0 <= 20) for V0 ~ N(ybar, sd^2)
  const double a = (20.0 - ybar) / (sd * std::sqrt(2.0));
  const double b = (-20.0 - ybar) / (sd * std::sqrt(2.0));
  double mass = 0.5 * (std::erfc(-a) - std::erfc(-b));
  if (b > 0.0) mass = 0.5 * (std::erfc(b) - std::erfc(a));
  return -std::log(40.0) - 0.5 * n * std::log(2.0 * std::numbers::pi * var) - ss / (2.0 * var) +
         0.5 * std::log(2.0 * std::numbers::pi * sd * sd) + std::log(mass);
}

EvidenceCurve exoplanet_evidence_profile(const RvDataset& data, int planets, const std::vector<double>& sigmas,
                                         const ExoplanetConfig& c) {
  if (planets < 0 || planets > 2) throw InvalidArgument("model order must be 0, 1 or 2");
  if (sigmas.empty()) throw InvalidArgument("sigma grid is empty");
  for (double s : sigmas) {
    if (!(s > 0.0)) throw InvalidArgument("sigma values must be positive");
  }
  EvidenceCurve curve;
  curve.planets = planets;
  curve.sigma = sigmas;
  if (planets == 0) {
    curve.closed_form = true;
    for (double s : sigmas) curve.log_z.push_back(rv_log_evidence_no_planet(data, s));
    return curve;
  }

  TargetDensity target = make_rv_target(data, planets, c.sigma_run);
  RunConfig rc;
  rc.init = InitMode::presample;
  rc.presample_budget = c.presample;
  rc.keep_best = c.keep_best;
  rc.keep_random = c.keep_random;
  rc.T = c.T;
  rc.kernel = NnKernelSpec{2.0, target.support(), true};
  rc.acquisition.scaled = true;
  rc.search = c.search;
  rc.M = c.M;
  rc.seed = derive_seed(c.seed, {hash_label("exoplanet"), static_cast<std::uint64_t>(planets)});
  rc.final_diagnostics = false;
  RunTrace trace = run(rc, target);
  curve.eval_count = target.eval_count();
  curve.warnings = trace.warnings;
  const InterpolantModel& model = *trace.model;

  Rng rng(derive_seed(rc.seed, {hash_label("profile")}));
  VoronoiApprox approx = voronoi_build(model.nn_spec(), model.nodes(), c.M, rc.sampler, rng);
  const double log_g = rv_prior(data, planets).log_density;
  std::vector<double> sse(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    sse[i] = rv_sse_from_log_target(model.log_values()[i], data, planets, c.sigma_run);
  }
  for (double s : sigmas) {
    std::vector<double> terms;
    for (std::size_t i = 0; i < model.size(); ++i) {
      if (approx.measures[i] <= 0.0 || !std::isfinite(sse[i])) continue;
      terms.push_back(std::log(approx.measures[i]) + log_g + rv_log_likelihood_from_sse(sse[i], data.size(), s));
    }
    curve.log_z.push_back(log_sum_exp(terms));
  }
  return curve;
}

void write_evidence_csv(const std::vector<EvidenceCurve>& curves, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << "sigma,model,log_z\r\n";
  for (const auto& c : curves) {
    for (std::size_t k = 0; k < c.sigma.size(); ++k) {
      out << fmt_double(c.sigma[k]) << ',' << c.planets << ',' << fmt_double(c.log_z[k]) << "\r\n";
    }
  }
}

RvDataset reference_dataset(int planets, std::uint64_t seed) {
  return generate_rv_dataset(reference_system(planets), 60, 180.0, 2.0, seed);
}

}  // namespace aquad
