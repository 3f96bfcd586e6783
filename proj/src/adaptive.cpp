#include "aquad/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <spdlog/spdlog.h>

#include "aquad/errors.hpp"

namespace aquad {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

nlohmann::json opt_json(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> json_opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

nlohmann::json log_json(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double json_log(const nlohmann::json& j) { return j.is_null() ? kNegInf : j.get<double>(); }

std::string init_name(InitMode m) {
  switch (m) {
    case InitMode::uniform: return "uniform";
    case InitMode::user: return "user";
    case InitMode::presample: return "presample";
  }
  return "uniform";
}

InitMode parse_init(const std::string& s) {
  if (s == "uniform") return InitMode::uniform;
  if (s == "user") return InitMode::user;
  if (s == "presample") return InitMode::presample;
  throw InvalidArgument("unknown init mode '" + s + "'");
}

double nearest_euclidean(const NodeSet& nodes, std::span<const double> x) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes.size(); ++i) best = std::min(best, euclidean_distance(nodes.row(i), x));
  return best;
}

IterationRecord record_from_json(const nlohmann::json& j) {
  IterationRecord r;
  r.t = j.at("t").get<std::size_t>();
  r.nodes = j.at("nodes").get<std::size_t>();
  if (j.contains("node") && !j["node"].is_null()) {
    auto v = j["node"].get<std::vector<double>>();
    r.node = Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  r.log_pi = j.contains("log_pi") ? json_log(j["log_pi"]) : 0.0;
  r.log_acquisition = j.contains("log_acquisition") ? json_log(j["log_acquisition"]) : 0.0;
  r.fallback = j.value("fallback", false);
  r.perturbed = j.value("perturbed", false);
  r.fill_distance = json_opt(j, "fill_distance");
  r.separation_distance = json_opt(j, "separation_distance");
  r.log_z_snapshot = json_opt(j, "log_z_snapshot");
  r.bandwidth = json_opt(j, "bandwidth");
  return r;
}

struct State {
  std::optional<InterpolantModel> model;
  std::size_t t_done = 0;
  RunTrace trace;
  std::uint64_t evals_before = 0;  // evaluations consumed before this process
  std::uint64_t count_base = 0;    // target counter when this process started
};

Rng stream(const RunConfig& c, std::string_view label, std::uint64_t t = 0) {
  return Rng(derive_seed(c.seed, {hash_label(label), t}));
}

KernelSpec kernel_with_bandwidth(const KernelSpec& k, double h, int dim) {
  auto g = std::get<GaussianKernelSpec>(k);
  g.bandwidth = h;
  g.dim = dim;
  return g;
}

InterpolantModel refit(const InterpolantModel& m, const KernelSpec& kernel, const std::optional<double>& jitter) {
  return fit(m.nodes(), m.log_values(), kernel, jitter);
}

void retune(const RunConfig& c, const TargetDensity& target, State& s, bool final) {
  const auto& m = *s.model;
  if (m.size() < 2) return;
  auto grid = default_bandwidth_grid(m.nodes(), target.support(), c.tune_grid_points);
  BandwidthScan scan = tune_bandwidth_zhat(m.nodes(), m.log_values(), grid, !final);
  for (const auto& w : scan.warnings) s.trace.warnings.push_back("tune: " + w);
  s.model = refit(m, kernel_with_bandwidth(m.kernel(), scan.selected, m.dim()), c.jitter);
  if (final) s.trace.scan = std::move(scan);
}

void fill_diagnostics(const RunConfig& c, const TargetDensity& target, const InterpolantModel& m,
                      IterationRecord& r) {
  Rng rng = stream(c, "fill", 0);
  r.fill_distance = fill_distance(m.nodes(), target.support(), c.fill_probes, rng);
  if (m.size() >= 2) r.separation_distance = separation_distance(m.nodes());
}

void snapshot(const RunConfig& c, const InterpolantModel& m, std::size_t t, IterationRecord& r) {
  if (m.gaussian()) {
    r.log_z_snapshot = z_hat(m).log_abs;
    return;
  }
  Rng rng = stream(c, "snapshot", t);
  auto approx = voronoi_build(m.nn_spec(), m.nodes(), std::max<std::size_t>(c.M / 10, 1), c.sampler, rng);
  r.log_z_snapshot = z_hat(m, &approx).log_abs;
}

void write_checkpoint(const RunConfig& c, const State& s, const TargetDensity& target) {
  if (!c.checkpoint) return;
  nlohmann::json j;
  j["config"] = to_json(c);
  j["t_done"] = s.t_done;
  j["model"] = to_json(*s.model, true);
  j["eval_count"] = s.evals_before + (target.eval_count() - s.count_base);
  j["acquisition_target_evals"] = s.trace.acquisition_target_evals;
  j["warnings"] = s.trace.warnings;
  auto& recs = j["records"] = nlohmann::json::array();
  for (const auto& r : s.trace.records) recs.push_back(to_json(r));
  auto tmp = *c.checkpoint;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw InvalidArgument("cannot write checkpoint " + tmp.string());
    out << j.dump();
  }
  std::filesystem::rename(tmp, *c.checkpoint);
}

RunTrace continue_run(const RunConfig& c, const TargetDensity& target, State s) {
  const auto& support = target.support();
  const double diam = support.diameter();
  const bool gaussian = s.model->gaussian();

  for (std::size_t t = s.t_done + 1; t <= c.T; ++t) {
    Rng rng = stream(c, "iteration", t);
    IterationRecord rec;
    rec.t = t;
    Vector x;
    const auto before = target.eval_count();
    if (c.policy == NodePolicy::uniform) {
      x = uniform_in_box(support, rng);
      rec.log_acquisition = std::numeric_limits<double>::quiet_NaN();
    } else {
      AcquisitionResult a = acquisition_maximize(c.acquisition, *s.model, support, c.search, static_cast<int>(t), rng);
      x = a.x;
      rec.log_acquisition = a.log_value;
      rec.fallback = a.fallback;
    }
    s.trace.acquisition_target_evals += target.eval_count() - before;

    std::normal_distribution<double> normal;
    for (int attempt = 0; nearest_euclidean(s.model->nodes(), as_span(x)) <= 1e-12; ++attempt) {
      if (attempt > 100) throw NumericFailure("could not move the new node away from existing nodes");
      Vector dir(x.size());
      for (Eigen::Index k = 0; k < dir.size(); ++k) dir[k] = normal(rng);
      x += 1e-6 * diam * dir.normalized();
      support.clamp({x.data(), static_cast<std::size_t>(x.size())});
      rec.perturbed = true;
    }
    if (rec.perturbed) s.trace.warnings.push_back("t=" + std::to_string(t) + ": new node coincided with a node; perturbed");

    double lp;
    try {
      lp = target.log_eval(x);
    } catch (const BudgetExhausted&) {
      s.trace.partial = true;
      s.trace.warnings.push_back("target budget exhausted after t=" + std::to_string(s.t_done));
      write_checkpoint(c, s, target);
      s.trace.model = std::move(s.model);
      s.trace.eval_count = s.evals_before + (target.eval_count() - s.count_base);
      return std::move(s.trace);
    }
    s.model = extend(std::move(*s.model), as_span(x), lp);
    rec.node = x;
    rec.log_pi = lp;
    rec.nodes = s.model->size();

    if (gaussian && c.tune_bandwidth && c.retune_every > 0 && t % c.retune_every == 0 && t < c.T) {
      retune(c, target, s, false);
    }
    if (gaussian) rec.bandwidth = s.model->gaussian_spec().bandwidth;
    const auto q_before = target.eval_count();
    if (c.diagnostics_every > 0 && t % c.diagnostics_every == 0) fill_diagnostics(c, target, *s.model, rec);
    if (c.snapshot_every > 0 && t % c.snapshot_every == 0) snapshot(c, *s.model, t, rec);
    s.trace.quadrature_target_evals += target.eval_count() - q_before;
    s.trace.records.push_back(std::move(rec));
    s.t_done = t;
    write_checkpoint(c, s, target);
  }

  const auto q_before = target.eval_count();
  if (gaussian && c.tune_bandwidth) retune(c, target, s, true);
  EstimateOptions opt;
  opt.route = c.route;
  opt.M = c.M;
  opt.sampler = c.sampler;
  opt.support = support;
  Rng rng = stream(c, "final");
  EstimateReport rep = estimate(*s.model, c.requests, opt, rng);
  if (c.final_diagnostics) {
    Rng frng = stream(c, "fill", c.T + 1);
    rep.diagnostics.fill_distance = fill_distance(s.model->nodes(), support, c.fill_probes, frng);
    if (s.model->size() >= 2) rep.diagnostics.separation_distance = separation_distance(s.model->nodes());
  }
  s.trace.quadrature_target_evals += target.eval_count() - q_before;
  s.trace.eval_count = s.evals_before + (target.eval_count() - s.count_base);
  rep.eval_count = s.trace.eval_count;
  for (const auto& w : s.model->warnings()) s.trace.warnings.push_back(w);
  rep.warnings.insert(rep.warnings.end(), s.trace.warnings.begin(), s.trace.warnings.end());
  s.trace.report = std::move(rep);
  s.trace.model = std::move(s.model);
  return std::move(s.trace);
}

}  // namespace

void RunConfig::validate(int dim) const {
  if (T > 0 && policy == NodePolicy::acquisition) acquisition.validate();
  if (init == InitMode::uniform && n0 < 1) throw InvalidArgument("N0 must be >= 1");
  if (init == InitMode::user) {
    if (user_nodes.empty()) throw InvalidArgument("user init needs nodes");
    if (user_nodes.dim() != dim) throw InvalidArgument("user nodes have the wrong dimension");
  }
  if (init == InitMode::presample) {
    if (keep_best + keep_random < 1) throw InvalidArgument("presample must keep at least one node");
    if (presample_budget < keep_best + keep_random) throw InvalidArgument("presample budget below keep counts");
  }
  if (M < 1) throw InvalidArgument("M must be >= 1");
  if (is_gaussian(kernel)) {
    const auto& g = std::get<GaussianKernelSpec>(kernel);
    if (!std::isfinite(g.bandwidth)) throw InvalidArgument("bandwidth must be finite");
    if (acquisition.diversity == Diversity::gp_variance && policy == NodePolicy::acquisition && T > 0) {
      // supported
    }
  } else {
    std::get<NnKernelSpec>(kernel).validate();
    if (std::get<NnKernelSpec>(kernel).support.dim() != dim) throw InvalidArgument("NN kernel support dimension mismatch");
    if (acquisition.diversity == Diversity::gp_variance && policy == NodePolicy::acquisition && T > 0) {
      throw Unsupported("GP-variance diversity needs a Gaussian kernel");
    }
  }
}

std::size_t RunConfig::budget() const {
  std::size_t init_cost = init == InitMode::uniform    ? n0
                          : init == InitMode::user     ? user_nodes.size()
                                                       : presample_budget;
  return init_cost + T;
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["n0"] = c.n0;
  j["init"] = init_name(c.init);
  if (c.init == InitMode::user) {
    j["user_nodes"] = c.user_nodes.data();
  }
  j["presample_budget"] = c.presample_budget;
  j["keep_best"] = c.keep_best;
  j["keep_random"] = c.keep_random;
  j["T"] = c.T;
  if (is_gaussian(c.kernel)) {
    const auto& g = std::get<GaussianKernelSpec>(c.kernel);
    j["kernel"] = {{"type", "gaussian"}, {"h", g.bandwidth}};
  } else {
    const auto& n = std::get<NnKernelSpec>(c.kernel);
    j["kernel"] = {{"type", "nn"}, {"p", n.p}, {"scaled", n.scaled}};
  }
  j["tune_bandwidth"] = c.tune_bandwidth;
  j["retune_every"] = c.retune_every;
  j["tune_grid_points"] = c.tune_grid_points;
  j["jitter"] = opt_json(c.jitter);
  j["acquisition"] = to_json(c.acquisition);
  j["search"] = to_json(c.search);
  j["policy"] = c.policy == NodePolicy::uniform ? "uniform" : "acquisition";
  j["route"] = std::string(to_string(c.route));
  j["M"] = c.M;
  j["sampler"] = std::string(to_string(c.sampler));
  auto& moments = j["moments"] = nlohmann::json::array();
  for (const auto& r : c.requests) {
    if (r.kind == MomentRequest::Kind::power) moments.push_back(r.r);
    if (r.kind == MomentRequest::Kind::constant) moments.push_back(0);
  }
  j["seed"] = c.seed;
  j["snapshot_every"] = c.snapshot_every;
  j["diagnostics_every"] = c.diagnostics_every;
  j["fill_probes"] = c.fill_probes;
  j["final_diagnostics"] = c.final_diagnostics;
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j, int dim, const BoxSupport& support) {
  try {
    RunConfig c;
    c.n0 = j.value("n0", c.n0);
    c.init = parse_init(j.value("init", std::string("uniform")));
    if (j.contains("user_nodes")) c.user_nodes = NodeSet(dim, j["user_nodes"].get<std::vector<double>>());
    c.presample_budget = j.value("presample_budget", c.presample_budget);
    c.keep_best = j.value("keep_best", c.keep_best);
    c.keep_random = j.value("keep_random", c.keep_random);
    c.T = j.value("T", c.T);
    const auto& k = j.contains("kernel") ? j["kernel"] : nlohmann::json::object();
    const auto type = k.value("type", std::string("nn"));
    if (type == "gaussian") {
      c.kernel = GaussianKernelSpec{k.value("h", 0.0), dim, true};
    } else if (type == "nn") {
      c.kernel = NnKernelSpec{k.value("p", 2.0), support, k.value("scaled", false)};
    } else {
      throw InvalidArgument("unknown kernel type '" + type + "'");
    }
    c.tune_bandwidth = j.value("tune_bandwidth", c.tune_bandwidth);
    c.retune_every = j.value("retune_every", c.retune_every);
    c.tune_grid_points = j.value("tune_grid_points", c.tune_grid_points);
    c.jitter = json_opt(j, "jitter");
    if (j.contains("acquisition")) c.acquisition = acquisition_from_json(j["acquisition"]);
    if (j.contains("search")) c.search = search_budget_from_json(j["search"]);
    auto policy = j.value("policy", std::string("acquisition"));
    if (policy != "acquisition" && policy != "uniform") throw InvalidArgument("unknown node policy '" + policy + "'");
    c.policy = policy == "uniform" ? NodePolicy::uniform : NodePolicy::acquisition;
    c.route = parse_route(j.value("route", std::string("auto")));
    c.M = j.value("M", c.M);
    c.sampler = parse_sampler(j.value("sampler", std::string("sobol")));
    if (j.contains("moments")) {
      c.requests.clear();
      for (const auto& r : j["moments"]) {
        int p = r.get<int>();
        c.requests.push_back(p == 0 ? MomentRequest::one() : MomentRequest::power(p));
      }
    }
    c.seed = j.value("seed", c.seed);
    c.snapshot_every = j.value("snapshot_every", c.snapshot_every);
    c.diagnostics_every = j.value("diagnostics_every", c.diagnostics_every);
    c.fill_probes = j.value("fill_probes", c.fill_probes);
    c.final_diagnostics = j.value("final_diagnostics", c.final_diagnostics);
    c.validate(dim);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed run config: ") + e.what());
  }
}

nlohmann::json to_json(const IterationRecord& r) {
  nlohmann::json j;
  j["t"] = r.t;
  j["nodes"] = r.nodes;
  j["node"] = r.node.size() ? nlohmann::json(std::vector<double>(r.node.data(), r.node.data() + r.node.size()))
                            : nlohmann::json(nullptr);
  j["log_pi"] = log_json(r.log_pi);
  j["log_acquisition"] = log_json(r.log_acquisition);
  j["fallback"] = r.fallback;
  j["perturbed"] = r.perturbed;
  j["fill_distance"] = opt_json(r.fill_distance);
  j["separation_distance"] = opt_json(r.separation_distance);
  j["log_z_snapshot"] = opt_json(r.log_z_snapshot);
  if (r.log_z_snapshot) j["snapshot_approximate"] = true;
  j["bandwidth"] = opt_json(r.bandwidth);
  return j;
}

nlohmann::json report_json(const RunTrace& trace) {
  nlohmann::json j;
  if (trace.report) j["report"] = to_json(*trace.report);
  j["eval_count"] = trace.eval_count;
  j["acquisition_target_evals"] = trace.acquisition_target_evals;
  j["quadrature_target_evals"] = trace.quadrature_target_evals;
  j["partial"] = trace.partial;
  j["warnings"] = trace.warnings;
  if (trace.model) {
    j["nodes"] = trace.model->size();
    if (trace.model->gaussian()) j["bandwidth"] = trace.model->gaussian_spec().bandwidth;
  }
  return j;
}

void write_trace_jsonl(const RunTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write trace " + path.string());
  for (const auto& r : trace.records) out << to_json(r).dump() << '\n';
  nlohmann::json fin = report_json(trace);
  fin["final"] = true;
  out << fin.dump() << '\n';
}

InitialNodes presample_init(const TargetDensity& target, std::size_t budget, std::size_t keep_best,
                            std::size_t keep_random, Rng& rng) {
  if (budget < keep_best + keep_random) throw InvalidArgument("presample budget below keep_best + keep_random");
  const int d = target.dim();
  NodeSet all(d);
  all.reserve(budget);
  std::vector<double> logs(budget);
  for (std::size_t e = 0; e < budget; ++e) {
    Vector x = uniform_in_box(target.support(), rng);
    all.push_back(as_span(x));
    logs[e] = target.log_eval(x);
  }
  std::vector<std::size_t> order(budget);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return logs[a] > logs[b]; });
  std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep_best));
  std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(keep_best), order.end());
  std::sort(rest.begin(), rest.end());
  std::shuffle(rest.begin(), rest.end(), rng);
  chosen.insert(chosen.end(), rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(keep_random));

  InitialNodes out{NodeSet(d), {}};
  for (std::size_t i : chosen) {
    auto row = all.row(i);
    if (!out.nodes.empty() && nearest_euclidean(out.nodes, row) == 0.0) continue;
    out.nodes.push_back(row);
    out.log_values.push_back(logs[i]);
  }
  return out;
}

RunTrace run(const RunConfig& c, const TargetDensity& target) {
  const int d = target.dim();
  c.validate(d);
  State s;
  s.count_base = target.eval_count();

  Rng rng = stream(c, "init");
  InitialNodes init{NodeSet(d), {}};
  switch (c.init) {
    case InitMode::uniform:
      for (std::size_t i = 0; i < c.n0; ++i) {
        Vector x = uniform_in_box(target.support(), rng);
        double lp = target.log_eval(x);
        if (!init.nodes.empty() && nearest_euclidean(init.nodes, as_span(x)) == 0.0) continue;
        init.nodes.push_back(as_span(x));
        init.log_values.push_back(lp);
      }
      break;
    case InitMode::user:
      for (std::size_t i = 0; i < c.user_nodes.size(); ++i) {
        init.nodes.push_back(c.user_nodes.row(i));
        init.log_values.push_back(target.log_eval(c.user_nodes.row(i)));
      }
      break;
    case InitMode::presample:
      init = presample_init(target, c.presample_budget, c.keep_best, c.keep_random, rng);
      break;
  }

  KernelSpec kernel = c.kernel;
  if (is_gaussian(kernel)) {
    double h = std::get<GaussianKernelSpec>(kernel).bandwidth;
    if (!(h > 0.0)) {
      h = init.nodes.size() >= 2 ? separation_distance(init.nodes) : target.support().diameter() / 10.0;
    }
    kernel = kernel_with_bandwidth(kernel, h, d);
  }
  s.model = fit(std::move(init.nodes), std::move(init.log_values), kernel, c.jitter);

  IterationRecord r0;
  r0.t = 0;
  r0.nodes = s.model->size();
  r0.log_pi = std::numeric_limits<double>::quiet_NaN();
  r0.log_acquisition = std::numeric_limits<double>::quiet_NaN();
  if (s.model->gaussian()) r0.bandwidth = s.model->gaussian_spec().bandwidth;
  const auto q_before = target.eval_count();
  if (c.diagnostics_every > 0) fill_diagnostics(c, target, *s.model, r0);
  if (c.snapshot_every > 0) snapshot(c, *s.model, 0, r0);
  s.trace.quadrature_target_evals += target.eval_count() - q_before;
  s.trace.records.push_back(std::move(r0));
  return continue_run(c, target, std::move(s));
}

RunTrace resume(const RunConfig& c, const TargetDensity& target, const std::filesystem::path& checkpoint) {
  std::ifstream in(checkpoint);
  if (!in) throw InvalidArgument("cannot read checkpoint " + checkpoint.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed checkpoint: ") + e.what());
  }
  c.validate(target.dim());
  State s;
  s.count_base = target.eval_count();
  s.model = model_from_json(j.at("model"));
  s.t_done = j.at("t_done").get<std::size_t>();
  s.evals_before = j.at("eval_count").get<std::uint64_t>();
  s.trace.acquisition_target_evals = j.value("acquisition_target_evals", std::uint64_t{0});
  s.trace.warnings = j.value("warnings", std::vector<std::string>{});
  for (const auto& r : j.at("records")) s.trace.records.push_back(record_from_json(r));
  return continue_run(c, target, std::move(s));
}

}  // namespace aquad
