#include "aquad/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "aquad/errors.hpp"

namespace aquad {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool better(double v1, std::span<const double> x1, double v2, std::span<const double> x2) {
  if (v1 != v2) return v1 > v2;
  return std::lexicographical_compare(x1.begin(), x1.end(), x2.begin(), x2.end());
}

Schedule::Kind parse_kind(const std::string& s) {
  if (s == "constant") return Schedule::Kind::constant;
  if (s == "reciprocal") return Schedule::Kind::reciprocal;
  if (s == "table") return Schedule::Kind::table;
  throw InvalidArgument("unknown schedule kind '" + s + "'");
}

}  // namespace

Schedule Schedule::constant(double v) { return {Kind::constant, v, {}}; }
Schedule Schedule::reciprocal(double c) { return {Kind::reciprocal, c, {}}; }

Schedule Schedule::from_table(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("schedule table must not be empty");
  return {Kind::table, 0.0, std::move(values)};
}

double Schedule::at(int t) const {
  if (t < 1) throw InvalidArgument("schedules are defined for t >= 1");
  switch (kind) {
    case Kind::constant: return value;
    case Kind::reciprocal: return value / t;
    case Kind::table: return table[std::min<std::size_t>(static_cast<std::size_t>(t - 1), table.size() - 1)];
  }
  return value;
}

nlohmann::json to_json(const Schedule& s) {
  switch (s.kind) {
    case Schedule::Kind::constant: return {{"kind", "constant"}, {"value", s.value}};
    case Schedule::Kind::reciprocal: return {{"kind", "reciprocal"}, {"c", s.value}};
    case Schedule::Kind::table: return {{"kind", "table"}, {"values", s.table}};
  }
  return {};
}

Schedule schedule_from_json(const nlohmann::json& j) {
  if (j.is_number()) return Schedule::constant(j.get<double>());
  auto kind = parse_kind(j.at("kind").get<std::string>());
  switch (kind) {
    case Schedule::Kind::constant: return Schedule::constant(j.at("value").get<double>());
    case Schedule::Kind::reciprocal: return Schedule::reciprocal(j.at("c").get<double>());
    case Schedule::Kind::table: return Schedule::from_table(j.at("values").get<std::vector<double>>());
  }
  return {};
}

void AcquisitionSpec::validate() const {
  if (!(p >= 1.0)) throw InvalidArgument("acquisition p-norm order must be >= 1");
  for (const Schedule* s : {&alpha, &beta}) {
    if (s->kind == Schedule::Kind::table) {
      for (double v : s->table) {
        if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("acquisition exponents must be finite and >= 0");
      }
    } else if (!std::isfinite(s->value) || s->value < 0.0) {
      throw InvalidArgument("acquisition exponents must be finite and >= 0");
    }
  }
  if (include_f && !f) throw InvalidArgument("include_f needs a function");
}

nlohmann::json to_json(const AcquisitionSpec& s) {
  return {{"diversity", s.diversity == Diversity::min_distance ? "min-distance" : "gp-variance"},
          {"p", s.p},
          {"alpha", to_json(s.alpha)},
          {"beta", to_json(s.beta)},
          {"include_f", s.include_f},
          {"scaled", s.scaled}};
}

AcquisitionSpec acquisition_from_json(const nlohmann::json& j) {
  AcquisitionSpec s;
  auto div = j.value("diversity", std::string("min-distance"));
  if (div == "min-distance") {
    s.diversity = Diversity::min_distance;
  } else if (div == "gp-variance") {
    s.diversity = Diversity::gp_variance;
  } else {
    throw InvalidArgument("unknown diversity '" + div + "'");
  }
  s.p = j.value("p", 2.0);
  if (j.contains("alpha")) s.alpha = schedule_from_json(j["alpha"]);
  if (j.contains("beta")) s.beta = schedule_from_json(j["beta"]);
  s.scaled = j.value("scaled", false);
  if (j.value("include_f", false)) throw InvalidArgument("include_f cannot be set from JSON (no function)");
  return s;
}

Exponents schedule_eval(const AcquisitionSpec& spec, int t) { return {spec.alpha.at(t), spec.beta.at(t)}; }

AcquisitionEvaluator::AcquisitionEvaluator(const AcquisitionSpec& spec, const InterpolantModel& model,
                                           const BoxSupport& support, int t)
    : spec_(spec),
      model_(model),
      exponents_(schedule_eval(spec, t)),
      metric_(spec.scaled ? Metric::scaled_to(support, spec.p) : Metric(spec.p)) {
  spec.validate();
  if (spec.diversity == Diversity::gp_variance && !model.gaussian()) {
    throw Unsupported("GP-variance diversity needs a Gaussian kernel");
  }
  if (support.dim() != model.dim()) throw InvalidArgument("acquisition: support dimension mismatch");
  if (spec.diversity == Diversity::min_distance) {
    const Metric& mm = model.gaussian() ? metric_ : model.nearest_index().metric();
    reuse_model_index_ = !model.gaussian() && mm.p() == metric_.p() && mm.inv_scale() == metric_.inv_scale();
    if (!reuse_model_index_) index_ = NearestIndex(model.nodes(), metric_);
  }
}

double AcquisitionEvaluator::log_diversity(double d) const {
  if (!(d > 0.0)) return kNegInf;
  return exponents_.beta == 0.0 ? 0.0 : exponents_.beta * std::log(d);
}

double AcquisitionEvaluator::combine(double scaled_pi, double diversity, std::span<const double> x) const {
  double v = log_diversity(diversity);
  if (v == kNegInf) return v;
  if (exponents_.alpha != 0.0) {
    if (!(scaled_pi > 0.0)) return kNegInf;
    v += exponents_.alpha * std::log(scaled_pi);
  }
  if (spec_.include_f) {
    double f = std::abs(spec_.f(x));
    if (!(f > 0.0)) return kNegInf;
    v += std::log(f);
  }
  return v;
}

double AcquisitionEvaluator::log_value(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != model_.dim()) throw InvalidArgument("acquisition: dimension mismatch");
  ++evaluations_;
  const bool need_pi = exponents_.alpha != 0.0;
  if (spec_.diversity == Diversity::gp_variance) {
    Eigen::VectorXd k = model_.kernel_vector(x);
    double v = std::max(model_.gaussian_spec().peak() - k.dot(model_.inverse() * k), 0.0);
    return combine(need_pi ? k.dot(model_.beta()) : 1.0, v, x);
  }
  if (reuse_model_index_) {
    Neighbor nb = model_.nearest_index().nearest(x);
    return combine(model_.beta()[static_cast<Eigen::Index>(nb.index)], nb.distance, x);
  }
  double d = index_.nearest(x).distance;
  if (!(d > 0.0)) return kNegInf;
  return combine(need_pi ? model_.predict_scaled(x) : 1.0, d, x);
}

std::vector<double> AcquisitionEvaluator::log_values(const NodeSet& points) const {
  std::vector<double> out(points.size());
  if (spec_.diversity != Diversity::gp_variance || points.empty()) {
    for (std::size_t m = 0; m < points.size(); ++m) out[m] = log_value(points.row(m));
    return out;
  }
  const auto& g = model_.gaussian_spec();
  const auto B = static_cast<Eigen::Index>(points.size());
  const auto n = static_cast<Eigen::Index>(model_.size());
  const int d = model_.dim();
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> P(points.data().data(), B, d);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X(
      model_.nodes().data().data(), n, d);
  Eigen::MatrixXd Kc = -2.0 * P * X.transpose();
  Kc.colwise() += P.rowwise().squaredNorm();
  Kc.rowwise() += X.rowwise().squaredNorm().transpose();
  const double lp = g.log_peak();
  const double inv2h2 = 1.0 / (2.0 * g.bandwidth * g.bandwidth);
  Kc = (lp - Kc.array().max(0.0) * inv2h2).exp().matrix();
  Eigen::VectorXd var = g.peak() - (Kc * model_.inverse()).cwiseProduct(Kc).rowwise().sum().array();
  Eigen::VectorXd pi = Kc * model_.beta();
  for (Eigen::Index m = 0; m < B; ++m) out[m] = combine(pi[m], std::max(var[m], 0.0), points.row(m));
  evaluations_ += points.size();
  return out;
}

double acquisition_eval(const AcquisitionSpec& spec, const InterpolantModel& model, std::span<const double> x, int t,
                        const std::optional<BoxSupport>& support) {
  BoxSupport box;
  if (support) {
    box = *support;
  } else if (!model.gaussian()) {
    box = model.nn_spec().support;
  } else {
    std::vector<double> lo(x.begin(), x.end()), hi(x.begin(), x.end());
    for (auto& v : hi) v += 1.0;
    if (spec.scaled) throw InvalidArgument("scaled acquisition needs a support box");
    box = BoxSupport(lo, hi);
  }
  AcquisitionEvaluator ev(spec, model, box, t);
  double v = ev.log_value(x);
  return v == kNegInf ? 0.0 : std::exp(v + ev.log_offset());
}

nlohmann::json to_json(const SearchBudget& b) {
  return {{"starts", b.starts},
          {"perturbations", b.perturbations},
          {"refine_top", b.refine_top},
          {"refine_steps", b.refine_steps}};
}

SearchBudget search_budget_from_json(const nlohmann::json& j) {
  SearchBudget b;
  b.starts = j.value("starts", b.starts);
  b.perturbations = j.value("perturbations", b.perturbations);
  b.refine_top = j.value("refine_top", b.refine_top);
  b.refine_steps = j.value("refine_steps", b.refine_steps);
  return b;
}

AcquisitionResult acquisition_maximize(const AcquisitionSpec& spec, const InterpolantModel& model,
                                       const BoxSupport& support, const SearchBudget& budget, int t, Rng& rng) {
  if (budget.starts + budget.perturbations < 1) throw InvalidArgument("acquisition search needs at least one candidate");
  AcquisitionEvaluator ev(spec, model, support, t);
  const int d = model.dim();
  const double n_root = std::pow(static_cast<double>(std::max<std::size_t>(model.size(), 1)), 1.0 / d);
  std::vector<double> spacing(d);
  for (int k = 0; k < d; ++k) spacing[k] = support.width(k) / n_root;

  NodeSet cand(d);
  if (budget.starts > 0) cand = sample_box(support, budget.starts, ProbeSampler::sobol, rng);
  if (budget.perturbations > 0 && !model.nodes().empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, model.size() - 1);
    std::normal_distribution<double> normal;
    std::vector<double> x(d);
    for (std::size_t j = 0; j < budget.perturbations; ++j) {
      auto node = model.nodes().row(pick(rng));
      for (int k = 0; k < d; ++k) x[k] = node[k] + 0.5 * spacing[k] * normal(rng);
      support.clamp(x);
      cand.push_back(x);
    }
  }
  std::vector<double> vals = ev.log_values(cand);

  std::vector<std::size_t> order(cand.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return better(vals[a], cand.row(a), vals[b], cand.row(b));
  });

  AcquisitionResult res;
  res.best_seed_log_value = vals[order[0]];
  std::vector<double> best(cand.row(order[0]).begin(), cand.row(order[0]).end());
  double best_v = vals[order[0]];

  const std::size_t sweep = 2 * static_cast<std::size_t>(d);
  for (std::size_t r = 0; r < std::min(budget.refine_top, order.size()); ++r) {
    if (vals[order[r]] == kNegInf) break;
    std::vector<double> x(cand.row(order[r]).begin(), cand.row(order[r]).end());
    double v = vals[order[r]];
    std::vector<double> step(d);
    for (int k = 0; k < d; ++k) step[k] = 0.25 * spacing[k];
    std::size_t used = 0;
    while (used + sweep <= budget.refine_steps) {
      NodeSet moves(d);
      moves.reserve(sweep);
      std::vector<double> y(d);
      for (int k = 0; k < d; ++k) {
        for (double sgn : {1.0, -1.0}) {
          y = x;
          y[k] += sgn * step[k];
          support.clamp(y);
          moves.push_back(y);
        }
      }
      auto mv = ev.log_values(moves);
      used += sweep;
      std::size_t arg = 0;
      for (std::size_t m = 1; m < sweep; ++m) {
        if (better(mv[m], moves.row(m), mv[arg], moves.row(arg))) arg = m;
      }
      if (mv[arg] > v) {
        x.assign(moves.row(arg).begin(), moves.row(arg).end());
        v = mv[arg];
      } else {
        bool tiny = true;
        for (int k = 0; k < d; ++k) {
          step[k] *= 0.5;
          tiny = tiny && step[k] < 1e-12 * support.width(k);
        }
        if (tiny) break;
      }
    }
    if (better(v, x, best_v, best)) {
      best = x;
      best_v = v;
    }
  }

  res.evaluations = ev.evaluations();
  if (best_v == kNegInf) {
    res.fallback = true;
    res.x = uniform_in_box(support, rng);
    res.log_value = kNegInf;
    return res;
  }
  res.x = to_vector(best);
  res.log_value = best_v + ev.log_offset();
  res.best_seed_log_value += ev.log_offset();
  return res;
}

}  // namespace aquad
