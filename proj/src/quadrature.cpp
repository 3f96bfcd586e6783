#include "aquad/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "aquad/errors.hpp"

namespace aquad {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

const GaussianKernelSpec& normalized_gaussian(const InterpolantModel& model, const char* op) {
  if (!model.gaussian()) throw Unsupported(std::string(op) + " needs a Gaussian kernel");
  const auto& spec = model.gaussian_spec();
  if (!spec.normalized) throw Unsupported(std::string(op) + " is implemented for normalized kernels only");
  return spec;
}

const NnKernelSpec& nn_only(const InterpolantModel& model, const char* op) {
  if (model.gaussian()) throw Unsupported(std::string(op) + " needs an NN kernel");
  return model.nn_spec();
}

void check_approx(const InterpolantModel& model, const VoronoiApprox& approx) {
  if (approx.node_fingerprint != model.nodes().fingerprint() || approx.measures.size() != model.size()) {
    throw InvalidState("Voronoi measures were built for a different node set");
  }
}

double gaussian_log_density(std::span<const double> x, std::span<const double> mu, double sd) {
  double r2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - mu[i];
    r2 += d * d;
  }
  const double d = static_cast<double>(x.size());
  return -0.5 * d * std::log(2.0 * std::numbers::pi * sd * sd) - r2 / (2.0 * sd * sd);
}

double kernel_value(const InterpolantModel& model, std::span<const double> z, std::size_t i) {
  if (model.gaussian()) return gaussian_eval(model.gaussian_spec(), z, model.nodes().row(i));
  if (!model.nn_spec().support.contains(z)) return 0.0;
  return model.nearest_index().nearest(z).index == i ? 1.0 : 0.0;
}

// Shared accumulation for every probe-based estimator: gamma_m is
// scaled_pi[m] * exp(log_inv_q[m]), stabilized by the largest log_inv_q.
ProbeEstimate probe_estimate(const std::vector<double>& scaled_pi, const std::vector<double>& log_inv_q,
                             const NodeSet& probes, const MomentRequest& request, double shift) {
  const std::size_t M = probes.size();
  const int out = request.output_size(probes.dim());
  double c = kNegInf;
  for (std::size_t m = 0; m < M; ++m) {
    if (scaled_pi[m] != 0.0) c = std::max(c, log_inv_q[m]);
  }
  if (!std::isfinite(c)) c = 0.0;
  double sum = 0.0;
  Vector acc = Vector::Zero(out);
  Vector f(out);
  for (std::size_t m = 0; m < M; ++m) {
    if (scaled_pi[m] == 0.0) continue;
    double g = scaled_pi[m] * std::exp(log_inv_q[m] - c);
    if (!std::isfinite(g)) throw NumericFailure("non-finite importance weight");
    sum += g;
    request.evaluate(probes.row(m), {f.data(), static_cast<std::size_t>(out)});
    acc += g * f;
  }
  ProbeEstimate r;
  r.z = make_zhat(sum / static_cast<double>(M), shift + c);
  r.i_hat = sum != 0.0 ? Vector(acc / sum) : Vector::Constant(out, std::numeric_limits<double>::quiet_NaN());
  return r;
}

}  // namespace

MomentRequest MomentRequest::power(int r) {
  if (r < 1) throw InvalidArgument("power moment needs r >= 1");
  MomentRequest m;
  m.kind = Kind::power;
  m.r = r;
  m.label = "x^" + std::to_string(r);
  return m;
}

MomentRequest MomentRequest::custom(ScalarFn fn, std::string label) {
  if (!fn) throw InvalidArgument("custom moment needs a function");
  MomentRequest m;
  m.kind = Kind::custom;
  m.fn = std::move(fn);
  m.label = std::move(label);
  return m;
}

int MomentRequest::output_size(int dim) const { return kind == Kind::power ? dim : 1; }

void MomentRequest::evaluate(std::span<const double> x, std::span<double> out) const {
  switch (kind) {
    case Kind::constant:
      out[0] = 1.0;
      return;
    case Kind::power:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = r == 1 ? x[i] : r == 2 ? x[i] * x[i] : std::pow(x[i], r);
      return;
    case Kind::custom:
      out[0] = fn(x);
      return;
  }
}

std::string_view to_string(Route r) {
  switch (r) {
    case Route::automatic: return "auto";
    case Route::closed_form: return "closed-form";
    case Route::gauss_hermite: return "gauss-hermite";
    case Route::kernel_mc: return "kernel-mc";
    case Route::kernel_is: return "kernel-is";
    case Route::voronoi: return "voronoi";
    case Route::surrogate_is: return "surrogate-is";
  }
  return "auto";
}

Route parse_route(std::string_view name) {
  for (Route r : {Route::automatic, Route::closed_form, Route::gauss_hermite, Route::kernel_mc, Route::kernel_is,
                  Route::voronoi, Route::surrogate_is}) {
    if (to_string(r) == name) return r;
  }
  throw InvalidArgument("unknown quadrature route '" + std::string(name) + "'");
}

ZHat make_zhat(double scaled, double shift) {
  ZHat z;
  z.negative = scaled < 0.0;
  z.log_abs = std::log(std::abs(scaled)) + shift;
  z.value = z.negative ? -std::exp(z.log_abs) : std::exp(z.log_abs);
  return z;
}

nlohmann::json to_json(const EstimateReport& report) {
  nlohmann::json j;
  j["z_hat"] = report.z.value;
  j["log_z_hat"] = std::isfinite(report.z.log_abs) ? nlohmann::json(report.z.log_abs) : nlohmann::json(nullptr);
  j["z_negative"] = report.z.negative;
  auto& ih = j["i_hat"] = nlohmann::json::object();
  for (std::size_t k = 0; k < report.i_hat.size(); ++k) {
    const auto& v = report.i_hat[k];
    std::string key = k < report.labels.size() ? report.labels[k] : std::to_string(k);
    ih[key] = std::vector<double>(v.data(), v.data() + v.size());
  }
  j["route"] = std::string(to_string(report.route));
  j["M"] = report.M;
  auto& d = j["diagnostics"] = nlohmann::json::object();
  if (report.diagnostics.fill_distance) d["fill_distance"] = *report.diagnostics.fill_distance;
  if (report.diagnostics.separation_distance) d["separation_distance"] = *report.diagnostics.separation_distance;
  if (report.diagnostics.smallest_pivot) d["smallest_pivot"] = *report.diagnostics.smallest_pivot;
  j["eval_count"] = report.eval_count;
  j["warnings"] = report.warnings;
  return j;
}

ZHat z_hat(const InterpolantModel& model, const VoronoiApprox* approx) {
  if (model.gaussian()) {
    normalized_gaussian(model, "Z-hat");
    return make_zhat(model.beta().sum(), model.shift());
  }
  if (approx == nullptr) throw MissingMeasures("NN Z-hat needs Voronoi measures");
  check_approx(model, *approx);
  double s = 0.0;
  for (std::size_t i = 0; i < model.size(); ++i) s += model.beta()[i] * approx->measures[i];
  return make_zhat(s, model.shift());
}

ClosedFormMoment i_hat_closed_form(const InterpolantModel& model, int r) {
  const auto& spec = normalized_gaussian(model, "closed-form moments");
  const auto n = static_cast<Eigen::Index>(model.size());
  Eigen::MatrixXd zeta(n, model.dim());
  for (Eigen::Index i = 0; i < n; ++i) zeta.row(i) = gaussian_moment_integral(spec, model.nodes().row(i), r);
  const double z = model.beta().sum();
  ClosedFormMoment out;
  out.beta_form = zeta.transpose() * model.beta() / z;
  Eigen::MatrixXd nu = model.inverse() * zeta;
  out.nu_form = nu.transpose() * model.values() / z;
  return out;
}

Vector i_hat_gauss_hermite(const InterpolantModel& model, const MomentRequest& request, int points_per_dim) {
  const auto& spec = normalized_gaussian(model, "Gauss-Hermite moments");
  GaussHermiteRule rule(model.dim(), points_per_dim);
  const int out = request.output_size(model.dim());
  Vector acc = Vector::Zero(out);
  Vector f(out);
  std::vector<double> x(model.dim());
  for (std::size_t i = 0; i < model.size(); ++i) {
    auto center = model.nodes().row(i);
    Vector J = Vector::Zero(out);
    for (std::size_t m = 0; m < rule.size(); ++m) {
      auto z = rule.nodes().row(m);
      for (int k = 0; k < model.dim(); ++k) x[k] = center[k] + spec.bandwidth * z[k];
      request.evaluate(x, {f.data(), static_cast<std::size_t>(out)});
      J += rule.weights()[m] * f;
    }
    acc += model.beta()[i] * J;
  }
  return acc / model.beta().sum();
}

Vector i_hat_kernel_mc(const InterpolantModel& model, const MomentRequest& request, std::size_t M, Rng& rng) {
  const auto& spec = normalized_gaussian(model, "kernel MC");
  if (M < 1) throw InvalidArgument("kernel MC needs M >= 1");
  std::normal_distribution<double> normal;
  const int out = request.output_size(model.dim());
  Vector acc = Vector::Zero(out);
  Vector f(out);
  std::vector<double> z(model.dim());
  for (std::size_t i = 0; i < model.size(); ++i) {
    auto center = model.nodes().row(i);
    Vector J = Vector::Zero(out);
    for (std::size_t m = 0; m < M; ++m) {
      for (int k = 0; k < model.dim(); ++k) z[k] = center[k] + spec.bandwidth * normal(rng);
      request.evaluate(z, {f.data(), static_cast<std::size_t>(out)});
      J += f;
    }
    acc += model.beta()[i] * J / static_cast<double>(M);
  }
  return acc / model.beta().sum();
}

UniformProposal::UniformProposal(BoxSupport box) : box_(std::move(box)), log_q_(-box_.log_volume()) {}

void UniformProposal::sample(Rng& rng, std::span<double> out) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < box_.dim(); ++i) out[i] = box_.lower()[i] + u(rng) * box_.width(i);
}

double UniformProposal::log_density(std::span<const double> x) const { return box_.contains(x) ? log_q_ : kNegInf; }

GaussianProposal::GaussianProposal(Vector center, double sd) : center_(std::move(center)), sd_(sd) {
  if (!(sd > 0.0)) throw InvalidArgument("Gaussian proposal needs sd > 0");
}

void GaussianProposal::sample(Rng& rng, std::span<double> out) const {
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < center_.size(); ++i) out[i] = center_[i] + sd_ * normal(rng);
}

double GaussianProposal::log_density(std::span<const double> x) const {
  return gaussian_log_density(x, as_span(center_), sd_);
}

NodeMixtureProposal::NodeMixtureProposal(const InterpolantModel& model) : nodes_(model.nodes()) {
  const std::size_t n = nodes_.size();
  if (n < 2) throw DegenerateNodes("mixture proposal needs at least two nodes to set covariances");
  sd_.assign(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) sd_[i] = std::min(sd_[i], euclidean_distance(nodes_.row(i), nodes_.row(j)));
    }
    if (!(sd_[i] > 0.0)) throw DegenerateNodes("mixture proposal: coincident nodes");
  }
  weights_.assign(model.values().data(), model.values().data() + n);
  double total = 0.0;
  for (double w : weights_) total += w;
  if (!(total > 0.0)) {
    std::fill(weights_.begin(), weights_.end(), 1.0);
    total = static_cast<double>(n);
  }
  log_weights_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    weights_[i] /= total;
    log_weights_[i] = std::log(weights_[i]);
  }
  cdf_.resize(n);
  double run = 0.0;
  for (std::size_t i = 0; i < n; ++i) cdf_[i] = run += weights_[i];
}

void NodeMixtureProposal::sample(Rng& rng, std::span<double> out) const {
  double u = std::uniform_real_distribution<double>(0.0, cdf_.back())(rng);
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  std::size_t i = std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1);
  std::normal_distribution<double> normal;
  auto c = nodes_.row(i);
  for (int k = 0; k < nodes_.dim(); ++k) out[k] = c[k] + sd_[i] * normal(rng);
}

double NodeMixtureProposal::log_density(std::span<const double> x) const {
  double mx = kNegInf;
  std::vector<double> terms(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    terms[i] = log_weights_[i] + gaussian_log_density(x, nodes_.row(i), sd_[i]);
    mx = std::max(mx, terms[i]);
  }
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  return mx + std::log(s);
}

KernelIsResult i_hat_kernel_is(const InterpolantModel& model, const MomentRequest& request,
                               const std::vector<std::shared_ptr<const Proposal>>& proposals, std::size_t M,
                               Rng& rng) {
  if (M < 1) throw InvalidArgument("kernel IS needs M >= 1");
  const std::size_t n = model.size();
  if (proposals.size() != 1 && proposals.size() != n) {
    throw InvalidArgument("kernel IS needs one shared proposal or one per kernel");
  }
  if (model.gaussian()) normalized_gaussian(model, "kernel IS");
  const int d = model.dim();
  const int out = request.output_size(d);
  const bool shared = proposals.size() == 1;

  KernelIsResult res;
  res.c_hat.assign(n, 0.0);
  Vector acc = Vector::Zero(out);
  Vector f(out);
  double wsum = 0.0;
  std::vector<double> z(d);

  auto visit = [&](std::size_t i, const std::vector<double>& pt, double log_q) {
    double k = kernel_value(model, pt, i);
    if (k == 0.0) return;
    if (!std::isfinite(log_q)) throw NumericFailure("proposal density is zero at a kernel sample");
    double w = k * std::exp(-log_q);
    if (!std::isfinite(w)) throw NumericFailure("kernel IS weight overflow");
    res.c_hat[i] += w;
    double bw = model.beta()[static_cast<Eigen::Index>(i)] * w;
    if (bw == 0.0) return;
    request.evaluate(pt, {f.data(), static_cast<std::size_t>(out)});
    acc += bw * f;
    wsum += bw;
  };

  if (shared) {
    const auto& q = *proposals[0];
    for (std::size_t m = 0; m < M; ++m) {
      q.sample(rng, z);
      double lq = q.log_density(z);
      if (model.gaussian()) {
        for (std::size_t i = 0; i < n; ++i) visit(i, z, lq);
      } else if (model.nn_spec().support.contains(z)) {
        visit(model.nearest_index().nearest(z).index, z, lq);
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& q = *proposals[i];
      for (std::size_t m = 0; m < M; ++m) {
        q.sample(rng, z);
        visit(i, z, q.log_density(z));
      }
    }
  }
  double zs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    res.c_hat[i] /= static_cast<double>(M);
    zs += model.beta()[static_cast<Eigen::Index>(i)] * res.c_hat[i];
  }
  res.z = make_zhat(zs, model.shift());
  res.i_hat = wsum != 0.0 ? Vector(acc / wsum) : Vector::Constant(out, std::numeric_limits<double>::quiet_NaN());
  return res;
}

ProbeEstimate voronoi_estimates(const InterpolantModel& model, const MomentRequest& request,
                                const VoronoiApprox& approx, bool one_point) {
  nn_only(model, "Voronoi estimates");
  check_approx(model, approx);
  if (one_point) {
    const int out = request.output_size(model.dim());
    Vector acc = Vector::Zero(out);
    Vector f(out);
    double zs = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
      double w = model.beta()[static_cast<Eigen::Index>(i)] * approx.measures[i];
      zs += w;
      request.evaluate(model.nodes().row(i), {f.data(), static_cast<std::size_t>(out)});
      acc += w * f;
    }
    return {make_zhat(zs, model.shift()),
            zs != 0.0 ? Vector(acc / zs) : Vector::Constant(out, std::numeric_limits<double>::quiet_NaN())};
  }
  const std::size_t M = approx.probe_count();
  if (approx.probes.size() != M) throw InvalidState("Voronoi approximation has no stored probes");
  std::vector<double> pi(M);
  for (std::size_t m = 0; m < M; ++m) pi[m] = model.beta()[approx.assignment[m]];
  std::vector<double> log_inv_q(M, std::log(approx.volume));
  return probe_estimate(pi, log_inv_q, approx.probes, request, model.shift());
}

ProbeEstimate surrogate_is(const InterpolantModel& model, const MomentRequest& request, const BoxSupport& support,
                           const NodeSet& probes) {
  if (probes.empty()) throw InvalidArgument("surrogate IS needs at least one probe");
  if (probes.dim() != model.dim() || support.dim() != model.dim()) {
    throw InvalidArgument("surrogate IS: dimension mismatch");
  }
  const std::size_t M = probes.size();
  std::vector<double> pi(M);
  for (std::size_t m = 0; m < M; ++m) {
    pi[m] = support.contains(probes.row(m)) ? model.predict_scaled(probes.row(m)) : 0.0;
  }
  std::vector<double> log_inv_q(M, std::log(support.volume()));
  return probe_estimate(pi, log_inv_q, probes, request, model.shift());
}

ProbeEstimate surrogate_is(const InterpolantModel& model, const MomentRequest& request, SurrogateProposal proposal,
                           const BoxSupport& support, std::size_t M, ProbeSampler sampler, Rng& rng) {
  if (M < 1) throw InvalidArgument("surrogate IS needs M >= 1");
  if (proposal == SurrogateProposal::uniform) {
    return surrogate_is(model, request, support, sample_box(support, M, sampler, rng));
  }
  NodeMixtureProposal q(model);
  NodeSet probes(model.dim());
  probes.reserve(M);
  std::vector<double> pi(M), log_inv_q(M);
  std::vector<double> z(model.dim());
  for (std::size_t m = 0; m < M; ++m) {
    q.sample(rng, z);
    probes.push_back(z);
    pi[m] = support.contains(z) ? model.predict_scaled(z) : 0.0;
    log_inv_q[m] = -q.log_density(z);
  }
  return probe_estimate(pi, log_inv_q, probes, request, model.shift());
}

EstimateReport estimate(const InterpolantModel& model, const std::vector<MomentRequest>& requests,
                        const EstimateOptions& options, Rng& rng) {
  EstimateReport rep;
  Route route = options.route;
  if (route == Route::automatic) {
    if (!model.gaussian()) {
      route = Route::voronoi;
    } else {
      bool closed = std::all_of(requests.begin(), requests.end(), [](const MomentRequest& r) {
        return r.kind == MomentRequest::Kind::constant || (r.kind == MomentRequest::Kind::power && r.r <= 2);
      });
      route = closed ? Route::closed_form
                     : model.dim() <= GaussHermiteRule::max_dim ? Route::gauss_hermite : Route::kernel_mc;
    }
    rep.warnings.push_back("route auto-selected: " + std::string(to_string(route)));
  }
  rep.route = route;
  for (const auto& r : requests) rep.labels.push_back(r.label);

  auto support = [&]() -> BoxSupport {
    if (options.support) return *options.support;
    if (!model.gaussian()) return model.nn_spec().support;
    throw InvalidArgument(std::string(to_string(route)) + " route needs a support box");
  };

  switch (route) {
    case Route::closed_form:
    case Route::gauss_hermite:
    case Route::kernel_mc: {
      if (!model.gaussian()) throw Unsupported(std::string(to_string(route)) + " route needs a Gaussian kernel");
      rep.z = z_hat(model);
      for (const auto& r : requests) {
        if (r.kind == MomentRequest::Kind::constant) {
          rep.i_hat.push_back(Vector::Ones(1));
        } else if (route == Route::closed_form) {
          if (r.kind != MomentRequest::Kind::power) throw Unsupported("closed-form route handles power moments only");
          rep.i_hat.push_back(i_hat_closed_form(model, r.r).beta_form);
        } else if (route == Route::gauss_hermite) {
          rep.i_hat.push_back(i_hat_gauss_hermite(model, r, options.gh_points));
        } else {
          rep.i_hat.push_back(i_hat_kernel_mc(model, r, options.M, rng));
        }
      }
      if (route == Route::kernel_mc) rep.M = options.M;
      break;
    }
    case Route::kernel_is: {
      auto q = std::make_shared<UniformProposal>(support());
      std::vector<std::shared_ptr<const Proposal>> qs{q};
      for (std::size_t k = 0; k < requests.size(); ++k) {
        auto r = i_hat_kernel_is(model, requests[k], qs, options.M, rng);
        if (k == 0) rep.z = r.z;
        rep.i_hat.push_back(r.i_hat);
      }
      if (requests.empty()) rep.z = i_hat_kernel_is(model, MomentRequest::one(), qs, options.M, rng).z;
      rep.M = options.M;
      break;
    }
    case Route::voronoi: {
      nn_only(model, "Voronoi route");
      std::optional<VoronoiApprox> built;
      const VoronoiApprox* approx = options.approx;
      if (approx == nullptr || approx->node_fingerprint != model.nodes().fingerprint()) {
        built = voronoi_build(model.nn_spec(), model.nodes(), options.M, options.sampler, rng);
        approx = &*built;
      }
      rep.z = z_hat(model, approx);
      for (const auto& r : requests) rep.i_hat.push_back(voronoi_estimates(model, r, *approx).i_hat);
      rep.M = approx->probe_count();
      break;
    }
    case Route::surrogate_is: {
      BoxSupport box = support();
      NodeSet probes;
      if (options.proposal == SurrogateProposal::uniform) probes = sample_box(box, options.M, options.sampler, rng);
      for (std::size_t k = 0; k < std::max<std::size_t>(requests.size(), 1); ++k) {
        const MomentRequest req = requests.empty() ? MomentRequest::one() : requests[k];
        ProbeEstimate e = options.proposal == SurrogateProposal::uniform
                              ? surrogate_is(model, req, box, probes)
                              : surrogate_is(model, req, options.proposal, box, options.M, options.sampler, rng);
        if (k == 0) rep.z = e.z;
        if (!requests.empty()) rep.i_hat.push_back(e.i_hat);
      }
      rep.M = options.M;
      break;
    }
    case Route::automatic:
      break;
  }
  if (rep.z.negative) rep.warnings.push_back("Z-hat is negative");
  if (model.gaussian()) rep.diagnostics.smallest_pivot = model.smallest_pivot();
  return rep;
}

}  // namespace aquad
