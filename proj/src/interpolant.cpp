#include "aquad/interpolant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <spdlog/spdlog.h>

#include "aquad/errors.hpp"

namespace aquad {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double max_finite(const std::vector<double>& v) {
  double m = kNegInf;
  for (double x : v) {
    if (std::isfinite(x)) m = std::max(m, x);
  }
  return std::isfinite(m) ? m : 0.0;
}

}  // namespace

Eigen::MatrixXd gaussian_gram(const GaussianKernelSpec& spec, const NodeSet& nodes, double jitter) {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  const double lp = spec.log_peak();
  const double inv2h2 = 1.0 / (2.0 * spec.bandwidth * spec.bandwidth);
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = std::exp(lp) + jitter;
    for (Eigen::Index j = 0; j < i; ++j) {
      K(i, j) = K(j, i) = std::exp(lp - squared_distance(nodes.row(i), nodes.row(j)) * inv2h2);
    }
  }
  return K;
}

namespace {

void check_distinct(const NodeSet& nodes) {
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (squared_distance(nodes.row(i), nodes.row(j)) == 0.0) {
        throw DegenerateNodes("nodes " + std::to_string(j) + " and " + std::to_string(i) + " coincide");
      }
    }
  }
}

double json_to_log(const nlohmann::json& v) { return v.is_null() ? kNegInf : v.get<double>(); }

nlohmann::json log_to_json(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

double default_jitter(const GaussianKernelSpec& spec) {
  double pk = spec.peak();
  return 1e-4 * pk * pk;
}

void InterpolantModel::set_values_from_logs() {
  shift_ = max_finite(log_values_);
  values_.resize(static_cast<Eigen::Index>(log_values_.size()));
  for (std::size_t i = 0; i < log_values_.size(); ++i) values_[i] = std::exp(log_values_[i] - shift_);
}

void InterpolantModel::refit_gaussian() {
  const auto& spec = gaussian_spec();
  Eigen::MatrixXd K = gaussian_gram(spec, nodes_, jitter_);
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  double pivot = std::numeric_limits<double>::infinity();
  if (llt.info() == Eigen::Success) {
    Eigen::VectorXd diag = llt.matrixLLT().diagonal();
    pivot = diag.array().square().minCoeff();
  }
  if (llt.info() != Eigen::Success || !(pivot > 0.0) || !std::isfinite(pivot)) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
    double smallest = ldlt.vectorD().minCoeff();
    throw ConditioningError("K + jitter*I is not positive definite (smallest pivot " + std::to_string(smallest) + ")",
                            smallest);
  }
  smallest_pivot_ = pivot;
  inverse_ = llt.solve(Eigen::MatrixXd::Identity(K.rows(), K.cols()));
  beta_ = llt.solve(values_);
}

InterpolantModel fit(NodeSet nodes, std::vector<double> log_values, KernelSpec kernel, std::optional<double> jitter) {
  if (nodes.empty()) throw InvalidArgument("fit needs at least one node");
  if (log_values.size() != nodes.size()) throw InvalidArgument("fit: one log value per node required");
  for (double v : log_values) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      throw InvalidArgument("fit: log values must be finite or -inf");
    }
  }
  InterpolantModel m;
  m.kernel_ = std::move(kernel);
  if (m.gaussian()) {
    m.gaussian_spec().validate();
    if (m.gaussian_spec().dim != nodes.dim()) throw InvalidArgument("fit: kernel and node dimensions differ");
  } else {
    m.nn_spec().validate();
    if (m.nn_spec().support.dim() != nodes.dim()) throw InvalidArgument("fit: kernel and node dimensions differ");
  }
  check_distinct(nodes);
  m.nodes_ = std::move(nodes);
  m.log_values_ = std::move(log_values);
  m.set_values_from_logs();
  if (m.gaussian()) {
    m.jitter_ = jitter.value_or(default_jitter(m.gaussian_spec()));
    if (m.jitter_ < 0.0) throw InvalidArgument("jitter must be >= 0");
    m.refit_gaussian();
  } else {
    m.jitter_ = 0.0;
    m.beta_ = m.values_;
    m.index_ = NearestIndex(m.nodes_, m.nn_spec().metric());
  }
  return m;
}

InterpolantModel extend(InterpolantModel m, std::span<const double> node, double log_value) {
  if (static_cast<int>(node.size()) != m.dim()) throw InvalidArgument("extend: node dimension mismatch");
  if (std::isnan(log_value) || log_value == std::numeric_limits<double>::infinity()) {
    throw InvalidArgument("extend: log value must be finite or -inf");
  }

  if (!m.gaussian()) {
    if (m.index_.nearest(node).distance == 0.0) throw DegenerateNodes("extend: node already present");
    m.nodes_.push_back(node);
    m.index_.add(node);
    m.log_values_.push_back(log_value);
    if (std::isfinite(log_value) && log_value > m.shift_) {
      m.set_values_from_logs();
    } else {
      m.values_.conservativeResize(m.values_.size() + 1);
      m.values_[m.values_.size() - 1] = std::exp(log_value - m.shift_);
    }
    m.beta_ = m.values_;
    return m;
  }

  for (std::size_t i = 0; i < m.size(); ++i) {
    if (squared_distance(m.nodes_.row(i), node) == 0.0) {
      throw DegenerateNodes("extend: node coincides with node " + std::to_string(i));
    }
  }
  Eigen::VectorXd k = m.kernel_vector(node);
  const double kxx = m.gaussian_spec().peak() + m.jitter_;

  m.nodes_.push_back(node);
  m.log_values_.push_back(log_value);
  m.set_values_from_logs();

  Eigen::VectorXd u = m.inverse_ * k;
  {
    // one refinement step on u
    const auto& spec = m.gaussian_spec();
    const double lp = spec.log_peak();
    const double inv2h2 = 1.0 / (2.0 * spec.bandwidth * spec.bandwidth);
    const auto n = k.size();
    Eigen::VectorXd r = k - (std::exp(lp) + m.jitter_) * u;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto xi = m.nodes_.row(static_cast<std::size_t>(i));
      double acc = 0.0;
      for (Eigen::Index j = 0; j < i; ++j) {
        double kij = std::exp(lp - squared_distance(xi, m.nodes_.row(static_cast<std::size_t>(j))) * inv2h2);
        acc += kij * u[j];
        r[j] -= kij * u[i];
      }
      r[i] -= acc;
    }
    u.noalias() += m.inverse_ * r;
  }
  double schur = kxx - k.dot(u);
  if (schur <= 1e-12 * kxx) {
    double jitter = std::max(10.0 * m.jitter_, 1e-10 * m.gaussian_spec().peak());
    for (int attempt = 0;; ++attempt) {
      m.jitter_ = jitter;
      try {
        m.refit_gaussian();
        break;
      } catch (const ConditioningError&) {
        if (attempt >= 8) throw;
        jitter *= 10.0;
      }
    }
    std::string msg = "extend: Schur complement " + std::to_string(schur) + " too small, refit with jitter " +
                      std::to_string(m.jitter_);
    spdlog::debug(msg);
    m.warnings_.push_back(std::move(msg));
    return m;
  }

  const double s = 1.0 / schur;
  const Eigen::Index n = k.size();
  Eigen::MatrixXd inv(n + 1, n + 1);
  inv.topLeftCorner(n, n) = m.inverse_;
  inv.topLeftCorner(n, n).noalias() += s * u * u.transpose();
  inv.topRightCorner(n, 1) = -s * u;
  inv.bottomLeftCorner(1, n) = -s * u.transpose();
  inv(n, n) = s;
  m.inverse_ = std::move(inv);
  m.smallest_pivot_ = std::min(m.smallest_pivot_, schur);
  m.beta_ = m.inverse_ * m.values_;
  return m;
}

Eigen::VectorXd InterpolantModel::kernel_vector(std::span<const double> x) const {
  if (!gaussian()) throw Unsupported("kernel vector is defined for Gaussian models");
  const auto& spec = gaussian_spec();
  const double lp = spec.log_peak();
  const double inv2h2 = 1.0 / (2.0 * spec.bandwidth * spec.bandwidth);
  Eigen::VectorXd k(static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) k[i] = std::exp(lp - squared_distance(x, nodes_.row(i)) * inv2h2);
  return k;
}

double InterpolantModel::predict_scaled(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim()) throw InvalidArgument("predict: dimension mismatch");
  if (gaussian()) return kernel_vector(x).dot(beta_);
  return beta_[static_cast<Eigen::Index>(index_.nearest(x).index)];
}

double predict(const InterpolantModel& model, std::span<const double> x) {
  return model.predict_scaled(x) * std::exp(model.shift());
}

double gp_variance(const InterpolantModel& model, std::span<const double> x) {
  if (!model.gaussian()) throw Unsupported("GP variance is undefined for NN kernels");
  if (static_cast<int>(x.size()) != model.dim()) throw InvalidArgument("gp_variance: dimension mismatch");
  Eigen::VectorXd k = model.kernel_vector(x);
  double v = model.gaussian_spec().peak() - k.dot(model.inverse() * k);
  return std::max(v, 0.0);
}

double fill_distance(const NodeSet& nodes, const NodeSet& probes) {
  if (nodes.empty()) throw InvalidArgument("fill distance needs at least one node");
  if (probes.empty()) throw InvalidArgument("fill distance needs at least one probe");
  NearestIndex index(nodes, Metric(2.0));
  double r = 0.0;
  for (std::size_t m = 0; m < probes.size(); ++m) r = std::max(r, index.nearest(probes.row(m)).distance);
  return r;
}

double fill_distance(const NodeSet& nodes, const BoxSupport& support, std::size_t probes, Rng& rng) {
  if (probes < 1) throw InvalidArgument("fill distance needs at least one probe");
  return fill_distance(nodes, sample_box(support, probes, ProbeSampler::sobol, rng));
}

double separation_distance(const NodeSet& nodes) {
  if (nodes.size() < 2) throw InvalidArgument("separation distance needs at least two nodes");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) best = std::min(best, squared_distance(nodes.row(i), nodes.row(j)));
  }
  return std::sqrt(best);
}

nlohmann::json to_json(const InterpolantModel& model, bool with_inverse) {
  nlohmann::json j;
  if (model.gaussian()) {
    const auto& g = model.gaussian_spec();
    j["kernel"] = "gaussian";
    j["h"] = g.bandwidth;
    j["normalized"] = g.normalized;
  } else {
    const auto& n = model.nn_spec();
    j["kernel"] = "nn";
    j["p"] = n.p;
    j["scaled"] = n.scaled;
    j["lower"] = n.support.lower();
    j["upper"] = n.support.upper();
  }
  j["dim"] = model.dim();
  j["jitter"] = model.jitter();
  j["shift"] = model.shift();
  j["nodes"] = model.nodes().data();
  auto& lv = j["log_values"] = nlohmann::json::array();
  for (double v : model.log_values()) lv.push_back(log_to_json(v));
  j["beta"] = std::vector<double>(model.beta().data(), model.beta().data() + model.beta().size());
  if (with_inverse && model.gaussian()) {
    const auto& inv = model.inverse();
    j["inverse"] = std::vector<double>(inv.data(), inv.data() + inv.size());
    j["smallest_pivot"] = model.smallest_pivot();
  }
  return j;
}

InterpolantModel model_from_json(const nlohmann::json& j) {
  try {
    const int dim = j.at("dim").get<int>();
    NodeSet nodes(dim, j.at("nodes").get<std::vector<double>>());
    std::vector<double> logs;
    for (const auto& v : j.at("log_values")) logs.push_back(json_to_log(v));
    KernelSpec kernel;
    const auto kind = j.at("kernel").get<std::string>();
    if (kind == "gaussian") {
      kernel = GaussianKernelSpec{j.at("h").get<double>(), dim, j.value("normalized", true)};
    } else if (kind == "nn") {
      kernel = NnKernelSpec{j.at("p").get<double>(),
                            BoxSupport(j.at("lower").get<std::vector<double>>(), j.at("upper").get<std::vector<double>>()),
                            j.value("scaled", false)};
    } else {
      throw InvalidArgument("unknown kernel '" + kind + "' in model JSON");
    }
    const double jitter = j.at("jitter").get<double>();
    InterpolantModel m;
    if (is_gaussian(kernel) && j.contains("inverse")) {
      m.kernel_ = kernel;
      std::get<GaussianKernelSpec>(m.kernel_).validate();
      m.nodes_ = std::move(nodes);
      m.log_values_ = std::move(logs);
      m.set_values_from_logs();
      m.jitter_ = jitter;
      auto inv = j.at("inverse").get<std::vector<double>>();
      const auto n = static_cast<Eigen::Index>(m.size());
      if (static_cast<Eigen::Index>(inv.size()) != n * n) throw InvalidArgument("model JSON: inverse has wrong size");
      m.inverse_ = Eigen::Map<Eigen::MatrixXd>(inv.data(), n, n);
      m.smallest_pivot_ = j.value("smallest_pivot", 0.0);
    } else {
      m = fit(std::move(nodes), std::move(logs), kernel, jitter);
    }
    auto beta = j.at("beta").get<std::vector<double>>();
    if (beta.size() != m.size()) throw InvalidArgument("model JSON: beta has wrong size");
    m.beta_ = Eigen::Map<Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    if (m.shift_ != j.at("shift").get<double>()) throw InvalidArgument("model JSON: shift does not match log values");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed model JSON: ") + e.what());
  }
}

}  // namespace aquad
