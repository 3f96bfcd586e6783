#include "aquad/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/random/sobol.hpp>

#include "aquad/errors.hpp"
#include "aquad/parallel.hpp"
#include "aquad/sampling.hpp"

namespace aquad {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

// Weighted sums of 1, x_k, x_k^2 with weights exp(log pi - max).
struct Partial {
  double max = kNegInf;
  double s0 = 0.0;
  std::vector<double> s1, s2;
};

Partial reduce_block(const std::vector<double>& logs, const std::vector<double>& pts, int d) {
  Partial p;
  p.s1.assign(d, 0.0);
  p.s2.assign(d, 0.0);
  const std::size_t n = logs.size();
  for (double l : logs) p.max = std::max(p.max, l);
  if (p.max == kNegInf) return p;
  std::vector<double> w(n), t(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(logs[i] - p.max);
  p.s0 = pairwise_sum(w.data(), n);
  for (int k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < n; ++i) t[i] = w[i] * pts[i * d + k];
    p.s1[k] = pairwise_sum(t.data(), n);
    for (std::size_t i = 0; i < n; ++i) t[i] *= pts[i * d + k];
    p.s2[k] = pairwise_sum(t.data(), n);
  }
  return p;
}

struct Totals {
  double log_s0 = kNegInf;
  Vector mean, variance;
};

Totals combine(const std::vector<Partial>& parts, int d) {
  double gmax = kNegInf;
  for (const auto& p : parts) gmax = std::max(gmax, p.max);
  Totals t;
  t.mean = Vector::Constant(d, std::numeric_limits<double>::quiet_NaN());
  t.variance = t.mean;
  if (gmax == kNegInf) return t;
  std::vector<double> a(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) a[i] = parts[i].s0 * std::exp(parts[i].max - gmax);
  double s0 = pairwise_sum(a.data(), a.size());
  t.log_s0 = gmax + std::log(s0);
  for (int k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < parts.size(); ++i) a[i] = parts[i].s1[k] * std::exp(parts[i].max - gmax);
    double m = pairwise_sum(a.data(), a.size()) / s0;
    for (std::size_t i = 0; i < parts.size(); ++i) a[i] = parts[i].s2[k] * std::exp(parts[i].max - gmax);
    double m2 = pairwise_sum(a.data(), a.size()) / s0;
    t.mean[k] = m;
    t.variance[k] = m2 - m * m;
  }
  return t;
}

// One midpoint pass; blocks are runs along the last axis.
Totals midpoint_pass(const TargetDensity& target, std::size_t n) {
  const int d = target.dim();
  const auto& box = target.support();
  std::size_t blocks = 1;
  for (int k = 0; k + 1 < d; ++k) blocks *= n;
  std::vector<Partial> parts(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<double> pts(n * d), logs(n);
    std::vector<double> x(d);
    std::size_t rem = b;
    for (int k = d - 2; k >= 0; --k) {
      std::size_t i = rem % n;
      rem /= n;
      x[k] = box.lower()[k] + (static_cast<double>(i) + 0.5) * box.width(k) / static_cast<double>(n);
    }
    for (std::size_t j = 0; j < n; ++j) {
      x[d - 1] = box.lower()[d - 1] + (static_cast<double>(j) + 0.5) * box.width(d - 1) / static_cast<double>(n);
      std::copy(x.begin(), x.end(), pts.begin() + j * d);
      logs[j] = target.log_eval(x);
    }
    parts[b] = reduce_block(logs, pts, d);
  });
  return combine(parts, d);
}

GridTruth from_totals(const Totals& fine, const Totals& coarse, int d, std::size_t res, double log_cell_fine,
                      double log_cell_coarse) {
  GridTruth g;
  g.dim = d;
  g.resolution = res;
  g.log_z = fine.log_s0 + log_cell_fine;
  g.z = std::exp(g.log_z);
  g.mean = fine.mean;
  g.variance = fine.variance;
  g.z_error = std::abs(g.z - std::exp(coarse.log_s0 + log_cell_coarse));
  g.mean_error = (fine.mean - coarse.mean).cwiseAbs();
  g.variance_error = (fine.variance - coarse.variance).cwiseAbs();
  return g;
}

nlohmann::json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vec(const nlohmann::json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

GridTruth grid_truth(const TargetDensity& target, std::size_t resolution) {
  const int d = target.dim();
  if (d > 4) throw Unsupported("grid truth is limited to dim <= 4; use qmc_truth or an analytic target");
  if (resolution < 2 || resolution % 2 != 0) throw InvalidArgument("grid resolution must be even and >= 2");
  const auto& box = target.support();
  Totals fine = midpoint_pass(target, resolution);
  Totals coarse = midpoint_pass(target, resolution / 2);
  double lc = box.log_volume() - d * std::log(static_cast<double>(resolution));
  double lcc = box.log_volume() - d * std::log(static_cast<double>(resolution / 2));
  return from_totals(fine, coarse, d, resolution, lc, lcc);
}

GridTruth qmc_truth(const TargetDensity& target, std::size_t M, std::uint64_t seed) {
  if (M < 2) throw InvalidArgument("QMC truth needs M >= 2");
  const int d = target.dim();
  const auto& box = target.support();
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> shift(d);
  for (double& s : shift) s = unif(rng);
  boost::random::sobol engine(static_cast<std::size_t>(d));
  const std::size_t block = 1 << 16;
  std::vector<Partial> first, second;
  std::vector<double> pts, logs, x(d);
  for (std::size_t start = 0; start < M; start += block) {
    const std::size_t n = std::min(block, M - start);
    pts.resize(n * d);
    logs.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      for (int k = 0; k < d; ++k) {
        double u = std::ldexp(static_cast<double>(engine() >> 11), -53) + shift[k];
        if (u >= 1.0) u -= 1.0;
        x[k] = box.lower()[k] + u * box.width(k);
      }
      std::copy(x.begin(), x.end(), pts.begin() + j * d);
      logs[j] = target.log_eval(x);
    }
    (start < M / 2 ? first : second).push_back(reduce_block(logs, pts, d));
  }
  std::vector<Partial> all = first;
  all.insert(all.end(), second.begin(), second.end());
  Totals t = combine(all, d);
  Totals h = combine(first.empty() ? second : first, d);
  double lv = box.log_volume() - std::log(static_cast<double>(M));
  double lh = box.log_volume() - std::log(static_cast<double>(first.size() * block));
  GridTruth g = from_totals(t, h, d, 0, lv, first.empty() ? lv : lh);
  return g;
}

nlohmann::json to_json(const GridTruth& t) {
  return {{"dim", t.dim},
          {"resolution", t.resolution},
          {"z", t.z},
          {"log_z", t.log_z},
          {"mean", vec_json(t.mean)},
          {"variance", vec_json(t.variance)},
          {"z_error", t.z_error},
          {"mean_error", vec_json(t.mean_error)},
          {"variance_error", vec_json(t.variance_error)}};
}

GridTruth truth_from_json(const nlohmann::json& j) {
  try {
    GridTruth t;
    t.dim = j.at("dim").get<int>();
    t.resolution = j.value("resolution", std::size_t{0});
    t.z = j.at("z").get<double>();
    t.log_z = j.value("log_z", std::log(t.z));
    t.mean = json_vec(j.at("mean"));
    t.variance = json_vec(j.at("variance"));
    t.z_error = j.value("z_error", 0.0);
    if (j.contains("mean_error")) t.mean_error = json_vec(j["mean_error"]);
    if (j.contains("variance_error")) t.variance_error = json_vec(j["variance_error"]);
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed truth JSON: ") + e.what());
  }
}

std::vector<double> squared_relative_errors(const std::vector<Vector>& estimates, const Vector& truth,
                                            bool* absolute) {
  if (estimates.empty()) throw InvalidArgument("Rel-MSE needs at least one estimate");
  bool abs_used = false;
  std::vector<double> out;
  out.reserve(estimates.size());
  for (const auto& e : estimates) {
    if (e.size() != truth.size()) throw InvalidArgument("Rel-MSE: estimate and truth sizes differ");
    double s = 0.0;
    for (Eigen::Index k = 0; k < truth.size(); ++k) {
      const bool zero = std::abs(truth[k]) < 1e-9;
      abs_used = abs_used || zero;
      double r = zero ? e[k] - truth[k] : (e[k] - truth[k]) / truth[k];
      s += r * r;
    }
    out.push_back(s / static_cast<double>(truth.size()));
  }
  if (absolute) *absolute = abs_used;
  return out;
}

RelMse rel_mse(const std::vector<Vector>& estimates, const Vector& truth) {
  RelMse r;
  auto e = squared_relative_errors(estimates, truth, &r.absolute);
  double s = 0.0;
  for (double v : e) s += v;
  r.value = s / static_cast<double>(e.size());
  return r;
}

RelMse rel_mse(const std::vector<double>& estimates, double truth) {
  std::vector<Vector> v;
  v.reserve(estimates.size());
  for (double e : estimates) v.push_back(Vector::Constant(1, e));
  return rel_mse(v, Vector::Constant(1, truth));
}

}  // namespace aquad
