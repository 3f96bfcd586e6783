#include "aquad/targets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "aquad/errors.hpp"

namespace aquad {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

TargetDensity::TargetDensity(std::string name, BoxSupport support, LogFn log_fn)
    : name_(std::move(name)), support_(std::move(support)), log_fn_(std::move(log_fn)) {}

TargetDensity::TargetDensity(const TargetDensity& other)
    : name_(other.name_), support_(other.support_), log_fn_(other.log_fn_), budget_(other.budget_) {
  count_.store(other.eval_count());
}

double TargetDensity::log_eval(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim()) throw InvalidArgument("target dimension mismatch");
  std::uint64_t before = count_.fetch_add(1, std::memory_order_relaxed);
  if (budget_ && before >= *budget_) {
    count_.fetch_sub(1, std::memory_order_relaxed);
    throw BudgetExhausted("evaluation budget of " + std::to_string(*budget_) + " exhausted");
  }
  if (!support_.contains(x)) return kNegInf;
  double v = log_fn_(x);
  return std::isnan(v) ? kNegInf : v;
}

// --- banana -------------------------------------------------------------------

double banana_log_density(std::span<const double> x, int dim, const BananaParams& p) {
  if (dim < 2) throw InvalidArgument("banana target needs dim >= 2");
  if (static_cast<int>(x.size()) != dim) throw InvalidArgument("banana: dimension mismatch");
  for (double v : x) {
    if (!(std::abs(v) <= p.half_width)) return kNegInf;
  }
  double lead = p.eta - p.B * x[0] - x[1] * x[1];
  double s = -lead * lead / (2.0 * p.eta0 * p.eta0);
  for (double v : x) s -= v * v / (2.0 * p.eta * p.eta);
  return s;
}

TargetDensity make_banana_target(int dim, const BananaParams& params) {
  return TargetDensity("banana" + std::to_string(dim), BoxSupport::cube(dim, -params.half_width, params.half_width),
                       [dim, params](std::span<const double> x) { return banana_log_density(x, dim, params); });
}

// --- multimodal ---------------------------------------------------------------

double multimodal_log_density(std::span<const double> x) {
  constexpr int dim = 10;
  if (x.size() != dim) throw InvalidArgument("multimodal target is 10-dimensional");
  for (double v : x) {
    if (!(std::abs(v) <= 15.0)) return kNegInf;
  }
  constexpr double var = 16.0;
  const double log_norm = -0.5 * dim * std::log(kTwoPi * var);
  double q[3] = {0.0, 0.0, 0.0};
  for (int i = 0; i < dim; ++i) {
    double m1 = i == 0 ? 5.0 : 0.0;
    double m2 = i == 0 ? -7.0 : 0.0;
    q[0] += (x[i] - m1) * (x[i] - m1);
    q[1] += (x[i] - m2) * (x[i] - m2);
    q[2] += (x[i] - 1.0) * (x[i] - 1.0);
  }
  double l[3];
  for (int k = 0; k < 3; ++k) l[k] = log_norm - q[k] / (2.0 * var);
  double mx = std::max({l[0], l[1], l[2]});
  double s = std::exp(l[0] - mx) + std::exp(l[1] - mx) + std::exp(l[2] - mx);
  return mx + std::log(s) - std::log(3.0);
}

TargetDensity make_multimodal_target() {
  return TargetDensity("multimodal10", BoxSupport::cube(10, -15.0, 15.0),
                       [](std::span<const double> x) { return multimodal_log_density(x); });
}

// --- Kepler -------------------------------------------------------------------

double solve_kepler(double mean_anomaly, double e) {
  if (!(e >= 0.0 && e < 1.0)) throw InvalidArgument("eccentricity must lie in [0, 1)");
  if (!std::isfinite(mean_anomaly)) throw InvalidArgument("mean anomaly must be finite");
  double M = std::fmod(mean_anomaly, kTwoPi);
  if (M < 0.0) M += kTwoPi;
  const double offset = mean_anomaly - M;

  auto residual = [&](double E) { return E - e * std::sin(E) - M; };

  double E = e > 0.8 ? std::numbers::pi : M;
  double f = residual(E);
  const double tol = 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + M);
  for (int it = 0; it < 50 && std::abs(f) > tol; ++it) {
    E -= f / (1.0 - e * std::cos(E));
    f = residual(E);
  }
  if (!(std::abs(f) <= 1e-13) || !(E >= 0.0 && E <= kTwoPi)) {
    // f is increasing on [0, 2pi] with f(0) <= 0 <= f(2pi).
    double lo = 0.0, hi = kTwoPi;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
      double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      if (residual(mid) < 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    E = std::abs(residual(lo)) < std::abs(residual(hi)) ? lo : hi;
  }
  return E + offset;
}

// --- RV model -----------------------------------------------------------------

RvParams RvParams::from_vector(std::span<const double> x) {
  if (x.empty() || (x.size() - 1) % 5 != 0) throw InvalidArgument("RV parameter vector must have length 1 + 5S");
  RvParams p;
  p.V0 = x[0];
  for (std::size_t i = 1; i < x.size(); i += 5) p.planets.push_back({x[i], x[i + 1], x[i + 2], x[i + 3], x[i + 4]});
  return p;
}

std::vector<double> RvParams::to_vector() const {
  std::vector<double> v{V0};
  for (const auto& pl : planets) v.insert(v.end(), {pl.K, pl.omega, pl.e, pl.P, pl.tau});
  return v;
}

void RvDataset::validate() const {
  if (times.empty()) throw InvalidArgument("RV dataset is empty");
  if (times.size() != velocities.size()) throw InvalidArgument("RV dataset columns differ in length");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw InvalidArgument("RV observation times must be strictly increasing");
  }
}

double RvDataset::velocity_range() const {
  auto [lo, hi] = std::minmax_element(velocities.begin(), velocities.end());
  return *hi - *lo;
}

RvDataset read_rv_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open RV dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("RV dataset has no header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (line != "t,y") throw InvalidArgument("RV dataset header must be 't,y'");
  RvDataset data;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) throw InvalidArgument("RV dataset line " + std::to_string(lineno) + ": expected t,y");
    try {
      std::size_t used = 0;
      std::string a = line.substr(0, comma), b = line.substr(comma + 1);
      double t = std::stod(a, &used);
      if (used != a.size()) throw std::invalid_argument("t");
      double y = std::stod(b, &used);
      if (used != b.size()) throw std::invalid_argument("y");
      data.times.push_back(t);
      data.velocities.push_back(y);
    } catch (const std::exception&) {
      throw InvalidArgument("RV dataset line " + std::to_string(lineno) + ": malformed number");
    }
  }
  data.validate();
  return data;
}

void write_rv_csv(const RvDataset& data, const std::filesystem::path& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out.precision(17);
  out << "t,y\r\n";
  for (std::size_t i = 0; i < data.size(); ++i) out << data.times[i] << ',' << data.velocities[i] << "\r\n";
}

double rv_predict(const RvParams& params, double t) {
  double v = params.V0;
  for (const auto& pl : params.planets) {
    double M = kTwoPi * (t - pl.tau) / pl.P;
    double E = solve_kepler(M, pl.e);
    double u = 2.0 * std::atan2(std::sqrt(1.0 + pl.e) * std::sin(0.5 * E), std::sqrt(1.0 - pl.e) * std::cos(0.5 * E));
    v += pl.K * (std::cos(u + pl.omega) + pl.e * std::cos(pl.omega));
  }
  return v;
}

double rv_sum_squared_residuals(const RvParams& params, const RvDataset& data) {
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double r = data.velocities[i] - rv_predict(params, data.times[i]);
    s += r * r;
  }
  return s;
}

double rv_log_likelihood_from_sse(double sse, std::size_t count, double sigma_e) {
  if (!(sigma_e > 0.0)) throw InvalidArgument("sigma_e must be positive");
  double var = sigma_e * sigma_e;
  return -0.5 * static_cast<double>(count) * std::log(kTwoPi * var) - sse / (2.0 * var);
}

double rv_log_likelihood(const RvParams& params, double sigma_e, const RvDataset& data) {
  if (!(sigma_e > 0.0)) throw InvalidArgument("sigma_e must be positive");
  return rv_log_likelihood_from_sse(rv_sum_squared_residuals(params, data), data.size(), sigma_e);
}

bool rv_prior_indicator(const RvParams& p, const RvDataset& data) {
  if (!(p.V0 >= -20.0 && p.V0 <= 20.0)) return false;
  const double kmax = data.velocity_range();
  for (const auto& pl : p.planets) {
    if (!(pl.K >= 0.0 && pl.K <= kmax)) return false;
    if (!(pl.e >= 0.0 && pl.e < 1.0)) return false;
    if (!(pl.P > 0.0 && pl.P <= 365.0)) return false;
    if (!(pl.omega >= 0.0 && pl.omega <= kTwoPi)) return false;
    if (!(pl.tau >= 0.0 && pl.tau <= pl.P)) return false;
  }
  return true;
}

RvPrior rv_prior(const RvDataset& data, int planets) {
  if (planets < 0) throw InvalidArgument("planet count must be >= 0");
  const double kmax = data.velocity_range();
  std::vector<double> lo{-20.0}, hi{20.0};
  // Volume of the indicator region; (P, tau) live on the triangle 0 <= tau <= P <= 365.
  double log_vol = std::log(40.0);
  for (int i = 0; i < planets; ++i) {
    lo.insert(lo.end(), {0.0, 0.0, 0.0, 0.0, 0.0});
    hi.insert(hi.end(), {kmax, kTwoPi, 1.0, 365.0, 365.0});
    log_vol += std::log(kmax) + std::log(kTwoPi) + std::log(365.0 * 365.0 / 2.0);
  }
  return {BoxSupport(lo, hi), -log_vol};
}

TargetDensity make_rv_target(const RvDataset& data, int planets, double sigma_e) {
  data.validate();
  if (!(sigma_e > 0.0)) throw InvalidArgument("sigma_e must be positive");
  RvPrior prior = rv_prior(data, planets);
  auto fn = [data, sigma_e, log_g = prior.log_density](std::span<const double> x) {
    RvParams p = RvParams::from_vector(x);
    if (!rv_prior_indicator(p, data)) return kNegInf;
    return rv_log_likelihood(p, sigma_e, data) + log_g;
  };
  return TargetDensity("rv" + std::to_string(planets), prior.box, std::move(fn));
}

double rv_sse_from_log_target(double log_target, const RvDataset& data, int planets, double sigma_e) {
  if (!std::isfinite(log_target)) return std::numeric_limits<double>::infinity();
  double log_g = rv_prior(data, planets).log_density;
  double var = sigma_e * sigma_e;
  double loglik = log_target - log_g;
  return -2.0 * var * (loglik + 0.5 * static_cast<double>(data.size()) * std::log(kTwoPi * var));
}

RvDataset generate_rv_dataset(const RvParams& truth, std::size_t count, double span, double noise_variance,
                              std::uint64_t seed) {
  if (count < 1) throw InvalidArgument("need at least one observation");
  if (!(noise_variance >= 0.0)) throw InvalidArgument("noise variance must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, std::sqrt(noise_variance));
  RvDataset d;
  for (std::size_t i = 0; i < count; ++i) {
    double t = count == 1 ? 0.0 : span * static_cast<double>(i) / static_cast<double>(count - 1);
    d.times.push_back(t);
    d.velocities.push_back(rv_predict(truth, t) + noise(rng));
  }
  return d;
}

RvParams reference_system(int planets) {
  if (planets < 0 || planets > 2) throw InvalidArgument("reference systems exist for 0, 1 or 2 planets");
  RvParams p;
  p.V0 = 2.0;
  if (planets >= 1) p.planets.push_back({25.0, 0.61, 0.1, 15.0, 3.0});
  if (planets >= 2) p.planets.push_back({5.0, 0.17, 0.3, 115.0, 25.0});
  return p;
}

}  // namespace aquad
