#include "aquad/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <spdlog/spdlog.h>

#include "aquad/errors.hpp"
#include "aquad/interpolant.hpp"

namespace aquad {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Scaled {
  Eigen::VectorXd d;
  double shift = 0.0;
};

Scaled scale(std::span<const double> log_values) {
  Scaled s;
  s.shift = -std::numeric_limits<double>::infinity();
  for (double v : log_values) {
    if (std::isfinite(v)) s.shift = std::max(s.shift, v);
  }
  if (!std::isfinite(s.shift)) s.shift = 0.0;
  s.d.resize(static_cast<Eigen::Index>(log_values.size()));
  for (std::size_t i = 0; i < log_values.size(); ++i) s.d[i] = std::exp(log_values[i] - s.shift);
  return s;
}

void check_inputs(const NodeSet& nodes, std::span<const double> log_values, const std::vector<double>& grid) {
  if (nodes.empty()) throw InvalidArgument("bandwidth scan needs at least one node");
  if (log_values.size() != nodes.size()) throw InvalidArgument("bandwidth scan: one log value per node required");
  if (grid.empty()) throw InvalidArgument("bandwidth scan needs a non-empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0)) throw InvalidArgument("bandwidth grid values must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw InvalidArgument("bandwidth grid must be strictly increasing");
  }
}

// Index of the first strict local maximum, plateaus resolved leftwards.
std::optional<std::size_t> first_local_max(const std::vector<double>& z, std::size_t limit) {
  for (std::size_t i = 1; i + 1 < limit; ++i) {
    if (!(z[i] > z[i - 1]) || !(z[i] > 0.0)) continue;
    std::size_t j = i;
    while (j + 1 < limit && z[j + 1] == z[i]) ++j;
    if (j + 1 < limit && z[j + 1] < z[i]) return i;
  }
  return std::nullopt;
}

}  // namespace

std::vector<double> default_bandwidth_grid(const NodeSet& nodes, const BoxSupport& support, int count) {
  if (count < 2) throw InvalidArgument("bandwidth grid needs at least two points");
  const double diam = support.diameter();
  const double s = nodes.size() >= 2 ? separation_distance(nodes) : diam / 100.0;
  if (!(s > 0.0)) throw DegenerateNodes("bandwidth grid: coincident nodes");
  double lo = s / 10.0;
  double hi = diam;
  if (!(lo < hi)) lo = hi / 1000.0;
  std::vector<double> grid(count);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i) grid[i] = std::exp(a + (b - a) * i / (count - 1));
  return grid;
}

BandwidthScan tune_bandwidth_zhat(const NodeSet& nodes, std::span<const double> log_values,
                                  const std::vector<double>& grid, bool stop_early) {
  check_inputs(nodes, log_values, grid);
  const Scaled sc = scale(log_values);
  BandwidthScan scan;
  scan.grid = grid;
  scan.z_hat.assign(grid.size(), kNaN);
  scan.negative_beta.assign(grid.size(), -1);
  std::vector<double> zs(grid.size(), kNaN);
  std::size_t reached = grid.size();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    GaussianKernelSpec spec{grid[g], nodes.dim(), true};
    Eigen::LLT<Eigen::MatrixXd> llt(gaussian_gram(spec, nodes, default_jitter(spec)));
    if (llt.info() != Eigen::Success) {
      scan.warnings.push_back("factorization failed at h=" + std::to_string(grid[g]));
      continue;
    }
    Eigen::VectorXd beta = llt.solve(sc.d);
    zs[g] = beta.sum();
    scan.z_hat[g] = zs[g] * std::exp(sc.shift);
    scan.negative_beta[g] = static_cast<int>((beta.array() < 0.0).count());
    if (stop_early && g >= 2 && first_local_max(zs, g + 1)) {
      reached = g + 1;
      break;
    }
  }
  if (auto i = first_local_max(zs, reached)) {
    scan.selected_index = *i;
    scan.local_max = true;
  } else {
    std::size_t best = 0;
    double bv = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < reached; ++g) {
      if (zs[g] > bv) {
        bv = zs[g];
        best = g;
      }
    }
    scan.selected_index = best;
    scan.warnings.push_back("no interior local maximum of Z-hat on the grid; using the argmax");
    if (!(bv > 0.0)) scan.warnings.push_back("Z-hat is not positive anywhere on the grid");
  }
  scan.selected = grid[scan.selected_index];
  for (const auto& w : scan.warnings) spdlog::debug("tune_bandwidth_zhat: {}", w);
  return scan;
}

BandwidthScan tune_bandwidth_mll(const NodeSet& nodes, std::span<const double> log_values,
                                 const std::vector<double>& grid, double jitter) {
  check_inputs(nodes, log_values, grid);
  const Scaled sc = scale(log_values);
  BandwidthScan scan;
  scan.grid = grid;
  scan.z_hat.assign(grid.size(), kNaN);
  scan.score.assign(grid.size(), kNaN);
  scan.negative_beta.assign(grid.size(), -1);
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    GaussianKernelSpec spec{grid[g], nodes.dim(), true};
    Eigen::LLT<Eigen::MatrixXd> llt(gaussian_gram(spec, nodes, jitter < 0.0 ? default_jitter(spec) : jitter));
    if (llt.info() != Eigen::Success) {
      scan.warnings.push_back("factorization failed at h=" + std::to_string(grid[g]) + "; skipped");
      continue;
    }
    Eigen::VectorXd beta = llt.solve(sc.d);
    double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    double ll = -0.5 * sc.d.dot(beta) - 0.5 * logdet;
    scan.score[g] = ll;
    scan.z_hat[g] = beta.sum() * std::exp(sc.shift);
    scan.negative_beta[g] = static_cast<int>((beta.array() < 0.0).count());
    if (std::isfinite(ll) && ll > best) {
      best = ll;
      scan.selected_index = g;
      any = true;
    }
  }
  if (!any) throw ConditioningError("marginal likelihood scan failed at every bandwidth", 0.0);
  scan.selected = grid[scan.selected_index];
  std::size_t i = scan.selected_index;
  scan.local_max = i > 0 && i + 1 < grid.size();
  return scan;
}

}  // namespace aquad
