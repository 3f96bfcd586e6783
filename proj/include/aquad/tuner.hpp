#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aquad/geometry.hpp"

namespace aquad {

struct BandwidthScan {
  std::vector<double> grid;
  /// Z-hat(h) with the value shift reapplied (NaN where skipped or not reached).
  std::vector<double> z_hat;
  /// Log marginal likelihood (MLL scan only).
  std::vector<double> score;
  std::vector<int> negative_beta;
  std::size_t selected_index = 0;
  double selected = 0.0;
  bool local_max = false;
  std::vector<std::string> warnings;
};

/// `count` log-spaced bandwidths over [s/10, diam(X)], s the separation distance.
std::vector<double> default_bandwidth_grid(const NodeSet& nodes, const BoxSupport& support, int count = 40);

/// First interior grid point where Z-hat(h) = sum beta exceeds both
/// neighbours (plateaus resolve to the leftmost point). Without one, the
/// argmax of Z-hat is returned with a warning. `stop_early` ends the scan
/// once the first local maximum is confirmed.
BandwidthScan tune_bandwidth_zhat(const NodeSet& nodes, std::span<const double> log_values,
                                  const std::vector<double>& grid, bool stop_early = false);

/// Grid argmax of -1/2 d^T K^{-1} d - 1/2 log|K| with K jittered. A
/// negative jitter uses the default per bandwidth.
BandwidthScan tune_bandwidth_mll(const NodeSet& nodes, std::span<const double> log_values,
                                 const std::vector<double>& grid, double jitter = -1.0);

}  // namespace aquad
