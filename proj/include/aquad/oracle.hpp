#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "aquad/geometry.hpp"
#include "aquad/targets.hpp"

namespace aquad {

struct GridTruth {
  int dim = 0;
  std::size_t resolution = 0;  // cells per dimension
  double z = 0.0;
  double log_z = 0.0;
  Vector mean;
  Vector variance;
  /// |Z(n) - Z(n/2)|, the two-resolution discretization estimate.
  double z_error = 0.0;
  Vector mean_error;
  Vector variance_error;
};

/// Midpoint rule on resolution^dim cells of the target's box, plus a second
/// pass at resolution/2 for the error estimate. Refuses dim > 4.
GridTruth grid_truth(const TargetDensity& target, std::size_t resolution);

/// Same quantities by uniform Sobol quadrature with M points (random shift
/// from `seed`); z_error holds the half-sample difference.
GridTruth qmc_truth(const TargetDensity& target, std::size_t M, std::uint64_t seed);

nlohmann::json to_json(const GridTruth& t);
GridTruth truth_from_json(const nlohmann::json& j);

struct RelMse {
  double value = 0.0;
  /// True when some truth component is 0 and absolute errors were used.
  bool absolute = false;
};

/// Per-seed squared relative error, averaged over components.
std::vector<double> squared_relative_errors(const std::vector<Vector>& estimates, const Vector& truth,
                                            bool* absolute = nullptr);
RelMse rel_mse(const std::vector<Vector>& estimates, const Vector& truth);
RelMse rel_mse(const std::vector<double>& estimates, double truth);

}  // namespace aquad
