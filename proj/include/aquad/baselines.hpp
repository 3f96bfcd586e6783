#pragma once

#include <cstddef>
#include <string>

#include "aquad/quadrature.hpp"
#include "aquad/sampling.hpp"
#include "aquad/targets.hpp"

namespace aquad {

/// Moments shared by every baseline: componentwise E[x] and Var[x].
struct SampleMoments {
  Vector mean;
  Vector variance;
};

struct IsResult {
  ZHat z;
  SampleMoments moments;
  std::size_t evaluations = 0;
};

/// Importance sampling with q uniform on the support: Z-hat = |X|/E sum pi(z_e),
/// self-normalized moments. Exactly E target evaluations.
IsResult is_uniform(const TargetDensity& target, std::size_t E, Rng& rng);

enum class MhKind { independent, random_walk };

struct MhResult {
  NodeSet chain;  // E states, the initial point first
  SampleMoments moments;
  double acceptance_rate = 0.0;
  std::size_t evaluations = 0;
};

/// Metropolis-Hastings with a uniform independent proposal or a Gaussian
/// random walk N(x, v^2 I). The uniform initial state is evaluated and
/// counted; every proposal costs one evaluation, so the chain holds E states.
/// No burn-in is discarded.
MhResult mh_chain(const TargetDensity& target, MhKind kind, std::size_t E, double v, Rng& rng);

}  // namespace aquad
