#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include "aquad/geometry.hpp"

namespace aquad {

using Rng = std::mt19937_64;

/// Mixes a master seed with stream labels into an independent seed
/// (splitmix64 finalizer chained over the inputs).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> labels);
std::uint64_t hash_label(std::string_view label);

enum class ProbeSampler { monte_carlo, sobol };

ProbeSampler parse_sampler(std::string_view name);
std::string_view to_string(ProbeSampler s);

/// M points covering the box. Sobol points get a uniform random shift
/// (Cranley-Patterson, modulo 1) drawn from `rng`; plain MC draws i.i.d.
/// uniforms.
NodeSet sample_box(const BoxSupport& box, std::size_t count, ProbeSampler sampler, Rng& rng);

/// Unshifted Sobol points in [0,1)^dim, skipping the origin.
NodeSet sobol_unit(int dim, std::size_t count);

Vector uniform_in_box(const BoxSupport& box, Rng& rng);

}  // namespace aquad
