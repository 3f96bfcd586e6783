#include "aquad/sampling.hpp"

#include <cmath>
#include <string>

#include <boost/random/sobol.hpp>

#include "aquad/errors.hpp"

namespace aquad {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> labels) {
  std::uint64_t h = splitmix(master);
  for (std::uint64_t l : labels) h = splitmix(h ^ splitmix(l));
  return h;
}

std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

ProbeSampler parse_sampler(std::string_view name) {
  if (name == "sobol" || name == "qmc") return ProbeSampler::sobol;
  if (name == "mc" || name == "monte-carlo") return ProbeSampler::monte_carlo;
  throw InvalidArgument("unknown sampler '" + std::string(name) + "'");
}

std::string_view to_string(ProbeSampler s) { return s == ProbeSampler::sobol ? "sobol" : "mc"; }

NodeSet sobol_unit(int dim, std::size_t count) {
  boost::random::sobol engine(static_cast<std::size_t>(dim));
  std::vector<double> data(count * static_cast<std::size_t>(dim));
  for (double& v : data) v = std::ldexp(static_cast<double>(engine() >> 11), -53);
  return NodeSet(dim, std::move(data));
}

NodeSet sample_box(const BoxSupport& box, std::size_t count, ProbeSampler sampler, Rng& rng) {
  const int dim = box.dim();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  NodeSet out(dim);
  out.reserve(count);
  std::vector<double> u(dim), x(dim);
  if (sampler == ProbeSampler::sobol) {
    std::vector<double> shift(dim);
    for (double& s : shift) s = unif(rng);
    NodeSet raw = sobol_unit(dim, count);
    for (std::size_t m = 0; m < count; ++m) {
      auto r = raw.row(m);
      for (int i = 0; i < dim; ++i) {
        double v = r[i] + shift[i];
        u[i] = v >= 1.0 ? v - 1.0 : v;
      }
      box.from_unit(u, x);
      out.push_back(x);
    }
  } else {
    for (std::size_t m = 0; m < count; ++m) {
      for (double& v : u) v = unif(rng);
      box.from_unit(u, x);
      out.push_back(x);
    }
  }
  return out;
}

Vector uniform_in_box(const BoxSupport& box, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector x(box.dim());
  for (int i = 0; i < box.dim(); ++i) x[i] = box.lower()[i] + unif(rng) * box.width(i);
  return x;
}

}  // namespace aquad
