#include "aquad/baselines.hpp"

#include <cmath>
#include <limits>

#include "aquad/errors.hpp"

namespace aquad {

IsResult is_uniform(const TargetDensity& target, std::size_t E, Rng& rng) {
  if (E < 1) throw InvalidArgument("IS needs E >= 1");
  const int d = target.dim();
  const auto& box = target.support();
  NodeSet z(d);
  z.reserve(E);
  std::vector<double> lw(E);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < E; ++e) {
    Vector x = uniform_in_box(box, rng);
    z.push_back(as_span(x));
    lw[e] = target.log_eval(x);
    mx = std::max(mx, lw[e]);
  }
  IsResult r;
  r.evaluations = E;
  r.moments.mean = Vector::Constant(d, std::numeric_limits<double>::quiet_NaN());
  r.moments.variance = r.moments.mean;
  if (!std::isfinite(mx)) {
    r.z = make_zhat(0.0, 0.0);
    return r;
  }
  double sum = 0.0;
  Vector s1 = Vector::Zero(d), s2 = Vector::Zero(d);
  for (std::size_t e = 0; e < E; ++e) {
    double w = std::exp(lw[e] - mx);
    if (w == 0.0) continue;
    sum += w;
    Vector x = z.point(e);
    s1 += w * x;
    s2 += w * x.cwiseProduct(x);
  }
  r.z = make_zhat(sum / static_cast<double>(E), mx + box.log_volume());
  r.moments.mean = s1 / sum;
  r.moments.variance = s2 / sum - r.moments.mean.cwiseProduct(r.moments.mean);
  return r;
}

MhResult mh_chain(const TargetDensity& target, MhKind kind, std::size_t E, double v, Rng& rng) {
  if (E < 1) throw InvalidArgument("MH needs E >= 1");
  if (kind == MhKind::random_walk && !(v > 0.0)) throw InvalidArgument("random-walk MH needs v > 0");
  const int d = target.dim();
  const auto& box = target.support();
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  MhResult r;
  r.chain = NodeSet(d);
  r.chain.reserve(E);
  Vector x = uniform_in_box(box, rng);
  double lp = target.log_eval(x);
  r.chain.push_back(as_span(x));
  std::size_t accepted = 0;
  Vector y(d);
  for (std::size_t e = 1; e < E; ++e) {
    if (kind == MhKind::independent) {
      y = uniform_in_box(box, rng);
    } else {
      for (int k = 0; k < d; ++k) y[k] = x[k] + v * normal(rng);
    }
    double lq = target.log_eval(y);
    double u = unif(rng);
    bool accept = lp == -std::numeric_limits<double>::infinity() ? true
                  : lq == -std::numeric_limits<double>::infinity() ? false
                                                                   : std::log(u) < lq - lp;
    if (accept) {
      x = y;
      lp = lq;
      ++accepted;
    }
    r.chain.push_back(as_span(x));
  }
  r.evaluations = E;
  r.acceptance_rate = E > 1 ? static_cast<double>(accepted) / static_cast<double>(E - 1) : 0.0;
  Vector s1 = Vector::Zero(d), s2 = Vector::Zero(d);
  for (std::size_t e = 0; e < E; ++e) {
    Vector p = r.chain.point(e);
    s1 += p;
    s2 += p.cwiseProduct(p);
  }
  r.moments.mean = s1 / static_cast<double>(E);
  r.moments.variance = s2 / static_cast<double>(E) - r.moments.mean.cwiseProduct(r.moments.mean);
  return r;
}

}  // namespace aquad
