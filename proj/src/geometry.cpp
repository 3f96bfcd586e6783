#include "aquad/geometry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "aquad/errors.hpp"

namespace aquad {

BoxSupport::BoxSupport(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || lower_.empty()) {
    throw InvalidArgument("box bounds must be non-empty and of equal length");
  }
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] < upper_[i]) || !std::isfinite(lower_[i]) || !std::isfinite(upper_[i])) {
      throw InvalidArgument("box requires finite lower[i] < upper[i]");
    }
  }
}

BoxSupport BoxSupport::cube(int dim, double lo, double hi) {
  return BoxSupport(std::vector<double>(dim, lo), std::vector<double>(dim, hi));
}

double BoxSupport::volume() const { return std::exp(log_volume()); }

double BoxSupport::log_volume() const {
  double s = 0.0;
  for (int i = 0; i < dim(); ++i) s += std::log(width(i));
  return s;
}

double BoxSupport::diameter() const {
  double s = 0.0;
  for (int i = 0; i < dim(); ++i) s += width(i) * width(i);
  return std::sqrt(s);
}

bool BoxSupport::contains(std::span<const double> x) const {
  for (int i = 0; i < dim(); ++i) {
    if (!(x[i] >= lower_[i] && x[i] <= upper_[i])) return false;
  }
  return true;
}

void BoxSupport::from_unit(std::span<const double> u, std::span<double> out) const {
  for (int i = 0; i < dim(); ++i) out[i] = lower_[i] + u[i] * width(i);
}

void BoxSupport::clamp(std::span<double> x) const {
  for (int i = 0; i < dim(); ++i) x[i] = std::clamp(x[i], lower_[i], upper_[i]);
}

NodeSet::NodeSet(int dim, std::vector<double> row_major) : dim_(dim), data_(std::move(row_major)) {
  if (dim_ <= 0 || data_.size() % static_cast<std::size_t>(dim_) != 0) {
    throw InvalidArgument("node data size is not a multiple of the dimension");
  }
}

void NodeSet::push_back(std::span<const double> x) {
  if (static_cast<int>(x.size()) != dim_) throw InvalidArgument("node dimension mismatch");
  data_.insert(data_.end(), x.begin(), x.end());
}

std::uint64_t NodeSet::fingerprint() const {
  // FNV-1a over the bit patterns.
  std::uint64_t h = 1469598103934665603ULL ^ static_cast<std::uint64_t>(dim_);
  for (double v : data_) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int k = 0; k < 8; ++k) {
      h ^= (bits >> (8 * k)) & 0xffU;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

Metric::Metric(double p, std::vector<double> inv_scale) : p_(p), inv_scale_(std::move(inv_scale)) {
  if (!(p_ >= 1.0)) throw InvalidArgument("p-norm order must be >= 1");
  if (std::isinf(p_)) {
    kind_ = Kind::linf;
  } else if (p_ == 1.0) {
    kind_ = Kind::l1;
  } else if (p_ == 2.0) {
    kind_ = Kind::l2;
  } else {
    kind_ = Kind::general;
  }
}

Metric Metric::scaled_to(const BoxSupport& box, double p) {
  std::vector<double> inv(box.dim());
  for (int i = 0; i < box.dim(); ++i) inv[i] = 1.0 / box.width(i);
  return Metric(p, std::move(inv));
}

double Metric::reduced(const double* a, const double* b, int dim) const {
  const double* s = inv_scale_.empty() ? nullptr : inv_scale_.data();
  double acc = 0.0;
  switch (kind_) {
    case Kind::l2:
      for (int i = 0; i < dim; ++i) {
        double d = a[i] - b[i];
        if (s) d *= s[i];
        acc += d * d;
      }
      return acc;
    case Kind::l1:
      for (int i = 0; i < dim; ++i) {
        double d = std::abs(a[i] - b[i]);
        if (s) d *= s[i];
        acc += d;
      }
      return acc;
    case Kind::linf:
      for (int i = 0; i < dim; ++i) {
        double d = std::abs(a[i] - b[i]);
        if (s) d *= s[i];
        acc = std::max(acc, d);
      }
      return acc;
    case Kind::general:
      for (int i = 0; i < dim; ++i) {
        double d = std::abs(a[i] - b[i]);
        if (s) d *= s[i];
        acc += std::pow(d, p_);
      }
      return acc;
  }
  return acc;
}

double Metric::reduced_to_distance(double r) const {
  switch (kind_) {
    case Kind::l2:
      return std::sqrt(r);
    case Kind::l1:
    case Kind::linf:
      return r;
    case Kind::general:
      return std::pow(r, 1.0 / p_);
  }
  return r;
}

double Metric::axis_reduced(double gap, int axis) const {
  double d = std::abs(gap);
  if (!inv_scale_.empty()) d *= inv_scale_[axis];
  switch (kind_) {
    case Kind::l2:
      return d * d;
    case Kind::l1:
    case Kind::linf:
      return d;
    case Kind::general:
      return std::pow(d, p_);
  }
  return d;
}

double Metric::distance(std::span<const double> a, std::span<const double> b) const {
  return reduced_to_distance(reduced(a.data(), b.data(), static_cast<int>(a.size())));
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// kd-tree

struct NearestIndex::Tree {
  struct Node {
    int axis = -1;  // -1 for leaves
    double split = 0.0;
    std::uint32_t left = 0, right = 0;
    std::uint32_t begin = 0, end = 0;
  };
  static constexpr std::size_t leaf_size = 16;

  std::vector<std::uint32_t> order;
  std::vector<Node> nodes;

  std::uint32_t build(const NodeSet& pts, std::uint32_t begin, std::uint32_t end) {
    const int dim = pts.dim();
    Node node;
    node.begin = begin;
    node.end = end;
    auto idx = static_cast<std::uint32_t>(nodes.size());
    nodes.push_back(node);
    if (end - begin <= leaf_size) return idx;

    int axis = 0;
    double best_spread = -1.0;
    for (int a = 0; a < dim; ++a) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::uint32_t k = begin; k < end; ++k) {
        double v = pts.row(order[k])[a];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > best_spread) {
        best_spread = hi - lo;
        axis = a;
      }
    }
    std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order.begin() + begin, order.begin() + mid, order.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       double va = pts.row(a)[axis], vb = pts.row(b)[axis];
                       return va < vb || (va == vb && a < b);
                     });
    double split = pts.row(order[mid])[axis];
    std::uint32_t left = build(pts, begin, mid);
    std::uint32_t right = build(pts, mid, end);
    nodes[idx].axis = axis;
    nodes[idx].split = split;
    nodes[idx].left = left;
    nodes[idx].right = right;
    return idx;
  }

  void search(const NodeSet& pts, const Metric& metric, const double* x, std::uint32_t ni,
              std::size_t& best, double& best_r) const {
    const Node& node = nodes[ni];
    if (node.axis < 0) {
      for (std::uint32_t k = node.begin; k < node.end; ++k) {
        std::uint32_t i = order[k];
        double r = metric.reduced(x, pts.row(i).data(), pts.dim());
        if (r < best_r || (r == best_r && i < best)) {
          best_r = r;
          best = i;
        }
      }
      return;
    }
    double gap = x[node.axis] - node.split;
    std::uint32_t near = gap < 0 ? node.left : node.right;
    std::uint32_t far = gap < 0 ? node.right : node.left;
    search(pts, metric, x, near, best, best_r);
    // <= keeps equal-distance candidates (lower index) reachable across the split
    if (metric.axis_reduced(gap, node.axis) <= best_r) search(pts, metric, x, far, best, best_r);
  }
};

NearestIndex::NearestIndex(const NodeSet& nodes, Metric metric) : nodes_(nodes), metric_(std::move(metric)) {
  if (nodes_.size() > brute_force_limit) rebuild_tree();
}

NearestIndex::NearestIndex() = default;
NearestIndex::~NearestIndex() = default;
NearestIndex::NearestIndex(NearestIndex&&) noexcept = default;
NearestIndex& NearestIndex::operator=(NearestIndex&&) noexcept = default;

NearestIndex::NearestIndex(const NearestIndex& other) : nodes_(other.nodes_), metric_(other.metric_) {
  if (other.tree_) tree_ = std::make_unique<Tree>(*other.tree_);
}

NearestIndex& NearestIndex::operator=(const NearestIndex& other) {
  if (this != &other) {
    nodes_ = other.nodes_;
    metric_ = other.metric_;
    tree_ = other.tree_ ? std::make_unique<Tree>(*other.tree_) : nullptr;
  }
  return *this;
}

void NearestIndex::rebuild_tree() {
  tree_ = std::make_unique<Tree>();
  tree_->order.resize(nodes_.size());
  std::iota(tree_->order.begin(), tree_->order.end(), 0U);
  tree_->nodes.reserve(2 * nodes_.size() / Tree::leaf_size + 2);
  tree_->build(nodes_, 0, static_cast<std::uint32_t>(nodes_.size()));
}

void NearestIndex::add(std::span<const double> x) {
  nodes_.push_back(x);
  if (nodes_.size() > brute_force_limit) rebuild_tree();
}

std::size_t NearestIndex::nearest_brute(const double* x, double* best_reduced) const {
  const int dim = nodes_.dim();
  const double* base = nodes_.data().data();
  const std::size_t n = nodes_.size();
  std::size_t best = 0;
  double best_r = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double r = metric_.reduced(x, base + i * dim, dim);
    if (r < best_r) {
      best_r = r;
      best = i;
    }
  }
  *best_reduced = best_r;
  return best;
}

Neighbor NearestIndex::nearest(std::span<const double> x) const {
  if (nodes_.empty()) throw InvalidArgument("nearest-node search on an empty node set");
  if (static_cast<int>(x.size()) != nodes_.dim()) throw InvalidArgument("query dimension mismatch");
  double best_r = 0.0;
  std::size_t best = 0;
  if (tree_) {
    best_r = std::numeric_limits<double>::infinity();
    best = std::numeric_limits<std::size_t>::max();
    tree_->search(nodes_, metric_, x.data(), 0, best, best_r);
  } else {
    best = nearest_brute(x.data(), &best_r);
  }
  return {best, metric_.reduced_to_distance(best_r)};
}

}  // namespace aquad
