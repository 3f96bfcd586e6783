#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace aquad {

using Vector = Eigen::VectorXd;

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

inline Vector to_vector(std::span<const double> x) {
  return Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
}

/// Axis-aligned box X = [lower, upper].
class BoxSupport {
 public:
  BoxSupport() = default;
  BoxSupport(std::vector<double> lower, std::vector<double> upper);

  /// The cube [lo, hi]^dim.
  static BoxSupport cube(int dim, double lo, double hi);

  int dim() const { return static_cast<int>(lower_.size()); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  double width(int i) const { return upper_[i] - lower_[i]; }

  /// |X|, the Lebesgue measure of the box.
  double volume() const;
  double log_volume() const;
  /// Euclidean length of the main diagonal.
  double diameter() const;
  bool contains(std::span<const double> x) const;
  /// Maps u in [0,1]^d onto the box.
  void from_unit(std::span<const double> u, std::span<double> out) const;
  void clamp(std::span<double> x) const;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

/// Row-major N x d point set.
class NodeSet {
 public:
  NodeSet() = default;
  explicit NodeSet(int dim) : dim_(dim) {}
  NodeSet(int dim, std::vector<double> row_major);

  int dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / static_cast<std::size_t>(dim_); }
  bool empty() const { return data_.empty(); }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  std::span<double> row(std::size_t i) {
    return {data_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  Vector point(std::size_t i) const { return to_vector(row(i)); }

  void push_back(std::span<const double> x);
  void reserve(std::size_t n) { data_.reserve(n * static_cast<std::size_t>(dim_)); }
  const std::vector<double>& data() const { return data_; }

  /// Order-sensitive hash of the exact coordinates.
  std::uint64_t fingerprint() const;

 private:
  int dim_ = 0;
  std::vector<double> data_;
};

/// Minkowski p-norm distance, optionally after dividing each axis by a width.
/// p = infinity is accepted.
class Metric {
 public:
  explicit Metric(double p = 2.0, std::vector<double> inv_scale = {});

  /// Metric over coordinates normalized by the box widths.
  static Metric scaled_to(const BoxSupport& box, double p = 2.0);

  double p() const { return p_; }
  const std::vector<double>& inv_scale() const { return inv_scale_; }

  /// Monotone surrogate of the distance (sum |dx|^p, or max |dx|); cheaper to compare.
  double reduced(const double* a, const double* b, int dim) const;
  double distance(std::span<const double> a, std::span<const double> b) const;
  double reduced_to_distance(double r) const;
  /// Reduced distance for a single-axis gap, used for kd-tree pruning.
  double axis_reduced(double gap, int axis) const;

 private:
  double p_;
  std::vector<double> inv_scale_;
  enum class Kind { l1, l2, linf, general } kind_;
};

double euclidean_distance(std::span<const double> a, std::span<const double> b);

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
};

/// Nearest-node search. Exhaustive scan up to `brute_force_limit` nodes, a
/// kd-tree above. Equidistant candidates resolve to the lowest index.
class NearestIndex {
 public:
  static constexpr std::size_t brute_force_limit = 48;

  NearestIndex();
  NearestIndex(const NodeSet& nodes, Metric metric);
  ~NearestIndex();
  NearestIndex(const NearestIndex&);
  NearestIndex& operator=(const NearestIndex&);
  NearestIndex(NearestIndex&&) noexcept;
  NearestIndex& operator=(NearestIndex&&) noexcept;

  Neighbor nearest(std::span<const double> x) const;
  /// Appends a node; switches to the kd-tree when the size crosses the limit.
  void add(std::span<const double> x);

  std::size_t size() const { return nodes_.size(); }
  const Metric& metric() const { return metric_; }
  bool uses_tree() const { return tree_ != nullptr; }

 private:
  struct Tree;
  void rebuild_tree();
  std::size_t nearest_brute(const double* x, double* best_reduced) const;

  NodeSet nodes_;
  Metric metric_;
  std::unique_ptr<Tree> tree_;
};

}  // namespace aquad
