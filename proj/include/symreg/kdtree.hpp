#ifndef SYMREG_KDTREE_HPP
#define SYMREG_KDTREE_HPP

#include "symreg/geometry.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace symreg {

/// Static kd-tree answering exact Euclidean nearest-neighbour queries.
///
/// Among equidistant points the one with the lowest insertion index wins, so
/// results never depend on the tree layout.
template <int D>
class KdTree {
 public:
  struct Result {
    std::size_t index = 0;
    double squared_distance = std::numeric_limits<double>::infinity();
  };

  KdTree() = default;

  explicit KdTree(std::span<const Vec<D>> points, std::size_t leaf_size = 6)
      : leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
    if (points.empty()) return;
    std::vector<std::uint32_t> order(points.size());
    std::iota(order.begin(), order.end(), 0u);
    nodes_.reserve(2 * points.size() / leaf_size_ + 1);
    build(points, order, 0, static_cast<std::uint32_t>(order.size()));
    points_.reserve(order.size());
    for (const auto id : order) points_.push_back(points[id]);
    ids_ = std::move(order);
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  std::optional<Result> nearest(const Vec<D>& q) const {
    return nearest_below(q, std::numeric_limits<double>::infinity());
  }

  /// Nearest point whose squared distance is strictly below `bound`.
  std::optional<Result> nearest_below(const Vec<D>& q, double bound) const {
    if (points_.empty()) return std::nullopt;
    // Index 0 with the bound as distance rejects exact ties with the bound
    // itself; any accepted candidate replaces it with a real index.
    Result best{0, bound};
    bool found = false;
    search(0, q, best, found);
    if (!found) return std::nullopt;
    return best;
  }

 private:
  struct Node {
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
  };

  std::uint32_t build(std::span<const Vec<D>> points,
                      std::vector<std::uint32_t>& order, std::uint32_t begin,
                      std::uint32_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(Node{-1, 0.0, begin, end, 0, 0});
    if (end - begin <= leaf_size_) return id;

    Vec<D> lo = points[order[begin]];
    Vec<D> hi = lo;
    for (auto i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(points[order[i]]);
      hi = hi.cwiseMax(points[order[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi(axis) - lo(axis) <= 0.0) return id;  // all coincident

    const auto mid = begin + (end - begin) / 2;
    std::nth_element(order.begin() + begin, order.begin() + mid,
                     order.begin() + end, [&](auto a, auto b) {
                       return points[a](axis) < points[b](axis);
                     });
    const double split = points[order[mid]](axis);
    const auto left = build(points, order, begin, mid);
    const auto right = build(points, order, mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void search(std::uint32_t node_id, const Vec<D>& q, Result& best,
              bool& found) const {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
      for (auto i = node.begin; i < node.end; ++i) {
        const double d2 = (points_[i] - q).squaredNorm();
        if (d2 < best.squared_distance ||
            (d2 == best.squared_distance && ids_[i] < best.index)) {
          best.squared_distance = d2;
          best.index = ids_[i];
          found = true;
        }
      }
      return;
    }
    const double diff = q(node.axis) - node.split;
    const auto near = diff <= 0.0 ? node.left : node.right;
    const auto far = diff <= 0.0 ? node.right : node.left;
    search(near, q, best, found);
    if (diff * diff <= best.squared_distance) search(far, q, best, found);
  }

  std::size_t leaf_size_ = 6;
  std::vector<Node> nodes_;
  std::vector<Vec<D>> points_;     // stored in tree order
  std::vector<std::uint32_t> ids_;  // insertion index of points_[i]
};

}  // namespace symreg

#endif  // SYMREG_KDTREE_HPP
