#ifndef SYMREG_NEIGHBOR_INDEX_HPP
#define SYMREG_NEIGHBOR_INDEX_HPP

#include "symreg/kdtree.hpp"

#include <cmath>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace symreg {

/// Which set an indexed point came from.
enum class Provenance {
  kModel,           // X
  kModelReflected,  // X^s, X mirrored by the symmetry plane
  kModelAligned,    // X^r, X mapped into the data frame
  kData,            // Y
  kDataAligned,     // Y^r, Y mapped into the model frame
};

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kModel: return "X";
    case Provenance::kModelReflected: return "Xs";
    case Provenance::kModelAligned: return "Xr";
    case Provenance::kData: return "Y";
    case Provenance::kDataAligned: return "Yr";
  }
  return "?";
}

template <int D>
struct Neighbor {
  Vec<D> point;
  double distance = 0.0;
  Provenance tag = Provenance::kModel;
  std::size_t index = 0;  // insertion index within the index
};

/// Exact nearest-neighbour index over a labelled point list, e.g. X u Y^r.
template <int D>
class NeighborIndex {
 public:
  NeighborIndex(std::vector<Vec<D>> points, std::vector<Provenance> tags)
      : points_(std::move(points)), tags_(std::move(tags)) {
    if (points_.empty()) {
      throw std::invalid_argument("cannot index an empty point list");
    }
    if (tags_.size() != points_.size()) {
      throw std::invalid_argument("one provenance tag per point is required");
    }
    tree_ = KdTree<D>(points_);
  }

  /// Convenience for the common two-set unions.
  static NeighborIndex from_sets(const std::vector<Vec<D>>& first,
                                 Provenance first_tag,
                                 const std::vector<Vec<D>>& second,
                                 Provenance second_tag) {
    std::vector<Vec<D>> pts;
    std::vector<Provenance> tags;
    pts.reserve(first.size() + second.size());
    tags.reserve(first.size() + second.size());
    for (const auto& p : first) {
      pts.push_back(p);
      tags.push_back(first_tag);
    }
    for (const auto& p : second) {
      pts.push_back(p);
      tags.push_back(second_tag);
    }
    return NeighborIndex(std::move(pts), std::move(tags));
  }

  std::size_t size() const { return points_.size(); }
  const Vec<D>& point(std::size_t i) const { return points_[i]; }
  Provenance tag(std::size_t i) const { return tags_[i]; }

  Neighbor<D> nearest(const Vec<D>& q) const {
    const auto hit = *tree_.nearest(q);
    return Neighbor<D>{points_[hit.index], std::sqrt(hit.squared_distance),
                       tags_[hit.index], hit.index};
  }

 private:
  std::vector<Vec<D>> points_;
  std::vector<Provenance> tags_;
  KdTree<D> tree_;
};

}  // namespace symreg

#endif  // SYMREG_NEIGHBOR_INDEX_HPP
