#ifndef SYMREG_EXPERIMENTS_NORMALIZE_HPP
#define SYMREG_EXPERIMENTS_NORMALIZE_HPP

#include "symreg/geometry.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace symreg::experiments {

/// p_normalized = scale * (p - offset).
template <int D>
struct NormalizationRecord {
  Vec<D> offset = Vec<D>::Zero();
  double scale = 1.0;

  Vec<D> forward(const Vec<D>& p) const { return scale * (p - offset); }
  Vec<D> inverse(const Vec<D>& q) const { return q / scale + offset; }

  PointSet<D> forward(const PointSet<D>& s) const {
    std::vector<Vec<D>> out;
    out.reserve(s.size());
    for (const auto& p : s) out.push_back(forward(p));
    return PointSet<D>(std::move(out));
  }

  PointSet<D> inverse(const PointSet<D>& s) const {
    std::vector<Vec<D>> out;
    out.reserve(s.size());
    for (const auto& q : s) out.push_back(inverse(q));
    return PointSet<D>(std::move(out));
  }

  /// Expresses an original-frame hypothesis in normalized coordinates.
  /// Rotation and normal angle are unchanged by a shared shift and scale.
  Hypothesis<D> forward(const Hypothesis<D>& h) const {
    const Mat<D> rot = h.pose.rotation();
    const Vec<D> n = h.plane.normal();
    const Vec<D> t = scale * (rot * offset + h.pose.translation() - offset);
    const double d = scale * (offset.dot(n) + h.plane.depth());
    return {Pose<D>(h.pose.angle(), t), SymmetryPlane<D>(h.plane.alpha(), d)};
  }

  Hypothesis<D> inverse(const Hypothesis<D>& h) const {
    const Mat<D> rot = h.pose.rotation();
    const Vec<D> n = h.plane.normal();
    const Vec<D> t = offset - rot * offset + h.pose.translation() / scale;
    const double d = h.plane.depth() / scale - offset.dot(n);
    return {Pose<D>(h.pose.angle(), t), SymmetryPlane<D>(h.plane.alpha(), d)};
  }
};

namespace detail {

template <int D>
NormalizationRecord<D> fit(const std::vector<const PointSet<D>*>& sets) {
  std::size_t count = 0;
  Vec<D> sum = Vec<D>::Zero();
  for (const auto* s : sets) {
    for (const auto& p : *s) sum += p;
    count += s->size();
  }
  if (count == 0) throw std::invalid_argument("cannot normalize an empty set");
  NormalizationRecord<D> rec;
  rec.offset = sum / static_cast<double>(count);
  double extent = 0.0;
  for (const auto* s : sets) {
    for (const auto& p : *s) {
      extent = std::max(extent, (p - rec.offset).cwiseAbs().maxCoeff());
    }
  }
  if (!(extent > 0.0)) {
    throw std::invalid_argument("cannot normalize identical points");
  }
  rec.scale = 1.0 / extent;
  return rec;
}

}  // namespace detail

/// Centres on the centroid and scales by the largest absolute coordinate so
/// every coordinate lands in [-1, 1].
template <int D>
NormalizationRecord<D> fit_normalization(const PointSet<D>& s) {
  return detail::fit<D>({&s});
}

/// One shared normalization for a model/data pair.
template <int D>
NormalizationRecord<D> fit_normalization(const PointSet<D>& model,
                                         const PointSet<D>& data) {
  return detail::fit<D>({&model, &data});
}

template <int D>
std::pair<PointSet<D>, NormalizationRecord<D>> normalize(const PointSet<D>& s) {
  const auto rec = fit_normalization(s);
  return {rec.forward(s), rec};
}

}  // namespace symreg::experiments

#endif  // SYMREG_EXPERIMENTS_NORMALIZE_HPP
