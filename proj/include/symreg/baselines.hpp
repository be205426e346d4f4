#ifndef SYMREG_BASELINES_HPP
#define SYMREG_BASELINES_HPP

#include "symreg/bnb.hpp"
#include "symreg/geometry.hpp"
#include "symreg/kdtree.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace symreg {

/// Trimmed registration alone: the same search with both symmetry terms
/// removed and registration matched against X only.
template <int D>
SolveResult<D> register_only(const PointSet<D>& model, const PointSet<D>& data,
                             SolveConfig cfg = {}) {
  cfg.mode = SolveMode::kRegistrationOnly;
  return solve(model, data, cfg);
}

struct RansacConfig {
  std::size_t iterations = 5000;
  double inlier_threshold = 0.02;
  double min_inlier_fraction = 0.3;
  std::uint64_t seed = 1;

  void validate() const {
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (!(inlier_threshold > 0.0)) {
      throw std::invalid_argument("inlier threshold must be > 0");
    }
    if (!(min_inlier_fraction >= 0.0 && min_inlier_fraction <= 1.0)) {
      throw std::invalid_argument("min inlier fraction must lie in [0, 1]");
    }
  }
};

template <int D>
struct RansacResult {
  SymmetryPlane<D> plane;
  std::size_t inliers = 0;
  double inlier_fraction = 0.0;
  bool meets_min_fraction = false;
};

namespace detail {

/// Horizontal part of a vector (the vertical axis is the last one in 3D).
template <int D>
Eigen::Vector2d horizontal(const Vec<D>& v) {
  return Eigen::Vector2d(v(0), v(1));
}

template <int D>
std::size_t count_inliers(const SymmetryPlane<D>& plane, const PointSet<D>& set,
                          const KdTree<D>& tree, double threshold,
                          std::vector<std::size_t>* partners = nullptr) {
  const double t2 = threshold * threshold;
  std::size_t count = 0;
  if (partners) partners->assign(set.size(), set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto hit = tree.nearest_below(plane.reflect(set[i]), t2);
    if (!hit) continue;
    ++count;
    if (partners) (*partners)[i] = hit->index;
  }
  return count;
}

/// Least-squares plane from reflected pairs (p, q): the normal is the
/// dominant direction of p - q, the depth puts the plane through the mean
/// midpoint.
template <int D>
std::optional<SymmetryPlane<D>> fit_from_pairs(
    const PointSet<D>& set, const std::vector<std::size_t>& partners,
    const SymmetryPlane<D>& reference) {
  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (partners[i] == set.size()) continue;
    const Eigen::Vector2d v = horizontal<D>(set[i] - set[partners[i]]);
    scatter += v * v.transpose();
    ++pairs;
  }
  if (pairs == 0 || scatter.trace() <= 0.0) return std::nullopt;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(scatter);
  Eigen::Vector2d dir = eig.eigenvectors().col(1);
  if (dir.dot(horizontal<D>(reference.normal())) < 0.0) dir = -dir;
  const double alpha = std::atan2(dir.y(), dir.x());
  const Vec<D> n = SymmetryPlane<D>::normal_at(alpha);

  double depth = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (partners[i] == set.size()) continue;
    depth -= n.dot(0.5 * (set[i] + set[partners[i]]));
    ++used;
  }
  return SymmetryPlane<D>(alpha, depth / static_cast<double>(used));
}

}  // namespace detail

/// Mirror plane of a single set by random sampling. Each hypothesis is the
/// perpendicular bisector of a sampled pair, with the normal restricted to
/// the horizontal plane. A point is an inlier when its mirror image lies
/// within the threshold of some point of the set. The best hypothesis is
/// refit once from its inlier pairs.
template <int D>
RansacResult<D> ransac_symmetry(const PointSet<D>& set,
                                const RansacConfig& cfg = {}) {
  cfg.validate();
  if (set.size() < 2) throw std::invalid_argument("need at least two points");
  const KdTree<D> tree(set.points());
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, set.size() - 1);

  std::optional<SymmetryPlane<D>> best;
  std::size_t best_count = 0;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const std::size_t i = pick(rng);
    const std::size_t j = pick(rng);
    const Eigen::Vector2d v = detail::horizontal<D>(set[i] - set[j]);
    if (i == j || v.norm() < 1e-12) continue;
    const double alpha = std::atan2(v.y(), v.x());
    const Vec<D> n = SymmetryPlane<D>::normal_at(alpha);
    const SymmetryPlane<D> plane(alpha, -n.dot(0.5 * (set[i] + set[j])));
    const std::size_t count =
        detail::count_inliers(plane, set, tree, cfg.inlier_threshold);
    if (!best || count > best_count) {
      best = plane;
      best_count = count;
    }
  }
  if (!best) throw std::invalid_argument("all sampled pairs were degenerate");

  std::vector<std::size_t> partners;
  detail::count_inliers(*best, set, tree, cfg.inlier_threshold, &partners);
  if (const auto refit = detail::fit_from_pairs(set, partners, *best)) {
    const std::size_t count =
        detail::count_inliers(*refit, set, tree, cfg.inlier_threshold);
    if (count >= best_count) {
      best = refit;
      best_count = count;
    }
  }

  RansacResult<D> out;
  out.plane = *best;
  out.inliers = best_count;
  out.inlier_fraction =
      static_cast<double>(best_count) / static_cast<double>(set.size());
  out.meets_min_fraction = out.inlier_fraction >= cfg.min_inlier_fraction;
  return out;
}

/// Registration-only alignment followed by mirror-plane detection on the
/// fused set X u Y^r: the two-stage baseline.
template <int D>
struct TwoStageResult {
  SolveResult<D> registration;
  RansacResult<D> symmetry;
};

template <int D>
TwoStageResult<D> register_then_detect(const PointSet<D>& model,
                                       const PointSet<D>& data,
                                       const SolveConfig& cfg = {},
                                       const RansacConfig& ransac = {}) {
  TwoStageResult<D> out{register_only(model, data, cfg), {}};
  std::vector<Vec<D>> fused = model.points();
  for (const auto& y : data) fused.push_back(out.registration.pose.apply(y));
  out.symmetry = ransac_symmetry(PointSet<D>(std::move(fused)), ransac);
  return out;
}

}  // namespace symreg

#endif  // SYMREG_BASELINES_HPP
