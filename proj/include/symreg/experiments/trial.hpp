#ifndef SYMREG_EXPERIMENTS_TRIAL_HPP
#define SYMREG_EXPERIMENTS_TRIAL_HPP

#include "symreg/experiments/shapes.hpp"
#include "symreg/geometry.hpp"
#include "symreg/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace symreg::experiments {

struct TrialSpec {
  std::size_t shape = 0;  // index into the shape library
  double overlap = 0.5;
  double outlier_fraction = 0.0;
  std::uint64_t seed = 1;
  std::size_t contour_points = 100;  // 2D only
  double extent = 0.7;               // largest shape radius before placement

  void validate() const {
    if (!(overlap > 0.0 && overlap <= 1.0)) {
      throw std::invalid_argument("overlap must lie in (0, 1]");
    }
    if (!(outlier_fraction >= 0.0 && outlier_fraction <= 0.3)) {
      throw std::invalid_argument("outlier fraction must lie in [0, 0.3]");
    }
    if (!(extent > 0.0 && extent <= 0.9)) {
      throw std::invalid_argument("shape extent must lie in (0, 0.9]");
    }
    if (contour_points < 8 || contour_points % 2 != 0) {
      throw std::invalid_argument("contour points must be even and >= 8");
    }
  }
};

template <int D>
struct Trial {
  PointSet<D> model;
  PointSet<D> data;
  Hypothesis<D> truth;
  std::vector<bool> model_outlier;
  std::vector<bool> data_outlier;
  std::size_t shared = 0;  // points present in both sets by construction
  double overlap = 0.0;    // measured mutual-neighbour overlap
  // False when the split also admits a mirror-conjugate explanation with
  // zero energy, so the ground truth is not the unique global minimum.
  // Checked for 2D splits only.
  bool identifiable = true;
  std::string shape;
};

/// Fraction of the smaller set whose nearest neighbour in the other set is
/// mutual and closer than `threshold`. Both sets must be in one frame.
template <int D>
double overlap_ratio(const std::vector<Vec<D>>& a, const std::vector<Vec<D>>& b,
                     double threshold = 0.02) {
  if (a.empty() || b.empty()) return 0.0;
  const KdTree<D> ta(a);
  const KdTree<D> tb(b);
  const double t2 = threshold * threshold;
  std::size_t mutual = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto hit = *tb.nearest(a[i]);
    if (hit.squared_distance >= t2) continue;
    if (ta.nearest(b[hit.index])->index == i) ++mutual;
  }
  return static_cast<double>(mutual) /
         static_cast<double>(std::min(a.size(), b.size()));
}

namespace detail {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

template <int D>
Vec<D> uniform_box(std::mt19937_64& rng, double half) {
  Vec<D> v;
  for (int k = 0; k < D; ++k) v(k) = uniform(rng, -half, half);
  return v;
}

/// Places shape-frame points (mirror plane x = 0) into the model frame and
/// returns the mirror plane there.
template <int D>
SymmetryPlane<D> place(std::vector<Vec<D>>& pts, const Pose<D>& placement) {
  for (auto& p : pts) p = placement.apply(p);
  const Vec<D> n = SymmetryPlane<D>::normal_at(placement.angle());
  return SymmetryPlane<D>(placement.angle(), -placement.translation().dot(n));
}

/// Draws the ground-truth pose and maps the data view into its own frame so
/// that pose.apply(y) recovers the model-frame point. Poses that would push
/// data points outside [-1, 1] are redrawn.
template <int D>
Pose<D> draw_pose_and_map(std::mt19937_64& rng,
                          std::vector<Vec<D>>& data_view) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const Pose<D> pose(uniform(rng, -kPi, kPi), uniform_box<D>(rng, 0.5));
    bool inside = true;
    for (const auto& y : data_view) {
      if (pose.apply_inverse(y).cwiseAbs().maxCoeff() > 1.0) {
        inside = false;
        break;
      }
    }
    if (!inside) continue;
    for (auto& y : data_view) y = pose.apply_inverse(y);
    return pose;
  }
  throw std::runtime_error("could not place the data view inside [-1, 1]");
}

template <int D>
void add_outliers(std::mt19937_64& rng, double fraction, PointSet<D>& set,
                  std::vector<bool>& flags) {
  flags.assign(set.size(), false);
  const auto count = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(set.size()) + 1e-9));
  for (std::size_t i = 0; i < count; ++i) {
    set.push_back(uniform_box<D>(rng, 1.0));
    flags.push_back(true);
  }
}

template <int D>
void finish_trial(std::mt19937_64& rng, const TrialSpec& spec,
                  std::vector<Vec<D>> model_view,
                  std::vector<Vec<D>> data_view, Trial<D>& trial) {
  trial.overlap = overlap_ratio<D>(model_view, data_view);
  trial.truth.pose = draw_pose_and_map<D>(rng, data_view);
  trial.model = PointSet<D>(std::move(model_view));
  trial.data = PointSet<D>(std::move(data_view));
  add_outliers<D>(rng, spec.outlier_fraction, trial.model, trial.model_outlier);
  add_outliers<D>(rng, spec.outlier_fraction, trial.data, trial.data_outlier);
}

}  // namespace detail

/// Contour split into two contiguous arcs of equal length whose shared run
/// is `overlap` of either arc.
struct SectorSplit {
  std::size_t length = 0;
  std::size_t shared = 0;
};

inline SectorSplit sector_split(std::size_t contour_points, double overlap) {
  if (!(overlap > 0.0 && overlap <= 1.0)) {
    throw std::invalid_argument("overlap must lie in (0, 1]");
  }
  SectorSplit s;
  s.length = std::min<std::size_t>(
      contour_points,
      static_cast<std::size_t>(std::floor(
          static_cast<double>(contour_points) / (2.0 - overlap) + 1e-9)));
  s.shared = static_cast<std::size_t>(
      std::lround(overlap * static_cast<double>(s.length)));
  if (s.length < 3 || s.shared == 0) {
    throw std::invalid_argument("overlap is not realisable with this contour");
  }
  return s;
}

/// Arc start positions for which the split pins down the ground truth.
///
/// Sample i and n-1-i are mirror images. A start qualifies when, at the true
/// pose, every residual family has at least 70% exact matches, and when the
/// mirror image of the data arc covers clearly less than 70% of the model
/// arc. Past that point the data can also be explained as a view of the
/// model mirrored about an arbitrary plane, with zero energy.
inline std::vector<std::size_t> identifiable_starts(std::size_t n,
                                                   const SectorSplit& split,
                                                   double trim_ratio = 0.7,
                                                   double margin = 0.15) {
  const std::size_t len = split.length;
  const auto need = static_cast<std::size_t>(
      std::floor(trim_ratio * static_cast<double>(len) + 1e-9));
  const double conj_limit =
      (trim_ratio - margin) * static_cast<double>(len);
  std::vector<std::size_t> out;
  std::vector<char> in_x(n), in_y(n);
  for (std::size_t a = 0; a < n; ++a) {
    std::fill(in_x.begin(), in_x.end(), 0);
    std::fill(in_y.begin(), in_y.end(), 0);
    for (std::size_t i = 0; i < len; ++i) {
      in_x[(a + i) % n] = 1;
      in_y[(a + len - split.shared + i) % n] = 1;
    }
    auto mirror = [n](std::size_t i) { return n - 1 - i; };
    std::size_t y_covered = 0, x_mirror_ok = 0, y_mirror_ok = 0, conj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t m = mirror(i);
      if (in_y[i] && (in_x[i] || in_x[m])) ++y_covered;
      if (in_x[i] && (in_x[m] || in_y[m])) ++x_mirror_ok;
      if (in_y[i] && (in_x[m] || in_y[m])) ++y_mirror_ok;
      if (in_x[i] && in_y[m]) ++conj;
    }
    if (y_covered >= need && x_mirror_ok >= need && y_mirror_ok >= need &&
        static_cast<double>(conj) < conj_limit) {
      out.push_back(a);
    }
  }
  return out;
}

/// 2D protocol: a symmetric contour is placed at random, split into two arcs
/// with the requested overlap, and the second arc is moved by a random pose.
inline Trial<2> make_2d_trial(const TrialSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const SymmetricOutline& shape = outline_by_index(spec.shape);

  std::vector<Vec<2>> contour =
      sample_outline(shape, spec.contour_points, spec.extent).points;
  const Pose<2> placement(detail::uniform(rng, -kPi, kPi),
                          detail::uniform_box<2>(rng, 0.1));
  Trial<2> trial;
  trial.shape = shape.name;
  trial.truth.plane = detail::place<2>(contour, placement);

  const SectorSplit split = sector_split(contour.size(), spec.overlap);
  const std::size_t n = contour.size();
  std::vector<std::size_t> starts = identifiable_starts(n, split);
  if (starts.empty()) {
    trial.identifiable = false;
    starts.resize(n);
    std::iota(starts.begin(), starts.end(), std::size_t{0});
  }
  const std::size_t start = starts[std::uniform_int_distribution<std::size_t>(
      0, starts.size() - 1)(rng)];
  std::vector<Vec<2>> model_view;
  std::vector<Vec<2>> data_view;
  const std::size_t data_start = start + split.length - split.shared;
  for (std::size_t i = 0; i < split.length; ++i) {
    model_view.push_back(contour[(start + i) % n]);
    data_view.push_back(contour[(data_start + i) % n]);
  }
  trial.shared = split.shared;
  detail::finish_trial<2>(rng, spec, std::move(model_view),
                          std::move(data_view), trial);
  return trial;
}

//==============================================================================
// 3D

struct ViewConfig {
  std::size_t around = 40;
  std::size_t layers = 6;
  double extent = 0.45;
  double half_height = 0.35;
  double cell = 0.06;         // z-buffer cell size
  double depth_margin = 0.05;
  std::size_t max_points = 150;
};

/// Points of `surface` seen from a horizontal direction: front facing and
/// not hidden behind a nearer surface in an orthographic z-buffer.
inline std::vector<std::size_t> visible_points(const SurfaceSample& surface,
                                               double view_angle,
                                               const ViewConfig& cfg = {}) {
  const Vec<3> toward(std::cos(view_angle), std::sin(view_angle), 0.0);
  const Vec<3> side(-toward.y(), toward.x(), 0.0);
  auto cell_of = [&](const Vec<3>& p) {
    const auto u = static_cast<std::int64_t>(std::floor(p.dot(side) / cfg.cell));
    const auto w = static_cast<std::int64_t>(std::floor(p.z() / cfg.cell));
    return u * 1'000'003 + w;
  };
  std::unordered_map<std::int64_t, double> nearest;
  std::vector<std::size_t> facing;
  for (std::size_t i = 0; i < surface.points.size(); ++i) {
    if (surface.normals[i].dot(toward) <= 0.0) continue;
    facing.push_back(i);
    const double depth = -surface.points[i].dot(toward);
    auto [it, fresh] = nearest.emplace(cell_of(surface.points[i]), depth);
    if (!fresh) it->second = std::min(it->second, depth);
  }
  std::vector<std::size_t> out;
  for (std::size_t i : facing) {
    const double depth = -surface.points[i].dot(toward);
    if (depth <= nearest.at(cell_of(surface.points[i])) + cfg.depth_margin) {
      out.push_back(i);
    }
  }
  return out;
}

/// 3D protocol: an upright symmetric solid is placed at random and seen from
/// two horizontal directions; the angle between them is chosen so the
/// visible halves overlap by roughly `overlap`.
inline Trial<3> make_3d_trial(const TrialSpec& spec,
                              const ViewConfig& cfg = {}) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const SymmetricOutline& shape = outline_by_index(spec.shape);
  SurfaceSample surface = sample_extrusion(shape, cfg.around, cfg.layers,
                                           cfg.extent, cfg.half_height);

  Vec<3> offset = detail::uniform_box<3>(rng, 0.1);
  offset.z() = detail::uniform(rng, -0.1, 0.1);
  const Pose<3> placement(detail::uniform(rng, -kPi, kPi), offset);
  Trial<3> trial;
  trial.shape = shape.name;
  trial.truth.plane = detail::place<3>(surface.points, placement);
  const Mat<3> rot = placement.rotation();
  for (auto& n : surface.normals) n = rot * n;

  // One global subset so that points seen by both views stay identical.
  std::vector<std::size_t> order(surface.points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> rank(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;

  const double first = detail::uniform(rng, -kPi, kPi);
  const double sign = detail::uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
  const double second = first + sign * kPi * (1.0 - spec.overlap);
  auto view = [&](double angle) {
    std::vector<std::size_t> idx = visible_points(surface, angle, cfg);
    if (idx.empty()) throw std::runtime_error("degenerate view: nothing visible");
    if (idx.size() > cfg.max_points) {
      std::sort(idx.begin(), idx.end(),
                [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; });
      idx.resize(cfg.max_points);
      std::sort(idx.begin(), idx.end());
    }
    return idx;
  };
  const auto a = view(first);
  const auto b = view(second);
  std::vector<std::size_t> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(common));
  trial.shared = common.size();

  std::vector<Vec<3>> model_view;
  std::vector<Vec<3>> data_view;
  for (std::size_t i : a) model_view.push_back(surface.points[i]);
  for (std::size_t i : b) data_view.push_back(surface.points[i]);
  detail::finish_trial<3>(rng, spec, std::move(model_view),
                          std::move(data_view), trial);
  return trial;
}

}  // namespace symreg::experiments

#endif  // SYMREG_EXPERIMENTS_TRIAL_HPP
