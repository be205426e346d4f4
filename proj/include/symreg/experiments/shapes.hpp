#ifndef SYMREG_EXPERIMENTS_SHAPES_HPP
#define SYMREG_EXPERIMENTS_SHAPES_HPP

#include "symreg/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace symreg::experiments {

/// Closed polygon outline, mirror symmetric about the vertical line x = 0.
/// Only the right half is stored: a chain with x >= 0 running from a vertex
/// on the axis at the top to a vertex on the axis at the bottom.
struct SymmetricOutline {
  std::string name;
  std::vector<Vec<2>> half_chain;

  void validate() const {
    if (half_chain.size() < 3) {
      throw std::invalid_argument("outline needs at least three vertices");
    }
    if (half_chain.front().x() != 0.0 || half_chain.back().x() != 0.0) {
      throw std::invalid_argument("outline chain must start and end on x = 0");
    }
    for (const auto& v : half_chain) {
      if (v.x() < 0.0) throw std::invalid_argument("outline chain must have x >= 0");
    }
  }

  double half_perimeter() const {
    double len = 0.0;
    for (std::size_t i = 1; i < half_chain.size(); ++i) {
      len += (half_chain[i] - half_chain[i - 1]).norm();
    }
    return len;
  }

  double max_radius() const {
    double m = 0.0;
    for (const auto& v : half_chain) m = std::max(m, v.norm());
    return m;
  }
};

/// Built-in outlines. None has a second mirror axis or a rotational
/// symmetry, so the pose of a partial view is unambiguous.
inline const std::vector<SymmetricOutline>& outline_library() {
  using P = Vec<2>;
  static const std::vector<SymmetricOutline> lib = {
      {"house", {P(0, 1), P(0.8, 0.25), P(0.6, 0.25), P(0.6, -0.8), P(0, -0.8)}},
      {"arrow", {P(0, 1), P(0.7, 0.3), P(0.3, 0.3), P(0.3, -0.9), P(0, -0.9)}},
      {"bottle",
       {P(0, 1), P(0.15, 1), P(0.15, 0.6), P(0.5, 0.3), P(0.5, -0.9),
        P(0, -0.9)}},
      {"goblet",
       {P(0, 0.9), P(0.6, 0.9), P(0.4, 0.3), P(0.1, 0.1), P(0.1, -0.6),
        P(0.5, -0.8), P(0, -0.8)}},
      {"lamp",
       {P(0, 0.9), P(0.8, 0.9), P(0.8, 0.6), P(0.2, 0.6), P(0.2, -0.9),
        P(0, -0.9)}},
      {"stool",
       {P(0, 0.8), P(0.4, 0.8), P(0.7, -0.2), P(0.7, -0.9), P(0.3, -0.9),
        P(0.3, -0.5), P(0, -0.5)}},
  };
  return lib;
}

inline const SymmetricOutline& outline_by_index(std::size_t i) {
  const auto& lib = outline_library();
  return lib[i % lib.size()];
}

inline const SymmetricOutline& outline_by_name(const std::string& name) {
  for (const auto& o : outline_library()) {
    if (o.name == name) return o;
  }
  throw std::invalid_argument("unknown shape: " + name);
}

/// Points along a closed outline with their outward unit normals, in
/// traversal order.
struct OutlineSample {
  std::vector<Vec<2>> points;
  std::vector<Vec<2>> normals;
};

/// Samples `count` (even) points uniformly by arc length, scaled so the
/// farthest vertex lies at `extent`. The right half is traversed top to
/// bottom, the left half bottom to top; sample i and sample count-1-i are
/// mirror images across x = 0.
inline OutlineSample sample_outline(const SymmetricOutline& outline,
                                    std::size_t count, double extent) {
  outline.validate();
  if (count < 4 || count % 2 != 0) {
    throw std::invalid_argument("outline sample count must be even and >= 4");
  }
  const double scale = extent / outline.max_radius();
  const std::size_t half = count / 2;
  const double step = outline.half_perimeter() / static_cast<double>(half);
  const auto& chain = outline.half_chain;

  OutlineSample right;
  std::size_t seg = 1;
  double seg_start = 0.0;
  for (std::size_t i = 0; i < half; ++i) {
    const double s = (static_cast<double>(i) + 0.5) * step;
    while (seg + 1 < chain.size() &&
           seg_start + (chain[seg] - chain[seg - 1]).norm() < s) {
      seg_start += (chain[seg] - chain[seg - 1]).norm();
      ++seg;
    }
    const Vec<2> a = chain[seg - 1];
    const Vec<2> b = chain[seg];
    const double len = (b - a).norm();
    const Vec<2> dir = (b - a) / len;
    right.points.push_back(scale * (a + dir * std::min(s - seg_start, len)));
    // Clockwise traversal on the right half: outward is the left-hand turn.
    right.normals.emplace_back(-dir.y(), dir.x());
  }

  OutlineSample out = right;
  for (std::size_t i = half; i-- > 0;) {
    out.points.emplace_back(-right.points[i].x(), right.points[i].y());
    out.normals.emplace_back(-right.normals[i].x(), right.normals[i].y());
  }
  return out;
}

/// Surface sample of an upright solid: the outline cross-section extruded
/// along z and tapered linearly with height. Outward normals accompany each
/// point.
struct SurfaceSample {
  std::vector<Vec<3>> points;
  std::vector<Vec<3>> normals;
};

inline SurfaceSample sample_extrusion(const SymmetricOutline& outline,
                                      std::size_t around, std::size_t layers,
                                      double extent, double half_height,
                                      double taper = 0.3) {
  if (layers < 2) throw std::invalid_argument("extrusion needs >= 2 layers");
  const OutlineSample ring = sample_outline(outline, around, extent);
  // Cross-section scale k(z) = 1 - taper * u with u = 0 at the bottom.
  const double dk_dz = -taper / (2.0 * half_height);
  SurfaceSample out;
  for (std::size_t l = 0; l < layers; ++l) {
    const double z = -half_height + 2.0 * half_height * static_cast<double>(l) /
                                        static_cast<double>(layers - 1);
    const double k = 1.0 - taper * (z + half_height) / (2.0 * half_height);
    for (std::size_t i = 0; i < ring.points.size(); ++i) {
      const Vec<2>& q = ring.points[i];
      const Vec<2>& n = ring.normals[i];
      out.points.emplace_back(k * q.x(), k * q.y(), z);
      out.normals.push_back(Vec<3>(n.x(), n.y(), -dk_dz * n.dot(q)).normalized());
    }
  }
  return out;
}

}  // namespace symreg::experiments

#endif  // SYMREG_EXPERIMENTS_SHAPES_HPP
