#ifndef SYMREG_EXPERIMENTS_SCORE_HPP
#define SYMREG_EXPERIMENTS_SCORE_HPP

#include "symreg/geometry.hpp"

#include <cmath>
#include <limits>
#include <optional>

namespace symreg::experiments {

inline constexpr double kSuccessRotationDeg = 10.0;

struct TrialScore {
  double rotation_deg = 0.0;
  double translation = 0.0;
  // NaN when the method estimates no plane.
  double normal_deg = std::numeric_limits<double>::quiet_NaN();
  double depth = std::numeric_limits<double>::quiet_NaN();
  bool success = false;  // rotation error below kSuccessRotationDeg
};

inline double to_degrees(double rad) { return rad * 180.0 / kPi; }

/// Plane error with (n, d) and (-n, -d) treated as the same plane.
template <int D>
std::pair<double, double> plane_error(const SymmetryPlane<D>& estimate,
                                      const SymmetryPlane<D>& truth) {
  const double c = estimate.normal().dot(truth.normal());
  const double sign = c < 0.0 ? -1.0 : 1.0;
  const double angle = std::acos(std::min(1.0, std::abs(c)));
  return {to_degrees(angle), std::abs(sign * estimate.depth() - truth.depth())};
}

template <int D>
TrialScore score(const Pose<D>& pose,
                 const std::optional<SymmetryPlane<D>>& plane,
                 const Hypothesis<D>& truth) {
  TrialScore s;
  s.rotation_deg =
      to_degrees(std::abs(wrap_angle(pose.angle() - truth.pose.angle())));
  s.translation = (pose.translation() - truth.pose.translation()).norm();
  if (plane) {
    const auto [n, d] = plane_error(*plane, truth.plane);
    s.normal_deg = n;
    s.depth = d;
  }
  s.success = s.rotation_deg < kSuccessRotationDeg;
  return s;
}

template <int D>
TrialScore score(const Hypothesis<D>& result, const Hypothesis<D>& truth) {
  return score<D>(result.pose, result.plane, truth);
}

}  // namespace symreg::experiments

#endif  // SYMREG_EXPERIMENTS_SCORE_HPP
