#ifndef SYMREG_GEOMETRY_HPP
#define SYMREG_GEOMETRY_HPP

#include <Eigen/Core>

#include <cmath>
#include <initializer_list>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace symreg {

template <int D>
using Vec = Eigen::Matrix<double, D, 1>;

template <int D>
using Mat = Eigen::Matrix<double, D, D>;

inline constexpr double kPi = std::numbers::pi;

template <int D>
inline constexpr bool kSupportedDim = (D == 2 || D == 3);

/// Wraps an angle into [-pi, pi].
inline double wrap_angle(double angle) {
  return std::remainder(angle, 2.0 * kPi);
}

//==============================================================================
/// Ordered point collection. The vertical axis in 3D is the third coordinate.
template <int D>
class PointSet {
  static_assert(kSupportedDim<D>, "only 2D and 3D point sets are supported");

 public:
  using Point = Vec<D>;

  PointSet() = default;
  explicit PointSet(std::vector<Point> points) : points_(std::move(points)) {}
  PointSet(std::initializer_list<Point> points) : points_(points) {}

  static constexpr int dim() { return D; }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  const Point& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<Point>& points() const { return points_; }

  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

  void push_back(const Point& p) { points_.push_back(p); }

  /// Largest absolute coordinate over all points (0 for an empty set).
  double max_abs_coordinate() const {
    double m = 0.0;
    for (const auto& p : points_) m = std::max(m, p.cwiseAbs().maxCoeff());
    return m;
  }

  double max_norm() const {
    double m = 0.0;
    for (const auto& p : points_) m = std::max(m, p.norm());
    return m;
  }

 private:
  std::vector<Point> points_;
};

//==============================================================================
/// Rotation about the vertical axis (planar rotation in 2D) followed by a
/// translation. The angle is kept in [-pi, pi].
template <int D>
class Pose {
  static_assert(kSupportedDim<D>);

 public:
  Pose() : translation_(Vec<D>::Zero()) {}
  Pose(double angle, const Vec<D>& translation)
      : angle_(wrap_angle(angle)), translation_(translation) {}

  static Pose identity() { return Pose(); }

  double angle() const { return angle_; }
  const Vec<D>& translation() const { return translation_; }

  Mat<D> rotation() const { return rotation_matrix(angle_); }

  static Mat<D> rotation_matrix(double angle) {
    Mat<D> r = Mat<D>::Identity();
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    r(0, 0) = c;
    r(0, 1) = -s;
    r(1, 0) = s;
    r(1, 1) = c;
    return r;
  }

  /// Derivative of the rotation matrix with respect to the angle.
  static Mat<D> rotation_derivative(double angle) {
    Mat<D> r = Mat<D>::Zero();
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    r(0, 0) = -s;
    r(0, 1) = -c;
    r(1, 0) = c;
    r(1, 1) = -s;
    return r;
  }

  Vec<D> apply(const Vec<D>& x) const { return rotation() * x + translation_; }

  /// R^T (x - t): maps a point of the model frame back into the data frame.
  Vec<D> apply_inverse(const Vec<D>& x) const {
    return rotation().transpose() * (x - translation_);
  }

 private:
  double angle_ = 0.0;
  Vec<D> translation_;
};

//==============================================================================
/// Plane (line in 2D) {x : x^T n + d = 0} with a horizontal unit normal
/// n = [cos a, sin a (, 0)]. Stored as (a, d) with a in [-pi/2, pi/2]; the
/// constructor folds the (n, d) ~ (-n, -d) ambiguity into that range.
template <int D>
class SymmetryPlane {
  static_assert(kSupportedDim<D>);

 public:
  SymmetryPlane() = default;
  SymmetryPlane(double alpha, double depth) {
    const double folded = std::remainder(alpha, kPi);
    const double turns = std::nearbyint((alpha - folded) / kPi);
    alpha_ = folded;
    depth_ = (std::fmod(std::abs(turns), 2.0) == 1.0) ? -depth : depth;
  }

  double alpha() const { return alpha_; }
  double depth() const { return depth_; }

  Vec<D> normal() const { return normal_at(alpha_); }

  static Vec<D> normal_at(double alpha) {
    Vec<D> n = Vec<D>::Zero();
    n(0) = std::cos(alpha);
    n(1) = std::sin(alpha);
    return n;
  }

  /// dn/dalpha.
  static Vec<D> normal_derivative(double alpha) {
    Vec<D> n = Vec<D>::Zero();
    n(0) = -std::sin(alpha);
    n(1) = std::cos(alpha);
    return n;
  }

  double signed_distance(const Vec<D>& x) const {
    return x.dot(normal()) + depth_;
  }

  Vec<D> reflect(const Vec<D>& x) const {
    const Vec<D> n = normal();
    return x - 2.0 * n * (x.dot(n) + depth_);
  }

 private:
  double alpha_ = 0.0;
  double depth_ = 0.0;
};

template <int D>
struct Hypothesis {
  Pose<D> pose;
  SymmetryPlane<D> plane;
};

//==============================================================================
/// Axis-aligned box in a K-dimensional parameter space.
template <int K>
class ParamInterval {
 public:
  using Vector = Eigen::Matrix<double, K, 1>;

  ParamInterval() : center_(Vector::Zero()), half_width_(Vector::Zero()) {}
  ParamInterval(const Vector& center, const Vector& half_width)
      : center_(center), half_width_(half_width) {
    if ((half_width_.array() < 0.0).any() || !half_width_.allFinite()) {
      throw std::invalid_argument("interval half-widths must be nonnegative");
    }
  }

  static constexpr int size() { return K; }

  const Vector& center() const { return center_; }
  const Vector& half_width() const { return half_width_; }
  Vector lower() const { return center_ - half_width_; }
  Vector upper() const { return center_ + half_width_; }

  bool contains(const Vector& p) const {
    return ((p - center_).cwiseAbs().array() <= half_width_.array()).all();
  }

 private:
  Vector center_;
  Vector half_width_;
};

/// Outer layer: (rotation angle r, normal angle alpha).
using AngleInterval = ParamInterval<2>;

/// Inner layer: (translation t, plane depth d).
template <int D>
using TranslationDepthInterval = ParamInterval<D + 1>;

inline AngleInterval full_angle_domain() {
  return AngleInterval(Eigen::Vector2d::Zero(),
                       Eigen::Vector2d(kPi, kPi / 2.0));
}

template <int D>
TranslationDepthInterval<D> full_translation_depth_domain(double epsilon) {
  using V = typename TranslationDepthInterval<D>::Vector;
  return TranslationDepthInterval<D>(V::Zero(), V::Constant(epsilon));
}

template <int D>
Vec<D> translation_of(const TranslationDepthInterval<D>& iv) {
  return iv.center().template head<D>();
}

template <int D>
double depth_of(const TranslationDepthInterval<D>& iv) {
  return iv.center()(D);
}

//==============================================================================
template <int D>
Vec<D> apply_pose(const Pose<D>& pose, const Vec<D>& x) {
  return pose.apply(x);
}

template <int D>
Vec<D> reflect_point(const SymmetryPlane<D>& plane, const Vec<D>& x) {
  return plane.reflect(x);
}

/// The plane expressed in the data frame: n' = R^T n, d' = t^T n + d. For yaw
/// rotations n' stays horizontal with angle alpha - r.
template <int D>
SymmetryPlane<D> transform_plane(const Pose<D>& pose,
                                 const SymmetryPlane<D>& plane) {
  return SymmetryPlane<D>(plane.alpha() - pose.angle(),
                          pose.translation().dot(plane.normal()) +
                              plane.depth());
}

}  // namespace symreg

#endif  // SYMREG_GEOMETRY_HPP
