#ifndef SYMREG_TESTS_GRID_ORACLE_HPP
#define SYMREG_TESTS_GRID_ORACLE_HPP

#include "symreg/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace symreg::testing {

struct GridSpec {
  double angle_step = kPi / 180.0;
  double offset_step = 0.01;
  double epsilon = 0.5;  // t and d range over [-epsilon, epsilon]
  // When set, the angle is held at this value instead of gridded.
  std::optional<double> fixed_rotation;
  std::optional<double> fixed_alpha;
};

/// Exact minimum of the 2D joint energy over a regular grid in
/// (r, alpha, tx, ty, d).
///
/// The energy is evaluated in the model frame with linear scans, using the
/// rewrite sym_data_i = dist(refl(Y^r_i), X u Y^r), which follows from the
/// pose being an isometry. Whole blocks of grid points are skipped when a
/// Lipschitz lower bound proves none of them beats the best grid value found
/// so far, so the returned value is the true grid minimum.
class GridOracle {
 public:
  struct Result {
    double energy = std::numeric_limits<double>::infinity();
    Hypothesis<2> hypothesis;
    std::size_t evaluations = 0;
  };

  GridOracle(std::vector<Vec<2>> model, std::vector<Vec<2>> data,
             double trim_ratio = 0.7, GridSpec grid = {})
      : X_(std::move(model)), Y_(std::move(data)), ratio_(trim_ratio), g_(grid) {
    count_[0] = g_.fixed_rotation
                    ? 1
                    : static_cast<int>(std::lround(2 * kPi / g_.angle_step));
    count_[1] = g_.fixed_alpha
                    ? 1
                    : static_cast<int>(std::lround(kPi / g_.angle_step));
    const int offsets =
        static_cast<int>(std::lround(2 * g_.epsilon / g_.offset_step)) + 1;
    count_[2] = count_[3] = count_[4] = offsets;
    for (const auto& x : X_) x_max_ = std::max(x_max_, x.norm());
    for (const auto& y : Y_) y_max_ = std::max(y_max_, y.norm());
  }

  double value(int dim, int index) const {
    switch (dim) {
      case 0:
        return g_.fixed_rotation ? *g_.fixed_rotation
                                 : -kPi + index * g_.angle_step;
      case 1:
        return g_.fixed_alpha ? *g_.fixed_alpha
                              : -kPi / 2 + index * g_.angle_step;
      default: return -g_.epsilon + index * g_.offset_step;
    }
  }

  Hypothesis<2> at(const std::array<int, 5>& i) const {
    return {Pose<2>(value(0, i[0]), Vec<2>(value(2, i[2]), value(3, i[3]))),
            SymmetryPlane<2>(value(1, i[1]), value(4, i[4]))};
  }

  /// Nearest grid point to a hypothesis (angles wrapped into the grid).
  std::array<int, 5> snap(const Hypothesis<2>& h) const {
    std::array<int, 5> i{};
    const double r = wrap_angle(h.pose.angle());
    i[0] = g_.fixed_rotation
               ? 0
               : static_cast<int>(std::lround((r + kPi) / g_.angle_step)) %
                     count_[0];
    // Folded plane representation keeps alpha in [-pi/2, pi/2].
    double a = h.plane.alpha();
    double d = h.plane.depth();
    int ia = static_cast<int>(std::lround((a + kPi / 2) / g_.angle_step));
    if (ia >= count_[1] && !g_.fixed_alpha) {
      ia -= count_[1];
      d = -d;
    }
    i[1] = g_.fixed_alpha ? 0 : ia;
    auto off = [&](double v) {
      return std::clamp(
          static_cast<int>(std::lround((v + g_.epsilon) / g_.offset_step)), 0,
          count_[2] - 1);
    };
    i[2] = off(h.pose.translation().x());
    i[3] = off(h.pose.translation().y());
    i[4] = off(d);
    return i;
  }

  /// Joint energy, weights 1, independent linear-scan implementation.
  double energy(const Hypothesis<2>& h) const {
    return residuals(h, nullptr);
  }

  /// Exact grid minimum. `hint` seeds the incumbent and does not affect the
  /// returned value, only the running time.
  Result minimize(const Hypothesis<2>& hint) {
    Result best;
    const auto seed = snap(hint);
    best.energy = energy(at(seed));
    best.hypothesis = at(seed);
    best.evaluations = 1;
    Block root;
    for (int k = 0; k < 5; ++k) {
      root.lo[k] = 0;
      root.hi[k] = count_[k] - 1;
    }
    search(root, best);
    return best;
  }

 private:
  struct Block {
    std::array<int, 5> lo{};
    std::array<int, 5> hi{};
  };

  static double trimmed(std::vector<double>& r, double ratio) {
    const std::size_t n = r.size();
    std::size_t k = static_cast<std::size_t>(
        std::floor(ratio * static_cast<double>(n) + 1e-9));
    k = std::clamp<std::size_t>(k, 1, n);
    std::nth_element(r.begin(), r.begin() + (k - 1), r.end());
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += r[i] * r[i];
    return s;
  }

  static double scan(const Vec<2>& q, const std::vector<Vec<2>>& a,
                     const std::vector<Vec<2>>& b) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : a) best = std::min(best, (p - q).squaredNorm());
    for (const auto& p : b) best = std::min(best, (p - q).squaredNorm());
    return std::sqrt(best);
  }

  struct Slack {
    double rot = 0.0;     // max |r - r_eval|
    double trans = 0.0;   // max |t - t_eval|
    double alpha = 0.0;   // max |alpha - alpha_eval|
    double depth = 0.0;   // max |d - d_eval|
    double d_max = 0.0;   // max |d| over the block
  };

  // Energy at h; with `slack`, the trimmed lower bound over the block instead.
  double residuals(const Hypothesis<2>& h, const Slack* slack) const {
    const double c = std::cos(h.pose.angle());
    const double s = std::sin(h.pose.angle());
    const Vec<2> t = h.pose.translation();
    const Vec<2> n(std::cos(h.plane.alpha()), std::sin(h.plane.alpha()));
    const double d = h.plane.depth();
    auto refl = [&](const Vec<2>& p) { return Vec<2>(p - 2.0 * n * (n.dot(p) + d)); };

    yr_.resize(Y_.size());
    xs_.resize(X_.size());
    for (std::size_t i = 0; i < Y_.size(); ++i) {
      const Vec<2>& y = Y_[i];
      yr_[i] = Vec<2>(c * y.x() - s * y.y(), s * y.x() + c * y.y()) + t;
    }
    for (std::size_t i = 0; i < X_.size(); ++i) xs_[i] = refl(X_[i]);

    double move_yr = 0.0, move_xs = 0.0;
    if (slack) {
      move_yr = slack->rot * y_max_ + slack->trans;
      move_xs = (4 * x_max_ + 2 * slack->d_max) * slack->alpha + 2 * slack->depth;
    }
    auto lowered = [&](double r, double shift) {
      return slack ? std::max(r - shift, 0.0) : r;
    };

    double total = 0.0;
    buf_.resize(X_.size());
    for (std::size_t i = 0; i < X_.size(); ++i) {
      const double r = scan(xs_[i], X_, yr_);
      const double q = slack ? (4 * X_[i].norm() + 2 * slack->d_max) * slack->alpha +
                                   2 * slack->depth
                             : 0.0;
      buf_[i] = lowered(r, q + move_yr);
    }
    total += trimmed(buf_, ratio_);

    buf_.resize(Y_.size());
    for (std::size_t i = 0; i < Y_.size(); ++i) {
      const double r = scan(yr_[i], X_, xs_);
      const double q = slack ? slack->rot * Y_[i].norm() + slack->trans : 0.0;
      buf_[i] = lowered(r, q + move_xs);
    }
    total += trimmed(buf_, ratio_);

    for (std::size_t i = 0; i < Y_.size(); ++i) {
      const double r = scan(refl(yr_[i]), X_, yr_);
      double q = 0.0;
      if (slack) {
        q = slack->rot * Y_[i].norm() + slack->trans +
            (4 * yr_[i].norm() + 2 * slack->d_max) * slack->alpha +
            2 * slack->depth;
      }
      buf_[i] = lowered(r, q + move_yr);
    }
    total += trimmed(buf_, ratio_);
    return total;
  }

  void search(const Block& b, Result& best) {
    std::array<int, 5> mid{};
    for (int k = 0; k < 5; ++k) mid[k] = (b.lo[k] + b.hi[k]) / 2;
    bool single = true;
    for (int k = 0; k < 5; ++k) single = single && b.lo[k] == b.hi[k];
    const Hypothesis<2> h = at(mid);
    ++best.evaluations;
    if (single) {
      const double e = energy(h);
      if (e < best.energy) {
        best.energy = e;
        best.hypothesis = h;
      }
      return;
    }

    auto reach = [&](int k, double step) {
      return step * std::max(mid[k] - b.lo[k], b.hi[k] - mid[k]);
    };
    Slack sl;
    sl.rot = reach(0, g_.angle_step);
    sl.alpha = reach(1, g_.angle_step);
    sl.trans = std::hypot(reach(2, g_.offset_step), reach(3, g_.offset_step));
    sl.depth = reach(4, g_.offset_step);
    sl.d_max = std::max(std::abs(value(4, b.lo[4])), std::abs(value(4, b.hi[4])));
    if (residuals(h, &sl) >= best.energy) return;

    int split = 0;
    for (int k = 1; k < 5; ++k) {
      if (b.hi[k] - b.lo[k] > b.hi[split] - b.lo[split]) split = k;
    }
    const int cut = (b.lo[split] + b.hi[split]) / 2;
    Block left = b, right = b;
    left.hi[split] = cut;
    right.lo[split] = cut + 1;
    // Visit the half holding the better centre energy first.
    const auto centre = [&](const Block& c) {
      std::array<int, 5> m{};
      for (int k = 0; k < 5; ++k) m[k] = (c.lo[k] + c.hi[k]) / 2;
      return energy(at(m));
    };
    if (centre(right) < centre(left)) std::swap(left, right);
    search(left, best);
    search(right, best);
  }

  std::vector<Vec<2>> X_;
  std::vector<Vec<2>> Y_;
  double ratio_;
  GridSpec g_;
  std::array<int, 5> count_{};
  double x_max_ = 0.0;
  double y_max_ = 0.0;
  mutable std::vector<Vec<2>> yr_;
  mutable std::vector<Vec<2>> xs_;
  mutable std::vector<double> buf_;
};

}  // namespace symreg::testing

#endif  // SYMREG_TESTS_GRID_ORACLE_HPP
