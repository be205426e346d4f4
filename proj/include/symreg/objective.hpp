#ifndef SYMREG_OBJECTIVE_HPP
#define SYMREG_OBJECTIVE_HPP

#include "symreg/geometry.hpp"
#include "symreg/kdtree.hpp"
#include "symreg/neighbor_index.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace symreg {

struct TrimConfig {
  double ratio = 0.7;

  void validate() const {
    if (!(ratio > 0.0 && ratio <= 1.0)) {
      throw std::invalid_argument("trim ratio must lie in (0, 1]");
    }
  }
};

/// Registration weights, selected by where the matched model point came from.
struct Weights {
  double primary = 1.0;    // match in X
  double reflected = 1.0;  // match in X^s

  void validate() const {
    if (!(primary > 0.0 && primary <= 1.0) ||
        !(reflected > 0.0 && reflected <= 1.0)) {
      throw std::invalid_argument("weights must lie in (0, 1]");
    }
  }
};

/// Which residual families enter the energy.
struct Terms {
  bool sym_model = true;
  bool reg = true;
  bool sym_data = true;
  bool reg_against_reflected = true;  // registration also matches into X^s

  static constexpr Terms joint() { return {true, true, true, true}; }
  static constexpr Terms registration_only() {
    return {false, true, false, false};
  }
  static constexpr Terms symmetry_only() { return {true, false, false, true}; }
};

//==============================================================================
// Trimming

/// Number of residuals kept out of n: floor(ratio * n), at least one.
inline std::size_t trimmed_count(std::size_t n, double ratio) {
  if (n == 0) return 0;
  // The small offset keeps products such as 0.7 * 30 from rounding below an
  // integer they represent exactly.
  const auto k = static_cast<std::size_t>(
      std::floor(ratio * static_cast<double>(n) + 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

struct TrimResult {
  std::vector<bool> kept;
  double sum_of_squares = 0.0;
};

/// Keeps the k smallest residuals (ties go to the lower index) and sums their
/// squares in index order.
inline TrimResult trim(std::span<const double> residuals,
                       const TrimConfig& cfg) {
  TrimResult out;
  const std::size_t n = residuals.size();
  out.kept.assign(n, false);
  if (n == 0) return out;
  const std::size_t k = trimmed_count(n, cfg.ratio);

  if (k == n) {
    out.kept.assign(n, true);
  } else {
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::nth_element(order.begin(), order.begin() + (k - 1), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) {
                       return residuals[a] < residuals[b] ||
                              (residuals[a] == residuals[b] && a < b);
                     });
    for (std::size_t i = 0; i < k; ++i) out.kept[order[i]] = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (out.kept[i]) out.sum_of_squares += residuals[i] * residuals[i];
  }
  return out;
}

//==============================================================================
// Per-point residuals against an explicit union index

/// Distance from the reflected model point to its nearest neighbour in X u Y^r.
template <int D>
double residual_sym_model(const SymmetryPlane<D>& plane, const Vec<D>& x,
                          const NeighborIndex<D>& model_and_aligned_data) {
  return model_and_aligned_data.nearest(plane.reflect(x)).distance;
}

/// Weighted alignment distance of a data point against X u X^s.
template <int D>
double residual_reg(const Pose<D>& pose, const Vec<D>& y,
                    const NeighborIndex<D>& model_and_reflected,
                    const Weights& w) {
  const auto nb = model_and_reflected.nearest(pose.apply(y));
  const double weight =
      nb.tag == Provenance::kModelReflected ? w.reflected : w.primary;
  return weight * nb.distance;
}

/// Symmetry residual of a data point in its own frame against X^r u Y, using
/// the plane carried into the data frame.
template <int D>
double residual_sym_data(const Hypothesis<D>& h, const Vec<D>& y,
                         const NeighborIndex<D>& aligned_model_and_data) {
  const auto plane = transform_plane(h.pose, h.plane);
  return aligned_model_and_data.nearest(plane.reflect(y)).distance;
}

//==============================================================================

struct ResidualBreakdown {
  std::vector<double> sym_model;
  std::vector<double> reg;
  std::vector<double> sym_data;
  std::vector<bool> sym_model_kept;
  std::vector<bool> reg_kept;
  std::vector<bool> sym_data_kept;
  double trimmed_energy = 0.0;
};

/// Nearest-neighbour outcome for one residual. Every union X u Y^r, X u X^s,
/// X^r u Y splits into a set that does not move with the current family's own
/// query ("fixed": X, X, Y) and one that does ("moving": Y^r, X^s, X^r).
struct Match {
  double residual = 0.0;  // weighted for the registration family
  double fixed_distance = std::numeric_limits<double>::infinity();
  double moving_distance = std::numeric_limits<double>::infinity();
  Provenance tag = Provenance::kModel;
  std::uint32_t index = 0;  // index within the original set named by tag
};

/// Extra search radius for the moving set, used when bounding an interval.
/// With zero slack the moving distance is only exact when it wins.
struct MatchSlack {
  double sym_model = 0.0;
  double reg = 0.0;
  double sym_data = 0.0;
};

struct Matches {
  std::vector<Match> sym_model;
  std::vector<Match> reg;
  std::vector<Match> sym_data;
};

/// The joint registration + symmetry energy for a fixed pair of point sets.
///
/// X and Y are indexed once in their own frames; the transformed sets X^s,
/// X^r and Y^r are never materialised; queries are mapped into the frame of
/// the stored set instead.
template <int D>
class JointObjective {
 public:
  JointObjective(PointSet<D> model, PointSet<D> data, TrimConfig trim = {},
                 Weights weights = {}, Terms terms = Terms::joint())
      : model_(std::move(model)),
        data_(std::move(data)),
        trim_(trim),
        weights_(weights),
        terms_(terms) {
    if (model_.empty() || data_.empty()) {
      throw std::invalid_argument("point sets must be nonempty");
    }
    trim_.validate();
    weights_.validate();
    model_tree_ = KdTree<D>(model_.points());
    data_tree_ = KdTree<D>(data_.points());
    model_norms_.reserve(model_.size());
    for (const auto& x : model_) model_norms_.push_back(x.norm());
    data_norms_.reserve(data_.size());
    for (const auto& y : data_) data_norms_.push_back(y.norm());
    model_max_norm_ = model_.max_norm();
    data_max_norm_ = data_.max_norm();
  }

  const PointSet<D>& model() const { return model_; }
  const PointSet<D>& data() const { return data_; }
  const TrimConfig& trim_config() const { return trim_; }
  const Weights& weights() const { return weights_; }
  const Terms& terms() const { return terms_; }
  const std::vector<double>& model_norms() const { return model_norms_; }
  const std::vector<double>& data_norms() const { return data_norms_; }
  double model_max_norm() const { return model_max_norm_; }
  double data_max_norm() const { return data_max_norm_; }

  /// Residual count entering the energy, M + 2N for the joint objective.
  std::size_t residual_count() const {
    return (terms_.sym_model ? model_.size() : 0) +
           (terms_.reg ? data_.size() : 0) +
           (terms_.sym_data ? data_.size() : 0);
  }

  Matches match(const Hypothesis<D>& h, const MatchSlack& slack = {}) const {
    Matches out;
    const Pose<D>& pose = h.pose;
    const Mat<D> rot = pose.rotation();
    const Mat<D> rot_t = rot.transpose();
    const Vec<D>& t = pose.translation();
    const Vec<D> n = h.plane.normal();
    const double d = h.plane.depth();

    if (terms_.sym_model) {
      out.sym_model.resize(model_.size());
      for (std::size_t i = 0; i < model_.size(); ++i) {
        const Vec<D>& x = model_[i];
        const Vec<D> q = x - 2.0 * n * (x.dot(n) + d);
        out.sym_model[i] = match_pair(
            model_tree_, q, data_tree_, rot_t * (q - t), slack.sym_model,
            Provenance::kModel, Provenance::kDataAligned, false);
      }
    }
    if (terms_.reg) {
      out.reg.resize(data_.size());
      for (std::size_t i = 0; i < data_.size(); ++i) {
        const Vec<D> p = rot * data_[i] + t;
        if (!terms_.reg_against_reflected) {
          const auto f = *model_tree_.nearest(p);
          Match m;
          m.fixed_distance = std::sqrt(f.squared_distance);
          m.residual = weights_.primary * m.fixed_distance;
          m.index = static_cast<std::uint32_t>(f.index);
          out.reg[i] = m;
          continue;
        }
        const Vec<D> p_mirror = p - 2.0 * n * (p.dot(n) + d);
        Match m = match_pair(model_tree_, p, model_tree_, p_mirror, slack.reg,
                             Provenance::kModel, Provenance::kModelReflected,
                             false);
        m.residual *= m.tag == Provenance::kModelReflected ? weights_.reflected
                                                           : weights_.primary;
        out.reg[i] = m;
      }
    }
    if (terms_.sym_data) {
      const SymmetryPlane<D> local = transform_plane(pose, h.plane);
      const Vec<D> nl = local.normal();
      const double dl = local.depth();
      out.sym_data.resize(data_.size());
      for (std::size_t i = 0; i < data_.size(); ++i) {
        const Vec<D>& y = data_[i];
        const Vec<D> q = y - 2.0 * nl * (y.dot(nl) + dl);
        // X^r is listed before Y in the union, so it wins exact ties.
        out.sym_data[i] =
            match_pair(data_tree_, q, model_tree_, rot * q + t, slack.sym_data,
                       Provenance::kData, Provenance::kModelAligned, true);
      }
    }
    return out;
  }

  ResidualBreakdown breakdown(const Matches& m) const {
    ResidualBreakdown b;
    auto fill = [&](const std::vector<Match>& src, std::vector<double>& res,
                    std::vector<bool>& kept) {
      res.resize(src.size());
      for (std::size_t i = 0; i < src.size(); ++i) res[i] = src[i].residual;
      auto t = trim(res, trim_);
      kept = std::move(t.kept);
      return t.sum_of_squares;
    };
    const double e_sm = fill(m.sym_model, b.sym_model, b.sym_model_kept);
    const double e_reg = fill(m.reg, b.reg, b.reg_kept);
    const double e_sd = fill(m.sym_data, b.sym_data, b.sym_data_kept);
    b.trimmed_energy = e_sm + e_reg + e_sd;
    return b;
  }

  ResidualBreakdown evaluate(const Hypothesis<D>& h) const {
    return breakdown(match(h));
  }

  double energy(const Hypothesis<D>& h) const {
    return evaluate(h).trimmed_energy;
  }

 private:
  // Nearest neighbour over the union of two stored sets, each queried in its
  // own frame. The fixed set is searched exhaustively; the moving set only
  // within the fixed distance plus `slack`.
  static Match match_pair(const KdTree<D>& fixed_tree, const Vec<D>& fixed_q,
                          const KdTree<D>& moving_tree, const Vec<D>& moving_q,
                          double slack, Provenance fixed_tag,
                          Provenance moving_tag, bool moving_wins_ties) {
    Match m;
    const auto f = *fixed_tree.nearest(fixed_q);
    m.fixed_distance = std::sqrt(f.squared_distance);
    const double reach = m.fixed_distance + slack;
    const double bound =
        std::nextafter(std::max(reach * reach, f.squared_distance),
                       std::numeric_limits<double>::infinity());
    const auto mv = moving_tree.nearest_below(moving_q, bound);
    if (mv) m.moving_distance = std::sqrt(mv->squared_distance);

    const bool moving_wins =
        mv && (moving_wins_ties ? mv->squared_distance <= f.squared_distance
                                : mv->squared_distance < f.squared_distance);
    if (moving_wins) {
      m.residual = m.moving_distance;
      m.tag = moving_tag;
      m.index = static_cast<std::uint32_t>(mv->index);
    } else {
      m.residual = m.fixed_distance;
      m.tag = fixed_tag;
      m.index = static_cast<std::uint32_t>(f.index);
    }
    return m;
  }

  PointSet<D> model_;
  PointSet<D> data_;
  TrimConfig trim_;
  Weights weights_;
  Terms terms_;
  KdTree<D> model_tree_;
  KdTree<D> data_tree_;
  std::vector<double> model_norms_;
  std::vector<double> data_norms_;
  double model_max_norm_ = 0.0;
  double data_max_norm_ = 0.0;
};

/// One-shot evaluation of the trimmed joint energy.
template <int D>
ResidualBreakdown evaluate(const Hypothesis<D>& h, const PointSet<D>& model,
                           const PointSet<D>& data, const TrimConfig& cfg = {},
                           const Weights& w = {}) {
  return JointObjective<D>(model, data, cfg, w).evaluate(h);
}

}  // namespace symreg

#endif  // SYMREG_OBJECTIVE_HPP
