#ifndef SYMREG_BNB_HPP
#define SYMREG_BNB_HPP

#include "symreg/bounds.hpp"
#include "symreg/geometry.hpp"
#include "symreg/local_refine.hpp"
#include "symreg/objective.hpp"

#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace symreg {

enum class SolveMode {
  kJoint,             // pose and plane, all three residual families
  kRegistrationOnly,  // pose only, registration residuals against X
  kSymmetryOnly,      // plane only on a single set, pose frozen to identity
};

inline std::string to_string(SolveMode m) {
  switch (m) {
    case SolveMode::kJoint: return "joint";
    case SolveMode::kRegistrationOnly: return "register-only";
    case SolveMode::kSymmetryOnly: return "symmetry-only";
  }
  return "?";
}

inline Terms terms_for(SolveMode m) {
  switch (m) {
    case SolveMode::kJoint: return Terms::joint();
    case SolveMode::kRegistrationOnly: return Terms::registration_only();
    case SolveMode::kSymmetryOnly: return Terms::symmetry_only();
  }
  return Terms::joint();
}

/// Convergence threshold 0.001 * trim_ratio * (number of residuals):
/// M + 2N for the joint energy, N for registration only, M for symmetry only.
inline double default_tau(SolveMode mode, std::size_t model_size,
                          std::size_t data_size, double trim_ratio = 0.7) {
  double count = 0.0;
  switch (mode) {
    case SolveMode::kJoint:
      count = static_cast<double>(model_size + 2 * data_size);
      break;
    case SolveMode::kRegistrationOnly:
      count = static_cast<double>(data_size);
      break;
    case SolveMode::kSymmetryOnly:
      count = static_cast<double>(model_size);
      break;
  }
  return 0.001 * trim_ratio * count;
}

struct SolveConfig {
  SolveMode mode = SolveMode::kJoint;
  std::optional<double> tau;  // unset: default_tau()
  double epsilon = 0.5;       // translation / depth domain is [-eps, eps]
  TrimConfig trim;
  Weights weights;
  std::size_t max_outer_expansions = 1'000'000;
  std::size_t max_inner_expansions = 200'000;  // per inner search
  bool use_icp = true;
  IcpConfig icp;
  bool record_trace = false;

  void validate() const {
    if (tau && !(*tau > 0.0)) throw std::invalid_argument("tau must be > 0");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    trim.validate();
    weights.validate();
    icp.validate();
    if (max_outer_expansions == 0 || max_inner_expansions == 0) {
      throw std::invalid_argument("expansion caps must be positive");
    }
  }
};

template <int K>
struct BnBNode {
  ParamInterval<K> interval;
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  std::uint64_t seq = 0;
};

/// Priority order: ascending lower bound, then insertion order.
template <int K>
struct NodeAfter {
  bool operator()(const BnBNode<K>& a, const BnBNode<K>& b) const {
    return a.lower > b.lower || (a.lower == b.lower && a.seq > b.seq);
  }
};

template <int K>
using NodeQueue =
    std::priority_queue<BnBNode<K>, std::vector<BnBNode<K>>, NodeAfter<K>>;

struct TraceRecord {
  enum class Event { kExpanded, kQueued, kPruned };
  Event event = Event::kExpanded;
  int depth = 0;
  std::vector<double> center;
  std::vector<double> half_width;
  double lower = 0.0;
  double upper = 0.0;
  double incumbent = 0.0;
};

inline std::string to_string(TraceRecord::Event e) {
  switch (e) {
    case TraceRecord::Event::kExpanded: return "expanded";
    case TraceRecord::Event::kQueued: return "queued";
    case TraceRecord::Event::kPruned: return "pruned";
  }
  return "?";
}

struct SolveStats {
  std::size_t outer_expansions = 0;
  std::size_t inner_expansions = 0;
  std::size_t inner_searches = 0;
  std::size_t inner_searches_capped = 0;
  std::size_t bound_evaluations = 0;
  std::size_t icp_runs = 0;
  std::size_t icp_improvements = 0;
  std::size_t outer_queue_peak = 0;
  std::size_t inner_queue_peak = 0;
  double seconds = 0.0;
};

template <int D>
struct SolveResult {
  Pose<D> pose;
  std::optional<SymmetryPlane<D>> plane;  // absent for registration only
  double energy = std::numeric_limits<double>::infinity();
  double lower_bound = 0.0;
  double tau = 0.0;
  bool certified = false;  // energy - lower_bound < tau on exit
  SolveMode mode = SolveMode::kJoint;
  SolveStats stats;
  std::vector<TraceRecord> trace;

  Hypothesis<D> hypothesis() const {
    return Hypothesis<D>{pose, plane.value_or(SymmetryPlane<D>())};
  }
};

//==============================================================================

/// Bisects every dimension with positive half-width: 2^k congruent children
/// that tile the parent.
template <int K>
std::vector<ParamInterval<K>> subdivide(const ParamInterval<K>& iv) {
  using V = typename ParamInterval<K>::Vector;
  std::vector<int> split_dims;
  for (int k = 0; k < K; ++k) {
    if (iv.half_width()(k) > 0.0) split_dims.push_back(k);
  }
  const V half = iv.half_width() * 0.5;
  V child_hw = iv.half_width();
  for (int k : split_dims) child_hw(k) = half(k);

  std::vector<ParamInterval<K>> out;
  const std::size_t count = std::size_t{1} << split_dims.size();
  out.reserve(count);
  for (std::size_t mask = 0; mask < count; ++mask) {
    V c = iv.center();
    for (std::size_t b = 0; b < split_dims.size(); ++b) {
      const int k = split_dims[b];
      c(k) += ((mask >> b) & 1u) ? half(k) : -half(k);
    }
    out.emplace_back(c, child_hw);
  }
  return out;
}

template <int D>
struct Incumbent {
  double energy = std::numeric_limits<double>::infinity();
  Hypothesis<D> hypothesis;

  bool offer(const Hypothesis<D>& h, double e) {
    if (!(e < energy)) return false;
    energy = e;
    hypothesis = h;
    return true;
  }
};

template <int D>
struct InnerResult {
  Vec<D> translation = Vec<D>::Zero();
  double depth = 0.0;
  double energy = std::numeric_limits<double>::infinity();
  bool capped = false;
};

namespace detail {

template <int K>
TraceRecord make_trace(TraceRecord::Event ev, int depth,
                       const ParamInterval<K>& iv, double lower, double upper,
                       double incumbent) {
  TraceRecord rec;
  rec.event = ev;
  rec.depth = depth;
  rec.center.assign(iv.center().data(), iv.center().data() + K);
  rec.half_width.assign(iv.half_width().data(), iv.half_width().data() + K);
  rec.lower = lower;
  rec.upper = upper;
  rec.incumbent = incumbent;
  return rec;
}

}  // namespace detail

/// Best-first search over translation and depth with rotation and normal
/// angle held at (r0, alpha0). Shares and updates the caller's incumbent;
/// returns the best (t, d) seen by this search together with its energy.
template <int D>
InnerResult<D> inner_solve(const JointObjective<D>& objective, double r0,
                           double alpha0,
                           const TranslationDepthInterval<D>& domain,
                           double tau, Incumbent<D>& incumbent,
                           SolveStats& stats,
                           std::size_t max_expansions = 200'000) {
  constexpr int K = D + 1;
  const AngleInterval angles(Eigen::Vector2d(r0, alpha0),
                             Eigen::Vector2d::Zero());
  ++stats.inner_searches;

  InnerResult<D> best;
  auto consider = [&](const ParamInterval<K>& iv, const BoundPair& bp) {
    ++stats.bound_evaluations;
    if (bp.upper < best.energy) {
      best.energy = bp.upper;
      best.translation = translation_of<D>(iv);
      best.depth = depth_of<D>(iv);
    }
    incumbent.offer(center_hypothesis<D>(angles, iv), bp.upper);
  };

  NodeQueue<K> queue;
  std::uint64_t seq = 0;
  {
    const BoundPair bp = interval_bounds<D>(objective, angles, domain);
    consider(domain, bp);
    queue.push(BnBNode<K>{domain, bp.lower, bp.upper, seq++});
  }

  std::size_t expansions = 0;
  while (!queue.empty()) {
    stats.inner_queue_peak = std::max(stats.inner_queue_peak, queue.size());
    const BnBNode<K> top = queue.top();
    if (incumbent.energy - top.lower < tau) break;
    if (expansions >= max_expansions) {
      best.capped = true;
      break;
    }
    queue.pop();
    ++expansions;
    for (const auto& child : subdivide(top.interval)) {
      const BoundPair bp = interval_bounds<D>(objective, angles, child);
      consider(child, bp);
      if (bp.lower < incumbent.energy) {
        queue.push(BnBNode<K>{child, bp.lower, bp.upper, seq++});
      }
    }
  }
  stats.inner_expansions += expansions;
  if (best.capped) ++stats.inner_searches_capped;
  return best;
}

template <int D>
InnerResult<D> inner_solve(const PointSet<D>& model, const PointSet<D>& data,
                           double r0, double alpha0, const SolveConfig& cfg,
                           Incumbent<D>& incumbent) {
  cfg.validate();
  const JointObjective<D> objective(model, data, cfg.trim, cfg.weights,
                                    terms_for(cfg.mode));
  const double tau =
      cfg.tau.value_or(default_tau(cfg.mode, model.size(), data.size(),
                                   cfg.trim.ratio));
  SolveStats stats;
  return inner_solve(objective, r0, alpha0,
                     full_translation_depth_domain<D>(cfg.epsilon), tau,
                     incumbent, stats, cfg.max_inner_expansions);
}

/// Nested branch and bound over (r, alpha) outside and (t, d) inside.
///
/// Each outer child is bounded at the (t, d) returned by the inner search
/// for its centre angles, with zero translation/depth uncertainty. Local ICP
/// runs whenever a child's upper bound beats the incumbent held before that
/// child was processed.
template <int D>
SolveResult<D> solve(const PointSet<D>& model, const PointSet<D>& data,
                     const SolveConfig& cfg = {}) {
  cfg.validate();
  if (model.empty() || data.empty()) {
    throw std::invalid_argument("point sets must be nonempty");
  }
  if (model.max_abs_coordinate() > 1.0 || data.max_abs_coordinate() > 1.0) {
    throw std::invalid_argument(
        "point sets must be normalized to [-1, 1] before solving");
  }
  const auto t_start = std::chrono::steady_clock::now();

  const JointObjective<D> objective(model, data, cfg.trim, cfg.weights,
                                    terms_for(cfg.mode));
  SolveResult<D> result;
  result.mode = cfg.mode;
  result.tau = cfg.tau.value_or(
      default_tau(cfg.mode, model.size(), data.size(), cfg.trim.ratio));
  const double tau = result.tau;

  Eigen::Vector2d outer_hw(kPi, kPi / 2.0);
  using InnerVec = typename TranslationDepthInterval<D>::Vector;
  InnerVec inner_hw = InnerVec::Constant(cfg.epsilon);
  if (cfg.mode == SolveMode::kRegistrationOnly) {
    outer_hw(1) = 0.0;
    inner_hw(D) = 0.0;
  } else if (cfg.mode == SolveMode::kSymmetryOnly) {
    outer_hw(0) = 0.0;
    inner_hw.template head<D>().setZero();
  }
  const AngleInterval outer_root(Eigen::Vector2d::Zero(), outer_hw);
  const TranslationDepthInterval<D> inner_root(InnerVec::Zero(), inner_hw);

  Incumbent<D> incumbent;
  SolveStats& stats = result.stats;
  NodeQueue<2> queue;
  std::uint64_t seq = 0;
  queue.push(BnBNode<2>{outer_root, 0.0,
                        std::numeric_limits<double>::infinity(), seq++});
  std::vector<int> depth_of_seq{0};

  bool certified = false;
  double global_lower = 0.0;
  while (true) {
    if (queue.empty()) {
      // Everything was pruned against the incumbent.
      certified = true;
      global_lower = incumbent.energy;
      break;
    }
    stats.outer_queue_peak = std::max(stats.outer_queue_peak, queue.size());
    const BnBNode<2> top = queue.top();
    global_lower = top.lower;
    if (incumbent.energy - top.lower < tau) {
      certified = true;
      break;
    }
    if (stats.outer_expansions >= cfg.max_outer_expansions) break;
    queue.pop();
    ++stats.outer_expansions;
    const int depth = depth_of_seq[top.seq];
    if (cfg.record_trace) {
      result.trace.push_back(
          detail::make_trace(TraceRecord::Event::kExpanded, depth,
                             top.interval, top.lower, top.upper,
                             incumbent.energy));
    }

    for (const auto& child : subdivide(top.interval)) {
      const double r0 = child.center()(0);
      const double alpha0 = child.center()(1);
      const double before = incumbent.energy;
      const InnerResult<D> inner =
          inner_solve(objective, r0, alpha0, inner_root, tau, incumbent, stats,
                      cfg.max_inner_expansions);

      InnerVec at = InnerVec::Zero();
      at.template head<D>() = inner.translation;
      at(D) = inner.depth;
      const TranslationDepthInterval<D> fixed(at, InnerVec::Zero());
      const BoundPair bp = interval_bounds<D>(objective, child, fixed);
      ++stats.bound_evaluations;
      const Hypothesis<D> center = center_hypothesis<D>(child, fixed);
      incumbent.offer(center, bp.upper);

      if (cfg.use_icp && bp.upper < before) {
        ++stats.icp_runs;
        const RefineResult<D> refined = refine(center, objective, cfg.icp);
        if (incumbent.offer(refined.hypothesis, refined.energy)) {
          ++stats.icp_improvements;
        }
      }

      const bool pruned = bp.lower >= incumbent.energy;
      if (!pruned) {
        depth_of_seq.push_back(depth + 1);
        queue.push(BnBNode<2>{child, bp.lower, bp.upper, seq++});
      }
      if (cfg.record_trace) {
        result.trace.push_back(detail::make_trace(
            pruned ? TraceRecord::Event::kPruned
                   : TraceRecord::Event::kQueued,
            depth + 1, child, bp.lower, bp.upper, incumbent.energy));
      }
    }
  }

  result.pose = incumbent.hypothesis.pose;
  if (cfg.mode != SolveMode::kRegistrationOnly) {
    result.plane = incumbent.hypothesis.plane;
  }
  result.energy = incumbent.energy;
  result.lower_bound = std::min(global_lower, incumbent.energy);
  result.certified = certified && stats.inner_searches_capped == 0;
  stats.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t_start)
                      .count();
  return result;
}

}  // namespace symreg

#endif  // SYMREG_BNB_HPP
