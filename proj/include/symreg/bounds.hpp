#ifndef SYMREG_BOUNDS_HPP
#define SYMREG_BOUNDS_HPP

#include "symreg/geometry.hpp"
#include "symreg/objective.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace symreg {

/// Worst-case displacement factors over a parameter box.
struct UncertaintyRadii {
  double rotation = 0.0;     // gamma_r, chord of the rotation half-width
  double translation = 0.0;  // gamma_t, half-diagonal of the translation box
  double normal = 0.0;       // gamma_alpha, chord of the normal half-width
  double depth = 0.0;        // gamma_d
};

struct BoundPair {
  double upper = 0.0;
  double lower = 0.0;
};

inline double rotation_radius(double half_width) {
  return 2.0 * std::sin(std::min(half_width / 2.0, kPi / 2.0));
}

inline double normal_radius(double half_width) {
  return std::sqrt(2.0 * (1.0 - std::cos(std::min(half_width, kPi))));
}

template <int D>
UncertaintyRadii radii(const AngleInterval& outer,
                       const TranslationDepthInterval<D>& inner) {
  const auto& hw = inner.half_width();
  UncertaintyRadii g;
  g.rotation = rotation_radius(outer.half_width()(0));
  g.normal = normal_radius(outer.half_width()(1));
  g.translation = hw.template head<D>().norm();
  g.depth = hw(D);
  return g;
}

//==============================================================================
// Per-point lower bounds. Each takes the residual at the box centre.

inline double lower_reg(double center_residual, double point_norm,
                        const UncertaintyRadii& g, double weight) {
  return std::max(
      center_residual - weight * (g.rotation * point_norm + g.translation),
      0.0);
}

template <int D>
double lower_reg(double center_residual, const Vec<D>& y,
                 const UncertaintyRadii& g, double weight) {
  return lower_reg(center_residual, y.norm(), g, weight);
}

inline double lower_sym_model(double center_residual, double point_norm,
                              double depth0, const UncertaintyRadii& g) {
  return std::max(center_residual -
                      2.0 * (2.0 * g.normal * point_norm + g.depth +
                             std::abs(depth0) * g.normal),
                  0.0);
}

template <int D>
double lower_sym_model(double center_residual, const Vec<D>& x, double depth0,
                       const UncertaintyRadii& g) {
  return lower_sym_model(center_residual, x.norm(), depth0, g);
}

/// `plane_offset0` is t0^T n0 + d0, the centre plane depth in the data frame.
inline double lower_sym_data(double center_residual, double point_norm,
                             double plane_offset0, double translation_norm0,
                             const UncertaintyRadii& g) {
  const double slack =
      g.translation + g.depth +
      (g.normal + g.rotation) * (2.0 * point_norm + std::abs(plane_offset0)) +
      translation_norm0 * g.normal;
  return std::max(center_residual - 2.0 * slack, 0.0);
}

template <int D>
double lower_sym_data(double center_residual, const Vec<D>& y,
                      const Vec<D>& t0, const Vec<D>& n0, double depth0,
                      const UncertaintyRadii& g) {
  return lower_sym_data(center_residual, y.norm(), t0.dot(n0) + depth0,
                        t0.norm(), g);
}

//==============================================================================

template <int D>
Hypothesis<D> center_hypothesis(const AngleInterval& outer,
                                const TranslationDepthInterval<D>& inner) {
  return Hypothesis<D>{
      Pose<D>(outer.center()(0), translation_of<D>(inner)),
      SymmetryPlane<D>(outer.center()(1), depth_of<D>(inner))};
}

template <int D>
double upper_energy(const Hypothesis<D>& center, const PointSet<D>& model,
                    const PointSet<D>& data, const TrimConfig& cfg = {},
                    const Weights& w = {}) {
  return evaluate(center, model, data, cfg, w).trimmed_energy;
}

/// Upper and lower bound of the trimmed energy over outer x inner.
///
/// The upper bound is the energy at the box centre. The lower bound applies
/// the per-point bounds above, after lowering each centre distance to the
/// moving half of its union (Y^r, X^s or X^r) by how far that half can move
/// inside the box. Per family the k smallest squared lower bounds are kept.
template <int D>
BoundPair interval_bounds(const JointObjective<D>& objective,
                          const AngleInterval& outer,
                          const TranslationDepthInterval<D>& inner) {
  const Hypothesis<D> h0 = center_hypothesis<D>(outer, inner);
  const UncertaintyRadii g = radii<D>(outer, inner);
  const Vec<D>& t0 = h0.pose.translation();
  const Vec<D> n0 = h0.plane.normal();
  const double d0 = h0.plane.depth();
  const bool exact = g.rotation == 0.0 && g.translation == 0.0 &&
                     g.normal == 0.0 && g.depth == 0.0;

  double model_reach = 0.0;  // max ||x - t0||
  if (objective.terms().sym_data && g.rotation > 0.0) {
    for (const auto& x : objective.model()) {
      model_reach = std::max(model_reach, (x - t0).norm());
    }
  }
  MatchSlack move;
  move.sym_model = g.rotation * objective.data_max_norm() + g.translation;
  move.reg = 2.0 * (2.0 * g.normal * objective.model_max_norm() + g.depth +
                    std::abs(d0) * g.normal);
  move.sym_data =
      g.rotation * (model_reach + g.translation) + g.translation;

  const Matches m = objective.match(h0, move);
  BoundPair out;
  out.upper = objective.breakdown(m).trimmed_energy;

  const TrimConfig& trim_cfg = objective.trim_config();
  const Weights& w = objective.weights();
  const auto& xn = objective.model_norms();
  const auto& yn = objective.data_norms();
  auto lowered = [](const Match& mt, double shift) {
    return std::min(mt.fixed_distance,
                    std::max(mt.moving_distance - shift, 0.0));
  };

  std::vector<double> lows;
  double lower = 0.0;

  lows.resize(m.sym_model.size());
  for (std::size_t i = 0; i < m.sym_model.size(); ++i) {
    const double c = exact ? m.sym_model[i].residual
                           : lowered(m.sym_model[i], move.sym_model);
    lows[i] = lower_sym_model(c, xn[i], d0, g);
  }
  lower += trim(lows, trim_cfg).sum_of_squares;

  lows.resize(m.reg.size());
  for (std::size_t i = 0; i < m.reg.size(); ++i) {
    const Match& mt = m.reg[i];
    if (exact) {
      lows[i] = mt.residual;
      continue;
    }
    const double via_model =
        lower_reg(w.primary * mt.fixed_distance, yn[i], g, w.primary);
    const double via_mirror = lower_reg(
        w.reflected * std::max(mt.moving_distance - move.reg, 0.0), yn[i], g,
        w.reflected);
    lows[i] = std::min(via_model, via_mirror);
  }
  lower += trim(lows, trim_cfg).sum_of_squares;

  lows.resize(m.sym_data.size());
  const double plane_offset0 = t0.dot(n0) + d0;
  const double t0_norm = t0.norm();
  for (std::size_t i = 0; i < m.sym_data.size(); ++i) {
    const double c = exact ? m.sym_data[i].residual
                           : lowered(m.sym_data[i], move.sym_data);
    lows[i] = lower_sym_data(c, yn[i], plane_offset0, t0_norm, g);
  }
  lower += trim(lows, trim_cfg).sum_of_squares;

  out.lower = std::min(lower, out.upper);
  return out;
}

template <int D>
BoundPair interval_bounds(const AngleInterval& outer,
                          const TranslationDepthInterval<D>& inner,
                          const PointSet<D>& model, const PointSet<D>& data,
                          const TrimConfig& cfg = {}, const Weights& w = {}) {
  return interval_bounds(JointObjective<D>(model, data, cfg, w), outer, inner);
}

}  // namespace symreg

#endif  // SYMREG_BOUNDS_HPP
