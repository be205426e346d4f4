#ifndef SYMREG_LOCAL_REFINE_HPP
#define SYMREG_LOCAL_REFINE_HPP

#include "symreg/geometry.hpp"
#include "symreg/objective.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace symreg {

struct IcpConfig {
  int max_iters = 60;
  double rel_tol = 1e-6;
  double damping = 1e-3;

  void validate() const {
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be > 0");
    if (!(damping >= 0.0)) throw std::invalid_argument("damping must be >= 0");
  }
};

/// Parameter vector [r, t_0 .. t_{D-1}, alpha, d].
template <int D>
using ParamVector = Eigen::Matrix<double, D + 3, 1>;

template <int D>
ParamVector<D> to_params(const Hypothesis<D>& h) {
  ParamVector<D> p;
  p(0) = h.pose.angle();
  p.template segment<D>(1) = h.pose.translation();
  p(D + 1) = h.plane.alpha();
  p(D + 2) = h.plane.depth();
  return p;
}

template <int D>
Hypothesis<D> from_params(const ParamVector<D>& p) {
  return Hypothesis<D>{Pose<D>(p(0), p.template segment<D>(1)),
                       SymmetryPlane<D>(p(D + 1), p(D + 2))};
}

enum class Family : std::uint8_t { kSymModel, kReg, kSymData };

struct Correspondence {
  Family family;
  std::uint32_t source;  // index into X (kSymModel) or Y (otherwise)
  Provenance target_tag;
  std::uint32_t target;  // index into the set behind target_tag
  double weight = 1.0;
};

/// The joint energy with nearest neighbours and trim masks frozen at one
/// hypothesis: a smooth least-squares problem in the parameter vector.
///
/// A frozen match keeps the identity of the matched point, so a match into
/// Y^r, X^s or X^r still moves with the parameters.
template <int D>
class FrozenProblem {
 public:
  static constexpr int kParams = D + 3;
  using Jacobian = Eigen::Matrix<double, Eigen::Dynamic, kParams>;

  FrozenProblem(const JointObjective<D>& objective, const Hypothesis<D>& at)
      : objective_(&objective) {
    const Matches m = objective.match(at);
    const ResidualBreakdown b = objective.breakdown(m);
    const Weights& w = objective.weights();
    auto take = [&](const std::vector<Match>& ms, const std::vector<bool>& kept,
                    Family f) {
      for (std::size_t i = 0; i < ms.size(); ++i) {
        if (!kept[i]) continue;
        double weight = 1.0;
        if (f == Family::kReg) {
          weight = ms[i].tag == Provenance::kModelReflected ? w.reflected
                                                            : w.primary;
        }
        corr_.push_back(Correspondence{f, static_cast<std::uint32_t>(i),
                                       ms[i].tag, ms[i].index, weight});
      }
    };
    take(m.sym_model, b.sym_model_kept, Family::kSymModel);
    take(m.reg, b.reg_kept, Family::kReg);
    take(m.sym_data, b.sym_data_kept, Family::kSymData);
  }

  const std::vector<Correspondence>& correspondences() const { return corr_; }
  Eigen::Index rows() const { return static_cast<Eigen::Index>(corr_.size()) * D; }

  Eigen::VectorXd residuals(const ParamVector<D>& p) const {
    Eigen::VectorXd r(rows());
    eval(p, &r, nullptr);
    return r;
  }

  Jacobian jacobian(const ParamVector<D>& p) const {
    Jacobian j(rows(), kParams);
    eval(p, nullptr, &j);
    return j;
  }

  double cost(const ParamVector<D>& p) const {
    return residuals(p).squaredNorm();
  }

  void eval(const ParamVector<D>& p, Eigen::VectorXd* res, Jacobian* jac) const {
    const auto& X = objective_->model();
    const auto& Y = objective_->data();
    const double r = p(0);
    const Vec<D> t = p.template segment<D>(1);
    const double alpha = p(D + 1);
    const double d = p(D + 2);

    const Mat<D> R = Pose<D>::rotation_matrix(r);
    const Mat<D> dR = Pose<D>::rotation_derivative(r);
    const Vec<D> n = SymmetryPlane<D>::normal_at(alpha);
    const Vec<D> dn = SymmetryPlane<D>::normal_derivative(alpha);
    // Plane in the data frame, left unwrapped so it stays differentiable.
    const Vec<D> nl = SymmetryPlane<D>::normal_at(alpha - r);
    const Vec<D> dnl = SymmetryPlane<D>::normal_derivative(alpha - r);
    const double dl = t.dot(n) + d;

    if (jac) jac->setZero();
    for (std::size_t c = 0; c < corr_.size(); ++c) {
      const Correspondence& k = corr_[c];
      const Eigen::Index row = static_cast<Eigen::Index>(c) * D;
      Vec<D> value;
      switch (k.family) {
        case Family::kSymModel: {
          const Vec<D>& x = X[k.source];
          const double s = x.dot(n) + d;
          value = x - 2.0 * n * s;
          if (k.target_tag == Provenance::kDataAligned) {
            const Vec<D>& yk = Y[k.target];
            value -= R * yk + t;
            if (jac) {
              jac->template block<D, 1>(row, 0) = -dR * yk;
              jac->template block<D, D>(row, 1) = -Mat<D>::Identity();
            }
          } else {
            value -= X[k.target];
          }
          if (jac) {
            jac->template block<D, 1>(row, D + 1) =
                -2.0 * (dn * s + n * x.dot(dn));
            jac->template block<D, 1>(row, D + 2) = -2.0 * n;
          }
          break;
        }
        case Family::kReg: {
          const Vec<D>& y = Y[k.source];
          const Vec<D>& xk = X[k.target];
          value = R * y + t;
          if (k.target_tag == Provenance::kModelReflected) {
            const double s = xk.dot(n) + d;
            value -= xk - 2.0 * n * s;
            if (jac) {
              jac->template block<D, 1>(row, D + 1) =
                  2.0 * k.weight * (dn * s + n * xk.dot(dn));
              jac->template block<D, 1>(row, D + 2) = 2.0 * k.weight * n;
            }
          } else {
            value -= xk;
          }
          value *= k.weight;
          if (jac) {
            jac->template block<D, 1>(row, 0) = k.weight * (dR * y);
            jac->template block<D, D>(row, 1) =
                k.weight * Mat<D>::Identity();
          }
          break;
        }
        case Family::kSymData: {
          const Vec<D>& y = Y[k.source];
          const double s = y.dot(nl) + dl;
          value = y - 2.0 * nl * s;
          if (jac) {
            const double y_dnl = y.dot(dnl);
            jac->template block<D, 1>(row, 0) =
                2.0 * (dnl * s + nl * y_dnl);
            jac->template block<D, D>(row, 1) = -2.0 * nl * n.transpose();
            jac->template block<D, 1>(row, D + 1) =
                -2.0 * (dnl * s + nl * (y_dnl + t.dot(dn)));
            jac->template block<D, 1>(row, D + 2) = -2.0 * nl;
          }
          if (k.target_tag == Provenance::kModelAligned) {
            const Vec<D> rel = X[k.target] - t;
            value -= R.transpose() * rel;
            if (jac) {
              jac->template block<D, 1>(row, 0) -= dR.transpose() * rel;
              jac->template block<D, D>(row, 1) += R.transpose();
            }
          } else {
            value -= Y[k.target];
          }
          break;
        }
      }
      if (res) res->template segment<D>(row) = value;
    }
  }

 private:
  const JointObjective<D>* objective_;
  std::vector<Correspondence> corr_;
};

template <int D>
struct RefineResult {
  Hypothesis<D> hypothesis;
  double energy = 0.0;
  int iterations = 0;
};

/// Joint local ICP: alternate freezing matches/trim masks and one damped
/// Gauss-Newton step on all pose and plane parameters. The returned energy is
/// never above the energy at `start`.
template <int D>
RefineResult<D> refine(const Hypothesis<D>& start,
                       const JointObjective<D>& objective,
                       const IcpConfig& cfg = {}) {
  cfg.validate();
  constexpr int P = D + 3;
  using Normal = Eigen::Matrix<double, P, P>;
  using Gradient = Eigen::Matrix<double, P, 1>;

  RefineResult<D> best{start, objective.energy(start), 0};
  Hypothesis<D> current = start;
  double energy = best.energy;
  double lambda = cfg.damping;
  // Parameters that no active term depends on stay where they started.
  const Terms& terms = objective.terms();
  const bool pose_active = terms.reg || terms.sym_data;
  const bool plane_active = terms.sym_model || terms.sym_data;

  for (int it = 1; it <= cfg.max_iters && energy > 0.0; ++it) {
    best.iterations = it;
    const FrozenProblem<D> frozen(objective, current);
    const ParamVector<D> p = to_params(current);
    const Eigen::VectorXd r = frozen.residuals(p);
    auto J = frozen.jacobian(p);
    if (!pose_active) J.template leftCols<D + 1>().setZero();
    if (!plane_active) J.template rightCols<2>().setZero();
    const Normal H = J.transpose() * J;
    const Gradient g = J.transpose() * r;
    const double frozen_cost = r.squaredNorm();

    bool stepped = false;
    ParamVector<D> next = p;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Normal A = H;
      A.diagonal() += lambda * (H.diagonal().array() + 1e-12).matrix();
      const Gradient delta = A.ldlt().solve(-g);
      if (!delta.allFinite()) {
        lambda = std::max(lambda * 10.0, 1e-9);
        continue;
      }
      next = p + delta;
      if (frozen.cost(next) < frozen_cost) {
        stepped = true;
        lambda = std::max(lambda * 0.1, 1e-12);
        break;
      }
      lambda = std::max(lambda * 10.0, 1e-9);
    }
    if (!stepped) break;

    current = from_params<D>(next);
    const double fresh = objective.energy(current);
    if (fresh < best.energy) {
      best.hypothesis = current;
      best.energy = fresh;
    }
    const double decrease = (energy - fresh) / std::max(energy, 1e-300);
    energy = fresh;
    if (decrease < cfg.rel_tol) break;
  }
  return best;
}

template <int D>
RefineResult<D> refine(const Hypothesis<D>& start, const PointSet<D>& model,
                       const PointSet<D>& data, const TrimConfig& trim = {},
                       const Weights& w = {}, const IcpConfig& cfg = {}) {
  return refine(start, JointObjective<D>(model, data, trim, w), cfg);
}

}  // namespace symreg

#endif  // SYMREG_LOCAL_REFINE_HPP
