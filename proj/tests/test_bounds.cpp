#include "symreg/bounds.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

namespace symreg {
namespace {

using testing::brute_nearest;
using testing::random_set;
using testing::uniform;

struct Box {
  AngleInterval outer;
  TranslationDepthInterval<2> inner;
};

Box random_box(std::mt19937_64& rng) {
  const double scale = std::pow(2.0, -uniform(rng, 0.0, 8.0));
  const Eigen::Vector2d oc(uniform(rng, -kPi, kPi), uniform(rng, -kPi / 2, kPi / 2));
  const Eigen::Vector2d ow(kPi * scale * uniform(rng, 0.2, 1.0),
                           kPi / 2 * scale * uniform(rng, 0.2, 1.0));
  Eigen::Vector3d ic, iw;
  for (int k = 0; k < 3; ++k) {
    ic(k) = uniform(rng, -0.4, 0.4);
    iw(k) = 0.5 * scale * uniform(rng, 0.2, 1.0);
  }
  return {AngleInterval(oc, ow), TranslationDepthInterval<2>(ic, iw)};
}

Hypothesis<2> sample_in(std::mt19937_64& rng, const Box& b) {
  auto pick = [&](double c, double w) { return c + uniform(rng, -w, w); };
  const auto& oc = b.outer.center();
  const auto& ow = b.outer.half_width();
  const auto& ic = b.inner.center();
  const auto& iw = b.inner.half_width();
  return {Pose<2>(pick(oc(0), ow(0)), Vec<2>(pick(ic(0), iw(0)), pick(ic(1), iw(1)))),
          SymmetryPlane<2>(pick(oc(1), ow(1)), pick(ic(2), iw(2)))};
}

TEST(PointBounds, ZeroRadiiReturnCenterResidual) {
  const UncertaintyRadii zero;
  EXPECT_DOUBLE_EQ(lower_reg(0.3, 0.7, zero, 1.0), 0.3);
  EXPECT_DOUBLE_EQ(lower_sym_model(0.3, 0.7, 0.2, zero), 0.3);
  EXPECT_DOUBLE_EQ(lower_sym_data(0.3, 0.7, 0.2, 0.4, zero), 0.3);
}

TEST(PointBounds, ClampAtZero) {
  UncertaintyRadii g;
  g.rotation = 0.2;
  g.translation = 0.1;  // 0.2 * 1 + 0.1 = 0.3 > 0.1
  EXPECT_DOUBLE_EQ(lower_reg(0.1, 1.0, g, 1.0), 0.0);
  g.normal = 0.5;
  EXPECT_DOUBLE_EQ(lower_sym_model(0.1, 1.0, 0.0, g), 0.0);
  EXPECT_DOUBLE_EQ(lower_sym_data(0.1, 1.0, 0.0, 0.0, g), 0.0);
}

// Dense sampling oracle for the per-point bounds, each against the fixed set
// of its union (X, X, Y) so that only the query moves.
TEST(PointBounds, NeverExceedSampledResidual) {
  std::mt19937_64 rng(51);
  const auto X = random_set<2>(rng, 30).points();
  const auto Y = random_set<2>(rng, 30).points();
  for (int rep = 0; rep < 300; ++rep) {
    const Box b = random_box(rng);
    const auto h0 = center_hypothesis<2>(b.outer, b.inner);
    const auto g = radii<2>(b.outer, b.inner);
    const Vec<2>& t0 = h0.pose.translation();
    const Vec<2> n0 = h0.plane.normal();
    const double d0 = h0.plane.depth();
    const auto local0 = transform_plane(h0.pose, h0.plane);
    const Vec<2>& x = X[rep % X.size()];
    const Vec<2>& y = Y[rep % Y.size()];
    const double lr = lower_reg(brute_nearest<2>(X, h0.pose.apply(y)), y, g, 1.0);
    const double lsm = lower_sym_model(brute_nearest<2>(X, h0.plane.reflect(x)), x, d0, g);
    const double lsd = lower_sym_data(brute_nearest<2>(Y, local0.reflect(y)), y, t0, n0, d0, g);
    for (int s = 0; s < 200; ++s) {
      const auto h = sample_in(rng, b);
      const auto local = transform_plane(h.pose, h.plane);
      ASSERT_LE(lr, brute_nearest<2>(X, h.pose.apply(y)) + 1e-12);
      ASSERT_LE(lsm, brute_nearest<2>(X, h.plane.reflect(x)) + 1e-12);
      ASSERT_LE(lsd, brute_nearest<2>(Y, local.reflect(y)) + 1e-12);
    }
  }
}

TEST(IntervalBounds, ZeroWidthIsExact) {
  std::mt19937_64 rng(52);
  const auto X = random_set<2>(rng, 40);
  const auto Y = random_set<2>(rng, 40);
  const AngleInterval outer(Eigen::Vector2d(0.3, -0.2), Eigen::Vector2d::Zero());
  const TranslationDepthInterval<2> inner(Eigen::Vector3d(0.1, 0.0, 0.05),
                                          Eigen::Vector3d::Zero());
  const auto bp = interval_bounds<2>(outer, inner, X, Y);
  const double e = upper_energy(center_hypothesis<2>(outer, inner), X, Y);
  EXPECT_EQ(bp.upper, e);
  EXPECT_EQ(bp.lower, e);
}

TEST(IntervalBounds, FullDomainLowerIsZero) {
  std::mt19937_64 rng(53);
  const auto bp = interval_bounds<2>(full_angle_domain(),
                                     full_translation_depth_domain<2>(0.5),
                                     random_set<2>(rng, 40), random_set<2>(rng, 40));
  EXPECT_EQ(bp.lower, 0.0);
}

// Property: lower <= sampled energy and upper == centre energy, bit for bit.
template <int D>
void check_soundness(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int rep = 0; rep < 40; ++rep) {
    const auto X = random_set<2>(rng, 30 + rep % 20);
    const auto Y = random_set<2>(rng, 30 + rep % 17);
    const JointObjective<2> obj(X, Y);
    const Box b = random_box(rng);
    const auto bp = interval_bounds<2>(obj, b.outer, b.inner);
    ASSERT_EQ(bp.upper, obj.energy(center_hypothesis<2>(b.outer, b.inner)));
    for (int s = 0; s < 200; ++s) {
      ASSERT_LE(bp.lower, obj.energy(sample_in(rng, b)) + 1e-12);
    }
  }
}

TEST(IntervalBounds, LowerNeverExceedsSampledEnergy) { check_soundness<2>(54); }

TEST(IntervalBounds, SoundAroundGroundTruth) {
  // Y is X moved by a known pose; boxes around the truth must allow zero.
  std::mt19937_64 rng(55);
  const SymmetryPlane<2> plane(0.2, 0.05);
  std::vector<Vec<2>> xs;
  for (int i = 0; i < 20; ++i) {
    const Vec<2> p = testing::random_vec<2>(rng, 0.4);
    xs.push_back(p);
    xs.push_back(plane.reflect(p));
  }
  const Pose<2> pose(0.6, Vec<2>(0.1, 0.1));
  std::vector<Vec<2>> ys;
  for (const auto& x : xs) ys.push_back(pose.apply_inverse(x));
  const JointObjective<2> obj{PointSet<2>(xs), PointSet<2>(ys)};
  const AngleInterval outer(Eigen::Vector2d(0.61, 0.19), Eigen::Vector2d(0.05, 0.05));
  const TranslationDepthInterval<2> inner(Eigen::Vector3d(0.11, 0.09, 0.06),
                                          Eigen::Vector3d::Constant(0.02));
  EXPECT_NEAR(interval_bounds<2>(obj, outer, inner).lower, 0.0, 1e-12);
}

}  // namespace
}  // namespace symreg
