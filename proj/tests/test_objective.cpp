#include "symreg/objective.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

namespace symreg {
namespace {

using testing::brute_energy;
using testing::random_hypothesis;
using testing::random_set;

TEST(Trim, RatioOneKeepsEverything) {
  const std::vector<double> r{0.3, 0.1, 0.2};
  const auto t = trim(r, TrimConfig{1.0});
  EXPECT_EQ(t.kept, (std::vector<bool>{true, true, true}));
  EXPECT_NEAR(t.sum_of_squares, 0.14, 1e-15);
}

TEST(Trim, KeepsTwoSmallestOfThree) {
  const std::vector<double> r{3.0, 1.0, 2.0};
  const auto t = trim(r, TrimConfig{0.7});
  EXPECT_EQ(t.kept, (std::vector<bool>{false, true, true}));
  EXPECT_DOUBLE_EQ(t.sum_of_squares, 5.0);
}

TEST(Trim, TiesGoToLowerIndex) {
  const std::vector<double> r{1.0, 1.0, 1.0, 0.0};
  const auto t = trim(r, TrimConfig{0.5});
  EXPECT_EQ(t.kept, (std::vector<bool>{true, false, false, true}));
}

TEST(Trim, CountIsFloorWithMinimumOne) {
  EXPECT_EQ(trimmed_count(0, 0.7), 0u);
  EXPECT_EQ(trimmed_count(1, 0.7), 1u);
  EXPECT_EQ(trimmed_count(10, 0.7), 7u);
  EXPECT_EQ(trimmed_count(30, 0.7), 21u);
  EXPECT_EQ(trimmed_count(99, 0.7), 69u);
}

TEST(Trim, MatchesSortOracle) {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> r(200);
    for (auto& v : r) v = testing::uniform(rng, 0.0, 1.0);
    EXPECT_NEAR(trim(r, TrimConfig{0.7}).sum_of_squares,
                testing::brute_trim(r, 0.7), 1e-12);
  }
}

TEST(Trim, RejectsBadRatio) {
  EXPECT_THROW(TrimConfig{0.0}.validate(), std::invalid_argument);
  EXPECT_THROW(TrimConfig{1.5}.validate(), std::invalid_argument);
}

/// Mirror-symmetric set about the plane (alpha, d).
PointSet<2> symmetric_set(std::mt19937_64& rng, const SymmetryPlane<2>& p,
                          std::size_t half) {
  std::vector<Vec<2>> pts;
  for (std::size_t i = 0; i < half; ++i) {
    const Vec<2> x = testing::random_vec<2>(rng, 0.5);
    pts.push_back(x);
    pts.push_back(p.reflect(x));
  }
  return PointSet<2>(std::move(pts));
}

TEST(Objective, ExactHypothesisOnSymmetricCopyHasZeroEnergy) {
  std::mt19937_64 rng(9);
  const SymmetryPlane<2> plane(0.3, 0.1);
  const PointSet<2> model = symmetric_set(rng, plane, 20);
  const Pose<2> pose(0.8, Vec<2>(0.1, -0.2));
  std::vector<Vec<2>> data;
  for (const auto& x : model) data.push_back(pose.apply_inverse(x));
  const Hypothesis<2> h{pose, plane};
  const auto b = evaluate(h, model, PointSet<2>(data));
  EXPECT_NEAR(b.trimmed_energy, 0.0, 1e-20);
  for (double r : b.sym_model) EXPECT_NEAR(r, 0.0, 1e-12);
  for (double r : b.reg) EXPECT_NEAR(r, 0.0, 1e-12);
  for (double r : b.sym_data) EXPECT_NEAR(r, 0.0, 1e-12);
}

TEST(Objective, SinglePointInstanceByHand) {
  // X = {(0.3, 0)}, Y = {(0, 0)}, identity pose, plane x = 0.
  // sym_model: X^s = (-0.3, 0) against {X, Y^r} -> 0.3.
  // reg: Y^r = (0, 0) against {X, X^s} -> 0.3.
  // sym_data: Y mirrored = (0, 0) against {X^r, Y} -> 0.
  const PointSet<2> model{Vec<2>(0.3, 0.0)};
  const PointSet<2> data{Vec<2>(0.0, 0.0)};
  const Hypothesis<2> h{Pose<2>::identity(), SymmetryPlane<2>(0.0, 0.0)};
  const auto b = evaluate(h, model, data);
  ASSERT_EQ(b.sym_model.size(), 1u);
  EXPECT_NEAR(b.sym_model[0], 0.3, 1e-15);
  EXPECT_NEAR(b.reg[0], 0.3, 1e-15);
  EXPECT_NEAR(b.sym_data[0], 0.0, 1e-15);
  EXPECT_NEAR(b.trimmed_energy, 0.18, 1e-15);
}

TEST(Objective, SymModelResidualIsMirrorDistance) {
  const PointSet<2> model{Vec<2>(0.3, 0.0)};
  const PointSet<2> data{Vec<2>(5.0, 5.0)};
  const Hypothesis<2> h{Pose<2>::identity(), SymmetryPlane<2>(0.0, -0.05)};
  // Mirror of 0.3 across x = 0.05 is -0.2, at distance 0.5 from x.
  EXPECT_NEAR(evaluate(h, model, data).sym_model[0], 0.5, 1e-15);
}

TEST(Objective, ReflectedWeightScalesMirrorMatches) {
  // Y^r lands 0.2 from X^s and far from X.
  const PointSet<2> model{Vec<2>(0.5, 0.0)};
  const PointSet<2> data{Vec<2>(-0.3, 0.0)};
  const Hypothesis<2> h{Pose<2>::identity(), SymmetryPlane<2>(0.0, 0.0)};
  const JointObjective<2> obj(model, data, TrimConfig{}, Weights{1.0, 0.5});
  const auto m = obj.match(h);
  EXPECT_EQ(m.reg[0].tag, Provenance::kModelReflected);
  EXPECT_NEAR(m.reg[0].residual, 0.1, 1e-15);
}

TEST(Objective, RegistrationOnlyIgnoresMirror) {
  const PointSet<2> model{Vec<2>(0.5, 0.0)};
  const PointSet<2> data{Vec<2>(-0.3, 0.0)};
  const Hypothesis<2> h{Pose<2>::identity(), SymmetryPlane<2>(0.0, 0.0)};
  const JointObjective<2> obj(model, data, TrimConfig{}, Weights{},
                              Terms::registration_only());
  const auto b = obj.evaluate(h);
  EXPECT_TRUE(b.sym_model.empty());
  EXPECT_TRUE(b.sym_data.empty());
  EXPECT_NEAR(b.reg[0], 0.8, 1e-15);
  EXPECT_EQ(obj.residual_count(), 1u);
}

TEST(Objective, ResidualCountIsMPlusTwoN) {
  std::mt19937_64 rng(10);
  const JointObjective<2> obj(random_set<2>(rng, 7), random_set<2>(rng, 5));
  EXPECT_EQ(obj.residual_count(), 17u);
}

TEST(Objective, RejectsEmptySets) {
  EXPECT_THROW(JointObjective<2>(PointSet<2>{}, PointSet<2>{Vec<2>(0, 0)}),
               std::invalid_argument);
}

template <int D>
void check_against_linear_scan(std::uint64_t seed, std::size_t m,
                               std::size_t n) {
  std::mt19937_64 rng(seed);
  for (int rep = 0; rep < 20; ++rep) {
    const auto model = random_set<D>(rng, m);
    const auto data = random_set<D>(rng, n);
    const auto h = random_hypothesis<D>(rng);
    ASSERT_NEAR(evaluate(h, model, data).trimmed_energy,
                brute_energy(h, model, data), 1e-10);
  }
}

TEST(Objective, MatchesLinearScanOracle2D) {
  check_against_linear_scan<2>(31, 100, 100);
}
TEST(Objective, MatchesLinearScanOracle3D) {
  check_against_linear_scan<3>(32, 60, 80);
}
TEST(Objective, MatchesLinearScanOracleUnbalanced) {
  check_against_linear_scan<2>(33, 13, 50);
}

// The per-point helpers over an explicit union index agree with the
// objective's two-tree matching.
TEST(Objective, ResidualHelpersAgreeWithMatching) {
  std::mt19937_64 rng(34);
  const auto model = random_set<2>(rng, 50);
  const auto data = random_set<2>(rng, 40);
  const auto h = random_hypothesis<2>(rng);
  const JointObjective<2> obj(model, data);
  const auto b = obj.evaluate(h);

  std::vector<Vec<2>> yr, xs, xr;
  for (const auto& y : data) yr.push_back(h.pose.apply(y));
  for (const auto& x : model) xs.push_back(h.plane.reflect(x));
  for (const auto& x : model) xr.push_back(h.pose.apply_inverse(x));
  const auto idx_sm = NeighborIndex<2>::from_sets(
      model.points(), Provenance::kModel, yr, Provenance::kDataAligned);
  const auto idx_reg = NeighborIndex<2>::from_sets(
      model.points(), Provenance::kModel, xs, Provenance::kModelReflected);
  const auto idx_sd = NeighborIndex<2>::from_sets(
      xr, Provenance::kModelAligned, data.points(), Provenance::kData);

  for (std::size_t i = 0; i < model.size(); ++i) {
    EXPECT_NEAR(residual_sym_model(h.plane, model[i], idx_sm), b.sym_model[i],
                1e-12);
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_NEAR(residual_reg(h.pose, data[i], idx_reg, Weights{}), b.reg[i],
                1e-12);
    EXPECT_NEAR(residual_sym_data(h, data[i], idx_sd), b.sym_data[i], 1e-12);
  }
}

// sym_data equals sym_model evaluated with the roles of the sets swapped and
// the plane transported into the data frame.
TEST(Objective, SymDataIsSymModelInDataFrame) {
  std::mt19937_64 rng(35);
  for (int rep = 0; rep < 20; ++rep) {
    const auto model = random_set<2>(rng, 30);
    const auto data = random_set<2>(rng, 30);
    const auto h = random_hypothesis<2>(rng);
    const auto direct = evaluate(h, model, data);
    const Pose<2> inverse(-h.pose.angle(),
                          -(h.pose.rotation().transpose() * h.pose.translation()));
    const Hypothesis<2> swapped{inverse, transform_plane(h.pose, h.plane)};
    const auto mirrored = evaluate(swapped, data, model);
    for (std::size_t i = 0; i < data.size(); ++i) {
      ASSERT_NEAR(direct.sym_data[i], mirrored.sym_model[i], 1e-12);
    }
  }
}

}  // namespace
}  // namespace symreg
