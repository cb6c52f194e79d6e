#include "mvkit/error.hpp"
#include "mvkit/rank_select.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace mvkit;

namespace {

std::span<const double> span_of(const std::vector<double>& v) { return {v.data(), v.size()}; }

}  // namespace

TEST(Scree, DiagonalMatrix) {
  const Matrix d = Eigen::Vector3d(3, 2, 1).asDiagonal();
  const ScreeData s = scree(d);
  EXPECT_NEAR(s.singular_values(0), 3.0, 1e-14);
  EXPECT_NEAR(s.singular_values(2), 1.0, 1e-14);
  ASSERT_EQ(s.gaps.size(), 2);
  EXPECT_NEAR(s.gaps(0), 1.0, 1e-14);
  EXPECT_NEAR(s.gaps(1), 1.0, 1e-14);
}

TEST(Scree, DropsNumericalZeros) {
  const Matrix a = test::gaussian_matrix(40, 10, 2);
  const Matrix b = test::gaussian_matrix(41, 6, 2);
  EXPECT_EQ(scree(Matrix(a * b.transpose())).singular_values.size(), 2);
}

TEST(SuggestInitialRank, LargestRelativeDrop) {
  const Vector sv = (Vector(5) << 10, 9.5, 9, 2, 1.9).finished();
  EXPECT_EQ(suggest_initial_rank(scree_from_values(sv), 4), 3);
  // (10-9.5)/10 = 0.05 < (9.5-9)/9.5
  EXPECT_EQ(suggest_initial_rank(scree_from_values(sv), 2), 2);
}

TEST(SuggestInitialRank, GeometricDecayTiesGoToOne) {
  Vector sv(6);
  for (Index k = 0; k < 6; ++k) sv(k) = std::pow(0.5, static_cast<double>(k));
  EXPECT_EQ(suggest_initial_rank(scree_from_values(sv), 5), 1);
}

TEST(RandomDirectionBound, SingleSampleIsThatSample) {
  RandomDirectionBoundOptions o;
  o.n_samples = 1;
  const RandomDirectionBound b = random_direction_bound(50, {2, 3}, 9, o);
  const Vector sv = singular_values(random_direction_sample(50, {2, 3}, 9, 0));
  EXPECT_DOUBLE_EQ(b.threshold, sv(0));
  ASSERT_EQ(b.per_index_thresholds.size(), 5u);
  for (Index i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(b.per_index_thresholds[static_cast<std::size_t>(i)], sv(i));
}

TEST(RandomDirectionBound, SamplesAreCenteredOrthonormalBlocks) {
  const Matrix m = random_direction_sample(30, {2, 3}, 4, 7);
  EXPECT_LT(orthonormality_error(m.leftCols(2)), 1e-12);
  EXPECT_LT(orthonormality_error(m.rightCols(3)), 1e-12);
  EXPECT_LT(m.colwise().sum().cwiseAbs().maxCoeff(), 1e-12);
  // Stacked orthonormal blocks: k blocks bound every singular value by sqrt(k).
  EXPECT_LE(singular_values(m)(0), std::sqrt(2.0) + 1e-12);
}

TEST(RandomDirectionBound, DeterministicAndThreadInvariant) {
  RandomDirectionBoundOptions o;
  o.n_samples = 64;
  const RandomDirectionBound a = random_direction_bound(40, {3, 3}, 17, o);
  o.threads = 4;
  const RandomDirectionBound b = random_direction_bound(40, {3, 3}, 17, o);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.threshold, b.threshold);
  const RandomDirectionBound c = random_direction_bound(40, {3, 3}, 18, o);
  EXPECT_NE(a.samples, c.samples);
}

TEST(RandomDirectionBound, ThresholdStableAcrossSeeds) {
  RandomDirectionBoundOptions o;
  o.n_samples = 1000;
  o.threads = 2;
  RandomDirectionBoundOptions big = o;
  big.n_samples = 20000;
  const double reference = random_direction_bound(100, {3, 3}, 1000, big).threshold;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    EXPECT_NEAR(random_direction_bound(100, {3, 3}, seed, o).threshold, reference, 0.02 * reference);
  }
}

TEST(RandomDirectionBound, Errors) {
  RandomDirectionBoundOptions o;
  o.n_samples = 0;
  EXPECT_THROW(random_direction_bound(10, {2}, 0, o), Error);
  try {
    random_direction_bound(5, {3, 3}, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RankTooLarge);
  }
}

TEST(JointRank, CountsStrictlyAbove) {
  const std::vector<double> sv{2.0, 1.6, 1.1};
  EXPECT_EQ(joint_rank(span_of(sv), 1.4), 2);
  EXPECT_EQ(joint_rank(span_of(sv), 1.6), 1);
  EXPECT_EQ(joint_rank(span_of(sv), 5.0), 0);
}

TEST(JointRank, IdenticalScoresGiveSqrtTwo) {
  const Matrix u = test::gaussian_matrix(42, 20, 1).normalized();
  Matrix m(20, 2);
  m << u, u;
  const Vector sv = singular_values(m);
  EXPECT_NEAR(sv(0), std::sqrt(2.0), 1e-12);
  const std::vector<double> s{sv(0), sv(1)};
  EXPECT_EQ(joint_rank(span_of(s), 1.2), 1);
}

TEST(JointRank, MonotoneInThreshold) {
  const std::vector<double> sv{1.9, 1.5, 1.3, 1.0, 0.4};
  Index prev = joint_rank(span_of(sv), 0.0);
  for (double t = 0.05; t < 2.0; t += 0.05) {
    const Index r = joint_rank(span_of(sv), t);
    EXPECT_LE(r, prev);
    prev = r;
  }
}

TEST(JointRank, PerIndexStopsAtFirstFailure) {
  RandomDirectionBound b;
  b.threshold = 1.0;
  b.per_index_thresholds = {1.5, 1.2, 0.5};
  const std::vector<double> sv{1.6, 1.1, 1.05};
  EXPECT_EQ(joint_rank(span_of(sv), b, JointRankMode::PerIndex), 1);
  EXPECT_EQ(joint_rank(span_of(sv), b, JointRankMode::MaxBound), 3);
}

TEST(NuThreshold, MidpointAndEnd) {
  const Vector sv = (Vector(3) << 5.0, 3.0, 1.0).finished();
  EXPECT_DOUBLE_EQ(nu_threshold(sv, 1), 4.0);
  EXPECT_DOUBLE_EQ(nu_threshold(sv, 3), 0.5);
  EXPECT_THROW(nu_threshold(sv, 4), Error);
}

TEST(IndividualRank, CountsAtOrAboveNu) {
  const std::vector<double> sv{5.0, 0.4};
  EXPECT_EQ(individual_rank(span_of(sv), 2.0), 1);
  EXPECT_EQ(individual_rank(span_of(sv), 5.0), 1);
  EXPECT_EQ(individual_rank(span_of(sv), 0.1), 2);
  EXPECT_THROW(individual_rank(span_of(sv), 0.0), Error);
}
