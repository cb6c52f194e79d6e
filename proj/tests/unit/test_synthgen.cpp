#include "mvkit/error.hpp"
#include "mvkit/synthgen.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mvkit;

namespace {

SynthSpec small_spec(std::uint64_t seed) {
  SynthSpec s;
  s.n = 60;
  s.p = {8, 15};
  s.joint_rank = 2;
  s.individual_ranks = {1, 2};
  s.joint_strengths = {10.0, 7.0};
  s.individual_strengths = {13.0, 9.0};
  s.seed = seed;
  return s;
}

}  // namespace

TEST(Synthgen, NoiselessViewsHavePlantedRank) {
  SynthSpec s = small_spec(1);
  s.noise_sd = 0.0;
  const SynthTruth t = generate(s);
  EXPECT_EQ(numerical_rank(singular_values(t.views[0].data.values())), 3);
  EXPECT_EQ(numerical_rank(singular_values(t.views[1].data.values())), 4);
  const Vector sv = singular_values(t.views[1].data.values());
  EXPECT_NEAR(sv(0), 10.0, 1e-9);
  EXPECT_NEAR(sv(1), 9.0, 1e-9);
  EXPECT_NEAR(sv(2), 9.0 * 0.8, 1e-9);
  EXPECT_NEAR(sv(3), 7.0, 1e-9);
}

TEST(Synthgen, ScoreBasesAreOrthonormalAndSeparated) {
  const SynthTruth t = generate(small_spec(2));
  EXPECT_LT(orthonormality_error(t.joint_scores), 1e-12);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_LT(orthonormality_error(t.individual_scores[i]), 1e-12);
    EXPECT_LT((t.individual_scores[i].transpose() * t.joint_scores).cwiseAbs().maxCoeff(), 1e-12);
    const Matrix& x = t.views[i].data.values();
    EXPECT_LT((x - t.joint_blocks[i] - t.individual_blocks[i] - t.noise_blocks[i]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Synthgen, NoJointMeansIndividualScoresOnlyChanceCorrelated) {
  SynthSpec s = small_spec(3);
  s.n = 2000;
  s.joint_rank = 0;
  s.joint_strengths = {};
  s.individual_ranks = {1, 1};
  const SynthTruth t = generate(s);
  // Independent directions in R^n: correlation ~ N(0, 1/n).
  EXPECT_LT(std::abs(pearson(t.individual_scores[0].col(0), t.individual_scores[1].col(0))), 4.0 / std::sqrt(2000.0));
}

TEST(Synthgen, NoiseEnergyMatchesSd) {
  SynthSpec s = small_spec(4);
  s.n = 500;
  s.p = {40, 60};
  s.noise_sd = 2.0;
  const SynthTruth t = generate(s);
  for (std::size_t i = 0; i < 2; ++i) {
    const double cells = static_cast<double>(t.noise_blocks[i].size());
    EXPECT_NEAR(t.noise_blocks[i].squaredNorm() / cells, 4.0, 4.0 * 5.0 * std::sqrt(2.0 / cells));
  }
}

TEST(Synthgen, SeedDeterminesOutput) {
  EXPECT_EQ(generate(small_spec(5)).views[1].data.values(), generate(small_spec(5)).views[1].data.values());
  EXPECT_NE(generate(small_spec(5)).views[1].data.values(), generate(small_spec(6)).views[1].data.values());
}

TEST(Synthgen, SnrRoundTrip) {
  const SynthSpec s = paper_shaped_spec(0, 10.0);
  EXPECT_NEAR(snr_of(s, 1), 10.0, 1e-12);
  EXPECT_NEAR(s.joint_strengths[0], 10.0 * std::sqrt(1536.0), 1e-9);
  EXPECT_EQ(three_view_spec(0).p, (std::vector<Index>{20, 1536, 31}));
  EXPECT_EQ(three_view_spec(0).n, 381);
}

TEST(Synthgen, ResponseFollowsJointScores) {
  SynthSpec s = small_spec(7);
  s.n = 400;
  s.response = ResponseSpec{{1.0, -0.5}, 0.0};
  const SynthTruth t = generate(s);
  ASSERT_TRUE(t.response.has_value());
  const Vector expected = std::sqrt(400.0) * (t.joint_scores * t.response_weights);
  EXPECT_LT((*t.response - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Synthgen, InfeasibleSpecs) {
  SynthSpec s = small_spec(8);
  s.individual_ranks = {7, 1};
  EXPECT_THROW(generate(s), Error);
  s = small_spec(8);
  s.joint_strengths = {1.0};
  EXPECT_THROW(generate(s), Error);
  s = small_spec(8);
  s.response = ResponseSpec{{1.0}, 1.0};
  EXPECT_THROW(generate(s), Error);
}

TEST(PrincipalAngles, KnownAngle) {
  Matrix a = Matrix::Zero(3, 1);
  a(0, 0) = 1.0;
  Matrix b(3, 1);
  b << std::cos(0.3), std::sin(0.3), 0.0;
  const auto ang = principal_angles(a, b);
  ASSERT_EQ(ang.size(), 1u);
  EXPECT_NEAR(ang[0], 0.3, 1e-12);
  EXPECT_NEAR(principal_angles(orthonormalize(test::gaussian_matrix(9, 10, 3)),
                               orthonormalize(test::gaussian_matrix(9, 10, 3) * test::gaussian_matrix(10, 3, 3)))
                  .back(),
              0.0, 1e-6);
  EXPECT_THROW(principal_angles(test::gaussian_matrix(11, 5, 2), a), Error);
}
