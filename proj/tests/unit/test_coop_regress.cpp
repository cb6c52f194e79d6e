#include "mvkit/coop_regress.hpp"
#include "mvkit/error.hpp"
#include "../common/lasso_oracle.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace mvkit;
using mvkit::test::gaussian_matrix;

namespace {

std::vector<Matrix> random_views(std::uint64_t seed, Index n, const std::vector<Index>& widths) {
  std::vector<Matrix> z;
  for (std::size_t m = 0; m < widths.size(); ++m) z.push_back(gaussian_matrix(derive_seed(seed, m), n, widths[m]));
  return standardize_views(z);
}

Vector centered(const Vector& y) { return y.array() - y.mean(); }

}  // namespace

TEST(CoopObjective, HandComputed) {
  // One unit, two views with one feature each: u1 = 2, u2 = -1, y = 3.
  const std::vector<Matrix> z{Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0)};
  const Vector y = Vector::Constant(1, 3.0);
  const std::vector<Vector> b{Vector::Constant(1, 2.0), Vector::Constant(1, -1.0)};
  // ½(3 − 1)² + (0.5·2 + 1·1) + (0.4/2)(2 − (−1))² = 2 + 2 + 1.8
  EXPECT_NEAR(coop_objective(z, y, b, {0.5, 1.0}, 0.4), 5.8, 1e-14);
}

TEST(CoopFit, OrthonormalDesignClosedForm) {
  const Matrix q = Eigen::HouseholderQR<Matrix>(gaussian_matrix(70, 40, 6)).householderQ() * Matrix::Identity(40, 6);
  const Vector y = gaussian_matrix(71, 40, 1).col(0) * 3.0;
  const double lambda = 1.2;
  const CoopModel m = coop_fit({q}, y, {lambda}, 0.0);
  const Vector qty = q.transpose() * centered(y);
  for (Index j = 0; j < 6; ++j) {
    const double s = std::abs(qty(j)) > lambda ? qty(j) - std::copysign(lambda, qty(j)) : 0.0;
    EXPECT_NEAR(m.betas[0](j), s, 1e-8);
  }
  EXPECT_DOUBLE_EQ(m.intercept, y.mean());
}

TEST(CoopFit, ZeroPenaltyIsLeastSquares) {
  const auto z = random_views(72, 50, {4, 3});
  const Vector y = gaussian_matrix(73, 50, 1).col(0);
  const CoopModel m = coop_fit(z, y, {0.0, 0.0}, 0.0);
  Matrix x(50, 7);
  x << z[0], z[1];
  const Vector ls = (x.transpose() * x).ldlt().solve(x.transpose() * centered(y));
  Vector got(7);
  got << m.betas[0], m.betas[1];
  EXPECT_LT((got - ls).cwiseAbs().maxCoeff(), 1e-7);
  // Residuals are orthogonal to every column.
  EXPECT_LT((x.transpose() * (y - predict(m, z))).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(CoopFit, RhoZeroMatchesConcatenatedLasso) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto z = random_views(derive_seed(74, seed), 60, {8, 5, 6});
    const Vector y = gaussian_matrix(derive_seed(75, seed), 60, 1).col(0) + z[0].col(0) - 2.0 * z[2].col(1);
    const std::vector<double> lambdas{4.0, 9.0, 2.5};
    const CoopModel m = coop_fit(z, y, lambdas, 0.0);
    Matrix x(60, 19);
    x << z[0], z[1], z[2];
    Vector w(19);
    w << Vector::Constant(8, 4.0), Vector::Constant(5, 9.0), Vector::Constant(6, 2.5);
    const Vector b = test::fista_lasso(x, centered(y), w);
    EXPECT_NEAR(m.objective, test::lasso_objective(x, centered(y), w, b), 1e-8) << "seed " << seed;
  }
}

TEST(CoopFit, KktHoldsOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CounterRng rng(derive_seed(76, seed));
    const Index n = 20 + static_cast<Index>(rng.below(60));
    const std::size_t views = 1 + rng.below(3);
    std::vector<Index> widths;
    for (std::size_t m = 0; m < views; ++m) widths.push_back(1 + static_cast<Index>(rng.below(20)));
    const auto z = random_views(derive_seed(77, seed), n, widths);
    const Vector y = gaussian_matrix(derive_seed(78, seed), n, 1).col(0);
    const double lmax = lambda_max(z, y);
    std::vector<double> lambdas;
    for (std::size_t m = 0; m < views; ++m) lambdas.push_back(lmax * (0.02 + 0.3 * rng.uniform01()));
    const double rho = 2.0 * rng.uniform01();
    const CoopModel model = coop_fit(z, y, lambdas, rho);
    EXPECT_TRUE(model.converged);
    EXPECT_LE(kkt_violation(z, y, model), 1e-6 * kkt_scale(z, y)) << "seed " << seed;
  }
}

TEST(SmoothGradient, MatchesCentralDifferences) {
  const auto z = random_views(79, 30, {3, 4});
  const Vector y = gaussian_matrix(80, 30, 1).col(0);
  const std::vector<Vector> b{gaussian_matrix(81, 3, 1).col(0), gaussian_matrix(82, 4, 1).col(0)};
  const double rho = 0.7;
  const auto g = smooth_gradient(z, y, b, rho);
  const double h = 1e-6;
  for (std::size_t m = 0; m < 2; ++m)
    for (Index j = 0; j < b[m].size(); ++j) {
      auto up = b, down = b;
      up[m](j) += h;
      down[m](j) -= h;
      const double fd = (coop_objective(z, y, up, {0.0, 0.0}, rho) - coop_objective(z, y, down, {0.0, 0.0}, rho)) / (2 * h);
      EXPECT_NEAR(g[m](j), fd, 1e-4 * std::max(1.0, std::abs(fd)));
    }
}

TEST(CoopFit, ObjectiveTraceIsMonotone) {
  const auto z = random_views(83, 40, {6, 6});
  const Vector y = gaussian_matrix(84, 40, 1).col(0);
  FitOptions o;
  o.record_trace = true;
  const CoopModel m = coop_fit(z, y, {1.0, 2.0}, 0.5, o);
  ASSERT_GE(m.objective_trace.size(), 2u);
  for (std::size_t i = 1; i < m.objective_trace.size(); ++i) {
    EXPECT_LE(m.objective_trace[i], m.objective_trace[i - 1] + 1e-12);
  }
}

TEST(CoopFit, LambdaMaxGivesZeroModel) {
  const auto z = random_views(85, 40, {5, 7});
  const Vector y = gaussian_matrix(86, 40, 1).col(0);
  const double lmax = lambda_max(z, y);
  const CoopModel m = coop_fit(z, y, {lmax, lmax}, 0.0);
  EXPECT_TRUE(m.betas[0].isZero(0.0));
  EXPECT_TRUE(m.betas[1].isZero(0.0));
  const CoopModel below = coop_fit(z, y, {0.99 * lmax, 0.99 * lmax}, 0.0);
  EXPECT_GT(below.betas[0].cwiseAbs().sum() + below.betas[1].cwiseAbs().sum(), 0.0);
}

TEST(CoopFit, IdenticalViewsAgreeAsRhoGrows) {
  const Matrix x = random_views(87, 50, {4})[0];
  const Vector y = x * (Vector(4) << 1, -1, 0.5, 0).finished() + 0.3 * gaussian_matrix(88, 50, 1).col(0);
  const Vector base = predict(coop_fit({x, x}, y, {0.0, 0.0}, 0.0), std::vector<Matrix>{x, x});
  double prev = INFINITY;
  for (double rho : {0.0, 1.0, 10.0, 100.0}) {
    const CoopModel m = coop_fit({x, x}, y, {0.0, 0.0}, rho);
    const double gap = (x * m.betas[0] - x * m.betas[1]).norm();
    EXPECT_LE(gap, prev + 1e-8);
    prev = gap;
    EXPECT_LT((predict(m, std::vector<Matrix>{x, x}) - base).cwiseAbs().maxCoeff(), 1e-6) << "rho " << rho;
  }
  EXPECT_LT(prev, 1e-6);
}

TEST(CoopFit, NotStandardizedWhenChecked) {
  std::vector<Matrix> z{gaussian_matrix(89, 30, 3) * 5.0};
  const Vector y = gaussian_matrix(90, 30, 1).col(0);
  FitOptions o;
  o.check_standardized = true;
  try {
    coop_fit(z, y, {0.1}, 0.0, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotStandardized);
  }
  EXPECT_NO_THROW(coop_fit(standardize_views(z), y, {0.1}, 0.0, o));
}

TEST(Predict, LinearInFeatures) {
  const auto z = random_views(91, 25, {3, 2});
  const Vector y = gaussian_matrix(92, 25, 1).col(0);
  const CoopModel m = coop_fit(z, y, {0.2, 0.2}, 0.3);
  const Vector all = predict(m, z);
  EXPECT_NEAR(predict(m, std::vector<Vector>{z[0].row(4).transpose(), z[1].row(4).transpose()}), all(4), 1e-12);
  EXPECT_NEAR(all(7), m.intercept + z[0].row(7).dot(m.betas[0]) + z[1].row(7).dot(m.betas[1]), 1e-12);
}

TEST(LambdaGrid, PathAndVectors) {
  const auto path = lambda_path(10.0, 5, 1e-2);
  ASSERT_EQ(path.size(), 5u);
  EXPECT_DOUBLE_EQ(path.front(), 10.0);
  EXPECT_NEAR(path.back(), 0.1, 1e-14);
  EXPECT_NEAR(path[1] / path[0], path[2] / path[1], 1e-12);
  EXPECT_EQ(lambda_vectors(path, 3, true).size(), 5u);
  EXPECT_EQ(lambda_vectors(path, 2, false).size(), 25u);
  try {
    lambda_path(1.0, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridEmpty);
  }
}

TEST(StratifiedFolds, BalancedAndDeterministic) {
  const Vector y = gaussian_matrix(93, 103, 1).col(0);
  const auto f = stratified_folds(y, 10, 4);
  std::vector<int> size(10, 0);
  for (auto v : f) ++size[v];
  EXPECT_LE(*std::max_element(size.begin(), size.end()) - *std::min_element(size.begin(), size.end()), 1);
  EXPECT_EQ(f, stratified_folds(y, 10, 4));
  EXPECT_NE(f, stratified_folds(y, 10, 5));
}

TEST(CrossValidate, NullResponseChoosesHeavyPenalty) {
  const auto z = random_views(94, 80, {5, 5});
  const Vector y = gaussian_matrix(95, 80, 1).col(0);
  CvOptions o;
  o.n_folds = 5;
  o.n_repeats = 2;
  const auto grid = lambda_vectors(lambda_path(lambda_max(z, y), 10, 1e-2), 2, true);
  const CvReport r = cross_validate(z, y, grid, {0.0}, o);
  // Nothing to find: the best model cannot beat predicting the mean by much.
  const double var = centered(y).squaredNorm() / 79.0;
  EXPECT_GT(r.best().mean_mse, 0.85 * var);
  EXPECT_GE(r.best().lambdas[0], grid[5][0]);
}

TEST(CrossValidate, PlantedSignalRecovered) {
  const auto z = random_views(96, 120, {6, 4});
  const Vector y = 2.0 * z[0].col(0) - z[1].col(2) + 0.5 * gaussian_matrix(97, 120, 1).col(0);
  CvOptions o;
  o.n_folds = 5;
  o.n_repeats = 2;
  o.threads = 2;
  const auto grid = lambda_vectors(lambda_path(lambda_max(z, y), 20, 1e-3), 2, true);
  const CvReport r = cross_validate(z, y, grid, {0.0, 0.5}, o);
  EXPECT_LT(r.best().mean_mse, 0.4);
  EXPECT_EQ(r.grid.size(), 40u);
  EXPECT_EQ(r.grid[r.best_for_rho(0.5)].rho, 0.5);
  o.threads = 1;
  const CvReport again = cross_validate(z, y, grid, {0.0, 0.5}, o);
  EXPECT_EQ(again.chosen, r.chosen);
  EXPECT_EQ(again.best().fold_mse, r.best().fold_mse);
}

TEST(CrossValidate, EmptyGrid) {
  const auto z = random_views(98, 30, {2});
  const Vector y = gaussian_matrix(99, 30, 1).col(0);
  try {
    cross_validate(z, y, {}, {0.0}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridEmpty);
  }
}

namespace {

AjiveResult fake_decomposition(Index r_joint, std::vector<Index> individual) {
  AjiveResult r;
  const Index n = 40;
  Index total = r_joint;
  for (Index c : individual) total += c;
  const Matrix q = Eigen::HouseholderQR<Matrix>(gaussian_matrix(100, n, total)).householderQ() * Matrix::Identity(n, total);
  r.joint_scores = q.leftCols(r_joint);
  r.joint_sigma = Vector::Ones(r_joint);
  Index offset = r_joint;
  for (std::size_t v = 0; v < individual.size(); ++v) {
    r.view_names.push_back("v" + std::to_string(v + 1));
    r.individual.push_back({q.middleCols(offset, individual[v]), Vector::Ones(individual[v]), Matrix()});
    offset += individual[v];
  }
  return r;
}

}  // namespace

TEST(FeatureAllocation, EqualSplitJointFirst) {
  const RegressionViews f = features_from_ajive(fake_decomposition(2, {20, 20}), 30);
  ASSERT_EQ(f.z.size(), 2u);
  EXPECT_EQ(f.z[0].cols(), 15);
  EXPECT_EQ(f.z[1].cols(), 15);
  EXPECT_EQ(f.column_names[0][0], "JC1");
  EXPECT_EQ(f.column_names[0][1], "JC2");
  EXPECT_EQ(f.column_names[0][2], "v1:IC1");
  EXPECT_EQ(f.column_names[1][0], "v2:IC1");
}

TEST(FeatureAllocation, SmallTotalUsesJointOnly) {
  const RegressionViews f = features_from_ajive(fake_decomposition(2, {1, 1}), 2);
  EXPECT_EQ(f.column_names[0], (std::vector<std::string>{"JC1"}));
  EXPECT_EQ(f.column_names[1], (std::vector<std::string>{"JC2"}));
}

TEST(FeatureAllocation, ShortfallMovesToOtherViews) {
  const RegressionViews f = features_from_ajive(fake_decomposition(1, {2, 20}), 20);
  EXPECT_EQ(f.z[0].cols() + f.z[1].cols(), 20);
  EXPECT_EQ(f.z[0].cols(), 3);
  try {
    features_from_ajive(fake_decomposition(1, {2, 2}), 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientComponents);
  }
}

TEST(FeatureAllocation, PcaCappedPerView) {
  std::vector<PcaResult> pcs(2);
  pcs[0].scores = gaussian_matrix(101, 30, 20);
  pcs[1].scores = gaussian_matrix(102, 30, 25);
  const RegressionViews f = features_from_pca({"a", "b"}, pcs, 30);
  EXPECT_EQ(f.z[0].cols(), 15);
  EXPECT_EQ(f.column_names[1].back(), "b:PC15");
  pcs[0].scores = gaussian_matrix(103, 30, 10);
  const RegressionViews g = features_from_pca({"a", "b"}, pcs, 30);
  EXPECT_EQ(g.z[0].cols(), 10);
  EXPECT_EQ(g.z[1].cols(), 20);
}
