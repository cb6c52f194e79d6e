#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace mvkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Singular values at or below this fraction of the largest one count as zero.
inline constexpr double kRankTolerance = 1e-10;

/// An n x p block of observations: one row per unit, one column per feature.
/// Construction validates shape, uniqueness of ids/names and finiteness, so
/// every live FeatureMatrix satisfies its invariants.
class FeatureMatrix {
 public:
  FeatureMatrix(std::vector<std::string> unit_ids, std::vector<std::string> feature_names,
                Matrix values);

  const std::vector<std::string>& unit_ids() const { return unit_ids_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const Matrix& values() const { return values_; }

  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }

  /// Same ids and names, new values of identical shape.
  FeatureMatrix with_values(Matrix values) const;
  /// Rows for the given unit ids, in that order. Throws UnitMismatch on unknown ids.
  FeatureMatrix select_units(const std::vector<std::string>& ids) const;

 private:
  std::vector<std::string> unit_ids_;
  std::vector<std::string> feature_names_;
  Matrix values_;
};

/// Truncated SVD factors with a fixed sign convention: in every column of v
/// the entry of largest magnitude (lowest row on ties) is nonnegative, and the
/// matching column of u is flipped with it.
struct SvdFactors {
  Matrix u;
  Vector sigma;
  Matrix v;

  Index rank() const { return sigma.size(); }
  Matrix reconstruct() const { return u * sigma.asDiagonal() * v.transpose(); }
};

FeatureMatrix center_columns(const FeatureMatrix& m);
Matrix center_columns(const Matrix& m);

/// Mean 0, sample variance 1 (divisor n-1). Throws ConstantColumn when a
/// column's variance is below 1e-14.
FeatureMatrix standardize_columns(const FeatureMatrix& m);

/// Clamps each column to its [lower_q, upper_q] empirical quantiles.
FeatureMatrix winsorize_columns(const FeatureMatrix& m, double lower_q, double upper_q);

/// Empirical quantile by linear interpolation between order statistics at
/// zero-based position q*(n-1).
double quantile(std::span<const double> values, double q);
double quantile_sorted(std::span<const double> sorted, double q);

/// Full thin SVD (min(n,p) components), sign-normalised.
SvdFactors thin_svd(const Matrix& m);
/// Rank-r truncation. Throws RankTooLarge if r > min(n, p) and
/// NumericalFailure if the r-th singular value is numerically zero.
SvdFactors truncated_svd(const Matrix& m, Index r);
SvdFactors truncated_svd(const FeatureMatrix& m, Index r);
/// First r components of an existing decomposition.
SvdFactors truncate(const SvdFactors& full, Index r);

Vector singular_values(const Matrix& m);
/// Number of singular values above kRankTolerance * sigma_max.
Index numerical_rank(const Vector& sigma);

void apply_sign_convention(Matrix& u, Matrix& v);

/// max |aᵀa - I|
double orthonormality_error(const Matrix& a);

}  // namespace mvkit
