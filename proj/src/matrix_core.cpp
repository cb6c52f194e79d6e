#include "mvkit/matrix_core.hpp"

#include "mvkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace mvkit {

namespace {

void require_unique(const std::vector<std::string>& names, const char* what) {
  std::unordered_set<std::string> seen;
  seen.reserve(names.size());
  for (const auto& n : names) {
    if (!seen.insert(n).second) fail(ErrorCode::InvalidData, std::string("duplicate ") + what + " '" + n + "'");
  }
}

}  // namespace

FeatureMatrix::FeatureMatrix(std::vector<std::string> unit_ids,
                             std::vector<std::string> feature_names, Matrix values)
    : unit_ids_(std::move(unit_ids)),
      feature_names_(std::move(feature_names)),
      values_(std::move(values)) {
  if (static_cast<Index>(unit_ids_.size()) != values_.rows() ||
      static_cast<Index>(feature_names_.size()) != values_.cols()) {
    fail(ErrorCode::ShapeMismatch, "feature matrix labels do not match a " +
                                       std::to_string(values_.rows()) + "x" +
                                       std::to_string(values_.cols()) + " value block");
  }
  if (values_.rows() < 2) fail(ErrorCode::InvalidData, "feature matrix needs at least 2 units");
  if (values_.cols() < 1) fail(ErrorCode::InvalidData, "feature matrix needs at least 1 feature");
  require_unique(unit_ids_, "unit id");
  require_unique(feature_names_, "feature name");
  if (!values_.allFinite()) fail(ErrorCode::InvalidData, "feature matrix contains non-finite values");
}

FeatureMatrix FeatureMatrix::with_values(Matrix values) const {
  return FeatureMatrix(unit_ids_, feature_names_, std::move(values));
}

FeatureMatrix FeatureMatrix::select_units(const std::vector<std::string>& ids) const {
  std::unordered_map<std::string, Index> row_of;
  row_of.reserve(unit_ids_.size());
  for (Index i = 0; i < rows(); ++i) row_of.emplace(unit_ids_[static_cast<std::size_t>(i)], i);
  Matrix out(static_cast<Index>(ids.size()), cols());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    auto it = row_of.find(ids[k]);
    if (it == row_of.end()) fail(ErrorCode::UnitMismatch, "unknown unit id '" + ids[k] + "'");
    out.row(static_cast<Index>(k)) = values_.row(it->second);
  }
  return FeatureMatrix(ids, feature_names_, std::move(out));
}

Matrix center_columns(const Matrix& m) {
  return m.rowwise() - m.colwise().mean();
}

FeatureMatrix center_columns(const FeatureMatrix& m) {
  return m.with_values(center_columns(m.values()));
}

FeatureMatrix standardize_columns(const FeatureMatrix& m) {
  Matrix centered = center_columns(m.values());
  const double denom = static_cast<double>(m.rows() - 1);
  for (Index j = 0; j < centered.cols(); ++j) {
    const double var = centered.col(j).squaredNorm() / denom;
    if (var < 1e-14) fail(ErrorCode::ConstantColumn, m.feature_names()[static_cast<std::size_t>(j)]);
    centered.col(j) /= std::sqrt(var);
  }
  return m.with_values(std::move(centered));
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) fail(ErrorCode::InvalidArgument, "quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) fail(ErrorCode::InvalidArgument, "quantile level outside [0, 1]");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> values, double q) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return quantile_sorted(sorted, q);
}

FeatureMatrix winsorize_columns(const FeatureMatrix& m, double lower_q, double upper_q) {
  if (!(lower_q >= 0.0 && lower_q < upper_q && upper_q <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "winsorize quantiles must satisfy 0 <= lower < upper <= 1");
  }
  Matrix out = m.values();
  std::vector<double> col(static_cast<std::size_t>(out.rows()));
  for (Index j = 0; j < out.cols(); ++j) {
    for (Index i = 0; i < out.rows(); ++i) col[static_cast<std::size_t>(i)] = out(i, j);
    std::sort(col.begin(), col.end());
    const double lo = quantile_sorted(col, lower_q);
    const double hi = quantile_sorted(col, upper_q);
    out.col(j) = out.col(j).cwiseMax(lo).cwiseMin(hi);
  }
  return m.with_values(std::move(out));
}

void apply_sign_convention(Matrix& u, Matrix& v) {
  for (Index k = 0; k < v.cols(); ++k) {
    Index best = 0;
    double best_abs = -1.0;
    for (Index i = 0; i < v.rows(); ++i) {
      const double a = std::abs(v(i, k));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (v.rows() > 0 && v(best, k) < 0.0) {
      v.col(k) = -v.col(k);
      if (k < u.cols()) u.col(k) = -u.col(k);
    }
  }
}

SvdFactors thin_svd(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) fail(ErrorCode::InvalidArgument, "SVD of an empty matrix");
  if (!m.allFinite()) fail(ErrorCode::NumericalFailure, "SVD input contains non-finite values");
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) fail(ErrorCode::NumericalFailure, "SVD did not converge");
  SvdFactors f{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  apply_sign_convention(f.u, f.v);
  return f;
}

SvdFactors truncate(const SvdFactors& full, Index r) {
  if (r < 0 || r > full.rank()) {
    fail(ErrorCode::RankTooLarge, "requested rank " + std::to_string(r) + " exceeds " +
                                      std::to_string(full.rank()));
  }
  if (r > 0) {
    const double tol = kRankTolerance * full.sigma(0);
    if (!(full.sigma(r - 1) > tol)) {
      fail(ErrorCode::NumericalFailure, "matrix has numerical rank below requested rank " +
                                            std::to_string(r));
    }
  }
  return SvdFactors{full.u.leftCols(r), full.sigma.head(r), full.v.leftCols(r)};
}

SvdFactors truncated_svd(const Matrix& m, Index r) {
  if (r < 1 || r > std::min(m.rows(), m.cols())) {
    fail(ErrorCode::RankTooLarge, "rank " + std::to_string(r) + " not in [1, min(n, p) = " +
                                      std::to_string(std::min(m.rows(), m.cols())) + "]");
  }
  return truncate(thin_svd(m), r);
}

SvdFactors truncated_svd(const FeatureMatrix& m, Index r) { return truncated_svd(m.values(), r); }

Vector singular_values(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return Vector();
  Eigen::BDCSVD<Matrix> svd(m);
  if (svd.info() != Eigen::Success) fail(ErrorCode::NumericalFailure, "SVD did not converge");
  return svd.singularValues();
}

Index numerical_rank(const Vector& sigma) {
  if (sigma.size() == 0 || sigma(0) <= 0.0) return 0;
  const double tol = kRankTolerance * sigma(0);
  Index r = 0;
  while (r < sigma.size() && sigma(r) > tol) ++r;
  return r;
}

double orthonormality_error(const Matrix& a) {
  if (a.cols() == 0) return 0.0;
  const Matrix g = a.transpose() * a - Matrix::Identity(a.cols(), a.cols());
  return g.cwiseAbs().maxCoeff();
}

}  // namespace mvkit
