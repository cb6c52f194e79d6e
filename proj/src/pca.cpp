#include "mvkit/pca.hpp"

#include "mvkit/error.hpp"

#include <algorithm>
#include <cmath>

namespace mvkit {

PcaResult pca(const FeatureMatrix& m, Index r) {
  if (r < 1 || r > std::min(m.rows(), m.cols())) {
    fail(ErrorCode::RankTooLarge, "PCA rank " + std::to_string(r) + " not in [1, " +
                                      std::to_string(std::min(m.rows(), m.cols())) + "]");
  }
  const Matrix centered = center_columns(m.values());
  const SvdFactors full = thin_svd(centered);
  const SvdFactors f = truncate(full, r);
  const double total = full.sigma.squaredNorm();
  PcaResult out;
  out.unit_ids = m.unit_ids();
  out.feature_names = m.feature_names();
  out.scores = f.u;
  out.loadings = f.v;
  out.sigma = f.sigma;
  out.var_explained = f.sigma.array().square() / total;
  return out;
}

FeatureMatrix concat_views(const std::vector<View>& views) {
  if (views.empty()) fail(ErrorCode::InvalidArgument, "no views to concatenate");
  const auto& ids = views.front().data.unit_ids();
  Index total = 0;
  std::vector<std::string> names;
  for (const auto& v : views) {
    if (v.data.unit_ids() != ids) {
      std::string offending;
      const auto& other = v.data.unit_ids();
      const std::size_t n = std::max(ids.size(), other.size());
      int listed = 0;
      for (std::size_t i = 0; i < n && listed < 10; ++i) {
        const std::string a = i < ids.size() ? ids[i] : "<none>";
        const std::string b = i < other.size() ? other[i] : "<none>";
        if (a != b) {
          offending += (listed ? ", " : "") + a + "/" + b;
          ++listed;
        }
      }
      fail(ErrorCode::UnitMismatch, "view '" + v.name + "' unit ids differ at: " + offending);
    }
    for (const auto& f : v.data.feature_names()) names.push_back(v.name + ":" + f);
    total += v.data.cols();
  }
  Matrix values(static_cast<Index>(ids.size()), total);
  Index offset = 0;
  for (const auto& v : views) {
    values.middleCols(offset, v.data.cols()) = v.data.values();
    offset += v.data.cols();
  }
  return FeatureMatrix(ids, std::move(names), std::move(values));
}

FeatureMatrix extract_view(const FeatureMatrix& concatenated, const std::string& view_name) {
  const std::string prefix = view_name + ":";
  std::vector<std::string> names;
  std::vector<Index> cols;
  for (Index j = 0; j < concatenated.cols(); ++j) {
    const auto& f = concatenated.feature_names()[static_cast<std::size_t>(j)];
    if (f.rfind(prefix, 0) == 0) {
      names.push_back(f.substr(prefix.size()));
      cols.push_back(j);
    }
  }
  if (cols.empty()) fail(ErrorCode::InvalidArgument, "no columns for view '" + view_name + "'");
  Matrix values(concatenated.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    values.col(static_cast<Index>(k)) = concatenated.values().col(cols[k]);
  }
  return FeatureMatrix(concatenated.unit_ids(), std::move(names), std::move(values));
}

double pearson(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) fail(ErrorCode::LengthMismatch, "correlation of vectors of different length");
  const Vector ca = a.array() - a.mean();
  const Vector cb = b.array() - b.mean();
  const double na = ca.norm();
  const double nb = cb.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(ca.dot(cb) / (na * nb), -1.0, 1.0);
}

LabeledMatrix score_correlation_matrix(const std::vector<ScoreSet>& score_sets,
                                       const std::optional<Vector>& external,
                                       const std::string& external_name) {
  std::vector<Vector> columns;
  LabeledMatrix out;
  Index n = -1;
  auto check_n = [&](Index rows, const std::string& what) {
    if (n < 0) n = rows;
    if (rows != n) fail(ErrorCode::LengthMismatch, what + " has " + std::to_string(rows) + " rows, expected " + std::to_string(n));
  };
  for (const auto& s : score_sets) {
    check_n(s.scores.rows(), s.name);
    for (Index k = 0; k < s.scores.cols(); ++k) {
      columns.emplace_back(s.scores.col(k));
      out.labels.push_back(s.name + std::to_string(k + 1));
    }
  }
  if (external) {
    check_n(external->size(), external_name);
    columns.push_back(*external);
    out.labels.push_back(external_name);
  }
  const auto m = static_cast<Index>(columns.size());
  out.values = Matrix::Identity(m, m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      const double c = std::abs(pearson(columns[static_cast<std::size_t>(i)], columns[static_cast<std::size_t>(j)]));
      out.values(i, j) = c;
      out.values(j, i) = c;
    }
  }
  return out;
}

}  // namespace mvkit
