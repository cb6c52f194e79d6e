#pragma once

#include "mvkit/matrix_core.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mvkit {

struct PcaResult {
  std::vector<std::string> unit_ids;
  std::vector<std::string> feature_names;
  Matrix scores;     // n x r, columns of U_r
  Matrix loadings;   // p x r, columns of V_r
  Vector sigma;      // r leading singular values of the centered matrix
  Vector var_explained;  // sigma_k^2 over the full squared spectrum
};

/// PCA of a single view. The input is centered internally, never scaled.
PcaResult pca(const FeatureMatrix& m, Index r);

/// A view with a name, used wherever several views travel together.
struct View {
  std::string name;
  FeatureMatrix data;
};

/// Column-wise concatenation; feature names become "<view>:<feature>".
/// Throws UnitMismatch (listing ids) unless all views share unit_ids in order.
FeatureMatrix concat_views(const std::vector<View>& views);
/// Inverse of concat_views for one view name.
FeatureMatrix extract_view(const FeatureMatrix& concatenated, const std::string& view_name);

/// Symmetric matrix with row/column labels.
struct LabeledMatrix {
  std::vector<std::string> labels;
  Matrix values;
};

struct ScoreSet {
  std::string name;  // columns are labelled name1, name2, ...
  Matrix scores;     // n x k
};

/// Absolute Pearson correlations between every score column (and the
/// optional external vector, labelled `external_name`).
LabeledMatrix score_correlation_matrix(const std::vector<ScoreSet>& score_sets,
                                       const std::optional<Vector>& external = std::nullopt,
                                       const std::string& external_name = "external");

/// Pearson correlation; 0 when either side has zero variance.
double pearson(const Vector& a, const Vector& b);

}  // namespace mvkit
