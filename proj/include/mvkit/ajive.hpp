#pragma once

#include "mvkit/matrix_core.hpp"
#include "mvkit/pca.hpp"
#include "mvkit/rank_select.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mvkit {

struct JointRankConfig {
  enum class Mode { MaxBound, PerIndex, Fixed };
  Mode mode = Mode::MaxBound;
  Index fixed_rank = 0;  // used when mode == Fixed
  RandomDirectionBoundOptions bound;
};

struct AjiveOptions {
  std::vector<Index> initial_ranks;
  JointRankConfig joint;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct IndividualBlock {
  Matrix scores;    // n x r_i
  Vector sigma;     // r_i
  Matrix loadings;  // p_i x r_i
};

/// Joint and individual structure of k >= 2 views over the same units.
struct AjiveResult {
  std::vector<std::string> unit_ids;
  std::vector<std::string> view_names;
  std::vector<std::vector<std::string>> feature_names;

  Matrix joint_basis;   // first r_J left singular vectors of M (spans the joint score space)
  Matrix joint_scores;  // n x r_J, left singular vectors of the projected joint matrix
  Vector joint_sigma;
  std::vector<Matrix> joint_loadings;  // per view, p_i x r_J
  std::vector<IndividualBlock> individual;
  RankSelection ranks;
  std::vector<std::string> warnings;

  Index joint_rank() const { return joint_sigma.size(); }
  Index n_views() const { return static_cast<Index>(view_names.size()); }

  /// J_i = U_J Sigma_J V_{J,i}ᵀ
  Matrix joint_block(Index view) const;
  /// A_i = U_i Sigma_i V_iᵀ
  Matrix individual_block(Index view) const;
  /// E_i = X_i - J_i - A_i
  Matrix residual_block(Index view, const Matrix& x) const;
};

/// Three-stage decomposition: per-view truncated SVD, joint scores from the
/// stacked score matrix, individual blocks from the projections onto the
/// complement of the joint score space.
AjiveResult ajive_decompose(const std::vector<View>& views, const AjiveOptions& options);

/// The k = 3 entry point; identical algorithm.
AjiveResult three_view_decompose(const std::vector<View>& views, const AjiveOptions& options);

/// Restricts every view to the units present in all of them, in the first
/// view's order. `dropped` receives ids missing from at least one view.
std::vector<View> intersect_units(const std::vector<View>& views,
                                  std::vector<std::string>* dropped = nullptr);

struct VarianceExplained {
  std::vector<std::string> view_names;
  std::vector<double> joint;
  std::vector<double> individual;
  std::vector<double> residual;
};

VarianceExplained variance_explained(const AjiveResult& r, const std::vector<View>& views);

struct RankSweepRow {
  Index initial_rank = 0;
  Index joint_rank = 0;
  std::vector<Index> individual_ranks;
  std::vector<double> joint_fraction;
  std::vector<double> individual_fraction;
};

/// Runs the decomposition with every view at initial rank r for r in
/// [rank_lo, rank_hi]. Throws RankTooLarge if r exceeds some view's min(n, p).
std::vector<RankSweepRow> rank_sweep(const std::vector<View>& views, Index rank_lo, Index rank_hi,
                                     std::uint64_t seed, const JointRankConfig& joint = {},
                                     unsigned threads = 1);

}  // namespace mvkit
