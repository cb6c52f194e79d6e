#pragma once

#include "mvkit/matrix_core.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mvkit {

/// Singular spectrum of a view plus the consecutive drops between values.
struct ScreeData {
  Vector singular_values;  // nonincreasing, numerically nonzero values only
  Vector gaps;             // gaps[k] = sv[k] - sv[k+1]
};

/// Spectrum of the matrix exactly as passed (no centering or scaling here;
/// the pipeline decides what the view looks like at this point).
ScreeData scree(const Matrix& m);
ScreeData scree(const FeatureMatrix& m);
ScreeData scree_from_values(const Vector& singular_values);

/// Position k (1-based, k <= max_rank) of the largest relative drop
/// (sv[k-1] - sv[k]) / sv[k-1]. Ties go to the smallest k.
Index suggest_initial_rank(const ScreeData& s, Index max_rank);

struct RandomDirectionBoundOptions {
  Index n_samples = 1000;
  double percentile = 0.95;
  /// Column-center each random block before orthonormalising it. Score
  /// matrices of centered views are orthogonal to the constant vector, so the
  /// null samples are made the same way.
  bool center_blocks = true;
  unsigned threads = 1;
};

/// Null distribution of the singular values of M = (U_1 ... U_k) when the
/// score blocks share no direction. Each sample stacks k blocks of n x r_i
/// Uniform(0,1) entries, each block centered and orthonormalised.
struct RandomDirectionBound {
  double threshold = 0.0;            // percentile of the per-sample largest singular value
  std::vector<double> samples;       // largest singular value per sample, sample order
  /// per_index_thresholds[i]: percentile of the (i+1)-th largest singular value.
  std::vector<double> per_index_thresholds;
  double percentile = 0.95;
  std::uint64_t seed = 0;
};

RandomDirectionBound random_direction_bound(Index n, const std::vector<Index>& initial_ranks,
                                            std::uint64_t seed,
                                            const RandomDirectionBoundOptions& options = {});

/// Null sample number `index`: stacked random blocks, for inspection and tests.
Matrix random_direction_sample(Index n, const std::vector<Index>& initial_ranks,
                               std::uint64_t seed, Index index, bool center_blocks = true);

enum class JointRankMode { MaxBound, PerIndex };

/// Count of singular values strictly above `threshold`.
Index joint_rank(std::span<const double> m_singular_values, double threshold);
/// MaxBound: as above with bound.threshold. PerIndex: longest prefix where
/// sv[i] > bound.per_index_thresholds[i].
Index joint_rank(std::span<const double> m_singular_values, const RandomDirectionBound& bound,
                 JointRankMode mode);

/// Midpoint of the r-th and (r+1)-th singular values of the original view
/// (1-based); the (r+1)-th is taken as 0 past the end of the spectrum.
double nu_threshold(const Vector& view_singular_values, Index initial_rank);

/// Count of residual singular values >= nu.
Index individual_rank(std::span<const double> residual_singular_values, double nu);

struct RankSelection {
  std::vector<Index> initial_ranks;
  Index joint_rank = 0;
  std::vector<Index> individual_ranks;
  std::vector<double> nu_thresholds;
  std::vector<double> bound_samples;
  std::vector<double> per_index_thresholds;
  double bound_threshold = 0.0;
  double percentile = 0.95;
  Vector m_singular_values;
  std::uint64_t rng_seed = 0;
  bool joint_rank_fixed = false;
};

}  // namespace mvkit
