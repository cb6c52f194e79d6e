#include "mvkit/rank_select.hpp"

#include "mvkit/error.hpp"
#include "mvkit/rng.hpp"

#include <algorithm>
#include <numeric>

namespace mvkit {

ScreeData scree_from_values(const Vector& singular_values) {
  ScreeData s;
  s.singular_values = singular_values.head(numerical_rank(singular_values));
  const Index k = s.singular_values.size();
  s.gaps = k > 1 ? Vector(s.singular_values.head(k - 1) - s.singular_values.tail(k - 1)) : Vector();
  return s;
}

ScreeData scree(const Matrix& m) { return scree_from_values(singular_values(m)); }
ScreeData scree(const FeatureMatrix& m) { return scree(m.values()); }

Index suggest_initial_rank(const ScreeData& s, Index max_rank) {
  if (max_rank < 1) fail(ErrorCode::InvalidArgument, "max_rank must be >= 1");
  const Vector& sv = s.singular_values;
  const Index last = std::min(max_rank, sv.size() - 1);
  Index best = 1;
  double best_gap = -1.0;
  for (Index k = 1; k <= last; ++k) {
    const double rel = (sv(k - 1) - sv(k)) / sv(k - 1);
    if (rel > best_gap + 1e-12) {
      best_gap = rel;
      best = k;
    }
  }
  return best;
}

Matrix random_direction_sample(Index n, const std::vector<Index>& initial_ranks,
                               std::uint64_t seed, Index index, bool center_blocks) {
  const Index total = std::accumulate(initial_ranks.begin(), initial_ranks.end(), Index{0});
  CounterRng rng(derive_seed(seed, static_cast<std::uint64_t>(index)));
  Matrix m(n, total);
  Index offset = 0;
  for (Index r : initial_ranks) {
    Matrix block(n, r);
    for (Index j = 0; j < r; ++j)
      for (Index i = 0; i < n; ++i) block(i, j) = rng.uniform01();
    if (center_blocks) block = center_columns(block);
    Eigen::HouseholderQR<Matrix> qr(block);
    m.middleCols(offset, r) = qr.householderQ() * Matrix::Identity(n, r);
    offset += r;
  }
  return m;
}

RandomDirectionBound random_direction_bound(Index n, const std::vector<Index>& initial_ranks,
                                            std::uint64_t seed,
                                            const RandomDirectionBoundOptions& options) {
  if (options.n_samples < 1) fail(ErrorCode::InvalidArgument, "n_samples must be >= 1");
  if (!(options.percentile >= 0.0 && options.percentile <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "percentile must lie in [0, 1]");
  }
  if (initial_ranks.empty()) fail(ErrorCode::InvalidArgument, "no initial ranks");
  for (Index r : initial_ranks)
    if (r < 1) fail(ErrorCode::InvalidArgument, "initial ranks must be positive");
  const Index total = std::accumulate(initial_ranks.begin(), initial_ranks.end(), Index{0});
  if (total > n) {
    fail(ErrorCode::RankTooLarge, "sum of initial ranks " + std::to_string(total) +
                                      " exceeds n = " + std::to_string(n));
  }

  const auto n_samples = static_cast<std::size_t>(options.n_samples);
  const auto width = static_cast<std::size_t>(total);
  std::vector<double> all(n_samples * width);
  parallel_for(n_samples, options.threads, [&](std::size_t s) {
    const Matrix m = random_direction_sample(n, initial_ranks, seed, static_cast<Index>(s),
                                             options.center_blocks);
    const Vector sv = singular_values(m);
    for (std::size_t i = 0; i < width; ++i) all[s * width + i] = sv(static_cast<Index>(i));
  });

  RandomDirectionBound out;
  out.seed = seed;
  out.percentile = options.percentile;
  out.samples.resize(n_samples);
  std::vector<double> column(n_samples);
  for (std::size_t i = 0; i < width; ++i) {
    for (std::size_t s = 0; s < n_samples; ++s) column[s] = all[s * width + i];
    if (i == 0) out.samples = column;
    out.per_index_thresholds.push_back(quantile(column, options.percentile));
  }
  out.threshold = out.per_index_thresholds.front();
  return out;
}

Index joint_rank(std::span<const double> sv, double threshold) {
  return static_cast<Index>(std::count_if(sv.begin(), sv.end(), [&](double s) { return s > threshold; }));
}

Index joint_rank(std::span<const double> sv, const RandomDirectionBound& bound, JointRankMode mode) {
  if (mode == JointRankMode::MaxBound) return joint_rank(sv, bound.threshold);
  Index r = 0;
  const std::size_t limit = std::min(sv.size(), bound.per_index_thresholds.size());
  while (static_cast<std::size_t>(r) < limit &&
         sv[static_cast<std::size_t>(r)] > bound.per_index_thresholds[static_cast<std::size_t>(r)]) {
    ++r;
  }
  return r;
}

double nu_threshold(const Vector& sv, Index initial_rank) {
  if (initial_rank < 1 || initial_rank > sv.size()) {
    fail(ErrorCode::RankTooLarge, "initial rank " + std::to_string(initial_rank) +
                                      " outside the spectrum of length " + std::to_string(sv.size()));
  }
  const double next = initial_rank < sv.size() ? sv(initial_rank) : 0.0;
  return 0.5 * (sv(initial_rank - 1) + next);
}

Index individual_rank(std::span<const double> residual_sv, double nu) {
  if (!(nu > 0.0)) fail(ErrorCode::InvalidArgument, "nu must be positive");
  return static_cast<Index>(
      std::count_if(residual_sv.begin(), residual_sv.end(), [&](double s) { return s >= nu; }));
}

}  // namespace mvkit
