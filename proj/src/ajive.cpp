#include "mvkit/ajive.hpp"

#include "mvkit/error.hpp"
#include "mvkit/rng.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace mvkit {

Matrix AjiveResult::joint_block(Index view) const {
  const auto v = static_cast<std::size_t>(view);
  if (joint_rank() == 0) return Matrix::Zero(joint_scores.rows(), joint_loadings[v].rows());
  return joint_scores * joint_sigma.asDiagonal() * joint_loadings[v].transpose();
}

Matrix AjiveResult::individual_block(Index view) const {
  const auto& b = individual[static_cast<std::size_t>(view)];
  if (b.sigma.size() == 0) return Matrix::Zero(b.scores.rows(), b.loadings.rows());
  return b.scores * b.sigma.asDiagonal() * b.loadings.transpose();
}

Matrix AjiveResult::residual_block(Index view, const Matrix& x) const {
  return x - joint_block(view) - individual_block(view);
}

namespace {

void check_shared_units(const std::vector<View>& views) {
  const auto& ids = views.front().data.unit_ids();
  for (const auto& v : views) {
    if (v.data.unit_ids() != ids) {
      fail(ErrorCode::UnitMismatch, "view '" + v.name + "' does not share unit ids (in order) with view '" +
                                        views.front().name + "'");
    }
  }
}

}  // namespace

AjiveResult ajive_decompose(const std::vector<View>& views, const AjiveOptions& options) {
  if (views.size() < 2) fail(ErrorCode::InvalidArgument, "AJIVE needs at least two views");
  if (options.initial_ranks.size() != views.size()) {
    fail(ErrorCode::InvalidArgument, "one initial rank per view is required");
  }
  check_shared_units(views);
  const std::size_t k = views.size();
  const Index n = views.front().data.rows();

  AjiveResult out;
  out.unit_ids = views.front().data.unit_ids();
  for (const auto& v : views) {
    out.view_names.push_back(v.name);
    out.feature_names.push_back(v.data.feature_names());
  }

  // Stage 1: per-view signal subspaces.
  for (std::size_t i = 0; i < k; ++i) {
    const Index r = options.initial_ranks[i];
    const auto& x = views[i].data.values();
    if (r < 1 || r > std::min(x.rows(), x.cols())) {
      fail(ErrorCode::RankTooLarge, "initial rank " + std::to_string(r) + " for view '" + views[i].name +
                                        "' outside [1, " + std::to_string(std::min(x.rows(), x.cols())) + "]");
    }
  }
  std::vector<SvdFactors> full(k);
  parallel_for(k, options.threads, [&](std::size_t i) { full[i] = thin_svd(views[i].data.values()); });
  for (std::size_t i = 0; i < k; ++i) {
    if (numerical_rank(full[i].sigma) < options.initial_ranks[i]) {
      fail(ErrorCode::DegenerateView, "view '" + views[i].name + "' has rank " +
                                          std::to_string(numerical_rank(full[i].sigma)) +
                                          " below its initial rank " + std::to_string(options.initial_ranks[i]));
    }
  }

  // Stage 2: joint scores from the stacked signal score matrices.
  const Index total_rank = std::accumulate(options.initial_ranks.begin(), options.initial_ranks.end(), Index{0});
  if (total_rank > n) fail(ErrorCode::RankTooLarge, "sum of initial ranks exceeds the number of units");
  Matrix stacked(n, total_rank);
  {
    Index offset = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const Index r = options.initial_ranks[i];
      stacked.middleCols(offset, r) = full[i].u.leftCols(r);
      offset += r;
    }
  }
  const SvdFactors m_svd = thin_svd(stacked);

  RankSelection& ranks = out.ranks;
  ranks.initial_ranks = options.initial_ranks;
  ranks.m_singular_values = m_svd.sigma;
  ranks.rng_seed = options.seed;
  ranks.percentile = options.joint.bound.percentile;
  const std::span<const double> m_sv(m_svd.sigma.data(), static_cast<std::size_t>(m_svd.sigma.size()));
  Index r_joint = 0;
  if (options.joint.mode == JointRankConfig::Mode::Fixed) {
    r_joint = options.joint.fixed_rank;
    if (r_joint < 0 || r_joint > total_rank) {
      fail(ErrorCode::RankTooLarge, "fixed joint rank exceeds the sum of initial ranks");
    }
    ranks.joint_rank_fixed = true;
  } else {
    RandomDirectionBoundOptions bound_opts = options.joint.bound;
    bound_opts.threads = std::max(bound_opts.threads, options.threads);
    const RandomDirectionBound bound = random_direction_bound(n, options.initial_ranks, options.seed, bound_opts);
    r_joint = joint_rank(m_sv, bound, options.joint.mode == JointRankConfig::Mode::PerIndex
                                          ? JointRankMode::PerIndex
                                          : JointRankMode::MaxBound);
    ranks.bound_samples = bound.samples;
    ranks.bound_threshold = bound.threshold;
    ranks.per_index_thresholds = bound.per_index_thresholds;
  }

  Matrix x_all(n, std::accumulate(views.begin(), views.end(), Index{0},
                                  [](Index s, const View& v) { return s + v.data.cols(); }));
  {
    Index offset = 0;
    for (const auto& v : views) {
      x_all.middleCols(offset, v.data.cols()) = v.data.values();
      offset += v.data.cols();
    }
  }

  // J = U~ U~ᵀ X = U~ (U~ᵀ X); the SVD of the small factor U~ᵀ X gives the
  // SVD of J exactly: J = (U~ Q) S Wᵀ.
  Matrix joint_basis = m_svd.u.leftCols(r_joint);
  if (r_joint > 0) {
    const Matrix projected = joint_basis.transpose() * x_all;
    SvdFactors small = thin_svd(projected);
    const Index kept = std::min(numerical_rank(small.sigma), r_joint);
    if (kept < r_joint) {
      out.warnings.push_back("projected joint matrix has rank " + std::to_string(kept) +
                             " below the selected joint rank " + std::to_string(r_joint) + "; clipped");
      r_joint = kept;
      joint_basis = joint_basis * small.u.leftCols(kept);
      small = truncate(small, kept);
      small.u = Matrix::Identity(kept, kept);
    }
    out.joint_scores = joint_basis * small.u;
    out.joint_sigma = small.sigma;
    Index offset = 0;
    for (const auto& v : views) {
      out.joint_loadings.push_back(small.v.middleRows(offset, v.data.cols()));
      offset += v.data.cols();
    }
  } else {
    out.joint_scores = Matrix(n, 0);
    out.joint_sigma = Vector(0);
    for (const auto& v : views) out.joint_loadings.emplace_back(v.data.cols(), 0);
  }
  out.joint_basis = joint_basis;
  ranks.joint_rank = r_joint;

  // Stage 3: individual structure in the complement of the joint scores.
  ranks.individual_ranks.assign(k, 0);
  ranks.nu_thresholds.assign(k, 0.0);
  out.individual.resize(k);
  std::vector<std::string> stage3_warnings(k);
  parallel_for(k, options.threads, [&](std::size_t i) {
    const Matrix& x = views[i].data.values();
    const Matrix residual = r_joint > 0 ? Matrix(x - joint_basis * (joint_basis.transpose() * x)) : x;
    const SvdFactors res = thin_svd(residual);
    const double nu = nu_threshold(full[i].sigma, options.initial_ranks[i]);
    Index r_ind = individual_rank(std::span<const double>(res.sigma.data(), static_cast<std::size_t>(res.sigma.size())), nu);
    r_ind = std::min(r_ind, options.initial_ranks[i]);
    const Index available = numerical_rank(res.sigma);
    if (r_ind > available) {
      stage3_warnings[i] = "view '" + views[i].name + "': individual rank clipped from " +
                           std::to_string(r_ind) + " to " + std::to_string(available);
      r_ind = available;
    }
    const SvdFactors block = truncate(res, r_ind);
    out.individual[i] = IndividualBlock{block.u, block.sigma, block.v};
    ranks.individual_ranks[i] = r_ind;
    ranks.nu_thresholds[i] = nu;
  });
  for (auto& w : stage3_warnings)
    if (!w.empty()) out.warnings.push_back(std::move(w));
  return out;
}

AjiveResult three_view_decompose(const std::vector<View>& views, const AjiveOptions& options) {
  if (views.size() != 3) fail(ErrorCode::InvalidArgument, "three_view_decompose needs exactly three views");
  return ajive_decompose(views, options);
}

std::vector<View> intersect_units(const std::vector<View>& views, std::vector<std::string>* dropped) {
  if (views.empty()) return {};
  std::unordered_map<std::string, std::size_t> count;
  for (const auto& v : views) {
    std::unordered_set<std::string> seen(v.data.unit_ids().begin(), v.data.unit_ids().end());
    for (const auto& id : seen) ++count[id];
  }
  std::vector<std::string> keep;
  std::vector<std::string> lost;
  for (const auto& id : views.front().data.unit_ids()) {
    (count[id] == views.size() ? keep : lost).push_back(id);
  }
  std::unordered_set<std::string> listed(lost.begin(), lost.end());
  for (std::size_t i = 1; i < views.size(); ++i) {
    for (const auto& id : views[i].data.unit_ids()) {
      if (count[id] != views.size() && listed.insert(id).second) lost.push_back(id);
    }
  }
  if (dropped) *dropped = lost;
  std::vector<View> out;
  for (const auto& v : views) out.push_back(View{v.name, v.data.select_units(keep)});
  return out;
}

VarianceExplained variance_explained(const AjiveResult& r, const std::vector<View>& views) {
  if (static_cast<Index>(views.size()) != r.n_views()) {
    fail(ErrorCode::InvalidArgument, "variance_explained needs the views the result was built from");
  }
  VarianceExplained out;
  out.view_names = r.view_names;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const Matrix& x = views[i].data.values();
    const double total = x.squaredNorm();
    const Matrix j = r.joint_block(static_cast<Index>(i));
    const Matrix a = r.individual_block(static_cast<Index>(i));
    const double denom = total > 0.0 ? total : 1.0;
    out.joint.push_back(j.squaredNorm() / denom);
    out.individual.push_back(a.squaredNorm() / denom);
    out.residual.push_back((x - j - a).squaredNorm() / denom);
  }
  return out;
}

std::vector<RankSweepRow> rank_sweep(const std::vector<View>& views, Index rank_lo, Index rank_hi,
                                     std::uint64_t seed, const JointRankConfig& joint, unsigned threads) {
  if (rank_lo < 1 || rank_hi < rank_lo) fail(ErrorCode::InvalidArgument, "invalid rank range");
  std::vector<RankSweepRow> rows;
  for (Index r = rank_lo; r <= rank_hi; ++r) {
    AjiveOptions opts;
    opts.initial_ranks.assign(views.size(), r);
    opts.joint = joint;
    opts.seed = seed;
    opts.threads = threads;
    const AjiveResult res = ajive_decompose(views, opts);
    const VarianceExplained ve = variance_explained(res, views);
    rows.push_back(RankSweepRow{r, res.joint_rank(), res.ranks.individual_ranks, ve.joint, ve.individual});
  }
  return rows;
}

}  // namespace mvkit
