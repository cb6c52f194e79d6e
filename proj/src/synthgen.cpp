#include "mvkit/synthgen.hpp"

#include "mvkit/error.hpp"
#include "mvkit/rng.hpp"

#include <algorithm>
#include <cmath>

namespace mvkit {

namespace {

Matrix gaussian(CounterRng& rng, Index rows, Index cols) {
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = rng.normal();
  return g;
}

}  // namespace

Matrix orthonormalize(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
}

double strength_for_snr(double snr, double noise_sd, Index n, const std::vector<Index>& p) {
  const Index widest = std::max(n, *std::max_element(p.begin(), p.end()));
  return snr * noise_sd * std::sqrt(static_cast<double>(widest));
}

double snr_of(const SynthSpec& spec, std::size_t view) {
  if (spec.joint_strengths.empty() || spec.noise_sd == 0.0) return INFINITY;
  return spec.joint_strengths.front() /
         (spec.noise_sd * std::sqrt(static_cast<double>(std::max(spec.n, spec.p[view]))));
}

SynthTruth generate(const SynthSpec& spec) {
  const std::size_t k = spec.p.size();
  if (k == 0) fail(ErrorCode::SpecInfeasible, "no views");
  if (spec.individual_ranks.size() != k || spec.individual_strengths.size() != k) {
    fail(ErrorCode::SpecInfeasible, "individual ranks/strengths must have one entry per view");
  }
  if (static_cast<Index>(spec.joint_strengths.size()) != spec.joint_rank) {
    fail(ErrorCode::SpecInfeasible, "joint_strengths must have joint_rank entries");
  }
  if (spec.n < 2 || spec.joint_rank < 0 || spec.noise_sd < 0.0) {
    fail(ErrorCode::SpecInfeasible, "need n >= 2, joint_rank >= 0, noise_sd >= 0");
  }
  for (double s : spec.joint_strengths)
    if (!(s > 0.0)) fail(ErrorCode::SpecInfeasible, "strengths must be positive");
  for (std::size_t i = 0; i < k; ++i) {
    if (spec.individual_ranks[i] < 0) fail(ErrorCode::SpecInfeasible, "negative individual rank");
    if (spec.individual_ranks[i] > 0 && !(spec.individual_strengths[i] > 0.0)) {
      fail(ErrorCode::SpecInfeasible, "strengths must be positive");
    }
    if (spec.joint_rank + spec.individual_ranks[i] > std::min(spec.n, spec.p[i])) {
      fail(ErrorCode::SpecInfeasible, "joint_rank + individual_rank exceeds min(n, p) for view " +
                                          std::to_string(i + 1));
    }
  }
  if (spec.response && static_cast<Index>(spec.response->weights.size()) != spec.joint_rank) {
    fail(ErrorCode::SpecInfeasible, "response weights must have joint_rank entries");
  }

  CounterRng rng(derive_seed(spec.seed, "synth"));
  SynthTruth t;
  t.joint_scores = spec.joint_rank > 0 ? orthonormalize(gaussian(rng, spec.n, spec.joint_rank))
                                       : Matrix(spec.n, 0);
  const Vector joint_sv = Eigen::Map<const Vector>(spec.joint_strengths.data(), spec.joint_rank);
  std::vector<std::string> ids;
  for (Index i = 0; i < spec.n; ++i) ids.push_back("u" + std::to_string(i + 1));

  for (std::size_t v = 0; v < k; ++v) {
    const Index p = spec.p[v];
    const Index r_ind = spec.individual_ranks[v];
    Matrix ind = gaussian(rng, spec.n, r_ind);
    ind -= t.joint_scores * (t.joint_scores.transpose() * ind);
    const Matrix u_ind = r_ind > 0 ? orthonormalize(ind) : Matrix(spec.n, 0);
    const Matrix loadings = orthonormalize(gaussian(rng, p, spec.joint_rank + r_ind));
    Vector ind_sv(r_ind);
    for (Index c = 0; c < r_ind; ++c) {
      ind_sv(c) = spec.individual_strengths[v] * std::pow(spec.individual_decay, static_cast<double>(c));
    }
    Matrix jb = t.joint_scores * joint_sv.asDiagonal() * loadings.leftCols(spec.joint_rank).transpose();
    Matrix ab = u_ind * ind_sv.asDiagonal() * loadings.rightCols(r_ind).transpose();
    Matrix eb = spec.noise_sd * gaussian(rng, spec.n, p);
    std::vector<std::string> names;
    for (Index j = 0; j < p; ++j) names.push_back("f" + std::to_string(j + 1));
    t.views.push_back(View{"view" + std::to_string(v + 1), FeatureMatrix(ids, names, jb + ab + eb)});
    t.individual_scores.push_back(u_ind);
    t.joint_loadings.push_back(loadings.leftCols(spec.joint_rank));
    t.individual_loadings.push_back(loadings.rightCols(r_ind));
    t.joint_blocks.push_back(std::move(jb));
    t.individual_blocks.push_back(std::move(ab));
    t.noise_blocks.push_back(std::move(eb));
  }

  if (spec.response) {
    t.response_weights = Eigen::Map<const Vector>(spec.response->weights.data(), spec.joint_rank);
    Vector y = std::sqrt(static_cast<double>(spec.n)) * (t.joint_scores * t.response_weights);
    for (Index i = 0; i < spec.n; ++i) y(i) += spec.response->noise_sd * rng.normal();
    t.response = std::move(y);
  }
  return t;
}

SynthSpec paper_shaped_spec(std::uint64_t seed, double snr) {
  SynthSpec s;
  s.n = 383;
  s.p = {20, 1536};
  s.joint_rank = 2;
  s.individual_ranks = {1, 1};
  s.noise_sd = 1.0;
  const double strength = strength_for_snr(snr, s.noise_sd, s.n, s.p);
  s.joint_strengths = {strength, 0.7 * strength};
  s.individual_strengths = {1.3 * strength, 1.3 * strength};
  s.seed = seed;
  return s;
}

SynthSpec three_view_spec(std::uint64_t seed, double snr) {
  SynthSpec s;
  s.n = 381;
  s.p = {20, 1536, 31};
  s.joint_rank = 2;
  s.individual_ranks = {1, 1, 1};
  s.noise_sd = 1.0;
  const double strength = strength_for_snr(snr, s.noise_sd, s.n, s.p);
  s.joint_strengths = {strength, 0.7 * strength};
  s.individual_strengths = {1.3 * strength, 1.3 * strength, 1.3 * strength};
  s.seed = seed;
  return s;
}

std::vector<double> principal_angles(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) fail(ErrorCode::ShapeMismatch, "bases live in different dimensions");
  if (orthonormality_error(a) > 1e-8 || orthonormality_error(b) > 1e-8) {
    fail(ErrorCode::NotOrthonormal, "principal angles need orthonormal bases");
  }
  if (a.cols() == 0 || b.cols() == 0) return {};
  // Pair cosines (descending) with sines (ascending) so small angles keep full
  // precision instead of going through acos near 1.
  const Matrix& wide = a.cols() >= b.cols() ? a : b;
  const Matrix& narrow = a.cols() >= b.cols() ? b : a;
  const Matrix cross = wide.transpose() * narrow;
  const Vector cosines = singular_values(cross);
  Vector sines = singular_values(narrow - wide * cross);
  std::sort(sines.data(), sines.data() + sines.size());
  std::vector<double> angles;
  for (Index i = 0; i < cosines.size(); ++i) {
    angles.push_back(std::atan2(std::clamp(sines(i), 0.0, 1.0), std::clamp(cosines(i), 0.0, 1.0)));
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

}  // namespace mvkit
