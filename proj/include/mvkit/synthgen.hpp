#pragma once

#include "mvkit/matrix_core.hpp"
#include "mvkit/pca.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace mvkit {

/// Optional response y = sqrt(n) * U_J w + noise_sd * g, so each weight is in
/// units of the per-unit standard deviation of its joint score.
struct ResponseSpec {
  std::vector<double> weights;  // length joint_rank
  double noise_sd = 1.0;
};

/// Planted multiview model X_i = J_i + A_i + E_i.
///
/// Joint component k has singular value joint_strengths[k] in every view.
/// Individual component k of view i has singular value
/// individual_strengths[i] * individual_decay^k.
/// SNR is reported as joint_strengths[0] / (noise_sd * sqrt(max(n, p_i))).
struct SynthSpec {
  Index n = 0;
  std::vector<Index> p;
  Index joint_rank = 0;
  std::vector<Index> individual_ranks;
  std::vector<double> joint_strengths;
  std::vector<double> individual_strengths;
  double individual_decay = 0.8;
  double noise_sd = 1.0;
  std::optional<ResponseSpec> response;
  std::uint64_t seed = 0;
};

struct SynthTruth {
  Matrix joint_scores;                    // n x r_J, orthonormal
  std::vector<Matrix> individual_scores;  // n x r_i, orthonormal, orthogonal to joint_scores
  std::vector<Matrix> joint_loadings;     // p_i x r_J
  std::vector<Matrix> individual_loadings;
  std::vector<Matrix> joint_blocks;
  std::vector<Matrix> individual_blocks;
  std::vector<Matrix> noise_blocks;
  std::vector<View> views;
  std::optional<Vector> response;
  Vector response_weights;
};

SynthTruth generate(const SynthSpec& spec);

/// Leading joint singular value that gives the requested SNR against the
/// widest view.
double strength_for_snr(double snr, double noise_sd, Index n, const std::vector<Index>& p);
double snr_of(const SynthSpec& spec, std::size_t view);

/// Two views shaped like the CDR/image pair: n = 383, p = (20, 1536),
/// r_J = 2, r_i = (1, 1). Joint singular values (s, 0.7 s), individual 1.3 s,
/// with s set by `snr`.
SynthSpec paper_shaped_spec(std::uint64_t seed, double snr = 10.0);
/// Adds a 31-feature third view; n = 381, r_i = (1, 1, 1).
SynthSpec three_view_spec(std::uint64_t seed, double snr = 10.0);

/// Principal angles (radians, nondecreasing) between the column spaces of two
/// orthonormal bases. Throws NotOrthonormal when either basis is not.
std::vector<double> principal_angles(const Matrix& a, const Matrix& b);

/// Orthonormal basis of the columns of a (thin Q of a Householder QR).
Matrix orthonormalize(const Matrix& a);

}  // namespace mvkit
