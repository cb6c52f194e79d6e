#pragma once

#include "mvkit/ajive.hpp"
#include "mvkit/matrix_core.hpp"
#include "mvkit/pca.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mvkit {

/// Multiview lasso with an agreement penalty:
///   ½‖y − Σ Z_m β_m‖² + Σ λ_m ‖β_m‖₁ + (ρ/2) Σ_{m<m'} ‖Z_m β_m − Z_m' β_m'‖²
struct CoopModel {
  std::vector<Vector> betas;
  double intercept = 0.0;
  std::vector<double> lambdas;
  double rho = 0.0;
  double objective = 0.0;  // at the centered response used in the fit
  std::size_t n_iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // after every sweep, when requested
};

double coop_objective(const std::vector<Matrix>& z, const Vector& y, const std::vector<Vector>& betas,
                      const std::vector<double>& lambdas, double rho);

/// Gradient of the differentiable part (everything but the ℓ1 terms).
std::vector<Vector> smooth_gradient(const std::vector<Matrix>& z, const Vector& y,
                                    const std::vector<Vector>& betas, double rho);

struct FitOptions {
  double tol = 1e-10;              // on the largest coefficient change in a sweep
  std::size_t max_sweeps = 100000;
  bool check_standardized = false;  // throw NotStandardized for unscaled columns
  bool record_trace = false;
};

/// Cyclic coordinate descent. y is centered internally and its mean becomes
/// the intercept. `warm_start` (optional) gives initial betas.
CoopModel coop_fit(const std::vector<Matrix>& z, const Vector& y, const std::vector<double>& lambdas, double rho,
                   const FitOptions& options = {}, const std::vector<Vector>* warm_start = nullptr);

/// Largest KKT violation of `model` for the problem on centered y.
double kkt_violation(const std::vector<Matrix>& z, const Vector& y, const CoopModel& model);
/// max(1, ‖Zᵀ(y − ȳ)‖_∞), the scale used for KKT tolerances.
double kkt_scale(const std::vector<Matrix>& z, const Vector& y);

double predict(const CoopModel& model, const std::vector<Vector>& z_row);
Vector predict(const CoopModel& model, const std::vector<Matrix>& z);

/// max_m ‖Z_mᵀ(y − ȳ)‖_∞: the smallest λ giving the all-zero solution.
double lambda_max(const std::vector<Matrix>& z, const Vector& y);
/// `count` log-spaced values from lambda_max down to ratio * lambda_max.
std::vector<double> lambda_path(double lam_max, std::size_t count = 50, double ratio = 1e-3);

/// Tied: one λ shared by every view. Free: the product grid over views.
std::vector<std::vector<double>> lambda_vectors(const std::vector<double>& path, std::size_t n_views, bool tied);

struct CvOptions {
  std::size_t n_folds = 20;
  std::size_t n_repeats = 5;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  FitOptions fit{1e-8};
};

struct CvGridPoint {
  std::vector<double> lambdas;
  double rho = 0.0;
  double mean_mse = 0.0;
  double se = 0.0;                // standard error of the mean over folds
  std::vector<double> fold_mse;  // repeat-major
};

struct CvReport {
  std::vector<CvGridPoint> grid;
  std::size_t chosen = 0;
  std::vector<std::vector<std::size_t>> folds;  // per repeat, fold id of every unit
  std::uint64_t seed = 0;
  std::size_t n_folds = 0;
  std::size_t n_repeats = 0;

  const CvGridPoint& best() const { return grid[chosen]; }
  /// Index of the best grid point among those with the given ρ.
  std::size_t best_for_rho(double rho) const;
};

/// Fold ids for n units: sorted by y, each run of n_folds consecutive units
/// gets a random permutation of the fold ids.
std::vector<std::size_t> stratified_folds(const Vector& y, std::size_t n_folds, std::uint64_t seed);

/// k-fold CV repeated n_repeats times. Within a fold, training columns are
/// standardized and the same transform is applied to held-out rows. The chosen
/// point minimises mean MSE; ties go to the largest ‖λ‖₁, then the smallest ρ.
CvReport cross_validate(const std::vector<Matrix>& z, const Vector& y,
                        const std::vector<std::vector<double>>& lambda_grid, const std::vector<double>& rho_grid,
                        const CvOptions& options);

/// Column-standardized copies of the views (divisor n−1). Constant columns
/// become zero.
std::vector<Matrix> standardize_views(const std::vector<Matrix>& z);

struct RegressionViews {
  std::vector<std::string> view_names;
  std::vector<Matrix> z;
  std::vector<std::vector<std::string>> column_names;
};

/// `total` components split equally across views, the remainder going to the
/// first views. For AJIVE each view's share is split joint-first between the
/// (shared, never duplicated) joint scores and that view's individual scores;
/// shortfalls are filled from whatever remains. Throws InsufficientComponents
/// when fewer than `total` components exist.
RegressionViews features_from_ajive(const AjiveResult& r, std::size_t total);
/// Same allocation over per-view PCA scores; each view is capped at its own
/// number of components.
RegressionViews features_from_pca(const std::vector<std::string>& view_names, const std::vector<PcaResult>& pcs,
                                  std::size_t total);

}  // namespace mvkit
