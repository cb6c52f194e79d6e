#include "mvkit/coop_regress.hpp"

#include "mvkit/error.hpp"
#include "mvkit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mvkit {

namespace {

void check_views(const std::vector<Matrix>& z, const Vector& y) {
  if (z.empty()) fail(ErrorCode::ShapeMismatch, "at least one view is required");
  for (std::size_t m = 0; m < z.size(); ++m) {
    if (z[m].rows() != y.size()) {
      fail(ErrorCode::ShapeMismatch, "view " + std::to_string(m + 1) + " has " + std::to_string(z[m].rows()) +
                                         " rows, response has " + std::to_string(y.size()));
    }
  }
}

void check_betas(const std::vector<Matrix>& z, const std::vector<Vector>& betas) {
  if (betas.size() != z.size()) fail(ErrorCode::ShapeMismatch, "one coefficient vector per view is required");
  for (std::size_t m = 0; m < z.size(); ++m) {
    if (betas[m].size() != z[m].cols()) {
      fail(ErrorCode::ShapeMismatch, "coefficients of view " + std::to_string(m + 1) + " have the wrong length");
    }
  }
}

void check_penalties(const std::vector<Matrix>& z, const std::vector<double>& lambdas, double rho) {
  if (lambdas.size() != z.size()) fail(ErrorCode::ShapeMismatch, "one lambda per view is required");
  for (double l : lambdas)
    if (!(l >= 0.0) || !std::isfinite(l)) fail(ErrorCode::InvalidArgument, "lambda must be finite and >= 0");
  if (!(rho >= 0.0) || !std::isfinite(rho)) fail(ErrorCode::InvalidArgument, "rho must be finite and >= 0");
}

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

Vector centered(const Vector& y) { return y.array() - y.mean(); }

}  // namespace

double coop_objective(const std::vector<Matrix>& z, const Vector& y, const std::vector<Vector>& betas,
                      const std::vector<double>& lambdas, double rho) {
  check_views(z, y);
  check_betas(z, betas);
  check_penalties(z, lambdas, rho);
  std::vector<Vector> u;
  Vector total = Vector::Zero(y.size());
  double l1 = 0.0;
  for (std::size_t m = 0; m < z.size(); ++m) {
    u.push_back(z[m] * betas[m]);
    total += u.back();
    l1 += lambdas[m] * betas[m].lpNorm<1>();
  }
  double agreement = 0.0;
  for (std::size_t a = 0; a < u.size(); ++a)
    for (std::size_t b = a + 1; b < u.size(); ++b) agreement += (u[a] - u[b]).squaredNorm();
  return 0.5 * (y - total).squaredNorm() + l1 + 0.5 * rho * agreement;
}

std::vector<Vector> smooth_gradient(const std::vector<Matrix>& z, const Vector& y,
                                    const std::vector<Vector>& betas, double rho) {
  check_views(z, y);
  check_betas(z, betas);
  const auto k = static_cast<double>(z.size());
  std::vector<Vector> u;
  Vector total = Vector::Zero(y.size());
  for (std::size_t m = 0; m < z.size(); ++m) {
    u.push_back(z[m] * betas[m]);
    total += u.back();
  }
  std::vector<Vector> g;
  for (std::size_t m = 0; m < z.size(); ++m) {
    g.push_back(z[m].transpose() * ((total - y) + rho * (k * u[m] - total)));
  }
  return g;
}

CoopModel coop_fit(const std::vector<Matrix>& z, const Vector& y, const std::vector<double>& lambdas, double rho,
                   const FitOptions& options, const std::vector<Vector>* warm_start) {
  check_views(z, y);
  check_penalties(z, lambdas, rho);
  const Index n = y.size();
  const std::size_t views = z.size();
  const auto k = static_cast<double>(views);

  std::vector<Vector> sq_norms;
  for (std::size_t m = 0; m < views; ++m) {
    sq_norms.push_back(z[m].colwise().squaredNorm().transpose());
    if (options.check_standardized) {
      const double expected = std::sqrt(static_cast<double>(n - 1));
      for (Index j = 0; j < z[m].cols(); ++j) {
        const double norm = std::sqrt(sq_norms[m](j));
        if (std::abs(norm - expected) > 0.01 * expected || std::abs(z[m].col(j).mean()) > 0.01) {
          fail(ErrorCode::NotStandardized, "column " + std::to_string(j + 1) + " of view " + std::to_string(m + 1) +
                                               " is not standardized");
        }
      }
    }
  }

  CoopModel model;
  model.lambdas = lambdas;
  model.rho = rho;
  model.intercept = y.mean();
  const Vector yc = centered(y);
  if (warm_start) {
    check_betas(z, *warm_start);
    model.betas = *warm_start;
  } else {
    for (const auto& zm : z) model.betas.push_back(Vector::Zero(zm.cols()));
  }

  std::vector<Vector> u;
  Vector total = Vector::Zero(n);
  for (std::size_t m = 0; m < views; ++m) {
    u.push_back(z[m] * model.betas[m]);
    total += u.back();
  }

  const double curvature = 1.0 + rho * (k - 1.0);
  auto sweep = [&](bool active_only) {
    double change = 0.0;
    for (std::size_t m = 0; m < views; ++m) {
      Vector& beta = model.betas[m];
      for (Index j = 0; j < beta.size(); ++j) {
        if (active_only && beta(j) == 0.0) continue;
        const double a = curvature * sq_norms[m](j);
        if (a <= 0.0) continue;
        const auto zj = z[m].col(j);
        const double g = zj.dot((total - yc) + rho * (k * u[m] - total));
        const double next = soft_threshold(a * beta(j) - g, lambdas[m]) / a;
        const double delta = next - beta(j);
        if (delta == 0.0) continue;
        beta(j) = next;
        u[m] += delta * zj;
        total += delta * zj;
        change = std::max(change, std::abs(delta));
      }
    }
    ++model.n_iterations;
    if (options.record_trace) model.objective_trace.push_back(coop_objective(z, yc, model.betas, lambdas, rho));
    return change;
  };

  while (model.n_iterations < options.max_sweeps) {
    if (sweep(false) < options.tol) {
      model.converged = true;
      break;
    }
    // Iterate on the nonzero coefficients until they settle, then recheck all.
    while (model.n_iterations < options.max_sweeps && sweep(true) >= options.tol) {
    }
  }
  model.objective = coop_objective(z, yc, model.betas, lambdas, rho);
  return model;
}

double kkt_scale(const std::vector<Matrix>& z, const Vector& y) {
  check_views(z, y);
  const Vector yc = centered(y);
  double s = 1.0;
  for (const auto& zm : z) s = std::max(s, (zm.transpose() * yc).lpNorm<Eigen::Infinity>());
  return s;
}

double kkt_violation(const std::vector<Matrix>& z, const Vector& y, const CoopModel& model) {
  const std::vector<Vector> g = smooth_gradient(z, centered(y), model.betas, model.rho);
  double worst = 0.0;
  for (std::size_t m = 0; m < z.size(); ++m) {
    for (Index j = 0; j < g[m].size(); ++j) {
      const double b = model.betas[m](j);
      const double v = b != 0.0 ? std::abs(g[m](j) + model.lambdas[m] * (b > 0.0 ? 1.0 : -1.0))
                                : std::max(0.0, std::abs(g[m](j)) - model.lambdas[m]);
      worst = std::max(worst, v);
    }
  }
  return worst;
}

double predict(const CoopModel& model, const std::vector<Vector>& z_row) {
  if (z_row.size() != model.betas.size()) fail(ErrorCode::ShapeMismatch, "one feature vector per view is required");
  double out = model.intercept;
  for (std::size_t m = 0; m < z_row.size(); ++m) {
    if (z_row[m].size() != model.betas[m].size()) {
      fail(ErrorCode::ShapeMismatch, "features of view " + std::to_string(m + 1) + " have the wrong length");
    }
    out += z_row[m].dot(model.betas[m]);
  }
  return out;
}

Vector predict(const CoopModel& model, const std::vector<Matrix>& z) {
  if (z.size() != model.betas.size()) fail(ErrorCode::ShapeMismatch, "one feature matrix per view is required");
  Vector out = Vector::Constant(z.front().rows(), model.intercept);
  for (std::size_t m = 0; m < z.size(); ++m) {
    if (z[m].cols() != model.betas[m].size() || z[m].rows() != out.size()) {
      fail(ErrorCode::ShapeMismatch, "features of view " + std::to_string(m + 1) + " have the wrong shape");
    }
    out += z[m] * model.betas[m];
  }
  return out;
}

double lambda_max(const std::vector<Matrix>& z, const Vector& y) {
  check_views(z, y);
  const Vector yc = centered(y);
  double out = 0.0;
  for (const auto& zm : z)
    if (zm.cols() > 0) out = std::max(out, (zm.transpose() * yc).lpNorm<Eigen::Infinity>());
  return out;
}

std::vector<double> lambda_path(double lam_max, std::size_t count, double ratio) {
  if (count == 0) fail(ErrorCode::GridEmpty, "lambda path needs at least one value");
  if (!(lam_max > 0.0) || !(ratio > 0.0 && ratio <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "lambda path needs lambda_max > 0 and ratio in (0, 1]");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    out.push_back(lam_max * std::pow(ratio, t));
  }
  return out;
}

std::vector<std::vector<double>> lambda_vectors(const std::vector<double>& path, std::size_t n_views, bool tied) {
  if (path.empty()) fail(ErrorCode::GridEmpty, "empty lambda path");
  std::vector<std::vector<double>> out;
  if (tied) {
    for (double l : path) out.emplace_back(n_views, l);
    return out;
  }
  std::vector<std::size_t> idx(n_views, 0);
  while (true) {
    std::vector<double> v;
    for (std::size_t m = 0; m < n_views; ++m) v.push_back(path[idx[m]]);
    out.push_back(std::move(v));
    std::size_t m = n_views;
    while (m > 0 && ++idx[m - 1] == path.size()) idx[--m] = 0;
    if (m == 0) break;
  }
  return out;
}

std::size_t CvReport::best_for_rho(double rho) const {
  std::size_t best = grid.size();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i].rho != rho) continue;
    if (best == grid.size() || grid[i].mean_mse < grid[best].mean_mse) best = i;
  }
  if (best == grid.size()) fail(ErrorCode::InvalidArgument, "rho not in the grid");
  return best;
}

std::vector<std::size_t> stratified_folds(const Vector& y, std::size_t n_folds, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(y.size());
  if (n_folds < 2) fail(ErrorCode::InvalidArgument, "n_folds must be at least 2");
  if (n < n_folds) fail(ErrorCode::InvalidArgument, "fewer units than folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return y(static_cast<Index>(a)) < y(static_cast<Index>(b));
  });
  CounterRng rng(seed);
  std::vector<std::size_t> folds(n);
  std::vector<std::size_t> perm(n_folds);
  for (std::size_t start = 0; start < n; start += n_folds) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n_folds - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    for (std::size_t t = 0; t < n_folds && start + t < n; ++t) folds[order[start + t]] = perm[t];
  }
  return folds;
}

std::vector<Matrix> standardize_views(const std::vector<Matrix>& z) {
  std::vector<Matrix> out;
  for (const auto& zm : z) {
    Matrix s = zm.rowwise() - zm.colwise().mean();
    for (Index j = 0; j < s.cols(); ++j) {
      const double sd = std::sqrt(s.col(j).squaredNorm() / static_cast<double>(std::max<Index>(1, s.rows() - 1)));
      if (sd > 1e-12) s.col(j) /= sd;
      else s.col(j).setZero();
    }
    out.push_back(std::move(s));
  }
  return out;
}

CvReport cross_validate(const std::vector<Matrix>& z, const Vector& y,
                        const std::vector<std::vector<double>>& lambda_grid, const std::vector<double>& rho_grid,
                        const CvOptions& options) {
  check_views(z, y);
  if (lambda_grid.empty() || rho_grid.empty()) fail(ErrorCode::GridEmpty, "lambda and rho grids must be nonempty");
  for (const auto& l : lambda_grid) check_penalties(z, l, 0.0);
  for (double r : rho_grid) check_penalties(z, std::vector<double>(z.size(), 0.0), r);
  if (options.n_repeats < 1) fail(ErrorCode::InvalidArgument, "n_repeats must be at least 1");

  CvReport report;
  report.seed = options.seed;
  report.n_folds = options.n_folds;
  report.n_repeats = options.n_repeats;
  const std::uint64_t fold_seed = derive_seed(options.seed, "folds");
  for (std::size_t r = 0; r < options.n_repeats; ++r) {
    report.folds.push_back(stratified_folds(y, options.n_folds, derive_seed(fold_seed, r)));
  }

  // Warm starts run from the most to the least regularized λ.
  std::vector<std::size_t> lambda_order(lambda_grid.size());
  std::iota(lambda_order.begin(), lambda_order.end(), std::size_t{0});
  auto l1 = [&](std::size_t i) { return std::accumulate(lambda_grid[i].begin(), lambda_grid[i].end(), 0.0); };
  std::stable_sort(lambda_order.begin(), lambda_order.end(), [&](std::size_t a, std::size_t b) { return l1(a) > l1(b); });

  const std::size_t n_tasks = options.n_repeats * options.n_folds;
  const std::size_t n_points = rho_grid.size() * lambda_grid.size();
  std::vector<std::vector<double>> mse(n_points, std::vector<double>(n_tasks, 0.0));

  parallel_for(n_tasks, options.threads, [&](std::size_t task) {
    const auto& folds = report.folds[task / options.n_folds];
    const std::size_t held = task % options.n_folds;
    std::vector<Index> train, test;
    for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == held ? test : train).push_back(static_cast<Index>(i));
    if (test.empty() || train.size() < 2) fail(ErrorCode::InvalidArgument, "a fold is empty");

    std::vector<Matrix> z_train, z_test;
    for (const auto& zm : z) {
      Matrix tr = zm(train, Eigen::all);
      Matrix te = zm(test, Eigen::all);
      const Eigen::RowVectorXd mean = tr.colwise().mean();
      tr.rowwise() -= mean;
      te.rowwise() -= mean;
      for (Index j = 0; j < tr.cols(); ++j) {
        const double sd = std::sqrt(tr.col(j).squaredNorm() / static_cast<double>(tr.rows() - 1));
        if (sd > 1e-12) {
          tr.col(j) /= sd;
          te.col(j) /= sd;
        } else {
          tr.col(j).setZero();
          te.col(j).setZero();
        }
      }
      z_train.push_back(std::move(tr));
      z_test.push_back(std::move(te));
    }
    const Vector y_train = y(train);
    const Vector y_test = y(test);

    for (std::size_t ri = 0; ri < rho_grid.size(); ++ri) {
      std::vector<Vector> warm;
      for (std::size_t li : lambda_order) {
        const CoopModel m = coop_fit(z_train, y_train, lambda_grid[li], rho_grid[ri], options.fit,
                                     warm.empty() ? nullptr : &warm);
        warm = m.betas;
        mse[ri * lambda_grid.size() + li][task] = (y_test - predict(m, z_test)).squaredNorm() /
                                                  static_cast<double>(y_test.size());
      }
    }
  });

  for (std::size_t ri = 0; ri < rho_grid.size(); ++ri) {
    for (std::size_t li = 0; li < lambda_grid.size(); ++li) {
      CvGridPoint p;
      p.lambdas = lambda_grid[li];
      p.rho = rho_grid[ri];
      p.fold_mse = mse[ri * lambda_grid.size() + li];
      const double cnt = static_cast<double>(p.fold_mse.size());
      p.mean_mse = std::accumulate(p.fold_mse.begin(), p.fold_mse.end(), 0.0) / cnt;
      double ss = 0.0;
      for (double v : p.fold_mse) ss += (v - p.mean_mse) * (v - p.mean_mse);
      p.se = cnt > 1 ? std::sqrt(ss / (cnt - 1.0) / cnt) : 0.0;
      report.grid.push_back(std::move(p));
    }
  }

  auto norm1 = [](const CvGridPoint& p) { return std::accumulate(p.lambdas.begin(), p.lambdas.end(), 0.0); };
  for (std::size_t i = 1; i < report.grid.size(); ++i) {
    const CvGridPoint& c = report.grid[i];
    const CvGridPoint& b = report.grid[report.chosen];
    const double slack = 1e-12 * std::max(1.0, b.mean_mse);
    if (c.mean_mse < b.mean_mse - slack) {
      report.chosen = i;
    } else if (c.mean_mse <= b.mean_mse + slack) {
      if (norm1(c) > norm1(b) || (norm1(c) == norm1(b) && c.rho < b.rho)) report.chosen = i;
    }
  }
  return report;
}

namespace {

// Equal split of `total` over views, remainder to the first views.
std::vector<std::size_t> equal_quotas(std::size_t total, std::size_t views) {
  std::vector<std::size_t> q(views, total / views);
  for (std::size_t v = 0; v < total % views; ++v) ++q[v];
  return q;
}

}  // namespace

RegressionViews features_from_ajive(const AjiveResult& r, std::size_t total) {
  const std::size_t k = r.view_names.size();
  if (k == 0) fail(ErrorCode::InvalidArgument, "decomposition has no views");
  if (total == 0) fail(ErrorCode::InvalidArgument, "total components must be positive");
  const auto r_j = static_cast<std::size_t>(r.joint_rank());
  std::size_t available = r_j;
  for (const auto& b : r.individual) available += static_cast<std::size_t>(b.scores.cols());
  if (total > available) {
    fail(ErrorCode::InsufficientComponents, "requested " + std::to_string(total) + " components, only " +
                                                std::to_string(available) + " available");
  }

  const std::vector<std::size_t> quota = equal_quotas(total, k);
  std::vector<std::size_t> joint_take(k, 0), ind_take(k, 0);
  std::size_t pool = r_j;
  std::size_t shortfall = 0;
  for (std::size_t v = 0; v < k; ++v) {
    const auto cap = static_cast<std::size_t>(r.individual[v].scores.cols());
    const std::size_t want_joint = (quota[v] + 1) / 2;
    joint_take[v] = std::min(want_joint, pool);
    pool -= joint_take[v];
    ind_take[v] = std::min(quota[v] - joint_take[v], cap);
    const std::size_t extra = std::min(quota[v] - joint_take[v] - ind_take[v], pool);
    joint_take[v] += extra;
    pool -= extra;
    shortfall += quota[v] - joint_take[v] - ind_take[v];
  }
  for (std::size_t v = 0; v < k && shortfall > 0; ++v) {
    const auto cap = static_cast<std::size_t>(r.individual[v].scores.cols());
    const std::size_t more_ind = std::min(shortfall, cap - ind_take[v]);
    ind_take[v] += more_ind;
    shortfall -= more_ind;
    const std::size_t more_joint = std::min(shortfall, pool);
    joint_take[v] += more_joint;
    pool -= more_joint;
    shortfall -= more_joint;
  }

  RegressionViews out;
  out.view_names = r.view_names;
  std::size_t next_joint = 0;
  for (std::size_t v = 0; v < k; ++v) {
    const auto jt = static_cast<Index>(joint_take[v]);
    const auto it = static_cast<Index>(ind_take[v]);
    Matrix zv(r.joint_scores.rows(), jt + it);
    std::vector<std::string> names;
    for (Index c = 0; c < jt; ++c) {
      zv.col(c) = r.joint_scores.col(static_cast<Index>(next_joint));
      names.push_back("JC" + std::to_string(++next_joint));
    }
    for (Index c = 0; c < it; ++c) {
      zv.col(jt + c) = r.individual[v].scores.col(c);
      names.push_back(r.view_names[v] + ":IC" + std::to_string(c + 1));
    }
    out.z.push_back(std::move(zv));
    out.column_names.push_back(std::move(names));
  }
  return out;
}

RegressionViews features_from_pca(const std::vector<std::string>& view_names, const std::vector<PcaResult>& pcs,
                                  std::size_t total) {
  const std::size_t k = pcs.size();
  if (k == 0 || view_names.size() != k) fail(ErrorCode::InvalidArgument, "one name per PCA result is required");
  if (total == 0) fail(ErrorCode::InvalidArgument, "total components must be positive");
  std::size_t available = 0;
  for (const auto& p : pcs) available += static_cast<std::size_t>(p.scores.cols());
  if (total > available) {
    fail(ErrorCode::InsufficientComponents, "requested " + std::to_string(total) + " components, only " +
                                                std::to_string(available) + " available");
  }
  std::vector<std::size_t> take = equal_quotas(total, k);
  std::size_t shortfall = 0;
  for (std::size_t v = 0; v < k; ++v) {
    const auto cap = static_cast<std::size_t>(pcs[v].scores.cols());
    if (take[v] > cap) {
      shortfall += take[v] - cap;
      take[v] = cap;
    }
  }
  for (std::size_t v = 0; v < k && shortfall > 0; ++v) {
    const std::size_t more = std::min(shortfall, static_cast<std::size_t>(pcs[v].scores.cols()) - take[v]);
    take[v] += more;
    shortfall -= more;
  }
  RegressionViews out;
  out.view_names = view_names;
  for (std::size_t v = 0; v < k; ++v) {
    out.z.push_back(pcs[v].scores.leftCols(static_cast<Index>(take[v])));
    std::vector<std::string> names;
    for (std::size_t c = 0; c < take[v]; ++c) names.push_back(view_names[v] + ":PC" + std::to_string(c + 1));
    out.column_names.push_back(std::move(names));
  }
  return out;
}

}  // namespace mvkit
