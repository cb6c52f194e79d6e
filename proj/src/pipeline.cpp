#include "mvkit/pipeline.hpp"

#include "mvkit/csv.hpp"
#include "mvkit/error.hpp"
#include "mvkit/geo_aggregate.hpp"
#include "mvkit/rank_select.hpp"
#include "mvkit/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

namespace mvkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------- config

void allowed_keys(const json& obj, std::initializer_list<std::string_view> keys, const std::string& where) {
  if (!obj.is_object()) fail(ErrorCode::ConfigInvalid, where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      fail(ErrorCode::ConfigInvalid, "unknown key '" + key + "' in " + where);
    }
  }
}

fs::path existing_path(const json& value, const fs::path& base, const std::string& what) {
  fs::path p = value.get<std::string>();
  if (p.is_relative()) p = base / p;
  if (!fs::exists(p)) fail(ErrorCode::ConfigInvalid, what + ": file not found: " + p.string());
  return p;
}

PreprocessConfig parse_preprocess(const json& j, const std::string& where) {
  allowed_keys(j, {"steps", "winsorize"}, where);
  PreprocessConfig p;
  if (j.contains("steps")) p.steps = j["steps"].get<std::vector<std::string>>();
  for (const auto& s : p.steps) {
    if (s != "winsorize" && s != "standardize" && s != "center") {
      fail(ErrorCode::ConfigInvalid, where + ": unknown step '" + s + "'");
    }
  }
  if (j.contains("winsorize")) {
    const auto q = j["winsorize"].get<std::vector<double>>();
    if (q.size() != 2 || !(0.0 <= q[0] && q[0] < q[1] && q[1] <= 1.0)) {
      fail(ErrorCode::ConfigInvalid, where + ": winsorize needs [lower, upper] with 0 <= lower < upper <= 1");
    }
    p.winsor_lower = q[0];
    p.winsor_upper = q[1];
  }
  return p;
}

SimulateConfig parse_simulate(const json& j) {
  allowed_keys(j, {"preset", "n", "p", "joint_rank", "individual_ranks", "snr", "noise_sd", "joint_strengths",
                   "individual_strengths", "individual_decay", "response"},
               "simulate");
  SimulateConfig s;
  s.snr = j.value("snr", 10.0);
  if (!(s.snr > 0.0)) fail(ErrorCode::ConfigInvalid, "simulate.snr must be positive");
  const std::string preset = j.value("preset", std::string());
  if (preset == "paper") {
    s.spec = paper_shaped_spec(0, s.snr);
  } else if (preset == "three_view") {
    s.spec = three_view_spec(0, s.snr);
  } else if (!preset.empty()) {
    fail(ErrorCode::ConfigInvalid, "simulate.preset must be 'paper' or 'three_view'");
  }
  SynthSpec& spec = s.spec;
  bool shape_changed = false;
  if (j.contains("n")) spec.n = j["n"].get<Index>(), shape_changed = true;
  if (j.contains("p")) spec.p = j["p"].get<std::vector<Index>>(), shape_changed = true;
  if (j.contains("joint_rank")) spec.joint_rank = j["joint_rank"].get<Index>(), shape_changed = true;
  if (j.contains("individual_ranks")) {
    spec.individual_ranks = j["individual_ranks"].get<std::vector<Index>>();
    shape_changed = true;
  }
  if (j.contains("noise_sd")) spec.noise_sd = j["noise_sd"].get<double>(), shape_changed = true;
  if (j.contains("individual_decay")) spec.individual_decay = j["individual_decay"].get<double>();
  if (spec.p.empty() || spec.n < 2) fail(ErrorCode::ConfigInvalid, "simulate needs n >= 2 and a nonempty p");
  if (spec.individual_ranks.size() != spec.p.size()) {
    fail(ErrorCode::ConfigInvalid, "simulate.individual_ranks needs one entry per view");
  }
  if (shape_changed || spec.joint_strengths.empty()) {
    const double strength = strength_for_snr(s.snr, spec.noise_sd > 0.0 ? spec.noise_sd : 1.0, spec.n, spec.p);
    spec.joint_strengths.clear();
    for (Index c = 0; c < spec.joint_rank; ++c) spec.joint_strengths.push_back(strength * std::pow(0.7, c));
    spec.individual_strengths.assign(spec.p.size(), 1.3 * strength);
  }
  if (j.contains("joint_strengths")) spec.joint_strengths = j["joint_strengths"].get<std::vector<double>>();
  if (j.contains("individual_strengths")) {
    spec.individual_strengths = j["individual_strengths"].get<std::vector<double>>();
  }
  if (j.contains("response")) {
    allowed_keys(j["response"], {"weights", "noise_sd"}, "simulate.response");
    ResponseSpec r;
    r.weights = j["response"].at("weights").get<std::vector<double>>();
    r.noise_sd = j["response"].value("noise_sd", 1.0);
    spec.response = r;
  }
  return s;
}

// ---------------------------------------------------------------- output helpers

void write_json(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void write_scores(const fs::path& path, const std::vector<std::string>& row_ids, const std::string& id_header,
                  const std::vector<std::string>& col_names, const Matrix& m) {
  CsvTable t;
  t.header.push_back(id_header);
  t.header.insert(t.header.end(), col_names.begin(), col_names.end());
  for (Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> row{row_ids[static_cast<std::size_t>(i)]};
    for (Index j = 0; j < m.cols(); ++j) row.push_back(format_double(m(i, j)));
    t.rows.push_back(std::move(row));
  }
  write_csv_table(path, t);
}

std::vector<std::string> numbered(const std::string& prefix, Index count) {
  std::vector<std::string> out;
  for (Index c = 0; c < count; ++c) out.push_back(prefix + std::to_string(c + 1));
  return out;
}

void write_provenance(const PipelineConfig& config, const PreparedData* prepared, const std::string& command) {
  json j;
  j["tool"] = "mvkit";
  j["version"] = kVersion;
  j["command"] = command;
  j["config_hash"] = config.hash;
  j["seed"] = config.seed;
  j["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                       std::to_string(EIGEN_MINOR_VERSION);
  j["substreams"] = {"ranks", "folds", "patches", "synth"};
  if (prepared) {
    j["dropped_units"] = prepared->dropped_units;
    j["warnings"] = prepared->warnings;
    j["n_units"] = prepared->views.empty() ? 0 : prepared->views.front().data.rows();
  }
  json steps = json::object();
  for (const auto& v : config.views) steps[v.name] = (v.preprocess ? *v.preprocess : config.preprocess).steps;
  j["scree_input"] = {{"description", "views after preprocessing and centering"}, {"steps", steps}};
  write_json(config.output_dir / "provenance.json", j);
}

// ---------------------------------------------------------------- loading

struct AggregateOutput {
  geo::RegionSet cells;
  geo::OverlapMatrix gamma;
  FeatureMatrix features;
};

AggregateOutput aggregate_view(const AggregateRecipe& r, unsigned threads) {
  const geo::RegionSet units = geo::read_regions_geojson(r.units);
  const std::vector<geo::Site> sites = geo::read_sites_csv(r.sites);
  const geo::Polygon boundary = geo::read_boundary_geojson(r.boundary);
  geo::RegionSet cells = geo::voronoi(sites, boundary);
  geo::OverlapMatrix gamma = geo::overlap_matrix(units, cells, threads);
  FeatureMatrix features = geo::aggregate_features(gamma, read_matrix_csv(r.site_features));
  return {std::move(cells), std::move(gamma), std::move(features)};
}

ImageFeatures patch_view(const ViewSpec& v, std::uint64_t seed, unsigned threads) {
  const CsvTable list = read_csv_table(v.patches.images);
  if (list.header.size() != 2) fail(ErrorCode::InvalidData, v.patches.images.string() + ": expected image_id,path");
  std::vector<std::string> ids;
  std::vector<RasterImage> images;
  for (const auto& row : list.rows) {
    fs::path p = row[1];
    if (p.is_relative()) p = v.patches.images.parent_path() / p;
    ids.push_back(row[0]);
    images.push_back(read_ppm(p));
  }
  const StubEmbedder embedder;
  return image_features(ids, images, embedder, v.patches.options,
                        derive_seed(derive_seed(seed, "patches"), v.name), threads);
}

FeatureMatrix preprocess(const FeatureMatrix& m, const PreprocessConfig& p) {
  FeatureMatrix out = m;
  for (const auto& step : p.steps) {
    if (step == "winsorize") out = winsorize_columns(out, p.winsor_lower, p.winsor_upper);
    else if (step == "standardize") out = standardize_columns(out);
    else if (step == "center") out = center_columns(out);
  }
  // The decomposition assumes centered views, whatever the steps were.
  return center_columns(out);
}

FeatureMatrix score_as_matrix(const ScoreVector& s, const std::string& name) {
  return FeatureMatrix(s.unit_ids, {name}, Matrix(s.values));
}

// ---------------------------------------------------------------- analysis

struct RankStage {
  std::vector<ScreeData> screes;
  AjiveResult result;
};

RankStage decompose(const PipelineConfig& config, const PreparedData& data) {
  if (data.views.size() < 2) fail(ErrorCode::ConfigInvalid, "the decomposition needs at least two views");
  RankStage s;
  for (const auto& v : data.views) s.screes.push_back(scree(v.data));
  AjiveOptions opts;
  if (config.ranks.auto_initial) {
    for (const auto& sc : s.screes) opts.initial_ranks.push_back(suggest_initial_rank(sc, config.ranks.max_rank));
  } else {
    opts.initial_ranks = config.ranks.initial;
    if (opts.initial_ranks.size() != data.views.size()) {
      fail(ErrorCode::ConfigInvalid, "ranks.initial needs one entry per view");
    }
  }
  opts.joint = config.ranks.joint;
  opts.seed = derive_seed(config.seed, "ranks");
  opts.threads = config.threads;
  s.result = ajive_decompose(data.views, opts);
  return s;
}

void write_rank_artifacts(const PipelineConfig& config, const PreparedData& data, const RankStage& s) {
  const fs::path& out = config.output_dir;
  CsvTable all;
  all.header = {"view", "index", "singular_value", "gap"};
  for (std::size_t i = 0; i < data.views.size(); ++i) {
    CsvTable t;
    t.header = {"index", "singular_value", "gap"};
    const ScreeData& sc = s.screes[i];
    for (Index k = 0; k < sc.singular_values.size(); ++k) {
      t.rows.push_back({std::to_string(k + 1), format_double(sc.singular_values(k)),
                        k < sc.gaps.size() ? format_double(sc.gaps(k)) : std::string()});
      all.rows.push_back({data.views[i].name, t.rows.back()[0], t.rows.back()[1], t.rows.back()[2]});
    }
    write_csv_table(out / ("scree_" + data.views[i].name + ".csv"), t);
  }
  write_csv_table(out / "scree.csv", all);
  const RankSelection& r = s.result.ranks;
  json j;
  j["views"] = s.result.view_names;
  j["initial_ranks"] = r.initial_ranks;
  j["initial_rank_source"] = config.ranks.auto_initial ? "scree" : "config";
  j["joint_rank"] = r.joint_rank;
  j["joint_rank_fixed"] = r.joint_rank_fixed;
  j["individual_ranks"] = r.individual_ranks;
  j["nu_thresholds"] = r.nu_thresholds;
  j["bound_threshold"] = r.bound_threshold;
  j["per_index_thresholds"] = r.per_index_thresholds;
  j["percentile"] = r.percentile;
  j["n_bound_samples"] = r.bound_samples.size();
  j["m_singular_values"] = vector_json(r.m_singular_values);
  j["seed"] = config.seed;
  j["warnings"] = s.result.warnings;
  write_json(out / "ranks.json", j);

  CsvTable b;
  b.header = {"sample", "largest_singular_value"};
  for (std::size_t k = 0; k < r.bound_samples.size(); ++k) {
    b.rows.push_back({std::to_string(k + 1), format_double(r.bound_samples[k])});
  }
  write_csv_table(out / "bound_samples.csv", b);
  write_json(out / "chosen_ranks.json", {{"initial_ranks", r.initial_ranks},
                                         {"joint_rank", r.joint_rank},
                                         {"individual_ranks", r.individual_ranks},
                                         {"nu", r.nu_thresholds},
                                         {"threshold", r.bound_threshold},
                                         {"seed", config.seed}});
}

void write_ajive_artifacts(const PipelineConfig& config, const PreparedData& data, const AjiveResult& r) {
  const fs::path& out = config.output_dir;
  write_scores(out / "joint_scores.csv", r.unit_ids, "unit_id", numbered("JC", r.joint_rank()), r.joint_scores);
  json sigma;
  sigma["joint"] = vector_json(r.joint_sigma);
  for (std::size_t i = 0; i < r.view_names.size(); ++i) {
    const std::string& name = r.view_names[i];
    write_scores(out / ("joint_loadings_" + name + ".csv"), r.feature_names[i], "feature",
                 numbered("JC", r.joint_rank()), r.joint_loadings[i]);
    const IndividualBlock& b = r.individual[i];
    write_scores(out / ("individual_scores_" + name + ".csv"), r.unit_ids, "unit_id",
                 numbered("IC", b.scores.cols()), b.scores);
    write_scores(out / ("individual_loadings_" + name + ".csv"), r.feature_names[i], "feature",
                 numbered("IC", b.loadings.cols()), b.loadings);
    sigma["individual"][name] = vector_json(b.sigma);
  }
  write_json(out / "sigma.json", sigma);
  const VarianceExplained ve = variance_explained(r, data.views);
  json v = json::object();
  for (std::size_t i = 0; i < ve.view_names.size(); ++i) {
    v[ve.view_names[i]] = {{"joint", ve.joint[i]}, {"individual", ve.individual[i]}, {"residual", ve.residual[i]}};
  }
  write_json(out / "variance.json", v);
}

struct PcaStage {
  std::vector<PcaResult> per_view;
  std::optional<PcaResult> concatenated;
};

Index pca_rank(const FeatureMatrix& m, Index wanted) {
  return std::max<Index>(1, std::min({wanted, m.rows() - 1, m.cols()}));
}

PcaStage compute_pca(const PipelineConfig& config, const PreparedData& data, Index wanted) {
  PcaStage s;
  for (const auto& v : data.views) s.per_view.push_back(pca(v.data, pca_rank(v.data, wanted)));
  if (data.views.size() > 1) {
    const FeatureMatrix all = concat_views(data.views);
    s.concatenated = pca(all, pca_rank(all, wanted));
  }
  (void)config;
  return s;
}

void write_pca_one(const fs::path& out, const std::string& name, const PcaResult& p) {
  write_scores(out / ("pca_scores_" + name + ".csv"), p.unit_ids, "unit_id", numbered("PC", p.scores.cols()),
               p.scores);
  write_scores(out / ("pca_loadings_" + name + ".csv"), p.feature_names, "feature",
               numbered("PC", p.loadings.cols()), p.loadings);
  CsvTable t;
  t.header = {"component", "singular_value", "variance_explained"};
  for (Index k = 0; k < p.sigma.size(); ++k) {
    t.rows.push_back({"PC" + std::to_string(k + 1), format_double(p.sigma(k)), format_double(p.var_explained(k))});
  }
  write_csv_table(out / ("pca_sigma_" + name + ".csv"), t);
}

void write_pca_artifacts(const PipelineConfig& config, const PreparedData& data, const PcaStage& s) {
  for (std::size_t i = 0; i < data.views.size(); ++i) write_pca_one(config.output_dir, data.views[i].name, s.per_view[i]);
  if (s.concatenated) write_pca_one(config.output_dir, "concat", *s.concatenated);
}

void write_correlations(const PipelineConfig& config, const PreparedData& data, const AjiveResult& r,
                        const PcaStage& p) {
  std::vector<ScoreSet> sets;
  if (r.joint_rank() > 0) sets.push_back({"JC", r.joint_scores});
  for (std::size_t i = 0; i < r.view_names.size(); ++i) {
    if (r.individual[i].scores.cols() > 0) sets.push_back({r.view_names[i] + "_IC", r.individual[i].scores});
  }
  for (std::size_t i = 0; i < data.views.size(); ++i) sets.push_back({data.views[i].name + "_PC", p.per_view[i].scores});
  if (p.concatenated) sets.push_back({"concat_PC", p.concatenated->scores});
  std::optional<Vector> external;
  std::string external_name = "external";
  for (std::size_t e = 0; e < data.external.size(); ++e) {
    if (e == 0) {
      external = data.external[e].second;
      external_name = data.external[e].first;
    } else {
      sets.push_back({data.external[e].first + "_", Matrix(data.external[e].second)});
    }
  }
  const LabeledMatrix c = score_correlation_matrix(sets, external, external_name);
  write_scores(config.output_dir / "correlations.csv", c.labels, "component", c.labels, c.values);
}

void regress(const PipelineConfig& config, const PreparedData& data, const AjiveResult* ajive) {
  if (!config.regression) fail(ErrorCode::ConfigInvalid, "config has no regression section");
  const RegressionConfig& rc = *config.regression;
  if (!data.response) fail(ErrorCode::ConfigInvalid, "regression needs a response");
  const Vector& y = *data.response;

  RegressionViews rv;
  if (rc.source == "raw") {
    for (const auto& v : data.views) {
      rv.view_names.push_back(v.name);
      rv.z.push_back(v.data.values());
      rv.column_names.push_back(v.data.feature_names());
    }
  } else if (rc.source == "pca") {
    std::vector<std::string> names;
    std::vector<PcaResult> pcs;
    for (const auto& v : data.views) {
      names.push_back(v.name);
      pcs.push_back(pca(v.data, pca_rank(v.data, static_cast<Index>(rc.total_components))));
    }
    rv = features_from_pca(names, pcs, rc.total_components);
  } else {
    std::optional<RankStage> own;
    if (!ajive) {
      own = decompose(config, data);
      ajive = &own->result;
    }
    rv = features_from_ajive(*ajive, rc.total_components);
  }
  // Views that received no components carry no information for the fit.
  RegressionViews used;
  for (std::size_t m = 0; m < rv.z.size(); ++m) {
    if (rv.z[m].cols() == 0) continue;
    used.view_names.push_back(rv.view_names[m]);
    used.z.push_back(rv.z[m]);
    used.column_names.push_back(rv.column_names[m]);
  }
  if (used.z.empty()) fail(ErrorCode::InsufficientComponents, "no regression features");

  const std::vector<Matrix> z = standardize_views(used.z);
  const double lam_max = lambda_max(z, y);
  if (!(lam_max > 0.0)) fail(ErrorCode::InvalidData, "response is uncorrelated with every feature");
  const auto grid = lambda_vectors(lambda_path(lam_max, rc.lambda_count, rc.lambda_ratio), z.size(), rc.tied_lambda);
  CvOptions cv;
  cv.n_folds = rc.folds;
  cv.n_repeats = rc.repeats;
  cv.seed = config.seed;
  cv.threads = config.threads;
  const CvReport report = cross_validate(z, y, grid, rc.rho, cv);

  CsvTable t;
  t.header = {"rho"};
  for (const auto& name : used.view_names) t.header.push_back("lambda_" + name);
  t.header.insert(t.header.end(), {"mean_mse", "se", "chosen"});
  for (std::size_t g = 0; g < report.grid.size(); ++g) {
    const CvGridPoint& p = report.grid[g];
    std::vector<std::string> row{format_double(p.rho)};
    for (double l : p.lambdas) row.push_back(format_double(l));
    row.insert(row.end(), {format_double(p.mean_mse), format_double(p.se), g == report.chosen ? "1" : "0"});
    t.rows.push_back(std::move(row));
  }
  write_csv_table(config.output_dir / "cv_report.csv", t);

  const CvGridPoint& best = report.best();
  const CoopModel model = coop_fit(z, y, best.lambdas, best.rho);
  json j;
  j["source"] = rc.source;
  j["views"] = used.view_names;
  j["lambdas"] = best.lambdas;
  j["rho"] = best.rho;
  j["intercept"] = model.intercept;
  j["objective"] = model.objective;
  j["converged"] = model.converged;
  j["n_iterations"] = model.n_iterations;
  j["cv"] = {{"mean_mse", best.mean_mse}, {"se", best.se}, {"folds", rc.folds}, {"repeats", rc.repeats},
             {"null_mse", (y.array() - y.mean()).square().mean()}};
  json betas = json::object();
  for (std::size_t m = 0; m < used.z.size(); ++m) {
    json b = json::array();
    for (std::size_t c = 0; c < used.column_names[m].size(); ++c) {
      b.push_back({{"feature", used.column_names[m][c]}, {"beta", model.betas[m](static_cast<Index>(c))}});
    }
    betas[used.view_names[m]] = b;
  }
  j["betas"] = betas;
  j["features_standardized"] = true;
  j["seed"] = config.seed;
  write_json(config.output_dir / "model.json", j);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

// ---------------------------------------------------------------- public

PipelineConfig parse_config(const std::string& text, const fs::path& base_dir) {
  PipelineConfig c;
  c.hash = hex64(fnv1a64(text));
  try {
    const json j = json::parse(text);
    allowed_keys(j, {"seed", "output_dir", "threads", "views", "preprocess", "ranks", "pca", "regression",
                     "external_scores", "simulate"},
                 "config");
    c.seed = j.value("seed", std::uint64_t{0});
    c.output_dir = j.value("output_dir", std::string("out"));
    if (c.output_dir.is_relative()) c.output_dir = base_dir / c.output_dir;
    c.threads = j.value("threads", 1u);
    if (c.threads < 1) fail(ErrorCode::ConfigInvalid, "threads must be at least 1");
    if (j.contains("preprocess")) c.preprocess = parse_preprocess(j["preprocess"], "preprocess");

    if (j.contains("views")) {
      std::vector<std::string> seen;
      for (const auto& v : j["views"]) {
        allowed_keys(v, {"name", "matrix", "aggregate", "patches", "preprocess"}, "view");
        ViewSpec s;
        s.name = v.at("name").get<std::string>();
        if (s.name.empty() || std::find(seen.begin(), seen.end(), s.name) != seen.end()) {
          fail(ErrorCode::ConfigInvalid, "view names must be nonempty and unique");
        }
        seen.push_back(s.name);
        const int sources = static_cast<int>(v.contains("matrix")) + static_cast<int>(v.contains("aggregate")) +
                            static_cast<int>(v.contains("patches"));
        if (sources != 1) fail(ErrorCode::ConfigInvalid, "view '" + s.name + "' needs exactly one of matrix, aggregate, patches");
        const std::string where = "view '" + s.name + "'";
        if (v.contains("matrix")) {
          s.kind = ViewSpec::Kind::Matrix;
          s.matrix = existing_path(v["matrix"], base_dir, where);
        } else if (v.contains("aggregate")) {
          s.kind = ViewSpec::Kind::Aggregate;
          const json& a = v["aggregate"];
          allowed_keys(a, {"units", "sites", "boundary", "site_features"}, where + ".aggregate");
          s.aggregate = {existing_path(a.at("units"), base_dir, where), existing_path(a.at("sites"), base_dir, where),
                         existing_path(a.at("boundary"), base_dir, where),
                         existing_path(a.at("site_features"), base_dir, where)};
        } else {
          s.kind = ViewSpec::Kind::Patches;
          const json& p = v["patches"];
          allowed_keys(p, {"images", "count", "size", "max_black_frac", "max_attempts"}, where + ".patches");
          s.patches.images = existing_path(p.at("images"), base_dir, where);
          s.patches.options.count = p.value("count", s.patches.options.count);
          s.patches.options.size = p.value("size", s.patches.options.size);
          s.patches.options.max_black_frac = p.value("max_black_frac", s.patches.options.max_black_frac);
          s.patches.options.max_attempts = p.value("max_attempts", s.patches.options.max_attempts);
        }
        if (v.contains("preprocess")) s.preprocess = parse_preprocess(v["preprocess"], where + ".preprocess");
        c.views.push_back(std::move(s));
      }
    }

    if (j.contains("ranks")) {
      const json& r = j["ranks"];
      allowed_keys(r, {"initial", "max_rank", "joint"}, "ranks");
      if (r.contains("initial")) {
        if (r["initial"].is_string()) {
          if (r["initial"].get<std::string>() != "auto") fail(ErrorCode::ConfigInvalid, "ranks.initial must be 'auto' or a list");
        } else {
          c.ranks.auto_initial = false;
          c.ranks.initial = r["initial"].get<std::vector<Index>>();
        }
      }
      c.ranks.max_rank = r.value("max_rank", c.ranks.max_rank);
      if (r.contains("joint")) {
        const json& jr = r["joint"];
        allowed_keys(jr, {"mode", "rank", "n_samples", "percentile", "center_blocks"}, "ranks.joint");
        const std::string mode = jr.value("mode", std::string("max_bound"));
        if (mode == "max_bound") c.ranks.joint.mode = JointRankConfig::Mode::MaxBound;
        else if (mode == "per_index") c.ranks.joint.mode = JointRankConfig::Mode::PerIndex;
        else if (mode == "fixed") c.ranks.joint.mode = JointRankConfig::Mode::Fixed;
        else fail(ErrorCode::ConfigInvalid, "ranks.joint.mode must be max_bound, per_index or fixed");
        c.ranks.joint.fixed_rank = jr.value("rank", Index{0});
        c.ranks.joint.bound.n_samples = jr.value("n_samples", c.ranks.joint.bound.n_samples);
        c.ranks.joint.bound.percentile = jr.value("percentile", c.ranks.joint.bound.percentile);
        c.ranks.joint.bound.center_blocks = jr.value("center_blocks", true);
        if (c.ranks.joint.bound.n_samples < 1 || !(c.ranks.joint.bound.percentile > 0.0 && c.ranks.joint.bound.percentile < 1.0)) {
          fail(ErrorCode::ConfigInvalid, "ranks.joint needs n_samples >= 1 and 0 < percentile < 1");
        }
      }
    }
    if (j.contains("pca")) {
      allowed_keys(j["pca"], {"components"}, "pca");
      c.pca_components = j["pca"].value("components", c.pca_components);
      if (c.pca_components < 1) fail(ErrorCode::ConfigInvalid, "pca.components must be positive");
    }
    if (j.contains("regression")) {
      const json& r = j["regression"];
      allowed_keys(r, {"response", "source", "total_components", "lambda_count", "lambda_ratio", "rho", "folds",
                       "repeats", "tied_lambda"},
                   "regression");
      RegressionConfig rc;
      rc.response = existing_path(r.at("response"), base_dir, "regression.response");
      rc.source = r.value("source", rc.source);
      if (rc.source != "raw" && rc.source != "pca" && rc.source != "ajive") {
        fail(ErrorCode::ConfigInvalid, "regression.source must be raw, pca or ajive");
      }
      rc.total_components = r.value("total_components", rc.total_components);
      rc.lambda_count = r.value("lambda_count", rc.lambda_count);
      rc.lambda_ratio = r.value("lambda_ratio", rc.lambda_ratio);
      if (r.contains("rho")) rc.rho = r["rho"].get<std::vector<double>>();
      rc.folds = r.value("folds", rc.folds);
      rc.repeats = r.value("repeats", rc.repeats);
      rc.tied_lambda = r.value("tied_lambda", rc.tied_lambda);
      if (rc.rho.empty() || rc.lambda_count == 0) fail(ErrorCode::GridEmpty, "regression grids must be nonempty");
      for (double v : rc.rho)
        if (!(v >= 0.0)) fail(ErrorCode::ConfigInvalid, "regression.rho values must be >= 0");
      if (rc.folds < 2 || rc.repeats < 1) fail(ErrorCode::ConfigInvalid, "regression needs folds >= 2, repeats >= 1");
      c.regression = rc;
    }
    if (j.contains("external_scores")) {
      for (const auto& e : j["external_scores"]) {
        allowed_keys(e, {"name", "path"}, "external_scores entry");
        c.external_scores.push_back({e.at("name").get<std::string>(), existing_path(e.at("path"), base_dir, "external score")});
      }
    }
    if (j.contains("simulate")) c.simulate = parse_simulate(j["simulate"]);
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigInvalid, std::string("config: ") + e.what());
  }
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorCode::ConfigInvalid, "config file not found: " + path.string());
  return parse_config(read_text_file(path), path.parent_path());
}

std::vector<View> load_views(const PipelineConfig& config) {
  if (config.views.empty()) fail(ErrorCode::ConfigInvalid, "config declares no views");
  std::vector<View> out;
  for (const auto& v : config.views) {
    switch (v.kind) {
      case ViewSpec::Kind::Matrix:
        out.push_back({v.name, read_matrix_csv(v.matrix)});
        break;
      case ViewSpec::Kind::Aggregate:
        out.push_back({v.name, aggregate_view(v.aggregate, config.threads).features});
        break;
      case ViewSpec::Kind::Patches:
        out.push_back({v.name, patch_view(v, config.seed, config.threads).features});
        break;
    }
  }
  return out;
}

PreparedData prepare(const PipelineConfig& config) {
  PreparedData d;
  std::vector<View> all = load_views(config);
  const std::size_t n_views = all.size();
  if (config.regression) all.push_back({"__response", score_as_matrix(read_score_csv(config.regression->response), "y")});
  for (const auto& e : config.external_scores) all.push_back({"__external", score_as_matrix(read_score_csv(e.path), e.name)});
  std::vector<View> shared = intersect_units(all, &d.dropped_units);
  if (shared.front().data.rows() < 2) fail(ErrorCode::UnitMismatch, "fewer than two units are shared by all inputs");
  if (!d.dropped_units.empty()) {
    d.warnings.push_back(std::to_string(d.dropped_units.size()) + " unit(s) missing from some input were dropped");
  }
  for (std::size_t i = 0; i < n_views; ++i) {
    const PreprocessConfig& p = config.views[i].preprocess ? *config.views[i].preprocess : config.preprocess;
    d.views.push_back({shared[i].name, preprocess(shared[i].data, p)});
  }
  std::size_t next = n_views;
  if (config.regression) d.response = shared[next++].data.values().col(0);
  for (const auto& e : config.external_scores) d.external.emplace_back(e.name, shared[next++].data.values().col(0));
  return d;
}

void run_ranks(const PipelineConfig& config) {
  const PreparedData data = prepare(config);
  const RankStage s = decompose(config, data);
  write_rank_artifacts(config, data, s);
  write_provenance(config, &data, "ranks");
}

void run_ajive(const PipelineConfig& config) {
  const PreparedData data = prepare(config);
  const RankStage s = decompose(config, data);
  write_rank_artifacts(config, data, s);
  write_ajive_artifacts(config, data, s.result);
  write_provenance(config, &data, "ajive");
}

void run_pca(const PipelineConfig& config) {
  const PreparedData data = prepare(config);
  write_pca_artifacts(config, data, compute_pca(config, data, config.pca_components));
  write_provenance(config, &data, "pca");
}

void run_regress(const PipelineConfig& config) {
  const PreparedData data = prepare(config);
  regress(config, data, nullptr);
  write_provenance(config, &data, "regress");
}

void run_aggregate(const PipelineConfig& config) {
  bool any = false;
  for (const auto& v : config.views) {
    if (v.kind != ViewSpec::Kind::Aggregate) continue;
    any = true;
    const AggregateOutput a = aggregate_view(v.aggregate, config.threads);
    write_matrix_csv(config.output_dir / (v.name + "_features.csv"), a.features);
    geo::write_overlap_csv(config.output_dir / (v.name + "_overlap.csv"), a.gamma);
    write_text_file(config.output_dir / (v.name + "_cells.geojson"), geo::regions_to_geojson(a.cells));
  }
  if (!any) fail(ErrorCode::ConfigInvalid, "config declares no aggregate views");
  write_provenance(config, nullptr, "aggregate");
}

void run_patches(const PipelineConfig& config) {
  bool any = false;
  for (const auto& v : config.views) {
    if (v.kind != ViewSpec::Kind::Patches) continue;
    any = true;
    const ImageFeatures f = patch_view(v, config.seed, config.threads);
    write_matrix_csv(config.output_dir / (v.name + "_features.csv"), f.features);
    write_patch_manifest(config.output_dir / (v.name + "_manifest.csv"), f.manifest);
  }
  if (!any) fail(ErrorCode::ConfigInvalid, "config declares no patch views");
  write_provenance(config, nullptr, "patches");
}

void run_simulate(const PipelineConfig& config) {
  if (!config.simulate) fail(ErrorCode::ConfigInvalid, "config has no simulate section");
  SynthSpec spec = config.simulate->spec;
  spec.seed = config.seed;
  const SynthTruth t = generate(spec);
  const fs::path& out = config.output_dir;

  json views = json::array();
  for (const auto& v : t.views) {
    write_matrix_csv(out / (v.name + ".csv"), v.data);
    views.push_back({{"name", v.name}, {"matrix", v.name + ".csv"}});
  }
  const auto& ids = t.views.front().data.unit_ids();
  write_scores(out / "truth_joint_scores.csv", ids, "unit_id", numbered("JC", t.joint_scores.cols()), t.joint_scores);
  for (std::size_t i = 0; i < t.views.size(); ++i) {
    write_scores(out / ("truth_individual_scores_" + t.views[i].name + ".csv"), ids, "unit_id",
                 numbered("IC", t.individual_scores[i].cols()), t.individual_scores[i]);
  }
  json truth;
  truth["n"] = spec.n;
  truth["p"] = spec.p;
  truth["joint_rank"] = spec.joint_rank;
  truth["individual_ranks"] = spec.individual_ranks;
  truth["joint_strengths"] = spec.joint_strengths;
  truth["individual_strengths"] = spec.individual_strengths;
  truth["individual_decay"] = spec.individual_decay;
  truth["noise_sd"] = spec.noise_sd;
  truth["snr_definition"] = "joint_strength / (noise_sd * sqrt(max(n, p_i)))";
  std::vector<double> snr;
  for (std::size_t i = 0; i < spec.p.size(); ++i) snr.push_back(snr_of(spec, i));
  truth["snr"] = snr;
  truth["seed"] = config.seed;

  json pipeline;
  pipeline["seed"] = config.seed;
  pipeline["output_dir"] = "run";
  pipeline["views"] = views;
  if (t.response) {
    CsvTable r;
    r.header = {"unit_id", "y"};
    for (Index i = 0; i < t.response->size(); ++i) {
      r.rows.push_back({ids[static_cast<std::size_t>(i)], format_double((*t.response)(i))});
    }
    write_csv_table(out / "response.csv", r);
    truth["response_weights"] = spec.response->weights;
    truth["response_noise_sd"] = spec.response->noise_sd;
    pipeline["regression"] = {{"response", "response.csv"}, {"source", "ajive"},
                              {"total_components", spec.joint_rank + std::accumulate(spec.individual_ranks.begin(), spec.individual_ranks.end(), Index{0})},
                              {"rho", {0.0, 0.5, 1.0}}, {"folds", 10}, {"repeats", 2}};
  }
  write_json(out / "truth.json", truth);
  write_json(out / "pipeline.json", pipeline);
  write_provenance(config, nullptr, "simulate");
}

void run_pipeline(const PipelineConfig& config) {
  const PreparedData data = prepare(config);
  const RankStage s = decompose(config, data);
  write_rank_artifacts(config, data, s);
  write_ajive_artifacts(config, data, s.result);
  const PcaStage p = compute_pca(config, data, config.pca_components);
  write_pca_artifacts(config, data, p);
  write_correlations(config, data, s.result, p);
  if (config.regression) regress(config, data, &s.result);
  write_provenance(config, &data, "run");
}

Extremes extremes(const FeatureMatrix& scores, const std::string& component, std::size_t k) {
  const auto& names = scores.feature_names();
  const auto it = std::find(names.begin(), names.end(), component);
  if (it == names.end()) fail(ErrorCode::UnknownComponent, "no component '" + component + "'");
  const Index col = it - names.begin();
  const auto n = static_cast<std::size_t>(scores.rows());
  if (k < 1 || k > n) fail(ErrorCode::InvalidArgument, "k must be between 1 and the number of units");
  std::vector<ScoredUnit> all;
  for (std::size_t i = 0; i < n; ++i) all.push_back({scores.unit_ids()[i], scores.values()(static_cast<Index>(i), col)});
  Extremes out;
  std::vector<ScoredUnit> desc = all;
  std::sort(desc.begin(), desc.end(), [](const ScoredUnit& a, const ScoredUnit& b) {
    return a.score > b.score || (a.score == b.score && a.unit_id < b.unit_id);
  });
  std::sort(all.begin(), all.end(), [](const ScoredUnit& a, const ScoredUnit& b) {
    return a.score < b.score || (a.score == b.score && a.unit_id < b.unit_id);
  });
  out.top.assign(desc.begin(), desc.begin() + static_cast<std::ptrdiff_t>(k));
  out.bottom.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
  return out;
}

Extremes extremes(const fs::path& scores_csv, const std::string& component, std::size_t k) {
  return extremes(read_matrix_csv(scores_csv), component, k);
}

}  // namespace mvkit
