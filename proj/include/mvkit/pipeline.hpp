#pragma once

#include "mvkit/ajive.hpp"
#include "mvkit/coop_regress.hpp"
#include "mvkit/patch_features.hpp"
#include "mvkit/pca.hpp"
#include "mvkit/synthgen.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mvkit {

struct PreprocessConfig {
  std::vector<std::string> steps{"standardize"};  // applied in order: "winsorize", "standardize", "center"
  double winsor_lower = 0.01;
  double winsor_upper = 0.99;
};

struct AggregateRecipe {
  std::filesystem::path units;          // GeoJSON of observational units
  std::filesystem::path sites;          // CSV id,x,y
  std::filesystem::path boundary;       // GeoJSON, one polygon
  std::filesystem::path site_features;  // matrix CSV keyed by site id
};

struct PatchRecipe {
  std::filesystem::path images;  // CSV image_id,path (paths relative to this file)
  PatchOptions options;
};

struct ViewSpec {
  enum class Kind { Matrix, Aggregate, Patches };
  std::string name;
  Kind kind = Kind::Matrix;
  std::filesystem::path matrix;
  AggregateRecipe aggregate;
  PatchRecipe patches;
  std::optional<PreprocessConfig> preprocess;  // overrides the global one
};

struct RankConfig {
  bool auto_initial = true;
  std::vector<Index> initial;  // when not auto
  Index max_rank = 10;
  JointRankConfig joint;
};

struct RegressionConfig {
  std::filesystem::path response;
  std::string source = "ajive";  // raw | pca | ajive
  std::size_t total_components = 30;
  std::size_t lambda_count = 50;
  double lambda_ratio = 1e-3;
  std::vector<double> rho{0.0};
  std::size_t folds = 20;
  std::size_t repeats = 5;
  bool tied_lambda = true;
};

struct ExternalScore {
  std::string name;
  std::filesystem::path path;
};

struct SimulateConfig {
  SynthSpec spec;
  double snr = 10.0;  // joint strength follows from this unless strengths are given
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  unsigned threads = 1;
  std::vector<ViewSpec> views;
  PreprocessConfig preprocess;
  RankConfig ranks;
  Index pca_components = 5;
  std::optional<RegressionConfig> regression;
  std::vector<ExternalScore> external_scores;
  std::optional<SimulateConfig> simulate;
  std::string hash;  // FNV-1a of the config text, hex
};

/// JSON config; relative paths resolve against `base_dir`. Unknown keys and
/// missing files are ConfigInvalid.
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

/// Views as loaded (matrix, aggregation or patch recipes), before unit
/// intersection and preprocessing.
std::vector<View> load_views(const PipelineConfig& config);

/// Preprocessed views on the shared units, plus the aligned response and
/// external scores.
struct PreparedData {
  std::vector<View> views;
  std::optional<Vector> response;
  std::vector<std::pair<std::string, Vector>> external;
  std::vector<std::string> dropped_units;
  std::vector<std::string> warnings;
};
PreparedData prepare(const PipelineConfig& config);

/// Each writes its artifacts to config.output_dir and returns nothing;
/// every file name is fixed so runs can be compared byte for byte.
void run_ranks(const PipelineConfig& config);
void run_ajive(const PipelineConfig& config);
void run_pca(const PipelineConfig& config);
void run_regress(const PipelineConfig& config);
void run_aggregate(const PipelineConfig& config);
void run_patches(const PipelineConfig& config);
void run_simulate(const PipelineConfig& config);
void run_pipeline(const PipelineConfig& config);

struct ScoredUnit {
  std::string unit_id;
  double score = 0.0;
};
struct Extremes {
  std::vector<ScoredUnit> top;     // most positive first
  std::vector<ScoredUnit> bottom;  // most negative first
};
/// Top-k and bottom-k units of one score column; equal scores are ordered by
/// unit id. Throws UnknownComponent for a missing column.
Extremes extremes(const FeatureMatrix& scores, const std::string& component, std::size_t k);
Extremes extremes(const std::filesystem::path& scores_csv, const std::string& component, std::size_t k);

}  // namespace mvkit
