#include "mvkit/csv.hpp"
#include "mvkit/error.hpp"
#include "mvkit/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

int exit_code_for(mvkit::ErrorCategory c) {
  switch (c) {
    case mvkit::ErrorCategory::Config:
      return kExitConfig;
    case mvkit::ErrorCategory::Data:
      return kExitData;
    case mvkit::ErrorCategory::Numerical:
      return kExitNumerical;
  }
  return kExitData;
}

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config, "JSON pipeline config")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", f.seed, "master seed (overrides the config)");
  sub->add_option("--out", f.out, "output directory (overrides the config)");
  sub->add_option("--threads", f.threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
}

mvkit::PipelineConfig resolve(const CommonFlags& f) {
  mvkit::PipelineConfig c = mvkit::load_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (!f.out.empty()) c.output_dir = f.out;
  if (f.threads) c.threads = *f.threads;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiview joint/individual decomposition and cooperative regression"};
  app.require_subcommand(1);

  CommonFlags flags;
  struct Entry {
    const char* name;
    const char* help;
    void (*fn)(const mvkit::PipelineConfig&);
  };
  const Entry entries[] = {
      {"run", "full pipeline: ranks, decomposition, PCA, correlations, regression", mvkit::run_pipeline},
      {"ranks", "scree data and joint/individual rank selection", mvkit::run_ranks},
      {"ajive", "joint and individual scores and loadings", mvkit::run_ajive},
      {"pca", "per-view and concatenated PCA", mvkit::run_pca},
      {"regress", "cross-validated cooperative regression", mvkit::run_regress},
      {"simulate", "synthetic views with planted structure", mvkit::run_simulate},
      {"aggregate", "Voronoi areal aggregation of site features", mvkit::run_aggregate},
      {"patches", "image patch sampling and embedding", mvkit::run_patches},
  };
  std::vector<std::pair<CLI::App*, const Entry*>> subs;
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    add_common(sub, flags);
    subs.emplace_back(sub, &e);
  }

  std::string scores_path;
  std::string component;
  std::size_t k = 2;
  CLI::App* ext = app.add_subcommand("extremes", "most positive and most negative units of one score column");
  ext->add_option("--scores", scores_path, "score CSV (unit_id, components...)")->required()->check(CLI::ExistingFile);
  ext->add_option("--component", component, "column name, e.g. JC1")->required();
  ext->add_option("-k", k, "units per side")->check(CLI::PositiveNumber);
  std::string ext_out;
  ext->add_option("--out", ext_out, "write extremes.csv here instead of standard output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (ext->parsed()) {
      const mvkit::Extremes x = mvkit::extremes(std::filesystem::path(scores_path), component, k);
      mvkit::CsvTable t;
      t.header = {"side", "rank", "unit_id", "score"};
      for (std::size_t i = 0; i < x.top.size(); ++i) {
        t.rows.push_back({"top", std::to_string(i + 1), x.top[i].unit_id, mvkit::format_double(x.top[i].score)});
      }
      for (std::size_t i = 0; i < x.bottom.size(); ++i) {
        t.rows.push_back(
            {"bottom", std::to_string(i + 1), x.bottom[i].unit_id, mvkit::format_double(x.bottom[i].score)});
      }
      if (ext_out.empty()) {
        std::cout << "side,rank,unit_id,score\n";
        for (const auto& row : t.rows) std::cout << row[0] << ',' << row[1] << ',' << row[2] << ',' << row[3] << '\n';
      } else {
        mvkit::write_csv_table(std::filesystem::path(ext_out) / "extremes.csv", t);
      }
      return 0;
    }
    for (const auto& [sub, entry] : subs) {
      if (sub->parsed()) {
        entry->fn(resolve(flags));
        return 0;
      }
    }
  } catch (const mvkit::Error& e) {
    std::cerr << "mvkit: " << e.what() << '\n';
    return exit_code_for(e.category());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "mvkit: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "mvkit: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
