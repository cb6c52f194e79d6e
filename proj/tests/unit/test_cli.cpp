#include "mvkit/csv.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using mvkit::read_text_file;
using mvkit::write_text_file;

namespace {

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(MVKIT_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Small two-view synthetic study written by the simulate subcommand.
fs::path simulate_small(const std::string& name, std::uint64_t seed = 3) {
  const fs::path dir = mvkit::test::temp_dir(name);
  write_text_file(dir / "sim.json", R"({"seed": )" + std::to_string(seed) + R"(, "output_dir": "data",
    "simulate": {"preset": "paper", "n": 80, "p": [12, 40], "response": {"weights": [1.0, 0.5], "noise_sd": 0.5}}})");
  EXPECT_EQ(run_cli("simulate --config " + (dir / "sim.json").string(), dir / "sim.log"), 0)
      << read_text_file(dir / "sim.log");
  return dir;
}

}  // namespace

TEST(Cli, SimulateThenRunProducesArtifacts) {
  const fs::path dir = simulate_small("cli_run");
  const fs::path cfg = dir / "data" / "pipeline.json";
  ASSERT_TRUE(fs::exists(cfg));
  ASSERT_EQ(run_cli("run --config " + cfg.string(), dir / "run.log"), 0) << read_text_file(dir / "run.log");
  const fs::path out = dir / "data" / "run";
  for (const char* f : {"scree.csv", "ranks.json", "chosen_ranks.json", "joint_scores.csv", "sigma.json",
                        "variance.json", "correlations.csv", "cv_report.csv", "model.json", "provenance.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const auto ranks = nlohmann::json::parse(read_text_file(out / "chosen_ranks.json"));
  EXPECT_EQ(ranks["joint_rank"].get<int>(), 2);
  const auto prov = nlohmann::json::parse(read_text_file(out / "provenance.json"));
  EXPECT_EQ(prov["seed"].get<int>(), 3);
  EXPECT_TRUE(prov["dropped_units"].empty());
}

TEST(Cli, SubcommandsRunStandalone) {
  const fs::path dir = simulate_small("cli_sub");
  const fs::path cfg = dir / "data" / "pipeline.json";
  for (const char* sub : {"ranks", "ajive", "pca", "regress"}) {
    const fs::path out = dir / sub;
    EXPECT_EQ(run_cli(std::string(sub) + " --config " + cfg.string() + " --out " + out.string(), dir / "sub.log"), 0)
        << sub << ": " << read_text_file(dir / "sub.log");
    EXPECT_TRUE(fs::exists(out / "provenance.json")) << sub;
  }
  EXPECT_TRUE(fs::exists(dir / "ranks" / "bound_samples.csv"));
  EXPECT_TRUE(fs::exists(dir / "ajive" / "individual_scores_view1.csv"));
  EXPECT_TRUE(fs::exists(dir / "pca" / "pca_scores_view2.csv"));
  EXPECT_TRUE(fs::exists(dir / "regress" / "cv_report.csv"));
}

TEST(Cli, IdenticalOutputAcrossThreadCounts) {
  const fs::path dir = simulate_small("cli_threads");
  const fs::path cfg = dir / "data" / "pipeline.json";
  ASSERT_EQ(run_cli("run --config " + cfg.string() + " --threads 1 --out " + (dir / "t1").string(), dir / "a.log"), 0);
  ASSERT_EQ(run_cli("run --config " + cfg.string() + " --threads 3 --out " + (dir / "t3").string(), dir / "b.log"), 0);
  int compared = 0;
  for (const auto& e : fs::directory_iterator(dir / "t1")) {
    if (e.path().extension() != ".csv" && e.path().extension() != ".json") continue;
    EXPECT_EQ(read_text_file(e.path()), read_text_file(dir / "t3" / e.path().filename())) << e.path().filename();
    ++compared;
  }
  EXPECT_GT(compared, 10);
}

TEST(Cli, MismatchedUnitsAreDroppedAndRecorded) {
  const fs::path dir = simulate_small("cli_mismatch");
  const fs::path data = dir / "data";
  // Remove unit u5 from the second view only.
  std::istringstream in(read_text_file(data / "view2.csv"));
  std::string line, kept;
  while (std::getline(in, line))
    if (line.rfind("u5,", 0) != 0) kept += line + "\n";
  write_text_file(data / "view2.csv", kept);
  ASSERT_EQ(run_cli("ajive --config " + (data / "pipeline.json").string(), dir / "m.log"), 0)
      << read_text_file(dir / "m.log");
  const auto prov = nlohmann::json::parse(read_text_file(data / "run" / "provenance.json"));
  EXPECT_EQ(prov["dropped_units"], nlohmann::json::array({"u5"}));
  EXPECT_EQ(prov["n_units"].get<int>(), 79);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = mvkit::test::temp_dir("cli_exit");
  EXPECT_EQ(run_cli("run --config " + (dir / "missing.json").string(), dir / "l"), 2);
  write_text_file(dir / "bad.json", R"({"seed": 1, "bogus": true})");
  EXPECT_EQ(run_cli("run --config " + (dir / "bad.json").string(), dir / "l"), 2);
  EXPECT_NE(read_text_file(dir / "l").find("bogus"), std::string::npos);
  write_text_file(dir / "v.csv", "unit_id,a\nu1,1\nu2,x\n");
  write_text_file(dir / "data.json", R"({"views": [{"name": "a", "matrix": "v.csv"}, {"name": "b", "matrix": "v.csv"}]})");
  EXPECT_EQ(run_cli("run --config " + (dir / "data.json").string(), dir / "l"), 3);
  write_text_file(dir / "w.csv", "unit_id,a,b\nu1,1,2\nu2,2,4\nu3,3,6\n");
  write_text_file(dir / "rank.json", R"({"views": [{"name": "a", "matrix": "w.csv"}, {"name": "b", "matrix": "w.csv"}],
    "ranks": {"initial": [2, 2]}})");
  EXPECT_EQ(run_cli("ajive --config " + (dir / "rank.json").string(), dir / "l"), 3) << read_text_file(dir / "l");
  EXPECT_EQ(run_cli("frobnicate", dir / "l"), 2);
}

TEST(Cli, Extremes) {
  const fs::path dir = mvkit::test::temp_dir("cli_extremes");
  write_text_file(dir / "s.csv", "unit_id,JC1\na,3\nb,-1\nc,2\n");
  ASSERT_EQ(run_cli("extremes --scores " + (dir / "s.csv").string() + " --component JC1 -k 1 --out " + dir.string(),
                    dir / "l"),
            0);
  EXPECT_EQ(read_text_file(dir / "extremes.csv"), "side,rank,unit_id,score\ntop,1,a,3\nbottom,1,b,-1\n");

  write_text_file(dir / "t.csv", "unit_id,JC1\nz,1\ny,1\nx,0\n");
  ASSERT_EQ(run_cli("extremes --scores " + (dir / "t.csv").string() + " --component JC1 -k 2", dir / "out"), 0);
  EXPECT_EQ(read_text_file(dir / "out"), "side,rank,unit_id,score\ntop,1,y,1\ntop,2,z,1\nbottom,1,x,0\nbottom,2,y,1\n");

  EXPECT_EQ(run_cli("extremes --scores " + (dir / "s.csv").string() + " --component JC9", dir / "l"), 2);
}
