// Runs the built command-line tool end to end.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  static fs::path dir;

  static void SetUpTestSuite() {
    dir = fs::temp_directory_path() / ("vmap_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    ASSERT_EQ(run("synth --out " + p("obs.csv") + " --split-out " + p("split.txt")), 0);
  }
  static void TearDownTestSuite() { fs::remove_all(dir); }

  static std::string p(const std::string& name) { return (dir / name).string(); }

  static int run(const std::string& args) {
    const std::string cmd = std::string(VMAP_CLI_PATH) + " " + args + " >" + p("stdout.txt") + " 2>" + p("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  static std::vector<std::string> lines(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
  }

  static void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

  static constexpr const char* kRunsHeader =
      "io_mode,io_scheduler,vm_io_scheduler,frequency_ghz,threads,file_size_kb,record_size_kb,throughput_kb_s\n";
};

fs::path Cli::dir;

}  // namespace

TEST_F(Cli, IngestReducesGroupsDeterministically) {
  write(p("runs.csv"), std::string(kRunsHeader) +
                           "Fread,CFQ,NOOP,2.0,16,1024,32,100\n"
                           "Fread,CFQ,NOOP,2.0,16,1024,32,102\n"
                           "Fread,CFQ,NOOP,2.5,16,1024,32,90\n"
                           "Fread,CFQ,NOOP,2.5,16,1024,32,95\n"
                           "Fread,CFQ,NOOP,2.5,16,1024,32,97\n"
                           "Fwrite,DEAD,CFQ,1.2,1,64,64,10\n"
                           "Fwrite,DEAD,CFQ,1.2,1,64,64,10\n");
  ASSERT_EQ(run("ingest " + p("runs.csv") + " --out " + p("ingested.csv")), 0) << slurp(p("stderr.txt"));
  const auto rows = lines(p("ingested.csv"));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], "io_mode,io_scheduler,vm_io_scheduler,frequency_ghz,threads,file_size_kb,record_size_kb,n_runs,"
                     "mean_throughput_kb_s,pvm_kb_s");
  EXPECT_TRUE(fs::exists(p("ingested.csv.manifest.json")));

  const std::string first = slurp(p("ingested.csv"));
  ASSERT_EQ(run("ingest " + p("runs.csv") + " --out " + p("ingested.csv")), 0);
  EXPECT_EQ(slurp(p("ingested.csv")), first);
}

TEST_F(Cli, IngestRejectsSingleRunGroupsAndBadValues) {
  write(p("single.csv"), std::string(kRunsHeader) + "Fread,CFQ,NOOP,2.5,16,1024,32,100\n");
  EXPECT_NE(run("ingest " + p("single.csv") + " --out " + p("x.csv")), 0);
  EXPECT_NE(slurp(p("stderr.txt")).find("2.5"), std::string::npos);

  write(p("badrec.csv"), std::string(kRunsHeader) + "Fread,CFQ,NOOP,2.5,16,64,48,100\nFread,CFQ,NOOP,2.5,16,64,48,90\n");
  EXPECT_NE(run("ingest " + p("badrec.csv") + " --out " + p("x.csv")), 0);
  EXPECT_NE(slurp(p("stderr.txt")).find("line 2"), std::string::npos);
}

TEST_F(Cli, SynthRunsIngestToTheSameObservations) {
  ASSERT_EQ(run("synth --runs --out " + p("runs_synth.csv")), 0);
  ASSERT_EQ(run("ingest " + p("runs_synth.csv") + " --out " + p("obs_from_runs.csv")), 0);
  EXPECT_EQ(lines(p("obs_from_runs.csv")).size(), lines(p("obs.csv")).size());
}

TEST_F(Cli, EvaluateWritesOneRowPerMethodAndIsDeterministic) {
  const std::string args = "evaluate " + p("obs.csv") + " --methods LM,LSP,MARS --split-spec " + p("split.txt");
  ASSERT_EQ(run(args + " --out " + p("eval1")), 0) << slurp(p("stderr.txt"));
  const auto report = lines(p("eval1/report.csv"));
  ASSERT_EQ(report.size(), 4u);
  EXPECT_EQ(report[0], "method,mode,n,er1,rmse,er2,mae,er3");
  EXPECT_EQ(report[1].rfind("LM,interpolation,", 0), 0u);
  EXPECT_TRUE(fs::exists(p("eval1/ratios.csv")));
  EXPECT_TRUE(fs::exists(p("eval1/report.csv.manifest.json")));

  ASSERT_EQ(run(args + " --jobs 3 --out " + p("eval2")), 0);
  EXPECT_EQ(slurp(p("eval1/report.csv")), slurp(p("eval2/report.csv")));
  EXPECT_EQ(slurp(p("eval1/ratios.csv")), slurp(p("eval2/ratios.csv")));

  const auto manifest = nlohmann::json::parse(slurp(p("eval1/report.csv.manifest.json")));
  EXPECT_EQ(manifest.at("command"), "evaluate");
  EXPECT_EQ(manifest.at("seed"), 20190723);
}

TEST_F(Cli, ExtrapolationUsesRawScale) {
  ASSERT_EQ(run("evaluate " + p("obs.csv") + " --methods LM --mode extrapolation --split-spec " + p("split.txt") +
                " --out " + p("extra")),
            0);
  const auto manifest = nlohmann::json::parse(slurp(p("extra/report.csv.manifest.json")));
  EXPECT_EQ(manifest.at("settings").at("response_scale"), "raw");
  EXPECT_EQ(lines(p("extra/report.csv")).size(), 2u);
}

TEST_F(Cli, UnknownMethodOrMissingInputFails) {
  EXPECT_NE(run("evaluate " + p("obs.csv") + " --methods LM,TGP --split-spec " + p("split.txt") + " --out " +
                p("bad")),
            0);
  EXPECT_NE(run("evaluate " + p("missing.csv") + " --out " + p("bad")), 0);
  EXPECT_NE(run("frobnicate"), 0);
}

TEST_F(Cli, OptimizeWritesThirteenRows) {
  write(p("problem.cfg"), "budget = 200\n");
  ASSERT_EQ(run("optimize " + p("obs.csv") + " --config " + p("problem.cfg") + " --out " + p("opt.csv")), 0)
      << slurp(p("stderr.txt"));
  const auto rows = lines(p("opt.csv"));
  ASSERT_EQ(rows.size(), 14u);
  EXPECT_EQ(rows[1].rfind("Fread,", 0), 0u);
  EXPECT_TRUE(fs::exists(p("opt.csv.manifest.json")));

  write(p("tiny.cfg"), "budget = 1\nm0_rule = fixed:1e15\n");
  ASSERT_EQ(run("optimize " + p("obs.csv") + " --config " + p("tiny.cfg") + " --out " + p("opt_inf.csv")), 0);
  for (const auto& row : lines(p("opt_inf.csv"))) EXPECT_EQ(row.find(",true,"), std::string::npos) << row;

  write(p("broken.cfg"), "budget = many\n");
  EXPECT_NE(run("optimize " + p("obs.csv") + " --config " + p("broken.cfg") + " --out " + p("x.csv")), 0);
}

TEST_F(Cli, FitPredictAndPlotData) {
  ASSERT_EQ(run("fit " + p("obs.csv") + " --methods LSP,MARS --out " + p("models.json")), 0) << slurp(p("stderr.txt"));
  const auto bundle = nlohmann::json::parse(slurp(p("models.json")));
  EXPECT_EQ(bundle.at("format"), "vmap-bundle");
  EXPECT_EQ(bundle.at("models").size(), 2u * 18u);  // two modes, nine scheduler pairs

  write(p("configs.csv"),
        "io_mode,io_scheduler,vm_io_scheduler,frequency_ghz,threads,file_size_kb,record_size_kb\n"
        "Fread,NOOP,NOOP,2.0,16,1024,32\n"
        "Fwrite,CFQ,DEAD,1.6,4,64,32\n");
  ASSERT_EQ(run("predict " + p("models.json") + " " + p("configs.csv") + " --out " + p("pred.csv")), 0)
      << slurp(p("stderr.txt"));
  EXPECT_EQ(lines(p("pred.csv")).size(), 1u + 2u * 2u);

  write(p("unknown_map.csv"),
        "io_mode,io_scheduler,vm_io_scheduler,frequency_ghz,threads,file_size_kb,record_size_kb\n"
        "Pread,NOOP,NOOP,2.0,16,1024,32\n");
  EXPECT_NE(run("predict " + p("models.json") + " " + p("unknown_map.csv") + " --out " + p("x.csv")), 0);

  ASSERT_EQ(run("export-plot-data " + p("models.json") + " --key Fread/NOOP/NOOP --points 7 --out " + p("plot.csv")),
            0)
      << slurp(p("stderr.txt"));
  EXPECT_EQ(lines(p("plot.csv")).size(), 1u + 2u * 49u);
  EXPECT_NE(run("export-plot-data " + p("models.json") + " --key Fread/NOOP --out " + p("x.csv")), 0);
}
