#include "rsdr/run.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rsdr/csv.hpp"
#include "rsdr/simulate.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "rsdr_cli_test";
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) { return (dir_ / name).string(); }

  std::string model_c_csv() {
    rsdr::ModelSpec spec;
    spec.model = rsdr::Model::C;
    spec.n = 80;
    spec.p = 6;
    spec.seed = 17;
    const auto [data, truth] = rsdr::generate(spec);
    const auto file = path("model_c.csv");
    rsdr::write_dataset_csv(file, data);
    return file;
  }

  fs::path dir_;
};

TEST_F(CliTest, FitProducesStructuredResult) {
  rsdr::RunConfig config;
  config.subcommand = "fit";
  config.input = model_c_csv();
  config.response = "y";
  config.dim = 1;
  config.alpha = "0.5";
  config.output = path("fit.json");
  std::ostringstream diag;
  ASSERT_EQ(rsdr::run(config, std::cout, diag), 0) << diag.str();

  const auto doc = nlohmann::json::parse(slurp(config.output));
  EXPECT_EQ(doc["meta"]["subcommand"], "fit");
  ASSERT_TRUE(doc["result"].contains("beta_hat"));
  EXPECT_EQ(doc["result"]["beta_hat"].size(), 6u);  // p rows
  EXPECT_EQ(doc["result"]["alpha_used"], 0.5);
  const auto trace = doc["result"]["trace"]["objective_values"];
  ASSERT_GE(trace.size(), 1u);
  for (std::size_t i = 1; i < trace.size(); ++i)
    EXPECT_GE(double(trace[i]) + 1e-12, double(trace[i - 1]));
  EXPECT_FALSE(doc.contains("timing"));  // deterministic by default
}

TEST_F(CliTest, FitRejectsOversizedDimensionWithExitCode1) {
  rsdr::RunConfig config;
  config.subcommand = "fit";
  config.input = model_c_csv();
  config.response = "y";
  config.dim = 10;  // p = 6
  config.alpha = "1";
  std::ostringstream out, diag;
  EXPECT_EQ(rsdr::run(config, out, diag), 1);
  EXPECT_NE(diag.str().find("error"), std::string::npos);
}

TEST_F(CliTest, SingularCovarianceGivesExitCode2) {
  // p > n with an explicit zero ridge is a numerical failure.
  rsdr::Dataset data;
  data.X = Eigen::MatrixXd::Random(4, 8);
  data.Y = Eigen::VectorXd::Random(4);
  const auto file = path("wide.csv");
  rsdr::write_dataset_csv(file, data);
  rsdr::RunConfig config;
  config.subcommand = "fit";
  config.input = file;
  config.response = "y";
  config.dim = 1;
  config.alpha = "1";
  config.ridge = 0.0;
  std::ostringstream out, diag;
  EXPECT_EQ(rsdr::run(config, out, diag), 2);
  EXPECT_NE(diag.str().find("numerical"), std::string::npos);
}

TEST_F(CliTest, SimulateIsByteIdenticalAcrossRunsAndThreadCounts) {
  rsdr::RunConfig config;
  config.subcommand = "simulate";
  config.model = "A";
  config.dist = "gaussian";
  config.n = 60;
  config.p = 5;
  config.reps = 4;
  config.alpha = "1";
  config.seed = 7;
  config.output = path("sim1.json");
  std::ostringstream diag;
  ASSERT_EQ(rsdr::run(config, std::cout, diag), 0) << diag.str();
  config.output = path("sim2.json");
  ASSERT_EQ(rsdr::run(config, std::cout, diag), 0);
  config.output = path("sim3.json");
  config.threads = 4;
  ASSERT_EQ(rsdr::run(config, std::cout, diag), 0);

  const std::string first = slurp(path("sim1.json"));
  EXPECT_EQ(first, slurp(path("sim2.json")));
  EXPECT_EQ(first, slurp(path("sim3.json")));
  EXPECT_FALSE(first.empty());
}

TEST_F(CliTest, SimulateWritesTableAndDataset) {
  rsdr::RunConfig config;
  config.subcommand = "simulate";
  config.model = "C";
  config.n = 50;
  config.p = 5;
  config.reps = 2;
  config.alpha = "0.5,1";
  config.seed = 3;
  config.output = path("sim.json");
  config.table = path("table.csv");
  config.write_data = path("data.csv");
  std::ostringstream diag;
  ASSERT_EQ(rsdr::run(config, std::cout, diag), 0) << diag.str();

  const std::string table = slurp(config.table);
  EXPECT_NE(table.find("label,angle_mean,angle_sd,time_mean_s,time_sd_s,reps"),
            std::string::npos);
  EXPECT_NE(table.find("C1-rsdr-a0.5"), std::string::npos);
  EXPECT_NE(table.find("C1-rsdr-a1"), std::string::npos);

  // The emitted dataset is immediately consumable by fit.
  const auto loaded = rsdr::load_csv(config.write_data, "y", false);
  EXPECT_EQ(loaded.data.n(), 50);
  EXPECT_EQ(loaded.data.p(), 5);
}

TEST_F(CliTest, EmptyReportStillEmitsHeaderOnlyTable) {
  rsdr::ReplicationReport empty;
  const auto file = path("empty.csv");
  rsdr::emit_table(empty, file, "A1", false);
  EXPECT_EQ(slurp(file), "label,angle_mean,angle_sd,time_mean_s,time_sd_s,reps\n");
}

TEST_F(CliTest, RocSubcommandMatchesHandValues) {
  const auto file = path("roc.csv");
  {
    std::ofstream out(file);
    out << "score,label\n0.9,1\n0.8,1\n0.7,0\n0.6,1\n0.5,0\n0.4,0\n";
  }
  rsdr::RunConfig config;
  config.subcommand = "roc";
  config.input = file;
  config.response = "label";
  config.score = "score";
  config.output = path("roc.json");
  config.table = path("roc_points.csv");
  std::ostringstream diag;
  ASSERT_EQ(rsdr::run(config, std::cout, diag), 0) << diag.str();
  const auto doc = nlohmann::json::parse(slurp(config.output));
  EXPECT_NEAR(double(doc["result"]["auc"]), 8.0 / 9.0, 1e-12);
  const std::string points = slurp(config.table);
  EXPECT_NE(points.find("fpr,tpr"), std::string::npos);

  // Non-binary labels are rejected.
  rsdr::RunConfig bad = config;
  bad.response = "score";
  bad.score = "label";
  std::ostringstream out2, diag2;
  EXPECT_EQ(rsdr::run(bad, out2, diag2), 1);
}

TEST_F(CliTest, OutliersSubcommandFlagsConsistent) {
  rsdr::RandomStream rng(700, "cli-outliers");
  rsdr::Dataset data;
  data.X.resize(30, 3);
  data.Y.resize(30);
  for (int i = 0; i < 30; ++i) {
    for (int j = 0; j < 3; ++j) data.X(i, j) = rng.normal();
    data.Y(i) = data.X(i, 0) + 0.2 * rng.normal();
  }
  data.Y(5) = 100.0;
  const auto file = path("outliers.csv");
  rsdr::write_dataset_csv(file, data);

  rsdr::RunConfig config;
  config.subcommand = "outliers";
  config.input = file;
  config.response = "y";
  config.gamma = 0.1;
  config.boot = 20;
  config.reducer = "none";
  config.output = path("outliers.json");
  std::ostringstream diag;
  ASSERT_EQ(rsdr::run(config, std::cout, diag), 0) << diag.str();
  const auto doc = nlohmann::json::parse(slurp(config.output));
  const auto scores = doc["result"]["scores"];
  const auto flags = doc["result"]["flags"];
  const double threshold = doc["result"]["threshold"];
  ASSERT_EQ(scores.size(), 30u);
  for (std::size_t i = 0; i < scores.size(); ++i)
    EXPECT_EQ(flags[i] == 1, double(scores[i]) > threshold);
}

TEST_F(CliTest, ConfigFileKeysApplyAndFlagsOverride) {
  // Exercise every config key; then check per key that a CLI value wins.
  const std::map<std::string, std::string> file_values = {
      {"input", "from_file.csv"}, {"output", "out.json"},
      {"table", "t.csv"},         {"write-data", "d.csv"},
      {"response", "resp"},       {"score", "s"},
      {"standardize", "true"},    {"dim", "3"},
      {"alpha", "0.7"},           {"eta", "1e-5"},
      {"tol", "1e-7"},            {"max-iter", "123"},
      {"ridge", "0.5"},           {"grid", "0.2,0.4"},
      {"folds", "4"},             {"gamma", "0.2"},
      {"boot", "55"},             {"reducer", "pca"},
      {"model", "B"},             {"dist", "uniform"},
      {"n", "77"},                {"p", "9"},
      {"contaminate", "true"},    {"reps", "13"},
      {"seed", "99"},             {"threads", "3"},
      {"timings", "true"},
  };

  {  // all keys land when nothing was set on the command line
    rsdr::RunConfig config;
    rsdr::apply_config_values(config, file_values, {});
    EXPECT_EQ(config.input, "from_file.csv");
    EXPECT_EQ(config.output, "out.json");
    EXPECT_EQ(config.table, "t.csv");
    EXPECT_EQ(config.write_data, "d.csv");
    EXPECT_EQ(config.response, "resp");
    EXPECT_EQ(config.score, "s");
    EXPECT_TRUE(config.standardize);
    EXPECT_EQ(config.dim, 3);
    EXPECT_EQ(config.alpha, "0.7");
    EXPECT_EQ(config.eta, 1e-5);
    EXPECT_EQ(config.tol, 1e-7);
    EXPECT_EQ(config.max_iter, 123);
    EXPECT_EQ(config.ridge, 0.5);
    EXPECT_EQ(config.grid, "0.2,0.4");
    EXPECT_EQ(config.folds, 4);
    EXPECT_EQ(config.gamma, 0.2);
    EXPECT_EQ(config.boot, 55);
    EXPECT_EQ(config.reducer, "pca");
    EXPECT_EQ(config.model, "B");
    EXPECT_EQ(config.dist, "uniform");
    EXPECT_EQ(config.n, 77);
    EXPECT_EQ(config.p, 9);
    EXPECT_TRUE(config.contaminate);
    EXPECT_EQ(config.reps, 13);
    EXPECT_EQ(config.seed, 99u);
    EXPECT_EQ(config.threads, 3);
    EXPECT_TRUE(config.timings);
  }

  // Per key: mark the key as CLI-set and confirm the file value is ignored.
  for (const auto& [key, value] : file_values) {
    rsdr::RunConfig defaults;
    rsdr::RunConfig config;
    rsdr::apply_config_values(config, {{key, value}}, {key});
    rsdr::RunConfig untouched;
    rsdr::apply_config_values(untouched, {}, {});
    // With the key claimed by the CLI, nothing may change.
    EXPECT_EQ(config.input, defaults.input) << key;
    EXPECT_EQ(config.alpha, defaults.alpha) << key;
    EXPECT_EQ(config.seed, defaults.seed) << key;
    EXPECT_EQ(config.n, defaults.n) << key;
    EXPECT_EQ(config.timings, defaults.timings) << key;
    EXPECT_EQ(config.reducer, defaults.reducer) << key;
  }

  rsdr::RunConfig config;
  EXPECT_THROW(rsdr::apply_config_values(config, {{"bogus", "1"}}, {}),
               rsdr::ParameterError);
}

TEST_F(CliTest, ConfigFileParsing) {
  const auto file = path("run.conf");
  {
    std::ofstream out(file);
    out << "# comment line\n"
        << "model = B\n"
        << "n = 44  # trailing comment\n"
        << "\n"
        << "contaminate = true\n";
  }
  const auto values = rsdr::parse_config_file(file);
  EXPECT_EQ(values.at("model"), "B");
  EXPECT_EQ(values.at("n"), "44");
  EXPECT_EQ(values.at("contaminate"), "true");

  const auto bad = path("bad.conf");
  {
    std::ofstream out(bad);
    out << "no equals sign here\n";
  }
  EXPECT_THROW(rsdr::parse_config_file(bad), rsdr::InputError);
  {
    std::ofstream out(bad);
    out << "unknown-key = 1\n";
  }
  EXPECT_THROW(rsdr::parse_config_file(bad), rsdr::ParameterError);
}

// ---- end-to-end through the installed binary ----

int run_binary(const std::string& args) {
  const std::string command = std::string(RSDR_CLI_BIN) + " " + args;
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

TEST_F(CliTest, BinaryEndToEnd) {
  const auto data = model_c_csv();
  const auto out1 = path("bin_fit1.json");
  const auto out2 = path("bin_fit2.json");
  EXPECT_EQ(run_binary("fit --input " + data + " --response y --dim 1 --alpha 0.5 --seed 3 --output " + out1 + " 2>/dev/null"),
            0);
  EXPECT_EQ(run_binary("fit --input " + data + " --response y --dim 1 --alpha 0.5 --seed 3 --output " + out2 + " 2>/dev/null"),
            0);
  EXPECT_EQ(slurp(out1), slurp(out2));

  // Flag beats config file for the same key.
  const auto conf = path("bin.conf");
  {
    std::ofstream out(conf);
    out << "alpha = 0.9\nseed = 3\n";
  }
  const auto out3 = path("bin_fit3.json");
  EXPECT_EQ(run_binary("fit --input " + data + " --response y --dim 1 --alpha 0.5 --config " + conf + " --output " + out3 + " 2>/dev/null"),
            0);
  const auto doc = nlohmann::json::parse(slurp(out3));
  EXPECT_EQ(doc["result"]["alpha_used"], 0.5);

  // Validation failure -> exit 1; numerical failure -> exit 2.
  EXPECT_EQ(run_binary("fit --input " + data + " --response y --dim 99 2>/dev/null"), 1);
  EXPECT_EQ(run_binary("fit --input missing_file.csv --response y 2>/dev/null"), 1);
  rsdr::Dataset wide;
  wide.X = Eigen::MatrixXd::Random(4, 8);
  wide.Y = Eigen::VectorXd::Random(4);
  const auto wide_csv = path("bin_wide.csv");
  rsdr::write_dataset_csv(wide_csv, wide);
  EXPECT_EQ(run_binary("fit --input " + wide_csv + " --response y --ridge 0 2>/dev/null"), 2);

  // Help succeeds.
  EXPECT_EQ(run_binary("--help > /dev/null 2>&1"), 0);
}

TEST_F(CliTest, BinaryAcceptsCvMethodsAndRsdrReducer) {
  // Cross-validated alpha as a simulate method, with a custom grid.
  const auto sim_out = path("bin_sim_cv.json");
  ASSERT_EQ(run_binary("simulate --model C --n 40 --p 5 --reps 1 --alpha cv "
                       "--grid 0.4,0.8 --seed 2 --output " +
                       sim_out + " 2>/dev/null"),
            0);
  const auto sim_doc = nlohmann::json::parse(slurp(sim_out));
  EXPECT_EQ(sim_doc["result"]["methods"][0]["label"], "rsdr-cv");

  // Outlier detection with the rsdr reducer on a generated dataset.
  const auto data_csv = path("bin_ar1.csv");
  const auto [data, flags] = rsdr::generate_ar1_outlier_data(50, 20, 5, 4);
  rsdr::write_dataset_csv(data_csv, data);
  const auto out_json = path("bin_outliers.json");
  ASSERT_EQ(run_binary("outliers --input " + data_csv +
                       " --response y --reducer rsdr --dim 2 --alpha 0.5 "
                       "--gamma 0.1 --boot 10 --seed 6 --output " +
                       out_json + " 2>/dev/null"),
            0);
  const auto doc = nlohmann::json::parse(slurp(out_json));
  EXPECT_EQ(doc["result"]["scores"].size(), 50u);
}

}  // namespace
