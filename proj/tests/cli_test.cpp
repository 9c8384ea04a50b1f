#include "sigkit/cli.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace sigkit {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    static std::atomic<int> counter{0};
    dir_ = fs::temp_directory_path() / ("sigkit_cli_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::create_directories(dir_);
    ::unsetenv("SIGKIT_SEED");
  }
  void TearDown() override {
    fs::remove_all(dir_);
    ::unsetenv("SIGKIT_SEED");
  }

  std::string file(const std::string& name, const std::string& content) {
    const auto path = (dir_ / name).string();
    std::ofstream(path) << content;
    return path;
  }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    args.insert(args.begin(), "sigkit");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  nlohmann::json json_out() const { return nlohmann::json::parse(out_.str()); }

  fs::path dir_;
  std::ostringstream out_, err_;
};

std::string scores_tsv(std::size_t n, double shift) {
  std::string s = "id\tscore_a\tscore_b\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double b = static_cast<double>((i * 37) % 11) / 10.0;
    const double a = b + shift + static_cast<double>((i * 13) % 7 - 3) / 20.0;
    s += "s" + std::to_string(i) + "\t" + std::to_string(a) + "\t" + std::to_string(b) + "\n";
  }
  return s;
}

TEST_F(Cli, McNemarOnCorrectness) {
  std::string tsv = "id\ta\tb\n";
  const int n10 = 2, n01 = 8;
  for (int i = 0; i < n10; ++i) tsv += "x" + std::to_string(i) + "\t1\t0\n";
  for (int i = 0; i < n01; ++i) tsv += "y" + std::to_string(i) + "\t0\t1\n";
  tsv += "z\t1\t1\n";
  const auto path = file("c.tsv", tsv);
  ASSERT_EQ(run({"run", "--test", "mcnemar", "--form", "correctness", "--input", path}), 0) << err_.str();
  const auto j = json_out();
  EXPECT_EQ(j["test"], "mcnemar");
  EXPECT_EQ(j["p_value"].get<double>(), 0.109375);
  EXPECT_EQ(j["n"], 11);
  EXPECT_EQ(j["reject"], false);
  EXPECT_TRUE(j["resamples"].is_null());
}

TEST_F(Cli, RecallCountsAuto) {
  std::string tsv = "id\ttp_a\tfp_a\tfn_a\ttp_b\tfp_b\tfn_b\n";
  for (int i = 0; i < 40; ++i) {
    const int gold = 2 + i % 4;
    const int tpa = (i * 7) % (gold + 1), tpb = (i * 5 + 1) % (gold + 1);
    tsv += "e" + std::to_string(i) + "\t" + std::to_string(tpa) + "\t1\t" + std::to_string(gold - tpa) + "\t" +
           std::to_string(tpb) + "\t2\t" + std::to_string(gold - tpb) + "\n";
  }
  const auto path = file("k.tsv", tsv);
  ASSERT_EQ(run({"run", "--measure", "recall", "--form", "counts", "--combiner", "recall", "--input", path, "--alpha",
                 "0.05", "--auto", "--resamples", "500"}),
            0)
      << err_.str();
  const auto j = json_out();
  EXPECT_EQ(j["measure"], "recall");
  EXPECT_FALSE(j["basis"].is_null());
  EXPECT_FALSE(j["normality"].is_null());
  const std::string basis = j["basis"];
  EXPECT_EQ(j["test"] == "paired_t", basis == "table_parametric_ok");
}

TEST_F(Cli, IngestionMismatchIsUsageError) {
  const auto path = file("s.tsv", scores_tsv(10, 0.1));
  EXPECT_EQ(run({"run", "--test", "mcnemar", "--form", "scores", "--input", path}), 1);
  EXPECT_NE(err_.str().find("error:"), std::string::npos);
  EXPECT_EQ(run({"run", "--test", "paired_t", "--auto", "--measure", "accuracy", "--input", path}), 1);
  EXPECT_EQ(run({"run", "--test", "nonsense", "--form", "scores", "--input", path}), 1);
  EXPECT_EQ(run({"run", "--test", "paired_t", "--form", "scores"}), 1);  // --input missing
  EXPECT_EQ(run({"frobnicate"}), 1);
  EXPECT_EQ(run({}), 1);
}

TEST_F(Cli, IdenticalSystemsDegeneracyContracts) {
  std::string tsv = "id\ta\tb\n";
  for (int i = 0; i < 30; ++i) tsv += "r" + std::to_string(i) + "\t" + std::to_string(i % 5) + "\t" +
                                      std::to_string(i % 5) + "\n";
  const auto path = file("same.tsv", tsv);
  EXPECT_EQ(run({"run", "--test", "paired_t", "--form", "scores", "--input", path}), 3);
  EXPECT_NE(err_.str().find("degenerate"), std::string::npos);
  ASSERT_EQ(run({"run", "--test", "permutation", "--form", "scores", "--input", path, "--resamples", "1000"}), 0);
  EXPECT_EQ(json_out()["p_value"].get<double>(), 1.0);
}

TEST_F(Cli, DataErrors) {
  const auto bad = file("bad.tsv", "id\ta\tb\nx\t1\t2\ny\t3\n");
  EXPECT_EQ(run({"run", "--test", "paired_t", "--form", "scores", "--input", bad}), 2);
  EXPECT_NE(err_.str().find(":3:"), std::string::npos);
  EXPECT_EQ(run({"run", "--test", "paired_t", "--form", "scores", "--input", (dir_ / "missing.tsv").string()}), 2);
  const auto empty = file("empty.tsv", "");
  EXPECT_EQ(run({"run", "--test", "paired_t", "--form", "scores", "--input", empty}), 2);
  const auto nonbinary = file("nb.tsv", "id\ta\tb\nx\t1\t2\n");
  EXPECT_EQ(run({"run", "--test", "mcnemar", "--form", "correctness", "--input", nonbinary}), 2);
}

TEST_F(Cli, SeedFlagAndEnvironment) {
  const auto path = file("s.tsv", scores_tsv(60, 0.02));
  const std::vector<std::string> base{"run", "--test", "bootstrap", "--form", "scores", "--input", path,
                                      "--resamples", "2000"};
  auto with_seed = base;
  with_seed.insert(with_seed.end(), {"--seed", "42"});
  ASSERT_EQ(run(with_seed), 0);
  const auto flagged = json_out();
  EXPECT_EQ(flagged["seed"], 42);

  ::setenv("SIGKIT_SEED", "42", 1);
  ASSERT_EQ(run(base), 0);
  EXPECT_EQ(json_out(), flagged);

  ::setenv("SIGKIT_SEED", "7", 1);
  ASSERT_EQ(run(with_seed), 0);
  EXPECT_EQ(json_out(), flagged);  // the flag wins

  ::setenv("SIGKIT_SEED", "seven", 1);
  EXPECT_EQ(run(base), 1);
  ::unsetenv("SIGKIT_SEED");
  ASSERT_EQ(run(base), 0);
  EXPECT_EQ(json_out()["seed"], kDefaultSeed);
}

TEST_F(Cli, ReportsAreStableAcrossRuns) {
  const auto path = file("s.tsv", scores_tsv(40, 0.1));
  ASSERT_EQ(run({"run", "--measure", "accuracy", "--auto", "--input", path, "--seed", "3", "--resamples", "1000"}), 0);
  const std::string first = out_.str();
  ASSERT_EQ(run({"run", "--measure", "accuracy", "--auto", "--input", path, "--seed", "3", "--resamples", "1000"}), 0);
  EXPECT_EQ(out_.str(), first);
  const auto j = nlohmann::json::parse(first);
  const auto notes = j["notes"].get<std::vector<std::string>>();
  EXPECT_TRUE(std::any_of(notes.begin(), notes.end(),
                          [](const std::string& n) { return n.rfind("input_checksum=fnv1a64:", 0) == 0; }));
  EXPECT_EQ(parse_report(first), parse_report(render_report(parse_report(first), ReportFormat::json)));
}

TEST_F(Cli, WilcoxonNotesZerosDropped) {
  const auto path = file("w.tsv", "id\ta\tb\n1\t1\t1\n2\t2\t0.5\n3\t0\t1.25\n4\t3\t0\n5\t0.5\t0.5\n6\t4\t0\n");
  ASSERT_EQ(run({"run", "--test", "wilcoxon", "--form", "scores", "--input", path}), 0);
  const auto notes = json_out()["notes"].get<std::vector<std::string>>();
  EXPECT_NE(std::find(notes.begin(), notes.end(), "zeros_dropped=2"), notes.end());
}

TEST_F(Cli, CorrelationInputs) {
  std::string gold = "id\tgold\n", pa = "id\tpred\n", pb = "id\tpred\n";
  for (int i = 0; i < 40; ++i) {
    const double g = static_cast<double>((i * 17) % 40);
    gold += "w" + std::to_string(i) + "\t" + std::to_string(g) + "\n";
    pa += "w" + std::to_string(i) + "\t" + std::to_string(g + (i % 3)) + "\n";
    pb += "w" + std::to_string(i) + "\t" + std::to_string((i * 7) % 13) + "\n";
  }
  const auto g = file("gold.tsv", gold), a = file("a.tsv", pa), b = file("b.tsv", pb);
  ASSERT_EQ(run({"run", "--measure", "spearman", "--auto", "--input", a, "--gold", g}), 0) << err_.str();
  EXPECT_EQ(json_out()["test"], "correlation_z");
  EXPECT_EQ(json_out()["basis"], "table_parametric_ok");
  ASSERT_EQ(run({"run", "--measure", "pearson", "--auto", "--input", a, "--input-b", b, "--gold", g, "--resamples",
                 "500"}),
            0)
      << err_.str();
  EXPECT_EQ(json_out()["test"], "correlation_bootstrap");
  EXPECT_LT(json_out()["p_value"].get<double>(), 0.05);
  EXPECT_EQ(run({"run", "--measure", "pearson", "--auto", "--input", a}), 1);  // no gold
}

TEST_F(Cli, TextFormat) {
  const auto path = file("s.tsv", scores_tsv(20, 0.3));
  ASSERT_EQ(run({"run", "--test", "paired_t", "--form", "scores", "--input", path, "--format", "text"}), 0);
  EXPECT_NE(out_.str().find("paired_t"), std::string::npos);
  EXPECT_NE(out_.str().find("p-value"), std::string::npos);
}

TEST_F(Cli, RecommendCommand) {
  ASSERT_EQ(run({"recommend", "--measure", "precision"}), 0);
  auto j = json_out();
  EXPECT_EQ(j["test"], "permutation");
  EXPECT_EQ(j["basis"], "no_parametric_exists");
  EXPECT_TRUE(j["parametric"].is_null());

  ASSERT_EQ(run({"recommend", "--measure", "perplexity"}), 0);
  EXPECT_EQ(json_out()["test"], "wilcoxon");

  const auto path = file("s.tsv", scores_tsv(10, 0.3));
  ASSERT_EQ(run({"recommend", "--measure", "accuracy", "--input", path}), 0);
  EXPECT_EQ(json_out()["basis"], "insufficient_data_for_normality");

  EXPECT_EQ(run({"recommend", "--measure", "accuracy"}), 1);
  EXPECT_EQ(run({"recommend", "--measure", "unknown"}), 1);

  ASSERT_EQ(run({"recommend", "--list"}), 0);
  EXPECT_EQ(json_out().size(), 19u);
}

TEST_F(Cli, ValidateCommand) {
  ASSERT_EQ(run({"validate", "--test", "paired_t", "--test", "wilcoxon_approx", "--generator", "paired_normal",
                 "--trials", "1000", "--n", "30", "--seed", "1"}),
            0)
      << err_.str();
  std::istringstream lines(out_.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "test,generator,n,alpha,rate,ci_low,ci_high");
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("paired_t,paired_normal,30,0.05,", 0), 0u);
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("wilcoxon_approx,paired_normal,30,0.05,", 0), 0u);

  EXPECT_EQ(run({"validate", "--test", "paired_t", "--trials", "1000"}), 1);
  EXPECT_EQ(run({"validate", "--test", "paired_t", "--generator", "paired_normal", "--trials", "10"}), 1);
  EXPECT_EQ(run({"validate", "--test", "mcnemar", "--generator", "paired_normal", "--trials", "1000"}), 1);
}

TEST_F(Cli, HelpAndVersion) {
  EXPECT_EQ(run({"--help"}), 0);
  EXPECT_NE(out_.str().find("run"), std::string::npos);
  EXPECT_EQ(run({"--version"}), 0);
  EXPECT_EQ(out_.str(), std::string(kVersion) + "\n");
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(ErrorKind::invalid_argument), 1);
  EXPECT_EQ(exit_code_for(ErrorKind::data_error), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::empty_sample), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::degenerate_sample), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::insufficient_data), 3);
}

TEST(Combiners, Parse) {
  EXPECT_EQ(parse_combiner("f1"), Combiner::f_beta(1.0));
  EXPECT_EQ(parse_combiner("fbeta:0.5"), Combiner::f_beta(0.5));
  EXPECT_EQ(parse_combiner("ratio:0:1:2"), Combiner::ratio(0, 1, 2));
  EXPECT_THROW(parse_combiner("ratio:0:1"), Error);
  EXPECT_THROW(parse_combiner("fbeta:x"), Error);
  EXPECT_THROW(parse_combiner("median"), Error);
}

TEST(RecallHitDeltas, RequiresSharedGold) {
  const SufficientStats ok({{2, 0, 1}, {0, 1, 3}}, {{1, 1, 2}, {2, 0, 1}}, Combiner::recall());
  EXPECT_EQ(recall_hit_deltas(ok), (std::vector<double>{1.0, -2.0}));
  const SufficientStats bad({{2, 0, 1}}, {{1, 1, 1}}, Combiner::recall());
  EXPECT_THROW(recall_hit_deltas(bad), Error);
}

}  // namespace
}  // namespace sigkit
