#include <gtest/gtest.h>

#include <filesystem>

#include "rulerec/cli.hpp"
#include "rulerec/csv_io.hpp"
#include "rulerec/eval.hpp"
#include "rulerec/format.hpp"
#include "rulerec/synth.hpp"
#include "rulerec/transform.hpp"
#include "rulerec/tree.hpp"

using namespace rulerec;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rulerec_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(std::vector<std::string> args) {
    for (auto& a : args) {
      if (a.rfind("@", 0) == 0) a = path(a.substr(1));
    }
    return cli::run(args);
  }

  // Runs and captures stderr.
  int run_err(std::vector<std::string> args, std::string& err) {
    ::testing::internal::CaptureStderr();
    const int code = run(std::move(args));
    err = ::testing::internal::GetCapturedStderr();
    return code;
  }

  std::vector<std::string> lines(const std::string& name) const {
    std::vector<std::string> out;
    std::istringstream in(read_file(path(name)));
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenerateIsDeterministic) {
  ASSERT_EQ(run({"generate", "--n", "1000", "--seed", "0", "--records", "@a.csv", "--truth", "@at.csv"}), 0);
  ASSERT_EQ(run({"generate", "--n", "1000", "--seed", "0", "--records", "@b.csv", "--truth", "@bt.csv"}), 0);
  EXPECT_EQ(read_file(path("a.csv")), read_file(path("b.csv")));
  EXPECT_EQ(read_file(path("at.csv")), read_file(path("bt.csv")));
  EXPECT_EQ(lines("a.csv").size(), 1001u);
}

TEST_F(Cli, TransformRecordsResolvedShift) {
  write_file(path("p.csv"), "p0,p1,p2\n1,0.8,0.5\n0.4,0.4,0.4\n");
  write_file(path("x.csv"), "f0\n0.1\n0.9\n");
  ASSERT_EQ(run({"transform", "--mode", "proposed", "--k", "10", "--l", "auto", "--probs", "@p.csv",
                 "--features", "@x.csv", "--out", "@w.csv"}),
            0);
  const auto text = lines("w.csv");
  ASSERT_FALSE(text.empty());
  const std::string head = text[0];
  ASSERT_EQ(head.rfind("# mode=proposed k=10 l=", 0), 0u) << head;
  const auto start = head.find("l=") + 2;
  double l = 0;
  ASSERT_TRUE(parse_double(head.substr(start, head.find(' ', start) - start), l));
  EXPECT_NEAR(l, 3.0, 1e-12);
  EXPECT_EQ(text.size(), 3u + 6u);
}

TEST_F(Cli, PipelineMatchesLibraryCalls) {
  ASSERT_EQ(run({"generate", "--n", "2000", "--seed", "3", "--records", "@r.csv", "--truth", "@t.csv"}), 0);
  ASSERT_EQ(run({"transform", "--probs", "@t.csv", "--features", "@r.csv", "--k", "5", "--out", "@w.csv"}), 0);
  ASSERT_EQ(run({"train", "--weighted", "@w.csv", "--leaves", "6", "--out", "@tree.json"}), 0);
  ASSERT_EQ(run({"rules", "--tree", "@tree.json", "--out", "@rules.txt"}), 0);
  ASSERT_EQ(run({"evaluate", "--tree", "@tree.json", "--probs", "@t.csv", "--features", "@r.csv", "--out",
                 "@eval.txt"}),
            0);

  SynthConfig sc;
  sc.n_samples = 2000;
  sc.seed = 3;
  const auto data = generate(sc);
  const auto x = features_of(data.records);
  TransformConfig cfg;
  cfg.k_scale = 5;
  const auto t = transform_proposed(x, data.truth, cfg);
  EXPECT_EQ(weighted_from_csv(read_csv(path("w.csv"))), t.samples);
  const auto tree = train(t.samples, {6, 0.0});
  EXPECT_EQ(read_file(path("tree.json")), tree.to_json());
  EXPECT_EQ(lines("rules.txt"), extract_rules(tree));
  EXPECT_EQ(lines("rules.txt").size(), 6u);
  const Bounds b = bounds(data.truth);
  EXPECT_EQ(lines("eval.txt"),
            (std::vector<std::string>{
                "conversion_rate=" + format_double(conversion_rate(tree.as_classifier(), data.truth, x)),
                "lower=" + format_double(b.lower), "upper=" + format_double(b.upper)}));
}

TEST_F(Cli, OracleEstimateReproducesProbabilitiesBitwise) {
  ASSERT_EQ(run({"generate", "--n", "500", "--records", "@r.csv", "--truth", "@t.csv"}), 0);
  ASSERT_EQ(run({"estimate", "--oracle", "@t.csv", "--records", "@r.csv", "--model", "@m.json", "--probs",
                 "@p.csv"}),
            0);
  EXPECT_EQ(read_file(path("p.csv")), read_file(path("t.csv")));
  EXPECT_NE(read_file(path("m.json")).find("oracle"), std::string::npos);
}

TEST_F(Cli, EstimateFitsLogisticModels) {
  ASSERT_EQ(run({"generate", "--n", "2000", "--actions", "3", "--records", "@r.csv", "--truth", "@t.csv"}), 0);
  ASSERT_EQ(run({"estimate", "--records", "@r.csv", "--model", "@m.json", "--probs", "@p.csv"}), 0);
  const auto probs = table_from_csv(read_csv(path("p.csv")));
  EXPECT_EQ(probs.rows(), 2000u);
  EXPECT_EQ(probs.actions(), 3u);
}

TEST_F(Cli, BenchmarkAndNaiveModes) {
  ASSERT_EQ(run({"generate", "--n", "300", "--records", "@r.csv", "--truth", "@t.csv"}), 0);
  ASSERT_EQ(run({"transform", "--mode", "benchmark", "--probs", "@t.csv", "--records", "@r.csv", "--out",
                 "@b.csv"}),
            0);
  EXPECT_EQ(weighted_from_csv(read_csv(path("b.csv"))).size(), 300u);
  ASSERT_EQ(run({"transform", "--mode", "naive", "--records", "@r.csv", "--out", "@n.csv"}), 0);
  std::size_t converted = 0;
  for (const auto& r : records_from_csv(read_csv(path("r.csv")), nullptr)) converted += r.outcome;
  EXPECT_EQ(weighted_from_csv(read_csv(path("n.csv"))).size(), converted);
}

TEST_F(Cli, VerifyReportsPass) {
  ASSERT_EQ(run({"generate", "--n", "500", "--records", "@r.csv", "--truth", "@t.csv"}), 0);
  ASSERT_EQ(run({"verify", "--probs", "@t.csv", "--features", "@r.csv", "--trials", "5", "--out", "@v.txt"}), 0);
  EXPECT_EQ(lines("v.txt").back(), "result=PASS");
}

TEST_F(Cli, ExperimentsWriteCurves) {
  ASSERT_EQ(run({"exp-rules", "--n", "1500", "--rules", "1,4", "--out", "@r.csv"}), 0);
  const auto r = read_csv(path("r.csv"));
  EXPECT_EQ(r.header, (std::vector<std::string>{"x", "proposed", "benchmark", "upper", "lower"}));
  EXPECT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.comments.front().rfind("seed=0 digest=", 0), 0u);
  ASSERT_EQ(run({"exp-alpha", "--n", "1500", "--alphas", "0,1", "--leaves", "4", "--out", "@a.csv"}), 0);
  EXPECT_EQ(read_csv(path("a.csv")).rows.size(), 2u);
}

TEST_F(Cli, UsageErrorsExitOne) {
  std::string err;
  EXPECT_EQ(run_err({}, err), 1);
  EXPECT_NE(err.find("Usage"), std::string::npos);
  EXPECT_EQ(run_err({"frobnicate"}, err), 1);
  EXPECT_EQ(run_err({"train", "--out", "@t.json"}, err), 1);
  EXPECT_EQ(run_err({"train", "--weighted", "@missing.csv", "--out", "@t.json"}, err), 1);
  EXPECT_EQ(run_err({"generate", "--records", "@nodir/r.csv", "--truth", "@t.csv"}, err), 1);
  EXPECT_FALSE(fs::exists(path("t.csv")));
  EXPECT_EQ(run_err({"transform", "--mode", "sideways", "--out", "@w.csv"}, err), 1);
  write_file(path("p.csv"), "p0,p1\n0.1,0.2\n");
  write_file(path("x.csv"), "f0\n0\n");
  EXPECT_EQ(run_err({"transform", "--probs", "@p.csv", "--features", "@x.csv", "--k", "ten", "--out", "@w.csv"},
                    err),
            1);
  EXPECT_NE(err.find("--k"), std::string::npos) << err;
  EXPECT_FALSE(fs::exists(path("w.csv")));
}

TEST_F(Cli, DataErrorsExitTwoAndNameTheCell) {
  write_file(path("p.csv"), "p0,p1\n0.1,0.2\n0.5,abc\n");
  write_file(path("x.csv"), "f0\n0\n1\n");
  std::string err;
  EXPECT_EQ(run_err({"transform", "--probs", "@p.csv", "--features", "@x.csv", "--out", "@w.csv"}, err), 2);
  EXPECT_NE(err.find(path("p.csv") + ": line 3, column 'p1'"), std::string::npos) << err;

  write_file(path("w.csv"), "f0,action,weight\n0.1,0,1\n0.2,1,-1\n");
  EXPECT_EQ(run_err({"train", "--weighted", "@w.csv", "--out", "@t.json"}, err), 2);
  EXPECT_NE(err.find("line 3, column 'weight'"), std::string::npos) << err;

  write_file(path("bad.json"), "{\"dim\": 1, \"actions\": 2, \"tree\": {");
  EXPECT_EQ(run_err({"rules", "--tree", "@bad.json"}, err), 2);
}

TEST_F(Cli, OutputsDoNotDependOnThreads) {
  for (const char* t : {"1", "4"}) {
    const std::string s(t);
    ASSERT_EQ(run({"generate", "--n", "2000", "--threads", s, "--records", "@r" + s + ".csv", "--truth",
                   "@t" + s + ".csv"}),
              0);
    ASSERT_EQ(run({"estimate", "--threads", s, "--records", "@r" + s + ".csv", "--model", "@m" + s + ".json",
                   "--probs", "@p" + s + ".csv", "--max-iters", "300"}),
              0);
  }
  for (const char* f : {"r", "t", "p"}) {
    EXPECT_EQ(read_file(path(std::string(f) + "1.csv")), read_file(path(std::string(f) + "4.csv")));
  }
  EXPECT_EQ(read_file(path("m1.json")), read_file(path("m4.json")));
}
